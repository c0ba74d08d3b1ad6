"""Laws with a point mass at zero plus a histogram-discretized continuous part.

Used for a single overlap fraction and for the sum of many of them. The
continuous part lives on ``(0, support_max]`` split into equal-width bins;
``mass[i]`` is the probability of ``(i*w, (i+1)*w]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .geometry import ResourceGrid, cdf_overlap

DEFAULT_BINS_PER_UNIT = 1024
MAX_BINS = 2**22
MASS_TOL = 1e-9


class ResolutionOverflow(ValueError):
    """Result would exceed the configured bin cap."""


@dataclass(frozen=True, eq=False)
class MixedDistribution:
    atom0: float
    support_max: float
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        if mass.ndim != 1 or mass.size == 0:
            raise ValueError("mass must be a non-empty 1-D array")
        if np.any(mass < 0) or self.atom0 < 0:
            raise ValueError("masses must be nonnegative")
        if abs(self.atom0 + mass.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {self.atom0 + mass.sum():.12g} != 1")

    @property
    def bins(self) -> int:
        return self.mass.size

    @property
    def width(self) -> float:
        return self.support_max / self.bins

    @property
    def edges(self) -> np.ndarray:
        """Upper bin edges."""
        return self.width * np.arange(1, self.bins + 1)

    def cdf(self, x):
        """``Pr[value <= x]`` with linear interpolation inside a bin."""
        x = np.asarray(x, dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(self.mass)))
        pos = np.clip(x / self.width, 0.0, self.bins)
        i = np.minimum(pos.astype(int), self.bins - 1)
        frac = pos - i
        cont = cum[i] + frac * self.mass[i]
        p = np.where(x < 0, 0.0, np.minimum(self.atom0 + cont, 1.0))
        return p if p.ndim else float(p)

    def density(self) -> np.ndarray:
        """Per-bin density of the continuous part."""
        return self.mass / self.width

    def to_csv(self) -> str:
        """Two columns: bin upper edge and cumulative probability.

        The header names the second column ``cdf;atom0=<value>`` and the first
        data row is the atom itself at ``x = 0``.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["x", f"cdf;atom0={self.atom0!r}"])
        w.writerow([repr(0.0), repr(self.atom0)])
        cum = self.atom0 + np.cumsum(self.mass)
        for e, c in zip(self.edges, cum):
            w.writerow([repr(float(e)), repr(float(c))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MixedDistribution":
        rows = list(csv.reader(io.StringIO(text, newline="")))
        head = rows[0]
        if len(head) != 2 or not head[1].startswith("cdf;atom0="):
            raise ValueError("missing atom0 header")
        atom0 = float(head[1].split("=", 1)[1])
        edges = np.array([float(r[0]) for r in rows[2:]])
        cum = np.array([float(r[1]) for r in rows[1:]])
        mass = np.maximum(np.diff(cum), 0.0)
        mass *= (1.0 - atom0) / mass.sum() if mass.sum() > 0 else 0.0
        return cls(atom0=atom0, support_max=float(edges[-1]), mass=mass)


@dataclass(frozen=True)
class ConvolutionPlan:
    copies: int
    bins_per_unit: int = DEFAULT_BINS_PER_UNIT
    max_bins: int = MAX_BINS

    def __post_init__(self):
        if self.copies < 1:
            raise ValueError("copies must be >= 1")


def point_mass_at_zero(bins: int = 16, support_max: float = 1.0) -> MixedDistribution:
    return MixedDistribution(1.0, support_max, np.zeros(bins))


def from_overlap_law(grid: ResourceGrid, bins: int = DEFAULT_BINS_PER_UNIT) -> MixedDistribution:
    """Discretize the overlap-fraction law of ``grid`` on ``(0, 1]``."""
    if bins < 16:
        raise ValueError("need at least 16 bins")
    edges = np.linspace(0.0, 1.0, bins + 1)
    cdf = np.empty(bins + 1)
    cdf[:-1] = cdf_overlap(edges[:-1], grid)
    cdf[-1] = 1.0
    mass = np.maximum(np.diff(cdf), 0.0)
    atom0 = float(cdf[0])
    mass *= (1.0 - atom0) / mass.sum() if mass.sum() > 0 else 0.0
    return MixedDistribution(atom0, 1.0, mass)


def _refine(d: MixedDistribution, factor: int) -> np.ndarray:
    return np.repeat(d.mass / factor, factor)


def coarsen(d: MixedDistribution, factor: int = 2) -> MixedDistribution:
    """Merge groups of ``factor`` adjacent bins (pads the top with empty bins)."""
    pad = (-d.bins) % factor
    m = np.concatenate((d.mass, np.zeros(pad)))
    merged = m.reshape(-1, factor).sum(axis=1)
    return MixedDistribution(d.atom0, d.width * merged.size * factor, merged)


def _common_width(a: MixedDistribution, b: MixedDistribution):
    wa, wb = a.width, b.width
    if np.isclose(wa, wb, rtol=1e-12, atol=0):
        return a.mass, b.mass, wa
    ratio = max(wa, wb) / min(wa, wb)
    k = int(round(ratio))
    if not np.isclose(ratio, k, rtol=1e-9):
        raise ValueError("bin widths have no common integer refinement")
    if wa > wb:
        return _refine(a, k), b.mass, wb
    return a.mass, _refine(b, k), wa


def _convolve_masses(ma: np.ndarray, mb: np.ndarray) -> np.ndarray:
    # centers (i+1/2)w + (j+1/2)w land on the edge shared by bins i+j and i+j+1
    full = signal.fftconvolve(ma, mb) if min(ma.size, mb.size) > 64 else np.convolve(ma, mb)
    full = np.maximum(full, 0.0)
    out = np.zeros(ma.size + mb.size)
    out[:-1] += 0.5 * full
    out[1:] += 0.5 * full
    return out


def convolve(a: MixedDistribution, b: MixedDistribution, max_bins: int = MAX_BINS) -> MixedDistribution:
    """Law of the sum of independent draws from ``a`` and ``b``."""
    ma, mb, w = _common_width(a, b)
    n = ma.size + mb.size
    if n > max_bins:
        raise ResolutionOverflow(f"{n} bins exceeds cap {max_bins}; coarsen inputs")
    out = _convolve_masses(ma, mb)
    out[: mb.size] += a.atom0 * mb
    out[: ma.size] += b.atom0 * ma
    atom0 = a.atom0 * b.atom0
    total = out.sum()
    if total > 0:
        out *= (1.0 - atom0) / total
    return MixedDistribution(atom0, w * n, out)


def _fit_square(d: MixedDistribution, max_bins: int) -> MixedDistribution:
    while 2 * d.bins > max_bins and d.bins > 1:
        d = coarsen(d)
    return d


def convolve_power(d: MixedDistribution, plan: ConvolutionPlan) -> MixedDistribution:
    """Law of the sum of ``plan.copies`` i.i.d. draws of ``d``.

    Binary exponentiation; inputs are coarsened dyadically whenever a product
    would exceed ``plan.max_bins``. The atom is set to ``d.atom0**copies``
    exactly and the continuous part rescaled to the complement.
    """
    copies = plan.copies
    base = d
    while base.bins / base.support_max > plan.bins_per_unit and base.bins > 1:
        base = coarsen(base)
    result = None
    while True:
        if copies & 1:
            if result is None:
                result = base
            else:
                while result.bins + base.bins > plan.max_bins:
                    if result.width < base.width:
                        result = coarsen(result)
                    else:
                        base = coarsen(base)
                result = _align_and_convolve(result, base, plan.max_bins)
        copies >>= 1
        if not copies:
            break
        base = _fit_square(base, plan.max_bins)
        base = convolve(base, base, plan.max_bins)
    atom0 = d.atom0**plan.copies
    mass = np.array(result.mass)
    s = mass.sum()
    if s > 0:
        mass *= (1.0 - atom0) / s
    return MixedDistribution(atom0, result.support_max, mass)


def _align_and_convolve(a: MixedDistribution, b: MixedDistribution, max_bins: int) -> MixedDistribution:
    # refining the coarser operand could exceed the cap; coarsen the finer one instead
    while not np.isclose(a.width, b.width, rtol=1e-12, atol=0):
        if a.width < b.width:
            a = coarsen(a)
        else:
            b = coarsen(b)
    return convolve(a, b, max_bins)


def ccdf(d: MixedDistribution, x: float) -> float:
    """``Pr[value > x]``."""
    if x < 0:
        return 1.0
    if x >= d.support_max:
        return 0.0
    return float(max(0.0, 1.0 - d.cdf(x)))
