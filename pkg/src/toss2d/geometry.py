"""Overlap geometry of rectangular packets on the time-frequency plane.

Every packet occupies a ``dt x df`` rectangle placed uniformly at random in
``[0, T] x [0, F]``. The overlap between the packet of interest and an
interferer, normalized by the packet area, is the random variable studied
here. A grid with ``df == F`` is the classic (1D) Aloha game.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when a numeric integral fails to converge."""


@dataclass(frozen=True)
class ResourceGrid:
    """Total resource ``[0, T] x [0, F]`` and the packet footprint ``dt x df``."""

    T: float
    F: float
    dt: float
    df: float

    def __post_init__(self):
        if not (self.dt > 0 and self.df > 0):
            raise ValueError("packet duration and bandwidth must be positive")
        if self.T < self.dt or self.F < self.df:
            raise ValueError("packet footprint larger than the resource grid")

    @property
    def n_t(self) -> float:
        return self.T / self.dt

    @property
    def n_f(self) -> float:
        return self.F / self.df

    @property
    def is_1d(self) -> bool:
        return self.df == self.F

    @classmethod
    def from_ratios(cls, n_t: float, n_f: float = 1.0) -> "ResourceGrid":
        """Unit-packet grid with ``T/dt = n_t`` and ``F/df = n_f``."""
        return cls(T=float(n_t), F=float(n_f), dt=1.0, df=1.0)


@dataclass(frozen=True)
class PacketPlacement:
    t: float
    f: float


@dataclass(frozen=True)
class NormalizedOffset:
    tau: float
    phi: float


def sample_placement(grid: ResourceGrid, rng: np.random.Generator) -> PacketPlacement:
    t, f = sample_placements(grid, rng, 1)
    return PacketPlacement(float(t[0]), float(f[0]))


def sample_placements(grid: ResourceGrid, rng: np.random.Generator, n: int):
    """Draw ``n`` independent uniform start times and lowest frequencies."""
    t = rng.uniform(0.0, 1.0, n) * (grid.T - grid.dt)
    f = rng.uniform(0.0, 1.0, n) * (grid.F - grid.df)
    return t, f


def normalized_offset(a: PacketPlacement, b: PacketPlacement, grid: ResourceGrid) -> NormalizedOffset:
    return NormalizedOffset(abs(a.t - b.t) / grid.dt, abs(a.f - b.f) / grid.df)


def overlap_from_offsets(tau, phi):
    """Vectorized overlap fraction ``(1-tau)(1-phi)`` on ``[0,1)^2``, else 0.

    Touching edges (``tau == 1`` or ``phi == 1``) count as disjoint.
    """
    tau = np.asarray(tau, dtype=float)
    phi = np.asarray(phi, dtype=float)
    hit = (tau < 1.0) & (phi < 1.0)
    x = np.where(hit, (1.0 - tau) * (1.0 - phi), 0.0)
    return x if x.ndim else float(x)


def overlap_fraction(a: PacketPlacement, b: PacketPlacement, grid: ResourceGrid) -> float:
    off = normalized_offset(a, b, grid)
    phi = 0.0 if grid.is_1d else off.phi
    return overlap_from_offsets(off.tau, phi)


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x >= 1.0)) or np.any(np.isnan(x)):
        raise ValueError("overlap fraction must lie in [0, 1)")
    return x


def _offset_cdf(u, span):
    """cdf of ``|U1 - U2|`` for U1, U2 i.i.d. uniform on ``[0, span]``."""
    u = np.minimum(np.asarray(u, dtype=float), span)
    return u * (2.0 * span - u) / span**2


def cdf_overlap_1d(x, grid: ResourceGrid):
    """cdf of the overlap fraction in the 1D (time only) game.

    Equals ``1 - (2 N_t - 3 + x)(1 - x) / (N_t - 1)^2`` whenever ``N_t >= 2``;
    for ``1 < N_t < 2`` the time offset never exceeds ``N_t - 1`` and the
    exact triangular law is used instead.
    """
    if grid.n_t <= 1.0:
        raise ValueError("cdf requires N_t > 1")
    x = _check_x(x)
    span = grid.n_t - 1.0
    if span >= 1.0:
        p = 1.0 - (2.0 * grid.n_t - 3.0 + x) * (1.0 - x) / span**2
    else:
        p = 1.0 - _offset_cdf(1.0 - x, span)
    return p if p.ndim else float(p)


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0.0, x, 1.0)
    return np.where(x > 0.0, x * np.log(safe), 0.0)


def _coefficients(n_t: float, n_f: float):
    a = (2.0 * n_t - 3.0) * (2.0 * n_f - 3.0)
    b = 9.0 - 2.0 * n_t - 2.0 * n_f
    c = 2.0 * (n_t - 2.0) * (n_f - 2.0)
    return a, b, c


def _uniform_joint_density(grid: ResourceGrid):
    lt, lf = grid.n_t - 1.0, grid.n_f - 1.0

    def density(u, v):
        if u < 0 or v < 0 or u > lt or v > lf:
            return 0.0
        return 4.0 * (lt - u) * (lf - v) / (lt**2 * lf**2)

    return density


def cdf_overlap_2d(x, grid: ResourceGrid):
    """cdf of the overlap fraction in the 2D time-frequency game.

    ``P(x) = 1 - [(a + b x)(1 - x) + 2 (c + x) x ln x] / [(N_t-1)^2 (N_f-1)^2]``
    with ``a = (2N_t-3)(2N_f-3)``, ``b = 9 - 2N_t - 2N_f``,
    ``c = 2(N_t-2)(N_f-2)``, valid for ``N_t, N_f >= 2``. Narrower grids
    fall back to numeric integration of the exact offset law.
    """
    if grid.n_t <= 1.0 or grid.n_f <= 1.0:
        raise ValueError("2D cdf requires N_t > 1 and N_f > 1")
    x = _check_x(x)
    n_t, n_f = grid.n_t, grid.n_f
    if n_t < 2.0 or n_f < 2.0:
        dens = _uniform_joint_density(grid)
        p = np.vectorize(lambda xi: 1.0 - ccdf_overlap_numeric(xi, dens, grid, check_norm=False))(x)
        return p if p.ndim else float(p)
    a, b, c = _coefficients(n_t, n_f)
    num = (a + b * x) * (1.0 - x) + 2.0 * (c + x) * _xlogx(x)
    p = 1.0 - num / ((n_t - 1.0) ** 2 * (n_f - 1.0) ** 2)
    return p if p.ndim else float(p)


def cdf_overlap(x, grid: ResourceGrid):
    return cdf_overlap_1d(x, grid) if grid.is_1d else cdf_overlap_2d(x, grid)


def pdf_overlap(x, grid: ResourceGrid):
    """Density of the continuous part on ``(0, 1)`` (the atom at 0 excluded)."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise ValueError("density defined on the open interval (0, 1)")
    if grid.is_1d:
        span = grid.n_t - 1.0
        if span <= 0:
            raise ValueError("cdf requires N_t > 1")
        # d/dx of the offset cdf evaluated at 1 - x
        d = np.where(1.0 - x < span, 2.0 * (span - (1.0 - x)) / span**2, 0.0)
        return d if d.ndim else float(d)
    if grid.n_t < 2.0 or grid.n_f < 2.0:
        raise ValueError("closed-form density requires N_t, N_f >= 2")
    a, b, c = _coefficients(grid.n_t, grid.n_f)
    dnum = b * (1.0 - x) - (a + b * x) + 2.0 * ((c + 2.0 * x) * np.log(x) + c + x)
    d = -dnum / ((grid.n_t - 1.0) ** 2 * (grid.n_f - 1.0) ** 2)
    return d if d.ndim else float(d)


def collision_probability(grid: ResourceGrid) -> float:
    """Probability that two independently placed packets overlap."""
    if grid.n_t <= 1.0:
        raise ValueError("collision probability requires N_t > 1")
    p = float(_offset_cdf(1.0, grid.n_t - 1.0))
    if grid.is_1d:
        return p
    if grid.n_f <= 1.0:
        raise ValueError("2D collision probability requires N_f > 1")
    return p * float(_offset_cdf(1.0, grid.n_f - 1.0))


def ccdf_overlap_numeric(
    x: float,
    joint_density: Callable[[float, float], float],
    grid: ResourceGrid,
    rtol: float = 1e-6,
    check_norm: bool = True,
) -> float:
    """``Pr[X > x]`` for an arbitrary law of the normalized offsets.

    Integrates ``joint_density(u, v)`` over ``{(1-u)(1-v) > x}``. In 1D mode
    ``joint_density(u, 0.0)`` must be the density of the time offset alone.
    Raises :class:`QuadratureError` if the adaptive rule does not converge.
    """
    x = float(_check_x(x))
    lt, lf = grid.n_t - 1.0, grid.n_f - 1.0
    if check_norm:
        _check_normalization(joint_density, grid)

    def quad(fn, lo, hi, **kw):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(fn, lo, hi, epsabs=1e-12, epsrel=rtol, limit=200, **kw)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(str(exc)) from exc
        return val

    u_hi = min(1.0 - x, lt)
    if u_hi <= 0.0:
        return 0.0
    if grid.is_1d:
        return quad(lambda u: joint_density(u, 0.0), 0.0, u_hi)

    def inner(u):
        v_hi = min(1.0 - x / (1.0 - u), lf)
        if v_hi <= 0.0:
            return 0.0
        return quad(lambda v: joint_density(u, v), 0.0, v_hi)

    return quad(inner, 0.0, u_hi)


def _check_normalization(joint_density, grid: ResourceGrid, tol: float = 1e-3) -> None:
    lt, lf = grid.n_t - 1.0, grid.n_f - 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if grid.is_1d:
            total, _ = integrate.quad(lambda u: joint_density(u, 0.0), 0.0, lt, limit=200)
        else:
            total, _ = integrate.dblquad(lambda v, u: joint_density(u, v), 0.0, lt, 0.0, lf)
    if not math.isfinite(total) or abs(total - 1.0) > tol:
        warnings.warn(f"joint density integrates to {total:.6g}, expected 1", RuntimeWarning, stacklevel=3)
