"""Outage probability and throughput for random time-frequency access.

Two models are covered. With path loss and Rayleigh fading the outage of the
packet of interest is estimated by Monte Carlo: each trial places the tagged
packet uniformly, draws how many of the ``N - 1`` other packets overlap it,
and accumulates their faded, attenuated, overlap-weighted energy. Under
perfect power control the outage follows from the law of the summed overlap
fractions alone.

Random streams are keyed by ``(seed, stream, chunk)``, never by worker, so a
result does not depend on how chunks are spread over processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .channel import (
    CellGeometry,
    FadingModel,
    LinkBudget,
    PathLossModel,
    fading_from_uniform,
    path_loss,
    radius_from_uniform,
)
from .geometry import ResourceGrid, collision_probability, overlap_from_offsets, sample_placements
from .mixed import MixedDistribution, ccdf
from .tables import CurveTable

DEFAULT_CHUNK = 1 << 15
DEFAULT_QUADRATURE = 64


@dataclass(frozen=True)
class Scenario:
    grid: ResourceGrid
    budget: LinkBudget
    path: PathLossModel
    fading: FadingModel
    cell: CellGeometry
    n_devices: int = 1
    n_rep: int = 1

    def __post_init__(self):
        if self.n_devices < 1 or self.n_rep < 1:
            raise ValueError("need n_devices >= 1 and n_rep >= 1")

    @property
    def period(self) -> float:
        return self.grid.T

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class McConfig:
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1 or self.chunk < 1:
            raise ValueError("workers and chunk must be >= 1")


@dataclass(frozen=True)
class OutageResult:
    op: float
    stderr: float
    trials_used: int


def _check_r0(scn: Scenario, r0) -> np.ndarray:
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    lo, hi = scn.cell.r_min, scn.cell.r_max
    if np.any(r0 < lo * (1 - 1e-12)) or np.any(r0 > hi * (1 + 1e-12)):
        raise ValueError(f"r0 outside the cell [{lo:g}, {hi:g}]")
    return r0


def _offset_window(start, span):
    """Interval of interferer starts overlapping a packet starting at ``start``."""
    lo = np.maximum(start - 1.0, 0.0)
    hi = np.minimum(start + 1.0, span)
    return lo, hi


def _simulate_chunk(scn: Scenario, seed: int, stream: int, index: int, n: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, stream, index]))
    grid = scn.grid
    span_t = grid.n_t - 1.0
    span_f = 0.0 if grid.is_1d else grid.n_f - 1.0

    u0 = rng.random(n) * span_t
    v0 = rng.random(n) * span_f
    lo_t, hi_t = _offset_window(u0, span_t)
    lo_f, hi_f = _offset_window(v0, span_f)
    p_t = (hi_t - lo_t) / span_t if span_t > 0 else np.ones(n)
    p_f = (hi_f - lo_f) / span_f if span_f > 0 else np.ones(n)

    hits = rng.binomial(scn.n_devices - 1, p_t * p_f)
    owner = np.repeat(np.arange(n), hits)
    m = owner.size
    uk = lo_t[owner] + rng.random(m) * (hi_t - lo_t)[owner]
    vk = lo_f[owner] + rng.random(m) * (hi_f - lo_f)[owner]
    x = overlap_from_offsets(np.abs(uk - u0[owner]), np.abs(vk - v0[owner]))
    rk = radius_from_uniform(scn.cell, rng.random(m))
    hk = fading_from_uniform(scn.fading, rng.random(m))
    energy = hk * path_loss(scn.path, rk) * x
    interference = np.bincount(owner, weights=energy, minlength=n)
    collided = np.bincount(owner, weights=(x > 0).astype(float), minlength=n) > 0
    h0 = fading_from_uniform(scn.fading, rng.random(n))
    return h0, interference, collided


@dataclass(frozen=True, eq=False)
class InterferenceSample:
    """Per-trial fading of the tagged packet and received interference.

    ``interference`` is normalized by the transmit energy density, so the
    trial is in outage at ``r0`` iff ``h0 * l(r0) < zeta * (interference + gamma/rho)``.
    """

    scenario: Scenario
    h0: np.ndarray
    interference: np.ndarray
    collided: np.ndarray
    _threshold: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = self.scenario.budget
        with np.errstate(divide="ignore"):
            thr = b.zeta * (self.interference + b.noise_to_tx) / self.h0
        # trial j is in outage at r0 iff l(r0) < thr[j]
        object.__setattr__(self, "_threshold", np.sort(thr))

    @property
    def trials(self) -> int:
        return self.h0.size

    def outage_indicator(self, r0: float) -> np.ndarray:
        b = self.scenario.budget
        g = path_loss(self.scenario.path, r0)
        return self.h0 * g < b.zeta * (self.interference + b.noise_to_tx)

    def single_shot(self, r0, estimator: str = "indicator"):
        """Estimate ``Pr[SINR < zeta]`` at each radius; returns ``(q, stderr)`` arrays."""
        r0 = np.atleast_1d(np.asarray(r0, dtype=float))
        n = self.trials
        g = np.atleast_1d(path_loss(self.scenario.path, r0))
        if estimator == "indicator":
            above = n - np.searchsorted(self._threshold, g, side="right")
            q = above / n
            se = np.sqrt(q * (1.0 - q) / n)
        elif estimator == "conditional":
            # average Pr[h0 < ...] given the interference, exact over h0
            b = self.scenario.budget
            lam = self.scenario.fading.lam
            load = b.zeta * (self.interference + b.noise_to_tx)
            vals = -np.expm1(-lam * np.outer(1.0 / g, load))
            q = vals.mean(axis=1)
            se = vals.std(axis=1, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(q)
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        return q, np.maximum(se, 1.0 / n)

    def aloha_single_shot(self, r0):
        """Same-sample pure Aloha estimate: any overlap or a noise-limited fade."""
        r0 = np.atleast_1d(np.asarray(r0, dtype=float))
        b = self.scenario.budget
        out = []
        for r in r0:
            fade = self.h0 * path_loss(self.scenario.path, r) < b.zeta * b.noise_to_tx
            out.append(np.mean(self.collided | fade))
        return np.asarray(out)


def simulate(scn: Scenario, mc: McConfig, stream: int = 0) -> InterferenceSample:
    """Run ``mc.trials`` independent trials of the tagged packet's surroundings."""
    sizes = [mc.chunk] * (mc.trials // mc.chunk)
    if mc.trials % mc.chunk:
        sizes.append(mc.trials % mc.chunk)
    jobs = [(scn, mc.seed, stream, i, n) for i, n in enumerate(sizes)]
    if mc.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            parts = list(pool.map(_simulate_chunk, *zip(*jobs)))
    else:
        parts = [_simulate_chunk(*job) for job in jobs]
    h0, interference, collided = (np.concatenate(p) for p in zip(*parts))
    return InterferenceSample(scn, h0, interference, collided)


def _repeat(q, se, n_rep: int):
    op = q**n_rep
    dse = n_rep * q ** (n_rep - 1) * se if n_rep > 1 else se
    return op, dse


def op_at_r0(scn: Scenario, r0: float, mc: McConfig, sample: InterferenceSample | None = None,
             estimator: str = "indicator") -> OutageResult:
    """Outage with capture at distance ``r0``, raised to the repetition count."""
    _check_r0(scn, r0)
    sample = sample if sample is not None else simulate(scn, mc)
    q, se = sample.single_shot(r0, estimator)
    op, dse = _repeat(q[0], se[0], scn.n_rep)
    return OutageResult(float(op), float(max(dse, 1.0 / sample.trials)), sample.trials)


def any_collision_probability(scn: Scenario) -> float:
    """``Pr[X_sum != 0]`` for ``N - 1`` independent interferers."""
    if scn.n_devices == 1:
        return 0.0
    pc = collision_probability(scn.grid)
    return -math.expm1((scn.n_devices - 1) * math.log1p(-pc)) if pc < 1 else 1.0


def aloha_single_shot(scn: Scenario, r0) -> np.ndarray:
    r0 = _check_r0(scn, r0)
    p_any = any_collision_probability(scn)
    fade = -np.expm1(-scn.fading.lam * (r0 / scn.cell.r_max) ** scn.path.beta)
    return p_any + (1.0 - p_any) * fade


def op_aloha_at_r0(scn: Scenario, r0: float, mc: McConfig | None = None) -> OutageResult:
    """Pure Aloha outage: any overlap is fatal. Analytic; ``mc`` is ignored."""
    q = float(aloha_single_shot(scn, r0)[0])
    trials = mc.trials if mc is not None else 0
    return OutageResult(q**scn.n_rep, 0.0, trials)


def quadrature_nodes(cell: CellGeometry, n: int = DEFAULT_QUADRATURE):
    """Radii and weights integrating against the area-uniform radius density."""
    if n < 8:
        raise ValueError("need at least 8 quadrature nodes")
    s, w = np.polynomial.legendre.leggauss(n)
    lo, hi = cell.r_min**2, cell.r_max**2
    area = 0.5 * (hi - lo) * (s + 1.0) + lo
    return np.sqrt(area), 0.5 * w


def global_op(scn: Scenario, per_r0_op: Callable[[np.ndarray], np.ndarray],
              quadrature: int = DEFAULT_QUADRATURE) -> float:
    """Average ``per_r0_op`` over the cell; it receives an array of radii."""
    r, w = quadrature_nodes(scn.cell, quadrature)
    vals = np.asarray(per_r0_op(r), dtype=float)
    if vals.shape != r.shape:
        vals = np.array([float(per_r0_op(ri)) for ri in r])
    return float(np.dot(w, vals))


def global_op_mc(scn: Scenario, sample: InterferenceSample, n_rep: int | None = None,
                 quadrature: int = DEFAULT_QUADRATURE, estimator: str = "indicator") -> OutageResult:
    """Cell-averaged capture outage from one sample shared by all radii.

    The standard error is the delta-method propagation through ``q**n_rep``
    of the per-trial quadrature sum.
    """
    n_rep = scn.n_rep if n_rep is None else n_rep
    r, w = quadrature_nodes(scn.cell, quadrature)
    q, _ = sample.single_shot(r, estimator)
    op = float(np.dot(w, q**n_rep))
    grad = w * n_rep * q ** (n_rep - 1)
    n = sample.trials
    if estimator == "indicator":
        # per-trial z_j = sum of grad over the radii where trial j is in outage
        g = np.atleast_1d(path_loss(scn.path, r))
        order = np.argsort(g)
        cum = np.concatenate(([0.0], np.cumsum(grad[order])))
        k = np.searchsorted(g[order], sample._threshold, side="left")
        z = cum[k]
    else:
        b = scn.budget
        load = b.zeta * (sample.interference + b.noise_to_tx)
        g = np.atleast_1d(path_loss(scn.path, r))
        z = grad @ -np.expm1(-scn.fading.lam * np.outer(1.0 / g, load))
    se = z.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return OutageResult(op, float(max(se, 1.0 / n)), n)


def global_op_aloha(scn: Scenario, n_rep: int | None = None, quadrature: int = DEFAULT_QUADRATURE) -> float:
    n_rep = scn.n_rep if n_rep is None else n_rep
    return global_op(scn, lambda r: aloha_single_shot(scn, r) ** n_rep, quadrature)


def throughput(scn: Scenario, global_op: float) -> float:
    """Non-repeated packets delivered per second."""
    return scn.n_devices * (1.0 - global_op) / (scn.period * scn.n_rep)


def edge_snr(scn: Scenario) -> float:
    """Noise-limited SNR of a packet received at the cell-edge power level."""
    return scn.budget.snr_1m * path_loss(scn.path, scn.cell.r_max)


def op_power_control(scn: Scenario, xsum_law: MixedDistribution | None,
                     theta: float | None = None) -> float:
    """Outage when every packet arrives with the same energy density.

    ``theta`` is the tolerated aggregate overlap ``1/zeta - 1/SNR``; by default
    the SNR is that of the cell edge, which gives ``theta = 0``. At zero the
    event is read as strictly positive overlap.
    """
    if theta is None:
        theta = 1.0 / scn.budget.zeta - 1.0 / edge_snr(scn)
        if abs(theta) <= 1e-9 / scn.budget.zeta:
            theta = 0.0
    if theta < 0.0:
        return 1.0
    if scn.n_devices == 1:
        return 0.0
    if xsum_law is None:
        raise ValueError("aggregate overlap law required for N > 1")
    if theta >= xsum_law.support_max:
        return 0.0
    return ccdf(xsum_law, theta) ** scn.n_rep


def sample_overlap_sum(grid: ResourceGrid, copies: int, trials: int, rng: np.random.Generator,
                       batch: int = 1 << 18) -> np.ndarray:
    """Direct simulation of the summed overlap of ``copies`` interferers.

    Every trial places the tagged packet and all interferers afresh, border
    effects included.
    """
    out = np.empty(trials)
    for start in range(0, trials, batch):
        n = min(batch, trials - start)
        t0, f0 = sample_placements(grid, rng, n)
        acc = np.zeros(n)
        for _ in range(copies):
            tk, fk = sample_placements(grid, rng, n)
            tau = np.abs(tk - t0) / grid.dt
            phi = np.zeros(n) if grid.is_1d else np.abs(fk - f0) / grid.df
            acc += overlap_from_offsets(tau, phi)
        out[start:start + n] = acc
    return out


def sweep(template: Scenario, vary: str, values: Sequence, mc: McConfig,
          n_reps: Sequence[int] = (1,), r0: float | None = None,
          quadrature: int = DEFAULT_QUADRATURE, estimator: str = "indicator") -> CurveTable:
    """Evaluate the fading/path-loss model along one axis.

    ``vary`` is ``"n"`` (device count), ``"r0"`` (distance of the packet of
    interest) or ``"n_rep"``. One row per (axis value, repetition count).
    Points that raise are kept as rows with empty cells.
    """
    values = list(values)
    if not values or not all(np.isfinite(values)):
        raise ValueError("axis values must be finite and nonempty")
    if vary not in ("n", "r0", "n_rep"):
        raise ValueError(f"cannot sweep over {vary!r}")
    table = CurveTable(x_name=vary)

    def rows_for(scn: Scenario, sample: InterferenceSample, x, r_point, reps):
        for n_rep in reps:
            row = {"n": scn.n_devices, "n_rep": n_rep}
            if r_point is not None:
                q, se = sample.single_shot(r_point, estimator)
                op, dse = _repeat(q[0], se[0], n_rep)
                row["r0"] = r_point
                row["op_r0"] = op
                row["op_r0_stderr"] = max(dse, 1.0 / sample.trials)
                row["op_aloha_r0"] = float(aloha_single_shot(scn, r_point)[0]) ** n_rep
            if vary != "r0":
                s = scn.with_(n_rep=n_rep)
                g = global_op_mc(s, sample, n_rep, quadrature, estimator)
                ga = global_op_aloha(s, n_rep, quadrature)
                row["op_bar"] = g.op
                row["op_bar_stderr"] = g.stderr
                row["op_aloha_bar"] = ga
                row["th"] = throughput(s, g.op)
                row["th_stderr"] = scn.n_devices * g.stderr / (s.period * n_rep)
                row["th_aloha"] = throughput(s, ga)
            table.add_row(x, row)

    if vary == "r0":
        sample = simulate(template, mc, stream=0)
        for x in values:
            try:
                rows_for(template, sample, x, float(x), n_reps)
            except ValueError:
                table.add_row(x, {"n": template.n_devices})
    elif vary == "n_rep":
        sample = simulate(template, mc, stream=0)
        for x in values:
            rows_for(template, sample, x, r0, [int(x)])
    else:
        for x in values:
            try:
                scn = template.with_(n_devices=int(x))
                sample = simulate(scn, mc, stream=int(x))
                rows_for(scn, sample, x, r0, n_reps)
            except ValueError:
                table.add_row(x, {"n": int(x)})
    return table
