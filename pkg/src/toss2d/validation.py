"""Oracle checks comparing the analytic laws with direct simulation.

Each family returns a JSON-friendly dict with a ``passed`` flag and the
measured statistics, so the CLI can report them without interpretation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .channel import LinkBudget, r_max_from_budget
from .engine import (
    McConfig,
    aloha_single_shot,
    global_op,
    quadrature_nodes,
    sample_overlap_sum,
    simulate,
)
from .geometry import ResourceGrid, cdf_overlap, collision_probability, sample_placements
from .mixed import ConvolutionPlan, convolve_power, from_overlap_law
from .presets import LoRaPreset, SigfoxPreset, annulus_probabilities, sigfox_scenario


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Sup distance between the empirical cdf of ``samples`` and ``cdf``.

    ``cdf`` may jump at 0 (a point mass); both one-sided limits are compared
    at every distinct sample value.
    """
    xs, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
    n = counts.sum()
    right = np.cumsum(counts) / n
    left = right - counts / n
    f = np.asarray(cdf(xs), dtype=float)
    f_left = f.copy()
    f_left[xs <= 0.0] = 0.0
    return float(max(np.max(np.abs(right - f)), np.max(np.abs(left - f_left))))


def overlap_samples(grid: ResourceGrid, n: int, rng: np.random.Generator) -> np.ndarray:
    """Overlap fractions of ``n`` independently placed packet pairs."""
    t0, f0 = sample_placements(grid, rng, n)
    t1, f1 = sample_placements(grid, rng, n)
    tau = np.abs(t1 - t0) / grid.dt
    phi = np.zeros(n) if grid.is_1d else np.abs(f1 - f0) / grid.df
    x = np.where((tau < 1) & (phi < 1), (1 - tau) * (1 - phi), 0.0)
    return x


def _cdf_closed(grid):
    return lambda x: cdf_overlap(np.minimum(x, np.nextafter(1.0, 0.0)), grid)


def family_cdf1d(samples: int = 10**6, seed: int = 1, tol: float = 0.005) -> dict:
    rng = np.random.default_rng(seed)
    stats = {}
    for n_t in (2, 5, 10, 50, 100):
        g = ResourceGrid.from_ratios(n_t, 1)
        stats[str(n_t)] = ks_distance(overlap_samples(g, samples, rng), _cdf_closed(g))
    return {"passed": max(stats.values()) < tol, "ks": stats, "tol": tol}


def family_cdf2d(samples: int = 10**6, seed: int = 2, tol: float = 0.005) -> dict:
    rng = np.random.default_rng(seed)
    stats = {}
    for n_t in (2, 5, 10, 50):
        for n_f in (2, 5, 10, 50):
            g = ResourceGrid.from_ratios(n_t, n_f)
            stats[f"{n_t}x{n_f}"] = ks_distance(overlap_samples(g, samples, rng), _cdf_closed(g))
    return {"passed": max(stats.values()) < tol, "ks": stats, "tol": tol}


def family_convolution(samples: int = 10**6, seed: int = 3, tol: float = 0.01) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    ok = True
    for n_t, n_f in ((20, 20), (20, 50)):
        g = ResourceGrid.from_ratios(n_t, n_f)
        base = from_overlap_law(g)
        pc = collision_probability(g)
        for copies in (2, 5, 10):
            law = convolve_power(base, ConvolutionPlan(copies))
            sums = sample_overlap_sum(g, copies, samples, rng)
            ks = ks_distance(sums, law.cdf)
            atom_mc = float(np.mean(sums == 0.0))
            atom = (1 - pc) ** copies
            se = math.sqrt(atom * (1 - atom) / samples)
            good = ks < tol and abs(atom_mc - atom) <= 3 * se
            ok &= good
            out[f"{n_t}x{n_f}/{copies}"] = {"ks": ks, "atom": atom, "atom_mc": atom_mc, "stderr": se,
                                            "passed": good}
    return {"passed": ok, "cases": out, "tol": tol}


def family_table3(preset: LoRaPreset | None = None, tol: float = 0.01) -> dict:
    preset = preset or LoRaPreset()
    rows = preset.rows
    zeta = preset.zeta_db()
    zeta_ok = bool(np.all(zeta == np.array([r.zeta_db for r in rows])))
    ranges = np.array([
        r_max_from_budget(LinkBudget(preset.tx_power_dbm, preset.noise_power_dbm, r.zeta_db), preset.path)
        for r in rows
    ])
    printed = np.array([r.range_km * 1e3 for r in rows])
    rel = np.abs(ranges / printed - 1.0)
    p = annulus_probabilities(printed, preset.r_min)
    p_ok = bool(np.all(np.round(p, 2) == np.array([r.p_sf for r in rows])))
    return {
        "passed": zeta_ok and bool(np.all(rel < tol)) and p_ok,
        "zeta_reconstructed": zeta_ok,
        "range_rel_error": dict(zip((str(r.sf) for r in rows), rel.tolist())),
        "p_sf": p.round(4).tolist(),
        "p_sf_matches": p_ok,
    }


def family_dominance(trials: int = 10**5, seed: int = 4, n_devices: int = 20000) -> dict:
    scn = sigfox_scenario(SigfoxPreset(), n_devices)
    sample = simulate(scn, McConfig(trials=trials, seed=seed))
    r, _ = quadrature_nodes(scn.cell, 16)
    q, se = sample.single_shot(r)
    aloha = aloha_single_shot(scn, r)
    worst = float(np.min((aloha - q) / se))
    return {"passed": worst >= -2.0, "min_gap_in_stderr": worst}


def family_anchors(trials: int = 10**6, seed: int = 5) -> dict:
    scn = sigfox_scenario(SigfoxPreset(), 1)
    sample = simulate(scn, McConfig(trials=trials, seed=seed))
    q, se = sample.single_shot(scn.cell.r_max)
    target = -math.expm1(-1.0)
    beta, rm, r0 = scn.path.beta, scn.cell.r_max, scn.cell.r_min
    oracle, _ = integrate.quad(lambda r: -math.expm1(-(r / rm) ** beta) * 2 * r / (rm**2 - r0**2), r0, rm,
                               epsabs=1e-12)
    got = global_op(scn, lambda r: aloha_single_shot(scn, r))
    ok = abs(q[0] - target) <= 3 * se[0] and abs(got - oracle) < 1e-3
    return {"passed": bool(ok), "op_edge": float(q[0]), "stderr": float(se[0]), "target": target,
            "global_op": got, "oracle": oracle}


FAMILIES = {
    "cdf1d": family_cdf1d,
    "cdf2d": family_cdf2d,
    "convolution": family_convolution,
    "table3": family_table3,
    "dominance": family_dominance,
    "anchors": family_anchors,
}
