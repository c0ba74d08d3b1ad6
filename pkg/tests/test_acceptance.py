"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` (the lines are also shown
without ``-s``; they bypass output capture).
"""

import math
import time

import numpy as np
import pytest

from toss2d.cli import main
from toss2d.engine import McConfig, aloha_single_shot, op_at_r0, simulate, sweep
from toss2d.geometry import ResourceGrid, ccdf_overlap_numeric, cdf_overlap_2d
from toss2d.presets import (
    LoRaPreset,
    SigfoxPreset,
    lorawan_op_per_sf,
    lorawan_throughput,
    sigfox_scenario,
)
from toss2d.validation import (
    family_anchors,
    family_cdf1d,
    family_cdf2d,
    family_convolution,
    family_dominance,
    family_table3,
    overlap_samples,
)

TRIALS = 100_000
N_SWEEP = np.unique(np.round(np.logspace(3, 6, 24)).astype(int)).tolist()


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}")
        assert ok, detail

    return emit


def test_criterion_1_cdf_1d(report):
    t0 = time.perf_counter()
    res = family_cdf1d(samples=10**6)
    dt = time.perf_counter() - t0
    worst = max(res["ks"].values())
    report(1, "1D closed form vs sampling", res["passed"] and dt < 30,
           f"max KS {worst:.5f} < 0.005 over N_t {sorted(res['ks'], key=float)}, {dt:.1f} s")


def _uniform_offsets(g):
    lt, lf = g.n_t - 1, g.n_f - 1
    return lambda u, v: 4 * (lt - u) * (lf - v) / (lt * lf) ** 2


def test_criterion_2_cdf_2d(report):
    t0 = time.perf_counter()
    res = family_cdf2d(samples=10**6)
    # the x ln x term, checked pointwise against quadrature and fresh samples
    rng = np.random.default_rng(22)
    worst_quad = worst_mc = 0.0
    for n_t in (2, 5, 10, 50):
        for n_f in (2, 5, 10, 50):
            g = ResourceGrid.from_ratios(n_t, n_f)
            xs = overlap_samples(g, 10**6, rng)
            for x in (0.01, 0.5, 0.99):
                closed = cdf_overlap_2d(x, g)
                worst_quad = max(worst_quad, abs(closed - (1 - ccdf_overlap_numeric(x, _uniform_offsets(g), g))))
                worst_mc = max(worst_mc, abs(closed - np.mean(xs <= x)))
    dt = time.perf_counter() - t0
    ok = res["passed"] and worst_quad < 1e-6 and worst_mc < 0.005 and dt < 120
    report(2, "2D closed form vs sampling", ok,
           f"max KS {max(res['ks'].values()):.5f}; at x in {{0.01, 0.5, 0.99}} quadrature gap {worst_quad:.1e}, "
           f"sampling gap {worst_mc:.5f}; {dt:.1f} s")


def test_criterion_3_convolution(report):
    res = family_convolution(samples=10**6)
    cases = res["cases"]
    worst_ks = max(c["ks"] for c in cases.values())
    worst_atom = max(abs(c["atom_mc"] - c["atom"]) / c["stderr"] for c in cases.values())
    report(3, "convolution vs direct sum", res["passed"],
           f"max KS {worst_ks:.5f} < 0.01, worst atom deviation {worst_atom:.2f} stderr (<= 3)")


def test_criterion_4_table3(report):
    t0 = time.perf_counter()
    res = family_table3()
    dt = time.perf_counter() - t0
    worst = max(res["range_rel_error"].values())
    report(4, "LoRaWAN table reconstruction", res["passed"] and dt < 1,
           f"zeta exact {res['zeta_reconstructed']}, worst range error {100 * worst:.2f}%, "
           f"p_SF at 2 decimals {res['p_sf_matches']}, {dt * 1e3:.0f} ms")


def test_criterion_5_repetition_and_dominance(report):
    scn = sigfox_scenario(SigfoxPreset(), 20000)
    mc = McConfig(trials=TRIALS, seed=55)
    sample = simulate(scn, mc)
    exact = True
    for r0 in (10.0, 2500.0, scn.cell.r_max):
        q = op_at_r0(scn, r0, mc, sample).op
        for n_rep in (2, 3, 5):
            exact &= op_at_r0(scn.with_(n_rep=n_rep), r0, mc, sample).op == q**n_rep
    lora = LoRaPreset()
    one = lorawan_op_per_sf(lora, 400)
    exact &= bool(np.all(lorawan_op_per_sf(lora, 400, n_rep=3) == one**3))

    dom = family_dominance(trials=TRIALS)
    radii = np.linspace(scn.cell.r_min, scn.cell.r_max, 25)
    q, se = sample.single_shot(radii)
    gap = (aloha_single_shot(scn, radii) - q) / se
    same = sample.aloha_single_shot(radii) >= q
    ok = exact and dom["passed"] and gap.min() >= -2 and bool(np.all(same))
    report(5, "repetition law and Aloha dominance", ok,
           f"OP_n == OP_1**n bitwise {exact}; min (Aloha - capture) {min(gap.min(), dom['min_gap_in_stderr']):.2f} "
           f"stderr (>= -2); same-sample dominance {bool(np.all(same))}")


def _steps_ok(y, se, rising):
    d = np.diff(y)
    tol = 2 * np.hypot(se[1:], se[:-1])
    return bool(np.all(d >= -tol)) if rising else bool(np.all(d <= tol))


def _unimodal(y, se):
    k = int(np.argmax(y))
    return _steps_ok(y[: k + 1], se[: k + 1], True) and _steps_ok(y[k:], se[k:], False)


def test_criterion_6a_outage_profile(report):
    template = sigfox_scenario(SigfoxPreset(), 1)
    radii = np.linspace(template.cell.r_min, template.cell.r_max, 12)
    mc = McConfig(trials=TRIALS, seed=61)
    q_all, se_all, gap_ok, r_ok = [], [], True, True
    for n in N_SWEEP:
        scn = template.with_(n_devices=n)
        sample = simulate(scn, mc, stream=n)
        q, se = sample.single_shot(radii)
        gap = aloha_single_shot(scn, radii) - q
        r_ok &= _steps_ok(q, se, True)
        gap_ok &= _steps_ok(gap, se, False) and gap[-1] < gap[0] + 1e-12
        q_all.append(q)
        se_all.append(se)
    q_all, se_all = np.array(q_all), np.array(se_all)
    n_ok = all(_steps_ok(q_all[:, j], se_all[:, j], True) for j in range(len(radii)))
    report("6a", "outage vs distance and load", r_ok and n_ok and gap_ok,
           f"{len(N_SWEEP)} loads x {len(radii)} radii: rising in r0 {r_ok}, rising in N {n_ok}, "
           f"capture gap shrinking toward the edge {gap_ok}")


def test_criterion_6b_sigfox_throughput(report):
    t = sweep(sigfox_scenario(SigfoxPreset(), N_SWEEP[0]), "n", N_SWEEP, McConfig(trials=TRIALS, seed=62),
              n_reps=(1, 2, 3))
    reps = np.array(t.column("n_rep"))
    th, se = np.array(t.column("th")), np.array(t.column("th_stderr"))
    peaks, shapes = [], []
    for n_rep in (1, 2, 3):
        m = reps == n_rep
        shapes.append(_unimodal(th[m], se[m]))
        peaks.append(th[m].max() * 3600)
    ok = all(shapes) and peaks[0] > peaks[1] > peaks[2]
    report("6b", "Sigfox throughput vs load", ok,
           f"unimodal per n_rep {shapes}, peaks per hour {[round(p) for p in peaks]} decreasing in n_rep")


LORA_N = np.unique(np.round(np.logspace(2, 4, 30)).astype(int)).tolist()


def test_criterion_6c_lorawan_outage_order(report):
    lora = LoRaPreset()
    p = lora.p_sf()
    ok = True
    for n in LORA_N:
        op = lorawan_op_per_sf(lora, n)
        follows = all(op[i] <= op[j] for i in range(7) for j in range(7) if p[i] < p[j])
        ok &= follows and op[-1] == op.max()
    report("6c", "LoRaWAN outage ordering", ok,
           f"OP(SF) ordered like p_SF with SF12 worst at all {len(LORA_N)} loads in [{LORA_N[0]}, {LORA_N[-1]}]")


def test_criterion_6d_lorawan_throughput_peaks(report):
    per = np.array([lorawan_throughput(LoRaPreset(), n)[1] for n in LORA_N])
    k6, k7 = int(np.argmax(per[:, 0])), int(np.argmax(per[:, 1]))
    report("6d", "LoRaWAN per-SF throughput peaks", k6 < k7,
           f"SF6 peaks at N={LORA_N[k6]}, SF7 at N={LORA_N[k7]}")


def test_criterion_7_determinism(report, tmp_path):
    outputs = {}
    for w in (1, 2, 4):
        for cmd in (["sigfox", "--n", "3000", "--n", "30000", "--nrep", "1", "--nrep", "3"],
                    ["sigfox", "--n", "20000", "--r0-points", "6"]):
            out = tmp_path / f"{cmd[2]}_{w}.csv"
            assert main([*cmd, "--trials", str(TRIALS), "--seed", "77", "--workers", str(w), "--out", str(out)]) == 0
            outputs.setdefault(cmd[2], set()).add(out.read_bytes())
    ok = all(len(v) == 1 for v in outputs.values())
    report(7, "determinism across worker counts", ok,
           f"{len(outputs)} sweeps x workers {{1, 2, 4}}: byte-identical {ok}")


def test_criterion_8_lone_device(report):
    res = family_anchors(trials=10**6)
    z = abs(res["op_edge"] - res["target"]) / res["stderr"]
    report(8, "single-device anchors", res["passed"],
           f"edge OP {res['op_edge']:.5f} vs 1 - 1/e = {1 - math.exp(-1):.5f} ({z:.2f} stderr); "
           f"global OP {res['global_op']:.6f} vs quadrature {res['oracle']:.6f}")
