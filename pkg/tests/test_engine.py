import math

import numpy as np
import pytest
from scipy import integrate

from toss2d.channel import CellGeometry, FadingModel, LinkBudget, PathLossModel, r_max_from_budget
from toss2d.engine import (
    McConfig,
    Scenario,
    aloha_single_shot,
    global_op,
    global_op_mc,
    op_aloha_at_r0,
    op_at_r0,
    op_power_control,
    sample_overlap_sum,
    simulate,
    sweep,
    throughput,
)
from toss2d.geometry import ResourceGrid, cdf_overlap_1d, collision_probability
from toss2d.mixed import ConvolutionPlan, convolve_power, from_overlap_law
from toss2d.presets import SigfoxPreset, sigfox_scenario

EDGE = 1 - math.exp(-1)


@pytest.fixture(scope="module")
def lone():
    return sigfox_scenario(SigfoxPreset(), 1)


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(trials=0)
    with pytest.raises(ValueError):
        McConfig(workers=0)


def test_lone_device_at_edge(lone):
    res = op_at_r0(lone, lone.cell.r_max, McConfig(trials=200_000, seed=7))
    assert abs(res.op - EDGE) < 3 * res.stderr
    rep = op_at_r0(lone.with_(n_rep=3), lone.cell.r_max, McConfig(trials=200_000, seed=7))
    assert rep.op == pytest.approx(res.op**3, rel=1e-12)
    assert rep.op == pytest.approx(0.2526, abs=5e-3)


def test_lone_device_near_station(lone):
    assert op_at_r0(lone, lone.cell.r_min, McConfig(trials=10_000)).op == 0.0


def test_r0_outside_cell(lone):
    with pytest.raises(ValueError):
        op_at_r0(lone, lone.cell.r_max * 1.01, McConfig(trials=100))


def test_conditional_estimator_agrees(lone):
    s = simulate(sigfox_scenario(SigfoxPreset(), 20000), McConfig(trials=50_000, seed=3))
    r = np.array([100.0, 2000.0, 5000.0])
    q1, se1 = s.single_shot(r, "indicator")
    q2, se2 = s.single_shot(r, "conditional")
    assert np.all(np.abs(q1 - q2) < 3 * np.hypot(se1, se2))
    assert np.all(se2 <= se1 + 1e-12)


def test_aloha_formula():
    # 1D grid with p_c = 1/2: (N_t - 1) = 2 + sqrt(2)
    grid = ResourceGrid.from_ratios(3 + math.sqrt(2))
    assert collision_probability(grid) == pytest.approx(0.5)
    scn = sigfox_scenario(SigfoxPreset(), 2)
    scn = scn.with_(grid=grid)
    assert aloha_single_shot(scn, scn.cell.r_max)[0] == pytest.approx(0.5 + 0.5 * EDGE)
    assert op_aloha_at_r0(scn, scn.cell.r_max).op == pytest.approx(0.81606, abs=1e-5)


def test_aloha_saturates():
    scn = sigfox_scenario(SigfoxPreset(), 10**8)
    assert aloha_single_shot(scn, 10.0)[0] == pytest.approx(1.0, abs=1e-6)


def test_aloha_same_sample_matches_analytic():
    scn = sigfox_scenario(SigfoxPreset(), 20000)
    s = simulate(scn, McConfig(trials=100_000, seed=11))
    r = np.array([10.0, 3000.0, scn.cell.r_max])
    mc = s.aloha_single_shot(r)
    exact = aloha_single_shot(scn, r)
    assert np.all(np.abs(mc - exact) < 3 * np.sqrt(exact * (1 - exact) / 1e5) + 1e-5)


def test_global_op_of_simple_profiles():
    cell = CellGeometry(1e-9, 100.0)
    scn = sigfox_scenario(SigfoxPreset(), 1).with_(cell=cell)
    assert global_op(scn, lambda r: np.full_like(r, 0.3)) == pytest.approx(0.3)
    assert global_op(scn, lambda r: (r / 100.0) ** 2) == pytest.approx(0.5)
    # scalar-only callables are evaluated node by node
    assert global_op(scn, lambda r: 0.3 if np.ndim(r) == 0 else 0.0) == pytest.approx(0.3)


def test_global_op_lone_device(lone):
    rm, rn = lone.cell.r_max, lone.cell.r_min
    oracle, _ = integrate.quad(lambda r: (1 - math.exp(-(r / rm) ** 3.6)) * 2 * r / (rm**2 - rn**2), rn, rm)
    assert global_op(lone, lambda r: aloha_single_shot(lone, r)) == pytest.approx(oracle, abs=1e-6)
    s = simulate(lone, McConfig(trials=200_000, seed=2))
    g = global_op_mc(lone, s)
    assert abs(g.op - oracle) < 3 * g.stderr
    gc = global_op_mc(lone, s, estimator="conditional")
    assert abs(gc.op - oracle) < 3 * gc.stderr


def test_throughput_arithmetic():
    scn = sigfox_scenario(SigfoxPreset(), 3600)
    assert throughput(scn.with_(grid=ResourceGrid(3600, 40e3, 1.76, 100)), 0.0) == pytest.approx(1.0)
    assert throughput(scn, 1.0) == 0.0
    big = sigfox_scenario(SigfoxPreset(), 10000, n_rep=3)
    assert throughput(big, 0.5) == pytest.approx(2.70, abs=5e-3)


def _pc_scenario(grid, n, n_rep=1):
    budget = LinkBudget(14, -117, 5)
    cell = CellGeometry(1.0, r_max_from_budget(budget, PathLossModel(3.6)))
    return Scenario(grid, budget, PathLossModel(3.6), FadingModel(1.0), cell, n, n_rep)


def test_power_control():
    g = ResourceGrid.from_ratios(10)
    assert op_power_control(_pc_scenario(g, 1), None, 0.0) == 0.0
    law = from_overlap_law(g)
    assert op_power_control(_pc_scenario(g, 2), law, 0.0) == pytest.approx(collision_probability(g))
    assert op_power_control(_pc_scenario(g, 2), law, 0.5) == pytest.approx(1 - cdf_overlap_1d(0.5, g), abs=2e-3)
    assert op_power_control(_pc_scenario(g, 2), law, 0.5) == pytest.approx(0.10802, abs=2e-3)
    assert op_power_control(_pc_scenario(g, 2), law, 2.0) == 0.0
    assert op_power_control(_pc_scenario(g, 2), law, -0.1) == 1.0
    # default theta sits at the cell edge, where it is exactly zero
    assert op_power_control(_pc_scenario(g, 2), law) == pytest.approx(collision_probability(g))


def test_power_control_repetition():
    g = ResourceGrid.from_ratios(10)
    law = convolve_power(from_overlap_law(g), ConvolutionPlan(4))
    one = op_power_control(_pc_scenario(g, 5), law, 0.2)
    assert op_power_control(_pc_scenario(g, 5, 3), law, 0.2) == pytest.approx(one**3, rel=1e-12)


def test_overlap_sum_atom():
    g = ResourceGrid.from_ratios(20, 20)
    pc = collision_probability(g)
    s = sample_overlap_sum(g, 5, 200_000, np.random.default_rng(0))
    atom = (1 - pc) ** 5
    assert abs(np.mean(s == 0) - atom) < 3 * math.sqrt(atom * (1 - atom) / 2e5)


def test_sweep_single_n_matches_op_at_r0(lone):
    mc = McConfig(trials=50_000, seed=5)
    t = sweep(lone, "n", [1], mc, r0=lone.cell.r_max)
    assert t.column("op_r0")[0] == op_at_r0(lone, lone.cell.r_max, mc, simulate(lone, mc, stream=1)).op


def test_sweep_n_rep_exponent(lone):
    t = sweep(lone, "n_rep", [1, 3], McConfig(trials=50_000), r0=lone.cell.r_max)
    q1, q3 = t.column("op_r0")
    assert q3 == pytest.approx(q1**3, rel=1e-12)


def test_sweep_r0_monotone():
    scn = sigfox_scenario(SigfoxPreset(), 20000)
    radii = np.linspace(1.0, scn.cell.r_max, 10)
    t = sweep(scn, "r0", radii, McConfig(trials=100_000, seed=1))
    op, se = np.array(t.column("op_r0")), np.array(t.column("op_r0_stderr"))
    assert np.all(np.diff(op) >= -2 * (se[1:] + se[:-1]))


def test_sweep_keeps_failed_points(lone):
    t = sweep(lone, "r0", [10.0, 1e9], McConfig(trials=1000))
    assert t.column("op_r0")[1] is None
    assert len(t) == 2


def test_worker_count_does_not_change_results():
    scn = sigfox_scenario(SigfoxPreset(), 5000)
    a = simulate(scn, McConfig(trials=20_000, seed=9, chunk=4096, workers=1))
    b = simulate(scn, McConfig(trials=20_000, seed=9, chunk=4096, workers=2))
    assert np.array_equal(a.interference, b.interference)
    assert np.array_equal(a.h0, b.h0)
