"""Command-line front end: ``toss2d {dist,sigfox,lorawan,validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .engine import McConfig, sweep
from .geometry import ResourceGrid, cdf_overlap, collision_probability, pdf_overlap
from .mixed import ConvolutionPlan, convolve_power, from_overlap_law
from .presets import (
    SPREADING_FACTORS,
    LoRaPreset,
    SigfoxPreset,
    get_preset,
    lorawan_op_per_sf,
    lorawan_throughput,
    preset_from_dict,
    preset_to_dict,
    sigfox_scenario,
)
from .tables import CurveTable, standard_metadata
from .validation import FAMILIES

HOUR = 3600.0

# keys that never change results and so stay out of the recorded config
_VOLATILE = {"out", "format", "workers", "config", "timestamp", "func", "command"}


def _seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("TOSS2D_SEED")
    return int(env) if env else 0


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    # a CurveTable JSON document carries its run config in the metadata
    if "metadata" in data and "config" in data["metadata"]:
        data = data["metadata"]["config"]
    return data


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Command-line flags override the config file, which overrides defaults."""
    cfg = dict(defaults)
    cfg.update({k: v for k, v in _load_config(args.config).items() if k != "command"})
    for k, v in vars(args).items():
        if k in _VOLATILE or v is None:
            continue
        cfg[k] = v
    cfg["seed"] = _seed(cfg.get("seed"))
    return cfg


def _recorded(cfg: dict, command: str) -> dict:
    return {"command": command, **{k: v for k, v in sorted(cfg.items()) if k not in _VOLATILE}}


def _emit(table: CurveTable, args) -> None:
    text = table.to_json() if args.format == "json" else table.to_csv()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _finish(table: CurveTable, cfg: dict, command: str, args) -> CurveTable:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if args.timestamp else None
    table.metadata = standard_metadata(cfg["seed"], _recorded(cfg, command), stamp)
    _emit(table, args)
    return table


def cmd_dist(args) -> CurveTable:
    cfg = _merge(args, {"mode": "2d", "nt": 10.0, "nf": 10.0, "points": 101, "sum": None, "bins": 1024})
    n_f = 1.0 if cfg["mode"] == "1d" else float(cfg["nf"])
    grid = ResourceGrid.from_ratios(float(cfg["nt"]), n_f)
    if grid.n_t <= 1 or (cfg["mode"] == "2d" and grid.n_f <= 1):
        raise ValueError("grid needs N_t > 1 (and N_f > 1 in 2D)")
    x = np.linspace(0.0, 1.0, int(cfg["points"]))
    inside = x < 1.0
    cdf = np.ones_like(x)
    cdf[inside] = cdf_overlap(x[inside], grid)
    law_sum = None
    if cfg["sum"]:
        n_dev = int(cfg["sum"])
        if n_dev < 2:
            raise ValueError("--sum needs at least 2 devices")
        law_sum = convolve_power(from_overlap_law(grid, int(cfg["bins"])), ConvolutionPlan(n_dev - 1))
    table = CurveTable(x_name="x")
    pc = collision_probability(grid)
    for i, xi in enumerate(x):
        row = {"cdf": float(cdf[i]),
               "pdf": float(pdf_overlap(xi, grid)) if 0.0 < xi < 1.0 else None,
               "atom0": 1.0 - pc}
        if law_sum is not None:
            row["sum_cdf"] = float(law_sum.cdf(xi))
            row["sum_atom0"] = law_sum.atom0
        table.add_row(float(xi), row)
    return _finish(table, cfg, "dist", args)


def _int_list(values, default):
    return [int(v) for v in (values if values else default)]


def _preset_from(cfg: dict, kind: str):
    p = cfg.get("preset")
    if isinstance(p, dict):
        preset = preset_from_dict(p)
    else:
        preset = get_preset(p or kind)
    if not isinstance(preset, SigfoxPreset if kind == "sigfox" else LoRaPreset):
        raise ValueError(f"preset is not a {kind} preset")
    return preset


def cmd_sigfox(args) -> CurveTable:
    cfg = _merge(args, {"n": [1, 10000, 20000, 30000], "nrep": [1], "trials": 100_000,
                        "r0_points": None, "quadrature": 64, "preset": "sigfox"})
    preset = _preset_from(cfg, "sigfox")
    cfg["preset"] = preset_to_dict(preset)
    mc = McConfig(trials=int(cfg["trials"]), seed=cfg["seed"], workers=args.workers or 1)
    ns = _int_list(cfg["n"], [1])
    reps = _int_list(cfg["nrep"], [1])
    if cfg["r0_points"]:
        scn0 = sigfox_scenario(preset, 1)
        radii = np.linspace(scn0.cell.r_min, scn0.cell.r_max, int(cfg["r0_points"]))
        table = CurveTable(x_name="r0")
        for n in ns:
            part = sweep(sigfox_scenario(preset, n), "r0", radii.tolist(), mc, n_reps=reps)
            for i, x in enumerate(part.x):
                table.add_row(x, {k: v[i] for k, v in part.columns.items()})
        return _finish(table, cfg, "sigfox", args)
    part = sweep(sigfox_scenario(preset, ns[0]), "n", ns, mc, n_reps=reps, quadrature=int(cfg["quadrature"]))
    table = CurveTable(x_name="n")
    for i, x in enumerate(part.x):
        row = {k: v[i] for k, v in part.columns.items() if k != "n"}
        for k in ("th", "th_stderr", "th_aloha"):
            if row.get(k) is not None:
                row[k] *= HOUR
        table.add_row(x, row)
    return _finish(table, cfg, "sigfox", args)


def cmd_lorawan(args) -> CurveTable:
    cfg = _merge(args, {"n": [1, 100, 150, 200, 250], "nrep": [1], "preset": "lorawan", "theta": 0.0,
                        "split": None, "count": None})
    preset = _preset_from(cfg, "lorawan")
    changes = {}
    if cfg["split"]:
        changes["channel_split"] = cfg["split"]
    if cfg["count"]:
        changes["count_model"] = cfg["count"]
    if changes:
        preset = dataclasses.replace(preset, **changes)
    cfg["preset"] = preset_to_dict(preset)
    cfg.pop("split"), cfg.pop("count")
    p = preset.p_sf()
    table = CurveTable(x_name="n")
    for n in _int_list(cfg["n"], [1]):
        for n_rep in _int_list(cfg["nrep"], [1]):
            op = lorawan_op_per_sf(preset, n, n_rep, cfg["theta"])
            total, per_sf = lorawan_throughput(preset, n, n_rep, cfg["theta"])
            row = {"n_rep": n_rep}
            row.update({f"op_sf{sf}": float(v) for sf, v in zip(SPREADING_FACTORS, op)})
            row["op_bar"] = float(np.dot(op, p))
            row["th"] = total * HOUR
            row.update({f"th_sf{sf}": float(v) * HOUR for sf, v in zip(SPREADING_FACTORS, per_sf)})
            table.add_row(n, row)
    return _finish(table, cfg, "lorawan", args)


def cmd_validate(args) -> dict:
    names = args.family or list(FAMILIES)
    preset = None
    if args.config:
        preset = preset_from_dict(_load_config(args.config))
    report = {}
    for name in names:
        fn = FAMILIES[name]
        kwargs = {}
        if name == "table3" and isinstance(preset, LoRaPreset):
            kwargs["preset"] = preset
        if args.trials and name not in ("table3",):
            key = "samples" if name in ("cdf1d", "cdf2d", "convolution") else "trials"
            kwargs[key] = int(args.trials)
        report[name] = fn(**kwargs)
    report["passed"] = all(r["passed"] for r in report.values())
    text = json.dumps(report, indent=1, sort_keys=True, default=float) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: $TOSS2D_SEED, then 0)")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--config", default=None, help="JSON run config, preset document or earlier JSON output")
    common.add_argument("--timestamp", action="store_true", help="record wall-clock time in the metadata")

    parser = argparse.ArgumentParser(prog="toss2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dist", parents=[common], help="overlap-fraction cdf/pdf sweep")
    d.add_argument("--mode", choices=("1d", "2d"), default=None)
    d.add_argument("--nt", type=float, default=None)
    d.add_argument("--nf", type=float, default=None)
    d.add_argument("--points", type=int, default=None)
    d.add_argument("--sum", type=int, default=None, metavar="N", help="also emit the law summed over N-1 interferers")
    d.add_argument("--bins", type=int, default=None)
    d.set_defaults(func=cmd_dist)

    s = sub.add_parser("sigfox", parents=[common], help="fading + path-loss outage and throughput")
    s.add_argument("--preset", choices=("sigfox",), default=None)
    s.add_argument("--n", type=int, action="append", default=None)
    s.add_argument("--nrep", type=int, action="append", default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--r0-points", dest="r0_points", type=int, default=None,
                   help="emit an outage-vs-distance profile instead of cell averages")
    s.add_argument("--quadrature", type=int, default=None)
    s.set_defaults(func=cmd_sigfox)

    lo = sub.add_parser("lorawan", parents=[common], help="per-SF outage and throughput under power control")
    lo.add_argument("--preset", choices=("lorawan",), default=None)
    lo.add_argument("--n", type=int, action="append", default=None)
    lo.add_argument("--nrep", type=int, action="append", default=None)
    lo.add_argument("--theta", type=float, default=None)
    lo.add_argument("--split", choices=("random", "equal"), default=None)
    lo.add_argument("--count", choices=("rounded", "binomial"), default=None)
    lo.set_defaults(func=cmd_lorawan)

    v = sub.add_parser("validate", parents=[common], help="compare analytic laws with sampling oracles")
    v.add_argument("--family", action="append", choices=sorted(FAMILIES), default=None)
    v.add_argument("--trials", type=int, default=None)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"toss2d {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate" and not result["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
