"""Sigfox outage and throughput data.

Writes two tables into ``--out-dir``:

* ``sigfox_profile.csv``: outage vs distance for N in {1, 10000, 20000, 30000},
  with capture and pure Aloha side by side.
* ``sigfox_load.csv``: cell-averaged outage and hourly throughput vs N for
  n_rep in {1, 3, 5, 7, 9}.
"""

import argparse
from pathlib import Path

import numpy as np

from toss2d.engine import McConfig, sweep
from toss2d.presets import SigfoxPreset, sigfox_scenario
from toss2d.tables import CurveTable, standard_metadata

HOUR = 3600.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--points", type=int, default=40, help="N values in the load sweep")
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    preset = SigfoxPreset()
    mc = McConfig(trials=args.trials, seed=args.seed, workers=args.workers)

    radii = np.linspace(preset.r_min, preset.r_max, 50)
    profile = CurveTable("r0")
    for n in (1, 10000, 20000, 30000):
        part = sweep(sigfox_scenario(preset, n), "r0", radii, mc)
        for i, x in enumerate(part.x):
            profile.add_row(x, {k: v[i] for k, v in part.columns.items()})
    profile.metadata = standard_metadata(args.seed, {"script": "sigfox_profile", "trials": args.trials})
    (args.out_dir / "sigfox_profile.csv").write_text(profile.to_csv(), newline="")

    ns = np.unique(np.round(np.logspace(3, 6, args.points)).astype(int)).tolist()
    load = sweep(sigfox_scenario(preset, ns[0]), "n", ns, mc, n_reps=(1, 3, 5, 7, 9))
    for k in ("th", "th_stderr", "th_aloha"):
        load.columns[k] = [v * HOUR for v in load.columns[k]]
    load.metadata = standard_metadata(args.seed, {"script": "sigfox_load", "trials": args.trials,
                                                  "points": args.points})
    (args.out_dir / "sigfox_load.csv").write_text(load.to_csv(), newline="")

    for n_rep in (1, 3, 5, 7, 9):
        rows = [i for i, r in enumerate(load.column("n_rep")) if r == n_rep]
        best = max(rows, key=lambda i: load.column("th")[i])
        print(f"n_rep={n_rep}: peak {load.column('th')[best]:.0f} msg/h at N={load.x[best]}")


if __name__ == "__main__":
    main()
