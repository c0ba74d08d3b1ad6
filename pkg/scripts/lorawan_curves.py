"""LoRaWAN outage per spreading factor and hourly throughput.

Writes ``lorawan_sf.csv`` (outage per SF for N in {1, 100, 150, 200, 250} and
n_rep in {1, 3}) and ``lorawan_load.csv`` (global outage, total and per-SF
throughput per hour vs N for n_rep in {1, 3, 5, 7, 9}).
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from toss2d.presets import (
    SPREADING_FACTORS,
    LoRaPreset,
    lorawan_global_op,
    lorawan_op_per_sf,
    lorawan_throughput,
    preset_to_dict,
)
from toss2d.tables import CurveTable, standard_metadata

HOUR = 3600.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--count", choices=("rounded", "binomial"), default="rounded")
    ap.add_argument("--n-max", type=int, default=20000)
    ap.add_argument("--points", type=int, default=60)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    preset = dataclasses.replace(LoRaPreset(), count_model=args.count)
    config = {"preset": preset_to_dict(preset), "n_max": args.n_max, "points": args.points}

    by_sf = CurveTable("sf")
    for n_rep in (1, 3):
        for n in (1, 100, 150, 200, 250):
            for sf, op in zip(SPREADING_FACTORS, lorawan_op_per_sf(preset, n, n_rep)):
                by_sf.add_row(sf, {"n": n, "n_rep": n_rep, "op": float(op)})
    by_sf.metadata = standard_metadata(None, {"script": "lorawan_sf", **config})
    (args.out_dir / "lorawan_sf.csv").write_text(by_sf.to_csv(), newline="")

    ns = np.unique(np.round(np.logspace(0, np.log10(args.n_max), args.points)).astype(int)).tolist()
    load = CurveTable("n")
    for n_rep in (1, 3, 5, 7, 9):
        for n in ns:
            total, per_sf = lorawan_throughput(preset, n, n_rep)
            row = {"n_rep": n_rep, "op_bar": lorawan_global_op(preset, n, n_rep), "th": total * HOUR}
            row.update({f"th_sf{sf}": float(v) * HOUR for sf, v in zip(SPREADING_FACTORS, per_sf)})
            load.add_row(n, row)
    load.metadata = standard_metadata(None, {"script": "lorawan_load", **config})
    (args.out_dir / "lorawan_load.csv").write_text(load.to_csv(), newline="")

    first = [i for i, r in enumerate(load.column("n_rep")) if r == 1]
    for sf in SPREADING_FACTORS:
        col = load.column(f"th_sf{sf}")
        best = max(first, key=lambda i: col[i])
        print(f"SF{sf}: peak {col[best]:.0f} msg/h at N={load.x[best]}")


if __name__ == "__main__":
    main()
