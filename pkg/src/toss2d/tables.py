"""Tabular sweep output for external plotting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _cell(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class CurveTable:
    """An x column plus named y columns, all of equal length.

    Rows are added as dicts; a column missing from some rows is left empty
    there (failed points stay visible rather than aborting the sweep).
    """

    x_name: str
    x: list = field(default_factory=list)
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def add_row(self, x, values: dict) -> None:
        n = len(self.x)
        for name in values:
            if name not in self.columns:
                self.columns[name] = [None] * n
        self.x.append(x)
        for name, col in self.columns.items():
            v = values.get(name)
            col.append(float(v) if hasattr(v, "dtype") else v)

    def column(self, name: str) -> list:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.x)

    def check(self) -> None:
        for name, col in self.columns.items():
            if len(col) != len(self.x):
                raise ValueError(f"column {name!r} has the wrong length")
            # every Monte Carlo column carries its stderr companion
            if name.endswith("_stderr") and name[: -len("_stderr")] not in self.columns:
                raise ValueError(f"orphan stderr column {name!r}")

    def to_csv(self) -> str:
        """RFC 4180 text; metadata rides along as constant trailing ``meta_*`` columns."""
        self.check()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        names = list(self.columns)
        meta_keys = sorted(self.metadata)
        meta_vals = [json.dumps(self.metadata[k], sort_keys=True, separators=(",", ":")) for k in meta_keys]
        w.writerow([self.x_name, *names, *(f"meta_{k}" for k in meta_keys)])
        for i, x in enumerate(self.x):
            w.writerow([_cell(x), *(_cell(self.columns[n][i]) for n in names), *meta_vals])
        return buf.getvalue()

    def to_dict(self) -> dict:
        self.check()
        return {
            "metadata": self.metadata,
            "x_name": self.x_name,
            "x": self.x,
            "columns": self.columns,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False,
                          default=lambda o: None) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CurveTable":
        d = json.loads(text)
        t = cls(x_name=d["x_name"], x=list(d["x"]), columns=dict(d["columns"]),
                metadata=dict(d.get("metadata", {})))
        t.check()
        return t

    @classmethod
    def from_csv(cls, text: str) -> "CurveTable":
        rows = list(csv.reader(io.StringIO(text, newline="")))
        header, rows = rows[0], rows[1:]

        def parse(s):
            if s == "":
                return None
            try:
                return int(s)
            except ValueError:
                return float(s)

        t = cls(x_name=header[0])
        t.x = [parse(r[0]) for r in rows]
        for j, name in enumerate(header[1:], start=1):
            if name.startswith("meta_"):
                if rows:
                    t.metadata[name[5:]] = json.loads(rows[0][j])
            else:
                t.columns[name] = [parse(r[j]) for r in rows]
        return t


def standard_metadata(seed, config: dict, timestamp: str | None = None) -> dict:
    meta = {"tool": "toss2d", "version": __version__, "seed": seed, "config_hash": config_hash(config),
            "config": config}
    if timestamp is not None:
        meta["timestamp"] = timestamp
    return meta
