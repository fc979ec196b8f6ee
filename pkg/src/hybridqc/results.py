"""Versioned JSON result files with a flat CSV twin.

A result file is ``{format_version, kind, created_at, config, payload}``.
``config`` records every input (seeds included) needed to recompute
``payload``; floats are written with ``repr`` so reloading and re-serialising
is byte-identical.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import dataclass
from pathlib import Path

FORMAT_VERSION = 1
KINDS = ("sweep", "train", "grid", "run")


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def dumps_payload(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, allow_nan=True)


@dataclass
class ResultFile:
    kind: str
    config: dict
    payload: dict
    created_at: str = ""
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown result kind {self.kind!r}")
        if not self.created_at:
            self.created_at = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def to_json(self) -> str:
        return json.dumps({"format_version": self.format_version, "kind": self.kind,
                           "created_at": self.created_at, "config": self.config,
                           "payload": self.payload}, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> ResultFile:
        data = json.loads(text)
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported result format {data.get('format_version')!r}")
        return cls(data["kind"], data["config"], data["payload"], data["created_at"], data["format_version"])

    @classmethod
    def load(cls, path: str | Path) -> ResultFile:
        return cls.from_json(Path(path).read_text())

    def csv_rows(self) -> tuple[list[str], list[list]]:
        p = self.payload
        if self.kind == "sweep":
            return ["theta", "cost", "uncertainty"], [list(r) for r in zip(p["grid"], p["costs"], p["uncertainty"])]
        if self.kind == "train":
            trace = p["optimize"]["trace"]
            width = len(trace[0]["params"]) if trace else 0
            header = ["iteration"] + [f"x{i}" for i in range(width)] + ["cost"]
            return header, [[i, *t["params"], t["cost"]] for i, t in enumerate(trace)]
        if self.kind == "grid":
            axis = p["axis"]
            return ["theta0"] + [fmt(t) for t in axis], [[t0, *row] for t0, row in zip(axis, p["p1"])]
        return ["bitstring", "count"], [[k, v] for k, v in p["counts"].items()]

    def save(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``path`` (JSON) and the CSV twin next to it; returns both paths."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        csv_path = path.with_suffix(".csv")
        header, rows = self.csv_rows()
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows([[fmt(x) for x in row] for row in rows])
        return path, csv_path
