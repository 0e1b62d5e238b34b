"""Result tables and their CSV / gnuplot / manifest emitters.

Floats are written with ``repr`` (shortest round-trip form), so a parsed
table is bit-identical to the emitted one and reruns can be compared byte
for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .config import CampaignConfig, to_jsonable

CSV_HEADER = ("axis", "series", "mean", "stderr", "count")


@dataclass(frozen=True)
class ResultRow:
    axis: float
    series: str
    mean: float
    stderr: float
    count: int


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]

    def series_names(self) -> tuple[str, ...]:
        names = []
        for row in self.rows:
            if row.series not in names:
                names.append(row.series)
        return tuple(names)

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(axis, mean, stderr) arrays of one series, in row order."""
        picked = [r for r in self.rows if r.series == name]
        if not picked:
            raise KeyError(f"no series named {name!r}")
        return (
            np.array([r.axis for r in picked]),
            np.array([r.mean for r in picked]),
            np.array([r.stderr for r in picked]),
        )


def emit_csv(table: ResultTable, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in table.rows:
            writer.writerow(
                [repr(float(r.axis)), r.series, repr(float(r.mean)),
                 repr(float(r.stderr)), int(r.count)]
            )


def parse_csv(path: str) -> ResultTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected results header {header}")
        rows = tuple(
            ResultRow(
                axis=float(rec[0]), series=rec[1], mean=float(rec[2]),
                stderr=float(rec[3]), count=int(rec[4]),
            )
            for rec in reader
        )
    return ResultTable(rows=rows)


def emit_plot_script(
    table: ResultTable,
    path: str,
    csv_name: str = "results.csv",
    xlabel: str = "axis",
    ylabel: str = "mean",
    title: str = "",
) -> None:
    """Write a gnuplot script that plots every series of the results CSV."""
    lines = [
        "# gnuplot script, expects the results CSV next to it",
        'set datafile separator ","',
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set key outside right",
        "set grid",
    ]
    if title:
        lines.append(f'set title "{title}"')
    plots = [
        f"'{csv_name}' skip 1 using 1:(strcol(2) eq '{name}' ? column(3) : NaN) "
        f"with linespoints title '{name}'"
        for name in table.series_names()
    ]
    lines.append("plot \\\n  " + ", \\\n  ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(
    cfg: CampaignConfig,
    path: str,
    *,
    workers: int,
    version: str,
) -> None:
    """Record the resolved campaign next to its results for reproducibility."""
    manifest = {
        "tool": "mmwlink",
        "version": version,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "workers": workers,
        "config": to_jsonable(cfg),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
