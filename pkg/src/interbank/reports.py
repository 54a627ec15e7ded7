"""Delimited result writers and readers.

All files are plain CSV with one leading comment line carrying the
config fingerprint, seed and effective settings. Numbers are rendered
with 12 significant digits, enough for byte-stable golden files and
lossless round-trips at that precision.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .analytics import SweepPoint
from .config import SimConfig
from .engine import DayReport

SWEEP_HEADER = ["sigma", "config_id", "mean_default_fraction", "std_error", "n_realizations"]
TRACE_HEADER = ["day", "defaults_cum", "loan_volume", "bond_price", "total_cash", "trust_broken"]


def _num(value: float) -> str:
    return format(value, ".12g")


def _comment(config: SimConfig, include_sigma: bool) -> str:
    described = config.describe()
    if not include_sigma:
        described = " ".join(p for p in described.split() if not p.startswith("sigma="))
    return f"# config_id={config.fingerprint()} {described}"


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path, config: SimConfig) -> None:
    """One row per (sigma, config) point, ordered as given."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(_comment(config, include_sigma=False) + "\n")
        writer = csv.writer(handle)
        writer.writerow(SWEEP_HEADER)
        for p in points:
            writer.writerow(
                [
                    _num(p.sigma),
                    p.config_id,
                    _num(p.mean_default_fraction),
                    _num(p.std_error),
                    str(p.n_realizations),
                ]
            )


def read_sweep_csv(path: str | Path) -> list[SweepPoint]:
    """Inverse of write_sweep_csv (comment lines skipped)."""
    points = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows)
        if header != SWEEP_HEADER:
            raise ValueError(f"{path}: unexpected sweep header {header!r}")
        for row in rows:
            points.append(
                SweepPoint(
                    sigma=float(row[0]),
                    config_id=row[1],
                    mean_default_fraction=float(row[2]),
                    std_error=float(row[3]),
                    n_realizations=int(row[4]),
                )
            )
    return points


def write_trace_csv(reports: Sequence[DayReport], path: str | Path, config: SimConfig) -> None:
    """One row per simulated day of a single realization."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(_comment(config, include_sigma=True) + "\n")
        writer = csv.writer(handle)
        writer.writerow(TRACE_HEADER)
        for r in reports:
            writer.writerow(
                [
                    str(r.day),
                    str(r.defaults_cum),
                    _num(r.loan_volume),
                    _num(r.bond_price),
                    _num(r.total_cash),
                    "1" if r.trust_broken else "0",
                ]
            )


def read_trace_csv(path: str | Path) -> list[DayReport]:
    """Inverse of write_trace_csv (comment lines skipped)."""
    reports = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        for row in rows:
            reports.append(
                DayReport(
                    day=int(row[0]),
                    defaults_cum=int(row[1]),
                    loan_volume=float(row[2]),
                    bond_price=float(row[3]),
                    total_cash=float(row[4]),
                    trust_broken=row[5] == "1",
                )
            )
    return reports
