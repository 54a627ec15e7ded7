"""Bank-data ingestion, the synthetic balance-sheet generator, and CSV I/O.

The reference input is a checked-in synthetic dataset (31 banks) shipped
with the package; a real dataset with the same schema can be loaded from
any path. Day-0 interbank positions are implicitly zero and the day-0
bond price is fixed at 1.0 so securities units and currency coincide.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path

import numpy as np

from .balance import Bank

BANKS_HEADER = ["id", "name", "loans", "cash", "securities_units", "deposits"]
REFERENCE_RESOURCE = "data/banks_reference.csv"


class DataError(ValueError):
    """Invalid bank data; message carries the offending row where known."""


@dataclass(frozen=True)
class BankRecord:
    """One row of the banks CSV; quantities as non-negative decimals."""

    id: str
    name: str
    loans: float
    cash: float
    securities_units: float
    deposits: float

    def implied_equity(self, price0: float = 1.0) -> float:
        return self.loans + self.cash + self.securities_units * price0 - self.deposits

    def to_bank(self) -> Bank:
        return Bank(
            id=self.id,
            loans=self.loans,
            cash=self.cash,
            securities=self.securities_units,
            deposits=self.deposits,
        )


def _validate(record: BankRecord, price0: float, where: str) -> None:
    for name in ("loans", "cash", "securities_units", "deposits"):
        value = getattr(record, name)
        if not np.isfinite(value) or value < 0.0:
            raise DataError(f"{where}: {name} must be a non-negative number, got {value}")
    if record.implied_equity(price0) <= 0.0:
        raise DataError(
            f"{where}: bank {record.id!r} has non-positive implied equity "
            f"(deposits exceed assets at price {price0:g})"
        )


def _parse_banks(reader, source: str, price0: float) -> list[BankRecord]:
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file, expected header {','.join(BANKS_HEADER)}")
    if header != BANKS_HEADER:
        raise DataError(
            f"{source}: header {','.join(header)!r} does not match {','.join(BANKS_HEADER)!r}"
        )
    records: list[BankRecord] = []
    seen: set[str] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        where = f"{source}:{lineno}"
        if len(row) != len(BANKS_HEADER):
            raise DataError(f"{where}: expected {len(BANKS_HEADER)} fields, got {len(row)}")
        bank_id, name = row[0].strip(), row[1].strip()
        if not bank_id:
            raise DataError(f"{where}: empty bank id")
        if bank_id in seen:
            raise DataError(f"{where}: duplicate bank id {bank_id!r}")
        seen.add(bank_id)
        try:
            numbers = [float(cell) for cell in row[2:]]
        except ValueError as exc:
            raise DataError(f"{where}: {exc}") from None
        record = BankRecord(bank_id, name, *numbers)
        _validate(record, price0, where)
        records.append(record)
    return records


def load_banks(path: str | Path, price0: float = 1.0) -> list[BankRecord]:
    """Parse and validate a banks CSV; returns records, floors uncalibrated."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        return _parse_banks(csv.reader(handle), str(path), price0)


def write_banks_csv(records: list[BankRecord], path: str | Path) -> None:
    """Write records in the loadable schema, full float precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(BANKS_HEADER)
        for r in records:
            writer.writerow(
                [r.id, r.name, repr(r.loans), repr(r.cash), repr(r.securities_units), repr(r.deposits)]
            )


def reference_banks() -> list[BankRecord]:
    """The checked-in 31-bank synthetic reference dataset."""
    text = files("interbank").joinpath(REFERENCE_RESOURCE).read_text(encoding="utf-8")
    return _parse_banks(csv.reader(io.StringIO(text)), REFERENCE_RESOURCE, price0=1.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the synthetic balance-sheet generator.

    Sizes are log-normal with the top-5 asset share pinned inside
    ``top5_share`` (the market's core-periphery skew); per-bank balance
    sheet shares are uniform in the given ranges. ``total_securities``
    fixes the system-wide bond holding so that a 10% sell-off at
    eta = 1e-6 moves the price by 3%.
    """

    n_banks: int = 31
    seed: int = 20131231
    size_sigma: float = 1.2
    top5_share: tuple[float, float] = (0.50, 0.75)
    cash_share: tuple[float, float] = (0.01, 0.05)
    securities_share: tuple[float, float] = (0.15, 0.45)
    deposit_share: tuple[float, float] = (0.65, 0.85)
    total_securities: float = 3.0e5
    price0: float = 1.0

    def __post_init__(self):
        if self.n_banks < 1:
            raise DataError(f"n_banks must be >= 1, got {self.n_banks}")
        for name in ("top5_share", "cash_share", "securities_share", "deposit_share"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi < 1.0:
                raise DataError(f"{name} range must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})")
        if self.cash_share[1] + self.securities_share[1] >= 1.0:
            raise DataError(
                "cash_share and securities_share upper bounds sum to >= 1; no room for loans"
            )
        if self.total_securities <= 0.0:
            raise DataError("total_securities must be positive")


def generate_synthetic(spec: SyntheticSpec) -> list[BankRecord]:
    """Deterministic-in-seed synthetic bank collection passing validation."""
    rng = np.random.default_rng(spec.seed)
    weights = np.sort(rng.lognormal(mean=0.0, sigma=spec.size_sigma, size=spec.n_banks))[::-1]
    if spec.n_banks > 5:
        target = rng.uniform(*spec.top5_share)
        top, rest = weights[:5].sum(), weights[5:].sum()
        weights[:5] *= target * rest / ((1.0 - target) * top)
    cash_s = rng.uniform(*spec.cash_share, size=spec.n_banks)
    sec_s = rng.uniform(*spec.securities_share, size=spec.n_banks)
    dep_s = rng.uniform(*spec.deposit_share, size=spec.n_banks)
    # Scale total assets so system bond holdings hit the target exactly.
    assets = weights * (spec.total_securities * spec.price0 / float(weights @ sec_s))
    records = []
    for i in range(spec.n_banks):
        record = BankRecord(
            id=f"B{i + 1:02d}",
            name=f"Synthetic Bank {i + 1:02d}",
            loans=float(assets[i] * (1.0 - cash_s[i] - sec_s[i])),
            cash=float(assets[i] * cash_s[i]),
            securities_units=float(assets[i] * sec_s[i] / spec.price0),
            deposits=float(assets[i] * dep_s[i]),
        )
        _validate(record, spec.price0, f"synthetic bank {i}")
        records.append(record)
    return records
