"""Bank balance sheets, regulatory ratios, and per-bank floor calibration.

All monetary quantities are plain floats. Securities are held in bond
units and marked to market at the current price, so equity is always
recomputed from the balance-sheet identity instead of being stored.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

LARGE_EXPOSURE_CAP = 0.25

RWA_LOAN_WEIGHT = 0.90
RWA_INTERBANK_WEIGHT = 0.20


class CalibrationError(ValueError):
    """Raised for bank data that cannot yield well-formed regulatory floors."""


@dataclass(frozen=True)
class RatioFloors:
    """Per-bank regulatory minima, fixed at the day-0 ratio values.

    ``car_floor`` is None for a bank with no risk-weighted assets at day 0
    (the capital requirement is vacuous for it). ``large_exposure_cap`` is
    the only floor not derived from day-0 data.
    """

    reserve_floor: float
    liquidity_floor: float
    leverage_floor: float
    car_floor: float | None
    large_exposure_cap: float = LARGE_EXPOSURE_CAP


@dataclass(frozen=True)
class RatioSet:
    """The five prudential ratios; None marks a zero-denominator ratio."""

    reserve: float | None
    liquidity: float | None
    leverage: float | None
    car: float | None
    large_exposure: float | None


@dataclass
class Bank:
    """One institution's balance-sheet state.

    ``loans`` stay constant over a run; ``cash`` may go negative intraday
    but never at end of day for a live bank; ``securities`` is a bond
    quantity valued at quantity times the current price. ``initial_cash``
    is frozen at day 0 and scales the daily cash shock.
    """

    id: str
    loans: float
    cash: float
    securities: float
    deposits: float
    interbank_assets: float = 0.0
    interbank_liabilities: float = 0.0
    initial_cash: float | None = None
    floors: RatioFloors | None = None
    default_day: int | None = None

    def __post_init__(self):
        if self.initial_cash is None:
            self.initial_cash = self.cash

    @property
    def defaulted(self) -> bool:
        return self.default_day is not None


def total_assets(bank: Bank, price: float) -> float:
    """Loans + cash + mark-to-market securities + interbank assets."""
    return bank.loans + bank.cash + price * bank.securities + bank.interbank_assets


def equity(bank: Bank, price: float) -> float:
    """Total assets minus total liabilities; may be negative."""
    return total_assets(bank, price) - (bank.deposits + bank.interbank_liabilities)


def risk_weighted_assets(bank: Bank) -> float:
    return RWA_LOAN_WEIGHT * bank.loans + RWA_INTERBANK_WEIGHT * bank.interbank_assets


def _ratio(num: float, den: float) -> float | None:
    return num / den if den != 0.0 else None


def compute_ratios(bank: Bank, price: float) -> RatioSet:
    """Evaluate the five ratios at the given bond price.

    Zero denominators produce None rather than raising; a floor check
    against None counts as violated.
    """
    eq = equity(bank, price)
    return RatioSet(
        reserve=_ratio(bank.cash, bank.deposits),
        liquidity=_ratio(bank.cash + price * bank.securities, bank.deposits),
        leverage=_ratio(eq, total_assets(bank, price)),
        car=_ratio(eq, risk_weighted_assets(bank)),
        large_exposure=_ratio(bank.interbank_assets, eq),
    )


def calibrate_floors(bank: Bank, price0: float) -> RatioFloors:
    """Fix a bank's floors at its own day-0 ratios.

    Requires positive day-0 deposits, equity and cash, zero interbank
    positions, and reserve/liquidity ratios below 1 (the lending-cap
    formulas divide by 1 - floor).
    """
    if bank.interbank_assets != 0.0 or bank.interbank_liabilities != 0.0:
        raise CalibrationError(f"bank {bank.id}: nonzero interbank positions at day 0")
    if bank.deposits <= 0.0:
        raise CalibrationError(f"bank {bank.id}: non-positive deposits {bank.deposits}")
    eq = equity(bank, price0)
    if eq <= 0.0:
        raise CalibrationError(f"bank {bank.id}: non-positive day-0 equity {eq}")
    if bank.cash <= 0.0:
        raise CalibrationError(f"bank {bank.id}: non-positive day-0 cash {bank.cash}")

    reserve = bank.cash / bank.deposits
    liquidity = (bank.cash + price0 * bank.securities) / bank.deposits
    if reserve >= 1.0 or liquidity >= 1.0:
        raise CalibrationError(
            f"bank {bank.id}: reserve/liquidity floor at or above 1 "
            f"({reserve:.4g}, {liquidity:.4g})"
        )
    rwa = risk_weighted_assets(bank)
    return RatioFloors(
        reserve_floor=reserve,
        liquidity_floor=liquidity,
        leverage_floor=eq / total_assets(bank, price0),
        car_floor=eq / rwa if rwa > 0.0 else None,
    )


def with_floors(bank: Bank, price0: float) -> Bank:
    """Return a copy of the bank carrying its calibrated floors."""
    return replace(bank, floors=calibrate_floors(bank, price0))
