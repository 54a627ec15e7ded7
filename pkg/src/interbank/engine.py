"""The daily market engine.

One simulated day runs, in order: repayment of yesterday's overnight
loans (with 100% loss given default on dead debtors), cash fluctuations,
leverage-driven bond repurchase, cash supply/demand computation with the
trust effect and regulatory caps, proportional interbank matching,
securities demand, price-impact clearing, and default marking.

State is array-backed (one slot per bank) so a 60-day realization costs
a few milliseconds; a realization is strictly sequential and confined to
one worker, parallelism exists only across realizations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .balance import Bank, RWA_INTERBANK_WEIGHT, RWA_LOAN_WEIGHT
from .config import SimConfig
from .shocks import apply_fluctuations, stream

MAX_HORIZON_DAYS = 60

LOSS_GIVEN_DEFAULT = 1.0  # recovery on a defaulted debtor is zero


class PriceCollapseError(RuntimeError):
    """Price impact drove the bond price to zero or below (eta*|ED| >= 1)."""


@dataclass
class LoanBook:
    """One day's bilateral O/N exposures: matrix[creditor, debtor]."""

    ids: Sequence[str]
    matrix: np.ndarray

    @property
    def total(self) -> float:
        return float(self.matrix.sum())

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def entries(self) -> Iterator[tuple[str, str, float]]:
        """Yield (creditor id, debtor id, amount) for every positive loan."""
        for i, j in zip(*np.nonzero(self.matrix > 0.0)):
            yield self.ids[i], self.ids[j], float(self.matrix[i, j])


@dataclass
class CashPlan:
    """Per-bank cash supply (lendable) and demand (shortfall), disjoint."""

    supply: np.ndarray
    demand: np.ndarray

    @property
    def net(self) -> np.ndarray:
        """Signed form: positive = deficit to borrow, negative = supply."""
        return self.demand - self.supply


@dataclass(frozen=True)
class ClearingReport:
    """Outcome of one day's securities clearing."""

    excess_demand: float
    old_price: float
    new_price: float
    executed: np.ndarray


@dataclass(frozen=True)
class DayReport:
    day: int
    defaults_cum: int
    loan_volume: float
    bond_price: float
    total_cash: float
    trust_broken: bool


class SystemState:
    """All banks' balance sheets plus the loan book, price and trust flag.

    Bank slots are ordered by ascending id; defaulted banks keep their
    slots with frozen balance sheets.
    """

    def __init__(self, banks: Sequence[Bank], price: float = 1.0):
        banks = sorted(banks, key=lambda b: b.id)
        for bank in banks:
            if bank.floors is None:
                raise ValueError(f"bank {bank.id}: floors not calibrated")
        self.ids = [b.id for b in banks]
        as_arr = lambda get: np.array([get(b) for b in banks], dtype=float)
        self.loans = as_arr(lambda b: b.loans)
        self.cash = as_arr(lambda b: b.cash)
        self.securities = as_arr(lambda b: b.securities)
        self.deposits = as_arr(lambda b: b.deposits)
        self.ib_assets = as_arr(lambda b: b.interbank_assets)
        self.ib_liabs = as_arr(lambda b: b.interbank_liabilities)
        self.initial_cash = as_arr(lambda b: b.initial_cash)
        self.reserve_floor = as_arr(lambda b: b.floors.reserve_floor)
        self.liquidity_floor = as_arr(lambda b: b.floors.liquidity_floor)
        self.leverage_floor = as_arr(lambda b: b.floors.leverage_floor)
        self.car_floor = np.array(
            [np.nan if b.floors.car_floor is None else b.floors.car_floor for b in banks]
        )
        self.le_cap = as_arr(lambda b: b.floors.large_exposure_cap)
        self.alive = np.array([not b.defaulted for b in banks])
        self.default_day = np.array(
            [-1 if b.default_day is None else b.default_day for b in banks], dtype=int
        )
        self.prev_shock = np.zeros(len(banks))
        self.price = price
        self.trust_broken = False
        self.day = 0
        self.loan_book: LoanBook | None = None

    @property
    def n_banks(self) -> int:
        return len(self.ids)

    @property
    def n_defaulted(self) -> int:
        return int((~self.alive).sum())

    def total_assets(self) -> np.ndarray:
        return self.loans + self.cash + self.price * self.securities + self.ib_assets

    def equity(self) -> np.ndarray:
        # same expression shape as balance.equity, for day-0 bit parity
        return self.total_assets() - (self.deposits + self.ib_liabs)

    def total_cash(self) -> float:
        """System cash including the frozen accounts of defaulted banks."""
        return float(self.cash.sum())

    def to_banks(self) -> list[Bank]:
        """Snapshot the per-bank state back into Bank values (for checks)."""
        return [
            Bank(
                id=self.ids[i],
                loans=float(self.loans[i]),
                cash=float(self.cash[i]),
                securities=float(self.securities[i]),
                deposits=float(self.deposits[i]),
                interbank_assets=float(self.ib_assets[i]),
                interbank_liabilities=float(self.ib_liabs[i]),
                initial_cash=float(self.initial_cash[i]),
                default_day=None if self.default_day[i] < 0 else int(self.default_day[i]),
            )
            for i in range(self.n_banks)
        ]


def repay_overnight_loans(state: SystemState) -> float:
    """Settle yesterday's loan book; returns the total written off.

    Live debtors pay their full liability (cash may go negative intraday
    via the free overdraft); exposures to debtors that defaulted are lost
    in full, which lowers the creditor's equity through the balance-sheet
    identity. The book is then emptied and all interbank positions reset.
    """
    book = state.loan_book
    state.loan_book = None
    write_off = 0.0
    if book is not None and book.total > 0.0:
        paying = state.alive.astype(float)
        received = book.matrix @ paying
        paid = book.col_sums() * paying
        state.cash += received - paid
        write_off = book.total - float(received.sum())
    state.ib_assets[:] = 0.0
    state.ib_liabs[:] = 0.0
    return write_off


def _floor_satisfied(state: SystemState) -> tuple[np.ndarray, np.ndarray]:
    """Reserve and liquidity floor checks, written exactly like calibration.

    The expression shape matches calibrate_floors bit-for-bit so the day-0
    state passes its own floors and sigma = 0 is an exact fixed point.
    """
    reserve_ok = state.cash / state.deposits >= state.reserve_floor
    liquidity_ok = (
        state.cash + state.price * state.securities
    ) / state.deposits >= state.liquidity_floor
    return reserve_ok, liquidity_ok


def repurchase_amount(state: SystemState) -> np.ndarray:
    """Bond-issue repurchase restoring the leverage floor, before caps.

    Solves equity / (total_assets - D) = floor for D, then caps by what
    the reserve and liquidity floors allow and by outstanding deposits.
    Assumes the caller applies it only to banks with a cash surplus.
    """
    total_assets = state.total_assets()
    eq = total_assets - (state.deposits + state.ib_liabs)
    lack = total_assets - eq / state.leverage_floor
    max_reserve = np.maximum(
        (state.cash - state.reserve_floor * state.deposits) / (1.0 - state.reserve_floor),
        0.0,
    )
    max_liquidity = np.maximum(
        (state.cash + state.price * state.securities - state.liquidity_floor * state.deposits)
        / (1.0 - state.liquidity_floor),
        0.0,
    )
    amount = np.minimum(np.minimum(lack, state.deposits), np.minimum(max_reserve, max_liquidity))
    below_floor = eq / total_assets < state.leverage_floor
    return np.where(below_floor, np.maximum(amount, 0.0), 0.0)


def leverage_repurchase(state: SystemState) -> np.ndarray:
    """Apply the step-3 repurchase for live surplus banks; returns amounts."""
    reserve_ok, liquidity_ok = _floor_satisfied(state)
    eligible = state.alive & reserve_ok & liquidity_ok
    amount = np.where(eligible, repurchase_amount(state), 0.0)
    state.cash -= amount
    state.deposits -= amount
    return amount


def compute_cash_plan(state: SystemState, config: SimConfig) -> CashPlan:
    """Split live banks into lenders and borrowers and size both legs.

    A surplus bank offers cash above its reserve floor, cut to the trust
    fraction once trust is broken, then capped so that lending cannot
    breach the liquidity floor, the aggregate large-exposure cap, or the
    CAR floor (each cap only if its ratio is in force). A deficit bank
    demands the worse of its two shortfalls and ignores the other ratios.
    """
    reserve_ok, liquidity_ok = _floor_satisfied(state)
    surplus = state.alive & reserve_ok & liquidity_ok
    deficit = state.alive & ~surplus

    eq = state.equity()
    supply = state.cash - state.reserve_floor * state.deposits
    if config.trust_effect and state.trust_broken:
        supply = supply * config.trust_fraction
    supply = np.minimum(
        supply,
        np.maximum(
            state.cash + state.price * state.securities
            - state.liquidity_floor * state.deposits,
            0.0,
        ),
    )
    if "large_exposure" in config.ratios:
        supply = np.minimum(supply, np.maximum(state.le_cap * eq - state.ib_assets, 0.0))
    if "car" in config.ratios:
        car_cap = (eq / state.car_floor - RWA_LOAN_WEIGHT * state.loans) / RWA_INTERBANK_WEIGHT
        car_cap = np.where(np.isnan(state.car_floor), np.inf, car_cap)
        supply = np.minimum(supply, np.maximum(car_cap, 0.0))
    supply = np.where(surplus, np.maximum(supply, 0.0), 0.0)

    shortfall = np.maximum(
        state.reserve_floor * state.deposits - state.cash,
        state.liquidity_floor * state.deposits - state.cash - state.price * state.securities,
    )
    demand = np.where(deficit, np.maximum(shortfall, 0.0), 0.0)
    return CashPlan(supply=supply, demand=demand)


def match_interbank(state: SystemState, plan: CashPlan) -> LoanBook | None:
    """Create and execute today's loan book by proportional matching.

    Loan(i -> j) = Total * (supply_i / sum S) * (demand_j / sum D) with
    Total = min(sum S, sum D); every creditor lends to every debtor. The
    realized row/column sums move cash and the interbank positions, so
    book marginals and positions agree bit-for-bit.
    """
    total_supply = float(plan.supply.sum())
    total_demand = float(plan.demand.sum())
    total = min(total_supply, total_demand)
    if total <= 0.0:
        return None
    matrix = np.outer(plan.supply / total_supply, plan.demand / total_demand) * total
    book = LoanBook(ids=state.ids, matrix=matrix)
    granted = book.row_sums()
    received = book.col_sums()
    state.cash += received - granted
    state.ib_assets += granted
    state.ib_liabs += received
    state.loan_book = book
    return book


def compute_securities_demand(state: SystemState) -> np.ndarray:
    """Signed bond-unit demand bringing cash to the reserve target.

    Positive entries buy with surplus cash, negative sell to cover a
    deficit, floored at selling the entire holding. Defaulted banks place
    no orders.
    """
    target = state.reserve_floor * state.deposits
    units = (state.cash - target) / state.price
    units = np.maximum(units, -state.securities)
    return np.where(state.alive, units, 0.0)


def clear_securities_market(state: SystemState, demands: np.ndarray, eta: float) -> ClearingReport:
    """Move the price by eta times excess demand, then fill every order.

    All orders execute in full at the post-impact price; the market's
    other participants absorb the imbalance. A non-positive new price
    aborts the run, signalling eta * |ED| >= 1.
    """
    excess_demand = float(demands.sum())
    factor = 1.0 + eta * excess_demand
    if factor <= 0.0:
        raise PriceCollapseError(
            f"day {state.day}: price factor {factor:.6g} (eta={eta:g}, ED={excess_demand:.6g})"
        )
    old_price = state.price
    state.price = old_price * factor
    state.securities += demands
    state.cash -= demands * state.price
    return ClearingReport(
        excess_demand=excess_demand,
        old_price=old_price,
        new_price=state.price,
        executed=demands,
    )


def mark_defaults(state: SystemState) -> list[str]:
    """End-of-day default sweep: cash strictly below zero kills a bank."""
    newly = state.alive & (state.cash < 0.0)
    idx = np.flatnonzero(newly)
    if idx.size:
        state.alive[idx] = False
        state.default_day[idx] = state.day
    if not state.trust_broken and not state.alive.all():
        state.trust_broken = True
    return [state.ids[i] for i in idx]


def simulate_day(state: SystemState, config: SimConfig, rng: np.random.Generator) -> DayReport:
    """Advance the system by one day through the full step sequence."""
    state.day += 1
    if state.day >= 2:
        repay_overnight_loans(state)
    apply_fluctuations(state, rng, config.sigma)
    if "leverage" in config.ratios:
        leverage_repurchase(state)
    loan_volume = 0.0
    if config.interbank:
        plan = compute_cash_plan(state, config)
        book = match_interbank(state, plan)
        if book is not None:
            loan_volume = book.total
    if config.securities_market:
        demands = compute_securities_demand(state)
        clear_securities_market(state, demands, config.eta)
    mark_defaults(state)
    return DayReport(
        day=state.day,
        defaults_cum=state.n_defaulted,
        loan_volume=loan_volume,
        bond_price=state.price,
        total_cash=state.total_cash(),
        trust_broken=state.trust_broken,
    )


class SimulationResult:
    """Outcome of one realization: default record plus per-day diagnostics."""

    def __init__(self, ids: Sequence[str], default_day: np.ndarray, reports: list[DayReport]):
        self.ids = list(ids)
        self.default_day = default_day
        self.reports = reports

    @property
    def n_banks(self) -> int:
        return len(self.ids)

    @property
    def n_defaulted(self) -> int:
        return int((self.default_day >= 0).sum())

    @property
    def default_fraction(self) -> float:
        return self.n_defaulted / self.n_banks

    def default_day_histogram(self) -> dict[int, int]:
        """Map day -> number of banks that defaulted on that day."""
        days, counts = np.unique(self.default_day[self.default_day >= 0], return_counts=True)
        return {int(d): int(c) for d, c in zip(days, counts)}


def run_simulation(
    banks: Sequence[Bank],
    config: SimConfig,
    realization: int = 0,
) -> SimulationResult:
    """Run one seeded realization over the configured horizon."""
    if config.days > MAX_HORIZON_DAYS:
        warnings.warn(
            f"horizon {config.days} exceeds the model's {MAX_HORIZON_DAYS}-day validity",
            stacklevel=2,
        )
    state = SystemState(banks)
    rng = stream(config.seed, realization)
    reports = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(config.days):
            reports.append(simulate_day(state, config, rng))
    return SimulationResult(ids=state.ids, default_day=state.default_day.copy(), reports=reports)
