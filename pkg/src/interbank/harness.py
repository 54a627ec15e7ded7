"""Experiment orchestration: ensembles, sigma sweeps, and figure suites.

A realization is one seeded simulation; realization r draws from the
stream split off (seed, r), so ensembles are embarrassingly parallel and
the reduction happens in realization-index order whether the run is
sequential or pooled. Failed realizations (price collapse) are recorded
per point, never retried and never silently dropped.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .analytics import (
    SweepPoint,
    aggregate_sweep,
    analytic_no_market_fraction,
    analytic_securities_fraction,
)
from .balance import Bank, with_floors
from .config import ALL_RATIOS, SimConfig, TWO_RATIOS
from .data import BankRecord, DataError
from .engine import PriceCollapseError, SimulationResult, run_simulation
from .reports import write_sweep_csv

PRICE0 = 1.0

DEFAULT_SIGMA_GRID = tuple(np.arange(0.0, 8.25, 0.25))


class AllRealizationsFailedError(RuntimeError):
    """Every realization of an ensemble aborted (model error, not a bug)."""


def prepare_banks(records: Sequence[BankRecord], price0: float = PRICE0) -> list[Bank]:
    """Turn validated records into banks with calibrated floors."""
    if not records:
        raise DataError("no banks: refusing to run an empty system")
    return [with_floors(r.to_bank(), price0) for r in records]


@dataclass
class EnsembleResult:
    """Default fractions of one (sigma, config) ensemble, failures apart."""

    sigma: float
    config_id: str
    fractions: list[float] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    def point(self) -> SweepPoint:
        if not self.fractions:
            raise AllRealizationsFailedError(
                f"sigma={self.sigma:g}: all {len(self.failures)} realizations failed "
                f"({self.failures[0][1]})"
            )
        return aggregate_sweep(self.sigma, self.config_id, self.fractions)


def _run_one(banks: Sequence[Bank], config: SimConfig, realization: int) -> float | str:
    try:
        return run_simulation(banks, config, realization=realization).default_fraction
    except PriceCollapseError as exc:
        return str(exc)


_POOL_BANKS: Sequence[Bank] | None = None
_POOL_CONFIG: SimConfig | None = None


def _pool_init(banks: Sequence[Bank], config: SimConfig) -> None:
    global _POOL_BANKS, _POOL_CONFIG
    _POOL_BANKS = banks
    _POOL_CONFIG = config


def _pool_task(args: tuple[float, int]) -> float | str:
    sigma, realization = args
    return _run_one(_POOL_BANKS, _POOL_CONFIG.with_sigma(sigma), realization)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def _collect(
    sigmas: Sequence[float],
    config: SimConfig,
    outcomes: Sequence[float | str],
) -> list[EnsembleResult]:
    results = []
    n = config.realizations
    fingerprint = config.fingerprint()
    for k, sigma in enumerate(sigmas):
        result = EnsembleResult(sigma=float(sigma), config_id=fingerprint)
        for r, outcome in enumerate(outcomes[k * n : (k + 1) * n]):
            if isinstance(outcome, str):
                result.failures.append((r, outcome))
            else:
                result.fractions.append(outcome)
        results.append(result)
    return results


def run_ensembles(
    banks: Sequence[Bank],
    sigmas: Sequence[float],
    config: SimConfig,
    workers: int | None = None,
) -> list[EnsembleResult]:
    """Run the full (sigma grid) x (realizations) ensemble, in order.

    Pooled and sequential execution produce identical results: tasks are
    keyed (sigma index, realization) and reduced in submission order.
    """
    workers = default_workers() if workers is None else max(1, workers)
    tasks = [(float(sigma), r) for sigma in sigmas for r in range(config.realizations)]
    if workers == 1 or len(tasks) == 1:
        outcomes = [_run_one(banks, config.with_sigma(s), r) for s, r in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_pool_init, initargs=(banks, config)
        ) as pool:
            outcomes = list(pool.map(_pool_task, tasks, chunksize=chunk))
    return _collect(sigmas, config, outcomes)


@dataclass
class SweepResult:
    points: list[SweepPoint]
    failures: list[tuple[float, int, str]]
    elapsed_s: float


def run_sweep(
    banks: Sequence[Bank],
    sigmas: Sequence[float],
    config: SimConfig,
    workers: int | None = None,
) -> SweepResult:
    """Sweep sigma over the grid and aggregate each point's ensemble."""
    if not len(sigmas):
        raise ValueError("empty sigma grid")
    start = time.perf_counter()
    ensembles = run_ensembles(banks, sigmas, config, workers)
    points = [e.point() for e in ensembles]
    failures = [(e.sigma, r, msg) for e in ensembles for r, msg in e.failures]
    return SweepResult(points=points, failures=failures, elapsed_s=time.perf_counter() - start)


def analytic_curve(
    sigmas: Sequence[float],
    config: SimConfig,
    banks: Sequence[Bank] | None = None,
    corrected: bool = True,
) -> list[SweepPoint]:
    """Closed-form baseline as sweep points (n_realizations = 0).

    With ``banks`` given, uses the fixed-price securities form; otherwise
    the no-markets form.
    """
    label = "analytic-securities" if banks is not None else "analytic-no-markets"
    if not corrected:
        label += "-uncorrected"
    points = []
    for sigma in sigmas:
        if banks is not None:
            value = analytic_securities_fraction(banks, PRICE0, float(sigma), config.days, corrected)
        else:
            value = analytic_no_market_fraction(float(sigma), config.days, corrected)
        points.append(
            SweepPoint(
                sigma=float(sigma),
                config_id=f"{label}_T{config.days}",
                mean_default_fraction=value,
                std_error=0.0,
                n_realizations=0,
            )
        )
    return points


def figure_suite_configs(template: SimConfig) -> dict[str, dict[str, SimConfig | str]]:
    """The per-figure curve configurations behind the reported ablations.

    Figure 1 varies the market channels without the trust effect, figure 2
    toggles the trust effect, figure 3 adds the remaining three ratios on
    top of the trust-on system. Curves shared between figures reuse the
    same configuration (and thus the same output file).
    """
    def variant(**kwargs) -> SimConfig:
        merged = dict(
            interbank=template.interbank,
            securities_market=template.securities_market,
            trust_effect=template.trust_effect,
            ratios=template.ratios,
            eta=template.eta,
        )
        merged.update(kwargs)
        return SimConfig(
            sigma=0.0,
            days=template.days,
            realizations=template.realizations,
            seed=template.seed,
            trust_fraction=template.trust_fraction,
            **merged,
        )

    base = dict(ratios=TWO_RATIOS, trust_effect=False)
    fig1 = {
        "analytic no markets": "analytic-no-markets",
        "analytic securities eta=0": "analytic-securities",
        "no markets": variant(interbank=False, securities_market=False, **base),
        "eta=0 no interbank": variant(eta=0.0, interbank=False, **base),
        "eta=0 interbank": variant(eta=0.0, interbank=True, **base),
        "eta=1e-6 no interbank": variant(eta=1e-6, interbank=False, **base),
        "eta=1e-6 interbank": variant(eta=1e-6, interbank=True, **base),
    }
    fig2 = {
        "eta=0 no trust": variant(eta=0.0, ratios=TWO_RATIOS, trust_effect=False),
        "eta=0 trust": variant(eta=0.0, ratios=TWO_RATIOS, trust_effect=True),
        "eta=1e-6 no trust": variant(eta=1e-6, ratios=TWO_RATIOS, trust_effect=False),
        "eta=1e-6 trust": variant(eta=1e-6, ratios=TWO_RATIOS, trust_effect=True),
    }
    fig3 = {
        "eta=0 two ratios": variant(eta=0.0, ratios=TWO_RATIOS, trust_effect=True),
        "eta=0 all ratios": variant(eta=0.0, ratios=ALL_RATIOS, trust_effect=True),
        "eta=1e-6 two ratios": variant(eta=1e-6, ratios=TWO_RATIOS, trust_effect=True),
        "eta=1e-6 all ratios": variant(eta=1e-6, ratios=ALL_RATIOS, trust_effect=True),
    }
    return {"fig1": fig1, "fig2": fig2, "fig3": fig3}


def run_figure_suite(
    banks: Sequence[Bank],
    out_dir: str | Path,
    template: SimConfig,
    sigmas: Sequence[float] = DEFAULT_SIGMA_GRID,
    workers: int | None = None,
) -> dict:
    """Produce every curve CSV for the three ablation figures.

    Returns a manifest mapping figure -> curve label -> file name; the
    caller is responsible for writing it and for any plot rendering.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"sigma_grid": [float(s) for s in sigmas], "figures": {}}
    failures: list[tuple[float, int, str]] = []
    written: set[str] = set()
    suite = figure_suite_configs(template)
    for figure, curves in suite.items():
        manifest["figures"][figure] = {}
        for label, config in curves.items():
            if isinstance(config, str):
                analytic_banks = banks if config == "analytic-securities" else None
                points = analytic_curve(sigmas, template, banks=analytic_banks)
                filename = f"{points[0].config_id}.csv"
                if filename not in written:
                    write_sweep_csv(points, out_dir / filename, template)
                    written.add(filename)
            else:
                filename = f"{config.fingerprint()}.csv"
                if filename not in written:
                    sweep = run_sweep(banks, sigmas, config, workers)
                    write_sweep_csv(sweep.points, out_dir / filename, config)
                    failures.extend(sweep.failures)
                    written.add(filename)
            manifest["figures"][figure][label] = filename
    manifest["failures"] = [
        {"sigma": s, "realization": r, "error": msg} for s, r, msg in failures
    ]
    return manifest
