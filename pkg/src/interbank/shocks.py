"""Seeded random streams and the daily cash-shock process.

Generator choice is pinned for cross-platform replay: numpy's PCG64 bit
generator seeded through ``SeedSequence((seed, realization))`` — the
splitting rule for independent ensemble members — with standard normals
produced by the inverse-CDF transform (scipy's ``ndtri``) applied to
53-bit uniforms. One normal draw consumes exactly one uniform; a zero
uniform (probability 2^-53) is clamped to 2^-54 to keep the quantile
finite.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MIN_UNIFORM = 2.0 ** -54


def stream(seed: int, realization: int = 0) -> np.random.Generator:
    """Independent generator for one realization of the ensemble."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, realization))))


def standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard-normal draws, one uniform consumed per draw."""
    u = rng.random(n)
    if u.size and u.min() <= 0.0:
        u = np.maximum(u, _MIN_UNIFORM)
    return ndtri(u)


def draw_shock(rng: np.random.Generator, initial_cash, sigma: float):
    """One day's cash shock, initial_cash * sigma * N(0,1), per bank.

    ``initial_cash`` may be a scalar or an array; one normal is drawn per
    entry, advancing the stream by exactly that many draws (also when
    sigma is 0).
    """
    z = standard_normals(rng, np.size(initial_cash))
    out = np.asarray(initial_cash, dtype=float) * sigma * z
    return out if np.ndim(initial_cash) else float(out[0])


def apply_fluctuations(state, rng: np.random.Generator, sigma: float) -> None:
    """Revert yesterday's shocks and apply today's, live banks only.

    Draws are taken in ascending bank order so runs replay bit-for-bit.
    Defaulted banks are skipped entirely: their last shock is never
    reverted and no new draws are consumed for them.
    """
    live = np.flatnonzero(state.alive)
    if live.size == 0:
        return
    new = draw_shock(rng, state.initial_cash[live], sigma)
    state.cash[live] += new - state.prev_shock[live]
    state.prev_shock[live] = new
