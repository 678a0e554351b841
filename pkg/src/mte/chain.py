"""Multiplicative chain X_{t+1} = X_t * P_{t+1} with exact integer state."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .omega import omega_len
from .primes import PrimePrior, sample_prime

DEFAULT_THIN = 100
LN2 = math.log(2.0)


@dataclass
class Trajectory:
    """Recorded steps of one chain.

    Arrays are aligned per record.  ``cum_len_P`` is the running sum of
    omega_len over all multipliers drawn up to ``t`` (thinned steps included).
    """

    t: np.ndarray
    prime: np.ndarray
    log2_X: np.ndarray
    len_X: np.ndarray
    cum_len_P: np.ndarray
    seed: int | None
    prior_id: str
    final_state: int = field(repr=False, default=1)
    states: list[int] | None = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for i in range(len(self.t)):
            yield int(self.t[i]), int(self.prime[i]), float(self.log2_X[i]), int(self.len_X[i])


def _as_rng(seed) -> tuple[np.random.Generator, int | None]:
    if isinstance(seed, np.random.Generator):
        return seed, None
    return np.random.default_rng(seed), int(seed) if isinstance(seed, (int, np.integer)) else None


def simulate(
    prior: PrimePrior,
    T: int,
    rng: np.random.Generator | int,
    thin: int = DEFAULT_THIN,
    keep_states: bool = False,
) -> Trajectory:
    """Run T steps from X_0 = 1, recording every ``thin``-th step and the last."""
    if T < 1 or thin < 1:
        raise ValueError("T and thin must be >= 1")
    gen, seed = _as_rng(rng)
    draws = sample_prime(prior, gen, size=T)
    draw_lens = prior.lengths[np.searchsorted(prior.primes, draws)]
    cum = np.cumsum(draw_lens)
    rec_t, rec_p, rec_log, rec_len, rec_cum = [], [], [], [], []
    states = [] if keep_states else None
    x = 1
    for i, p in enumerate(draws.tolist()):
        x *= p
        t = i + 1
        if t % thin == 0 or t == T:
            rec_t.append(t)
            rec_p.append(p)
            rec_log.append(math.log2(x))
            rec_len.append(omega_len(x))
            rec_cum.append(int(cum[i]))
            if keep_states:
                states.append(x)
    return Trajectory(
        t=np.array(rec_t, dtype=np.int64),
        prime=np.array(rec_p, dtype=np.int64),
        log2_X=np.array(rec_log),
        len_X=np.array(rec_len, dtype=np.int64),
        cum_len_P=np.array(rec_cum, dtype=np.int64),
        seed=seed,
        prior_id=prior.prior_id,
        final_state=x,
        states=states,
    )


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Per-trajectory seeds fixed by the master seed alone."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(2, dtype=np.uint64)[0]) for c in children]


def _simulate_job(args):
    prior, T, seed, thin = args
    return simulate(prior, T, seed, thin)


def simulate_many(
    prior: PrimePrior,
    T: int,
    master_seed: int,
    n_seeds: int,
    thin: int = DEFAULT_THIN,
    workers: int = 1,
) -> list[Trajectory]:
    """Independent trajectories in seed order; output does not depend on ``workers``."""
    jobs = [(prior, T, s, thin) for s in derive_seeds(master_seed, n_seeds)]
    if workers <= 1:
        return [_simulate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_job, jobs))


@dataclass(frozen=True)
class AveragingRow:
    t: int
    len_X_per_t: float
    running_mean_len_P: float
    log2_X_per_t: float


def averaging_series(traj: Trajectory) -> list[AveragingRow]:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return [
        AveragingRow(int(t), lx / t, c / t, lg / t)
        for t, lx, c, lg in zip(traj.t.tolist(), traj.len_X.tolist(), traj.cum_len_P.tolist(), traj.log2_X.tolist())
    ]


def growth_rate(traj: Trajectory) -> float:
    """ln(X_T) / T in nats per step."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return float(traj.log2_X[-1]) * LN2 / int(traj.t[-1])


def gap_samples(prior: PrimePrior, x: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """N draws of the additive gap x * (P - 1) given the current state x."""
    if x < 1 or N < 1:
        raise ValueError("x and N must be >= 1")
    p = sample_prime(prior, rng, size=N)
    if x * (int(prior.primes[-1]) - 1) < 2**62:
        return int(x) * (p - 1)
    return np.array([int(x) * (int(q) - 1) for q in p], dtype=object)
