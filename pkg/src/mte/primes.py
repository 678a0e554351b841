"""Truncated Gibbs priors on the primes, built from omega codelengths."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import expi

from .omega import omega_len, omega_len_array

DEFAULT_P_MAX = 10**6


def sieve_primes(p_max: int) -> np.ndarray:
    """All primes in [2, p_max] as an ascending int64 array (odd-only sieve)."""
    if p_max < 2:
        raise ValueError(f"p_max must be >= 2, got {p_max}")
    if p_max < 3:
        return np.array([2], dtype=np.int64)
    # index i stands for 2*i + 1
    size = (p_max - 1) // 2 + 1
    odd = np.ones(size, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(p_max) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2 :: p] = False
    primes = 2 * np.flatnonzero(odd).astype(np.int64) + 1
    return np.concatenate(([2], primes))


@dataclass(frozen=True)
class PrimePrior:
    """pi_p proportional to 2**(-beta * omega_len(p)) on primes <= p_max.

    ``log_norm`` is log2 of the unnormalized weight sum.  Instances are
    immutable and safe to share between workers.
    """

    beta: float
    p_max: int
    primes: np.ndarray
    masses: np.ndarray
    log_norm: float
    lengths: np.ndarray = field(repr=False)
    _cdf: np.ndarray = field(repr=False)
    _tail: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.primes)

    @property
    def prior_id(self) -> str:
        return f"omega-gibbs(beta={self.beta!r},p_max={self.p_max})"

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "p_max": self.p_max,
            "primes": self.primes.tolist(),
            "masses": self.masses.tolist(),
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


def _from_masses(beta: float, p_max: int, primes: np.ndarray, masses: np.ndarray, log_norm: float) -> PrimePrior:
    masses = np.asarray(masses, dtype=np.float64)
    cdf = np.cumsum(masses)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    # tail[i] = sum of masses[i:], accumulated from the small end
    tail = np.cumsum(masses[::-1])[::-1]
    tail = np.append(tail, 0.0)
    return PrimePrior(
        beta=float(beta),
        p_max=int(p_max),
        primes=primes,
        masses=masses,
        log_norm=float(log_norm),
        lengths=omega_len_array(primes),
        _cdf=cdf,
        _tail=tail,
    )


def build_prior(beta: float, p_max: int = DEFAULT_P_MAX, primes: np.ndarray | None = None) -> PrimePrior:
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if primes is None:
        primes = sieve_primes(p_max)
    weights, log_norm = _gibbs_weights(beta, omega_len_array(primes))
    return _from_masses(beta, p_max, primes, weights / math.fsum(weights.tolist()), log_norm)


def _gibbs_weights(beta: float, lengths: np.ndarray) -> tuple[np.ndarray, float]:
    # shift by the shortest length so the largest weight is exactly 1
    shift = int(lengths.min())
    weights = np.exp2(-beta * (lengths - shift).astype(np.float64))
    return weights, math.log2(math.fsum(weights.tolist())) - beta * shift


def load_prior(path: str | Path) -> PrimePrior:
    doc = json.loads(Path(path).read_text())
    primes = np.asarray(doc["primes"], dtype=np.int64)
    masses = np.asarray(doc["masses"], dtype=np.float64)
    if len(primes) != len(masses) or len(primes) == 0:
        raise ValueError(f"{path}: primes and masses must be nonempty and aligned")
    _, log_norm = _gibbs_weights(doc["beta"], omega_len_array(primes))
    return _from_masses(doc["beta"], doc["p_max"], primes, masses, log_norm)


def prior_mass(prior: PrimePrior, p: int) -> float:
    i = np.searchsorted(prior.primes, p)
    if i < len(prior.primes) and prior.primes[i] == p:
        return float(prior.masses[i])
    return 0.0


def sample_prime(prior: PrimePrior, rng: np.random.Generator, size: int | None = None):
    """Draw primes by inverse-CDF lookup; a single int when ``size`` is None."""
    u = rng.random(size)
    idx = np.searchsorted(prior._cdf, u, side="right")
    out = prior.primes[idx]
    return int(out) if size is None else out


def tail_mass(prior: PrimePrior, y: float) -> float:
    """Exact sum of pi_p over supported primes p > y."""
    return float(prior._tail[np.searchsorted(prior.primes, y, side="right")])


def tail_mass_array(prior: PrimePrior, y) -> np.ndarray:
    return prior._tail[np.searchsorted(prior.primes, np.asarray(y, dtype=np.float64), side="right")]


@dataclass(frozen=True)
class Moments:
    mean_log2_P: float
    mean_len_P: float
    mean_ln_P: float


def moments(prior: PrimePrior) -> Moments:
    m = prior.masses
    log2p = np.log2(prior.primes.astype(np.float64))
    return Moments(
        mean_log2_P=math.fsum((m * log2p).tolist()),
        mean_len_P=math.fsum((m * prior.lengths).tolist()),
        mean_ln_P=math.fsum((m * np.log(prior.primes.astype(np.float64))).tolist()),
    )


def moments_exact(beta: Fraction | int, p_max: int) -> tuple[Fraction, Fraction]:
    """Exact rational oracle for integer beta.

    Returns the mass of 2 and E[omega_len(P)] as exact fractions.
    """
    beta = int(beta)
    primes = [int(p) for p in sieve_primes(p_max)]
    weights = [Fraction(1, 2 ** (beta * omega_len(p))) for p in primes]
    z = sum(weights)
    mean_len = sum(w * omega_len(p) for w, p in zip(weights, primes)) / z
    return weights[0] / z, mean_len


def divergence_diagnostic(beta: float, cutoffs) -> list[float]:
    """E[ln P] under the prior truncated at each cutoff.

    For beta > 1 the values settle; at beta = 1 they keep climbing.
    """
    cutoffs = [int(c) for c in cutoffs]
    if any(b < a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be ascending")
    all_primes = sieve_primes(max(cutoffs))
    out = []
    for c in cutoffs:
        primes = all_primes[: np.searchsorted(all_primes, c, side="right")]
        out.append(moments(build_prior(beta, c, primes=primes)).mean_ln_P)
    return out


def _log2_prime_count(k: int, lo: float) -> float:
    """log2 of the approximate number of primes in (lo, 2**k]."""
    if k < 60:
        # li(x) = Ei(ln x)
        count = float(expi(k * math.log(2)) - expi(math.log(max(lo, 2.0))))
        return math.log2(count) if count > 0 else -math.inf
    # prime number theorem, block (2**(k-1), 2**k]
    return (k - 1) - math.log2(k * math.log(2))


def truncation_bias(prior: PrimePrior, max_bits: int = 4096) -> float:
    """Estimated share of the untruncated weight lying above p_max.

    Prime counts above the cutoff come from the logarithmic integral, one
    bit-length block at a time.  Returns ``inf`` for beta < 1, where the
    tail sum diverges.
    """
    if prior.beta < 1:
        return math.inf
    k0 = int(prior.p_max).bit_length()
    tail = 0.0
    lo = float(prior.p_max)
    for k in range(k0, max_bits + 1):
        log_w = _log2_prime_count(k, lo) - prior.beta * (k + omega_len(k - 1)) - prior.log_norm
        if log_w > -1000:
            tail += 2.0**log_w
        lo = 2.0 ** min(k, 1000)
    return tail / (1.0 + tail)
