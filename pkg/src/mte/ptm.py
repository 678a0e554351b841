"""Three-symbol probabilistic emitters, their prime filter, and ensembles.

A machine emits ``0``, ``1`` or the halting symbol ``S`` i.i.d. on every
step; the output is the binary string written before ``S``.  Exact output
laws are available in closed form and serve as oracles for the samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sympy import isprime

from .primes import sieve_primes

DEFAULT_MAX_STEPS = 10**6
DEFAULT_MAX_ATTEMPTS = 10**6

_SMALL_LIMIT = 1 << 20
_SMALL_IS_PRIME = np.zeros(_SMALL_LIMIT, dtype=bool)
_SMALL_IS_PRIME[sieve_primes(_SMALL_LIMIT - 1)] = True


class PtmAbort(RuntimeError):
    """A run or a filtered sample hit its step/attempt budget."""

    def __init__(self, message: str, count: int, probability: float | None = None):
        super().__init__(message)
        self.count = count
        self.probability = probability


@dataclass(frozen=True)
class PtmParams:
    p0: float
    p1: float
    pS: float

    def __post_init__(self):
        for name in ("p0", "p1", "pS"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} must lie strictly inside (0, 1)")
        if abs(self.p0 + self.p1 + self.pS - 1.0) > 1e-12:
            raise ValueError(f"p0 + p1 + pS = {self.p0 + self.p1 + self.pS}, expected 1")


@dataclass(frozen=True)
class Ensemble:
    components: tuple[PtmParams, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.components:
            raise ValueError("ensemble needs at least one component")
        if len(self.components) != len(self.weights):
            raise ValueError("one weight per component required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("ensemble weights must be strictly positive")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"ensemble weights sum to {math.fsum(self.weights)}, expected 1")


@dataclass(frozen=True)
class PrimeLaw:
    """A pmf over an ascending array of primes.

    ``remainder`` bounds the probability (before conditioning) that was
    dropped by truncating the support.
    """

    primes: np.ndarray
    masses: np.ndarray
    remainder: float = 0.0

    def mass(self, p: int) -> float:
        i = np.searchsorted(self.primes, p)
        if i < len(self.primes) and self.primes[i] == p:
            return float(self.masses[i])
        return 0.0

    def as_dict(self) -> dict[int, float]:
        return {int(p): float(m) for p, m in zip(self.primes, self.masses) if m > 0}


def is_prime(n: int) -> bool:
    if n < _SMALL_LIMIT:
        return bool(_SMALL_IS_PRIME[n])
    return bool(isprime(n))


def ptm_run(params: PtmParams, rng: np.random.Generator, max_steps: int = DEFAULT_MAX_STEPS) -> str:
    """Run the emitter until it halts and return the written bits."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    pieces = []
    steps = 0
    chunk = 32
    while steps < max_steps:
        n = min(chunk, max_steps - steps)
        u = rng.random(n)
        halt = np.flatnonzero(u >= params.p0 + params.p1)
        stop = int(halt[0]) if halt.size else n
        # u < p0 writes a 0, p0 <= u < p0 + p1 writes a 1
        pieces.append(((u[:stop] >= params.p0).astype(np.uint8) + 48).tobytes().decode())
        if halt.size:
            return "".join(pieces)
        steps += n
        chunk *= 2
    raise PtmAbort(
        f"machine did not halt within {max_steps} steps",
        max_steps,
        probability=(1.0 - params.pS) ** max_steps,
    )


def bin_value(bits: str) -> int:
    return int(bits, 2) if bits else 0


def string_prob(params: PtmParams, bits: str) -> float:
    ones = bits.count("1")
    zeros = len(bits) - ones
    return params.pS * params.p0**zeros * params.p1**ones


def integer_prob_exact(params: PtmParams, n: int) -> float:
    """Probability that the output evaluates to ``n``, leading zeros included."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return params.pS / (1.0 - params.p0)
    ones = bin(n).count("1")
    zeros = n.bit_length() - ones
    return params.pS * params.p0**zeros * params.p1**ones / (1.0 - params.p0)


def _integer_probs(params: PtmParams, primes: np.ndarray) -> np.ndarray:
    ones = np.bitwise_count(primes.astype(np.uint64)).astype(np.float64)
    _, bits = np.frexp(primes.astype(np.float64))
    zeros = bits - ones
    log_w = zeros * math.log(params.p0) + ones * math.log(params.p1)
    return params.pS * np.exp(log_w) / (1.0 - params.p0)


def prime_event_mass(params: PtmParams, p_max: int, primes: np.ndarray | None = None) -> float:
    """P(output is a prime <= p_max)."""
    if primes is None:
        primes = sieve_primes(p_max)
    return math.fsum(_integer_probs(params, primes).tolist())


def _truncation_remainder(params: PtmParams, p_max: int) -> float:
    # any output above p_max has at least bit_length(p_max) symbols
    return (1.0 - params.pS) ** int(p_max).bit_length()


def prime_conditional_exact(params: PtmParams, p_max: int, primes: np.ndarray | None = None) -> PrimeLaw:
    if primes is None:
        primes = sieve_primes(p_max)
    w = _integer_probs(params, primes)
    return PrimeLaw(primes, w / math.fsum(w.tolist()), _truncation_remainder(params, p_max))


def sample_prime_filtered(
    params: PtmParams,
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> int:
    """Rerun the machine until its output evaluates to a prime."""
    for _ in range(max_attempts):
        n = bin_value(ptm_run(params, rng, max_steps))
        if is_prime(n):
            return n
    raise PtmAbort(f"no prime output after {max_attempts} attempts", max_attempts)


def mixture_law(ens: Ensemble, p_max: int) -> PrimeLaw:
    primes = sieve_primes(p_max)
    laws = [prime_conditional_exact(c, p_max, primes) for c in ens.components]
    masses = sum(w * law.masses for w, law in zip(ens.weights, laws))
    remainder = max(law.remainder for law in laws)
    return PrimeLaw(primes, masses, remainder)


def latent_choice_law(ens: Ensemble, p_max: int) -> PrimeLaw:
    """Exact law of a single machine that draws its component internally on
    every run and is filtered on its final output.

    Because rejected runs redraw the component, components are reweighted
    by their prime-event probability: w_i P_i(Prime) / sum_j w_j P_j(Prime).
    """
    primes = sieve_primes(p_max)
    raw = [w * _integer_probs(c, primes) for w, c in zip(ens.weights, ens.components)]
    total = sum(raw)
    masses = total / math.fsum(total.tolist())
    remainder = max(_truncation_remainder(c, p_max) for c in ens.components)
    return PrimeLaw(primes, masses, remainder)


def _choose(weights, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    return min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(cum) - 1)


def ensemble_sample(
    ens: Ensemble,
    mode: str,
    rng: np.random.Generator,
    size: int = 1,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> np.ndarray:
    """Draw ``size`` primes from the ensemble by one of three procedures.

    ``A``: pick a component, then filter its runs until a prime appears.
    ``B``: pre-draw the component index of every observation up front, then
    run each observation's fixed component until it yields a prime.
    ``C``: a single machine that picks its component internally at the start
    of every run; whole runs are filtered, so a rejection redraws the
    component as well.
    """
    mode = mode.upper()
    out = np.empty(size, dtype=object)
    if mode == "A":
        for j in range(size):
            out[j] = sample_prime_filtered(ens.components[_choose(ens.weights, rng)], rng, max_attempts)
    elif mode == "B":
        index_rng, run_rng = rng.spawn(2)
        cum = np.cumsum(ens.weights)
        idx = np.minimum(np.searchsorted(cum, index_rng.random(size) * cum[-1], side="right"), len(cum) - 1)
        for j in range(size):
            out[j] = sample_prime_filtered(ens.components[idx[j]], run_rng, max_attempts)
    elif mode == "C":
        for j in range(size):
            for _ in range(max_attempts):
                comp = ens.components[_choose(ens.weights, rng)]
                n = bin_value(ptm_run(comp, rng))
                if is_prime(n):
                    out[j] = n
                    break
            else:
                raise PtmAbort(f"no prime output after {max_attempts} attempts", max_attempts)
    else:
        raise ValueError(f"unknown ensemble mode {mode!r}; expected A, B or C")
    return out


def coarse_cells(values, small: int = 64, max_bits: int = 24) -> np.ndarray:
    """Cell index per value: one cell per prime below ``small``, then one per
    bit length, with everything of ``max_bits`` bits or more in the last cell.

    Comparing laws on these cells keeps every cell populated at desk-scale
    sample sizes while still resolving the head of the law exactly.
    """
    head = sieve_primes(small - 1).tolist()
    base = len(head)
    first_bits = small.bit_length()
    out = np.empty(len(values), dtype=np.int64)
    for j, v in enumerate(values):
        v = int(v)
        if v < small:
            out[j] = head.index(v)
        else:
            out[j] = base + min(v.bit_length(), max_bits) - first_bits
    return out


def n_cells(small: int = 64, max_bits: int = 24) -> int:
    return len(sieve_primes(small - 1)) + max_bits - small.bit_length() + 1


def coarse_law(law: PrimeLaw, small: int = 64, max_bits: int = 24) -> np.ndarray:
    cells = coarse_cells(law.primes.tolist(), small, max_bits)
    return np.bincount(cells, weights=law.masses, minlength=n_cells(small, max_bits))


def cell_frequencies(values, small: int = 64, max_bits: int = 24) -> np.ndarray:
    counts = np.bincount(coarse_cells(values, small, max_bits), minlength=n_cells(small, max_bits))
    return counts / len(values)


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64)).sum())
