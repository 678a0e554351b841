"""Survival curves, tail-index estimates and exact gap-tail oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .primes import PrimePrior, tail_mass_array


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class Ccdf:
    """Survival levels at ascending values: levels[i] = P(X > values[i])."""

    values: np.ndarray
    levels: np.ndarray

    def __call__(self, v):
        idx = np.searchsorted(self.values, np.asarray(v, dtype=np.float64), side="right") - 1
        lv = np.where(idx >= 0, self.levels[np.maximum(idx, 0)], 1.0)
        return float(lv) if np.ndim(v) == 0 else lv


def empirical_ccdf(samples) -> Ccdf:
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise ValueError("empirical_ccdf needs at least one sample")
    values, counts = np.unique(x, return_counts=True)
    levels = 1.0 - np.cumsum(counts) / x.size
    return Ccdf(values, np.clip(levels, 0.0, 1.0))


def tabulated_ccdf(values, levels) -> Ccdf:
    return Ccdf(np.asarray(values, dtype=np.float64), np.asarray(levels, dtype=np.float64))


def loglog_slope(ccdf: Ccdf, u_lo: float, u_hi: float, slow_beta: float | None = None, x: float = 1.0) -> float:
    """Least-squares slope of log survival against log u on [u_lo, u_hi].

    With ``slow_beta`` set, the survival is first divided by
    ``log(1 + u/x) ** -slow_beta`` to strip the logarithmic slow variation.
    """
    mask = (ccdf.values >= u_lo) & (ccdf.values <= u_hi) & (ccdf.levels > 0)
    u = ccdf.values[mask]
    s = ccdf.levels[mask]
    if np.unique(s).size < 10:
        raise FitError(f"window [{u_lo}, {u_hi}] holds {np.unique(s).size} distinct survival levels; need >= 10")
    if slow_beta is not None:
        s = s * np.log1p(u / x) ** slow_beta
    slope, _ = np.polyfit(np.log(u), np.log(s), 1)
    return float(slope)


def hill_estimator(samples, k: int) -> float:
    """Hill tail index 1/gamma from the top ``k`` order statistics."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < {n}, got k={k}")
    if x[0] <= 0:
        raise ValueError("Hill estimator needs strictly positive samples")
    logs = np.log(x)
    gamma = logs[n - k :].mean() - logs[n - k - 1]
    return math.inf if gamma <= 0 else 1.0 / gamma


def default_hill_k(n: int) -> int:
    return math.ceil(math.sqrt(n))


def conditional_gap_tail_exact(prior: PrimePrior, x: float, u):
    """P(G > u | X = x) = P(P > 1 + u/x), exact over the truncated prior."""
    if x <= 0:
        raise ValueError("x must be > 0")
    out = tail_mass_array(prior, 1.0 + np.asarray(u, dtype=np.float64) / x)
    return float(out) if np.ndim(u) == 0 else out


@dataclass(frozen=True)
class MixingMeasure:
    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("mixing measure needs at least one atom")
        if any(x <= 0 or w <= 0 for x, w in atoms):
            raise ValueError("atoms need positive location and weight")
        if abs(math.fsum(w for _, w in atoms) - 1.0) > 1e-12:
            raise ValueError("atom weights must sum to 1")

    @classmethod
    def from_dict(cls, doc) -> "MixingMeasure":
        return cls(tuple((a["x"], a["weight"]) for a in doc["atoms"]))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        xs = np.array([x for x, _ in self.atoms])
        ws = np.array([w for _, w in self.atoms])
        return xs[rng.choice(len(xs), size=size, p=ws / ws.sum())]


def mixture_gap_tail(prior: PrimePrior, nu: MixingMeasure, u):
    total = sum(w * conditional_gap_tail_exact(prior, x, u) for x, w in nu.atoms)
    return float(total) if np.ndim(u) == 0 else total


def dkw_epsilon(n: int, alpha: float) -> float:
    """Half-width of the two-sided DKW band at confidence 1 - alpha."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class BandCheck:
    n: int
    epsilon: float
    max_deviation: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def dkw_check(samples, exact_survival, support, alpha: float = 1e-6) -> BandCheck:
    """Compare the empirical survival with an exact one at every support point.

    For a discrete law whose jumps all lie in ``support`` this covers the
    supremum distance, left limits included.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    pts = np.unique(np.asarray(support, dtype=np.float64))
    emp = 1.0 - np.searchsorted(x, pts, side="right") / x.size
    dev = np.abs(emp - exact_survival(pts))
    eps = dkw_epsilon(x.size, alpha)
    return BandCheck(int(x.size), eps, float(dev.max()), int((dev > eps).sum()))


def gap_support(prior: PrimePrior, x: float) -> np.ndarray:
    return x * (prior.primes.astype(np.float64) - 1.0)


def default_window(exact_survival, n: int, u_max: float, grid: int = 20000) -> tuple[float, float]:
    """One decade ending where the exact survival first drops below 100/n."""
    u = np.logspace(0.0, math.log10(u_max), grid)
    below = np.flatnonzero(exact_survival(u) < 100.0 / n)
    hi = float(u[below[0]]) if below.size else float(u[-1])
    return hi / 10.0, hi


@dataclass(frozen=True)
class IndexReport:
    beta: float
    x: float
    window: tuple[float, float]
    raw_slope: float
    adjusted_slope: float

    @property
    def proof_exponent(self) -> float:
        return 1.0 - self.beta

    @property
    def statement_exponent(self) -> float:
        return -self.beta

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "x": self.x,
            "window": list(self.window),
            "raw_slope": self.raw_slope,
            "adjusted_slope": self.adjusted_slope,
            "exponent_1_minus_beta": self.proof_exponent,
            "exponent_minus_beta": self.statement_exponent,
            "error_vs_1_minus_beta": self.adjusted_slope - self.proof_exponent,
            "error_vs_minus_beta": self.adjusted_slope - self.statement_exponent,
        }


def exact_tail_index(prior: PrimePrior, x: float, u_lo: float, u_hi: float, points: int = 200) -> IndexReport:
    """Regular-variation index of the exact conditional gap survival."""
    u = np.logspace(math.log10(u_lo), math.log10(u_hi), points)
    curve = tabulated_ccdf(u, conditional_gap_tail_exact(prior, x, u))
    return IndexReport(
        beta=prior.beta,
        x=x,
        window=(u_lo, u_hi),
        raw_slope=loglog_slope(curve, u_lo, u_hi),
        adjusted_slope=loglog_slope(curve, u_lo, u_hi, slow_beta=prior.beta, x=x),
    )
