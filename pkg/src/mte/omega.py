"""Elias omega coding over Python integers.

Codewords are plain ``str`` objects over ``'0'``/``'1'`` so they can be
printed, concatenated and compared directly.  Codelengths are computed from
bit lengths only, never by building the codeword.
"""

from __future__ import annotations

import math
import operator
from fractions import Fraction

import numpy as np


class OmegaDecodeError(ValueError):
    """Raised when a bit string does not start with a complete omega codeword."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (bit offset {offset})")
        self.offset = offset


def _check_positive(n) -> int:
    n = operator.index(n)
    if n < 1:
        raise ValueError(f"omega code is undefined for n={n}; need n >= 1")
    return n


def omega_encode(n: int) -> str:
    n = _check_positive(n)
    groups = []
    while n > 1:
        groups.append(format(n, "b"))
        n = n.bit_length() - 1
    groups.reverse()
    return "".join(groups) + "0"


def omega_decode(bits: str) -> tuple[int, int]:
    """Decode the leading codeword of ``bits``.

    Returns ``(n, consumed)``; anything after ``consumed`` bits is left alone.
    """
    n = 1
    pos = 0
    size = len(bits)
    while True:
        if pos >= size:
            raise OmegaDecodeError("truncated codeword", pos)
        head = bits[pos]
        if head == "0":
            return n, pos + 1
        if head != "1":
            raise OmegaDecodeError(f"invalid symbol {head!r}", pos)
        end = pos + n + 1
        if end > size:
            raise OmegaDecodeError("truncated length group", pos)
        group = bits[pos:end]
        if not set(group) <= {"0", "1"}:
            raise OmegaDecodeError("invalid symbol in group", pos)
        n = int(group, 2)
        pos = end


def omega_len(n: int) -> int:
    n = _check_positive(n)
    length = 1
    while n > 1:
        k = n.bit_length()
        length += k
        n = k - 1
    return length


# omega length depends on n only through its bit length; cache per bit length.
_LEN_BY_BITLEN = np.array([0, 1] + [k + omega_len(k - 1) for k in range(2, 64)], dtype=np.int64)


def omega_len_array(values) -> np.ndarray:
    """Vectorized :func:`omega_len` for integer arrays with entries in [1, 2**62]."""
    v = np.asarray(values, dtype=np.int64)
    if v.size and v.min() < 1:
        raise ValueError("omega code is undefined for n < 1")
    # frexp exponent equals the bit length for integers below 2**53
    _, exp = np.frexp(v.astype(np.float64))
    big = v >= (1 << 53)
    if np.any(big):
        exp = exp.astype(np.int64)
        exp[big] = [int(x).bit_length() for x in v[big]]
    return _LEN_BY_BITLEN[exp]


def kraft_partial_sum(N: int, exact: bool = False) -> float | Fraction:
    """Return sum_{n=1..N} 2**-omega_len(n).

    All n with the same bit length share a codelength, so the sum runs over
    bit lengths and is exact in rational arithmetic.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    total = Fraction(0)
    top = N.bit_length()
    for k in range(1, top + 1):
        lo = 1 << (k - 1)
        hi = min(N, (1 << k) - 1)
        count = hi - lo + 1
        total += Fraction(count, 1 << omega_len(lo))
    return total if exact else float(total)


def kraft_prefix_sums(N: int) -> np.ndarray:
    """Running Kraft sums for every prefix 1..N (float64, length N)."""
    lens = omega_len_array(np.arange(1, N + 1, dtype=np.int64))
    return np.cumsum(np.ldexp(1.0, -lens))


def near_additivity_defect(a: int, b: int) -> int:
    if a < 2 or b < 2:
        raise ValueError("near-additivity defect needs a, b >= 2")
    return omega_len(a * b) - omega_len(a) - omega_len(b)


def compressing_defect(n: int, m: int) -> int:
    """Slack of omega_len(2**m * n) against omega_len(n) + m + omega_len(m)."""
    if n < 1 or m < 1:
        raise ValueError("compressing defect needs n, m >= 1")
    return omega_len(n << m) - (omega_len(n) + m + omega_len(m))


def omega_len_approx(n: int) -> float:
    if n < 2:
        raise ValueError("asymptotic form needs n >= 2")
    lg = math.log2(n)
    return lg + math.log2(lg)
