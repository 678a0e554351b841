"""Codelength histograms of artifact sizes and the three reference models.

Sizes come from a Debian ``Packages`` index, package-index JSON documents,
or a plain one-integer-per-line file.  Everything here works on files
already on disk; see ``scripts/fetch_datasets.py`` for obtaining them.
"""

from __future__ import annotations

import gzip
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .omega import omega_len

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


class ParseError(ValueError):
    pass


@dataclass
class Sizes:
    """Parsed sizes plus per-reason skip counts."""

    values: list[int] = field(default_factory=list)
    skipped: Counter = field(default_factory=Counter)

    def skip(self, reason: str, where: str) -> None:
        self.skipped[reason] += 1
        log.info("skipped entry (%s) at %s", reason, where)

    def extend(self, other: "Sizes") -> None:
        self.values.extend(other.values)
        self.skipped.update(other.skipped)


def ingest_debian(text: str) -> Sizes:
    """One size per stanza of a Debian control-format index."""
    out = Sizes()
    stanza: dict[str, str] = {}
    start = None
    last_key = None

    def flush():
        if not stanza:
            return
        where = f"stanza at line {start}"
        raw = stanza.get("size")
        if raw is None:
            out.skip("missing Size", where)
            return
        try:
            size = int(raw.strip())
        except ValueError:
            raise ParseError(f"line {start}: Size field {raw!r} is not an integer") from None
        if size <= 0:
            out.skip("zero size", where)
        else:
            out.values.append(size)

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            flush()
            stanza, start, last_key = {}, None, None
            continue
        if line[0] in " \t":
            if last_key is None:
                raise ParseError(f"line {lineno}: continuation line outside a field")
            stanza[last_key] += "\n" + line.strip()
            continue
        key, sep, value = line.partition(":")
        if not sep or not key.strip() or " " in key.strip():
            raise ParseError(f"line {lineno}: expected 'Key: value', got {line!r}")
        if start is None:
            start = lineno
        last_key = key.strip().lower()
        stanza[last_key] = value.strip()
    flush()
    return out


def _file_entries(name: str, doc) -> list:
    if not isinstance(doc, dict):
        raise ParseError(f"{name}: document is not a JSON object")
    if "releases" in doc:
        releases = doc["releases"]
        if not isinstance(releases, dict):
            raise ParseError(f"{name}: 'releases' is not an object")
        entries = []
        for version, files in releases.items():
            if not isinstance(files, list):
                raise ParseError(f"{name}: release {version!r} is not a list of files")
            entries.extend(files)
        return entries
    if "urls" in doc:
        if not isinstance(doc["urls"], list):
            raise ParseError(f"{name}: 'urls' is not a list")
        return doc["urls"]
    raise ParseError(f"{name}: neither 'releases' nor 'urls' present")


def ingest_pypi(docs) -> Sizes:
    """Sizes of every release file across package-index JSON documents.

    ``docs`` is an iterable of ``(name, parsed_json)`` pairs.  Only genuine
    JSON integers count as sizes; strings such as ``"10"`` are skipped.
    """
    out = Sizes()
    for name, doc in docs:
        for i, entry in enumerate(_file_entries(name, doc)):
            where = f"{name} file #{i}"
            size = entry.get("size") if isinstance(entry, dict) else None
            if size is None:
                out.skip("missing size", where)
            elif isinstance(size, bool) or not isinstance(size, int):
                out.skip("non-numeric size", where)
            elif size <= 0:
                out.skip("zero size", where)
            else:
                out.values.append(size)
    return out


def ingest_plain(text: str) -> Sizes:
    out = Sizes()
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if not s.isdigit():
            raise ParseError(f"line {lineno}: {s!r} is not a nonnegative integer")
        v = int(s)
        if v == 0:
            out.skip("zero size", f"line {lineno}")
        else:
            out.values.append(v)
    return out


def load_sizes(path: str | Path, fmt: str) -> Sizes:
    path = Path(path)
    if fmt == "plain":
        return ingest_plain(path.read_text())
    if fmt == "debian":
        if path.suffix == ".gz":
            return ingest_debian(gzip.decompress(path.read_bytes()).decode("utf-8", "replace"))
        return ingest_debian(path.read_text(encoding="utf-8", errors="replace"))
    if fmt == "pypi":
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        docs = []
        for f in files:
            try:
                docs.append((f.name, json.loads(f.read_text())))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{f.name}: invalid JSON ({exc})") from None
        return ingest_pypi(docs)
    raise ValueError(f"unknown format {fmt!r}")


@dataclass(frozen=True)
class CodelengthHistogram:
    """Counts of omega codelengths; ``ells`` ascending, only nonzero bins."""

    ells: np.ndarray
    counts: np.ndarray
    total: int
    excluded: int = 0

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def bins(self) -> dict[int, int]:
        return dict(zip(self.ells.tolist(), self.counts.tolist()))

    def prob_dict(self) -> dict[int, float]:
        return dict(zip(self.ells.tolist(), self.probs.tolist()))


def codelength_histogram(sizes) -> CodelengthHistogram:
    kept = [int(s) for s in sizes if s >= 1]
    excluded = len(sizes) - len(kept)
    if not kept:
        raise ValueError("no positive sizes left to histogram")
    counts = Counter(omega_len(s) for s in kept)
    ells = np.array(sorted(counts), dtype=np.int64)
    return CodelengthHistogram(
        ells=ells,
        counts=np.array([counts[e] for e in ells.tolist()], dtype=np.int64),
        total=len(kept),
        excluded=excluded,
    )


def model_uniform(hist: CodelengthHistogram) -> np.ndarray:
    return np.full(len(hist.ells), 1.0 / len(hist.ells))


def _normalized_exp(log_w: np.ndarray) -> np.ndarray:
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def model_pure_omega(hist: CodelengthHistogram) -> np.ndarray:
    return _normalized_exp(-LN2 * hist.ells.astype(np.float64))


@dataclass(frozen=True)
class ScaledFit:
    a: float
    c: float
    residual: float


def fit_scaled(hist: CodelengthHistogram, weighted: bool = False) -> ScaledFit:
    """Least squares for a*ell + c ~ -ln P_obs(ell) over the observed bins.

    Unweighted by default; ``weighted=True`` weights each bin by its count.
    """
    if len(hist.ells) < 2:
        raise ValueError("need at least two distinct codelengths to fit a slope")
    ell = hist.ells.astype(np.float64)
    y = -np.log(hist.probs)
    design = np.column_stack([ell, np.ones_like(ell)])
    if weighted:
        sw = np.sqrt(hist.counts.astype(np.float64))
        (a, c), *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    else:
        (a, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (a * ell + c)
    return ScaledFit(float(a), float(c), float(np.sqrt(np.mean(resid**2))))


def model_scaled(hist: CodelengthHistogram, fit: ScaledFit) -> np.ndarray:
    return _normalized_exp(-fit.a * hist.ells.astype(np.float64) - fit.c)


def kl_divergence(P, Q, bits: bool = False) -> float:
    """KL(P || Q) in nats (bits with ``bits=True``).

    Dicts are aligned on the keys of ``P``; sequences by position.
    """
    if isinstance(P, dict):
        keys = list(P)
        p = np.array([P[k] for k in keys], dtype=np.float64)
        q = np.array([Q.get(k, 0.0) for k in keys], dtype=np.float64)
    else:
        p = np.asarray(P, dtype=np.float64)
        q = np.asarray(Q, dtype=np.float64)
        if p.shape != q.shape:
            raise ValueError("P and Q must share a support")
    pos = p > 0
    if np.any(q[pos] <= 0):
        raise ValueError("Q vanishes where P is positive; KL is infinite")
    kl = math.fsum((p[pos] * np.log(p[pos] / q[pos])).tolist())
    return kl / LN2 if bits else kl


@dataclass(frozen=True)
class Alignment:
    alignment: float
    entropy: float
    mean_len: float


def gibbs_alignment(mu: dict[int, float]) -> Alignment:
    """KL divergence of a finite-support law from 2**-omega_len, in bits."""
    ns = [n for n, m in mu.items() if m > 0]
    m = np.array([mu[n] for n in ns], dtype=np.float64)
    lens = np.array([omega_len(n) for n in ns], dtype=np.float64)
    log2m = np.log2(m)
    return Alignment(
        alignment=math.fsum((m * (log2m + lens)).tolist()),
        entropy=-math.fsum((m * log2m).tolist()),
        mean_len=math.fsum((m * lens).tolist()),
    )


def synthetic_sizes(a: float, n: int, rng: np.random.Generator, min_bits: int = 10, max_bits: int = 27) -> list[int]:
    """Sizes whose omega codelength follows P(ell) proportional to exp(-a*ell).

    Codelength is a function of bit length, so a bit length is drawn first
    and the size is then uniform within it.  The default range, 1 KiB to
    128 MiB, covers typical package sizes.
    """
    bits = np.arange(min_bits, max_bits + 1)
    ells = np.array([omega_len(1 << (int(k) - 1)) for k in bits], dtype=np.float64)
    probs = _normalized_exp(-a * ells)
    chosen = bits[rng.choice(len(bits), size=n, p=probs)]
    offsets = rng.random(n)
    return [(1 << (int(k) - 1)) + int(f * (1 << (int(k) - 1))) for k, f in zip(chosen, offsets)]


def fit_report(sizes: Sizes | list[int], bits: bool = False, weighted: bool = False) -> dict:
    if isinstance(sizes, Sizes):
        values, skipped = sizes.values, dict(sizes.skipped)
    else:
        values, skipped = list(sizes), {}
    hist = codelength_histogram(values)
    if hist.excluded:
        skipped["zero size"] = skipped.get("zero size", 0) + hist.excluded
    obs = hist.probs
    fit = fit_scaled(hist, weighted=weighted)
    scale = 1.0 / LN2 if bits else 1.0
    return {
        "bins": hist.ells.tolist(),
        "counts": hist.counts.tolist(),
        "probs": obs.tolist(),
        "kl_uniform": kl_divergence(obs, model_uniform(hist), bits),
        "kl_pure": kl_divergence(obs, model_pure_omega(hist), bits),
        "kl_scaled": kl_divergence(obs, model_scaled(hist, fit), bits),
        "a": fit.a * scale,
        "c": fit.c * scale,
        "residual": fit.residual * scale,
        "units": "bits" if bits else "nats",
        "weighted": weighted,
        "a_below_ln2": fit.a < LN2,
        "total": hist.total,
        "skipped": skipped,
    }


def model_table(hist: CodelengthHistogram, fit: ScaledFit) -> list[tuple[int, float, float, float, float]]:
    """Rows (ell, P_obs, P_uniform, P_pure, P_scaled) for plotting."""
    cols = (hist.probs, model_uniform(hist), model_pure_omega(hist), model_scaled(hist, fit))
    return [(int(e), *(float(c[i]) for c in cols)) for i, e in enumerate(hist.ells.tolist())]
