import gzip
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mte.empirics import (
    CodelengthHistogram,
    ParseError,
    codelength_histogram,
    fit_report,
    fit_scaled,
    gibbs_alignment,
    ingest_debian,
    ingest_plain,
    ingest_pypi,
    kl_divergence,
    load_sizes,
    model_pure_omega,
    model_scaled,
    model_table,
    model_uniform,
    ScaledFit,
    synthetic_sizes,
)
from mte.omega import kraft_partial_sum, omega_len

LN2 = math.log(2)


def hist_from_bins(bins):
    """Histogram straight from a codelength -> count map; model tests need not
    restrict themselves to realizable codelengths."""
    ells = sorted(bins)
    counts = np.array([bins[e] for e in ells], dtype=np.int64)
    return CodelengthHistogram(np.array(ells, dtype=np.int64), counts, int(counts.sum()))


def test_debian_examples():
    assert ingest_debian("Package: foo\nSize: 1234\n\n").values == [1234]
    two = ingest_debian("Package: a\nSize: 5\n\nPackage: b\nVersion: 1\n")
    assert two.values == [5] and two.skipped["missing Size"] == 1
    zero = ingest_debian("Package: z\nSize: 0\n")
    assert zero.values == [] and zero.skipped["zero size"] == 1


def test_debian_continuation_and_errors():
    text = "Package: a\nDescription: x\n more text\n .\nSize: 77\n\n\n\nPackage: b\nSize: 8\n"
    assert ingest_debian(text).values == [77, 8]
    with pytest.raises(ParseError, match="line 2"):
        ingest_debian("Package: a\nthis is not a field\n")
    with pytest.raises(ParseError, match="line 1"):
        ingest_debian(" leading continuation\n")
    with pytest.raises(ParseError):
        ingest_debian("Package: a\nSize: big\n")


def test_pypi_examples():
    doc = {"releases": {"1.0": [{"size": 10}, {"size": 20}]}}
    assert ingest_pypi([("a", doc)]).values == [10, 20]
    assert ingest_pypi([("b", {"releases": {}})]).values == []
    s = ingest_pypi([("c", {"urls": [{"size": "10"}, {"size": True}, {}, {"size": 0}, {"size": 3}]})])
    assert s.values == [3]
    assert s.skipped == {"non-numeric size": 2, "missing size": 1, "zero size": 1}


@pytest.mark.parametrize("doc", [[], {"info": {}}, {"releases": []}, {"releases": {"1": {}}}])
def test_pypi_malformed_names_document(doc):
    with pytest.raises(ParseError, match="pkg.json"):
        ingest_pypi([("pkg.json", doc)])


def test_plain_examples():
    assert ingest_plain("5\n7\n").values == [5, 7]
    assert ingest_plain("").values == []
    with pytest.raises(ParseError, match="line 1"):
        ingest_plain("x")
    s = ingest_plain("0\n\n9\n")
    assert s.values == [9] and s.skipped["zero size"] == 1


def test_load_sizes_formats(tmp_path):
    (tmp_path / "plain.txt").write_text("3\n4\n")
    (tmp_path / "Packages.gz").write_bytes(gzip.compress(b"Package: a\nSize: 12\n"))
    pdir = tmp_path / "pypi"
    pdir.mkdir()
    (pdir / "a.json").write_text(json.dumps({"urls": [{"size": 1}]}))
    (pdir / "b.json").write_text(json.dumps({"releases": {"0.1": [{"size": 2}]}}))
    assert load_sizes(tmp_path / "plain.txt", "plain").values == [3, 4]
    assert load_sizes(tmp_path / "Packages.gz", "debian").values == [12]
    assert load_sizes(pdir, "pypi").values == [1, 2]
    (pdir / "c.json").write_text("{not json")
    with pytest.raises(ParseError, match="c.json"):
        load_sizes(pdir, "pypi")
    with pytest.raises(ValueError):
        load_sizes(tmp_path / "plain.txt", "xml")


def test_histogram_examples():
    h = codelength_histogram([2, 3, 4])
    assert h.bins == {3: 2, 6: 1}
    assert h.prob_dict() == pytest.approx({3: 2 / 3, 6: 1 / 3})
    assert codelength_histogram([1]).prob_dict() == {1: 1.0}
    assert codelength_histogram([16, 16]).prob_dict() == {11: 1.0}
    h0 = codelength_histogram([0, 5])
    assert h0.excluded == 1 and h0.total == 1
    with pytest.raises(ValueError):
        codelength_histogram([0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=2**40), min_size=1, max_size=200))
def test_histogram_invariants(sizes):
    h = codelength_histogram(sizes)
    assert h.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(h.counts > 0) and h.counts.sum() == len(sizes)
    assert set(h.bins) <= {omega_len(s) for s in sizes}


def test_model_examples():
    assert model_uniform(hist_from_bins({3: 1, 6: 4, 7: 2})).tolist() == pytest.approx([1 / 3] * 3)
    assert model_uniform(hist_from_bins({3: 1})).tolist() == [1.0]
    assert model_uniform(hist_from_bins({3: 1, 6: 1, 7: 1, 9: 1})).tolist() == [0.25] * 4
    assert model_pure_omega(hist_from_bins({3: 5, 6: 1})).tolist() == pytest.approx([8 / 9, 1 / 9], abs=1e-15)
    assert model_pure_omega(hist_from_bins({3: 1})).tolist() == [1.0]
    assert model_pure_omega(hist_from_bins({3: 1, 4: 1})).tolist() == pytest.approx([2 / 3, 1 / 3], abs=1e-15)


def test_fit_exact_exponential():
    ells = np.arange(10, 31)
    probs = np.exp(-0.5 * ells) / np.exp(-0.5 * ells).sum()
    # fractional "counts" give an exactly exponential P_obs
    h = CodelengthHistogram(ells, probs * 1e6, 1e6)
    fit = fit_scaled(h)
    assert fit.a == pytest.approx(0.5, abs=1e-9)
    assert fit.residual < 1e-9
    assert np.allclose(model_scaled(h, fit), h.probs, rtol=1e-9, atol=0)


def test_fit_two_bins_interpolates():
    fit = fit_scaled(hist_from_bins({3: 3, 6: 1}))
    assert fit.a == pytest.approx(math.log(3) / 3)
    assert fit.residual == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_scaled(hist_from_bins({3: 2}))


def test_scaled_model_special_cases():
    h = hist_from_bins({3: 2, 6: 1, 7: 5, 11: 3})
    assert model_scaled(h, ScaledFit(0.0, 1.3, 0)).tolist() == pytest.approx(model_uniform(h).tolist())
    assert np.allclose(model_scaled(h, ScaledFit(LN2, -4.0, 0)), model_pure_omega(h), atol=1e-12, rtol=0)


def test_kl_examples():
    assert kl_divergence([0.2, 0.8], [0.2, 0.8]) == 0
    assert kl_divergence([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.5 * math.log(4 / 3), abs=1e-15)
    assert kl_divergence([0.5, 0.5], [0.75, 0.25], bits=True) == pytest.approx(0.20752, abs=1e-5)
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(LN2)
    assert kl_divergence({3: 1.0}, {3: 0.5, 6: 0.5}) == pytest.approx(LN2)
    with pytest.raises(ValueError):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=12), st.randoms())
def test_kl_nonnegative(raw, rnd):
    p = np.array(raw) / sum(raw)
    q = np.array([rnd.random() + 0.01 for _ in raw])
    q /= q.sum()
    assert kl_divergence(p, q) >= -1e-15
    assert kl_divergence(p, p) == 0


def test_alignment_examples():
    a = gibbs_alignment({5: 1.0})
    assert (a.entropy, a.mean_len, a.alignment) == (0.0, 6.0, 6.0)
    z = float(kraft_partial_sum(3))
    mu = {n: 2.0 ** -omega_len(n) / z for n in (1, 2, 3)}
    assert gibbs_alignment(mu).alignment == pytest.approx(-math.log2(z), abs=1e-12)
    assert gibbs_alignment(mu).alignment == pytest.approx(0.415, abs=1e-3)
    u = gibbs_alignment({2: 0.5, 3: 0.5})
    assert (u.entropy, u.mean_len, u.alignment) == (1.0, 3.0, 2.0)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.integers(1, 10**12), st.floats(0.001, 1.0), min_size=1, max_size=30))
def test_cross_entropy_identity(raw):
    z = math.fsum(raw.values())
    mu = {n: w / z for n, w in raw.items()}
    a = gibbs_alignment(mu)
    assert abs(a.mean_len - (a.entropy + a.alignment)) < 1e-12


def test_synthetic_sizes_follow_target():
    rng = np.random.default_rng(0)
    sizes = synthetic_sizes(0.45, 20_000, rng)
    assert min(sizes) >= 1 << 9 and max(sizes) < 1 << 27
    h = codelength_histogram(sizes)
    ells = h.ells.astype(float)
    target = np.exp(-0.45 * ells) / np.exp(-0.45 * ells).sum()
    assert kl_divergence(h.probs, target) < 0.01


def test_pipeline_ordering_on_heavy_tailed_data():
    # a < ln 2: the scaled model must beat both references.
    for seed in range(3):
        rep = fit_report(synthetic_sizes(0.3, 20_000, np.random.default_rng(seed)))
        assert rep["kl_scaled"] < rep["kl_uniform"]
        assert rep["kl_scaled"] < rep["kl_pure"]
        assert rep["a_below_ln2"]


def test_report_units_and_weighting():
    sizes = synthetic_sizes(0.45, 5000, np.random.default_rng(1)) + [0]
    nats = fit_report(sizes)
    bits = fit_report(sizes, bits=True)
    assert bits["a"] == pytest.approx(nats["a"] / LN2)
    assert bits["kl_pure"] == pytest.approx(nats["kl_pure"] / LN2)
    assert (nats["units"], bits["units"]) == ("nats", "bits")
    assert nats["skipped"] == {"zero size": 1}
    weighted = fit_report(sizes, weighted=True)
    assert weighted["weighted"] and weighted["a"] != nats["a"]
    assert set(nats) >= {"bins", "probs", "kl_uniform", "kl_pure", "kl_scaled", "a", "c", "residual", "skipped"}


def test_model_table_rows():
    h = hist_from_bins({3: 2, 6: 1})
    rows = model_table(h, fit_scaled(h))
    assert [r[0] for r in rows] == [3, 6]
    for col in range(1, 5):
        assert sum(r[col] for r in rows) == pytest.approx(1.0)
