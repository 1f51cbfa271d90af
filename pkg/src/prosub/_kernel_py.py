"""Pure-Python kernel for hashed n-gram featurization, scoring, and SGD.

This is the fallback twin of the compiled extension ``prosub._kernel``.
Both implementations must produce bit-identical results: they share the
same hash function, the same feature aggregation order, and the same
floating-point operation order, so a model trained on either backend
scores identically on the other.

Feature hashing: each n-gram is hashed with 64-bit FNV-1a over the UTF-8
bytes of its tokens joined by the separator byte 0x1F, then reduced by a
power-of-two mask.  Sequences are padded with one boundary token (0x02)
at each end so sentence-initial and sentence-final context is visible.
"""

import math

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1
SEPARATOR = 0x1F
BOUNDARY = "\x02"

BACKEND = "python"


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    t = math.exp(z)
    return t / (1.0 + t)


def _softplus(x: float) -> float:
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def hash_ngram(tokens) -> int:
    """FNV-1a hash of one n-gram (used by tests to pin the hash function)."""
    h = FNV_OFFSET
    first = True
    for token in tokens:
        if not first:
            h = ((h ^ SEPARATOR) * FNV_PRIME) & MASK64
        first = False
        for byte in token.encode("utf-8"):
            h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def _raw_indices(tokens, ngram_min: int, ngram_max: int, mask: int) -> list[int]:
    padded = [BOUNDARY.encode("utf-8")]
    padded.extend(token.encode("utf-8") for token in tokens)
    padded.append(BOUNDARY.encode("utf-8"))
    m = len(padded)
    out = []
    for i in range(m):
        h = FNV_OFFSET
        top = min(ngram_max, m - i)
        for n in range(1, top + 1):
            if n > 1:
                h = ((h ^ SEPARATOR) * FNV_PRIME) & MASK64
            for byte in padded[i + n - 1]:
                h = ((h ^ byte) * FNV_PRIME) & MASK64
            if n >= ngram_min:
                out.append(h & mask)
    return out


def ngram_features(tokens, ngram_min: int, ngram_max: int, mask: int):
    """Hashed n-gram counts of one padded token sequence.

    Returns (indices, counts): int64 indices sorted ascending and unique,
    float64 counts aligned with them.
    """
    raw = sorted(_raw_indices(tokens, ngram_min, ngram_max, mask))
    indices = []
    counts = []
    for idx in raw:
        if indices and indices[-1] == idx:
            counts[-1] += 1.0
        else:
            indices.append(idx)
            counts.append(1.0)
    return np.asarray(indices, dtype=np.int64), np.asarray(counts, dtype=np.float64)


def featurize_all(token_seqs, ngram_min: int, ngram_max: int, mask: int):
    """Featurize a batch of token sequences into CSR arrays
    (indptr, indices, counts)."""
    indptr = np.zeros(len(token_seqs) + 1, dtype=np.int64)
    all_indices = []
    all_counts = []
    for k, tokens in enumerate(token_seqs):
        idx, cnt = ngram_features(tokens, ngram_min, ngram_max, mask)
        all_indices.append(idx)
        all_counts.append(cnt)
        indptr[k + 1] = indptr[k] + len(idx)
    if all_indices:
        indices = np.concatenate(all_indices)
        counts = np.concatenate(all_counts)
    else:
        indices = np.zeros(0, dtype=np.int64)
        counts = np.zeros(0, dtype=np.float64)
    return indptr, indices, counts


def score_csr(weights, bias: float, indptr, indices, counts):
    """Logistic scores for every row of a CSR feature batch."""
    n = len(indptr) - 1
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        z = bias
        for j in range(indptr[k], indptr[k + 1]):
            z += weights[indices[j]] * counts[j]
        out[k] = _sigmoid(z)
    return out


def sgd_epoch(weights, bias: float, indptr, indices, counts, labels, order,
              lr0: float, l2: float, step: int):
    """One epoch of logistic-loss SGD over instances in ``order``.

    Updates ``weights`` in place; the learning rate decays as lr0/sqrt(step)
    with ``step`` counting updates globally across epochs.  L2 is applied to
    the touched features only (standard sparse approximation).  Returns the
    new (bias, step).
    """
    for k in order:
        lo = indptr[k]
        hi = indptr[k + 1]
        z = bias
        for j in range(lo, hi):
            z += weights[indices[j]] * counts[j]
        g = _sigmoid(z) - labels[k]
        step += 1
        lr = lr0 / math.sqrt(step)
        for j in range(lo, hi):
            wj = indices[j]
            weights[wj] -= lr * (g * counts[j] + l2 * weights[wj])
        bias -= lr * g
    return bias, step


def mean_logloss(weights, bias: float, indptr, indices, counts, labels) -> float:
    """Mean logistic loss of a CSR batch (no regularization term)."""
    n = len(indptr) - 1
    total = 0.0
    for k in range(n):
        z = bias
        for j in range(indptr[k], indptr[k + 1]):
            z += weights[indices[j]] * counts[j]
        if labels[k] >= 0.5:
            total += _softplus(-z)
        else:
            total += _softplus(z)
    return total / n if n else 0.0
