"""Grammaticality scorer contract and the built-in trainable model.

The scorer contract is behavioral: anything exposing
``score_batch(list of token sequences) -> list of floats in [0, 1]`` can
drive the analysis layer, including out-of-process scorers behind the
wire adapter.

The built-in model is a logistic classifier over hashed token n-grams
(orders 1..3 by default) with one boundary pad at each end of the
sequence.  It is trained by plain SGD with 1/sqrt(step) learning-rate
decay; after every epoch the model is evaluated on held-out data and the
best-scoring epoch snapshot is returned.  Marker tokens ``<S>``/``<E>``
participate in featurization as ordinary tokens, which is what lets a
model trained on marked data attend to the replacement site.

Model file layout (version 1, little-endian):

    bytes 0..3   magic b"PSNG"
    bytes 4..7   format version, uint32
    bytes 8..11  header length H, uint32
    bytes 12..   H bytes of UTF-8 JSON:
                 {"hash_dim", "ngram_min", "ngram_max", "bias", "markup"}
    rest         hash_dim float64 weights, raw little-endian
"""

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import kernel
from .seeding import substream

MAGIC = b"PSNG"
MODEL_VERSION = 1

DEV_METRICS = ("pair_accuracy", "classification_accuracy")


class ConfigurationError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class Scorer(Protocol):
    def score_batch(self, inputs: Sequence[Sequence[str]]) -> list[float]: ...


@dataclass
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 0.1
    seed: int = 0
    hash_dim: int = 1 << 20
    l2: float = 1e-6
    dev_metric: str = "pair_accuracy"
    ngram_min: int = 1
    ngram_max: int = 3

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.hash_dim < (1 << 10) or self.hash_dim & (self.hash_dim - 1):
            raise ConfigurationError("hash_dim must be a power of two >= 2**10")
        if self.dev_metric not in DEV_METRICS:
            raise ConfigurationError(f"dev_metric must be one of {DEV_METRICS}")
        if not (1 <= self.ngram_min <= self.ngram_max):
            raise ConfigurationError("need 1 <= ngram_min <= ngram_max")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    dev_metric: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based

    def as_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "dev_metric": self.dev_metric,
            "best_epoch": self.best_epoch,
        }


@dataclass
class NGramModel:
    hash_dim: int
    weights: np.ndarray
    bias: float = 0.0
    ngram_min: int = 1
    ngram_max: int = 3
    markup: bool = False
    version: int = MODEL_VERSION
    history: TrainHistory | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.hash_dim,):
            raise ValueError("weights length must equal hash_dim")

    @classmethod
    def zeros(cls, hash_dim: int, **kwargs) -> "NGramModel":
        return cls(hash_dim, np.zeros(hash_dim, dtype=np.float64), **kwargs)

    @property
    def mask(self) -> int:
        return self.hash_dim - 1

    def featurize(self, tokens):
        return kernel.ngram_features(tokens, self.ngram_min, self.ngram_max, self.mask)

    def score(self, tokens) -> float:
        indptr, indices, counts = kernel.featurize_all(
            [tuple(tokens)], self.ngram_min, self.ngram_max, self.mask
        )
        return float(kernel.score_csr(self.weights, self.bias, indptr, indices, counts)[0])

    def score_batch(self, inputs: Sequence[Sequence[str]]) -> list[float]:
        indptr, indices, counts = kernel.featurize_all(
            [tuple(t) for t in inputs], self.ngram_min, self.ngram_max, self.mask
        )
        return kernel.score_csr(self.weights, self.bias, indptr, indices, counts).tolist()


def logistic_loss_and_grad(weights, bias, indices, counts, label):
    """Logistic loss of one sparse instance and its analytic gradient.

    Returns (loss, grad_w, grad_b) with grad_w aligned to ``indices``.
    No regularization term; this is the quantity the SGD step descends
    before the L2 shrinkage.
    """
    z = bias
    for idx, cnt in zip(indices, counts):
        z += weights[idx] * cnt
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        t = math.exp(z)
        p = t / (1.0 + t)
    if label >= 0.5:
        loss = math.log1p(math.exp(-z)) if z > 0 else -z + math.log1p(math.exp(z))
    else:
        loss = z + math.log1p(math.exp(-z)) if z > 0 else math.log1p(math.exp(z))
    g = p - label
    grad_w = np.asarray([g * c for c in counts], dtype=np.float64)
    return loss, grad_w, g


def _dataset_features(dataset, config: TrainConfig):
    token_seqs = [inst.tokens for inst in dataset.instances]
    labels = np.asarray(
        [float(inst.label) for inst in dataset.instances], dtype=np.float64
    )
    indptr, indices, counts = kernel.featurize_all(
        token_seqs, config.ngram_min, config.ngram_max, config.hash_dim - 1
    )
    return indptr, indices, counts, labels


def _classification_accuracy(model: NGramModel, indptr, indices, counts, labels) -> float:
    scores = kernel.score_csr(model.weights, model.bias, indptr, indices, counts)
    return float(np.mean((scores > 0.5) == (labels > 0.5)))


def train(train_set, dev, config: TrainConfig, tests=None) -> NGramModel:
    """Train the built-in model on a contrastive or labeled dataset.

    ``dev`` selects the returned epoch snapshot: a sequence of evaluation
    pairs (dev_metric="pair_accuracy", scored with ``tests`` under the
    maximum strategy) or a held-out labeled dataset
    (dev_metric="classification_accuracy").  ``dev=None`` skips selection
    and returns the final epoch.  Ties prefer the earlier epoch.
    """
    from . import analysis  # deferred: analysis consumes the Scorer contract

    if not train_set.instances:
        raise ConfigurationError("training set is empty")
    label_kinds = {inst.label for inst in train_set.instances}
    if label_kinds != {0, 1}:
        raise ConfigurationError(
            "training set must contain both grammatical and corrupted instances"
        )
    if dev is not None and config.dev_metric == "pair_accuracy" and tests is None:
        raise ConfigurationError("pair_accuracy dev metric requires a test set")

    uses_markup = train_set.scheme == "focused"
    indptr, indices, counts, labels = _dataset_features(train_set, config)

    dev_is_dataset = hasattr(dev, "instances")
    if dev is not None and config.dev_metric == "classification_accuracy":
        if not dev_is_dataset:
            raise ConfigurationError(
                "classification_accuracy dev metric requires a held-out dataset"
            )
        dev_feats = _dataset_features(dev, config)

    model = NGramModel.zeros(
        config.hash_dim,
        ngram_min=config.ngram_min,
        ngram_max=config.ngram_max,
        markup=uses_markup,
    )
    history = TrainHistory()
    n = len(train_set.instances)
    step = 0
    best_metric = -math.inf
    best_weights = None
    best_bias = 0.0
    best_epoch = 0

    for epoch in range(1, config.epochs + 1):
        order = list(range(n))
        substream(config.seed, "epoch", epoch).shuffle(order)
        order_arr = np.asarray(order, dtype=np.int64)
        model.bias, step = kernel.sgd_epoch(
            model.weights, model.bias, indptr, indices, counts, labels,
            order_arr, config.learning_rate, config.l2, step,
        )
        history.train_loss.append(
            float(kernel.mean_logloss(model.weights, model.bias, indptr, indices, counts, labels))
        )
        if dev is None:
            continue
        if config.dev_metric == "pair_accuracy":
            metric = analysis.evaluate_pairs(
                model, dev, tests, strategy="maximum", use_markup=uses_markup
            ).accuracy
        else:
            metric = _classification_accuracy(model, *dev_feats)
        history.dev_metric.append(metric)
        if metric > best_metric:
            best_metric = metric
            best_weights = model.weights.copy()
            best_bias = model.bias
            best_epoch = epoch

    if dev is not None:
        model.weights = best_weights
        model.bias = best_bias
        history.best_epoch = best_epoch
    else:
        history.best_epoch = config.epochs
    model.history = history
    return model


def save_model(model: NGramModel, path: str | Path) -> None:
    header = json.dumps(
        {
            "hash_dim": model.hash_dim,
            "ngram_min": model.ngram_min,
            "ngram_max": model.ngram_max,
            "bias": model.bias,
            "markup": model.markup,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_model(path: str | Path) -> NGramModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a scorer model file")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != MODEL_VERSION:
        raise ModelVersionError(
            f"{path}: model format version {version}, expected {MODEL_VERSION}"
        )
    if len(blob) < 12 + header_len:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
        hash_dim = int(header["hash_dim"])
        ngram_min = int(header["ngram_min"])
        ngram_max = int(header["ngram_max"])
        bias = float(header["bias"])
        markup = bool(header["markup"])
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt model header: {exc}") from exc
    payload = blob[12 + header_len :]
    if len(payload) != hash_dim * 8:
        raise ModelFormatError(
            f"{path}: expected {hash_dim * 8} weight bytes, found {len(payload)}"
        )
    weights = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    model = NGramModel(
        hash_dim, weights, bias, ngram_min=ngram_min, ngram_max=ngram_max, markup=markup
    )
    if not np.all(np.isfinite(model.weights)) or not math.isfinite(bias):
        raise ModelFormatError(f"{path}: non-finite parameters")
    return model
