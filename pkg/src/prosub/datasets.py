"""Contrastive training-set construction and labeled-data ingestion.

Two schemes produce binary grammaticality data from a raw corpus:

* non-focused: every corpus sentence is a positive; each eligible sentence
  also yields one negative by replacing a random 2-4 token span with a
  randomly assigned pro-form.  Tests are assigned round-robin over a
  seed-shuffled sentence order, so the per-test negative counts are exact
  up to a difference of one.
* focused: per test, the positives are the corpus sentences containing the
  pro-form (first occurrence wrapped in ``<S>``/``<E>`` markers) and an
  equal number of negatives is sampled without replacement and corrupted
  with that same pro-form, markers included.

Sentences shorter than ``span_len_min + 1`` tokens are never corruption
sources (the corruption span must not cover a whole sentence).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .proforms import (
    ProForm,
    TestSet,
    apply_test,
    contains_markers,
    find_occurrences,
    markup,
)
from .seeding import substream
from .treebank import Sentence, Span, enumerate_spans

SCHEMES = ("focused", "nonfocused", "labeled")

_NEGATIVE_RESAMPLE_LIMIT = 10


class DataConfigError(ValueError):
    pass


class IngestionError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    """One training example: a token sequence (marked up iff focused), a
    binary label, the originating test, and the source sentence id."""

    tokens: tuple[str, ...]
    label: int
    test_id: str | None
    marker_span: Span | None
    source_id: str

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass
class Dataset:
    scheme: str
    instances: list[Instance] = field(default_factory=list)
    seed: int = 0
    test_ids: tuple[str, ...] = ()
    corpus_name: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def check(self) -> None:
        """Verify the scheme-specific per-instance invariants."""
        for inst in self.instances:
            marked = contains_markers(inst.tokens)
            if self.scheme == "focused":
                if not marked or inst.marker_span is None or inst.test_id is None:
                    raise ValueError(
                        f"focused instance from {inst.source_id!r} lacks markers or test id"
                    )
                if (
                    inst.tokens.count("<S>") != 1
                    or inst.tokens.count("<E>") != 1
                    or inst.tokens.index("<S>") >= inst.tokens.index("<E>")
                ):
                    raise ValueError(
                        f"focused instance from {inst.source_id!r} has a bad marker pair"
                    )
            else:
                if marked or inst.marker_span is not None:
                    raise ValueError(
                        f"{self.scheme} instance from {inst.source_id!r} carries markers"
                    )
            if self.scheme != "labeled" and inst.label == 0 and inst.test_id is None:
                raise ValueError(
                    f"corrupted instance from {inst.source_id!r} lacks a test id"
                )
            if self.scheme == "labeled" and inst.test_id is not None:
                raise ValueError(
                    f"labeled instance from {inst.source_id!r} carries a test id"
                )

    def label_counts(self) -> tuple[int, int]:
        pos = sum(1 for inst in self.instances if inst.label == 1)
        return pos, len(self.instances) - pos

    def per_test_counts(self, label: int) -> dict[str, int]:
        counts: dict[str, int] = {}
        for inst in self.instances:
            if inst.label == label and inst.test_id is not None:
                counts[inst.test_id] = counts.get(inst.test_id, 0) + 1
        return counts


def _check_ingestion(corpus: Sequence[Sentence]) -> None:
    for sentence in corpus:
        if contains_markers(sentence.tokens):
            raise IngestionError(
                f"sentence {sentence.id!r} contains a literal marker token"
            )


def _corruption_span(sentence: Sentence, proform: ProForm, rng,
                     span_len_min: int, span_len_max: int) -> Span:
    """Sample a corruption span, retrying a bounded number of times so the
    span does not coincide exactly with an occurrence of the pro-form."""
    n = len(sentence)
    candidates = enumerate_spans(n, span_len_min, min(span_len_max, n - 1))
    occupied = set(find_occurrences(sentence, proform))
    span = candidates[rng.randrange(len(candidates))]
    for _ in range(_NEGATIVE_RESAMPLE_LIMIT - 1):
        if span not in occupied:
            break
        span = candidates[rng.randrange(len(candidates))]
    return span


def build_nonfocused(
    corpus: Sequence[Sentence],
    tests: TestSet,
    seed: int,
    span_len_min: int = 2,
    span_len_max: int = 4,
    corpus_name: str = "",
) -> Dataset:
    """Build the non-focused contrastive dataset (no markers).

    Positives are all corpus sentences; negatives corrupt one span of
    ``span_len_min``..``span_len_max`` tokens per eligible sentence with a
    round-robin-assigned pro-form, keeping per-test counts within one of
    each other.
    """
    if not corpus:
        raise DataConfigError("empty corpus")
    if span_len_min < 1 or span_len_min > span_len_max:
        raise DataConfigError("need 1 <= span_len_min <= span_len_max")
    _check_ingestion(corpus)

    instances = [
        Instance(s.tokens, 1, None, None, s.id) for s in corpus
    ]

    eligible = [
        (index, s) for index, s in enumerate(corpus) if len(s) >= span_len_min + 1
    ]
    shuffled = list(range(len(eligible)))
    substream(seed, "nonfocused", "assign").shuffle(shuffled)
    assigned: dict[int, ProForm] = {}
    for slot, k in enumerate(shuffled):
        index, _ = eligible[k]
        assigned[index] = tests.proforms[slot % len(tests)]

    for index, sentence in eligible:
        proform = assigned[index]
        rng = substream(seed, "nonfocused", index)
        span = _corruption_span(sentence, proform, rng, span_len_min, span_len_max)
        corrupted = apply_test(sentence, span, proform)
        instances.append(
            Instance(corrupted.tokens, 0, proform.id, None, sentence.id)
        )

    return Dataset("nonfocused", instances, seed, tests.ids(), corpus_name)


def build_focused(
    corpus: Sequence[Sentence],
    tests: TestSet,
    seed: int,
    span_len_min: int = 2,
    span_len_max: int = 4,
    corpus_name: str = "",
    occurrence_choice: str = "first",
) -> Dataset:
    """Build the focused contrastive dataset (marker tokens included).

    Per test: positives are every sentence containing the pro-form, with
    one occurrence marked; negatives are an equal number of corpus
    sentences drawn without replacement, a random span replaced by the
    pro-form and marked.  A pro-form absent from the corpus contributes
    nothing (balance forces zero).
    """
    if not corpus:
        raise DataConfigError("empty corpus")
    if occurrence_choice not in ("first", "random"):
        raise DataConfigError("occurrence_choice must be 'first' or 'random'")
    if span_len_min < 1 or span_len_min > span_len_max:
        raise DataConfigError("need 1 <= span_len_min <= span_len_max")
    _check_ingestion(corpus)

    eligible = [s for s in corpus if len(s) >= span_len_min + 1]
    instances: list[Instance] = []

    for proform in tests:
        rng = substream(seed, "focused", proform.id)
        positives = []
        for sentence in corpus:
            occurrences = find_occurrences(sentence, proform)
            if not occurrences:
                continue
            if occurrence_choice == "first":
                occ = occurrences[0]
            else:
                occ = occurrences[rng.randrange(len(occurrences))]
            positives.append((sentence, occ))

        for sentence, occ in positives:
            marked = markup(sentence, occ)
            instances.append(
                Instance(marked.tokens, 1, proform.id, occ, sentence.id)
            )

        need = len(positives)
        if need > len(eligible):
            raise DataConfigError(
                f"test {proform.id!r} needs {need} negatives but only "
                f"{len(eligible)} sentences are long enough to corrupt"
            )
        for sentence in rng.sample(eligible, need):
            span = _corruption_span(sentence, proform, rng, span_len_min, span_len_max)
            corrupted = apply_test(sentence, span, proform)
            inserted = Span(span.start, span.start + len(proform.tokens))
            marked = markup(corrupted, inserted)
            instances.append(
                Instance(marked.tokens, 0, proform.id, inserted, sentence.id)
            )

    return Dataset("focused", instances, seed, tests.ids(), corpus_name)


def load_labeled_tsv(path: str | Path) -> Dataset:
    """Read externally labeled acceptability data.

    Expects tab-separated rows of (source, label, original annotation,
    sentence); the label column must be "0" or "1" and sentences are
    whitespace-tokenized.
    """
    path = Path(path)
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            row = line.rstrip("\n")
            if not row:
                continue
            cols = row.split("\t")
            if len(cols) != 4:
                raise IngestionError(
                    f"{path}: line {lineno}: expected 4 tab-separated columns, got {len(cols)}"
                )
            if cols[1] not in ("0", "1"):
                raise IngestionError(
                    f"{path}: line {lineno}: label must be 0 or 1, got {cols[1]!r}"
                )
            tokens = tuple(cols[3].split())
            if not tokens:
                raise IngestionError(f"{path}: line {lineno}: empty sentence")
            instances.append(
                Instance(tokens, int(cols[1]), None, None, f"{path.name}:{lineno}")
            )
    return Dataset("labeled", instances, corpus_name=path.name)


# ---------------------------------------------------------------------------
# JSON Lines serialization
# ---------------------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            _dump(
                {
                    "scheme": dataset.scheme,
                    "seed": dataset.seed,
                    "tests": list(dataset.test_ids),
                }
            )
            + "\n"
        )
        for inst in dataset.instances:
            fh.write(
                _dump(
                    {
                        "tokens": list(inst.tokens),
                        "label": inst.label,
                        "test_id": inst.test_id,
                        "marker_span": inst.marker_span.as_pair()
                        if inst.marker_span
                        else None,
                        "source_id": inst.source_id,
                    }
                )
                + "\n"
            )


def read_dataset(path: str | Path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
            dataset = Dataset(
                header["scheme"],
                [],
                int(header["seed"]),
                tuple(header["tests"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"{path}: bad dataset header: {exc}") from exc
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                marker = obj["marker_span"]
                dataset.instances.append(
                    Instance(
                        tuple(obj["tokens"]),
                        int(obj["label"]),
                        obj["test_id"],
                        Span(*marker) if marker is not None else None,
                        obj["source_id"],
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise IngestionError(f"{path}: line {lineno}: bad instance: {exc}") from exc
    return dataset


def load_corpus(path: str | Path, id_prefix: str = "s") -> list[Sentence]:
    """Read a whitespace-pretokenized corpus, one sentence per line.

    Blank lines are skipped; ids are ``{id_prefix}{lineno}``.  Sentences
    containing literal marker tokens are rejected here, at ingestion.
    """
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = tuple(line.split())
            if not tokens:
                continue
            sentence = Sentence(f"{id_prefix}{lineno}", tokens)
            if contains_markers(tokens):
                raise IngestionError(
                    f"{path}: line {lineno}: literal marker token in corpus"
                )
            sentences.append(sentence)
    return sentences
