"""Pro-form inventory, span substitution, markup, and occurrence search.

A pro-form test replaces a candidate span with a short fixed expression of
a matching category; whether the result is still acceptable diagnoses
constituenthood.  Substitution here is pure token splicing: no inflection,
determiner, or punctuation repair.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .treebank import Sentence, Span

CATEGORIES = ("pronoun", "pro_pp", "pro_vp", "pro_sentence", "pro_adverb")

MARKER_START = "<S>"
MARKER_END = "<E>"


@dataclass(frozen=True)
class ProForm:
    """A named multi-token replacement string with its syntactic category."""

    id: str
    tokens: tuple[str, ...]
    category: str

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"pro-form {self.id!r} has no tokens")
        if self.category not in CATEGORIES:
            raise ValueError(
                f"pro-form {self.id!r} has unknown category {self.category!r}"
            )


@dataclass(frozen=True)
class TestSet:
    """An ordered collection of pro-forms with pairwise distinct ids."""

    __test__ = False  # not a pytest class, despite the name

    proforms: tuple[ProForm, ...]

    def __post_init__(self):
        if not self.proforms:
            raise ValueError("empty test set")
        ids = [p.id for p in self.proforms]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pro-form ids in test set")

    def __iter__(self) -> Iterator[ProForm]:
        return iter(self.proforms)

    def __len__(self) -> int:
        return len(self.proforms)

    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.proforms)

    def get(self, proform_id: str) -> ProForm:
        for p in self.proforms:
            if p.id == proform_id:
                return p
        raise KeyError(f"no pro-form with id {proform_id!r}")

    def subset(self, ids: list[str] | tuple[str, ...]) -> "TestSet":
        return TestSet(tuple(self.get(i) for i in ids))


@dataclass(frozen=True)
class MarkedSentence:
    """Token sequence containing one ``<S>``/``<E>`` marker pair around a
    pro-form; ``marker_span`` indexes the pro-form in the marker-free tokens."""

    tokens: tuple[str, ...]
    marker_span: Span

    def __post_init__(self):
        if self.tokens.count(MARKER_START) != 1 or self.tokens.count(MARKER_END) != 1:
            raise ValueError("marked sentence must contain exactly one <S> and one <E>")
        if self.tokens.index(MARKER_START) >= self.tokens.index(MARKER_END):
            raise ValueError("<S> must precede <E>")


_INVENTORY_SPEC = (
    ("pronoun", ("it", "ones", "this", "that", "they", "I", "we", "you")),
    ("pro_pp", ("of it", "for it", "in it")),
    ("pro_vp", ("did so", "do that", "does that")),
    ("pro_sentence", ("it is", "that it is")),
    ("pro_adverb", ("there", "this way")),
)


def default_inventory() -> TestSet:
    """The built-in 18-item pro-form inventory, in canonical order.

    Ids are the surface tokens joined by underscores (``this_way``).
    """
    proforms = []
    for category, surfaces in _INVENTORY_SPEC:
        for surface in surfaces:
            tokens = tuple(surface.split(" "))
            proforms.append(ProForm("_".join(tokens), tokens, category))
    return TestSet(tuple(proforms))


def load_inventory(path: str | Path) -> TestSet:
    """Read a pro-form inventory from a JSON file of
    ``[{"id": ..., "tokens": [...], "category": ...}]`` entries."""
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError(f"{path}: inventory must be a JSON list")
    proforms = []
    for k, entry in enumerate(entries):
        try:
            proforms.append(
                ProForm(entry["id"], tuple(entry["tokens"]), entry["category"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad inventory entry {k}: {exc}") from exc
    return TestSet(tuple(proforms))


def save_inventory(tests: TestSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            [
                {"id": p.id, "tokens": list(p.tokens), "category": p.category}
                for p in tests
            ],
            fh,
            ensure_ascii=False,
            indent=2,
        )
        fh.write("\n")


def apply_test(sentence: Sentence, span: Span, proform: ProForm) -> Sentence:
    """Replace ``span`` in ``sentence`` with the pro-form's tokens.

    The output id is derived from the source id, the pro-form id, and the
    span, so transformed sentences remain distinguishable and cacheable.
    """
    span.check_within(len(sentence))
    tokens = (
        sentence.tokens[: span.start] + proform.tokens + sentence.tokens[span.end :]
    )
    return Sentence(
        f"{sentence.id}/{proform.id}@{span.start}:{span.end}", tokens
    )


def markup(transformed: Sentence, inserted: Span) -> MarkedSentence:
    """Wrap the pro-form span of a transformed sentence in ``<S>``/``<E>``.

    ``inserted`` is the span of the pro-form tokens inside ``transformed``;
    the returned ``marker_span`` preserves those marker-free indices.
    """
    inserted.check_within(len(transformed))
    tokens = (
        transformed.tokens[: inserted.start]
        + (MARKER_START,)
        + transformed.tokens[inserted.start : inserted.end]
        + (MARKER_END,)
        + transformed.tokens[inserted.end :]
    )
    return MarkedSentence(tokens, inserted)


def strip_markers(tokens: tuple[str, ...] | list[str]) -> tuple[tuple[str, ...], Span]:
    """Inverse of :func:`markup`: remove the marker pair, return the
    marker-free tokens and the span they delimited."""
    toks = tuple(tokens)
    if toks.count(MARKER_START) != 1 or toks.count(MARKER_END) != 1:
        raise ValueError("expected exactly one <S>/<E> pair")
    start = toks.index(MARKER_START)
    end = toks.index(MARKER_END)
    if start >= end:
        raise ValueError("<S> must precede <E>")
    stripped = toks[:start] + toks[start + 1 : end] + toks[end + 1 :]
    return stripped, Span(start, end - 1)


def contains_markers(tokens) -> bool:
    return MARKER_START in tokens or MARKER_END in tokens


@dataclass(frozen=True)
class MatchPolicy:
    """Occurrence matching policy.

    Matching is exact token equality, except that the sentence-initial token
    may match case-insensitively (corpus sentences capitalize there), and
    pro-forms listed in ``always_case_sensitive`` never case-fold ("I" vs
    "i" is a semantic distinction, not sentence casing).
    """

    fold_sentence_initial: bool = True
    always_case_sensitive: frozenset[str] = frozenset({"I"})


DEFAULT_POLICY = MatchPolicy()


def find_occurrences(
    sentence: Sentence, proform: ProForm, policy: MatchPolicy = DEFAULT_POLICY
) -> list[Span]:
    """All spans where the pro-form's tokens occur contiguously in the
    sentence, in ascending start order. Matching is independent per pro-form;
    overlaps with other pro-forms are not suppressed."""
    strict = proform.id in policy.always_case_sensitive
    needle = proform.tokens
    width = len(needle)
    hits = []
    for start in range(len(sentence) - width + 1):
        for offset, want in enumerate(needle):
            have = sentence.tokens[start + offset]
            if strict or not (policy.fold_sentence_initial and start + offset == 0):
                ok = have == want
            else:
                ok = have.lower() == want.lower()
            if not ok:
                break
        else:
            hits.append(Span(start, start + width))
    return hits
