"""Bracketed treebank reading and pairwise evaluation-set construction.

The reader accepts concatenated s-expressions in the usual ``.mrg`` style,
with or without the outer unlabeled wrapper pair per tree.  Function tags
and coindexation suffixes are stripped from labels (``NP-SBJ-1`` becomes
``NP``), trace/empty-element leaves (preterminal label ``-NONE-``) are
removed together with ancestors left empty, and node spans are computed
over the remaining surface tokens.

Evaluation items pair one gold constituent span with one length-matched
span that is not a node span of the same tree; scoring a transformed
sentence for each side of the pair and comparing is how constituent
detection is measured downstream.
"""

import json
import re
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Iterable, Iterator, Sequence

from .seeding import substream


class TreebankParseError(ValueError):
    """Malformed bracketing; carries the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Span:
    """Half-open token-index interval [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start

    def check_within(self, n_tokens: int) -> None:
        if self.end > n_tokens:
            raise ValueError(
                f"span [{self.start}, {self.end}) exceeds sentence length {n_tokens}"
            )

    def as_pair(self) -> list[int]:
        return [self.start, self.end]


@dataclass(frozen=True)
class Sentence:
    """An ordered token sequence with a stable identifier."""

    id: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(
                    f"sentence {self.id!r} has an empty or whitespace-bearing token: {tok!r}"
                )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class TreeNode:
    label: str
    span: Span
    children: tuple["TreeNode", ...] = ()
    token: str | None = None

    def is_leaf(self) -> bool:
        return self.token is not None

    def iter_nodes(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()


@dataclass(frozen=True)
class ParseTree:
    sentence: Sentence
    root: TreeNode


@dataclass(frozen=True)
class EvalPair:
    """A sentence with one gold constituent span and one non-constituent span
    of the same length. Neither span has length 1 or covers the full sentence."""

    sentence: Sentence
    constituent: Span
    distractor: Span

    def __post_init__(self):
        if self.constituent.length != self.distractor.length:
            raise ValueError("constituent and distractor must have equal length")
        n = len(self.sentence)
        for span in (self.constituent, self.distractor):
            span.check_within(n)
            if span.length == 1 or span.length == n:
                raise ValueError(f"trivial span {span} in evaluation pair")


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|[^()\s]+")

# Keep labels that begin with '-' intact (-NONE-, -LRB-, -RRB-); otherwise cut
# function tags and coindexation at the first '-' or '='.
_FUNC_TAG_RE = re.compile(r"[-=]")


def _strip_label(label: str) -> str:
    if label.startswith("-"):
        return label
    head = _FUNC_TAG_RE.split(label, 1)[0]
    return head if head else label


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _RawNode:
    __slots__ = ("label", "children", "token")

    def __init__(self, label, children, token):
        self.label = label
        self.children = children
        self.token = token


def _lex(text: str):
    for match in _TOKEN_RE.finditer(text):
        yield match.group(), match.start()


def parse_ptb(text: str, id_prefix: str = "s") -> list[ParseTree]:
    """Parse concatenated bracketed trees into ``ParseTree`` objects.

    One tree per top-level s-expression; an unlabeled outer pair wrapping a
    single tree is unwrapped.  Trees whose every leaf is a trace are dropped
    (there is no surface sentence left to represent).  Sentence ids are
    ``{id_prefix}{k}`` with ``k`` counting top-level trees from 0.
    """
    items = list(_lex(text))
    pos = 0
    trees: list[ParseTree] = []
    index = 0
    while pos < len(items):
        token, char_at = items[pos]
        if token != "(":
            raise TreebankParseError(
                f"expected '(' at top level, found {token!r}", _byte_offset(text, char_at)
            )
        raw, pos = _parse_node(text, items, pos, top_level=True)
        tree = _finalize(raw, f"{id_prefix}{index}")
        index += 1
        if tree is not None:
            trees.append(tree)
    return trees


def _parse_node(text: str, items, pos: int, top_level: bool = False):
    """Parse one parenthesized form starting at items[pos] == '('."""
    open_tok, open_at = items[pos]
    pos += 1

    label = None
    children: list[_RawNode] = []
    words: list[str] = []
    while True:
        if pos >= len(items):
            raise TreebankParseError("unbalanced parentheses", _byte_offset(text, open_at))
        token, char_at = items[pos]
        if token == ")":
            pos += 1
            break
        if token == "(":
            child, pos = _parse_node(text, items, pos)
            children.append(child)
        else:
            if label is None and not children:
                label = token
            else:
                words.append(token)
            pos += 1

    if label is None:
        # Unlabeled pair: allowed only as the conventional outer wrapper of a
        # single tree.
        if top_level and len(children) == 1 and not words:
            return children[0], pos
        if not children and not words:
            raise TreebankParseError("empty node", _byte_offset(text, open_at))
        raise TreebankParseError("node without a label", _byte_offset(text, open_at))
    if not children and not words:
        raise TreebankParseError(
            f"empty node {label!r}", _byte_offset(text, open_at)
        )
    if children and words:
        raise TreebankParseError(
            f"node {label!r} mixes child nodes and bare tokens", _byte_offset(text, open_at)
        )
    if len(words) > 1:
        raise TreebankParseError(
            f"node {label!r} has multiple leaf tokens", _byte_offset(text, open_at)
        )
    if words:
        return _RawNode(label, (), words[0]), pos
    return _RawNode(label, tuple(children), None), pos


def _drop_traces(node: _RawNode) -> _RawNode | None:
    if node.token is not None:
        return None if node.label == "-NONE-" else node
    kept = [c for c in (_drop_traces(ch) for ch in node.children) if c is not None]
    if not kept:
        return None
    return _RawNode(node.label, tuple(kept), None)


def _finalize(raw: _RawNode, sentence_id: str) -> ParseTree | None:
    raw = _drop_traces(raw)
    if raw is None:
        return None
    tokens: list[str] = []

    def build(node: _RawNode) -> TreeNode:
        if node.token is not None:
            start = len(tokens)
            tokens.append(node.token)
            return TreeNode(_strip_label(node.label), Span(start, start + 1), (), node.token)
        kids = tuple(build(ch) for ch in node.children)
        return TreeNode(
            _strip_label(node.label), Span(kids[0].span.start, kids[-1].span.end), kids, None
        )

    root = build(raw)
    return ParseTree(Sentence(sentence_id, tuple(tokens)), root)


# ---------------------------------------------------------------------------
# Spans and evaluation pairs
# ---------------------------------------------------------------------------


def constituent_spans(tree: ParseTree, exclude_trivial: bool = False) -> set[Span]:
    """All node spans of the tree, as a set (unary chains contribute once).

    With ``exclude_trivial``, spans of length 1 and the full-sentence span
    are dropped.
    """
    n = len(tree.sentence)
    spans = {node.span for node in tree.root.iter_nodes()}
    if exclude_trivial:
        spans = {sp for sp in spans if sp.length > 1 and sp.length < n}
    return spans


def enumerate_spans(n: int, min_len: int, max_len: int) -> list[Span]:
    """All spans over ``n`` tokens with length in [min_len, max_len], ordered
    by (start, length)."""
    if not (1 <= min_len <= max_len <= n):
        raise ValueError(f"invalid length bounds [{min_len}, {max_len}] for n={n}")
    return [
        Span(start, start + length)
        for start in range(n)
        for length in range(min_len, min(max_len, n - start) + 1)
    ]


def sample_eval_pair(tree: ParseTree, rng: Random) -> EvalPair | None:
    """Sample one (constituent, length-matched non-constituent) pair.

    A constituent is drawn uniformly from the non-trivial node spans; the
    distractor uniformly from the same-length spans that are not node spans
    of the tree (length-1 and full-sentence node spans also disqualify).
    A constituent without any distractor is removed from the pool and the
    draw repeats; returns None once the pool is exhausted.
    """
    n = len(tree.sentence)
    all_node_spans = constituent_spans(tree, exclude_trivial=False)
    pool = sorted(
        constituent_spans(tree, exclude_trivial=True), key=lambda sp: (sp.start, sp.end)
    )
    while pool:
        constituent = pool.pop(rng.randrange(len(pool)))
        length = constituent.length
        candidates = [
            sp
            for sp in (Span(i, i + length) for i in range(n - length + 1))
            if sp not in all_node_spans
        ]
        if candidates:
            distractor = candidates[rng.randrange(len(candidates))]
            return EvalPair(tree.sentence, constituent, distractor)
    return None


def build_eval_set(
    trees: Sequence[ParseTree], seed: int, min_tokens: int = 3
) -> list[EvalPair]:
    """Build evaluation pairs for all trees with at least ``min_tokens`` tokens.

    Each tree draws from its own sub-stream keyed by (seed, position), so a
    tree's sample does not depend on its neighbours. Order follows the input.
    """
    pairs = []
    for index, tree in enumerate(trees):
        if len(tree.sentence) < min_tokens:
            continue
        pair = sample_eval_pair(tree, substream(seed, "evalpair", index))
        if pair is not None:
            pairs.append(pair)
    return pairs


# ---------------------------------------------------------------------------
# JSON Lines serialization
# ---------------------------------------------------------------------------


def eval_pair_to_json(pair: EvalPair) -> str:
    return json.dumps(
        {
            "sentence_id": pair.sentence.id,
            "tokens": list(pair.sentence.tokens),
            "constituent": pair.constituent.as_pair(),
            "distractor": pair.distractor.as_pair(),
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def write_eval_pairs(pairs: Iterable[EvalPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(eval_pair_to_json(pair) + "\n")


def read_eval_pairs(path: str | Path) -> list[EvalPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pairs.append(
                    EvalPair(
                        Sentence(obj["sentence_id"], tuple(obj["tokens"])),
                        Span(*obj["constituent"]),
                        Span(*obj["distractor"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad evaluation pair on line {lineno}: {exc}") from exc
    return pairs
