"""Score combination, pairwise constituent evaluation, greedy selection.

A candidate span is judged by applying every pro-form test, scoring the
transformed sentences, and combining the per-test scores.  Combination is
one of three strategies:

* maximum: the best test speaks for the span;
* average: the arithmetic mean speaks for the span;
* voting: pairwise only; a span wins when it out-scores the other on a
  strict majority of tests (> |T|/2).

Decisions are strict: a pair counts correct only when the gold constituent
wins outright.  Voting ties fall back to the maximum comparison and only
then to a tie, which is counted incorrect.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .proforms import TestSet, apply_test, markup
from .treebank import EvalPair, Span

STRATEGIES = ("maximum", "average", "voting")

A_WINS = "a_wins"
B_WINS = "b_wins"
TIE = "tie"

_SCORE_EPS = 1e-9


@dataclass(frozen=True)
class SpanScores:
    """Per-test grammaticality scores for one candidate span."""

    sentence_id: str
    span: Span
    scores: Mapping[str, float]

    def __post_init__(self):
        for test_id, value in self.scores.items():
            if not -_SCORE_EPS <= value <= 1.0 + _SCORE_EPS:
                raise ValueError(
                    f"score for {test_id!r} outside [0,1]: {value!r}"
                )

    def restricted(self, test_ids: Sequence[str]) -> dict[str, float]:
        return {t: self.scores[t] for t in test_ids}


def _check_strategy(strategy: str) -> None:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")


def combine(scores: SpanScores | Mapping[str, float], strategy: str) -> float:
    """Collapse one span's per-test scores to a scalar.

    Voting has no scalar form (it is defined on pairs) and is rejected.
    """
    _check_strategy(strategy)
    if strategy == "voting":
        raise ValueError("voting is pairwise-only; combine() has no scalar form")
    values = scores.scores if isinstance(scores, SpanScores) else scores
    if not values:
        raise ValueError("cannot combine an empty score map")
    if strategy == "maximum":
        return max(values.values())
    # The true mean lies in [min, max]; clamp away the quotient's rounding,
    # which can otherwise land one ulp outside.
    mean = math.fsum(values.values()) / len(values)
    return min(max(mean, min(values.values())), max(values.values()))


def _compare_maps(a: Mapping[str, float], b: Mapping[str, float],
                  strategy: str) -> str:
    if not a:
        return TIE
    if strategy == "voting":
        wins_a = sum(1 for t in a if a[t] > b[t])
        wins_b = sum(1 for t in a if b[t] > a[t])
        half = len(a) / 2
        if wins_a > half:
            return A_WINS
        if wins_b > half:
            return B_WINS
        # No majority: break the tie with the maximum comparison.
        strategy = "maximum"
    ca = combine(a, strategy)
    cb = combine(b, strategy)
    if ca > cb:
        return A_WINS
    if cb > ca:
        return B_WINS
    return TIE


def compare_spans(a: SpanScores, b: SpanScores, strategy: str) -> str:
    """Decide which span wins; returns "a_wins", "b_wins", or "tie"."""
    _check_strategy(strategy)
    if set(a.scores) != set(b.scores):
        raise ValueError("span score maps cover different test sets")
    return _compare_maps(a.scores, b.scores, strategy)


# ---------------------------------------------------------------------------
# Scoring candidate spans
# ---------------------------------------------------------------------------


def _transform_tokens(pair_sentence, span: Span, proform, use_markup: bool):
    transformed = apply_test(pair_sentence, span, proform)
    if not use_markup:
        return transformed.tokens
    inserted = Span(span.start, span.start + len(proform.tokens))
    return markup(transformed, inserted).tokens


def _resolve_markup(scorer, use_markup: bool | None) -> bool:
    if use_markup is not None:
        return bool(use_markup)
    return bool(getattr(scorer, "markup", False))


def span_scores(scorer, sentence, span: Span, tests: TestSet,
                use_markup: bool | None = None) -> SpanScores:
    """Apply every test to one span and score the transformed sentences."""
    span.check_within(len(sentence))
    use_markup = _resolve_markup(scorer, use_markup)
    batch = [
        _transform_tokens(sentence, span, proform, use_markup)
        for proform in tests
    ]
    values = scorer.score_batch(batch)
    scores = {p.id: float(v) for p, v in zip(tests, values)}
    return SpanScores(sentence.id, span, scores)


class ScoreTable:
    """Per-pair, per-test scores for both sides of every eval pair.

    Built once so that greedy selection and strategy sweeps are pure
    table lookups.  ``entries[i]`` is ``(constituent_scores,
    distractor_scores)`` for ``pairs[i]``.
    """

    def __init__(self, test_ids: tuple[str, ...],
                 entries: list[tuple[dict[str, float], dict[str, float]]]):
        self.test_ids = test_ids
        self.entries = entries

    def __len__(self):
        return len(self.entries)


def build_score_table(scorer, pairs: Sequence[EvalPair], tests: TestSet,
                      use_markup: bool | None = None,
                      batch_size: int = 4096) -> ScoreTable:
    """Score every (pair side, test) combination in large batches.

    Identical transformed inputs are scored once: the cache key is
    (sentence id, span, test id, markup flag).
    """
    use_markup = _resolve_markup(scorer, use_markup)
    keys = []
    inputs = []
    seen: dict[tuple, int] = {}
    for pair in pairs:
        for span in (pair.constituent, pair.distractor):
            for proform in tests:
                key = (pair.sentence.id, span, proform.id, use_markup)
                if key in seen:
                    continue
                seen[key] = len(inputs)
                keys.append(key)
                inputs.append(
                    _transform_tokens(pair.sentence, span, proform, use_markup)
                )

    values: list[float] = []
    for start in range(0, len(inputs), batch_size):
        chunk = inputs[start:start + batch_size]
        values.extend(float(v) for v in scorer.score_batch(chunk))
    if len(values) != len(inputs):
        raise RuntimeError(
            f"scorer returned {len(values)} scores for {len(inputs)} inputs"
        )

    entries = []
    for pair in pairs:
        sides = []
        for span in (pair.constituent, pair.distractor):
            sides.append(
                {
                    p.id: values[seen[(pair.sentence.id, span, p.id, use_markup)]]
                    for p in tests
                }
            )
        entries.append((sides[0], sides[1]))
    return ScoreTable(tests.ids(), entries)


# ---------------------------------------------------------------------------
# Pairwise evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    sentence_id: str
    constituent: Span
    distractor: Span
    constituent_scores: dict[str, float]
    distractor_scores: dict[str, float]
    decision: str
    correct: bool
    winning_test_constituent: str | None
    winning_test_distractor: str | None


@dataclass
class EvalReport:
    strategy: str
    test_ids: tuple[str, ...]
    records: list[PairRecord] = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return len(self.records)

    @property
    def accuracy(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.correct for r in self.records) / len(self.records)

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n": self.n_pairs,
            "strategy": self.strategy,
            "tests": list(self.test_ids),
            "pairs": [
                {
                    "sentence_id": r.sentence_id,
                    "constituent": r.constituent.as_pair(),
                    "distractor": r.distractor.as_pair(),
                    "decision": r.decision,
                    "correct": r.correct,
                    "winning_test": {
                        "constituent": r.winning_test_constituent,
                        "distractor": r.winning_test_distractor,
                    },
                    "scores": {
                        "constituent": r.constituent_scores,
                        "distractor": r.distractor_scores,
                    },
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), ensure_ascii=False, indent=2)


def _argmax_test(scores: Mapping[str, float], test_ids: Sequence[str]):
    best = None
    for t in test_ids:
        if best is None or scores[t] > scores[best]:
            best = t
    return best


def evaluate_from_table(table: ScoreTable, pairs: Sequence[EvalPair],
                        test_ids: Sequence[str], strategy: str) -> EvalReport:
    _check_strategy(strategy)
    if len(table) != len(pairs):
        raise ValueError("score table and pair list disagree in length")
    test_ids = tuple(test_ids)
    missing = [t for t in test_ids if t not in table.test_ids]
    if missing:
        raise ValueError(f"tests absent from score table: {missing}")
    report = EvalReport(strategy, test_ids)
    for pair, (c_all, d_all) in zip(pairs, table.entries):
        c = {t: c_all[t] for t in test_ids}
        d = {t: d_all[t] for t in test_ids}
        outcome = _compare_maps(c, d, strategy)
        decision = {A_WINS: "constituent", B_WINS: "distractor", TIE: "tie"}[outcome]
        report.records.append(
            PairRecord(
                pair.sentence.id,
                pair.constituent,
                pair.distractor,
                c,
                d,
                decision,
                outcome == A_WINS,
                _argmax_test(c, test_ids),
                _argmax_test(d, test_ids),
            )
        )
    return report


def evaluate_pairs(scorer, pairs: Sequence[EvalPair], tests: TestSet,
                   strategy: str = "maximum",
                   use_markup: bool | None = None,
                   batch_size: int = 4096) -> EvalReport:
    """Score and judge every eval pair; accuracy is the fraction where the
    gold constituent strictly wins."""
    _check_strategy(strategy)
    if not pairs:
        raise ValueError("no eval pairs given")
    table = build_score_table(scorer, pairs, tests, use_markup, batch_size)
    return evaluate_from_table(table, pairs, tests.ids(), strategy)


def format_report(report: EvalReport) -> str:
    """Plain-text summary: headline accuracy plus a per-test win table."""
    wins: dict[str, int] = {t: 0 for t in report.test_ids}
    for record in report.records:
        if record.correct and record.winning_test_constituent is not None:
            wins[record.winning_test_constituent] += 1
    lines = [
        f"pairs     {report.n_pairs}",
        f"strategy  {report.strategy}",
        f"accuracy  {report.accuracy:.4f}",
        "",
        f"{'test':<16} {'constituent wins':>16}",
    ]
    for t in report.test_ids:
        lines.append(f"{t:<16} {wins[t]:>16}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Greedy forward selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[str, ...]
    trace: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "strategy": "maximum",
            "selected": list(self.selected),
            "trace": list(self.trace),
        }


def _table_accuracy(table: ScoreTable, test_ids: Sequence[str],
                    strategy: str) -> float:
    if not test_ids:
        return 0.0
    correct = 0
    for c_all, d_all in table.entries:
        c = {t: c_all[t] for t in test_ids}
        d = {t: d_all[t] for t in test_ids}
        if _compare_maps(c, d, strategy) == A_WINS:
            correct += 1
    return correct / len(table.entries)


def greedy_select_from_table(table: ScoreTable,
                             max_k: int | None = None) -> SelectionResult:
    """Forward selection from the empty set under the maximum strategy.

    At each step the candidate whose addition yields the highest pair
    accuracy joins the selection (first-listed candidate on ties); the
    loop stops when no addition strictly improves or max_k is reached.
    """
    candidates = list(table.test_ids)
    if max_k is None:
        max_k = len(candidates)
    if max_k > len(candidates):
        raise ValueError(f"max_k={max_k} exceeds {len(candidates)} candidates")
    selected: list[str] = []
    trace: list[float] = []
    best_acc = 0.0
    while len(selected) < max_k:
        step_best = None
        step_acc = best_acc
        for candidate in candidates:
            if candidate in selected:
                continue
            acc = _table_accuracy(table, selected + [candidate], "maximum")
            if acc > step_acc:
                step_best, step_acc = candidate, acc
        if step_best is None:
            break
        selected.append(step_best)
        trace.append(step_acc)
        best_acc = step_acc
    return SelectionResult(tuple(selected), tuple(trace))


def greedy_select(scorer, dev_pairs: Sequence[EvalPair], candidates: TestSet,
                  max_k: int | None = None,
                  use_markup: bool | None = None,
                  batch_size: int = 4096) -> SelectionResult:
    if not dev_pairs:
        raise ValueError("no dev pairs given")
    table = build_score_table(scorer, dev_pairs, candidates, use_markup, batch_size)
    return greedy_select_from_table(table, max_k)
