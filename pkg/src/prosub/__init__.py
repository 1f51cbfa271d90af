"""Pro-form substitution tests for constituency analysis.

The package turns the classic linguistic substitution test into a
measurable pipeline: replace a candidate span with a pro-form, ask a
grammaticality scorer how acceptable the result is, and combine the
per-test scores to decide whether the span is a constituent.
"""

__version__ = "0.1.0"

from .analysis import (
    EvalReport,
    SelectionResult,
    SpanScores,
    combine,
    compare_spans,
    evaluate_pairs,
    greedy_select,
    span_scores,
)
from .datasets import (
    Dataset,
    Instance,
    build_focused,
    build_nonfocused,
    load_corpus,
    load_labeled_tsv,
    read_dataset,
    write_dataset,
)
from .external import ExternalScorer, ProtocolError, ScorerHandle, ScorerProcessError
from .proforms import (
    MarkedSentence,
    ProForm,
    TestSet,
    apply_test,
    default_inventory,
    find_occurrences,
    markup,
    strip_markers,
)
from .scorer import (
    NGramModel,
    Scorer,
    TrainConfig,
    load_model,
    save_model,
    train,
)
from .seeding import substream
from .treebank import (
    EvalPair,
    ParseTree,
    Sentence,
    Span,
    TreebankParseError,
    build_eval_set,
    constituent_spans,
    enumerate_spans,
    parse_ptb,
    read_eval_pairs,
    sample_eval_pair,
    write_eval_pairs,
)

__all__ = [
    "__version__",
    "EvalReport",
    "SelectionResult",
    "SpanScores",
    "combine",
    "compare_spans",
    "evaluate_pairs",
    "greedy_select",
    "span_scores",
    "Dataset",
    "Instance",
    "build_focused",
    "build_nonfocused",
    "load_corpus",
    "load_labeled_tsv",
    "read_dataset",
    "write_dataset",
    "ExternalScorer",
    "ProtocolError",
    "ScorerHandle",
    "ScorerProcessError",
    "MarkedSentence",
    "ProForm",
    "TestSet",
    "apply_test",
    "default_inventory",
    "find_occurrences",
    "markup",
    "strip_markers",
    "NGramModel",
    "Scorer",
    "TrainConfig",
    "load_model",
    "save_model",
    "train",
    "substream",
    "EvalPair",
    "ParseTree",
    "Sentence",
    "Span",
    "TreebankParseError",
    "build_eval_set",
    "constituent_spans",
    "enumerate_spans",
    "parse_ptb",
    "read_eval_pairs",
    "sample_eval_pair",
    "write_eval_pairs",
]
