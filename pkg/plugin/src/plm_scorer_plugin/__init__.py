"""Transformer-based external grammaticality scorer.

A standalone package that fine-tunes a pretrained sequence classifier on
contrastive dataset files and serves it over the grammaticality-scorer/1
line protocol. It talks to the core toolkit exclusively through its
published surfaces: dataset/eval-pair JSONL files, the wire protocol, and
the ``prosub`` command line.
"""

__version__ = "0.1.0"

from .data import MARKER_END, MARKER_START, ContrastiveData, read_dataset, read_labeled_tsv
from .modeling import BaseModelError, assert_single_unit, load_base, register_markers, score_texts
from .serve import PROTOCOL_NAME, serve
from .train import PluginConfig, SchemeMismatchError, plugin_train

__all__ = [
    "MARKER_END",
    "MARKER_START",
    "ContrastiveData",
    "read_dataset",
    "read_labeled_tsv",
    "BaseModelError",
    "assert_single_unit",
    "load_base",
    "register_markers",
    "score_texts",
    "PROTOCOL_NAME",
    "serve",
    "PluginConfig",
    "SchemeMismatchError",
    "plugin_train",
]
