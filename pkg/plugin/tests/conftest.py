import json
import os
import sys

import pytest

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

from tinybase import build_tiny_base  # noqa: E402

# 5 positive / 5 negative focused instances over the tiny vocabulary.
_FOCUSED_INSTANCES = [
    (["the", "cat", "saw", "<S>", "it", "<E>", "."], 1),
    (["a", "dog", "<S>", "did", "so", "<E>", "."], 1),
    (["the", "bird", "moved", "<S>", "of", "it", "<E>", "."], 1),
    (["a", "fish", "liked", "<S>", "it", "<E>", "."], 1),
    (["the", "horse", "<S>", "did", "so", "<E>", "near", "the", "tree", "."], 1),
    (["the", "<S>", "it", "<E>", "saw", "a", "boat", "."], 0),
    (["a", "<S>", "did", "so", "<E>", "dog", "chased", "."], 0),
    (["of", "<S>", "of", "it", "<E>", "the", "book", "."], 0),
    (["the", "tree", "a", "<S>", "it", "<E>", "green", "."], 0),
    (["under", "<S>", "did", "so", "<E>", "with", "the", "fish", "."], 0),
]

_DEV_PAIRS = [
    {"sentence_id": "d0", "tokens": ["the", "cat", "saw", "a", "red", "bird", "."],
     "constituent": [3, 6], "distractor": [2, 5]},
    {"sentence_id": "d1", "tokens": ["a", "dog", "chased", "the", "fish", "."],
     "constituent": [3, 5], "distractor": [1, 3]},
    {"sentence_id": "d2", "tokens": ["the", "bird", "moved", "under", "the", "tree", "."],
     "constituent": [3, 6], "distractor": [0, 3]},
]


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory):
    path = tmp_path_factory.mktemp("tinybase")
    build_tiny_base(path)
    return path


@pytest.fixture(scope="session")
def focused_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "focused.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        header = {"scheme": "focused", "seed": 0, "tests": ["it", "did_so", "of_it"]}
        fh.write(json.dumps(header) + "\n")
        for tokens, label in _FOCUSED_INSTANCES:
            test_id = "it" if "it" in tokens else "did_so"
            fh.write(json.dumps({"tokens": tokens, "label": label,
                                 "test_id": test_id, "marker_span": None,
                                 "source_id": "s"}) + "\n")
    return path


@pytest.fixture(scope="session")
def dev_pairs_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "dev_pairs.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for pair in _DEV_PAIRS:
            fh.write(json.dumps(pair) + "\n")
    return path


@pytest.fixture(scope="session")
def trained_checkpoint(tiny_base, focused_dataset, tmp_path_factory):
    from plm_scorer_plugin.train import PluginConfig, plugin_train

    out = tmp_path_factory.mktemp("ckpt") / "model"
    config = PluginConfig(base_model=str(tiny_base), epochs=1,
                          learning_rate=1e-3, batch_size=4, seed=0)
    return plugin_train(focused_dataset, out, config, log=lambda *a: None)


@pytest.fixture(scope="session")
def serve_command(trained_checkpoint):
    return [sys.executable, "-m", "plm_scorer_plugin.serve",
            "--checkpoint", str(trained_checkpoint)]
