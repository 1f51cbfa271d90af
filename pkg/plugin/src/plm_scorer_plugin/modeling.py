"""Model loading, marker registration, and batch scoring."""

from pathlib import Path

import torch

from .data import MARKER_END, MARKER_START


class BaseModelError(RuntimeError):
    """The base model name or path could not be resolved."""


class MarkerTokenizationError(RuntimeError):
    """A marker token does not tokenize to a single dedicated unit."""


def load_base(name_or_path: str, num_labels: int = 2):
    """Load tokenizer and sequence-classification model.

    Only local paths or cached names resolve in offline environments; a
    failure is reported as :class:`BaseModelError`.
    """
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        model = AutoModelForSequenceClassification.from_pretrained(
            name_or_path, num_labels=num_labels
        )
    except Exception as exc:
        raise BaseModelError(f"cannot load base model {name_or_path!r}: {exc}") from exc
    return tokenizer, model


def register_markers(tokenizer, model) -> int:
    """Add ``<S>``/``<E>`` to the vocabulary and resize the embeddings.

    Returns the number of tokens actually added (0 if already present).
    """
    added = tokenizer.add_special_tokens(
        {"additional_special_tokens": [MARKER_START, MARKER_END]}
    )
    if added:
        model.resize_token_embeddings(len(tokenizer))
    return added


def assert_single_unit(tokenizer) -> None:
    """Markers must survive tokenization as dedicated single units."""
    unk = tokenizer.unk_token_id
    for marker in (MARKER_START, MARKER_END):
        ids = tokenizer.encode(marker, add_special_tokens=False)
        if len(ids) != 1 or (unk is not None and ids[0] == unk):
            raise MarkerTokenizationError(
                f"marker {marker!r} tokenizes to {ids}; register it before use"
            )


def score_texts(model, tokenizer, texts: list[str], batch_size: int = 32,
                max_length: int = 128) -> list[float]:
    """Probability of the grammatical class (label 1) for each text."""
    model.eval()
    scores: list[float] = []
    with torch.no_grad():
        for lo in range(0, len(texts), batch_size):
            chunk = texts[lo : lo + batch_size]
            enc = tokenizer(chunk, return_tensors="pt", padding=True,
                            truncation=True, max_length=max_length)
            probs = torch.softmax(model(**enc).logits, dim=-1)[:, 1]
            scores.extend(min(max(float(p), 0.0), 1.0) for p in probs)
    return scores


def save_checkpoint(model, tokenizer, out_dir: str | Path, meta: dict) -> Path:
    import json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    with open(out_dir / "plugin.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def load_checkpoint(path: str | Path):
    import json

    path = Path(path)
    meta_file = path / "plugin.json"
    if not meta_file.is_file():
        raise BaseModelError(f"{path} is not a plugin checkpoint (no plugin.json)")
    with open(meta_file, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    tokenizer, model = load_base(str(path), num_labels=2)
    return tokenizer, model, meta
