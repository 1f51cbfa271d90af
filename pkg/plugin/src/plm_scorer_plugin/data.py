"""Readers for the toolkit's on-disk interchange formats.

These tiny parsers are deliberately reimplemented here instead of
importing the core package: the JSONL files, the TSV layout, and the wire
protocol are this plugin's entire coupling surface.
"""

import json
from dataclasses import dataclass
from pathlib import Path

MARKER_START = "<S>"
MARKER_END = "<E>"


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Example:
    tokens: tuple[str, ...]
    label: int


@dataclass
class ContrastiveData:
    """A parsed dataset file: header fields plus (tokens, label) examples."""

    scheme: str
    seed: int
    tests: tuple[str, ...]
    examples: list[Example]

    @property
    def has_markers(self) -> bool:
        return any(
            MARKER_START in ex.tokens or MARKER_END in ex.tokens
            for ex in self.examples
        )


def read_dataset(path: str | Path) -> ContrastiveData:
    """Read a contrastive dataset JSONL file (header line, then instances)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad header line: {exc}") from exc
        if not isinstance(header, dict) or "scheme" not in header:
            raise DataFormatError(f"{path}: first line is not a dataset header")
        examples = []
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tokens = tuple(obj["tokens"])
                label = int(obj["label"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad instance: {exc}") from exc
            if label not in (0, 1) or not tokens:
                raise DataFormatError(f"{path}:{lineno}: bad instance")
            examples.append(Example(tokens, label))
    return ContrastiveData(
        scheme=str(header["scheme"]),
        seed=int(header.get("seed", 0)),
        tests=tuple(header.get("tests", ())),
        examples=examples,
    )


def read_labeled_tsv(path: str | Path) -> ContrastiveData:
    """Read a four-column acceptability TSV (source, label, annotation,
    sentence) as a labeled dataset."""
    path = Path(path)
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            row = line.rstrip("\n")
            if not row:
                continue
            cols = row.split("\t")
            if len(cols) != 4:
                raise DataFormatError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            if cols[1] not in ("0", "1"):
                raise DataFormatError(f"{path}:{lineno}: bad label {cols[1]!r}")
            tokens = tuple(cols[3].split())
            if not tokens:
                raise DataFormatError(f"{path}:{lineno}: empty sentence")
            examples.append(Example(tokens, int(cols[1])))
    return ContrastiveData(scheme="labeled", seed=0, tests=(), examples=examples)


def to_text(tokens) -> str:
    """Single-space join; corpora are pretokenized so no detokenization."""
    return " ".join(tokens)
