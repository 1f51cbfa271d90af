"""Fine-tune a pretrained sequence classifier on a contrastive dataset.

Hyperparameter defaults are deliberately conventional for this model
family (AdamW, lr 2e-5, batch 16) and every one of them is a flag; the
defaults are not tuned claims.

Dev-set model selection goes through the core toolkit's own command line:
each epoch snapshot is served over the wire protocol and evaluated with
``prosub evaluate --external``, so the metric that picks the epoch is the
exact pairwise accuracy the final model will be used for.
"""

import argparse
import json
import shlex
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import torch

from .data import DataFormatError, read_dataset, read_labeled_tsv, to_text
from .modeling import (
    BaseModelError,
    MarkerTokenizationError,
    assert_single_unit,
    load_base,
    register_markers,
    save_checkpoint,
)


class SchemeMismatchError(RuntimeError):
    """The dataset carries marker tokens but markers were not registered."""


@dataclass
class PluginConfig:
    base_model: str
    epochs: int = 10
    learning_rate: float = 2e-5
    batch_size: int = 16
    seed: int = 0
    register_markers: bool = True
    max_length: int = 128

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("bad optimizer settings")


def _prosub_command() -> list[str]:
    exe = shutil.which("prosub")
    if exe:
        return [exe]
    return [sys.executable, "-m", "prosub.cli"]


def _dev_pair_accuracy(checkpoint: Path, dev_pairs: Path, markup: bool,
                       dev_tests: str | None) -> float:
    serve_cmd = (
        f"{shlex.quote(sys.executable)} -m plm_scorer_plugin.serve "
        f"--checkpoint {shlex.quote(str(checkpoint))}"
    )
    with tempfile.TemporaryDirectory() as td:
        report = Path(td) / "report.json"
        cmd = _prosub_command() + [
            "evaluate",
            "--external", serve_cmd,
            "--markup" if markup else "--no-markup",
            "--pairs", str(dev_pairs),
            "--strategy", "maximum",
            "--out", str(report),
        ]
        if dev_tests:
            cmd += ["--tests", dev_tests]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"dev evaluation failed: {proc.stderr.strip()}")
        with open(report, "r", encoding="utf-8") as fh:
            return float(json.load(fh)["accuracy"])


def plugin_train(
    data_path: str | Path,
    out_dir: str | Path,
    config: PluginConfig,
    dev_pairs: str | Path | None = None,
    dev_tests: str | None = None,
    data_format: str = "jsonl",
    log=print,
) -> Path:
    """Fine-tune and write a checkpoint directory; returns its path."""
    if data_format == "jsonl":
        data = read_dataset(data_path)
    elif data_format == "tsv":
        data = read_labeled_tsv(data_path)
    else:
        raise ValueError(f"unknown data format {data_format!r}")
    if not data.examples:
        raise DataFormatError(f"{data_path}: dataset has no instances")
    labels_seen = {ex.label for ex in data.examples}
    if labels_seen != {0, 1}:
        raise DataFormatError("training data must contain both labels")

    markup = data.scheme == "focused" or data.has_markers
    if markup and not config.register_markers:
        raise SchemeMismatchError(
            "dataset carries <S>/<E> markers but marker registration is disabled"
        )

    tokenizer, model = load_base(config.base_model)
    if markup:
        register_markers(tokenizer, model)
        assert_single_unit(tokenizer)

    torch.manual_seed(config.seed)
    texts = [to_text(ex.tokens) for ex in data.examples]
    labels = torch.tensor([ex.label for ex in data.examples], dtype=torch.long)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)

    meta = {
        "base_model": config.base_model,
        "markup": markup,
        "scheme": data.scheme,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "seed": config.seed,
    }
    out_dir = Path(out_dir)
    history: dict = {"train_loss": [], "dev_metric": []}
    best_epoch = config.epochs
    best_metric = float("-inf")

    with tempfile.TemporaryDirectory(prefix="plugin-epochs-") as td:
        for epoch in range(1, config.epochs + 1):
            model.train()
            gen = torch.Generator().manual_seed(config.seed * 100003 + epoch)
            order = torch.randperm(len(texts), generator=gen)
            total = 0.0
            for lo in range(0, len(order), config.batch_size):
                idx = order[lo : lo + config.batch_size]
                enc = tokenizer([texts[i] for i in idx], return_tensors="pt",
                                padding=True, truncation=True,
                                max_length=config.max_length)
                out = model(**enc, labels=labels[idx])
                optimizer.zero_grad()
                out.loss.backward()
                optimizer.step()
                total += float(out.loss.detach()) * len(idx)
            train_loss = total / len(texts)
            history["train_loss"].append(train_loss)

            if dev_pairs is not None:
                snap = save_checkpoint(model, tokenizer,
                                       Path(td) / f"epoch{epoch}", meta)
                metric = _dev_pair_accuracy(snap, Path(dev_pairs), markup, dev_tests)
                history["dev_metric"].append(metric)
                log(f"epoch {epoch}: train_loss {train_loss:.4f} dev {metric:.4f}")
                if metric > best_metric:
                    best_metric, best_epoch = metric, epoch
            else:
                log(f"epoch {epoch}: train_loss {train_loss:.4f}")

        if dev_pairs is not None:
            shutil.copytree(Path(td) / f"epoch{best_epoch}", out_dir,
                            dirs_exist_ok=True)
        else:
            save_checkpoint(model, tokenizer, out_dir, meta)

    meta["best_epoch"] = best_epoch
    meta["history"] = history
    with open(out_dir / "plugin.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log(f"checkpoint -> {out_dir} (best epoch {best_epoch})")
    return out_dir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plugin-train",
        description="fine-tune a transformer grammaticality scorer",
    )
    parser.add_argument("--data", required=True, help="dataset JSONL (or TSV)")
    parser.add_argument("--data-format", choices=("jsonl", "tsv"), default="jsonl")
    parser.add_argument("--base-model", required=True,
                        help="pretrained model name or local path")
    parser.add_argument("--out", required=True, help="checkpoint directory")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-length", type=int, default=128)
    parser.add_argument("--markers", action=argparse.BooleanOptionalAction,
                        default=True,
                        help="register <S>/<E> as dedicated vocabulary units")
    parser.add_argument("--dev-pairs", default=None,
                        help="eval-pair JSONL for best-epoch selection")
    parser.add_argument("--dev-tests", default=None,
                        help="comma-separated test subset for dev evaluation")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = PluginConfig(
        base_model=args.base_model,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        register_markers=args.markers,
        max_length=args.max_length,
    )
    try:
        plugin_train(args.data, args.out, config, dev_pairs=args.dev_pairs,
                     dev_tests=args.dev_tests, data_format=args.data_format)
    except (DataFormatError, BaseModelError, SchemeMismatchError,
            MarkerTokenizationError, ValueError, OSError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
