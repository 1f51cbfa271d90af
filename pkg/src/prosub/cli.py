"""Command-line front end for the substitution-test pipeline.

Subcommands cover the full loop: ``extract-corpus`` and ``make-pairs``
turn bracketed treebank files into training text and evaluation pairs,
``build-data`` constructs contrastive datasets, ``train`` fits the
built-in scorer, ``evaluate`` and ``select-proforms`` measure it (or any
external scorer speaking the wire protocol), and ``serve`` exposes a
trained built-in model over that same protocol.

Every command that writes an output file also writes
``<output>.manifest.json`` recording the resolved flags, seed, paths,
tool version, and wall-clock bounds.  Errors are printed to standard
error as one JSON object: {"error": <kind>, "message": <text>}.
"""

import argparse
import json
import shlex
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import analysis, datasets, scorer, treebank
from .external import ExternalScorer, ProtocolError, ScorerHandle, ScorerProcessError
from .proforms import TestSet, default_inventory, load_inventory


class CliError(ValueError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_path: Path, command: str, options: dict,
                    inputs: list[str], outputs: list[str],
                    started: str, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "options": options,
        "seed": options.get("seed"),
        "inputs": inputs,
        "outputs": outputs,
        "version": __version__,
        "started": started,
        "finished": _now(),
    }
    if extra:
        manifest.update(extra)
    path = Path(str(out_path) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _public_options(args: argparse.Namespace) -> dict:
    options = {}
    for key, value in sorted(vars(args).items()):
        if key == "func" or callable(value):
            continue
        options[key] = str(value) if isinstance(value, Path) else value
    return options


def _load_tests(tests_file: str | None, tests_list: str | None) -> TestSet:
    inventory = load_inventory(tests_file) if tests_file else default_inventory()
    if tests_list:
        wanted = [t.strip() for t in tests_list.split(",") if t.strip()]
        if not wanted:
            raise CliError("--tests given but no test ids parsed")
        try:
            inventory = inventory.subset(wanted)
        except KeyError as exc:
            raise CliError(str(exc.args[0])) from exc
    return inventory


def _treebank_files(directory: str) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise CliError(f"not a directory: {directory}")
    files = sorted(
        p for p in root.rglob("*")
        if p.is_file() and not p.name.startswith(".")
    )
    if not files:
        raise CliError(f"no treebank files under {directory}")
    return files


def _read_trees(directory: str) -> list[treebank.ParseTree]:
    trees = []
    for path in _treebank_files(directory):
        text = path.read_text(encoding="utf-8")
        rel = path.relative_to(directory).as_posix()
        try:
            trees.extend(treebank.parse_ptb(text, id_prefix=f"{rel}:"))
        except treebank.TreebankParseError as exc:
            raise treebank.TreebankParseError(f"{rel}: {exc.args[0]}", exc.offset)
    return trees


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_make_pairs(args) -> int:
    started = _now()
    trees = _read_trees(args.treebank)
    pairs = treebank.build_eval_set(trees, args.seed, args.min_tokens)
    out = Path(args.out)
    treebank.write_eval_pairs(pairs, out)
    _write_manifest(out, "make-pairs", _public_options(args),
                    [args.treebank], [str(out)], started,
                    {"n_trees": len(trees), "n_pairs": len(pairs)})
    print(f"{len(pairs)} pairs from {len(trees)} trees -> {out}")
    return 0


def cmd_extract_corpus(args) -> int:
    started = _now()
    trees = _read_trees(args.treebank)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(" ".join(tree.sentence.tokens) + "\n")
    _write_manifest(out, "extract-corpus", _public_options(args),
                    [args.treebank], [str(out)], started,
                    {"n_sentences": len(trees)})
    print(f"{len(trees)} sentences -> {out}")
    return 0


def cmd_build_data(args) -> int:
    started = _now()
    corpus = datasets.load_corpus(args.corpus)
    tests = _load_tests(args.tests_file, args.tests)
    if args.scheme == "focused":
        dataset = datasets.build_focused(corpus, tests, args.seed,
                                         corpus_name=Path(args.corpus).name)
    else:
        dataset = datasets.build_nonfocused(corpus, tests, args.seed,
                                            corpus_name=Path(args.corpus).name)
    dataset.check()
    if not dataset.instances:
        print("warning: no pro-form occurrences found; dataset is empty",
              file=sys.stderr)
    out = Path(args.out)
    datasets.write_dataset(dataset, out)
    pos, neg = dataset.label_counts()
    _write_manifest(out, "build-data", _public_options(args),
                    [args.corpus], [str(out)], started,
                    {"n_instances": len(dataset.instances),
                     "n_positive": pos, "n_negative": neg})
    print(f"{len(dataset.instances)} instances ({pos} pos / {neg} neg) -> {out}")
    return 0


def cmd_train(args) -> int:
    started = _now()
    data = datasets.read_dataset(args.data)
    uses_markup = data.scheme == "focused"
    if args.markup is not None and args.markup != uses_markup:
        raise scorer.ConfigurationError(
            f"scheme mismatch: {data.scheme} data "
            f"{'requires' if uses_markup else 'forbids'} markup at evaluation"
        )

    dev = None
    tests = None
    if args.dev_pairs:
        dev = treebank.read_eval_pairs(args.dev_pairs)
        if data.test_ids:
            tests = _load_tests(args.tests_file, None).subset(list(data.test_ids))
        else:
            tests = _load_tests(args.tests_file, args.tests)

    config = scorer.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        hash_dim=args.hash_dim,
        dev_metric="pair_accuracy" if args.dev_pairs else "classification_accuracy",
    )
    model = scorer.train(data, dev, config, tests=tests)
    out = Path(args.out)
    scorer.save_model(model, out)
    history = model.history.as_dict() if model.history else None
    _write_manifest(out, "train", _public_options(args),
                    [args.data] + ([args.dev_pairs] if args.dev_pairs else []),
                    [str(out)], started, {"history": history})
    if history:
        best = history["best_epoch"]
        print(f"model -> {out} (best epoch {best}, "
              f"dev {history['dev_metric'][best - 1]:.4f})")
    else:
        print(f"model -> {out}")
    return 0


def _open_scorer(args):
    """Return (scorer, markup flag, cleanup) from --model or --external."""
    if args.model:
        model = scorer.load_model(args.model)
        return model, model.markup, lambda: None
    handle = ScorerHandle(shlex.split(args.external))
    use_markup = bool(args.markup)
    return ExternalScorer(handle), use_markup, handle.shutdown


def cmd_evaluate(args) -> int:
    started = _now()
    pairs = treebank.read_eval_pairs(args.pairs)
    tests = _load_tests(args.tests_file, args.tests)
    model, use_markup, cleanup = _open_scorer(args)
    if args.model and args.markup is not None and args.markup != use_markup:
        raise scorer.ConfigurationError(
            "scheme mismatch: model markup flag contradicts --markup"
        )
    try:
        report = analysis.evaluate_pairs(model, pairs, tests,
                                         strategy=args.strategy,
                                         use_markup=use_markup)
    finally:
        cleanup()
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    _write_manifest(out, "evaluate", _public_options(args),
                    [args.pairs], [str(out)],
                    started, {"accuracy": report.accuracy, "n": report.n_pairs})
    sys.stdout.write(analysis.format_report(report))
    return 0


def cmd_select_proforms(args) -> int:
    started = _now()
    pairs = treebank.read_eval_pairs(args.dev_pairs)
    tests = _load_tests(args.tests_file, args.tests)
    model, use_markup, cleanup = _open_scorer(args)
    try:
        result = analysis.greedy_select(model, pairs, tests,
                                        max_k=args.max_k,
                                        use_markup=use_markup)
    finally:
        cleanup()
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(result.as_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    _write_manifest(out, "select-proforms", _public_options(args),
                    [args.dev_pairs], [str(out)], started,
                    {"selected": list(result.selected),
                     "trace": list(result.trace)})
    for test_id, acc in zip(result.selected, result.trace):
        print(f"+{test_id:<16} {acc:.4f}")
    if not result.selected:
        print("no test improves over the empty set")
    return 0


def cmd_serve(args) -> int:
    """Serve a trained built-in model over grammaticality-scorer/1."""
    model = scorer.load_model(args.model)
    out = sys.stdout
    out.write(json.dumps({"protocol": "grammaticality-scorer/1"}) + "\n")
    out.flush()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except ValueError:
            out.write(json.dumps({"error": "malformed request line"}) + "\n")
            out.flush()
            continue
        if obj.get("cmd") == "shutdown":
            return 0
        try:
            request_id = obj["id"]
            tokens = [str(t) for t in obj["tokens"]]
            score = float(model.score(tokens))
        except (KeyError, TypeError, ValueError):
            out.write(json.dumps({"error": f"bad request: {line[:200]}"}) + "\n")
            out.flush()
            continue
        out.write(json.dumps({"id": request_id, "score": score}) + "\n")
        out.flush()
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_tests_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tests", default=None,
                   help="comma-separated pro-form ids (default: all 18)")
    p.add_argument("--tests-file", default=None,
                   help="JSON inventory file overriding the built-in one")


def _add_scorer_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", default=None, help="built-in model file")
    group.add_argument("--external", default=None,
                       help="command line of an external scorer process")
    p.add_argument("--markup", action=argparse.BooleanOptionalAction,
                   default=None,
                   help="wrap the substituted pro-form in <S>/<E> markers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prosub",
        description="pro-form substitution tests over constituency data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-pairs",
                       help="sample constituent/distractor pairs from a treebank")
    p.add_argument("--treebank", required=True, help="directory of bracketed files")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-tokens", type=int, default=3)
    p.set_defaults(func=cmd_make_pairs)

    p = sub.add_parser("extract-corpus",
                       help="flatten a treebank to one tokenized sentence per line")
    p.add_argument("--treebank", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_corpus)

    p = sub.add_parser("build-data", help="build a contrastive training set")
    p.add_argument("--corpus", required=True,
                   help="one whitespace-tokenized sentence per line")
    p.add_argument("--scheme", required=True, choices=("focused", "nonfocused"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_tests_args(p)
    p.set_defaults(func=cmd_build_data)

    p = sub.add_parser("train", help="train the built-in n-gram scorer")
    p.add_argument("--data", required=True, help="dataset JSONL")
    p.add_argument("--dev-pairs", default=None,
                   help="eval-pair JSONL for best-epoch selection")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--hash-dim", type=int, default=1 << 20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--scorer", choices=("builtin",), default="builtin")
    p.add_argument("--markup", action=argparse.BooleanOptionalAction, default=None,
                   help="assert the evaluation markup convention (must match data)")
    _add_tests_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="pairwise constituent-detection accuracy")
    _add_scorer_args(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--strategy", default="maximum", choices=analysis.STRATEGIES)
    p.add_argument("--out", required=True)
    _add_tests_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("select-proforms",
                       help="greedy forward pro-form selection (maximum strategy)")
    _add_scorer_args(p)
    p.add_argument("--dev-pairs", required=True)
    p.add_argument("--max-k", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_tests_args(p)
    p.set_defaults(func=cmd_select_proforms)

    p = sub.add_parser("serve",
                       help="speak grammaticality-scorer/1 for a built-in model")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


_ERROR_KINDS = (
    CliError,
    datasets.DataConfigError,
    datasets.IngestionError,
    scorer.ConfigurationError,
    scorer.ModelFormatError,
    treebank.TreebankParseError,
    ProtocolError,
    ScorerProcessError,
    ValueError,
    OSError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ERROR_KINDS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
