"""Serve a fine-tuned checkpoint over the grammaticality-scorer/1 protocol.

Newline-delimited JSON on stdio: a handshake line at startup, then
``{"id": N, "tokens": [...]}`` requests answered by ``{"id": N, "score": S}``
with the probability of the grammatical class. A malformed request line
gets an ``{"error": ...}`` response and the loop continues;
``{"cmd": "shutdown"}`` ends the process. Single-threaded by design; the
client batches requests for throughput.
"""

import argparse
import json
import sys

from .data import to_text
from .modeling import assert_single_unit, load_checkpoint, score_texts

PROTOCOL_NAME = "grammaticality-scorer/1"


def serve(checkpoint: str, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    tokenizer, model, meta = load_checkpoint(checkpoint)
    if meta.get("markup"):
        assert_single_unit(tokenizer)
    model.eval()

    def reply(obj: dict) -> None:
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    reply({"protocol": PROTOCOL_NAME})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            reply({"error": f"malformed request line: {exc}"})
            continue
        if not isinstance(request, dict):
            reply({"error": "request must be a JSON object"})
            continue
        if request.get("cmd") == "shutdown":
            return 0
        if "id" not in request or "tokens" not in request:
            reply({"error": "request needs 'id' and 'tokens' fields"})
            continue
        try:
            tokens = [str(t) for t in request["tokens"]]
            text = to_text(tokens)
        except TypeError:
            reply({"error": "'tokens' must be a list of strings"})
            continue
        score = score_texts(model, tokenizer, [text])[0]
        reply({"id": request["id"], "score": score})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plugin-serve",
        description="serve a checkpoint over grammaticality-scorer/1",
    )
    parser.add_argument("--checkpoint", required=True)
    args = parser.parse_args(argv)
    try:
        return serve(args.checkpoint)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
