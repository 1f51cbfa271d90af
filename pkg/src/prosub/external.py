"""Child-process scorer protocol, version ``grammaticality-scorer/1``.

An external scorer is any executable that speaks newline-delimited JSON on
stdio:

* on startup it prints ``{"protocol": "grammaticality-scorer/1"}``;
* for each request ``{"id": N, "tokens": [...]}`` it prints exactly one
  response ``{"id": N, "score": S}`` with S a finite float;
* on ``{"cmd": "shutdown"}`` it exits.

The client sends one batch at a time with strictly increasing ids and
re-orders responses by id, so the scorer may answer out of order but must
answer every request exactly once.  Reads go through a daemon reader
thread, which is what makes the timeouts portable.
"""

import json
import math
import queue
import subprocess
import threading
from typing import Sequence

HANDSHAKE_TIMEOUT = 60.0
BATCH_TIMEOUT = 300.0
PROTOCOL_NAME = "grammaticality-scorer/1"


class ProtocolError(RuntimeError):
    """The child process violated grammaticality-scorer/1."""


class ScorerProcessError(RuntimeError):
    """The child process could not be started or died unexpectedly."""


class _Reader(threading.Thread):
    """Pump child stdout lines into a queue; None marks EOF."""

    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: queue.Queue[str | None] = queue.Queue()
        self.start()

    def run(self):
        try:
            for line in self.stream:
                self.lines.put(line)
        except ValueError:
            pass
        self.lines.put(None)

    def get(self, timeout: float) -> str | None:
        try:
            return self.lines.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError


class ScorerHandle:
    """Client side of one external scorer process."""

    def __init__(self, command: Sequence[str],
                 handshake_timeout: float = HANDSHAKE_TIMEOUT,
                 batch_timeout: float = BATCH_TIMEOUT):
        self.command = list(command)
        self.batch_timeout = batch_timeout
        self._next_id = 0
        self._closed = False
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerProcessError(
                f"could not start scorer {self.command!r}: {exc}"
            ) from exc
        self._reader = _Reader(self._proc.stdout)
        self._handshake(handshake_timeout)

    def _handshake(self, timeout: float) -> None:
        try:
            line = self._reader.get(timeout)
        except TimeoutError:
            self._kill()
            raise ProtocolError(f"no handshake within {timeout:.0f}s")
        if line is None:
            self._kill()
            raise ScorerProcessError("scorer exited before the handshake")
        try:
            obj = json.loads(line)
        except ValueError:
            self._kill()
            raise ProtocolError(f"handshake is not JSON: {line!r}")
        if not isinstance(obj, dict) or obj.get("protocol") != PROTOCOL_NAME:
            self._kill()
            raise ProtocolError(
                f"expected protocol {PROTOCOL_NAME!r}, got {obj!r}"
            )

    def _send(self, obj) -> None:
        try:
            self._proc.stdin.write(json.dumps(obj, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerProcessError(f"scorer pipe closed: {exc}") from exc

    def score_batch(self, batch: Sequence[Sequence[str]]) -> list[float]:
        """Score token sequences; returns scores in batch order."""
        if self._closed:
            raise ScorerProcessError("scorer already shut down")
        if not batch:
            return []
        ids = []
        for tokens in batch:
            request_id = self._next_id
            self._next_id += 1
            ids.append(request_id)
            self._send({"id": request_id, "tokens": list(tokens)})

        pending = set(ids)
        scores: dict[int, float] = {}
        while pending:
            try:
                line = self._reader.get(self.batch_timeout)
            except TimeoutError:
                self._kill()
                raise ProtocolError(
                    f"no response within {self.batch_timeout:.0f}s "
                    f"({len(pending)} of {len(ids)} outstanding)"
                )
            if line is None:
                self._kill()
                raise ScorerProcessError(
                    f"scorer exited with {len(pending)} responses outstanding"
                )
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                response_id = obj["id"]
                score = float(obj["score"])
            except (ValueError, TypeError, KeyError):
                self._kill()
                raise ProtocolError(f"malformed response line: {line!r}")
            if response_id not in pending:
                self._kill()
                raise ProtocolError(
                    f"response id {response_id!r} does not match an in-flight request"
                )
            if not math.isfinite(score) or not 0.0 <= score <= 1.0:
                self._kill()
                raise ProtocolError(
                    f"score for id {response_id} outside [0,1]: {score!r}"
                )
            pending.discard(response_id)
            scores[response_id] = score
        return [scores[i] for i in ids]

    def shutdown(self, timeout: float = 10.0) -> None:
        """Send the shutdown command and wait for the child to exit."""
        if self._closed:
            return
        self._closed = True
        try:
            self._send({"cmd": "shutdown"})
        except ScorerProcessError:
            pass
        try:
            self._proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self._kill()

    def _kill(self) -> None:
        self._closed = True
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.shutdown()
        return False


class ExternalScorer:
    """Adapter giving a ScorerHandle the in-process Scorer surface."""

    def __init__(self, handle: ScorerHandle):
        self.handle = handle

    def score_batch(self, batch: Sequence[Sequence[str]]) -> list[float]:
        return self.handle.score_batch(batch)
