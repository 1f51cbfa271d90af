"""Wire-protocol conformance for the external scorer adapter."""

import sys
import time
from pathlib import Path

import pytest

from prosub.external import (
    ExternalScorer,
    ProtocolError,
    ScorerHandle,
    ScorerProcessError,
)

STUB = Path(__file__).parent / "stubs" / "stub_scorer.py"


def _cmd(mode):
    return [sys.executable, str(STUB), mode]


def _handle(mode, **kwargs):
    return ScorerHandle(_cmd(mode), **kwargs)


def test_constant_stub():
    with _handle("constant") as handle:
        assert handle.score_batch([["a"], ["b", "c"], ["d"]]) == [0.5, 0.5, 0.5]


def test_tokencount_stub_matches_local_recomputation():
    inputs = [["w"] * n for n in (1, 3, 12, 7, 25)]
    with _handle("tokencount") as handle:
        scores = handle.score_batch(inputs)
    assert scores == [(len(x) % 10) / 10 for x in inputs]


def test_empty_batch_is_noop():
    with _handle("constant") as handle:
        assert handle.score_batch([]) == []
        assert handle.score_batch([["x"]]) == [0.5]


def test_multiple_batches_increment_ids():
    with _handle("tokencount") as handle:
        assert handle.score_batch([["a"]]) == [0.1]
        assert handle.score_batch([["a", "b"]]) == [0.2]
        assert handle._next_id == 2


def test_order_restored_from_shuffled_responses():
    inputs = [["w"] * n for n in range(1, 31)]
    with _handle("shuffled") as handle:
        scores = handle.score_batch(inputs)
    assert scores == [(n % 10) / 10 for n in range(1, 31)]


def test_marker_tokens_pass_through_verbatim():
    with _handle("markers") as handle:
        scores = handle.score_batch([
            ["the", "<S>", "it", "<E>", "ran"],
            ["the", "it", "ran"],
        ])
    assert scores == [0.9, 0.1]


def test_garbage_handshake():
    with pytest.raises(ProtocolError):
        _handle("garbage")


def test_immediate_exit():
    with pytest.raises(ScorerProcessError):
        _handle("exit")


def test_handshake_timeout():
    t0 = time.monotonic()
    with pytest.raises(ProtocolError) as err:
        _handle("sleepy", handshake_timeout=0.3)
    assert "handshake" in str(err.value)
    assert time.monotonic() - t0 < 5.0


def test_out_of_range_score():
    handle = _handle("outofrange")
    with pytest.raises(ProtocolError) as err:
        handle.score_batch([["a"]])
    assert "[0,1]" in str(err.value)


def test_malformed_response_line():
    handle = _handle("malformed")
    with pytest.raises(ProtocolError):
        handle.score_batch([["a"]])


def test_unknown_response_id():
    handle = _handle("wrongid")
    with pytest.raises(ProtocolError):
        handle.score_batch([["a"]])


def test_batch_timeout():
    handle = _handle("silent", batch_timeout=0.3)
    t0 = time.monotonic()
    with pytest.raises(ProtocolError):
        handle.score_batch([["a"]])
    assert time.monotonic() - t0 < 5.0
    assert handle._proc.poll() is not None  # child was killed


def test_clean_shutdown_exit_code():
    handle = _handle("constant")
    handle.score_batch([["a"]])
    handle.shutdown()
    assert handle._proc.returncode == 0


def test_double_shutdown_noop():
    handle = _handle("constant")
    handle.shutdown()
    handle.shutdown()
    with pytest.raises(ScorerProcessError):
        handle.score_batch([["a"]])


def test_hung_shutdown_forced():
    handle = _handle("deaf")
    handle.score_batch([["a"]])
    t0 = time.monotonic()
    handle.shutdown(timeout=0.4)
    assert time.monotonic() - t0 < 5.0
    assert handle._proc.poll() is not None


def test_external_scorer_wrapper():
    handle = _handle("tokencount")
    scorer = ExternalScorer(handle)
    assert scorer.score_batch([["a", "b", "c"]]) == [0.3]
    handle.shutdown()


def test_spawn_failure():
    with pytest.raises(ScorerProcessError):
        ScorerHandle(["/nonexistent/binary/for/sure"])
