"""Deterministic sub-stream derivation from a single 64-bit seed.

Every random choice in the toolkit flows from one explicit seed.  Components
that need independent randomness (one stream per sentence, per test, per
epoch) derive a sub-stream keyed by the seed plus a tuple of labels, so the
stream consumed for one unit of work never depends on how much randomness
its neighbours consumed.  Derivation goes through BLAKE2b, which is stable
across platforms and Python versions (unlike ``hash()``).
"""

import hashlib
import random
import struct

MASK64 = (1 << 64) - 1


def substream(seed: int, *keys: int | str) -> random.Random:
    """Return a ``random.Random`` seeded from ``(seed, *keys)``.

    Keys may be non-negative ints or strings; the encoding is injective so
    distinct key tuples never collide by construction of the input bytes.
    """
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<Q", seed & MASK64))
    for key in keys:
        if isinstance(key, int):
            h.update(b"i" + struct.pack("<q", key))
        elif isinstance(key, str):
            raw = key.encode("utf-8")
            h.update(b"s" + struct.pack("<I", len(raw)) + raw)
        else:
            raise TypeError(f"unsupported substream key type: {type(key)!r}")
    return random.Random(int.from_bytes(h.digest(), "big"))
