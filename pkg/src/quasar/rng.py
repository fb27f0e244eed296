"""Counter-based random streams (Philox) keyed by seed and stream id.

``BitStream`` hands out single bits in order.  It is used for measurement
collapses, one bit per probabilistic collapse.  ``frame_words`` returns the
words of one (qubit, epoch) frame stream.  Word ``j`` depends only on the key
and ``j``, so a longer shot count extends a shorter one.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(seed: int, stream: int) -> np.ndarray:
    return np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)


class BitStream:
    """Sequential random bits from Philox keyed by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed, self.stream = int(seed), int(stream)
        self._gen = np.random.Philox(key=_key(seed, stream))
        self._word = 0
        self._left = 0
        self.consumed = 0

    def bit(self) -> int:
        if self._left == 0:
            self._word = int(self._gen.random_raw())
            self._left = 64
        b = self._word & 1
        self._word >>= 1
        self._left -= 1
        self.consumed += 1
        return b


class ReplayStream:
    """Bit source that serves a fixed prefix and then records fresh bits from ``fallback``."""

    def __init__(self, bits=(), fallback=None):
        self.bits = list(bits)
        self.fallback = fallback
        self.consumed = 0

    def bit(self) -> int:
        if self.consumed < len(self.bits):
            b = self.bits[self.consumed]
        else:
            if self.fallback is None:
                raise RuntimeError("replay stream exhausted")
            b = self.fallback.bit()
            self.bits.append(b)
        self.consumed += 1
        return int(b)


def frame_words(seed: int, stream: int, qubit: int, epoch: int, count: int, w: int = 64) -> np.ndarray:
    """``count`` random w-bit words for ``(seed, stream, qubit, epoch)``."""
    counter = np.array([0, int(qubit), int(epoch), 0], dtype=np.uint64)
    gen = np.random.Philox(key=_key(seed, stream), counter=counter)
    raw = gen.random_raw(count) if count else np.zeros(0, dtype=np.uint64)
    raw = np.asarray(raw, dtype=np.uint64)
    if w < 64:
        raw = raw & np.uint64((1 << w) - 1)
    return raw.astype({8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}[w])
