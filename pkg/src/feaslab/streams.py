"""Replayable, seed-addressed random streams.

Every value is a pure function of (seed, stream_id, index): the generator is
counter-based, so re-reading index n after reading index n+k returns the
identical value, and a later pass can regenerate any prefix in O(n) time with
O(1) memory.  The mixing function is the 64-bit finalizer used by splitmix64,
applied to a per-stream key advanced by the golden-ratio increment; the same
arithmetic is duplicated in the compiled kernels, so both backends draw
bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """Avalanche a 64-bit integer (splitmix64 finalizer)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, stream_id: int) -> int:
    """Derive the internal 64-bit key for a (seed, stream_id) stream."""
    k = mix64(seed & _MASK)
    return mix64(k ^ mix64((stream_id + _GOLDEN) & _MASK))


@dataclass(frozen=True)
class StreamKey:
    """Address of one stream: a 64-bit seed plus a stream tag.

    The tag distinguishes the observation stream from the dummy-uniform
    stream of a system (and separates systems when sampling independently).
    """

    seed: int
    stream_id: int

    def derived(self) -> int:
        return stream_key(self.seed, self.stream_id)


# Tag layout: even tags are observation streams, odd tags dummy-uniform
# streams.  Under common random numbers every system uses the tags of
# system 0.
TRUTH_TAG_BASE = 1 << 40


def y_tag(system_index: int, crn: bool = False) -> int:
    return 0 if crn else 2 * system_index


def u_tag(system_index: int, crn: bool = False) -> int:
    return 1 if crn else 2 * system_index + 1


def truth_tag(system_index: int) -> int:
    return TRUTH_TAG_BASE + system_index


def uniform_at(stream: StreamKey, n: int) -> float:
    """The n-th U(0,1) value of a stream (n >= 1), on the 2^-53 grid."""
    if n < 1:
        raise ValueError(f"stream index must be >= 1, got {n}")
    v = mix64((stream.derived() + n * _GOLDEN) & _MASK)
    return (v >> 11) * _INV_2_53


def dummy_indicator(u: float, h: float) -> int:
    """Threshold a shared uniform: 1 iff u <= h.

    Using one uniform for all thresholds makes the indicators monotone in h,
    which the multi-threshold decision coupling relies on.
    """
    return 1 if u <= h else 0


def bernoulli_at(stream: StreamKey, n: int, p: float) -> int:
    """Replayable Bernoulli(p) draw at index n."""
    return dummy_indicator(uniform_at(stream, n), p)


class ReplayableStream:
    """Convenience view over a StreamKey with bound helpers."""

    __slots__ = ("key", "_derived")

    def __init__(self, key: StreamKey):
        self.key = key
        self._derived = key.derived()

    def uniform(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"stream index must be >= 1, got {n}")
        v = mix64((self._derived + n * _GOLDEN) & _MASK)
        return (v >> 11) * _INV_2_53

    def bernoulli(self, n: int, p: float) -> int:
        return 1 if self.uniform(n) <= p else 0


def derive_rep_seed(master_seed: int, rep_index: int) -> int:
    """Per-macro-replication seed: reproducible and order-independent."""
    return mix64((master_seed & _MASK) ^ mix64((rep_index + 1) & _MASK))
