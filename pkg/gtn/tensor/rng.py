"""Counter-based, platform-independent random streams.

Algorithm
---------
Draw ``i`` (0-based) of a stream with seed ``s`` is the SplitMix64 output

    z = s + (i + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

which is exactly the sequence of the reference sequential SplitMix64
generator seeded with ``s``. Because draws depend only on (seed, index) they
are generated as vectorized uint64 arithmetic.

* uniform: ``(z >> 11) * 2**-53`` in [0, 1).
* normal: Box-Muller over consecutive uniform pairs (u1, u2):
  ``r = sqrt(-2 ln(1 - u1))``, emitting ``r cos(2 pi u2)`` then
  ``r sin(2 pi u2)``. A request for n normals consumes 2 * ceil(n / 2)
  uniforms; an odd trailing value is discarded.
* split(label): child seed = first 8 bytes (little endian) of
  BLAKE2b(seed as u64 LE || label UTF-8). Children depend only on the parent
  seed and the label, never on how many draws the parent has made.

A stream is single-owner: never draw from one instance on two threads.
"""
from __future__ import annotations

import hashlib
import math
from collections.abc import Sequence

import numpy as np

from gtn.tensor.core import Tensor

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MAX_SEED = (1 << 64) - 1
_TWO_POW_MINUS_53 = 1.0 / 9007199254740992.0


def _shape(shape: int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(dim) for dim in shape)


class Rng:
    def __init__(self, seed: int) -> None:
        seed = int(seed)
        if not 0 <= seed <= _MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.counter = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, counter={self.counter})"

    # ── Raw stream ────────────────────────────────────────────────────────

    def next_uint64(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"cannot draw a negative count ({n})")
        index = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = index * _GAMMA + np.uint64(self.seed)
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
        return z

    def uniform(self, shape: int | Sequence[int]) -> np.ndarray:
        dims = _shape(shape)
        raw = self.next_uint64(math.prod(dims))
        return ((raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_MINUS_53).reshape(dims)

    def normal(self, shape: int | Sequence[int]) -> np.ndarray:
        dims = _shape(shape)
        n = math.prod(dims)
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n].reshape(dims)

    # ── Derived draws ─────────────────────────────────────────────────────

    def bernoulli(self, shape: int | Sequence[int], keep_prob: float) -> np.ndarray:
        """0/1 float mask where each entry is 1 with probability ``keep_prob``."""
        return (self.uniform(shape) < keep_prob).astype(np.float64)

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """``n`` integers in [low, high)."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        span = high - low
        return low + np.minimum(np.floor(self.uniform(n) * span), span - 1).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n), swapping from the top down."""
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for step, i in enumerate(range(n - 1, 0, -1)):
            j = int(u[step] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def split(self, label: str) -> Rng:
        digest = hashlib.blake2b(
            self.seed.to_bytes(8, "little") + label.encode("utf-8"), digest_size=8
        ).digest()
        return Rng(int.from_bytes(digest, "little"))


def rand_uniform(rng: Rng, shape: int | Sequence[int], lo: float = 0.0, hi: float = 1.0) -> Tensor:
    if not lo < hi:
        raise ValueError(f"rand_uniform needs lo < hi, got lo={lo}, hi={hi}")
    return Tensor.wrap(lo + (hi - lo) * rng.uniform(shape), "rand_uniform")


def rand_normal(
    rng: Rng, shape: int | Sequence[int], mean: float = 0.0, std: float = 1.0
) -> Tensor:
    if not std > 0:
        raise ValueError(f"rand_normal needs std > 0, got {std}")
    return Tensor.wrap(mean + std * rng.normal(shape), "rand_normal")
