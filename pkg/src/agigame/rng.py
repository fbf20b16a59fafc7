"""Portable, reproducible random streams.

Every stream is a PCG64 (XSL-RR 128/64) generator whose 128-bit state and
increment are taken straight from a SHA-256 digest, so any implementation of
PCG64 can reproduce the draws without numpy's seeding machinery::

    digest    = sha256(f"{seed}:{label}".encode("utf-8"))
    state     = int.from_bytes(digest[:16], "little")
    increment = int.from_bytes(digest[16:], "little") | 1

Each draw advances ``state = state * M + increment (mod 2**128)`` and emits the
XSL-RR output of the *new* state. Derived distributions use only uniform
doubles ``(raw >> 11) * 2**-53`` and libm functions; see docs/formats.md for
the exact recipes and published test vectors.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

_BLOCK = 512
_INV53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


def _digest(seed: int, label: str) -> bytes:
    return hashlib.sha256(f"{int(seed)}:{label}".encode("utf-8")).digest()


def derive_seed(master_seed: int, label: str) -> int:
    """64-bit child seed, e.g. ``derive_seed(master, "episode/3")``."""
    return int.from_bytes(_digest(master_seed, label)[:8], "little")


def episode_seed(master_seed: int, index: int) -> int:
    return derive_seed(master_seed, f"episode/{index}")


class Stream:
    """Buffered uniform/normal/poisson draws from one PCG64 state."""

    __slots__ = ("_bitgen", "_buf", "_pos", "label")

    def __init__(self, state: int, increment: int, label: str = ""):
        bitgen = np.random.PCG64()
        bitgen.state = {
            "bit_generator": "PCG64",
            "state": {"state": state, "inc": increment | 1},
            "has_uint32": 0,
            "uinteger": 0,
        }
        self._bitgen = bitgen
        self._buf: list[float] = []
        self._pos = 0
        self.label = label

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs. Bypasses (and must not be mixed with) buffering."""
        if self._pos < len(self._buf):
            raise RuntimeError("raw() called on a stream with buffered uniforms")
        return self._bitgen.random_raw(n)

    def _refill(self) -> None:
        raw = self._bitgen.random_raw(_BLOCK)
        self._buf = ((raw >> np.uint64(11)).astype(np.float64) * _INV53).tolist()
        self._pos = 0

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def normal(self) -> float:
        # Box-Muller, cosine branch only: two uniforms per normal.
        u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(_TWO_PI * u2)

    def lognormal(self, mu: float, sigma: float) -> float:
        return math.exp(mu + sigma * self.normal())

    def poisson(self, lam: float) -> int:
        """Knuth's product-of-uniforms method; intended for small rates."""
        if lam <= 0.0:
            return 0
        limit = math.exp(-lam)
        k = 0
        p = self.random()
        while p > limit:
            k += 1
            p *= self.random()
        return k

    def below(self, n: int) -> int:
        """Integer in [0, n) as ``floor(u * n)``."""
        return min(int(self.random() * n), n - 1)


def derive_rng(seed: int, label: str) -> Stream:
    """Independent stream for one (seed, purpose) pair."""
    d = _digest(seed, label)
    return Stream(int.from_bytes(d[:16], "little"), int.from_bytes(d[16:], "little"), label)
