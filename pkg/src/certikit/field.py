"""Arithmetic in the prime field of order 2^61 - 1.

Field elements are plain ``int`` values kept in canonical form ``0 <= a < P``.
Using bare integers instead of a wrapper class keeps the protocol hot loops
cheap; every function here returns a canonical representative.
"""
from __future__ import annotations

import random
import struct

P = (1 << 61) - 1
MASK = P
HALF = 1 << 60  # inverse of 2

FieldElem = int


class FieldDomainError(ValueError):
    """Raised for operations undefined on the given input (inverse of zero)."""


def fold(x: int) -> FieldElem:
    """Reduce a non-negative integer below 2^122 using the Mersenne identity."""
    x = (x & MASK) + (x >> 61)
    x = (x & MASK) + (x >> 61)
    return x - P if x >= P else x


def elem(x: int) -> FieldElem:
    """Canonical representative of an arbitrary (possibly negative) integer."""
    return x % P


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    s = a + b
    return s - P if s >= P else s


def sub(a: FieldElem, b: FieldElem) -> FieldElem:
    d = a - b
    return d + P if d < 0 else d


def neg(a: FieldElem) -> FieldElem:
    return P - a if a else 0


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return fold(a * b)


def power(a: FieldElem, e: int) -> FieldElem:
    return pow(a, e, P)


def inv(a: FieldElem) -> FieldElem:
    """Multiplicative inverse via Fermat's little theorem."""
    if a % P == 0:
        raise FieldDomainError("zero has no inverse")
    return pow(a, P - 2, P)


def to_bytes(a: FieldElem) -> bytes:
    return struct.pack("<Q", a)


def from_bytes(data: bytes) -> FieldElem:
    (a,) = struct.unpack("<Q", data)
    if a >= P:
        raise FieldDomainError(f"non-canonical field encoding {a}")
    return a


class RandomSource:
    """Seeded source of uniform field elements.

    Wraps :class:`random.Random`; the seed is reduced to 64 bits so that it can
    be echoed in stats and replayed.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self._rng = random.Random(self.seed)

    def sample(self) -> FieldElem:
        return self._rng.randrange(P)

    def bits(self, k: int) -> int:
        return self._rng.getrandbits(k)

    def randrange(self, n: int) -> int:
        return self._rng.randrange(n)


def sample(rng: RandomSource) -> FieldElem:
    return rng.sample()
