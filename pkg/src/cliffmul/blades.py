"""Binary coding of basis monomials and the Walsh-function blade product.

A basis monomial e_{i1} w e_{i2} w ... of Cl(p,q) is stored as an integer bit
mask: generator e_i sets bit i-1.  The identity monomial ``Id`` is 0.
Generators 1..p square to +1, generators p+1..p+q square to -1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

MAX_DIM = 32

_FACTOR = re.compile(r"e([1-9][0-9]*)")


class ParseError(ValueError):
    """Malformed textual input.  ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


@dataclass(frozen=True)
class Signature:
    """Signature (p, q) of a diagonal quadratic form."""

    p: int
    q: int = 0
    qmask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name, v in (("p", self.p), ("q", self.q)):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.p + self.q > MAX_DIM:
            raise ValueError(f"p + q must be <= {MAX_DIM}, got {self.p + self.q}")
        object.__setattr__(self, "qmask", ((1 << self.q) - 1) << self.p)

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Read ``"p,q"`` (or a bare ``"p"``)."""
        parts = text.replace(" ", "").split(",")
        if len(parts) not in (1, 2) or not all(s.isdigit() for s in parts):
            raise ValueError(f"signature must look like 'p,q', got {text!r}")
        return cls(*(int(s) for s in parts))

    def __str__(self):
        return f"Cl({self.p},{self.q})"


def grade(b: int) -> int:
    return b.bit_count()


def generators(b: int) -> list[int]:
    """1-based generator indices present in ``b``, ascending."""
    out = []
    i = 1
    while b:
        if b & 1:
            out.append(i)
        b >>= 1
        i += 1
    return out


def canonical_key(b: int) -> tuple[int, int]:
    """Sort key for printing order: grade first, then mask."""
    return (b.bit_count(), b)


def oplus(a: int, b: int) -> int:
    """Mod-2 addition of binary tuples: index of the product monomial."""
    return a ^ b


def gray(x: int, n: int) -> int:
    return (x ^ (x << 1)) & ((1 << n) - 1)


def inverse_gray(b: int, n: int) -> int:
    """Inverse of :func:`gray` on ``n``-bit words.

    Bit i of the result is the XOR of bits 0..i of ``b`` (prefix parity from
    the least significant end).
    """
    c = b
    shift = 1
    while shift < n:
        c ^= c << shift
        shift <<= 1
    return c & ((1 << n) - 1)


def walsh(a: int, c: int) -> int:
    """Walsh function w_a evaluated at c: (-1)^popcount(a & c)."""
    return -1 if (a & c).bit_count() & 1 else 1


def twist(a: int, b: int, sig: Signature) -> int:
    # repeated generators contribute one sign each, plus the metric sign for
    # every repeated generator that squares to -1
    common = a & b
    return -1 if (common.bit_count() + (common & sig.qmask).bit_count()) & 1 else 1


def blade_product(a: int, b: int, sig: Signature) -> tuple[int, int]:
    """Product of two basis monomials as ``(sign, blade)``."""
    return twist(a, b, sig) * walsh(a, inverse_gray(b, sig.n)), a ^ b


def oracle_blade_product(a: int, b: int, sig: Signature) -> tuple[int, int]:
    """Reference product by explicit reordering of generator lists.

    Concatenates the generator lists of ``a`` and ``b`` and counts the
    adjacent transpositions a bubble sort needs, then contracts repeated
    generators with the metric.
    """
    word = generators(a) + generators(b)
    swaps = 0
    for i in range(len(word)):
        for j in range(len(word) - 1 - i):
            if word[j] > word[j + 1]:
                word[j], word[j + 1] = word[j + 1], word[j]
                swaps += 1
    sign = -1 if swaps & 1 else 1
    blade = 0
    k = 0
    while k < len(word):
        g = word[k]
        if k + 1 < len(word) and word[k + 1] == g:
            if g > sig.p:
                sign = -sign
            k += 2
        else:
            blade |= 1 << (g - 1)
            k += 1
    return sign, blade


def blade_to_name(b: int) -> str:
    if b == 0:
        return "Id"
    return "w".join(f"e{i}" for i in generators(b))


def name_to_blade(s: str, n: int, offset: int = 0) -> int:
    """Parse a canonical monomial name.  ``offset`` shifts error positions."""
    if s == "Id":
        return 0
    if not s:
        raise ParseError("empty monomial", offset)
    b = 0
    last = 0
    pos = 0
    for part in s.split("w"):
        m = _FACTOR.fullmatch(part)
        if m is None:
            raise ParseError(f"malformed monomial {s!r}", offset + pos)
        k = int(m.group(1))
        if k > n:
            raise ParseError(f"generator index e{k} out of range for dimension {n}", offset + pos)
        if k <= last:
            raise ParseError(f"non-canonical order in monomial {s!r}", offset + pos)
        b |= 1 << (k - 1)
        last = k
        pos += len(part) + 1
    return b
