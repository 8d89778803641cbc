"""Sparse Clifford polynomials over exact rationals or 64-bit floats."""

from __future__ import annotations

import enum
import math
import re
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Union

import numpy as np

from .blades import ParseError, Signature, blade_to_name, canonical_key, name_to_blade

Coefficient = Union[Fraction, float]


class Kind(str, enum.Enum):
    RATIONAL = "rational"
    FLOAT = "float"


class SignatureMismatch(ValueError):
    pass


class Term(NamedTuple):
    coeff: Coefficient
    blade: int


def _coerce(c, kind: Kind) -> Coefficient:
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if kind is Kind.RATIONAL:
        if isinstance(c, (int, Fraction)):
            return Fraction(c)
        raise TypeError(f"rational multivector needs int or Fraction coefficients, got {type(c).__name__}")
    if isinstance(c, (int, float, Fraction)):
        v = float(c)
        if not math.isfinite(v):
            raise ValueError(f"non-finite coefficient {v!r}")
        return v
    raise TypeError(f"float multivector needs real coefficients, got {type(c).__name__}")


class Multivector:
    """Immutable canonical sparse map blade -> nonzero coefficient.

    Terms are kept in printing order (ascending grade, then ascending mask).
    """

    __slots__ = ("sig", "kind", "_terms")

    def __init__(self, sig: Signature, terms: Mapping[int, object] | Iterable[tuple[int, object]] = (),
                 kind: Kind | str = Kind.RATIONAL):
        kind = Kind(kind)
        items = terms.items() if isinstance(terms, Mapping) else terms
        full = sig.full_mask
        acc: dict[int, Coefficient] = {}
        for blade, c in items:
            if not isinstance(blade, int) or blade < 0 or blade & ~full:
                raise ValueError(f"blade {blade!r} is not valid for {sig}")
            c = _coerce(c, kind)
            acc[blade] = acc[blade] + c if blade in acc else c
        self.sig = sig
        self.kind = kind
        self._terms = {b: acc[b] for b in sorted(acc, key=canonical_key) if acc[b] != 0}
        if kind is Kind.FLOAT:
            for v in self._terms.values():
                if not math.isfinite(v):
                    raise OverflowError("coefficient overflowed to a non-finite value")

    @classmethod
    def _trusted(cls, sig: Signature, kind: Kind, terms: dict[int, Coefficient]) -> "Multivector":
        # terms already coerced, nonzero and finite; only ordering is applied
        self = object.__new__(cls)
        self.sig = sig
        self.kind = kind
        self._terms = {b: terms[b] for b in sorted(terms, key=canonical_key)}
        return self

    @classmethod
    def zero(cls, sig: Signature, kind: Kind | str = Kind.RATIONAL) -> "Multivector":
        return cls(sig, (), kind)

    @classmethod
    def scalar(cls, sig: Signature, c=1, kind: Kind | str = Kind.RATIONAL) -> "Multivector":
        return cls(sig, {0: c}, kind)

    @classmethod
    def basis(cls, sig: Signature, blade: int | str, c=1, kind: Kind | str = Kind.RATIONAL) -> "Multivector":
        if isinstance(blade, str):
            blade = name_to_blade(blade, sig.n)
        return cls(sig, {blade: c}, kind)

    @property
    def terms(self) -> Mapping[int, Coefficient]:
        return MappingProxyType(self._terms)

    def term_list(self) -> list[Term]:
        return [Term(c, b) for b, c in self._terms.items()]

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.term_list())

    def coeff(self, blade: int | str) -> Coefficient:
        if isinstance(blade, str):
            blade = name_to_blade(blade, self.sig.n)
        return self._terms.get(blade, 0.0 if self.kind is Kind.FLOAT else Fraction(0))

    def to_kind(self, kind: Kind | str) -> "Multivector":
        kind = Kind(kind)
        if kind is self.kind:
            return self
        if kind is Kind.FLOAT:
            return Multivector(self.sig, {b: float(c) for b, c in self._terms.items()}, kind)
        return Multivector(self.sig, {b: Fraction(c) for b, c in self._terms.items()}, kind)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.sig == other.sig and self.kind is other.kind and self._terms == other._terms

    def __hash__(self):
        return hash((self.sig, self.kind, tuple(self._terms.items())))

    def __repr__(self):
        return f"Multivector({self.sig}, {to_text(self)!r}, kind={self.kind.value!r})"

    def __str__(self):
        return to_text(self)

    def __neg__(self):
        return Multivector._trusted(self.sig, self.kind, {b: -c for b, c in self._terms.items()})

    def __add__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return add(self, -other)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            from .engines import mul_sequential
            return mul_sequential(self, other)
        if isinstance(other, (int, float, Fraction)) and not isinstance(other, bool):
            return scale(other, self)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, Fraction)) and not isinstance(other, bool):
            return scale(other, self)
        return NotImplemented


def check_compatible(x: Multivector, y: Multivector) -> None:
    if x.sig != y.sig:
        raise SignatureMismatch(f"signature mismatch: {x.sig} vs {y.sig}")
    if x.kind is not y.kind:
        raise SignatureMismatch(f"coefficient kind mismatch: {x.kind.value} vs {y.kind.value}")


def add(x: Multivector, y: Multivector) -> Multivector:
    check_compatible(x, y)
    acc = dict(x._terms)
    for b, c in y._terms.items():
        s = acc[b] + c if b in acc else c
        if s == 0:
            acc.pop(b, None)
        else:
            acc[b] = s
    if x.kind is Kind.FLOAT and not all(math.isfinite(v) for v in acc.values()):
        raise OverflowError("coefficient overflowed to a non-finite value")
    return Multivector._trusted(x.sig, x.kind, acc)


def scale(c, x: Multivector) -> Multivector:
    c = _coerce(c, x.kind)
    return Multivector(x.sig, {b: c * v for b, v in x._terms.items()}, x.kind)


def term_list(x: Multivector) -> list[Term]:
    return x.term_list()


# --- text format ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<mon>[A-Za-z][A-Za-z0-9]*)|(?P<op>[-+*/]))")


def _tokens(text: str):
    pos = 0
    end = len(text)
    while True:
        while pos < end and text[pos].isspace():
            pos += 1
        if pos >= end:
            return
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        yield m.lastgroup, m.group(m.lastgroup), start
        pos = m.end()


def _number(tok: str, kind: Kind, pos: int):
    if kind is Kind.RATIONAL:
        return Fraction(tok)
    try:
        return float(int(tok)) if tok.isdigit() else float(tok)
    except OverflowError:
        raise ParseError(f"coefficient {tok[:20]}... out of float range", pos) from None


def parse(text: str, sig: Signature, kind: Kind | str = Kind.RATIONAL) -> Multivector:
    """Read a Clifford polynomial such as ``"2*e1we2 - 3*Id + 1/2*e3"``.

    Grammar: ``[sign] term (("+"|"-") term)*`` with
    ``term := coeff | monom | coeff "*" monom`` and
    ``coeff := integer | integer "/" integer | decimal``.
    """
    kind = Kind(kind)
    toks = list(_tokens(text))
    toks.append(("end", "", len(text)))
    i = 0
    terms: list[tuple[int, object]] = []

    def peek():
        return toks[i]

    def term(sign: int):
        nonlocal i
        typ, val, pos = toks[i]
        if typ == "num":
            i += 1
            coeff = _number(val, kind, pos)
            if toks[i][1] == "/" and toks[i][0] == "op":
                if "." in val:
                    raise ParseError("fraction numerator must be an integer", pos)
                i += 1
                dtyp, dval, dpos = toks[i]
                if dtyp != "num" or "." in dval:
                    raise ParseError("expected integer denominator", dpos)
                i += 1
                if int(dval) == 0:
                    raise ParseError("zero denominator", dpos)
                q = Fraction(int(val), int(dval))
                coeff = q if kind is Kind.RATIONAL else float(q)
            blade = 0
            if toks[i][0] == "op" and toks[i][1] == "*":
                i += 1
                mtyp, mval, mpos = toks[i]
                if mtyp != "mon":
                    raise ParseError("expected monomial after '*'", mpos)
                blade = name_to_blade(mval, sig.n, mpos)
                i += 1
        elif typ == "mon":
            blade = name_to_blade(val, sig.n, pos)
            coeff = 1
            i += 1
        else:
            raise ParseError("expected a term", pos)
        terms.append((blade, -coeff if sign < 0 else coeff))

    typ, val, pos = peek()
    sign = 1
    if typ == "op" and val in "+-":
        sign = -1 if val == "-" else 1
        i += 1
    term(sign)
    while True:
        typ, val, pos = peek()
        if typ == "end":
            break
        if typ != "op" or val not in "+-":
            raise ParseError(f"expected '+' or '-', got {val!r}", pos)
        i += 1
        term(-1 if val == "-" else 1)
    try:
        return Multivector(sig, terms, kind)
    except OverflowError as exc:
        raise ParseError(str(exc), 0) from None


def format_coeff(c: Coefficient) -> str:
    """Unsigned-agnostic rendering of one coefficient (sign included)."""
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    # shortest digits that round-trip, written positionally so the grammar
    # never needs exponents
    return np.format_float_positional(c, unique=True, trim="-")


def to_text(x: Multivector) -> str:
    if not x._terms:
        return "0"
    out = []
    for k, (b, c) in enumerate(x._terms.items()):
        neg = c < 0
        mag = format_coeff(-c if neg else c)
        name = blade_to_name(b)
        body = name if mag == "1" else f"{mag}*{name}"
        if k == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def to_lines(x: Multivector) -> str:
    """Machine exchange format: one ``<coeff> <monomial>`` line per term."""
    return "".join(f"{format_coeff(c)} {blade_to_name(b)}\n" for b, c in x._terms.items())


_LINE_COEFF = re.compile(r"-?\d+(?:/\d+|\.\d+)?")


def from_lines(text: str, sig: Signature, kind: Kind | str = Kind.RATIONAL) -> Multivector:
    kind = Kind(kind)
    terms = []
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.strip()
        if body:
            fields = body.split()
            if len(fields) != 2 or not _LINE_COEFF.fullmatch(fields[0]):
                raise ParseError(f"expected '<coeff> <monomial>', got {body!r}", offset)
            tok = fields[0]
            if "/" in tok:
                num, den = tok.split("/")
                if int(den) == 0:
                    raise ParseError("zero denominator", offset)
                q = Fraction(int(num), int(den))
                c = q if kind is Kind.RATIONAL else float(q)
            else:
                neg = tok.startswith("-")
                c = _number(tok.lstrip("-"), kind, offset)
                c = -c if neg else c
            terms.append((name_to_blade(fields[1], sig.n, offset + line.index(fields[1])), c))
        offset += len(line)
    return Multivector(sig, terms, kind)
