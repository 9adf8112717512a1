"""Coding toolbox: prefix-free bit doubling, burst-correcting repetition
codes, majority, and a two-slot streaming plurality.

The repetition code with r copies of an ell-symbol payload corrects t
bursts, each confined to an interval of at most ell symbols, as long as
t < r - t (a burst interval shorter than one copy hits each payload
position at most once).
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence, TypeVar

T = TypeVar("T")


class CodeError(ValueError):
    pass


class DecodeError(CodeError):
    pass


class LengthError(CodeError):
    pass


class EmptyInput(CodeError):
    pass


def double_code(x: str) -> str:
    """Encode a bit string by doubling every bit and appending "01".

    The terminator makes the code prefix-free and gives the encoded
    length 2*len(x) + 2.
    """
    if any(ch not in "01" for ch in x):
        raise CodeError(f"not a bit string: {x!r}")
    return "".join(ch + ch for ch in x) + "01"


def double_decode(y: str) -> str:
    """Inverse of double_code. Raises DecodeError on malformed input."""
    out = []
    i = 0
    while i + 1 < len(y):
        a, b = y[i], y[i + 1]
        if a == b:
            out.append(a)
            i += 2
        elif a == "0" and b == "1":
            if i + 2 != len(y):
                raise DecodeError("terminator before end of string")
            return "".join(out)
        else:
            raise DecodeError(f"invalid pair {a}{b} at offset {i}")
    raise DecodeError("no terminator found")


def rep_encode(x: Sequence[T], r: int) -> list[T]:
    """Concatenate r copies of x."""
    return list(x) * r


def rep_decode(y: Sequence[T], r: int) -> list[T]:
    """Positionwise majority over the r copies contained in y."""
    if len(y) % r != 0:
        raise LengthError(f"length {len(y)} not divisible by {r}")
    ell = len(y) // r
    return [maj([y[i + k * ell] for k in range(r)]) for i in range(ell)]


def maj(xs: Iterable[T]) -> T:
    """Most frequent element; ties break toward earliest first occurrence."""
    xs = list(xs)
    if not xs:
        raise EmptyInput("maj of empty sequence")
    counts = Counter(xs)
    best = max(counts.values())
    for x in xs:
        if counts[x] == best:
            return x
    raise AssertionError("unreachable")


class PluralityStream:
    """Two-slot Misra-Gries style candidate tracker.

    Finding the true plurality is only guaranteed when one value clearly
    dominates the stream (>= 80% occupancy is the contract exercised by
    the callers here); the classical 1/3 candidacy bound is weaker than
    what finalize() reports and is deliberately not relied upon.
    """

    __slots__ = ("v1", "c1", "v2", "c2", "seen")

    def __init__(self):
        self.v1 = None
        self.c1 = 0
        self.v2 = None
        self.c2 = 0
        self.seen = 0

    def update(self, v) -> None:
        if v is None:
            raise CodeError("plurality stream takes non-empty values")
        self.seen += 1
        if self.v1 == v and self.c1 > 0:
            self.c1 += 1
        elif self.v2 == v and self.c2 > 0:
            self.c2 += 1
        elif self.c1 == 0:
            self.v1, self.c1 = v, 1
        elif self.c2 == 0:
            self.v2, self.c2 = v, 1
        else:
            self.c1 -= 1
            self.c2 -= 1

    def finalize(self):
        """Value held in the slot with the larger counter (slot 1 on ties)."""
        if self.seen == 0:
            return None
        if self.c1 >= self.c2:
            return self.v1 if self.c1 > 0 else None
        return self.v2

    def state(self) -> tuple:
        return (self.v1, self.c1, self.v2, self.c2, self.seen)


def plurality_update(s: PluralityStream, v) -> PluralityStream:
    s.update(v)
    return s


def plurality_finalize(s: PluralityStream):
    return s.finalize()
