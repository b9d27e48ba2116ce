"""Messages of the sum-product recursion for q-colorings.

A message from a vertex to its parent is a probability vector over the q
colors whose i-th entry is proportional to the number of colorings of the
vertex's subtree in which the vertex avoids color i.  Entries are either
all :class:`fractions.Fraction` (exact mode) or all ``float`` (float mode);
the mode is carried by the values themselves.

Colors are 1-indexed at the API boundary (``pinned_message(4, 1)`` pins the
first color) while ``Message.entries`` is an ordinary 0-indexed tuple.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, ZeroDenominator

Scalar = Union[Fraction, float]

EPS_TOL = 1e-12


def _is_exact_value(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def parse_scalar(x) -> Scalar:
    """Parse a JSON scalar: ``"num/den"`` strings are exact, numbers are floats."""
    if isinstance(x, str):
        return Fraction(x)
    if _is_exact_value(x):
        return Fraction(x)
    return float(x)


def format_scalar(x: Scalar):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


@dataclass(frozen=True)
class Message:
    """A length-q probability vector with entries in [0, 1/(q-1)]."""

    entries: tuple

    def __post_init__(self):
        raw = tuple(self.entries)
        if len(raw) < 2:
            raise ValueError("a message needs at least two colors")
        if all(_is_exact_value(x) for x in raw):
            vals = tuple(Fraction(x) for x in raw)
            total = sum(vals)
            hi = Fraction(1, len(vals) - 1)
            if total != 1:
                raise ValueError(f"message entries sum to {total}, not 1")
            if any(x < 0 or x > hi for x in vals):
                raise ValueError(f"message entry outside [0, {hi}]: {vals}")
        else:
            vals = tuple(float(x) for x in raw)
            hi = 1.0 / (len(vals) - 1)
            if not all(math.isfinite(x) for x in vals):
                raise ValueError("message entries must be finite")
            if abs(math.fsum(vals) - 1.0) > EPS_TOL:
                raise ValueError(f"message entries sum to {math.fsum(vals)!r}, not 1")
            if any(x < -EPS_TOL or x > hi + EPS_TOL for x in vals):
                raise ValueError(f"message entry outside [0, {hi}]: {vals}")
        object.__setattr__(self, "entries", vals)

    @classmethod
    def _trusted(cls, entries: tuple) -> "Message":
        # skips validation; for callers whose entries are valid by construction
        m = object.__new__(cls)
        object.__setattr__(m, "entries", entries)
        return m

    @property
    def q(self) -> int:
        return len(self.entries)

    @property
    def exact(self) -> bool:
        return isinstance(self.entries[0], Fraction)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def to_float(self) -> "Message":
        return Message(tuple(float(x) for x in self.entries))

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.entries])

    def permuted(self, perm: Sequence[int]) -> "Message":
        """Relabel colors: color ``c`` (0-indexed) becomes ``perm[c]``."""
        out = [None] * self.q
        for c, x in enumerate(self.entries):
            out[perm[c]] = x
        return Message(tuple(out))

    def to_json(self) -> dict:
        return {"q": self.q, "entries": [format_scalar(x) for x in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "Message":
        m = cls(tuple(parse_scalar(x) for x in obj["entries"]))
        if m.q != obj["q"]:
            raise ValueError(f"declared q={obj['q']} but {m.q} entries given")
        return m

    def __repr__(self):
        body = ", ".join(str(x) if isinstance(x, Fraction) else repr(x) for x in self.entries)
        return f"Message({body})"


def pinned_message(q: int, color: int, exact: bool = True) -> Message:
    """Message sent by a vertex pinned to ``color`` (1-indexed)."""
    if q < 2:
        raise DomainError(f"q must be at least 2, got {q}")
    if not 1 <= color <= q:
        raise DomainError(f"color {color} outside [1, {q}]")
    hi = Fraction(1, q - 1) if exact else 1.0 / (q - 1)
    zero = Fraction(0) if exact else 0.0
    return Message(tuple(zero if i == color else hi for i in range(1, q + 1)))


def uniform_message(q: int, exact: bool = True) -> Message:
    """Message sent by a free leaf."""
    if q < 2:
        raise DomainError(f"q must be at least 2, got {q}")
    v = Fraction(1, q) if exact else 1.0 / q
    return Message((v,) * q)


def _common_q(messages: Sequence[Message], q: int | None) -> int:
    if not messages:
        raise ValueError("need at least one message")
    qs = {m.q for m in messages}
    if len(qs) != 1:
        raise ValueError(f"messages disagree on q: {sorted(qs)}")
    (mq,) = qs
    if q is not None and q != mq:
        raise ValueError(f"messages have q={mq}, expected {q}")
    return mq


def _coerce(messages: Sequence[Message]) -> list[tuple]:
    # mixing modes degrades to float
    if all(m.exact for m in messages):
        return [m.entries for m in messages]
    return [tuple(float(x) for x in m.entries) for m in messages]


def update(children: Sequence[Message], q: int | None = None) -> Message:
    """Combine the children's messages into the message sent to the parent.

    Entry i is ``sum_{j != i} prod_l child_l[j]`` divided by
    ``(q - 1) * sum_j prod_l child_l[j]``.
    """
    children = list(children)
    q = _common_q(children, q)
    cols = zip(*_coerce(children))
    prods = [math.prod(col) for col in cols]
    total = sum(prods)
    if total == 0:
        raise ZeroDenominator("children messages rule out every color")
    denom = (q - 1) * total
    # entries are nonnegative, at most 1/(q-1) and sum to 1 whenever the inputs are messages
    return Message._trusted(tuple((total - p) / denom for p in prods))


def product_sum(messages: Sequence[Message]) -> Scalar:
    """``sum_j prod_i messages[i][j]``."""
    messages = list(messages)
    _common_q(messages, None)
    return sum(math.prod(col) for col in zip(*_coerce(messages)))


def l1_distance(a: Message, b: Message) -> Scalar:
    if a.q != b.q:
        raise ValueError(f"q mismatch: {a.q} vs {b.q}")
    x, y = _coerce([a, b])
    return sum(abs(u - v) for u, v in zip(x, y))


def coupled(a: Message, b: Message, tol: float = EPS_TOL) -> bool:
    """True iff the two q=4 messages take the value 1/3 at the same positions."""
    if a.q != 4 or b.q != 4:
        raise DomainError("coupling is defined for q = 4 only")
    third = Fraction(1, 3)
    return all(_eq(x, third, tol) == _eq(y, third, tol) for x, y in zip(a, b))


class SetVariant(str, enum.Enum):
    S1 = "S1"
    S1prime = "S1prime"
    S2 = "S2"
    S1prime_q4b2 = "S1prime_q4b2"


@dataclass(frozen=True)
class SetSpec:
    """Names one of the message sets used by the contraction lemmas.

    ``S1`` and ``S2`` ignore ``b``; ``S1prime`` needs ``q >= b + 2`` so that
    its lower bound is positive.
    """

    q: int
    b: int
    variant: SetVariant

    def __post_init__(self):
        object.__setattr__(self, "variant", SetVariant(self.variant))
        if self.q < 2 or self.b < 1:
            raise DomainError(f"need q >= 2 and b >= 1, got q={self.q}, b={self.b}")
        if self.variant is SetVariant.S1prime and self.q < self.b + 2:
            raise DomainError(f"S1prime needs q >= b + 2, got q={self.q}, b={self.b}")
        if self.variant is SetVariant.S1prime_q4b2 and (self.q, self.b) != (4, 2):
            raise DomainError("S1prime_q4b2 is defined for q = 4, b = 2 only")


def s1prime_lower(q: int, b: int) -> Fraction:
    """Smallest entry allowed in S1prime: (1 - 1/(q-b)) / (q-1)."""
    if q < b + 2:
        raise DomainError(f"need q >= b + 2, got q={q}, b={b}")
    return Fraction(q - b - 1, (q - 1) * (q - b))


def _le(x, y, tol):
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x <= y
    return float(x) <= float(y) + tol


def _eq(x, y, tol):
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= tol


def _is_permutation_of(m: Message, target: Iterable[Fraction], tol) -> bool:
    xs = sorted(m.entries)
    ys = sorted(target)
    return all(_eq(x, y, tol) for x, y in zip(xs, ys))


def in_set(m: Message, spec: SetSpec, tol: float = EPS_TOL) -> bool:
    """Membership test with closed bounds; float mode widens each bound by ``tol``."""
    if m.q != spec.q:
        raise ValueError(f"message has q={m.q}, spec has q={spec.q}")
    q = spec.q
    hi = Fraction(1, q - 1)
    v = spec.variant
    if v is SetVariant.S1:
        return (_eq(sum(m.entries), Fraction(1), tol)
                and all(_le(Fraction(0), x, tol) and _le(x, hi, tol) for x in m))
    if v is SetVariant.S2:
        return _is_permutation_of(m, [Fraction(0)] + [hi] * (q - 1), tol)
    if v is SetVariant.S1prime:
        lo = s1prime_lower(q, spec.b)
        return all(_le(lo, x, tol) and _le(x, hi, tol) for x in m)
    # q = 4, b = 2 refinement
    third, sixth = Fraction(1, 3), Fraction(1, 6)
    if not all(_le(sixth, x, tol) and _le(x, third, tol) for x in m):
        return False
    if not all(_eq(x, third, tol) or _le(x, Fraction(11, 36), tol) for x in m):
        return False
    n_third = sum(_eq(x, third, tol) for x in m)
    if n_third == 2:
        return _is_permutation_of(m, [sixth, sixth, third, third], tol)
    return True


# -- vectorized float kernels used by the sampling sweeps -------------------

def batch_product_sum(children: np.ndarray) -> np.ndarray:
    """Row-wise product sums for an array of shape (n, b, q)."""
    return children.prod(axis=1).sum(axis=1)


def batch_update(children: np.ndarray) -> np.ndarray:
    """Row-wise message update for an array of shape (n, b, q)."""
    prods = children.prod(axis=1)
    total = prods.sum(axis=1, keepdims=True)
    if np.any(total == 0):
        raise ZeroDenominator("children messages rule out every color")
    q = children.shape[2]
    return (total - prods) / ((q - 1) * total)
