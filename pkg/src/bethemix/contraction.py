"""Contraction factors, the c = exp(1/c) threshold, and product-sum lower bounds."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import CeilingAmbiguous, DomainError

C_BRACKET = (1.5, 2.0)
CEIL_GUARD = 1e-9

# q = 4, b = 2 constants
PRODUCT_EQUALITY_Q4B2 = Fraction(2, 9)
PRODUCT_GAP_Q4B2 = Fraction(49, 216)
PER_CHILD_FACTOR_Q4B2 = Fraction(24, 49)


def kappa(q: int, b: int) -> float:
    """One-step l1 contraction factor (b/q) * (1 - 1/(q-b))**(b*b/q - b)."""
    if q < b + 2:
        raise DomainError(f"kappa needs q >= b + 2, got q={q}, b={b}")
    return (b / q) * (1.0 - 1.0 / (q - b)) ** (-b + b * b / q)


def kappa_q4b2() -> Fraction:
    """Contraction factor for q = 4 on the binary tree: two children at 24/49 each."""
    return 2 * PER_CHILD_FACTOR_Q4B2


def solve_c(tolerance: float = 1e-12) -> float:
    """Root of c = exp(1/c) by bisection on [1.5, 2].

    ``c - exp(1/c)`` is increasing on the bracket and changes sign there.
    Bisection stops once the residual is within ``tolerance`` and the bracket
    is narrower than ``tolerance / 8``, so the midpoint is also within
    ``tolerance / 16`` of the root.
    """
    if not tolerance > 0:
        raise DomainError("tolerance must be positive")
    lo, hi = C_BRACKET
    mid = (lo + hi) / 2
    for _ in range(200):
        mid = (lo + hi) / 2
        r = mid - math.exp(1.0 / mid)
        if abs(r) <= tolerance and hi - lo <= tolerance / 8:
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return mid


@lru_cache(maxsize=None)
def _c_precise() -> float:
    return solve_c(1e-12)


def threshold_q(b: int) -> int:
    """Smallest q covered by the general theorem: 1 + ceil(c*b)."""
    if b < 2:
        raise DomainError(f"threshold_q needs b >= 2, got {b}")
    x = _c_precise() * b
    if abs(x - round(x)) < CEIL_GUARD:
        raise CeilingAmbiguous(f"c*b = {x!r} is within {CEIL_GUARD} of an integer (b={b})")
    return 1 + math.ceil(x)


def g(b: float) -> float:
    """kappa evaluated on the curve q = c*b + 1."""
    if b < 2:
        raise DomainError(f"g needs b >= 2, got {b}")
    c = _c_precise()
    return (b / (c * b + 1)) * (1 - 1 / ((c - 1) * b + 1)) ** (-b + b * b / (c * b + 1))


def min_contracting_q(b: int) -> int:
    """Smallest q >= b + 2 with kappa(q, b) < 1."""
    q = b + 2
    while kappa(q, b) >= 1:
        q += 1
    return q


def _power(base: Fraction, exponent: Fraction):
    """Exact power when the exponent is an integer, float otherwise."""
    if exponent.denominator == 1:
        return base ** int(exponent)
    return float(base) ** float(exponent)


def bound_lemma_prod(q: int, b: int) -> Fraction:
    """Lower bound (q-b)/(q-1)**b on product sums over S1."""
    if not q > b >= 1:
        raise DomainError(f"need q > b >= 1, got q={q}, b={b}")
    return Fraction(q - b, (q - 1) ** b)


def bound_lemma_prodnew(q: int, b: int):
    """Lower bound on product sums when every message lies in S1prime."""
    return bound_lemma_bb(q, b, 0)


def bound_lemma_bb(q: int, b: int, s: int):
    """Lower bound on product sums with ``s`` pinned messages and ``b - s`` in S1prime.

    ``(q-s)/(q-1)**b * (1 - 1/(q-b))**(b - s - (b-s)**2/(q-s))``; returned as a
    Fraction whenever the exponent is an integer.
    """
    if not q > b >= 1:
        raise DomainError(f"need q > b >= 1, got q={q}, b={b}")
    if not 0 <= s <= b:
        raise DomainError(f"need 0 <= s <= b, got s={s}")
    base = 1 - Fraction(1, q - b)
    exponent = (b - s) - Fraction((b - s) ** 2, q - s)
    scale = Fraction(q - s, (q - 1) ** b)
    p = _power(base, exponent)
    return scale * p if isinstance(p, Fraction) else float(scale) * p


def bound_lemma_prodlb4() -> tuple[Fraction, Fraction]:
    """(equality value, gap bound) for q = 4, b = 2 product sums."""
    return PRODUCT_EQUALITY_Q4B2, PRODUCT_GAP_Q4B2


@dataclass(frozen=True)
class ContractionRecord:
    q: int
    b: int
    kappa: float
    threshold_q: int
    contracts: bool

    def to_json(self) -> dict:
        return asdict(self)


def contraction_record(q: int, b: int) -> ContractionRecord:
    k = kappa(q, b)
    return ContractionRecord(q=q, b=b, kappa=k, threshold_q=threshold_q(b), contracts=k < 1)


def contraction_table(b_values) -> list[dict]:
    """Rows for q = threshold_q(b) and its neighbours q +- 1, with g(b)."""
    rows = []
    for b in b_values:
        t = threshold_q(b)
        gb = g(b)
        for q in (t - 1, t, t + 1):
            if q < b + 2:
                continue
            row = contraction_record(q, b).to_json()
            row["g"] = gb
            rows.append(row)
    return rows
