"""Random messages from the lemma hypothesis sets.

Samples live on a rational lattice: every entry of a batch is an integer
numerator over one common denominator, so each sampled message is an exact
rational and can be re-checked in exact arithmetic without conversion error.

For the box-simplex sets (S1, S1prime and the free coordinates of the q = 4
refinement) a coordinate is ``lo + width * k / N`` with integer ``0 <= k <= N``
and a fixed total for ``sum(k)``.  Points are drawn by rejection from a
Dirichlet draw, falling back to a shift-and-clip projection, then rounded to
the lattice by largest remainders.  With probability ``p_edge`` each
coordinate is first forced onto a face of the box, because the equality
cases of the bounds live there.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SamplerStuck
from .messages import Message, SetSpec, SetVariant

RESOLUTION = 1 << 16
REJECTION_ROUNDS = 20
P_EDGE = 0.25


@dataclass(frozen=True)
class MessageBatch:
    """``n`` messages stored as integer numerators over a common denominator."""

    num: np.ndarray
    den: int

    def __len__(self):
        return self.num.shape[0]

    @property
    def q(self) -> int:
        return self.num.shape[1]

    @property
    def floats(self) -> np.ndarray:
        return self.num / self.den

    def message(self, i: int) -> Message:
        return Message._trusted(tuple(Fraction(int(x), self.den) for x in self.num[i].tolist()))

    def where(self, mask: np.ndarray, other: "MessageBatch") -> "MessageBatch":
        """Rows from ``self`` where ``mask`` holds, from ``other`` elsewhere."""
        if other.den != self.den:
            raise ValueError("batches must share a denominator")
        return MessageBatch(np.where(mask[:, None], self.num, other.num), self.den)


def lattice_fill(rng: np.random.Generator, caps: np.ndarray, totals: np.ndarray,
                 p_edge: float = P_EDGE) -> np.ndarray:
    """Integer rows with ``0 <= k <= caps`` and row sums ``totals``."""
    caps = np.asarray(caps, dtype=np.int64)
    totals = np.asarray(totals, dtype=np.int64)
    n, q = caps.shape
    if np.any(caps.sum(axis=1) < totals) or np.any(totals < 0):
        raise SamplerStuck("box constraints cannot meet the required total")

    lo = np.zeros((n, q))
    hi = caps.astype(float)
    if p_edge > 0:
        edge = (rng.random((n, q)) < p_edge) & (caps > 0)
        up = rng.random((n, q)) < 0.5
        lo = np.where(edge & up, hi, 0.0)
        hi = np.where(edge & ~up, 0.0, hi)
        bad = (lo.sum(axis=1) > totals) | (hi.sum(axis=1) < totals)
        lo[bad] = 0.0
        hi[bad] = caps[bad]

    free = hi > lo
    y = np.empty((n, q))
    todo = np.arange(n)
    slack = totals - lo.sum(axis=1)
    for _ in range(REJECTION_ROUNDS):
        if todo.size == 0:
            break
        e = rng.exponential(size=(todo.size, q)) * free[todo]
        s = e.sum(axis=1, keepdims=True)
        s[s == 0] = 1.0
        cand = lo[todo] + slack[todo, None] * e / s
        ok = np.all(cand <= hi[todo] + 1e-9, axis=1)
        y[todo[ok]] = cand[ok]
        stalled = ok.mean() < 0.01
        todo = todo[~ok]
        if stalled:
            break
    if todo.size:
        y[todo] = _shift_clip(rng.random((todo.size, q)) * hi[todo].max(axis=1, keepdims=True),
                              lo[todo], hi[todo], totals[todo])
    y = np.clip(y, lo, hi)
    return _round_rows(y, lo.astype(np.int64), hi.astype(np.int64), totals)


def _shift_clip(u, lo, hi, totals):
    """``clip(u + t, lo, hi)`` with the per-row shift ``t`` found by bisection."""
    a = np.full(len(u), -hi.max() - 1.0)
    b = np.full(len(u), hi.max() + 1.0)
    for _ in range(100):
        t = (a + b) / 2
        s = np.clip(u + t[:, None], lo, hi).sum(axis=1)
        below = s < totals
        a = np.where(below, t, a)
        b = np.where(below, b, t)
    return np.clip(u + ((a + b) / 2)[:, None], lo, hi)


def _round_rows(y, lo, hi, totals):
    k = np.clip(np.floor(y).astype(np.int64), lo, hi)
    deficit = totals - k.sum(axis=1)
    frac = np.where(k < hi, y - k, -1.0)
    rank = np.argsort(np.argsort(-frac, axis=1, kind="stable"), axis=1, kind="stable")
    k = k + ((rank < deficit[:, None]) & (k < hi))
    # rare leftovers from rounding: repair row by row
    for i in np.nonzero(k.sum(axis=1) != totals)[0]:
        while k[i].sum() < totals[i]:
            j = np.flatnonzero(k[i] < hi[i])
            if j.size == 0:
                raise SamplerStuck("cannot round onto the lattice")
            k[i, j[0]] += 1
        while k[i].sum() > totals[i]:
            j = np.flatnonzero(k[i] > lo[i])
            if j.size == 0:
                raise SamplerStuck("cannot round onto the lattice")
            k[i, j[0]] -= 1
    return k


# -- lattice layouts ----------------------------------------------------------

def s1prime_den(q: int, b: int, resolution: int = RESOLUTION) -> int:
    return (q - 1) * (q - b) * resolution


Q4_UNIT = RESOLUTION // 4  # entries of the q = 4 refinement are (6*unit + k) / (36*unit)
Q4_DEN = 36 * Q4_UNIT


def sample_s1(n, q, rng, p_edge=P_EDGE, resolution=RESOLUTION) -> MessageBatch:
    caps = np.full((n, q), resolution)
    k = lattice_fill(rng, caps, np.full(n, (q - 1) * resolution), p_edge)
    return MessageBatch(k, (q - 1) * resolution)


def sample_s1prime(n, q, b, rng, p_edge=P_EDGE, resolution=RESOLUTION) -> MessageBatch:
    caps = np.full((n, q), resolution)
    k = lattice_fill(rng, caps, np.full(n, b * resolution), p_edge)
    return MessageBatch((q - b - 1) * resolution + k, s1prime_den(q, b, resolution))


def sample_s2(n, q, rng, den: int) -> MessageBatch:
    if den % (q - 1):
        raise ValueError("denominator must be divisible by q - 1")
    num = np.full((n, q), den // (q - 1), dtype=np.int64)
    num[np.arange(n), rng.integers(q, size=n)] = 0
    return MessageBatch(num, den)


def sample_thirds_pattern(n, rng, p_edge=P_EDGE, max_thirds=2) -> np.ndarray:
    """Boolean (n, 4) masks of the positions holding 1/3."""
    t = rng.integers(0, min(max_thirds, 1) + 1, size=n)
    if max_thirds >= 2:
        t = np.where(rng.random(n) < p_edge / 2, 2, t)
    order = np.argsort(rng.random((n, 4)), axis=1)
    return np.argsort(order, axis=1) < t[:, None]


def sample_q4_given_thirds(thirds: np.ndarray, rng, p_edge=P_EDGE) -> MessageBatch:
    """q = 4 refinement messages with 1/3 exactly at ``thirds``."""
    n = thirds.shape[0]
    t = thirds.sum(axis=1)
    if np.any(t > 2):
        raise SamplerStuck("at most two entries can equal 1/3")
    u = Q4_UNIT
    caps = np.where(thirds | (t == 2)[:, None], 0, 5 * u)
    totals = np.select([t == 0, t == 1], [12 * u, 6 * u], 0)
    k = lattice_fill(rng, caps, totals, p_edge)
    num = np.where(thirds, 12 * u, 6 * u + k)
    return MessageBatch(num, Q4_DEN)


def sample_q4(n, rng, p_edge=P_EDGE, max_thirds=2) -> MessageBatch:
    return sample_q4_given_thirds(sample_thirds_pattern(n, rng, p_edge, max_thirds), rng, p_edge)


def sample_batch(spec: SetSpec, n: int, rng: np.random.Generator, p_edge: float = P_EDGE) -> MessageBatch:
    v = spec.variant
    if v is SetVariant.S1:
        return sample_s1(n, spec.q, rng, p_edge)
    if v is SetVariant.S1prime:
        return sample_s1prime(n, spec.q, spec.b, rng, p_edge)
    if v is SetVariant.S2:
        return sample_s2(n, spec.q, rng, (spec.q - 1) * RESOLUTION)
    return sample_q4(n, rng, p_edge)


def sample_union(spec: SetSpec, n: int, rng: np.random.Generator, p_edge: float = P_EDGE,
                 p_pinned: float | None = None) -> MessageBatch:
    """Draws from ``spec`` (S1prime or its q = 4 refinement) united with S2.

    A row comes from S2 with probability ``p_pinned`` (default ``p_edge``).
    """
    p_pinned = p_edge if p_pinned is None else p_pinned
    base = sample_batch(spec, n, rng, p_edge)
    pinned = sample_s2(n, spec.q, rng, base.den)
    return pinned.where(rng.random(n) < p_pinned, base)


def sample_message(spec: SetSpec, rng: np.random.Generator, p_edge: float = P_EDGE) -> Message:
    """One exact message from ``spec``."""
    return sample_batch(spec, 1, rng, p_edge).message(0)
