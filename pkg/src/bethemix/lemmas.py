"""Randomized verification of the contraction lemmas.

Each registered check draws inputs satisfying a lemma's hypotheses, evaluates
its inequality in vectorized floating point, and re-checks in exact rational
arithmetic every sample whose float slack is too small to trust.  The exact
path goes through the scalar functions in :mod:`bethemix.messages`, so it
shares no code with the vectorized path.

Margins are ``rhs - lhs`` for upper bounds and ``value - bound`` for lower
bounds; a negative margin confirmed in exact arithmetic is a violation.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .contraction import (
    PER_CHILD_FACTOR_Q4B2,
    PRODUCT_EQUALITY_Q4B2,
    PRODUCT_GAP_Q4B2,
    bound_lemma_bb,
    bound_lemma_prod,
    kappa,
    kappa_q4b2,
)
from .errors import UnsupportedRegime
from .messages import (
    SetSpec,
    SetVariant,
    batch_product_sum,
    batch_update,
    in_set,
    l1_distance,
    product_sum,
    s1prime_lower,
    update,
)
from .parallel import run_tasks
from .sampling import (
    P_EDGE,
    Q4_DEN,
    MessageBatch,
    sample_q4,
    sample_q4_given_thirds,
    sample_s1,
    sample_s1prime,
    sample_s2,
    sample_thirds_pattern,
    sample_union,
    s1prime_den,
)

CHUNK = 20_000
REL_SLACK = 1e-10
MAX_WITNESSES = 12
MAX_VIOLATIONS_KEPT = 5

THIRD = Fraction(1, 3)
SIXTH = Fraction(1, 6)


class Outcome(NamedTuple):
    margin: float
    ok: bool
    witness: dict | None = None


@dataclass(frozen=True)
class LemmaCheck:
    id: str
    aliases: tuple[str, ...]
    statement: str
    regime_text: str
    regime: Callable[[int, int], bool]
    sample: Callable
    evaluate: Callable
    exact: Callable
    batch_exact: bool = False


# -- helpers ----------------------------------------------------------------

def _stack(batches) -> np.ndarray:
    return np.stack([bt.floats for bt in batches], axis=1)


def _l1(x, y):
    return np.abs(x - y).sum(axis=1)


def _rows(batches, i):
    return [bt.message(i) for bt in batches]


def _compare_power(x: Fraction, base: Fraction, exponent: Fraction) -> int:
    """Sign of ``x - base**exponent`` for ``x >= 0`` and ``base > 0``, exactly."""
    t, r = exponent.denominator, exponent.numerator
    lhs, rhs = x ** t, base ** r
    return (lhs > rhs) - (lhs < rhs)


def _general(q, b):
    return b >= 1 and q >= b + 2


def _q4b2(q, b):
    return (q, b) == (4, 2)


def _s1p(q, b):
    return SetSpec(q, b, SetVariant.S1prime)


Q4SPEC = SetSpec(4, 2, SetVariant.S1prime_q4b2)


# -- Lemma 4: product sums over S1 ---------------------------------------------

def _prod_sample(q, b, n, rng, p_edge):
    return {"alphas": [sample_s1(n, q, rng, p_edge) for _ in range(b)]}


def _prod_eval(x, q, b):
    bound = float(bound_lemma_prod(q, b))
    return batch_product_sum(_stack(x["alphas"])) - bound, np.full(len(x["alphas"][0]), bound)


def _prod_exact(x, i, q, b):
    m = product_sum(_rows(x["alphas"], i)) - bound_lemma_prod(q, b)
    return Outcome(float(m), m >= 0)


# -- Claim 1: structure of S1prime -----------------------------------------------

def _sp_sample(q, b, n, rng, p_edge):
    return {"gamma": sample_s1prime(n, q, b, rng, p_edge)}


def _sp_eval(x, q, b):
    g = x["gamma"]
    hi = g.den // (q - 1)
    lo = int(s1prime_lower(q, b) * g.den)
    at_hi = g.num == hi
    count = at_hi.sum(axis=1)
    rest_ok = np.all(at_hi | (g.num == lo), axis=1)
    ok = (count < b) | ((count == b) & rest_ok)
    return np.where(ok, b - count, -1).astype(float), np.ones(len(g))


def _sp_exact(x, i, q, b):
    gamma = x["gamma"].message(i)
    hi, lo = Fraction(1, q - 1), s1prime_lower(q, b)
    count = sum(v == hi for v in gamma)
    ok = count < b or (count == b and all(v == lo for v in gamma if v != hi))
    return Outcome(float(b - count) if ok else -1.0, ok)


# -- Lemma 6: closure of S1prime u S2 ------------------------------------------

def _closure_sample(q, b, n, rng, p_edge):
    return {"betas": [sample_union(_s1p(q, b), n, rng, p_edge) for _ in range(b)]}


def _closure_eval(x, q, b):
    f = batch_update(_stack(x["betas"]))
    lo, hi = float(s1prime_lower(q, b)), 1.0 / (q - 1)
    margin = np.minimum((f - lo).min(axis=1), (hi - f).min(axis=1))
    return margin, np.full(len(f), hi)


def _closure_exact(x, i, q, b):
    f = update(_rows(x["betas"], i))
    lo, hi = s1prime_lower(q, b), Fraction(1, q - 1)
    m = min(min(v - lo, hi - v) for v in f)
    ok = in_set(f, _s1p(q, b))
    return Outcome(float(m), ok and m >= 0)


# -- Lemma 7: one-child Lipschitz bound -----------------------------------------

def _ineqb_sample(q, b, n, rng, p_edge):
    return {
        "gammas": [sample_union(_s1p(q, b), n, rng, p_edge) for _ in range(b - 1)],
        "alpha": sample_s1prime(n, q, b, rng, p_edge),
        "beta": sample_s1prime(n, q, b, rng, p_edge),
    }


def _ineqb_eval(x, q, b):
    a, be = x["alpha"].floats, x["beta"].floats
    n = len(a)
    if x["gammas"]:
        g = _stack(x["gammas"])
        z = g.prod(axis=1)
    else:
        g = np.empty((n, 0, q))
        z = np.ones((n, q))
    fa = batch_update(np.concatenate([g, a[:, None, :]], axis=1))
    fb = batch_update(np.concatenate([g, be[:, None, :]], axis=1))
    A = (z * a).sum(axis=1)
    rhs = _l1(a, be)
    return rhs - _l1(fa, fb) * (q - 1) ** b * A, rhs


def _ineqb_exact(x, i, q, b):
    gammas = _rows(x["gammas"], i)
    a, be = x["alpha"].message(i), x["beta"].message(i)
    z = [math.prod(col) for col in zip(*gammas)] if gammas else [Fraction(1)] * q
    A = sum(zj * aj for zj, aj in zip(z, a))
    lhs = l1_distance(update(gammas + [a]), update(gammas + [be])) * (q - 1) ** b * A
    m = l1_distance(a, be) - lhs
    return Outcome(float(m), m >= 0)


# -- Lemmas 8 and 9: lower bounds with S1prime children ----------------------------

def _mixed_children(q, b, s, n, rng, p_edge):
    """Children 0..b-s-1 from S1prime, the rest pinned."""
    den = s1prime_den(q, b)
    out = []
    for ell in range(b):
        free = sample_s1prime(n, q, b, rng, p_edge)
        pinned = sample_s2(n, q, rng, den)
        out.append(pinned.where(ell >= b - s, free))
    return out


def _bb_sample(q, b, n, rng, p_edge):
    s = rng.integers(0, b + 1, size=n)
    return {"s": s, "alphas": _mixed_children(q, b, s, n, rng, p_edge)}


def _bb_eval(x, q, b):
    bounds = np.array([float(bound_lemma_bb(q, b, s)) for s in range(b + 1)])[x["s"]]
    return batch_product_sum(_stack(x["alphas"])) - bounds, bounds


def _lower_bound_outcome(value: Fraction, q, b, s) -> Outcome:
    """``value >= (q-s)/(q-1)^b * (1-1/(q-b))^(b-s-(b-s)^2/(q-s))``, decided exactly."""
    scale = Fraction(q - s, (q - 1) ** b)
    base = 1 - Fraction(1, q - b)
    exponent = (b - s) - Fraction((b - s) ** 2, q - s)
    ok = _compare_power(value / scale, base, exponent) >= 0
    m = float(value) - float(bound_lemma_bb(q, b, s))
    return Outcome(max(m, 0.0) if ok else min(m, 0.0), ok)


def _bb_exact(x, i, q, b):
    return _lower_bound_outcome(product_sum(_rows(x["alphas"], i)), q, b, int(x["s"][i]))


def _prodnew_sample(q, b, n, rng, p_edge):
    return {"alphas": [sample_s1prime(n, q, b, rng, p_edge) for _ in range(b)]}


def _prodnew_eval(x, q, b):
    bound = float(bound_lemma_bb(q, b, 0))
    return batch_product_sum(_stack(x["alphas"])) - bound, np.full(len(x["alphas"][0]), bound)


def _prodnew_exact(x, i, q, b):
    return _lower_bound_outcome(product_sum(_rows(x["alphas"], i)), q, b, 0)


# -- Lemma 5: contraction for q >= b + 2 -----------------------------------------

def _contractb_sample(q, b, n, rng, p_edge):
    s = rng.integers(0, b + 1, size=n)
    den = s1prime_den(q, b)
    alphas, betas = [], []
    for ell in range(b):
        pinned = sample_s2(n, q, rng, den)
        is_pinned = ell >= b - s
        alphas.append(pinned.where(is_pinned, sample_s1prime(n, q, b, rng, p_edge)))
        betas.append(pinned.where(is_pinned, sample_s1prime(n, q, b, rng, p_edge)))
    return {"s": s, "alphas": alphas, "betas": betas}


def _contractb_eval(x, q, b):
    A, B = _stack(x["alphas"]), _stack(x["betas"])
    lhs = _l1(batch_update(A), batch_update(B))
    rhs = kappa(q, b) * np.abs(A - B).sum(axis=2).max(axis=1)
    return rhs - lhs, rhs


def _contractb_exact(x, i, q, b):
    alphas, betas = _rows(x["alphas"], i), _rows(x["betas"], i)
    lhs = l1_distance(update(alphas), update(betas))
    M = max(l1_distance(a, be) for a, be in zip(alphas, betas))
    if M == 0:
        return Outcome(-float(lhs), lhs == 0)
    # lhs <= (b/q) * base**e * M  <=>  lhs*q/(b*M) <= base**e
    base = 1 - Fraction(1, q - b)
    ok = _compare_power(lhs * q / (b * M), base, Fraction(b * b, q) - b) <= 0
    m = kappa(q, b) * float(M) - float(lhs)
    return Outcome(max(m, 0.0) if ok else min(m, 0.0), ok)


# -- q = 4, b = 2 ----------------------------------------------------------------

def _prodbd_sample(q, b, n, rng, p_edge):
    return {"gamma": sample_s1(n, 4, rng, p_edge), "xi": sample_s1(n, 4, rng, p_edge)}


def _prodbd_eval(x, q, b):
    p = (x["gamma"].floats * x["xi"].floats).sum(axis=1)
    return 1 / 3 - p, np.full(len(p), 1 / 3)


def _prodbd_exact(x, i, q, b):
    m = THIRD - product_sum([x["gamma"].message(i), x["xi"].message(i)])
    return Outcome(float(m), m >= 0)


def _union_q4(n, rng, p_edge):
    return sample_union(Q4SPEC, n, rng, p_edge)


def _closure4_sample(q, b, n, rng, p_edge):
    return {"gamma": _union_q4(n, rng, p_edge), "xi": _union_q4(n, rng, p_edge)}


def _closure4_eval(x, q, b):
    f = batch_update(_stack([x["gamma"], x["xi"]]))
    near_third = np.abs(f - 1 / 3) < 1e-9
    m = np.minimum((f - 1 / 6).min(axis=1), (1 / 3 - f).min(axis=1))
    m = np.minimum(m, np.where(near_third, np.inf, 11 / 36 - f).min(axis=1))
    # entries at 1/3 need exact arithmetic to tell apart from 11/36 < f < 1/3
    m = np.where(near_third.any(axis=1), np.minimum(m, 0.0), m)
    return m, np.full(len(f), 1 / 3)


def _closure4_exact(x, i, q, b):
    f = update([x["gamma"].message(i), x["xi"].message(i)])
    m = min(min(v - SIXTH, THIRD - v) for v in f)
    m = min([m] + [Fraction(11, 36) - v for v in f if v != THIRD])
    ok = in_set(f, Q4SPEC)
    return Outcome(float(m) if ok else min(float(m), -1.0), ok)


def _coupled_pair(n, rng, p_edge, max_thirds=2):
    thirds = sample_thirds_pattern(n, rng, p_edge, max_thirds)
    return sample_q4_given_thirds(thirds, rng, p_edge), sample_q4_given_thirds(thirds, rng, p_edge)


def _ineqb4_sample(q, b, n, rng, p_edge):
    a, be = _coupled_pair(n, rng, p_edge)
    return {"alpha": a, "beta": be, "gamma": _union_q4(n, rng, p_edge)}


def _pair_change(x):
    a, be, g = x["alpha"].floats, x["beta"].floats, x["gamma"].floats
    d = _l1(batch_update(np.stack([a, g], 1)), batch_update(np.stack([be, g], 1)))
    return a, be, g, d


def _ineqb4_eval(x, q, b):
    a, be, g, d = _pair_change(x)
    rhs = _l1(a, be)
    return rhs - 9 * (a * g).sum(axis=1) * d, rhs


def _ineqb4_exact(x, i, q, b):
    a, be, g = x["alpha"].message(i), x["beta"].message(i), x["gamma"].message(i)
    d = l1_distance(update([a, g]), update([be, g]))
    m = l1_distance(a, be) - 9 * product_sum([a, g]) * d
    return Outcome(float(m), m >= 0)


def _sineq3_sample(q, b, n, rng, p_edge):
    a, be = _coupled_pair(n, rng, p_edge)
    return {"alpha": a, "beta": be, "gamma": sample_q4(n, rng, p_edge, max_thirds=1)}


def _sineq3_eval(x, q, b):
    a, be, g, d = _pair_change(x)
    rhs = _l1(a, be)
    return rhs - d / float(PER_CHILD_FACTOR_Q4B2), rhs


def _sineq3_exact(x, i, q, b):
    a, be, g = x["alpha"].message(i), x["beta"].message(i), x["gamma"].message(i)
    d = l1_distance(update([a, g]), update([be, g]))
    m = l1_distance(a, be) - Fraction(49, 24) * d
    return Outcome(float(m), m >= 0)


def _prodlb4_sample(q, b, n, rng, p_edge):
    return {"gamma": _union_q4(n, rng, p_edge), "xi": _union_q4(n, rng, p_edge)}


def _prodlb4_eval(x, q, b):
    p = (x["gamma"].floats * x["xi"].floats).sum(axis=1)
    near = np.abs(p - 2 / 9) < 1e-10
    return np.where(near, 0.0, p - 49 / 216), np.full(len(p), 49 / 216)


def equality_shape(gamma, xi) -> int | None:
    """Which listed configuration attains sum(gamma*xi) = 2/9 (1, 2, 3), if any."""
    def pinned_zero(m):
        if sorted(m) == [0, THIRD, THIRD, THIRD]:
            return list(m).index(0)
        return None

    p = pinned_zero(gamma)
    if p is not None and xi[p] == THIRD:
        return 1
    p = pinned_zero(xi)
    if p is not None and gamma[p] == THIRD:
        return 2
    if sorted(gamma) == [SIXTH, SIXTH, THIRD, THIRD] and all(
            (g == SIXTH and x == THIRD) or (g == THIRD and x == SIXTH) for g, x in zip(gamma, xi)):
        return 3
    return None


def _prodlb4_exact(x, i, q, b):
    gamma, xi = x["gamma"].message(i), x["xi"].message(i)
    p = product_sum([gamma, xi])
    if p == PRODUCT_EQUALITY_Q4B2:
        shape = equality_shape(gamma, xi)
        witness = {"shape": shape, "gamma": gamma.to_json()["entries"], "xi": xi.to_json()["entries"]}
        return Outcome(0.0, shape is not None, witness)
    m = p - PRODUCT_GAP_Q4B2
    return Outcome(float(m), m >= 0)


def _contract1_pair(n, rng, p_edge):
    """(alpha, beta) pairs: equal pinned, equal free, or coupled free."""
    kind = rng.random(n)
    pinned = sample_s2(n, 4, rng, Q4_DEN)
    same = sample_q4(n, rng, p_edge)
    a, be = _coupled_pair(n, rng, p_edge)
    is_pinned = kind < p_edge
    is_same = (kind >= p_edge) & (kind < 1.5 * p_edge)
    a = pinned.where(is_pinned, same.where(is_same, a))
    be = pinned.where(is_pinned, same.where(is_same, be))
    return a, be


def _contract1_sample(q, b, n, rng, p_edge):
    a, be = _contract1_pair(n, rng, p_edge)
    a2, be2 = _contract1_pair(n, rng, p_edge)
    return {"alpha": a, "beta": be, "alpha2": a2, "beta2": be2}


def _contract1_eval(x, q, b):
    a, be, a2, be2 = (x[k].floats for k in ("alpha", "beta", "alpha2", "beta2"))
    lhs = _l1(batch_update(np.stack([a, a2], 1)), batch_update(np.stack([be, be2], 1)))
    rhs = float(kappa_q4b2()) * np.maximum(_l1(a, be), _l1(a2, be2))
    return rhs - lhs, rhs


def _contract1_exact(x, i, q, b):
    a, be, a2, be2 = (x[k].message(i) for k in ("alpha", "beta", "alpha2", "beta2"))
    lhs = l1_distance(update([a, a2]), update([be, be2]))
    m = kappa_q4b2() * max(l1_distance(a, be), l1_distance(a2, be2)) - lhs
    return Outcome(float(m), m >= 0)


_GENERAL = "q >= b + 2"
_Q4 = "q = 4, b = 2"

LEMMAS: dict[str, LemmaCheck] = {c.id: c for c in [
    LemmaCheck("prod", ("4", "lem:prod"), "sum_j prod_i a^i_j >= (q-b)/(q-1)^b on S1",
               "q > b >= 1", lambda q, b: q > b >= 1, _prod_sample, _prod_eval, _prod_exact),
    LemmaCheck("sp", ("clm:sp", "claim1"), "S1prime vectors have at most b entries 1/(q-1)",
               _GENERAL, _general, _sp_sample, _sp_eval, _sp_exact, batch_exact=True),
    LemmaCheck("closure", ("6", "lem:closure"), "f(S1prime u S2, ...) lies in S1prime",
               _GENERAL, _general, _closure_sample, _closure_eval, _closure_exact),
    LemmaCheck("ineqb", ("7", "lem:ineqb"), "||f(g,a)-f(g,b)|| (q-1)^b A <= ||a-b||",
               _GENERAL, _general, _ineqb_sample, _ineqb_eval, _ineqb_exact),
    LemmaCheck("bb", ("8", "lem:bb"), "product-sum bound with s pinned children",
               _GENERAL, _general, _bb_sample, _bb_eval, _bb_exact),
    LemmaCheck("prodnew", ("9", "lem:prodnew"), "strengthened product-sum bound on S1prime",
               _GENERAL, _general, _prodnew_sample, _prodnew_eval, _prodnew_exact),
    LemmaCheck("prodbd", ("clm:prodbd", "claim2"), "sum gamma*xi <= 1/3 on S1 for q = 4",
               _Q4, _q4b2, _prodbd_sample, _prodbd_eval, _prodbd_exact),
    LemmaCheck("closure4", ("11", "lem:closure4"), "f(S1prime u S2, S1prime u S2) in S1prime, q = 4",
               _Q4, _q4b2, _closure4_sample, _closure4_eval, _closure4_exact),
    LemmaCheck("ineqb4", ("12", "lem:ineqb4"), "||f(a,g)-f(b,g)|| * 9 sum(a*g) <= ||a-b|| (coupled a, b)",
               _Q4, _q4b2, _ineqb4_sample, _ineqb4_eval, _ineqb4_exact),
    LemmaCheck("sineq3", ("13", "lem:sineq3"), "49/24 ||f(a,g)-f(b,g)|| <= ||a-b|| (g with <= one 1/3)",
               _Q4, _q4b2, _sineq3_sample, _sineq3_eval, _sineq3_exact),
    LemmaCheck("prodlb4", ("14", "lem:prodlb4"), "sum gamma*xi = 2/9 (listed shapes) or >= 49/216",
               _Q4, _q4b2, _prodlb4_sample, _prodlb4_eval, _prodlb4_exact),
    LemmaCheck("contractb", ("5", "lem:contractb"), "||zeta-eta|| <= kappa(q,b) max ||a^l-b^l||",
               _GENERAL, _general, _contractb_sample, _contractb_eval, _contractb_exact),
    LemmaCheck("contract1", ("10", "lem:contract1"), "||zeta-eta|| <= 48/49 max ||a^l-b^l||, q = 4",
               _Q4, _q4b2, _contract1_sample, _contract1_eval, _contract1_exact),
]}

_ALIASES = {alias: c.id for c in LEMMAS.values() for alias in (c.id,) + c.aliases}


def resolve_lemma(name: str) -> LemmaCheck:
    key = str(name).strip().lower()
    if key.startswith("lemma"):
        key = key[len("lemma"):].strip()
    try:
        return LEMMAS[_ALIASES[key]]
    except KeyError:
        raise KeyError(f"unknown lemma {name!r}; known: {', '.join(LEMMAS)}") from None


# -- runner -----------------------------------------------------------------------

@dataclass
class VerificationReport:
    lemma_id: str
    q: int
    b: int
    samples: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    exact_rechecks: int = 0
    equality_witnesses: list = field(default_factory=list)
    witness_counts: dict = field(default_factory=dict)
    violating_inputs: list = field(default_factory=list)
    seed: int | None = None
    p_edge: float = P_EDGE
    mode: str = "float"

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        self.samples += other.samples
        self.violations += other.violations
        self.worst_margin = min(self.worst_margin, other.worst_margin)
        self.exact_rechecks += other.exact_rechecks
        room = MAX_WITNESSES - len(self.equality_witnesses)
        self.equality_witnesses.extend(other.equality_witnesses[:max(room, 0)])
        for k, v in other.witness_counts.items():
            self.witness_counts[k] = self.witness_counts.get(k, 0) + v
        room = MAX_VIOLATIONS_KEPT - len(self.violating_inputs)
        self.violating_inputs.extend(other.violating_inputs[:max(room, 0)])
        return self

    def to_json(self) -> dict:
        d = asdict(self)
        d["witness_counts"] = {str(k): d["witness_counts"][k] for k in sorted(d["witness_counts"], key=str)}
        d["passed"] = self.passed
        return d


def _inputs_json(x, i) -> dict:
    out = {}
    for k, v in x.items():
        if isinstance(v, MessageBatch):
            out[k] = v.message(i).to_json()["entries"]
        elif isinstance(v, list):
            out[k] = [bt.message(i).to_json()["entries"] for bt in v]
        else:
            out[k] = int(v[i])
    return out


def _run_chunk(lemma_id: str, q: int, b: int, n: int, seed_seq: np.random.SeedSequence,
               p_edge: float, mode: str) -> VerificationReport:
    check = LEMMAS[lemma_id]
    rng = np.random.default_rng(seed_seq)
    x = check.sample(q, b, n, rng, p_edge)
    report = VerificationReport(lemma_id, q, b, samples=n, p_edge=p_edge, mode=mode)
    if mode == "rational":
        suspects = np.arange(n)
        margins = np.zeros(n)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            margins, rhs = check.evaluate(x, q, b)
        if check.batch_exact:
            suspects = np.flatnonzero(margins < 0)
        else:
            suspects = np.flatnonzero(~(margins >= REL_SLACK * np.maximum(1.0, np.abs(rhs))))
    margins = margins.astype(float).copy()
    for i in suspects:
        out = check.exact(x, int(i), q, b)
        report.exact_rechecks += 1
        margins[i] = out.margin
        if not out.ok:
            report.violations += 1
            if len(report.violating_inputs) < MAX_VIOLATIONS_KEPT:
                report.violating_inputs.append(_inputs_json(x, int(i)))
        if out.witness is not None:
            shape = out.witness.get("shape")
            report.witness_counts[shape] = report.witness_counts.get(shape, 0) + 1
            if len(report.equality_witnesses) < MAX_WITNESSES:
                report.equality_witnesses.append(out.witness)
    report.worst_margin = float(margins.min()) if n else math.inf
    return report


def _lemma_index(lemma_id: str) -> int:
    return list(LEMMAS).index(lemma_id)


def check_regime(lemma_id: str, q: int, b: int) -> LemmaCheck:
    check = resolve_lemma(lemma_id)
    if not check.regime(q, b):
        raise UnsupportedRegime(f"{check.id} needs {check.regime_text}; got q={q}, b={b}")
    return check


def verify_lemma(lemma_id: str, q: int, b: int, n_samples: int, rng=0, *,
                 p_edge: float = P_EDGE, mode: str = "float", workers: int | None = None,
                 chunk: int = CHUNK) -> VerificationReport:
    """Sample ``n_samples`` hypothesis-satisfying inputs and count violations.

    ``rng`` is an integer master seed or a numpy Generator (from which a seed
    is drawn).  Samples are produced in fixed-size chunks, each with its own
    stream derived from (seed, lemma, q, b, chunk index), so reports do not
    depend on the number of workers.
    """
    check = check_regime(lemma_id, q, b)
    if mode not in ("float", "rational"):
        raise ValueError(f"mode must be 'float' or 'rational', got {mode!r}")
    seed = int(rng.integers(2**63)) if isinstance(rng, np.random.Generator) else int(rng)
    sizes = [min(chunk, n_samples - start) for start in range(0, n_samples, chunk)]
    tasks = [
        (check.id, q, b, size,
         np.random.SeedSequence(seed, spawn_key=(_lemma_index(check.id), q, b, k)), p_edge, mode)
        for k, size in enumerate(sizes)
    ]
    report = VerificationReport(check.id, q, b, seed=seed, p_edge=p_edge, mode=mode)
    for part in run_tasks(_run_chunk, tasks, workers):
        report.merge(part)
    return report
