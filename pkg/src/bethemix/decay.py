"""Spatial-mixing decay experiments on complete b-ary trees.

For each distance ``d`` a whole level of the tree is pinned twice, the two
boundaries differing at one node (or a few) of level ``d``.  The experiment
records how far apart the root's child messages and the root marginals end
up, and fits an exponential rate to the worst case over trials.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .contraction import kappa, kappa_q4b2
from .errors import DomainError
from .messages import l1_distance
from .parallel import run_tasks
from .trees import boundary_pair_at_distance, build_complete_tree, root_view

FIT_MIN_DISTANCE = 3
FIT_TOLERANCE = 0.1
MONOTONE_SLACK = 1e-12


def contraction_factor(q: int, b: int) -> float:
    """Per-level contraction used for the envelope and the predicted rate."""
    if (q, b) == (4, 2):
        return float(kappa_q4b2())
    return kappa(q, b)


@dataclass
class DistanceRecord:
    d: int
    trials: int
    max_message_l1: float
    mean_message_l1: float
    max_marginal_l1: float
    envelope: float
    within_envelope: bool
    marginal_to_message: float | None


@dataclass
class DecayReport:
    q: int
    b: int
    depth: int
    trials: int
    seed: int
    mode: str
    delta_size: int
    contraction: float
    predicted_rate: float
    fit_tolerance: float
    records: list = field(default_factory=list)
    fit_distances: list = field(default_factory=list)
    a_hat: float | None = None
    a_hat_marginal: float | None = None
    envelope_ok: bool = True
    monotone: bool = True
    rate_ok: bool | None = None
    slow: bool = False

    @property
    def passed(self) -> bool:
        return self.envelope_ok and self.monotone and self.rate_ok is not False

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _trial_pair(tree, q, d, seed, trial, delta_size):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(d, trial)))
    if delta_size == 0:
        # identical boundaries: reuse the sampler's sigma for both sides
        pair = boundary_pair_at_distance(tree, q, d, rng)
        return pair.sigma, pair.sigma
    pair = boundary_pair_at_distance(tree, q, d, rng, delta_size=delta_size)
    return pair.sigma, pair.phi


def _run_distance(q: int, b: int, depth: int, d: int, trials: int, seed: int,
                  exact: bool, delta_size: int) -> tuple[list[float], list[float]]:
    tree = build_complete_tree(b, depth)
    msg, marg = [], []
    for t in range(trials):
        sigma, phi = _trial_pair(tree, q, d, seed, t, delta_size)
        kids_s, root_s = root_view(tree, sigma, q, exact)
        kids_p, root_p = root_view(tree, phi, q, exact)
        msg.append(float(max(l1_distance(x, y) for x, y in zip(kids_s, kids_p))))
        marg.append(float(sum(abs(x - y) for x, y in zip(root_s, root_p))))
    return msg, marg


def fit_rate(distances, values, min_distance: int = FIT_MIN_DISTANCE):
    """Least-squares slope of ``-log(value)`` against ``d`` over the top half.

    Only distances ``>= min_distance`` with a positive value take part.
    Returns ``(slope, distances used)``; the slope is None with fewer than
    two usable points.
    """
    pts = sorted((d, v) for d, v in zip(distances, values) if d >= min_distance and v > 0)
    pts = pts[len(pts) // 2:] if len(pts) >= 4 else pts
    if len(pts) < 2:
        return None, [d for d, _ in pts]
    x = np.array([d for d, _ in pts], dtype=float)
    y = -np.log(np.array([v for _, v in pts]))
    slope = np.polyfit(x, y, 1)[0]
    return float(slope), [int(d) for d, _ in pts]


def run_decay(q: int, b: int, depth: int, distances=None, trials: int = 50, seed: int = 0,
              mode: str = "float", delta_size: int = 1, fit_tolerance: float = FIT_TOLERANCE,
              workers: int | None = None) -> DecayReport:
    if q < b + 2:
        raise DomainError(f"decay experiments need q >= b + 2, got q={q}, b={b}")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if mode not in ("float", "rational"):
        raise DomainError(f"mode must be 'float' or 'rational', got {mode!r}")
    distances = list(range(1, depth + 1)) if distances is None else sorted(set(distances))
    if not distances or distances[0] < 1 or distances[-1] > depth:
        raise DomainError(f"distances must lie in [1, {depth}]")
    if delta_size < 0:
        raise DomainError("delta_size must be nonnegative")

    k = contraction_factor(q, b)
    report = DecayReport(q=q, b=b, depth=depth, trials=trials, seed=seed, mode=mode,
                         delta_size=delta_size, contraction=k, predicted_rate=-math.log(k),
                         fit_tolerance=fit_tolerance, slow=(q, b) == (4, 2))
    tasks = [(q, b, depth, d, trials, seed, mode == "rational", delta_size) for d in distances]
    results = run_tasks(_run_distance, tasks, workers)

    maxima = []
    for d, (msg, marg) in zip(distances, results):
        m, g = max(msg), max(marg)
        env = 2 * k ** (d - FIT_MIN_DISTANCE)
        ok = m <= env
        report.records.append(asdict(DistanceRecord(
            d=d, trials=trials, max_message_l1=m, mean_message_l1=float(np.mean(msg)),
            max_marginal_l1=g, envelope=env, within_envelope=ok,
            marginal_to_message=g / m if m > 0 else None)))
        report.envelope_ok &= ok
        maxima.append(m)

    tail = [m for d, m in zip(distances, maxima) if d >= FIT_MIN_DISTANCE]
    report.monotone = all(y <= x + MONOTONE_SLACK for x, y in zip(tail, tail[1:]))
    report.a_hat, report.fit_distances = fit_rate(distances, maxima)
    report.a_hat_marginal, _ = fit_rate(distances, [r["max_marginal_l1"] for r in report.records])
    if report.a_hat is not None:
        report.rate_ok = report.a_hat >= report.predicted_rate - fit_tolerance
    return report


def identical_boundary_report(q: int, b: int, depth: int, trials: int = 5, seed: int = 0) -> DecayReport:
    """Decay run with sigma = phi; every discrepancy must be exactly zero."""
    return run_decay(q, b, depth, trials=trials, seed=seed, delta_size=0)

