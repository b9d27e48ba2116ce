"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines are
written straight to the terminal even when output capture is on.
"""
import json
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from bethemix.cli import main
from bethemix.contraction import (
    bound_lemma_prod,
    bound_lemma_prodlb4,
    g,
    kappa,
    kappa_q4b2,
    solve_c,
    threshold_q,
)
from bethemix.lemmas import verify_lemma
from bethemix.messages import Message, pinned_message, update
from bethemix.trees import brute_force_message, propagate, random_level_instance

SUITE_SEED = 20240607
DECAY_SEED = 7


@pytest.fixture
def verdict(capsys):
    def report(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n[acceptance] {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
        return ok
    return report


def _run_lemma_suite(tmp_path, name):
    """Every lemma over the applicable (q, b) points of {4,5,6,8} x {2,3}."""
    out = tmp_path / name
    start = time.perf_counter()
    # --all skips the (q, b) points outside each lemma's hypotheses
    code = main(["verify", "--all", "--q", "4,5,6,8", "--b", "2,3", "--samples", "100000",
                 "--seed", str(SUITE_SEED), "--p-edge", "0.25", "--out", str(out)])
    return code, out, time.perf_counter() - start


def _run_decay_report(tmp_path, name):
    out = tmp_path / name
    start = time.perf_counter()
    code = main(["decay", "--q", "5", "--b", "2", "--depth", "10", "--distances", "3..10",
                 "--trials", "50", "--seed", str(DECAY_SEED), "--out", str(out)])
    return code, out, time.perf_counter() - start


def test_criterion_1_oracle_equivalence(verdict):
    start = time.perf_counter()
    mismatches = 0
    for i in range(500):
        q = (4, 5)[i % 2]
        rng = np.random.default_rng(np.random.SeedSequence(1, spawn_key=(i,)))
        tree, bc = random_level_instance(q, 2, 1 + (i // 2) % 3, rng)
        if propagate(tree, bc, q) != brute_force_message(tree, bc, q):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = verdict("1 oracle equivalence (500 instances)", mismatches == 0 and elapsed < 60,
                 f"mismatches={mismatches} time={elapsed:.1f}s")
    assert ok


def test_criterion_2_constants(verdict):
    c = solve_c(1e-3)
    eq, gap = bound_lemma_prodlb4()
    checks = {
        "c": abs(c - 1.764) <= 1e-3,
        "48/49": kappa_q4b2() == F(48, 49),
        "2/9": bound_lemma_prod(4, 2) == F(2, 9) and eq == F(2, 9),
        "49/216": gap == F(49, 216),
    }
    ok = verdict("2 constants", all(checks.values()), f"c={c!r} {checks}")
    assert ok


def test_criterion_3_threshold_sweep(verdict):
    start = time.perf_counter()
    bs = range(2, 501)
    contracts = all(kappa(threshold_q(b), b) < 1 for b in bs)
    gs = [g(b) for b in bs]
    increasing = all(x < y for x, y in zip(gs, gs[1:]))
    below = all(v < 1 for v in gs)
    elapsed = time.perf_counter() - start
    ok = verdict("3 threshold sweep b=2..500", contracts and increasing and below and elapsed < 5,
                 f"contracts={contracts} g_increasing={increasing} g<1={below} "
                 f"max_g={max(gs):.6f} time={elapsed:.2f}s")
    assert ok


def test_criterion_4_boundary_case(verdict):
    k = kappa(4, 2)
    ok = verdict("4 kappa(4,2) = 1", abs(k - 1.0) <= 1e-15, f"kappa={k!r}")
    assert ok


@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("acceptance")
    return {"lemmas": _run_lemma_suite(tmp, "lemmas_a.json"), "tmp": tmp}


def test_criterion_5_lemma_suite(verdict, suite_runs):
    code, out, elapsed = suite_runs["lemmas"]
    rep = json.loads(out.read_text(encoding="utf-8"))
    covered = {r["lemma_id"] for r in rep["reports"]}
    violations = sum(r["violations"] for r in rep["reports"])
    ok = verdict("5 lemma suite (13 lemmas, 1e5 samples per point)",
                 code == 0 and violations == 0 and len(covered) == 13 and elapsed < 600,
                 f"points={len(rep['reports'])} lemmas={len(covered)} violations={violations} "
                 f"time={elapsed:.0f}s")
    assert ok


def test_criterion_6a_equality_shapes(verdict):
    r = verify_lemma("14", 4, 2, 100_000, rng=SUITE_SEED)
    shapes = set(r.witness_counts)
    ok = verdict("6a equality value 2/9 on all three shapes",
                 shapes == {1, 2, 3} and r.violations == 0,
                 f"witness_counts={dict(sorted(r.witness_counts.items()))}")
    assert ok


def test_criterion_6b_update_value_as_stated(verdict):
    out = update([pinned_message(4, 1), pinned_message(4, 2)])
    stated = Message((F(1, 6), F(1, 6), F(1, 3), F(1, 3)))
    ok = verdict("6b update((0,1/3,1/3,1/3),(1/3,0,1/3,1/3)) = (1/6,1/6,1/3,1/3)",
                 out == stated, f"computed={[str(x) for x in out]}")
    assert ok


def test_criterion_6b_companion_permutation(verdict):
    out = update([pinned_message(4, 1), pinned_message(4, 2)])
    ok = verdict("6b' same update is a permutation of (1/6,1/6,1/3,1/3)",
                 sorted(out.entries) == [F(1, 6), F(1, 6), F(1, 3), F(1, 3)],
                 f"computed={[str(x) for x in out]}")
    assert ok


@pytest.fixture(scope="module")
def decay_run(tmp_path_factory):
    return _run_decay_report(tmp_path_factory.mktemp("decay"), "decay_a.json")


def test_criterion_7_decay(verdict, decay_run):
    code, out, elapsed = decay_run
    rep = json.loads(out.read_text(encoding="utf-8"))
    k = kappa(5, 2)
    envelope = all(r["max_message_l1"] <= 2 * k ** (r["d"] - 3) for r in rep["records"])
    rate_ok = rep["a_hat"] is not None and rep["a_hat"] >= -math.log(k) - 0.1
    ok = verdict("7 decay q=5 b=2 depth 10",
                 code == 0 and envelope and rate_ok and elapsed < 300,
                 f"a_hat={rep['a_hat']:.4f} bound={-math.log(k) - 0.1:.4f} envelope={envelope} "
                 f"time={elapsed:.1f}s")
    assert ok


def test_criterion_8_determinism(verdict, suite_runs, decay_run):
    tmp = suite_runs["tmp"]
    _, first_lemmas, _ = suite_runs["lemmas"]
    _, second_lemmas, _ = _run_lemma_suite(tmp, "lemmas_b.json")
    _, first_decay, _ = decay_run
    _, second_decay, _ = _run_decay_report(tmp, "decay_b.json")
    same_lemmas = first_lemmas.read_bytes() == second_lemmas.read_bytes()
    same_decay = first_decay.read_bytes() == second_decay.read_bytes()
    ok = verdict("8 byte-identical reruns", same_lemmas and same_decay,
                 f"lemmas={same_lemmas} decay={same_decay}")
    assert ok
