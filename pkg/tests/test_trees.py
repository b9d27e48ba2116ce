import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethemix.errors import (
    CapExceeded,
    DomainError,
    RetriesExhausted,
    TreeTooLarge,
    UnknownNode,
    Unsatisfiable,
    ZeroDenominator,
)
from bethemix.messages import Message, pinned_message, uniform_message
from bethemix.trees import (
    BoundaryCondition,
    BoundaryPair,
    CompleteTree,
    TreeInstance,
    boundary_pair_at_distance,
    brute_force_marginal,
    brute_force_message,
    build_complete_tree,
    dumps_instance,
    instance_from_json,
    instance_to_json,
    loads_instance,
    propagate,
    random_level_instance,
    root_marginal,
    root_view,
)


def naive_counts(tree, boundary, q, node):
    """Colorings of ``node``'s whole subtree, by plain enumeration."""
    sub, stack = [], [node]
    while stack:
        v = stack.pop()
        sub.append(v)
        stack.extend(tree.children(v))
    free = [v for v in sub if v not in boundary]
    counts = [0] * q
    for colors in itertools.product(range(1, q + 1), repeat=len(free)):
        col = dict(boundary.pinned)
        col.update(zip(free, colors))
        if all(col[c] != col[v] for v in sub for c in tree.children(v)):
            counts[col[node] - 1] += 1
    return counts


def naive_message(tree, boundary, q, node):
    n = naive_counts(tree, boundary, q, node)
    t = sum(n)
    return tuple(F(t - x, (q - 1) * t) for x in n)


def edge_tree():
    return TreeInstance({0: None, 1: 0}, b=1)


class TestTrees:
    @pytest.mark.parametrize("b,depth,n", [(2, 2, 7), (3, 1, 4), (2, 0, 1), (3, 3, 40)])
    def test_complete_sizes(self, b, depth, n):
        t = build_complete_tree(b, depth)
        assert len(t) == n
        assert t.is_complete()
        assert len(list(t.nodes())) == n

    def test_complete_links(self):
        t = build_complete_tree(3, 2)
        assert t.children(0) == (1, 2, 3)
        assert t.children(2) == (7, 8, 9)
        assert t.parent(8) == 2 and t.parent(0) is None
        assert t.level(1) == [1, 2, 3]
        assert t.node_depth(12) == 2
        assert t.children(12) == ()
        with pytest.raises(UnknownNode):
            t.children(13)

    def test_budget(self):
        with pytest.raises(TreeTooLarge):
            build_complete_tree(2, 30, max_nodes=1000)

    def test_explicit_tree(self):
        t = TreeInstance({0: None, 1: 0, 2: 0, 3: 1}, b=2)
        assert t.root == 0 and t.depth == 2
        assert t.children(0) == (1, 2)
        assert not t.is_complete()
        with pytest.raises(ValueError):
            TreeInstance({0: None, 1: None})
        with pytest.raises(ValueError):
            TreeInstance({0: None, 1: 0, 2: 0, 3: 0}, b=2)

    def test_boundary_pair_validation(self):
        s = BoundaryCondition({3: 1, 4: 2})
        p = BoundaryCondition({3: 1, 4: 3})
        assert BoundaryPair.from_boundaries(s, p).delta == frozenset({4})
        with pytest.raises(ValueError):
            BoundaryPair(s, p, frozenset({3}))
        with pytest.raises(ValueError):
            BoundaryPair(s, BoundaryCondition({3: 1}), frozenset())


class TestPropagate:
    def test_pinned_and_free_child(self):
        t = TreeInstance({0: None, 1: 0, 2: 0}, b=2)
        bc = BoundaryCondition({1: 1})
        assert propagate(t, bc, 4).entries == (F(1, 3), F(2, 9), F(2, 9), F(2, 9))
        assert brute_force_message(t, bc, 4).entries == (F(1, 3), F(2, 9), F(2, 9), F(2, 9))

    def test_two_pinned_children(self):
        t = build_complete_tree(2, 1)
        bc = BoundaryCondition({1: 1, 2: 2})
        want = (F(1, 3), F(1, 3), F(1, 6), F(1, 6))
        assert propagate(t, bc, 4).entries == want
        assert brute_force_message(t, bc, 4).entries == want

    @pytest.mark.parametrize("q,b,depth", [(3, 2, 6), (4, 2, 20), (5, 3, 12), (7, 4, 9)])
    def test_all_free_is_uniform(self, q, b, depth):
        t = build_complete_tree(b, depth)
        assert propagate(t, BoundaryCondition(), q) == uniform_message(q)
        out = propagate(t, BoundaryCondition(), q, exact=False)
        assert np.max(np.abs(out.as_array() - 1 / q)) <= 1e-12

    def test_float_drift_on_explicit_tree(self):
        parents = {0: None}
        for v in range(1, 2 ** 13 - 1):
            parents[v] = (v - 1) // 2
        t = TreeInstance(parents, b=2)
        out = propagate(t, BoundaryCondition(), 4, exact=False)
        assert np.max(np.abs(out.as_array() - 0.25)) <= 1e-12

    def test_pinned_node_and_errors(self):
        t = build_complete_tree(2, 2)
        bc = BoundaryCondition({1: 3})
        assert propagate(t, bc, 4, node=1) == pinned_message(4, 3)
        with pytest.raises(UnknownNode):
            propagate(t, bc, 4, node=99)
        with pytest.raises(DomainError):
            propagate(t, bc, 2)
        with pytest.raises(DomainError):
            propagate(t, BoundaryCondition({1: 5}), 4)
        with pytest.raises(DomainError):
            propagate(t, BoundaryCondition({1: 2, 3: 2}), 4)

    def test_unsatisfiable(self):
        # with q >= b + 1 a free vertex always keeps a color, so this needs q = b
        t = build_complete_tree(2, 1)
        bc = BoundaryCondition({1: 1, 2: 2})
        with pytest.raises(Unsatisfiable):
            brute_force_message(t, bc, 2)
        with pytest.raises(Unsatisfiable):
            brute_force_marginal(t, bc, 2)
        with pytest.raises(DomainError):
            root_marginal(t, bc, 2)

    def test_irregular_arity(self):
        # the node with a single child uses a one-child update
        t = TreeInstance({0: None, 1: 0, 2: 0, 3: 1, 4: 2, 5: 2}, b=2)
        bc = BoundaryCondition({3: 1, 4: 2})
        for v in (0, 1, 2):
            assert propagate(t, bc, 4, node=v).entries == naive_message(t, bc, 4, v)


class TestMarginals:
    def test_edge(self):
        bc = BoundaryCondition({1: 1})
        want = (0, F(1, 3), F(1, 3), F(1, 3))
        assert root_marginal(edge_tree(), bc, 4) == want
        assert brute_force_marginal(edge_tree(), bc, 4) == want

    def test_path_uniform(self):
        t = TreeInstance({0: None, 1: 0}, b=1)
        assert brute_force_marginal(t, BoundaryCondition(), 3) == (F(1, 3),) * 3

    def test_depth_two_all_leaves_same_color(self):
        # inner vertices avoid 1; root 1 gives 3*3 colorings, root c != 1 gives 2*2
        t = build_complete_tree(2, 2)
        bc = BoundaryCondition({v: 1 for v in t.level(2)})
        want = (F(9, 21), F(4, 21), F(4, 21), F(4, 21))
        assert root_marginal(t, bc, 4) == want
        assert brute_force_marginal(t, bc, 4) == want

    def test_root_view(self):
        t = build_complete_tree(2, 2)
        bc = BoundaryCondition({3: 1, 6: 2})
        kids, marg = root_view(t, bc, 4)
        assert kids == [propagate(t, bc, 4, node=1), propagate(t, bc, 4, node=2)]
        assert marg == root_marginal(t, bc, 4)

    def test_root_must_be_free(self):
        with pytest.raises(DomainError):
            root_marginal(edge_tree(), BoundaryCondition({0: 1}), 4)

    @given(st.integers(0, 10_000), st.permutations([0, 1, 2, 3]))
    @settings(max_examples=40, deadline=None)
    def test_color_relabeling_commutes(self, seed, perm):
        tree, bc = random_level_instance(4, 2, 3, np.random.default_rng(seed))
        relabeled = BoundaryCondition({v: perm[c - 1] + 1 for v, c in bc.pinned.items()})
        a = root_marginal(tree, bc, 4)
        b = root_marginal(tree, relabeled, 4)
        assert all(b[perm[c]] == a[c] for c in range(4))


class TestOracle:
    def test_single_free_node(self):
        t = TreeInstance({0: None})
        assert brute_force_message(t, BoundaryCondition(), 4) == uniform_message(4)

    def test_cap(self):
        t = build_complete_tree(2, 3)
        with pytest.raises(CapExceeded):
            brute_force_message(t, BoundaryCondition(), 4)
        assert brute_force_message(t, BoundaryCondition(), 4, cap=15) == uniform_message(4)

    @given(st.integers(0, 100_000), st.sampled_from([(3, 2, 2), (4, 2, 2), (4, 3, 1), (6, 3, 1)]))
    @settings(max_examples=30, deadline=None)
    def test_pruned_oracle_matches_plain_enumeration(self, seed, params):
        q, b, depth = params
        rng = np.random.default_rng(seed)
        tree, bc = random_level_instance(q, b, depth, rng, cap=8)
        for v in [tree.root] + list(tree.children(tree.root)):
            try:
                want = naive_message(tree, bc, q, v)
            except ZeroDivisionError:
                with pytest.raises(Unsatisfiable):
                    brute_force_message(tree, bc, q, v, cap=64)
                continue
            assert brute_force_message(tree, bc, q, v, cap=64).entries == want

    def test_propagate_matches_oracle_200(self):
        rng = np.random.default_rng(2024)
        seen = 0
        for i in range(200):
            q = (4, 5)[i % 2]
            tree, bc = random_level_instance(q, 2, 1 + i % 3, rng)
            assert propagate(tree, bc, q) == brute_force_message(tree, bc, q)
            assert root_marginal(tree, bc, q) == brute_force_marginal(tree, bc, q)
            for c in tree.children(tree.root):
                assert propagate(tree, bc, q, node=c) == brute_force_message(tree, bc, q, node=c)
            seen += 1
        assert seen == 200


class TestBoundaryPairs:
    def test_full_level_single_change(self):
        t = build_complete_tree(2, 4)
        pair = boundary_pair_at_distance(t, 5, 4, np.random.default_rng(1))
        assert pair.sigma.U == frozenset(t.level(4))
        assert len(pair.delta) == 1
        assert t.node_depth(next(iter(pair.delta))) == 4

    def test_seeds_all_satisfiable(self):
        t = build_complete_tree(2, 3)
        for seed in range(10):
            pair = boundary_pair_at_distance(t, 5, 3, np.random.default_rng(seed))
            for bc in (pair.sigma, pair.phi):
                m = propagate(t, bc, 5)
                assert sum(m.entries) == 1

    def test_larger_delta(self):
        t = build_complete_tree(2, 3)
        pair = boundary_pair_at_distance(t, 5, 3, np.random.default_rng(0), delta_size=3)
        assert len(pair.delta) == 3

    def test_empty_delta_rejected(self):
        s = BoundaryCondition({1: 1, 2: 2})
        with pytest.raises(ValueError):
            BoundaryPair(s, s, frozenset({1}))
        assert BoundaryPair.from_boundaries(s, s).delta == frozenset()

    def test_domain(self):
        t = build_complete_tree(2, 3)
        with pytest.raises(DomainError):
            boundary_pair_at_distance(t, 3, 2, np.random.default_rng(0))
        with pytest.raises(DomainError):
            boundary_pair_at_distance(t, 5, 4, np.random.default_rng(0))

    def test_retries(self):
        t = build_complete_tree(2, 2)
        with pytest.raises(RetriesExhausted):
            boundary_pair_at_distance(t, 4, 1, np.random.default_rng(0), retries=0)


class TestJson:
    def test_round_trip_bit_exact(self):
        tree, bc = random_level_instance(5, 2, 3, np.random.default_rng(3))
        text = dumps_instance(tree, bc, 5)
        t2, bc2, q2 = loads_instance(text)
        assert q2 == 5 and bc2 == bc
        assert dumps_instance(t2, bc2, q2) == text
        assert text.endswith("\n") and "\r" not in text
        obj = json.loads(text)
        assert list(obj) == ["b", "q", "nodes"]
        assert list(obj["nodes"][0]) == ["id", "parent", "pinned"]

    def test_from_json(self):
        obj = {"b": 2, "q": 4, "nodes": [
            {"id": 0, "parent": None, "pinned": None},
            {"id": 1, "parent": 0, "pinned": 1},
            {"id": 2, "parent": 0, "pinned": 2},
        ]}
        tree, bc, q = instance_from_json(obj)
        assert propagate(tree, bc, q).entries == (F(1, 3), F(1, 3), F(1, 6), F(1, 6))
        assert instance_to_json(tree, bc, q) == obj
