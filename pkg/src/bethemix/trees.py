"""Finite b-ary trees with partial boundary colorings.

Two tree representations share one small interface (``root``, ``b``,
``depth``, ``children``, ``parent``, ``node_depth``, ``nodes``):

* :class:`TreeInstance` stores an explicit parent map and may be irregular.
* :class:`CompleteTree` is the implicit heap-indexed complete b-ary tree, so
  deep trees cost no memory until they are pinned.

Messages are computed by :func:`propagate`; :func:`brute_force_message` and
:func:`brute_force_marginal` count proper colorings directly and serve as the
independent oracle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    CapExceeded,
    DomainError,
    RetriesExhausted,
    TreeTooLarge,
    UnknownNode,
    Unsatisfiable,
    ZeroDenominator,
)
from .messages import Message, pinned_message, uniform_message, update

DEFAULT_MAX_NODES = 1 << 24
DEFAULT_ENUM_CAP = 12
DEFAULT_RETRIES = 100


class TreeInstance:
    """Rooted tree given by an explicit parent map ``{node: parent or None}``.

    ``b`` is the branching bound; it defaults to the largest arity present.
    Children are kept in increasing id order.
    """

    def __init__(self, parents: Mapping[int, int | None], b: int | None = None):
        parents = {int(k): (None if v is None else int(v)) for k, v in parents.items()}
        roots = [v for v, p in parents.items() if p is None]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        children: dict[int, list[int]] = {v: [] for v in parents}
        for v, p in parents.items():
            if p is None:
                continue
            if p not in parents:
                raise ValueError(f"node {v} has unknown parent {p}")
            children[p].append(v)
        self._root = roots[0]
        self._parents = parents
        self._children = {v: tuple(sorted(c)) for v, c in children.items()}

        depths = {self._root: 0}
        stack = [self._root]
        while stack:
            v = stack.pop()
            for c in self._children[v]:
                depths[c] = depths[v] + 1
                stack.append(c)
        if len(depths) != len(parents):
            raise ValueError("parent map contains a cycle or a detached component")
        self._depths = depths

        arity = max((len(c) for c in self._children.values()), default=0)
        if b is None:
            b = max(arity, 1)
        if arity > b:
            raise ValueError(f"a node has {arity} children, more than b={b}")
        self.b = b

    @property
    def root(self) -> int:
        return self._root

    @property
    def depth(self) -> int:
        return max(self._depths.values())

    def __contains__(self, node) -> bool:
        return node in self._parents

    def __len__(self) -> int:
        return len(self._parents)

    def nodes(self) -> Iterator[int]:
        return iter(sorted(self._parents))

    def children(self, node: int) -> tuple[int, ...]:
        try:
            return self._children[node]
        except KeyError:
            raise UnknownNode(node) from None

    def parent(self, node: int) -> int | None:
        try:
            return self._parents[node]
        except KeyError:
            raise UnknownNode(node) from None

    def node_depth(self, node: int) -> int:
        try:
            return self._depths[node]
        except KeyError:
            raise UnknownNode(node) from None

    def level(self, d: int) -> list[int]:
        return sorted(v for v, k in self._depths.items() if k == d)

    def is_complete(self) -> bool:
        return all(
            len(self._children[v]) == (self.b if self._depths[v] < self.depth else 0)
            for v in self._parents
        )


class CompleteTree:
    """Complete b-ary tree of a given depth, heap indexed.

    Node 0 is the root and the children of node ``i`` are
    ``b*i + 1, ..., b*i + b``.
    """

    def __init__(self, b: int, depth: int):
        if b < 1 or depth < 0:
            raise DomainError(f"need b >= 1 and depth >= 0, got b={b}, depth={depth}")
        self.b = b
        self.depth = depth
        # first node id on each level
        self._starts = [0]
        for _ in range(depth + 1):
            self._starts.append(self._starts[-1] * b + 1)
        self._n = self._starts[depth + 1]

    root = 0

    def __len__(self) -> int:
        return self._n

    def __contains__(self, node) -> bool:
        return isinstance(node, (int, np.integer)) and 0 <= node < self._n

    def _check(self, node):
        if node not in self:
            raise UnknownNode(node)

    def nodes(self) -> Iterator[int]:
        return iter(range(self._n))

    def node_depth(self, node: int) -> int:
        self._check(node)
        k = 0
        while self._starts[k + 1] <= node:
            k += 1
        return k

    def children(self, node: int) -> tuple[int, ...]:
        self._check(node)
        first = self.b * node + 1
        if first >= self._n:
            return ()
        return tuple(range(first, first + self.b))

    def parent(self, node: int) -> int | None:
        self._check(node)
        return None if node == 0 else (node - 1) // self.b

    def level(self, d: int) -> list[int]:
        if not 0 <= d <= self.depth:
            raise DomainError(f"level {d} outside [0, {self.depth}]")
        return list(range(self._starts[d], self._starts[d + 1]))

    def is_complete(self) -> bool:
        return True


Tree = TreeInstance | CompleteTree


def build_complete_tree(b: int, depth: int, max_nodes: int = DEFAULT_MAX_NODES) -> CompleteTree:
    if b < 1 or depth < 0:
        raise DomainError(f"need b >= 1 and depth >= 0, got b={b}, depth={depth}")
    n = depth + 1 if b == 1 else (b ** (depth + 1) - 1) // (b - 1)
    if n > max_nodes:
        raise TreeTooLarge(f"{n} nodes exceeds the budget of {max_nodes}")
    return CompleteTree(b, depth)


@dataclass(frozen=True)
class BoundaryCondition:
    """Partial coloring ``{node: color}`` with colors in 1..q."""

    pinned: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        pinned = {int(k): int(v) for k, v in dict(self.pinned).items()}
        if any(c < 1 for c in pinned.values()):
            raise DomainError("colors are 1-indexed")
        object.__setattr__(self, "pinned", pinned)

    @property
    def U(self) -> frozenset[int]:
        return frozenset(self.pinned)

    def get(self, node):
        return self.pinned.get(node)

    def __contains__(self, node) -> bool:
        return node in self.pinned

    def validate(self, tree: Tree, q: int) -> None:
        for v, c in self.pinned.items():
            if v not in tree:
                raise UnknownNode(v)
            if c > q:
                raise DomainError(f"node {v} pinned to color {c} > q={q}")
            p = tree.parent(v)
            if p is not None and self.pinned.get(p) == c:
                raise DomainError(f"adjacent nodes {p} and {v} are both pinned to color {c}")


@dataclass(frozen=True)
class BoundaryPair:
    sigma: BoundaryCondition
    phi: BoundaryCondition
    delta: frozenset[int]

    def __post_init__(self):
        if self.sigma.U != self.phi.U:
            raise ValueError("sigma and phi must pin the same node set")
        object.__setattr__(self, "delta", frozenset(self.delta))
        expected = frozenset(v for v in self.sigma.U if self.sigma.pinned[v] != self.phi.pinned[v])
        if expected != self.delta:
            raise ValueError(f"delta {sorted(self.delta)} disagrees with sigma/phi {sorted(expected)}")

    @classmethod
    def from_boundaries(cls, sigma: BoundaryCondition, phi: BoundaryCondition) -> "BoundaryPair":
        delta = frozenset(v for v in sigma.U if sigma.pinned[v] != phi.pinned.get(v))
        return cls(sigma, phi, delta)


def _check_q(tree: Tree, q: int) -> None:
    if q < tree.b + 1 or q < 2:
        raise DomainError(f"need q >= b + 1, got q={q}, b={tree.b}")


def _dirty_nodes(tree: Tree, boundary: BoundaryCondition) -> set[int]:
    """Pinned nodes together with all their ancestors."""
    dirty: set[int] = set()
    for v in boundary.pinned:
        while v is not None and v not in dirty:
            dirty.add(v)
            v = tree.parent(v)
    return dirty


def _messages(tree: Tree, boundary: BoundaryCondition, q: int, targets: Iterable[int],
              exact: bool, update_fn: Callable) -> dict[int, Message]:
    boundary.validate(tree, q)
    memo: dict[int, Message] = {}
    # a pin-free subtree of a complete tree only depends on its height
    shortcut = isinstance(tree, CompleteTree)
    dirty = _dirty_nodes(tree, boundary) if shortcut else set()
    free_by_height: list[Message] = [uniform_message(q, exact)]

    def free_message(h):
        while len(free_by_height) <= h:
            free_by_height.append(update_fn([free_by_height[-1]] * tree.b, q))
        return free_by_height[h]

    for target in targets:
        if target not in tree:
            raise UnknownNode(target)
        stack = [(target, False)]
        while stack:
            v, expanded = stack.pop()
            if v in memo:
                continue
            color = boundary.get(v)
            if color is not None:
                memo[v] = pinned_message(q, color, exact)
                continue
            if shortcut and v not in dirty:
                memo[v] = free_message(tree.depth - tree.node_depth(v))
                continue
            kids = tree.children(v)
            if not kids:
                memo[v] = uniform_message(q, exact)
            elif expanded:
                memo[v] = update_fn([memo[c] for c in kids], q)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in kids if c not in memo)
    return memo


def propagate(tree: Tree, boundary: BoundaryCondition, q: int, node: int | None = None,
              exact: bool = True, update_fn: Callable = update) -> Message:
    """Message from ``node`` (default: the root) to its parent.

    ``update_fn`` replaces the message update; it exists so harnesses can
    check that a broken recursion is caught.
    """
    _check_q(tree, q)
    node = tree.root if node is None else node
    return _messages(tree, boundary, q, [node], exact, update_fn)[node]


def _marginal_from_children(kids: Sequence[Message], q: int, exact: bool) -> tuple:
    if not kids:
        return uniform_message(q, exact).entries
    weights = [math.prod(m[c] for m in kids) for c in range(q)]
    total = sum(weights)
    if total == 0:
        raise ZeroDenominator("boundary rules out every root color")
    return tuple(w / total for w in weights)


def root_view(tree: Tree, boundary: BoundaryCondition, q: int, exact: bool = True,
              update_fn: Callable = update) -> tuple[list[Message], tuple]:
    """Messages of the root's children and the root marginal, in one pass."""
    _check_q(tree, q)
    if tree.root in boundary:
        raise DomainError("the root must not be pinned")
    kids = tree.children(tree.root)
    memo = _messages(tree, boundary, q, kids, exact, update_fn)
    msgs = [memo[c] for c in kids]
    return msgs, _marginal_from_children(msgs, q, exact)


def root_marginal(tree: Tree, boundary: BoundaryCondition, q: int, exact: bool = True,
                  update_fn: Callable = update) -> tuple:
    """Distribution of the root color among colorings consistent with ``boundary``."""
    return root_view(tree, boundary, q, exact, update_fn)[1]


# -- exhaustive enumeration oracle -------------------------------------------

def _region(tree: Tree, boundary: BoundaryCondition, node: int) -> list[int]:
    """Vertices of ``node``'s subtree that are not below a pinned vertex, in pre-order.

    Conditioning on a pinned vertex separates its descendants from the rest,
    so they only contribute a common factor to every count.
    """
    order = []
    stack = [node]
    while stack:
        v = stack.pop()
        order.append(v)
        if v not in boundary:
            stack.extend(reversed(tree.children(v)))
    return order


def color_counts(tree: Tree, boundary: BoundaryCondition, q: int, node: int | None = None,
                 cap: int = DEFAULT_ENUM_CAP) -> list[int]:
    """``counts[c-1]`` = number of proper colorings of the subtree with ``node`` colored c.

    Depth-first enumeration over the free vertices in pre-order with forward
    checking.  Free vertices whose children are all pinned are not branched
    on; their number of admissible colors is multiplied in directly.
    """
    node = tree.root if node is None else node
    if node not in tree:
        raise UnknownNode(node)
    boundary.validate(tree, q)
    if node in boundary:
        k = boundary.pinned[node]
        return [int(c == k) for c in range(1, q + 1)]

    region = _region(tree, boundary, node)
    free = [v for v in region if v not in boundary]
    if len(free) > cap:
        raise CapExceeded(f"{len(free)} free vertices exceed the enumeration cap {cap}")
    free_set = set(free)
    pinned_kids = {v: {boundary.pinned[c] for c in tree.children(v) if c in boundary} for v in free}
    free_kids = {v: [c for c in tree.children(v) if c in free_set] for v in free}

    # vertices with only pinned children: counted, not enumerated
    counted = {v for v in free if v != node and not free_kids[v]}
    branched = [v for v in free if v != node and v not in counted]

    def leaf_factor(v, x):
        f = 1
        for u in free_kids[v]:
            if u in counted:
                f *= q - len(pinned_kids[u] | {x})
        return f

    colors = {}

    def rec(i):
        if i == len(branched):
            return 1
        v = branched[i]
        parent_color = colors[tree.parent(v)]
        total = 0
        for x in range(1, q + 1):
            if x == parent_color or x in pinned_kids[v]:
                continue
            f = leaf_factor(v, x)
            if f:
                colors[v] = x
                total += f * rec(i + 1)
        return total

    counts = []
    for c in range(1, q + 1):
        if c in pinned_kids[node]:
            counts.append(0)
            continue
        colors[node] = c
        f = leaf_factor(node, c)
        counts.append(f * rec(0) if f else 0)
    return counts


def brute_force_message(tree: Tree, boundary: BoundaryCondition, q: int, node: int | None = None,
                        cap: int = DEFAULT_ENUM_CAP) -> Message:
    counts = color_counts(tree, boundary, q, node, cap)
    total = sum(counts)
    if total == 0:
        raise Unsatisfiable("no proper coloring is consistent with the boundary")
    return Message(tuple(Fraction(total - n, (q - 1) * total) for n in counts))


def brute_force_marginal(tree: Tree, boundary: BoundaryCondition, q: int,
                         cap: int = DEFAULT_ENUM_CAP) -> tuple[Fraction, ...]:
    if tree.root in boundary:
        raise DomainError("the root must not be pinned")
    counts = color_counts(tree, boundary, q, tree.root, cap)
    total = sum(counts)
    if total == 0:
        raise Unsatisfiable("no proper coloring is consistent with the boundary")
    return tuple(Fraction(n, total) for n in counts)


# -- instance generators -------------------------------------------------------

def boundary_pair_at_distance(tree: Tree, q: int, d: int, rng: np.random.Generator,
                              delta_size: int = 1, retries: int = DEFAULT_RETRIES) -> BoundaryPair:
    """Pin every node on level ``d``; sigma and phi differ on ``delta_size`` of them."""
    if q < tree.b + 2:
        raise DomainError(f"need q >= b + 2, got q={q}, b={tree.b}")
    if not 1 <= d <= tree.depth:
        raise DomainError(f"distance {d} outside [1, {tree.depth}]")
    level = tree.level(d)
    if not 1 <= delta_size <= len(level):
        raise DomainError(f"delta_size must be in [1, {len(level)}], got {delta_size}")
    for _ in range(retries):
        colors = rng.integers(1, q + 1, size=len(level))
        sigma = BoundaryCondition(dict(zip(level, colors.tolist())))
        changed = rng.choice(len(level), size=delta_size, replace=False)
        phi_colors = colors.copy()
        shift = rng.integers(1, q, size=delta_size)
        phi_colors[changed] = (colors[changed] - 1 + shift) % q + 1
        phi = BoundaryCondition(dict(zip(level, phi_colors.tolist())))
        try:
            root_marginal(tree, sigma, q, exact=False)
            root_marginal(tree, phi, q, exact=False)
        except ZeroDenominator:
            continue
        return BoundaryPair.from_boundaries(sigma, phi)
    raise RetriesExhausted(f"no satisfiable pair after {retries} attempts")


def random_level_instance(q: int, b: int, depth: int, rng: np.random.Generator,
                          cap: int = DEFAULT_ENUM_CAP, p_pin: float = 0.6,
                          retries: int = DEFAULT_RETRIES) -> tuple[CompleteTree, BoundaryCondition]:
    """Complete tree with a random subset of one level pinned to random colors.

    The pinned level is drawn from 1..depth; draws whose root region has more
    than ``cap`` free vertices are redrawn.
    """
    tree = build_complete_tree(b, depth)
    for _ in range(retries):
        d = int(rng.integers(1, depth + 1)) if depth >= 1 else 0
        level = tree.level(d) if depth >= 1 else []
        mask = rng.random(len(level)) < p_pin
        if level and not mask.any():
            mask[rng.integers(len(level))] = True
        nodes = [v for v, m in zip(level, mask) if m]
        colors = rng.integers(1, q + 1, size=len(nodes)).tolist()
        boundary = BoundaryCondition(dict(zip(nodes, colors)))
        free = [v for v in _region(tree, boundary, tree.root) if v not in boundary]
        if len(free) <= cap:
            return tree, boundary
    raise RetriesExhausted(f"no instance within the enumeration cap after {retries} attempts")


# -- JSON file format ----------------------------------------------------------

def instance_to_json(tree: Tree, boundary: BoundaryCondition, q: int) -> dict:
    nodes = [{"id": int(v), "parent": tree.parent(v), "pinned": boundary.get(v)}
             for v in tree.nodes()]
    return {"b": tree.b, "q": q, "nodes": nodes}


def instance_from_json(obj: dict) -> tuple[TreeInstance, BoundaryCondition, int]:
    parents = {}
    pinned = {}
    for rec in obj["nodes"]:
        v = int(rec["id"])
        if v in parents:
            raise ValueError(f"duplicate node id {v}")
        parents[v] = rec["parent"]
        if rec.get("pinned") is not None:
            pinned[v] = int(rec["pinned"])
    tree = TreeInstance(parents, b=int(obj["b"]))
    q = int(obj["q"])
    boundary = BoundaryCondition(pinned)
    boundary.validate(tree, q)
    return tree, boundary, q


def dumps_instance(tree: Tree, boundary: BoundaryCondition, q: int) -> str:
    return json.dumps(instance_to_json(tree, boundary, q), indent=2) + "\n"


def loads_instance(text: str) -> tuple[TreeInstance, BoundaryCondition, int]:
    return instance_from_json(json.loads(text))
