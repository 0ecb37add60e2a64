"""Decision-tree strategies and exact complexity dynamic programs.

Trees are immutable: ``Leaf(label)`` with an optional label (``None`` for the
unlabelled trees used by the product-distribution game) and ``Query(var,
child0, child1)`` with 1-indexed variables. No variable repeats on any
root-to-leaf path; this is validated when a ``DecisionTree`` is built.

The DPs (deterministic depth, distributional error at a depth budget,
zero-error expected cost) recurse over restrictions of the function and are
memoized by a canonical base-3 encoding of the restricting subcube, so they
are exact but limited to arity <= 14.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .boolfunc import (
    TOL,
    BooleanFunction,
    Point,
    ProductDistribution,
    Subcube,
    subcube_prob,
)

DP_MAX_ARITY = 14

__all__ = [
    "DP_MAX_ARITY",
    "Leaf",
    "Query",
    "DecisionTree",
    "RandomizedTree",
    "RunResult",
    "LeafStat",
    "LeafProfile",
    "run",
    "tree_depth",
    "tree_leaves",
    "queried_set",
    "exact_D",
    "optimal_dist_error",
    "exact_Dmu_eps",
    "zero_error_expected_cost",
    "dist_error_curve_fast",
    "prob_one_in_subcube",
    "leaf_profile",
    "avg_leaf_bias",
    "label_leaves",
    "tree_error",
    "tree_to_json",
    "tree_from_json",
    "random_tree",
    "random_randomized_tree",
    "singleton",
]


# ---------------------------------------------------------------------------
# Tree structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    label: Optional[int] = None

    def __post_init__(self):
        if self.label not in (None, 0, 1):
            raise ValueError(f"leaf label must be None, 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Query:
    var: int
    child0: object
    child1: object


Node = object  # Leaf | Query


@dataclass(frozen=True)
class DecisionTree:
    """A decision tree over ``arity`` variables with repeat-free paths."""

    arity: int
    root: Node

    def __post_init__(self):
        _validate(self.root, self.arity, frozenset())

    @property
    def depth(self) -> int:
        return tree_depth(self.root)

    def is_labeled(self) -> bool:
        return all(label is not None for _, _, label, _ in tree_leaves(self))


def _validate(node: Node, arity: int, seen: frozenset):
    if isinstance(node, Leaf):
        return
    if not isinstance(node, Query):
        raise ValueError(f"invalid node {node!r}")
    if not 1 <= node.var <= arity:
        raise ValueError(f"query variable {node.var} out of range [1, {arity}]")
    if node.var in seen:
        raise ValueError(f"variable {node.var} repeats on a path")
    nxt = seen | {node.var}
    _validate(node.child0, arity, nxt)
    _validate(node.child1, arity, nxt)


def tree_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.child0), tree_depth(node.child1))


def tree_leaves(tree: DecisionTree):
    """Yield (leaf_id, subcube, label, depth); leaf_id is the 0/1 path string."""
    out = []

    def walk(node, path, fixed):
        if isinstance(node, Leaf):
            out.append((path, Subcube(tuple(fixed)), node.label, len(fixed)))
            return
        walk(node.child0, path + "0", fixed + [(node.var, 0)])
        walk(node.child1, path + "1", fixed + [(node.var, 1)])

    walk(tree.root, "", [])
    return out


class RunResult(NamedTuple):
    leaf_id: str
    queried: tuple
    output: Optional[int]


def run(tree: DecisionTree, x: Point) -> RunResult:
    if len(x) != tree.arity:
        raise ValueError("arity mismatch between tree and input")
    node = tree.root
    path = []
    queried = []
    while isinstance(node, Query):
        b = x[node.var - 1]
        queried.append(node.var)
        path.append(str(b))
        node = node.child1 if b else node.child0
    return RunResult("".join(path), tuple(queried), node.label)


def queried_set(tree: DecisionTree, x: Point) -> frozenset:
    return frozenset(run(tree, x).queried)


@dataclass(frozen=True)
class RandomizedTree:
    """A finitely supported distribution over decision trees of one arity."""

    entries: tuple  # of (weight, DecisionTree)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("randomized tree needs at least one entry")
        arities = {t.arity for _, t in self.entries}
        if len(arities) != 1:
            raise ValueError("all support trees must share one arity")
        total = 0
        for w, _ in self.entries:
            if w <= 0:
                raise ValueError("weights must be positive")
            total = total + w
        if isinstance(total, Fraction):
            if total != 1:
                raise ValueError(f"weights must sum to 1, got {total}")
        elif abs(total - 1) > TOL:
            raise ValueError(f"weights must sum to 1, got {total}")

    @property
    def arity(self) -> int:
        return self.entries[0][1].arity

    @property
    def complexity(self) -> int:
        return max(t.depth for _, t in self.entries)


def singleton(tree: DecisionTree) -> RandomizedTree:
    return RandomizedTree(((1, tree),))


# ---------------------------------------------------------------------------
# Restriction DP machinery
# ---------------------------------------------------------------------------


class _RestrictionDP:
    """Memoized recursions over subcubes of one function.

    The memo key is the base-3 encoding of the restriction: digit j is the
    fixed bit of variable j+1, or 2 when free.
    """

    def __init__(self, f: BooleanFunction, mu: Optional[ProductDistribution] = None):
        if f.arity > DP_MAX_ARITY:
            raise ValueError(f"arity {f.arity} above DP cap {DP_MAX_ARITY}")
        self.f = f
        self.m = f.arity
        self.mu = mu
        self.pow3 = [3**j for j in range(self.m)]
        self._const = {}
        self._p1 = {}
        self._depth = {}
        self._err = {}
        self._cost = {}

    def _key(self, assign) -> int:
        key = 0
        for j, v in enumerate(assign):
            key += (2 if v is None else v) * self.pow3[j]
        return key

    def _first_free(self, assign):
        for j, v in enumerate(assign):
            if v is None:
                return j
        return None

    def _point_index(self, assign) -> int:
        idx = 0
        for j, v in enumerate(assign):
            idx |= v << j
        return idx

    def const_value(self, assign):
        """Constant value of f on the subcube, or None."""
        key = self._key(assign)
        try:
            return self._const[key]
        except KeyError:
            pass
        j = self._first_free(assign)
        if j is None:
            val = self.f.value_at(self._point_index(assign))
        else:
            assign[j] = 0
            v0 = self.const_value(assign)
            assign[j] = 1
            v1 = self.const_value(assign) if v0 is not None else None
            assign[j] = None
            val = v0 if (v0 is not None and v0 == v1) else None
        self._const[key] = val
        return val

    def prob_one(self, assign):
        """Pr[f = 1] under mu conditioned on the subcube."""
        key = self._key(assign)
        try:
            return self._p1[key]
        except KeyError:
            pass
        j = self._first_free(assign)
        if j is None:
            val = self.f.value_at(self._point_index(assign))
        else:
            p = self.mu.marginals[j]
            assign[j] = 0
            q0 = self.prob_one(assign)
            assign[j] = 1
            q1 = self.prob_one(assign)
            assign[j] = None
            val = (1 - p) * q0 + p * q1
        self._p1[key] = val
        return val

    def depth(self, assign) -> int:
        key = self._key(assign)
        try:
            return self._depth[key]
        except KeyError:
            pass
        if self.const_value(assign) is not None:
            val = 0
        else:
            best = None
            for j in range(self.m):
                if assign[j] is not None:
                    continue
                assign[j] = 0
                d0 = self.depth(assign)
                assign[j] = 1
                d1 = self.depth(assign)
                assign[j] = None
                worst = max(d0, d1)
                if best is None or worst < best:
                    best = worst
            val = 1 + best
        self._depth[key] = val
        return val

    def dist_error(self, assign, k: int):
        """Least error of a depth<=k tree on the restriction, with early
        stopping allowed at every node."""
        key = (self._key(assign), k)
        try:
            return self._err[key]
        except KeyError:
            pass
        q = self.prob_one(assign)
        best = min(q, 1 - q)
        if k > 0 and best > 0:
            for j in range(self.m):
                if assign[j] is not None:
                    continue
                p = self.mu.marginals[j]
                assign[j] = 0
                e0 = self.dist_error(assign, k - 1)
                assign[j] = 1
                e1 = self.dist_error(assign, k - 1)
                assign[j] = None
                split = (1 - p) * e0 + p * e1
                if split < best:
                    best = split
        self._err[key] = best
        return best

    def zero_error_cost(self, assign):
        key = self._key(assign)
        try:
            return self._cost[key]
        except KeyError:
            pass
        if self.const_value(assign) is not None:
            val = 0
        else:
            best = None
            for j in range(self.m):
                if assign[j] is not None:
                    continue
                p = self.mu.marginals[j]
                assign[j] = 0
                c0 = self.zero_error_cost(assign)
                assign[j] = 1
                c1 = self.zero_error_cost(assign)
                assign[j] = None
                cost = (1 - p) * c0 + p * c1
                if best is None or cost < best:
                    best = cost
            val = 1 + best
        self._cost[key] = val
        return val


def exact_D(f: BooleanFunction) -> int:
    """Deterministic query complexity by memoized recursion over subcubes."""
    dp = _RestrictionDP(f)
    return dp.depth([None] * f.arity)


def optimal_dist_error(f: BooleanFunction, mu: ProductDistribution, k: int):
    """Best achievable error over mu of any depth<=k deterministic tree."""
    if f.arity != mu.arity:
        raise ValueError("arity mismatch")
    if k < 0:
        raise ValueError("depth budget must be >= 0")
    dp = _RestrictionDP(f, mu)
    return dp.dist_error([None] * f.arity, min(k, f.arity))


def exact_Dmu_eps(f: BooleanFunction, mu: ProductDistribution, eps) -> int:
    """Least depth k with optimal_dist_error(f, mu, k) <= eps.

    Float inputs are compared with a 1e-12 slack; Fraction inputs exactly.
    """
    if f.arity != mu.arity:
        raise ValueError("arity mismatch")
    dp = _RestrictionDP(f, mu)
    assign = [None] * f.arity
    exact = isinstance(eps, Fraction) and isinstance(mu.marginals[0], Fraction)
    for k in range(f.arity + 1):
        err = dp.dist_error(assign, k)
        if err <= eps or (not exact and err <= eps + 1e-12):
            return k
    raise AssertionError("unreachable: depth m always has error 0")


def zero_error_expected_cost(f: BooleanFunction, mu: ProductDistribution):
    """Least expected number of queries of any tree computing f exactly."""
    if f.arity != mu.arity:
        raise ValueError("arity mismatch")
    dp = _RestrictionDP(f, mu)
    return dp.zero_error_cost([None] * f.arity)


# ---------------------------------------------------------------------------
# Full-lattice float engine (used by the adversarial-distribution search)
# ---------------------------------------------------------------------------


def dist_error_curve_fast(f: BooleanFunction, marginals: Sequence[float]) -> np.ndarray:
    """err(k) for k = 0..m over the whole subcube lattice, float arithmetic.

    Equivalent to ``optimal_dist_error`` for each k; vectorized so a search
    can evaluate many distributions. Arity is capped by memory at ~12.
    """
    m = f.arity
    if m != len(marginals):
        raise ValueError("arity mismatch")
    if m > 12:
        raise ValueError("lattice engine capped at arity 12")
    p = [float(q) for q in marginals]
    pow3 = [3**j for j in range(m)]
    n_states = 3**m

    digits = np.zeros((n_states, m), dtype=np.int8)
    states = np.arange(n_states)
    rem = states.copy()
    for j in range(m):
        digits[:, j] = rem % 3
        rem //= 3

    free_count = (digits == 2).sum(axis=1)

    # conditional Pr[f=1] per state, levels of increasing free-variable count
    p1 = np.zeros(n_states)
    full = states[free_count == 0]
    idx = np.zeros(len(full), dtype=np.int64)
    for j in range(m):
        idx |= digits[full, j].astype(np.int64) << j
    p1[full] = f.table_array()[idx]
    first_free = np.full(n_states, -1, dtype=np.int8)
    for j in range(m - 1, -1, -1):
        first_free[digits[:, j] == 2] = j
    for level in range(1, m + 1):
        for j in range(m):
            sel = states[(free_count == level) & (first_free == j)]
            if len(sel) == 0:
                continue
            p1[sel] = (1 - p[j]) * p1[sel - 2 * pow3[j]] + p[j] * p1[sel - pow3[j]]

    err0 = np.minimum(p1, 1 - p1)
    per_var = []
    for j in range(m):
        sel = states[digits[:, j] == 2]
        per_var.append((sel, sel - 2 * pow3[j], sel - pow3[j]))

    curve = [err0[-1]]
    prev = err0
    for _ in range(1, m + 1):
        cur = err0.copy()
        for j in range(m):
            sel, c0, c1 = per_var[j]
            cand = (1 - p[j]) * prev[c0] + p[j] * prev[c1]
            np.minimum.at(cur, sel, cand)
        curve.append(cur[-1])
        prev = cur
    return np.array(curve)


# ---------------------------------------------------------------------------
# Leaf statistics, labeling, error
# ---------------------------------------------------------------------------


def prob_one_in_subcube(f: BooleanFunction, mu: ProductDistribution, c: Subcube):
    """Pr[f = 1] under mu conditioned on c (c must have positive mass).

    Variables with 0/1 marginals are forced rather than enumerated, so
    two-point and other degenerate distributions stay cheap.
    """
    fixed = c.fixed_map()
    base = 0
    for i, b in fixed.items():
        base |= b << (i - 1)
    free = []
    for var in c.free_vars(f.arity):
        pv = mu.marginals[var - 1]
        if pv == 0:
            continue
        if pv == 1:
            base |= 1 << (var - 1)
            continue
        free.append((var, pv))
    q = 0
    for comp in range(1 << len(free)):
        idx = base
        w = 1
        for j, (var, pv) in enumerate(free):
            bit = (comp >> j) & 1
            idx |= bit << (var - 1)
            w = w * (pv if bit else (1 - pv))
        if f.value_at(idx):
            q = q + w
    return q


class LeafStat(NamedTuple):
    leaf_id: str
    reach: object
    bias: object


@dataclass(frozen=True)
class LeafProfile:
    leaves: tuple  # of LeafStat

    def total_bias(self):
        total = 0
        for st in self.leaves:
            total = total + st.reach * st.bias
        return total


def leaf_profile(tree: DecisionTree, f: BooleanFunction, mu: ProductDistribution) -> LeafProfile:
    """Reach probability and bias min{Pr[f=0|leaf], Pr[f=1|leaf]} per leaf.

    Zero-reach leaves get bias 0.
    """
    if tree.arity != f.arity or f.arity != mu.arity:
        raise ValueError("arity mismatch")
    stats = []
    for leaf_id, cube, _, _ in tree_leaves(tree):
        reach = subcube_prob(mu, cube)
        if reach == 0:
            stats.append(LeafStat(leaf_id, reach, 0))
            continue
        q = prob_one_in_subcube(f, mu, cube)
        stats.append(LeafStat(leaf_id, reach, min(q, 1 - q)))
    return LeafProfile(tuple(stats))


def avg_leaf_bias(r: RandomizedTree, f: BooleanFunction, mu: ProductDistribution):
    """E_{T~R} E_{leaf~reach}[bias]; the unlabelled-tree error proxy."""
    total = 0
    for w, tree in r.entries:
        total = total + w * leaf_profile(tree, f, mu).total_bias()
    return total


def label_leaves(tree: DecisionTree, f: BooleanFunction, mu: ProductDistribution) -> DecisionTree:
    """Label every leaf with the conditional majority value of f under mu.

    Zero-mass leaves are labeled 0.
    """
    if tree.arity != f.arity or f.arity != mu.arity:
        raise ValueError("arity mismatch")

    def walk(node, fixed):
        if isinstance(node, Leaf):
            cube = Subcube(tuple(fixed))
            if subcube_prob(mu, cube) == 0:
                return Leaf(0)
            q = prob_one_in_subcube(f, mu, cube)
            return Leaf(1 if 2 * q >= 1 else 0)
        return Query(
            node.var,
            walk(node.child0, fixed + [(node.var, 0)]),
            walk(node.child1, fixed + [(node.var, 1)]),
        )

    return DecisionTree(tree.arity, walk(tree.root, []))


def tree_error(tree: DecisionTree, f: BooleanFunction, mu: ProductDistribution):
    """Pr_{x~mu}[f(x) != T(x)], exact by summation over leaves."""
    if tree.arity != f.arity or f.arity != mu.arity:
        raise ValueError("arity mismatch")
    err = 0
    for leaf_id, cube, label, _ in tree_leaves(tree):
        reach = subcube_prob(mu, cube)
        if reach == 0:
            continue
        if label is None:
            raise ValueError(f"reachable leaf {leaf_id!r} has no label")
        q = prob_one_in_subcube(f, mu, cube)
        err = err + reach * (q if label == 0 else (1 - q))
    return err


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _node_to_obj(node: Node):
    if isinstance(node, Leaf):
        return {"leaf": node.label}
    return {
        "query": node.var,
        "child0": _node_to_obj(node.child0),
        "child1": _node_to_obj(node.child1),
    }


def _node_from_obj(obj) -> Node:
    if "leaf" in obj:
        return Leaf(obj["leaf"])
    return Query(obj["query"], _node_from_obj(obj["child0"]), _node_from_obj(obj["child1"]))


def tree_to_json(tree: DecisionTree) -> str:
    """Deterministic nested text form, child0 before child1."""
    return json.dumps({"arity": tree.arity, "root": _node_to_obj(tree.root)}, sort_keys=True)


def tree_from_json(text: str) -> DecisionTree:
    obj = json.loads(text)
    return DecisionTree(obj["arity"], _node_from_obj(obj["root"]))


# ---------------------------------------------------------------------------
# Random trees (test and search fodder)
# ---------------------------------------------------------------------------


def random_tree(m: int, rng, max_depth: Optional[int] = None, labeled: bool = False,
                leaf_prob: float = 0.3) -> DecisionTree:
    """A random repeat-free tree; rng is ``random.Random``."""
    if max_depth is None:
        max_depth = m

    def grow(available, depth):
        if not available or depth == 0 or rng.random() < leaf_prob:
            return Leaf(rng.randint(0, 1) if labeled else None)
        var = rng.choice(available)
        rest = [v for v in available if v != var]
        return Query(var, grow(rest, depth - 1), grow(rest, depth - 1))

    return DecisionTree(m, grow(list(range(1, m + 1)), max_depth))


def random_randomized_tree(m: int, rng, support: int = 3, max_depth: Optional[int] = None,
                           labeled: bool = False) -> RandomizedTree:
    """Random mixture with exact dyadic-rational weights (for exact checks)."""
    k = rng.randint(1, support)
    trees = [random_tree(m, rng, max_depth, labeled) for _ in range(k)]
    raw = [rng.randint(1, 8) for _ in range(k)]
    total = sum(raw)
    return RandomizedTree(tuple((Fraction(w, total), t) for w, t in zip(raw, trees)))
