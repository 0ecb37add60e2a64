"""NAND-tree evaluation: the distribution-aware zero-error evaluator, the
randomized-child evaluator, exact expected-cost recursions, and Monte-Carlo
cost estimation with exponent fitting.

Trees are complete binary formulas of depth d over 2^d leaves. Leaves are
0-indexed here (this module never goes through truth tables); node (k, j) is
the j-th node at depth k, with children (k+1, 2j) and (k+1, 2j+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "NandInstance",
    "ZeroProbTree",
    "CostEstimate",
    "eval_formula",
    "eval_formula_batch",
    "zero_probs",
    "root_zero_prob_exhaustive",
    "greedy_zero",
    "Transcript",
    "GreedyZeroEvaluator",
    "SaksWigderson",
    "saks_wigderson",
    "sw_expected_queries_at",
    "expected_cost_greedy_zero",
    "expected_cost_sw",
    "mc_cost",
    "max_two_level_factor",
    "two_level_traced_bound",
    "fit_exponent",
    "golden_marginals",
    "tile_marginals",
]


@dataclass(frozen=True)
class NandInstance:
    """A depth-d input: 2^d leaf bits."""

    depth: int
    input: tuple

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if len(self.input) != 1 << self.depth:
            raise ValueError(f"input length {len(self.input)} != 2^{self.depth}")
        if set(self.input) - {0, 1}:
            raise ValueError("input must be bits")

    def value(self) -> int:
        return eval_formula(self.input)


def eval_formula(x: Sequence[int]) -> int:
    """Bottom-up NAND evaluation; g_0(b) = b."""
    n = len(x)
    if n & (n - 1):
        raise ValueError(f"input length {n} is not a power of two")
    vals = list(x)
    while len(vals) > 1:
        vals = [1 - (vals[2 * i] & vals[2 * i + 1]) for i in range(len(vals) // 2)]
    return int(vals[0])


def eval_formula_batch(xs: np.ndarray) -> np.ndarray:
    """Vectorized eval_formula over rows of a (n, 2^d) bit matrix."""
    vals = np.asarray(xs, dtype=np.int8)
    while vals.shape[1] > 1:
        vals = 1 - (vals[:, 0::2] & vals[:, 1::2])
    return vals[:, 0]


# ---------------------------------------------------------------------------
# Subtree zero-probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroProbTree:
    """q(node) = Pr[subtree evaluates to 0] under a product distribution.

    levels[k] lists the 2^k nodes at depth k; levels[d] are the leaves with
    q = 1 - p_i, and q(internal) = (1 - q_left)(1 - q_right).
    """

    depth: int
    levels: tuple

    @property
    def root(self):
        return self.levels[0][0]


def zero_probs(d: int, marginals: Sequence) -> ZeroProbTree:
    if len(marginals) != 1 << d:
        raise ValueError(f"need 2^{d} marginals, got {len(marginals)}")
    level = [1 - p for p in marginals]
    levels = [tuple(level)]
    for _ in range(d):
        level = [(1 - level[2 * i]) * (1 - level[2 * i + 1]) for i in range(len(level) // 2)]
        levels.append(tuple(level))
    levels.reverse()
    tree = ZeroProbTree(d, tuple(levels))
    return tree


def root_zero_prob_exhaustive(d: int, marginals: Sequence):
    """Pr[g_d(x) = 0] by brute-force summation; oracle for small d."""
    n = 1 << d
    total = 0
    for idx in range(1 << n):
        x = [(idx >> j) & 1 for j in range(n)]
        if eval_formula(x) == 0:
            w = 1
            for b, p in zip(x, marginals):
                w = w * (p if b else (1 - p))
            total = total + w
    return total


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------


class Transcript:
    """Query access to an input that records the query order (0-indexed)."""

    def __init__(self, x: Sequence[int]):
        self.x = x
        self.order = []

    def query(self, i: int) -> int:
        self.order.append(i)
        return self.x[i]

    @property
    def count(self) -> int:
        return len(self.order)


class GreedyZeroEvaluator:
    """Deterministic zero-error evaluator that always descends first into the
    child whose subtree is more likely to evaluate to 0 (ties go left).

    Needs the product distribution; the zero-probability tree is computed
    once and shared by all runs.
    """

    def __init__(self, d: int, marginals: Sequence):
        self.depth = d
        self.zp = zero_probs(d, marginals)

    def run(self, access: Transcript, rng=None) -> int:
        return self._eval(access, 0, 0)

    def _eval(self, access, k, j) -> int:
        if k == self.depth:
            return access.query(j)
        ql = self.zp.levels[k + 1][2 * j]
        qr = self.zp.levels[k + 1][2 * j + 1]
        first, other = (2 * j, 2 * j + 1) if ql >= qr else (2 * j + 1, 2 * j)
        if self._eval(access, k + 1, first) == 0:
            return 1
        return 1 - self._eval(access, k + 1, other)


class SaksWigderson:
    """Zero-error evaluator that recurses into a uniformly random child first
    and prunes the sibling when the first child evaluates to 0."""

    def __init__(self, d: int):
        self.depth = d

    def run(self, access: Transcript, rng) -> int:
        return self._eval(access, 0, 0, rng)

    def _eval(self, access, k, j, rng) -> int:
        if k == self.depth:
            return access.query(j)
        if int(rng.integers(0, 2)):
            first, other = 2 * j + 1, 2 * j
        else:
            first, other = 2 * j, 2 * j + 1
        if self._eval(access, k + 1, first, rng) == 0:
            return 1
        return 1 - self._eval(access, k + 1, other, rng)


def greedy_zero(d: int, marginals: Sequence, x: Sequence[int]) -> tuple:
    """(value, queries) of the distribution-aware evaluator on x."""
    access = Transcript(x)
    value = GreedyZeroEvaluator(d, marginals).run(access)
    return value, access.count


def saks_wigderson(d: int, x: Sequence[int], rng) -> tuple:
    """(value, queries) of the randomized evaluator on x."""
    access = Transcript(x)
    value = SaksWigderson(d).run(access, rng)
    return value, access.count


def sw_expected_queries_at(d: int, x: Sequence[int]):
    """Exact expected query count of the randomized evaluator on one input,
    by recursion over the two child orders (Fraction-safe)."""
    from fractions import Fraction

    def walk(k, j):
        if k == d:
            return 1, x[j]
        cl, vl = walk(k + 1, 2 * j)
        cr, vr = walk(k + 1, 2 * j + 1)
        cost_lr = cl + (0 if vl == 0 else cr)
        cost_rl = cr + (0 if vr == 0 else cl)
        return Fraction(cost_lr + cost_rl, 2), 1 - (vl & vr)

    cost, _ = walk(0, 0)
    return cost


# ---------------------------------------------------------------------------
# Exact expected costs
# ---------------------------------------------------------------------------


def expected_cost_greedy_zero(d: int, marginals: Sequence):
    """Exact E[queries] of the distribution-aware evaluator under its own
    distribution: cost(node) = cost(first) + (1 - q_first) cost(other)."""
    zp = zero_probs(d, marginals)
    costs = [1] * (1 << d)
    for k in range(d - 1, -1, -1):
        nxt = []
        for j in range(1 << k):
            ql = zp.levels[k + 1][2 * j]
            qr = zp.levels[k + 1][2 * j + 1]
            if ql >= qr:
                qf, cf, co = ql, costs[2 * j], costs[2 * j + 1]
            else:
                qf, cf, co = qr, costs[2 * j + 1], costs[2 * j]
            nxt.append(cf + (1 - qf) * co)
        costs = nxt
    return costs[0]


def expected_cost_sw(d: int, marginals: Sequence):
    """Exact E[queries] of the randomized evaluator under a product
    distribution (expectation over inputs and coin flips)."""
    zp = zero_probs(d, marginals)
    costs = [1] * (1 << d)
    for k in range(d - 1, -1, -1):
        nxt = []
        for j in range(1 << k):
            ql = zp.levels[k + 1][2 * j]
            qr = zp.levels[k + 1][2 * j + 1]
            cl, cr = costs[2 * j], costs[2 * j + 1]
            lr = cl + (1 - ql) * cr
            rl = cr + (1 - qr) * cl
            nxt.append((lr + rl) / 2)
        costs = nxt
    return costs[0]


# ---------------------------------------------------------------------------
# Monte-Carlo cost estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    half_width_95: float
    samples: int


def _summary(total, total_sq, n) -> CostEstimate:
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    half = 1.96 * math.sqrt(var / n)
    return CostEstimate(mean, half, n)


def _auto_batch(n_leaves: int, batch) -> int:
    if batch is not None:
        return batch
    # keep transient arrays near 2^26 elements (deep trees get small batches)
    return max(16, min(4096, (1 << 26) // max(1, n_leaves)))


def mc_cost(algorithm: str, d: int, marginals: Sequence, samples: int, seed: int,
            batch: int = None) -> CostEstimate:
    """Monte-Carlo estimate of the expected query count on x ~ mu.

    ``algorithm`` is 'greedy_zero' or 'saks_wigderson'. Inputs are sampled
    lazily in batches and the evaluator runs as a vectorized bottom-up fold,
    so each depth costs O(samples * 2^d) array work.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    if algorithm not in ("greedy_zero", "saks_wigderson"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    p = np.asarray([float(q) for q in marginals])
    n_leaves = 1 << d
    if len(p) != n_leaves:
        raise ValueError("marginal count does not match depth")

    first_left = None
    if algorithm == "greedy_zero":
        zp = zero_probs(d, [float(q) for q in marginals])
        # per-level static orders: True when the left child goes first
        first_left = [
            np.asarray(
                [zp.levels[k + 1][2 * j] >= zp.levels[k + 1][2 * j + 1] for j in range(1 << k)]
            )
            for k in range(d)
        ]

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    batch = _auto_batch(n_leaves, batch)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        x = (rng.random((n, n_leaves)) < p).astype(np.int8)
        val = x
        cost = np.ones((n, n_leaves), dtype=np.int32)
        for k in range(d - 1, -1, -1):
            vl, vr = val[:, 0::2], val[:, 1::2]
            cl, cr = cost[:, 0::2], cost[:, 1::2]
            if algorithm == "greedy_zero":
                left_first = np.broadcast_to(first_left[k], vl.shape)
            else:
                left_first = rng.integers(0, 2, size=vl.shape, dtype=np.int8) == 1
            fv = np.where(left_first, vl, vr)
            ov = np.where(left_first, vr, vl)
            fc = np.where(left_first, cl, cr)
            oc = np.where(left_first, cr, cl)
            val = np.where(fv == 0, 1, 1 - ov).astype(np.int8)
            cost = fc + (fv == 1) * oc
        root = cost[:, 0].astype(np.float64)
        total += float(root.sum())
        total_sq += float((root * root).sum())
        done += n
    return _summary(total, total_sq, samples)


# ---------------------------------------------------------------------------
# The two-level growth bound
# ---------------------------------------------------------------------------


def max_two_level_factor() -> float:
    """max over [0,1] of (2 - x)(1 + 2x - x^2)."""
    return (2.0 / 27.0) * (17.0 + 7.0 * math.sqrt(7.0))


def two_level_traced_bound(d: int, marginals: Sequence) -> dict:
    """Instrumented two-level check: the exact expected cost at depth d is at
    most (2 - g)(1 + 2g - g^2) times the worst grandchild cost, where g is
    the smaller of the two root children's larger child-zero-probabilities.
    """
    if d < 2:
        raise ValueError("need depth >= 2")
    zp = zero_probs(d, marginals)
    n = 1 << d
    lhs = expected_cost_greedy_zero(d, marginals)
    quarter = n // 4
    grandchild_costs = [
        expected_cost_greedy_zero(d - 2, marginals[i * quarter:(i + 1) * quarter])
        for i in range(4)
    ]
    t_star = max(grandchild_costs)
    a1 = max(zp.levels[2][0], zp.levels[2][1])
    b1 = max(zp.levels[2][2], zp.levels[2][3])
    g = min(a1, b1)
    rhs = (2 - g) * (1 + 2 * g - g * g) * t_star
    return {
        "lhs": lhs,
        "rhs": rhs,
        "gamma": g,
        "t_star": t_star,
        "ok": bool(lhs <= rhs + 1e-9),
    }


# ---------------------------------------------------------------------------
# Exponent fitting and marginal helpers
# ---------------------------------------------------------------------------


def fit_exponent(points: Sequence) -> tuple:
    """Least-squares slope of log(mean) against depth: (base, rms residual)."""
    if len(points) < 4:
        raise ValueError("need at least 4 depths to fit")
    ds = np.asarray([float(d) for d, _ in points])
    means = np.asarray([float(m) for _, m in points])
    if (means <= 0).any():
        raise ValueError("means must be positive")
    logs = np.log(means)
    slope, intercept = np.polyfit(ds, logs, 1)
    resid = logs - (slope * ds + intercept)
    return float(math.exp(slope)), float(np.sqrt(np.mean(resid**2)))


def golden_marginals(d: int) -> np.ndarray:
    """The stationary marginals: every subtree has zero-probability
    (3 - sqrt 5)/2, the fixed point of q = (1-q)^2."""
    p = (math.sqrt(5.0) - 1.0) / 2.0
    return np.full(1 << d, p)


def tile_marginals(block: Sequence[float], d: int) -> np.ndarray:
    """Tile a block of leaf marginals periodically across 2^d leaves."""
    block = np.asarray([float(p) for p in block])
    n = 1 << d
    reps = -(-n // len(block))
    return np.tile(block, reps)[:n]
