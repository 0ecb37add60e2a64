"""The hard pair distribution for NAND trees, the algorithm lift chain, and
the separation-cost recursion that yields the exponential lower bound.

A level-d pair (x, y) has g_d(x) = 0 and g_d(y) = 1 and is built by lifting
the point pair (0, 1) d times: each level-t coordinate i becomes a fresh
two-bit block via a uniform bit b_i, with the old value embedded (as its
complement) in slot b_i and slot 1-b_i padded with 1. Pairs always differ at
exactly one index. Leaf positions are 0-indexed, as in ``nandtree``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .nandtree import Transcript, _auto_batch, _summary, zero_probs

__all__ = [
    "HardPair",
    "LevelLift",
    "SepCountEstimate",
    "SeparationError",
    "sample_hard_pair",
    "sample_pairs_batch",
    "enumerate_hard_pairs",
    "check_embedding",
    "LiftedAlgorithm",
    "lift",
    "lift_chain",
    "sep_cost",
    "sep_value_counts",
    "estimate_sep_counts",
    "mc_sep_cost",
    "expected_sep_cost_sw",
    "block_case_bounds",
    "BlockCaseBounds",
    "exact_base_cases",
    "RecursionReport",
    "check_recursions",
    "BOUND_MATRIX",
    "spectral_alpha",
]


class SeparationError(RuntimeError):
    """A run ended without querying a differing index (the algorithm is not
    zero-error)."""


# ---------------------------------------------------------------------------
# The hard distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelLift:
    """One lift step: the pre-lift pair, the uniform bits, and the blocks."""

    b: tuple
    pre_x: tuple
    pre_y: tuple
    u: tuple  # of (u0, u1) per block
    v: tuple


@dataclass(frozen=True)
class HardPair:
    depth: int
    x: tuple
    y: tuple
    levels: Optional[tuple] = None  # of LevelLift, bottom (level 0) first

    def differing_index(self) -> int:
        for i, (a, b) in enumerate(zip(self.x, self.y)):
            if a != b:
                return i
        raise AssertionError("hard pair without a differing index")


def _lift_blocks(x: tuple, y: tuple, b: tuple) -> tuple:
    us, vs = [], []
    for xi, yi, bi in zip(x, y, b):
        if (xi, yi) == (0, 0):
            u = v = (1, 1)
        elif (xi, yi) == (0, 1):
            u, v = (1, 1), (bi, 1 - bi)
        elif (xi, yi) == (1, 0):
            u, v = (bi, 1 - bi), (1, 1)
        else:
            u = v = (bi, 1 - bi)
        us.append(u)
        vs.append(v)
    x2 = tuple(bit for u in us for bit in u)
    y2 = tuple(bit for v in vs for bit in v)
    return x2, y2, tuple(us), tuple(vs)


def sample_hard_pair(d: int, rng, keep_meta: bool = False) -> HardPair:
    """Sample a pair from the level-d hard distribution.

    With ``keep_meta`` the per-level bits and blocks are retained so that the
    embedding invariants can be audited.
    """
    if d < 0:
        raise ValueError("depth must be >= 0")
    x, y = (0,), (1,)
    levels = [] if keep_meta else None
    for _ in range(d):
        b = tuple(int(v) for v in rng.integers(0, 2, size=len(x)))
        x2, y2, us, vs = _lift_blocks(x, y, b)
        if keep_meta:
            levels.append(LevelLift(b, x, y, us, vs))
        x, y = x2, y2
    return HardPair(d, x, y, tuple(levels) if keep_meta else None)


def sample_pairs_batch(d: int, n: int, rng) -> tuple:
    """Vectorized sampler: returns uint8 arrays x, y of shape (n, 2^d)."""
    x = np.zeros((n, 1), dtype=np.uint8)
    y = np.ones((n, 1), dtype=np.uint8)
    for _ in range(d):
        w = x.shape[1]
        b = rng.integers(0, 2, size=(n, w), dtype=np.uint8)
        x2 = np.empty((n, 2 * w), dtype=np.uint8)
        y2 = np.empty((n, 2 * w), dtype=np.uint8)
        x2[:, 0::2] = np.where(x == 0, 1, b)
        x2[:, 1::2] = np.where(x == 0, 1, 1 - b)
        y2[:, 0::2] = np.where(y == 0, 1, b)
        y2[:, 1::2] = np.where(y == 0, 1, 1 - b)
        x, y = x2, y2
    return x, y


def enumerate_hard_pairs(d: int):
    """Exhaustive support of the level-d distribution with probabilities.

    Returns a list of (prob, x, y); only sensible for d <= 3.
    """
    out = [(Fraction(1), (0,), (1,))]
    for _ in range(d):
        nxt = {}
        for prob, x, y in out:
            n = len(x)
            for bits in range(1 << n):
                b = tuple((bits >> i) & 1 for i in range(n))
                x2, y2, _, _ = _lift_blocks(x, y, b)
                key = (x2, y2)
                nxt[key] = nxt.get(key, Fraction(0)) + prob / (1 << n)
        out = [(p, x, y) for (x, y), p in nxt.items()]
    return out


def check_embedding(pair: HardPair) -> bool:
    """Audit the embedding: x_i is the complement of u_i at slot b_i, same
    for y_i and v_i, and both blocks carry 1 at slot 1-b_i."""
    if pair.levels is None:
        raise ValueError("pair was sampled without lift metadata")
    for lift_rec in pair.levels:
        for xi, yi, bi, u, v in zip(
            lift_rec.pre_x, lift_rec.pre_y, lift_rec.b, lift_rec.u, lift_rec.v
        ):
            if u[bi] != 1 - xi or v[bi] != 1 - yi:
                return False
            if u[1 - bi] != 1 or v[1 - bi] != 1:
                return False
    return True


# ---------------------------------------------------------------------------
# The lift chain
# ---------------------------------------------------------------------------


class _LiftView:
    """Query access seen by the inner algorithm: slot 1-b_i answers 1 for
    free, slot b_i consumes a real query and answers the complement."""

    def __init__(self, outer, b: Sequence[int]):
        self.outer = outer
        self.b = b

    def query(self, j: int) -> int:
        i, slot = divmod(j, 2)
        if slot != self.b[i]:
            return 1
        return 1 - self.outer.query(i)


class LiftedAlgorithm:
    """A zero-error algorithm for g_t built from one for g_{t+1} by sampling
    the lift bits internally and intercepting padded queries."""

    def __init__(self, base):
        if base.depth < 1:
            raise ValueError("cannot lift below depth 0")
        self.base = base
        self.depth = base.depth - 1

    def run(self, access, rng) -> int:
        b = [int(v) for v in rng.integers(0, 2, size=1 << self.depth)]
        return self.base.run(_LiftView(access, b), rng)


def lift(base) -> LiftedAlgorithm:
    return LiftedAlgorithm(base)


def lift_chain(base, t: int):
    """Repeatedly lift an algorithm for g_d down to one for g_t."""
    if t > base.depth:
        raise ValueError("target level above the base algorithm's depth")
    algo = base
    while algo.depth > t:
        algo = LiftedAlgorithm(algo)
    return algo


# ---------------------------------------------------------------------------
# Separation accounting
# ---------------------------------------------------------------------------


def sep_cost(algorithm, x: Sequence[int], y: Sequence[int], rng) -> int:
    """Queries on the run over x up to and including the first index where x
    and y differ."""
    access = Transcript(x)
    algorithm.run(access, rng)
    for pos, idx in enumerate(access.order, start=1):
        if x[idx] != y[idx]:
            return pos
    raise SeparationError("run ended without querying a differing index")


def sep_value_counts(algorithm, t: int, x: Sequence[int], y: Sequence[int], rng) -> tuple:
    """(queries of value 0, queries of value 1) on the x-run, up to and
    including the separating query."""
    if algorithm.depth != t or len(x) != 1 << t:
        raise ValueError("level mismatch")
    access = Transcript(x)
    algorithm.run(access, rng)
    q0 = q1 = 0
    for idx in access.order:
        if x[idx]:
            q1 += 1
        else:
            q0 += 1
        if x[idx] != y[idx]:
            return q0, q1
    raise SeparationError("run ended without querying a differing index")


@dataclass(frozen=True)
class SepCountEstimate:
    t: int
    b: int
    mean: float
    half_width_95: float
    samples: int

    @property
    def sigma(self) -> float:
        return self.half_width_95 / 1.96


def _q_summaries(t: int, q0: np.ndarray, q1: np.ndarray) -> tuple:
    out = []
    for b, arr in ((0, q0), (1, q1)):
        n = len(arr)
        mean = float(arr.mean())
        sd = float(arr.std(ddof=1)) if n > 1 else 0.0
        out.append(SepCountEstimate(t, b, mean, 1.96 * sd / math.sqrt(n), n))
    return tuple(out)


def estimate_sep_counts(base, d: int, t: int, samples: int, seed: int,
               run_on: str = "x") -> tuple:
    """Monte-Carlo estimates of Q(t, 0) and Q(t, 1) for the chain built from
    a zero-error base algorithm for g_d.

    ``base`` may be the string 'saks_wigderson' (vectorized engine) or any
    algorithm object with ``.depth == d`` (scalar chain). The two runs of a
    pair share one transcript until separation, so only the attribution of
    the final query differs between ``run_on='x'`` and ``'y'``.
    """
    if t > d:
        raise ValueError("t must be at most d")
    if run_on not in ("x", "y"):
        raise ValueError("run_on must be 'x' or 'y'")
    if base == "saks_wigderson":
        q0, q1 = _batch_chain_q(
            d, t, samples, np.random.default_rng(np.random.SeedSequence(seed)), run_on=run_on
        )
        return _q_summaries(t, q0, q1)
    if getattr(base, "depth", None) != d:
        raise ValueError("base algorithm depth does not match d")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    algo = lift_chain(base, t)
    q0s = np.empty(samples)
    q1s = np.empty(samples)
    for s in range(samples):
        pair = sample_hard_pair(t, rng)
        a, b = (pair.x, pair.y) if run_on == "x" else (pair.y, pair.x)
        q0s[s], q1s[s] = sep_value_counts(algo, t, a, b, rng)
    return _q_summaries(t, q0s, q1s)


# ---------------------------------------------------------------------------
# Vectorized engines
# ---------------------------------------------------------------------------


def _combine_sep(first, arrays):
    """One fold level of the randomized evaluator with separation state."""
    (vl, vr), (cl, cr), (sl, sr), (scl, scr) = arrays
    fv = np.where(first, vl, vr)
    ov = np.where(first, vr, vl)
    fc = np.where(first, cl, cr)
    oc = np.where(first, cr, cl)
    fs = np.where(first, sl, sr)
    os_ = np.where(first, sr, sl)
    fsc = np.where(first, scl, scr)
    osc = np.where(first, scr, scl)
    go_on = fv == 1
    val = np.where(fv == 0, 1, 1 - ov).astype(np.int8)
    cost = fc + go_on * oc
    sep = fs | (go_on & os_)
    sepc = np.where(fs, fsc, fc + osc)
    return val, cost, sep, sepc


def mc_sep_cost(algorithm: str, d: int, samples: int, seed: int,
                marginals: Optional[Sequence] = None, batch: int = None):
    """Monte-Carlo mean separation cost on hard pairs at depth d.

    ``algorithm`` is 'saks_wigderson' (coin per visited node) or
    'greedy_zero' (static child order from its zero-probability tree; uniform
    marginals unless given). Returns a ``nandtree.CostEstimate``.
    """
    if algorithm not in ("saks_wigderson", "greedy_zero"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    first_left = None
    if algorithm == "greedy_zero":
        margs = [0.5] * (1 << d) if marginals is None else [float(p) for p in marginals]
        zp = zero_probs(d, margs)
        first_left = [
            np.asarray([zp.levels[k + 1][2 * j] >= zp.levels[k + 1][2 * j + 1]
                        for j in range(1 << k)])
            for k in range(d)
        ]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    batch = _auto_batch(1 << d, batch)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        x, y = sample_pairs_batch(d, n, rng)
        val = x.astype(np.int8)
        diff = x != y
        cost = np.ones_like(val, dtype=np.int64)
        sep = diff
        sepc = diff.astype(np.int64)
        for k in range(d - 1, -1, -1):
            if algorithm == "greedy_zero":
                first = np.broadcast_to(first_left[k], (n, 1 << k))
            else:
                first = rng.integers(0, 2, size=(n, 1 << k), dtype=np.int8) == 1
            arrays = (
                (val[:, 0::2], val[:, 1::2]),
                (cost[:, 0::2], cost[:, 1::2]),
                (sep[:, 0::2], sep[:, 1::2]),
                (sepc[:, 0::2], sepc[:, 1::2]),
            )
            val, cost, sep, sepc = _combine_sep(first, arrays)
        if not bool(sep[:, 0].all()):
            raise SeparationError("a run ended without separation")
        root = sepc[:, 0].astype(np.float64)
        total += float(root.sum())
        total_sq += float((root * root).sum())
        done += n
    return _summary(total, total_sq, samples)


def _batch_chain_q(d: int, t: int, samples: int, rng, batch: int = None,
                   run_on: str = "x") -> tuple:
    """Level-t query-value counts until separation for the randomized
    evaluator lifted from level d, by the pair-lift coupling."""
    batch = _auto_batch(1 << d, batch)
    q0_out = np.empty(samples)
    q1_out = np.empty(samples)
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        x, y = sample_pairs_batch(t, n, rng)
        if run_on == "y":
            x, y = y, x
        real = np.ones_like(x, dtype=bool)
        tval = x.copy()
        diff = x != y
        for _ in range(d - t):
            w = x.shape[1]
            b = rng.integers(0, 2, size=(n, w), dtype=np.uint8)
            x2 = np.empty((n, 2 * w), dtype=np.uint8)
            y2 = np.empty((n, 2 * w), dtype=np.uint8)
            x2[:, 0::2] = np.where(x == 0, 1, b)
            x2[:, 1::2] = np.where(x == 0, 1, 1 - b)
            y2[:, 0::2] = np.where(y == 0, 1, b)
            y2[:, 1::2] = np.where(y == 0, 1, 1 - b)
            real2 = np.empty((n, 2 * w), dtype=bool)
            real2[:, 0::2] = real & (b == 0)
            real2[:, 1::2] = real & (b == 1)
            diff2 = np.empty((n, 2 * w), dtype=bool)
            diff2[:, 0::2] = diff & (b == 0)
            diff2[:, 1::2] = diff & (b == 1)
            tval2 = np.repeat(tval, 2, axis=1)
            x, y, real, diff, tval = x2, y2, real2, diff2, tval2

        val = x.astype(np.int8)
        r0 = (real & (tval == 0)).astype(np.int64)
        r1 = (real & (tval == 1)).astype(np.int64)
        sep = diff
        s0 = np.where(diff, r0, 0)
        s1 = np.where(diff, r1, 0)

        def split(arr, first):
            return (
                np.where(first, arr[:, 0::2], arr[:, 1::2]),
                np.where(first, arr[:, 1::2], arr[:, 0::2]),
            )

        for k in range(d - 1, -1, -1):
            first = rng.integers(0, 2, size=(n, 1 << k), dtype=np.int8) == 1
            fv, ov = split(val, first)
            fr0, or0 = split(r0, first)
            fr1, or1 = split(r1, first)
            fs, os_ = split(sep, first)
            fs0, os0 = split(s0, first)
            fs1, os1 = split(s1, first)
            go_on = fv == 1
            val = np.where(fv == 0, 1, 1 - ov).astype(np.int8)
            # full-run counts; the sibling contributes only when the first
            # child evaluated to 1
            r0 = fr0 + go_on * or0
            r1 = fr1 + go_on * or1
            # counts until separation: either it happened inside the first
            # child's run, or after its full run inside the sibling's
            s0 = np.where(fs, fs0, fr0 + os0)
            s1 = np.where(fs, fs1, fr1 + os1)
            sep = fs | (go_on & os_)
        if not bool(sep[:, 0].all()):
            raise SeparationError("a chain run ended without separation")
        q0_out[done:done + n] = s0[:, 0]
        q1_out[done:done + n] = s1[:, 0]
        done += n
    return q0_out, q1_out


# ---------------------------------------------------------------------------
# Exact references
# ---------------------------------------------------------------------------


def expected_sep_cost_sw(d: int) -> Fraction:
    """Exact E[separation cost] of the randomized evaluator on level-d hard
    pairs, from the two-state block recursion of the pair process."""
    w0 = w1 = Fraction(1)  # full-eval costs of the two no-difference block types
    s = Fraction(1)
    for _ in range(d):
        s = s + w1 / 2
        w0, w1 = 2 * w1, w0 + w1 / 2
    return s


# ---------------------------------------------------------------------------
# Table 1: the two-variable restricted-tree case analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCaseBounds:
    bounds: dict  # (b, b') -> Fraction, the minimum F over restricted trees
    witnesses: dict  # (b, b') -> tree name attaining the minimum
    per_tree: dict  # (tree name, b, b') -> Optional[Fraction]


def _restricted_tree_runs(shape: str, u: tuple):
    """Queried (slot, value) list for a two-variable restricted tree.

    Shapes: 'stop0'/'stop1' query one slot and stop; 'both0'/'both1' query
    that slot first and the other only when the first reads 1.
    """
    first = 0 if shape.endswith("0") else 1
    second = 1 - first
    queries = [(first, u[first])]
    if shape.startswith("both") and u[first] == 1:
        queries.append((second, u[second]))
    return queries


def block_case_bounds() -> BlockCaseBounds:
    """Exact minima of F over the structurally distinct two-variable trees.

    F(b, b') is the expected number of b'-valued block queries per unit
    probability of consuming the real query, with the block built from a
    level-t value b and a uniform bit; the pruning rule (a 0 answer settles
    the block) leaves two shapes per starting slot.
    """
    shapes = ("stop0", "both0", "stop1", "both1")
    half = Fraction(1, 2)
    per_tree = {}
    bounds = {}
    witnesses = {}
    for b in (0, 1):
        for bp in (0, 1):
            best = None
            best_name = None
            for shape in shapes:
                denom = Fraction(0)
                numer = Fraction(0)
                for bi in (0, 1):
                    u = (1, 1) if b == 0 else (bi, 1 - bi)
                    runs = _restricted_tree_runs(shape, u)
                    if any(slot == bi for slot, _ in runs):
                        denom += half
                    numer += half * sum(1 for _, value in runs if value == bp)
                f_val = None if denom == 0 else numer / denom
                per_tree[(shape, b, bp)] = f_val
                if f_val is not None and (best is None or f_val < best):
                    best, best_name = f_val, shape
            bounds[(b, bp)] = best
            witnesses[(b, bp)] = best_name
    return BlockCaseBounds(bounds, witnesses, per_tree)


# ---------------------------------------------------------------------------
# Base cases and the recursion check
# ---------------------------------------------------------------------------


def exact_base_cases() -> dict:
    """Exact minima of Q(t, b) over all deterministic zero-error trees for
    t in {0, 1}, by enumeration over the hard-pair support.

    Note the x-run pins two cells to zero: the level-0 x is the single bit 0
    and the level-1 x is (1, 1), so Q(0, 1) = Q(1, 0) = 0 for every
    algorithm. The recursion bootstrap only needs Q(0, 0) and Q(1, 1).
    """
    from .boolfunc import BooleanFunction, nand2
    from .dtree import run as tree_run
    from .games import zero_error_trees

    out = {}
    for t, f in ((0, BooleanFunction(1, 0b10)), (1, nand2())):
        support = enumerate_hard_pairs(t)
        best = {0: None, 1: None}
        for tree in zero_error_trees(f):
            totals = {0: Fraction(0), 1: Fraction(0)}
            for prob, x, y in support:
                q0 = q1 = 0
                for var in tree_run(tree, x).queried:
                    if x[var - 1]:
                        q1 += 1
                    else:
                        q0 += 1
                    if x[var - 1] != y[var - 1]:
                        break
                else:
                    raise SeparationError("zero-error tree failed to separate")
                totals[0] += prob * q0
                totals[1] += prob * q1
            for b in (0, 1):
                if best[b] is None or totals[b] < best[b]:
                    best[b] = totals[b]
        out[(t, 0)] = best[0]
        out[(t, 1)] = best[1]
    return out


BOUND_MATRIX = ((Fraction(0), Fraction(1)), (Fraction(2), Fraction(1, 2)))


@dataclass(frozen=True)
class RecursionReport:
    rows: tuple  # of dicts per inequality
    base_cases: dict
    base_ok: bool
    ok: bool  # the literal level-to-level inequalities
    corrected_ok: bool  # with the differing-block allowance on the 1-counts


def check_recursions(estimates: dict, z: float = 3.0) -> RecursionReport:
    """Check Q(t+1,0) >= Q(t,1) and Q(t+1,1) >= 2 Q(t,0) + Q(t,1)/2 across
    consecutive levels, within a z-sigma slack per cell (z = 3 with the
    Bonferroni budget spread over all tested cells), and verify the
    enumerated base cases.

    Each level has exactly one differing index, and the case analysis behind
    the factor-2 step does not cover the block holding it: that block's run
    is cut by the separation itself, so its true per-query factor is only 1
    (value 0 at the differing index) or 0 (value 1). The second inequality
    therefore admits an additive deficit of at most 1, and empirically fails
    by about 1/2 at alternating levels; every row also carries an
    ``ok_corrected`` verdict with that allowance, and ``corrected_ok``
    aggregates it. The geometric growth is unaffected: a bounded additive
    perturbation of the supercritical two-term recursion still grows at its
    spectral rate.
    """
    levels = sorted(estimates)
    rows = []
    for lo, hi in zip(levels, levels[1:]):
        if hi != lo + 1:
            continue
        e0_lo, e1_lo = estimates[lo]
        e0_hi, e1_hi = estimates[hi]
        sig_a = math.hypot(e0_hi.sigma, e1_lo.sigma)
        rows.append({
            "t": lo,
            "name": f"Q({hi},0) >= Q({lo},1)",
            "lhs": e0_hi.mean,
            "rhs": e1_lo.mean,
            "slack": z * sig_a,
            "allowance": 0.0,
            "ok": e0_hi.mean >= e1_lo.mean - z * sig_a,
            "ok_corrected": e0_hi.mean >= e1_lo.mean - z * sig_a,
        })
        sig_b = math.sqrt(e1_hi.sigma**2 + (2 * e0_lo.sigma) ** 2 + (e1_lo.sigma / 2) ** 2)
        rhs = 2 * e0_lo.mean + e1_lo.mean / 2
        rows.append({
            "t": lo,
            "name": f"Q({hi},1) >= 2 Q({lo},0) + Q({lo},1)/2",
            "lhs": e1_hi.mean,
            "rhs": rhs,
            "slack": z * sig_b,
            "allowance": 1.0,
            "ok": e1_hi.mean >= rhs - z * sig_b,
            "ok_corrected": e1_hi.mean >= rhs - 1.0 - z * sig_b,
        })
    base = exact_base_cases()
    base_ok = base[(0, 0)] >= 1 and base[(1, 1)] >= Fraction(3, 2)
    return RecursionReport(
        tuple(rows),
        base,
        base_ok,
        base_ok and all(r["ok"] for r in rows),
        base_ok and all(r["ok_corrected"] for r in rows),
    )


def spectral_alpha() -> float:
    """Largest root of x^2 - x/2 - 2, the growth rate of the Q recursion;
    equals (1 + sqrt(33))/4."""
    return (1.0 + math.sqrt(33.0)) / 4.0
