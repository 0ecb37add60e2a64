"""Acceptance checks: each criterion is a callable returning a verdict with
measured values, usable from both the test suite and the command line.

Everything quantitative is pinned here: exact-arithmetic comparisons where
the check is an identity, stated tolerances and windows where it is an
estimate. Criterion 11 implements the level-to-level inequalities literally;
see ``sabotage.check_recursions`` for why their factor-2 step is unattainable
at alternating levels and what corrected form holds instead.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import boolfunc as bf
from . import dtree as dt
from . import games as gm
from . import nandtree as nt
from . import sabotage as sb

DEFAULT_SEED = 20240809

__all__ = ["CriterionResult", "ALL_CRITERIA", "run_criterion", "run_all"]


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: str
    seconds: float
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} criterion {self.index:2d} {self.name} ({self.seconds:.1f}s): {self.details}"


# ---------------------------------------------------------------------------
# Criterion 1: DP oracles match brute-force tree enumeration exactly
# ---------------------------------------------------------------------------


def _catalog_tables(m: int):
    """Per depth k: (outputs, pathlens, depths) over all labeled trees."""
    out = {}
    points = [bf.point_from_index(i, m) for i in range(1 << m)]
    for k in range(m + 1):
        catalog = gm.enumerate_trees(m, k, labeled=True)
        outputs = np.empty((len(catalog.trees), 1 << m), dtype=np.int8)
        pathlen = np.empty_like(outputs)
        depths = np.empty(len(catalog.trees), dtype=np.int16)
        for ti, tree in enumerate(catalog.trees):
            depths[ti] = tree.depth
            for xi, x in enumerate(points):
                res = dt.run(tree, x)
                outputs[ti, xi] = res.output
                pathlen[ti, xi] = len(res.queried)
        out[k] = (outputs, pathlen, depths)
    return out


def _check_one_function(f: bf.BooleanFunction, mu, eps_grid, tables, denom: int,
                        weights: np.ndarray) -> str:
    """Empty string when every DP value matches the brute force exactly."""
    m = f.arity
    fbits = np.array(f.bits(), dtype=np.int8)
    full_out, full_len, _ = tables[m]

    d_dp = dt.exact_D(f)
    correct = (full_out == fbits).all(axis=1)
    d_bf = int(tables[m][2][correct].min())
    if d_dp != d_bf:
        return f"D mismatch: dp {d_dp} bf {d_bf}"

    err_curve_bf = []
    for k in range(m + 1):
        outputs, _, _ = tables[k]
        err_int = ((outputs != fbits) * weights).sum(axis=1).min()
        err_curve_bf.append(Fraction(int(err_int), denom))
        err_dp = dt.optimal_dist_error(f, mu, k)
        if err_dp != err_curve_bf[-1]:
            return f"dist-error mismatch at k={k}: dp {err_dp} bf {err_curve_bf[-1]}"

    for eps in eps_grid:
        k_dp = dt.exact_Dmu_eps(f, mu, eps)
        k_bf = next(k for k in range(m + 1) if err_curve_bf[k] <= eps)
        if k_dp != k_bf:
            return f"Dmu_eps mismatch at eps={eps}: dp {k_dp} bf {k_bf}"

    cost_dp = dt.zero_error_expected_cost(f, mu)
    costs = (full_len * weights).sum(axis=1)[correct]
    cost_bf = Fraction(int(costs.min()), denom)
    if cost_dp != cost_bf:
        return f"zero-error cost mismatch: dp {cost_dp} bf {cost_bf}"
    return ""


def criterion_1(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = random.Random(seed)
    eps_grid = (Fraction(0), Fraction(1, 8), Fraction(1, 3))
    problems = []
    checked = 0

    for m, funcs in ((2, range(16)), (3, rng.sample(range(256), 200))):
        tables = _catalog_tables(m)
        for table in funcs:
            f = bf.BooleanFunction(m, table)
            mu = bf.random_dyadic_distribution(m, rng)
            denom = 64**m
            weights = np.array(
                [int(mu.point_prob(bf.point_from_index(i, m)) * denom) for i in range(1 << m)],
                dtype=np.int64,
            )
            msg = _check_one_function(f, mu, eps_grid, tables, denom, weights)
            checked += 1
            if msg:
                problems.append(f"m={m} table={table}: {msg}")

    secs = time.time() - t0
    ok = not problems and secs < 120
    details = f"{checked} functions, exact rational comparison; {len(problems)} mismatches"
    if problems:
        details += "; first: " + problems[0]
    if secs >= 120:
        details += f"; exceeded 2 min budget"
    return CriterionResult(1, "dp-oracle-equivalence", ok, details, secs)


# ---------------------------------------------------------------------------
# Criteria 2 and 3: exact game values
# ---------------------------------------------------------------------------


def criterion_2(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    value = gm.exact_RSE(bf.nand2())
    ok = value == Fraction(3, 2)
    return CriterionResult(
        2, "rse-nand2-exact", ok,
        f"RS_E(NAND_2) = {value} (rational LP over zero-error trees vs 3 pairs)",
        time.time() - t0, {"value": value},
    )


def criterion_3(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rep = sb.block_case_bounds()
    want = {(0, 0): Fraction(0), (0, 1): Fraction(2), (1, 0): Fraction(1), (1, 1): Fraction(1, 2)}
    ok = rep.bounds == want
    return CriterionResult(
        3, "case-table-reproduction", ok,
        f"minima {dict(rep.bounds)} vs expected {want}",
        time.time() - t0, {"bounds": rep.bounds},
    )


# ---------------------------------------------------------------------------
# Criterion 4: Poincare and the influence/average-sensitivity inequality
# ---------------------------------------------------------------------------


def criterion_4(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = random.Random(seed + 4)
    violations = 0
    for _ in range(1000):
        m = rng.randint(1, 10)
        f = bf.random_function(m, rng)
        mu = bf.random_distribution(m, rng)
        rep = bf.check_poincare(f, mu)
        if not rep.holds:
            violations += 1
            continue
        if rep.rhs > bf.avg_sensitivity(f, mu) + 1e-9:
            violations += 1
    ok = violations == 0
    return CriterionResult(
        4, "poincare-and-influence", ok,
        f"1000 random (f, mu) pairs, m <= 10, full-table summation; {violations} violations",
        time.time() - t0,
    )


# ---------------------------------------------------------------------------
# Criterion 5: majority labeling achieves the unlabeled-leaf bias
# ---------------------------------------------------------------------------


def criterion_5(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = random.Random(seed + 5)
    tol = Fraction(1, 10**12)
    failures = 0
    for _ in range(500):
        m = rng.randint(1, 8)
        f = bf.random_function(m, rng)
        mu = bf.random_dyadic_distribution(m, rng)
        r = dt.random_randomized_tree(m, rng, support=3, max_depth=min(m, 4))
        bias = dt.avg_leaf_bias(r, f, mu)
        best = min(dt.tree_error(dt.label_leaves(t, f, mu), f, mu) for _, t in r.entries)
        if best > bias + tol:
            failures += 1
    ok = failures == 0
    return CriterionResult(
        5, "majority-labeling-bias", ok,
        f"500 random (R, f, mu), m <= 8, exact rationals; {failures} failures",
        time.time() - t0,
    )


# ---------------------------------------------------------------------------
# Criteria 6 and 7: miss-profile equivalence and the two-point bound
# ---------------------------------------------------------------------------


def criterion_6(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = random.Random(seed + 6)
    failures = 0
    for _ in range(200):
        m = rng.randint(1, 6)
        f = bf.random_function(m, rng)
        r = dt.random_randomized_tree(m, rng, support=4)
        if gm.pair_miss_profile(r, f) != gm.sens_miss_profile(r, f):
            failures += 1
    ok = failures == 0
    return CriterionResult(
        6, "pair-vs-sensitive-miss", ok,
        f"200 random (R, f), m <= 6, exact equality of profiles; {failures} failures",
        time.time() - t0,
    )


def criterion_7(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = random.Random(seed + 7)
    failures = 0
    for _ in range(200):
        m = rng.randint(1, 6)
        f = bf.random_function(m, rng)
        r = dt.random_randomized_tree(m, rng, support=3)
        if not gm.check_two_point_bound(r, f).ok:
            failures += 1
    ok = failures == 0
    return CriterionResult(
        7, "two-point-distribution-bound", ok,
        f"200 random (R, f), m <= 6, miss/2 <= bias exactly on every (x, i); {failures} failures",
        time.time() - t0,
    )


# ---------------------------------------------------------------------------
# Criterion 8: the amplification construction
# ---------------------------------------------------------------------------


def _g2_pair_cover_mixture() -> dt.RandomizedTree:
    """Uniform mixture of the six 'query one pair of variables' trees."""
    entries = []
    pairs = [(i, j) for i in range(1, 5) for j in range(i + 1, 5)]
    for i, j in pairs:
        sub = dt.Query(j, dt.Leaf(None), dt.Leaf(None))
        entries.append((Fraction(1, 6), dt.DecisionTree(4, dt.Query(i, sub, sub))))
    return dt.RandomizedTree(tuple(entries))


def criterion_8(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    nprng = np.random.default_rng(np.random.SeedSequence(seed + 8))
    problems = []

    # NAND_2: the optimal depth-1 mixture from the sabotage game
    f2 = bf.nand2()
    gv, cat = gm.rs_game_value(f2, 1)
    r2 = gm.mixture_from_columns(cat.trees, gv)
    if not (gv.value <= Fraction(2, 3) and r2.complexity == gm.exact_RS_eps(f2, Fraction(2, 3))):
        problems.append("NAND_2 mixture does not attain the eps=2/3 sabotage game")
    mus2 = [bf.random_distribution(2, nprng) for _ in range(100)]
    rep2 = gm.check_amplified_bias(r2, f2, mus2, eps=Fraction(1, 3))
    if not rep2.ok:
        problems.append(f"NAND_2 amplified bias {rep2.max_bias} > 1/8")

    # depth-2 NAND tree: the pair-cover mixture attains the depth-1-impossible
    # game, so its complexity 2 is optimal at eps = 2/3
    g2 = bf.nand_tree(2)
    r4 = _g2_pair_cover_mixture()
    gv1, _ = gm.rs_game_value(g2, 1)
    miss4 = gm.pair_miss_profile(r4, g2)
    if not (gv1.value > Fraction(2, 3) and miss4 <= Fraction(2, 3) and r4.complexity == 2):
        problems.append(
            f"g_2 mixture not optimal: depth-1 value {gv1.value}, miss {miss4}"
        )
    mus4 = [bf.random_distribution(4, nprng) for _ in range(100)]
    rep4 = gm.check_amplified_bias(r4, g2, mus4, eps=Fraction(1, 3))
    if not rep4.ok:
        problems.append(f"g_2 amplified bias {rep4.max_bias} > 1/8")

    ok = not problems
    details = (
        f"NAND_2: reps {rep2.reps}, max bias {float(rep2.max_bias):.4f}; "
        f"g_2: reps {rep4.reps}, max bias {float(rep4.max_bias):.4f}; threshold 0.125+1e-9"
    )
    if problems:
        details += "; " + "; ".join(problems)
    return CriterionResult(8, "amplified-bias-construction", ok, details, time.time() - t0)


# ---------------------------------------------------------------------------
# Criteria 9 and 10: the two NAND-tree exponents
# ---------------------------------------------------------------------------


def criterion_9(seed: int = DEFAULT_SEED, samples: int = 100_000) -> CriterionResult:
    t0 = time.time()
    search = gm.dprod_search(bf.nand_tree(3), 1 / 3, restarts=4, seed=seed + 9)
    block = [float(p) for p in search.mu.marginals]
    points = []
    for i, d in enumerate(range(4, 15)):
        margs = nt.tile_marginals(block, d)
        stream = int(np.random.SeedSequence(seed + 9, spawn_key=(i,)).generate_state(1)[0])
        est = nt.mc_cost("greedy_zero", d, margs, samples, stream)
        points.append((d, est.mean))
    base, resid = nt.fit_exponent(points)
    secs = time.time() - t0
    ok = base <= 1.64 and secs < 600
    details = (
        f"adversarial mu depth {search.depth} on the 8-leaf tree, tiled; "
        f"fitted base {base:.4f} (residual {resid:.3f}) <= 1.64"
    )
    if secs >= 600:
        details += "; exceeded 10 min budget"
    return CriterionResult(
        9, "nand-upper-exponent", ok, details, secs,
        {"base": base, "points": points, "mu_block": block},
    )


def criterion_10(seed: int = DEFAULT_SEED, samples: int = 100_000,
                 upper_base: float | None = None) -> CriterionResult:
    t0 = time.time()
    alpha = sb.spectral_alpha()
    points = []
    for i, d in enumerate(range(4, 13)):
        stream = int(np.random.SeedSequence(seed + 10, spawn_key=(i,)).generate_state(1)[0])
        est = sb.mc_sep_cost("saks_wigderson", d, samples, stream)
        points.append((d, est.mean))
    base, resid = nt.fit_exponent(points)
    ok = alpha - 0.05 <= base <= alpha + 0.05
    details = f"fitted separation base {base:.4f} in [{alpha - 0.05:.4f}, {alpha + 0.05:.4f}]"
    if upper_base is not None:
        gap = base - upper_base
        ok = ok and gap >= 0.03
        details += f"; gap over upper-bound base {upper_base:.4f} is {gap:.4f} >= 0.03"
    return CriterionResult(
        10, "sabotage-lower-exponent", ok, details, time.time() - t0,
        {"base": base, "points": points},
    )


# ---------------------------------------------------------------------------
# Criterion 11: the Q recursion, literally as stated
# ---------------------------------------------------------------------------


def criterion_11(seed: int = DEFAULT_SEED, samples: int = 100_000, d: int = 8) -> CriterionResult:
    t0 = time.time()
    estimates = {
        t: sb.estimate_sep_counts("saks_wigderson", d, t, samples, seed + 11 + t) for t in range(d + 1)
    }
    rep = sb.check_recursions(estimates)
    bad = [r for r in rep.rows if not r["ok"]]
    details = (
        f"base cases {dict((k, str(v)) for k, v in rep.base_cases.items())} ok={rep.base_ok}; "
        f"{len(rep.rows) - len(bad)}/{len(rep.rows)} literal rows hold"
    )
    if bad:
        worst = max(bad, key=lambda r: r["rhs"] - r["lhs"])
        details += (
            f"; literal factor-2 rows fail at alternating levels "
            f"(worst: {worst['name']}, lhs {worst['lhs']:.3f} vs rhs {worst['rhs']:.3f}) "
            f"- unattainable as stated, see decisions ledger; corrected form "
            f"(differing-block allowance 1) ok={rep.corrected_ok}"
        )
    return CriterionResult(
        11, "q-recursion-checks", rep.ok, details, time.time() - t0,
        {"rows": rep.rows, "base_cases": rep.base_cases, "corrected_ok": rep.corrected_ok},
    )


# ---------------------------------------------------------------------------
# Criteria 12 and 13
# ---------------------------------------------------------------------------


def criterion_12(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    got = sb.spectral_alpha()
    want = (1 + math.sqrt(33)) / 4
    ok = abs(got - want) <= 1e-12
    return CriterionResult(
        12, "spectral-alpha", ok, f"{got!r} vs (1+sqrt(33))/4 = {want!r}", time.time() - t0,
    )


def criterion_13(seed: int = DEFAULT_SEED) -> CriterionResult:
    t0 = time.time()
    rng = np.random.default_rng(seed + 13)
    problems = []

    # (a) corrupting a hard-pair block must break the embedding audit
    pair = sb.sample_hard_pair(3, rng, keep_meta=True)
    if not sb.check_embedding(pair):
        problems.append("clean pair failed the audit")
    lv = pair.levels[-1]
    # flip the padded slot (1 - b_0) of block 0
    flip_slot = 1 - lv.b[0]
    u0 = list(lv.u[0])
    u0[flip_slot] ^= 1
    bad_u = (tuple(u0),) + lv.u[1:]
    corrupted = sb.HardPair(
        pair.depth, pair.x, pair.y,
        pair.levels[:-1] + (sb.LevelLift(lv.b, lv.pre_x, lv.pre_y, bad_u, lv.v),),
    )
    if sb.check_embedding(corrupted):
        problems.append("corrupted block passed the embedding audit")

    # (b) mislabeling a leaf must break the majority-labeling bound
    f = bf.and_f(2)
    mu = bf.ProductDistribution((Fraction(1, 2), Fraction(1, 2)))
    tree = dt.DecisionTree(2, dt.Query(1, dt.Leaf(None), dt.Leaf(None)))
    labeled = dt.label_leaves(tree, f, mu)
    bias = dt.leaf_profile(tree, f, mu).total_bias()
    if dt.tree_error(labeled, f, mu) > bias:
        problems.append("majority labeling exceeded the leaf bias")
    corrupted_tree = dt.DecisionTree(
        2, dt.Query(1, dt.Leaf(1 - labeled.root.child0.label), labeled.root.child1)
    )
    if not dt.tree_error(corrupted_tree, f, mu) > bias:
        problems.append("mislabeled leaf not detected by the bias bound")

    # (c) swapping the Q columns must break the recursion report
    estimates = {
        t: sb.estimate_sep_counts("saks_wigderson", 6, t, 30_000, seed + 213 + t) for t in range(7)
    }
    honest = sb.check_recursions(estimates)
    swapped = {t: (e1, e0) for t, (e0, e1) in estimates.items()}
    broken = sb.check_recursions(swapped)
    if not honest.corrected_ok:
        problems.append("honest chain data failed the corrected recursion")
    if broken.corrected_ok or broken.ok:
        problems.append("swapped Q columns not detected")

    ok = not problems
    details = "corrupted block, mislabeled leaf, swapped Q columns all detected" if ok \
        else "; ".join(problems)
    return CriterionResult(13, "negative-controls", ok, details, time.time() - t0)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


ALL_CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
}


def run_criterion(index: int, seed: int = DEFAULT_SEED, **kwargs) -> CriterionResult:
    return ALL_CRITERIA[index](seed=seed, **kwargs)


def run_all(seed: int = DEFAULT_SEED, indices=None, echo=print) -> list:
    """Run the selected criteria, chaining the exponent gap from 9 into 10."""
    indices = sorted(indices or ALL_CRITERIA)
    results = []
    upper_base = None
    for idx in indices:
        if idx == 10 and upper_base is not None:
            res = criterion_10(seed=seed, upper_base=upper_base)
        else:
            res = run_criterion(idx, seed=seed)
        if idx == 9 and res.values.get("base"):
            upper_base = res.values["base"]
        results.append(res)
        if echo:
            echo(res.line())
    return results
