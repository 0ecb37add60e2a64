import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from qclab.boolfunc import (
    BooleanFunction,
    ProductDistribution,
    dictator,
    nand2,
    nand_tree,
    random_distribution,
    random_function,
    uniform_distribution,
    xor,
)
from qclab.dtree import (
    DecisionTree,
    Leaf,
    Query,
    RandomizedTree,
    exact_Dmu_eps,
    run,
    singleton,
)
from qclab.games import (
    amplify,
    catalog_size_formula,
    compose_trees,
    dprod_search,
    dump_game,
    enumerate_trees,
    exact_R_eps,
    exact_RS_eps,
    exact_RSE,
    mixture_from_columns,
    miss_probability,
    pair_miss_profile,
    rs_game_value,
    sens_miss_profile,
    solve_zero_sum,
    check_amplified_bias,
    check_two_point_bound,
    zero_error_trees,
)


# -- catalogs -------------------------------------------------------------------


def test_catalog_counts_match_recursion():
    for m, labeled_count in ((1, 6), (2, 74), (3, 16430)):
        cat = enumerate_trees(m, None, labeled=True)
        assert len(cat.trees) == labeled_count
        assert catalog_size_formula(m, m, True) == labeled_count
        assert len(set(cat.trees)) == labeled_count  # duplicate-free
    for m, unlabeled_count in ((1, 2), (2, 9), (3, 244)):
        cat = enumerate_trees(m, None, labeled=False)
        assert len(cat.trees) == unlabeled_count == catalog_size_formula(m, m, False)


def test_catalog_depth_caps():
    assert len(enumerate_trees(3, 2, True).trees) == catalog_size_formula(3, 2, True) == 302
    assert len(enumerate_trees(4, 2, False).trees) == catalog_size_formula(4, 2, False)
    with pytest.raises(ValueError):
        enumerate_trees(4, 3, True)
    with pytest.raises(ValueError):
        enumerate_trees(5, 1, True)


# -- the LP solver ----------------------------------------------------------------


def test_solve_zero_sum_basics():
    gv = solve_zero_sum([[1, 0], [0, 1]])
    assert gv.value == Fraction(1, 2)
    assert gv.row_strategy == (Fraction(1, 2), Fraction(1, 2))
    assert solve_zero_sum([[7, 7, 7]]).value == 7
    gv = solve_zero_sum([[0, 1], [1, 0]], sense="row_min")
    assert gv.value == Fraction(1, 2)
    with pytest.raises(ValueError):
        solve_zero_sum([])
    with pytest.raises(ValueError):
        solve_zero_sum([[1]], sense="diagonal")


def _scipy_game_value(matrix):
    from scipy.optimize import linprog

    m = np.asarray(matrix, dtype=float)
    rows, cols = m.shape
    # row player maximizes v subject to p^T M >= v per column
    c = np.zeros(rows + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-m.T, np.ones((cols, 1))])
    b_ub = np.zeros(cols)
    a_eq = np.ones((1, rows + 1))
    a_eq[0, -1] = 0.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * rows + [(None, None)], method="highs")
    assert res.success
    return res.x[-1]


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_lp_matches_scipy(data):
    rows = data.draw(st.integers(1, 5))
    cols = data.draw(st.integers(1, 5))
    matrix = [
        [data.draw(st.integers(-5, 5)) for _ in range(cols)] for _ in range(rows)
    ]
    gv = solve_zero_sum(matrix)
    assert float(gv.value) == pytest.approx(_scipy_game_value(matrix), abs=1e-7)
    # strategies are distributions and certify the value against pure replies
    assert sum(gv.row_strategy) == 1 and min(gv.row_strategy) >= 0
    assert sum(gv.col_strategy) == 1 and min(gv.col_strategy) >= 0
    for j in range(cols):
        reply = sum(gv.row_strategy[i] * matrix[i][j] for i in range(rows))
        assert reply >= gv.value - Fraction(1, 10**9)


def test_lp_float_path_on_large_matrix():
    rng = np.random.default_rng(2)
    matrix = rng.integers(0, 4, size=(4, 3000)).tolist()
    gv = solve_zero_sum(matrix)  # above the rational entry limit: float path
    assert isinstance(gv.value, float)
    assert float(gv.value) == pytest.approx(_scipy_game_value(matrix), abs=1e-6)


# -- complexity games ---------------------------------------------------------------


def test_exact_R_eps_examples():
    assert exact_R_eps(dictator(1), 1 / 3) == 1
    assert exact_R_eps(xor(2), 1 / 3) == 2
    assert exact_R_eps(xor(2), 0.5) == 0
    assert exact_R_eps(nand2(), 1 / 3) == 1  # mix leaf(1) with both query trees
    with pytest.raises(ValueError):
        exact_R_eps(xor(4), 1 / 3)


def test_minimax_sanity_distributional_lower_bounds():
    rng = random.Random(71)
    for _ in range(15):
        m = rng.randint(1, 3)
        f = random_function(m, rng)
        r = exact_R_eps(f, 1 / 3)
        for _ in range(5):
            mu = ProductDistribution(tuple(rng.uniform(0.05, 0.95) for _ in range(m)))
            assert exact_Dmu_eps(f, mu, 1 / 3) <= r


def test_exact_RS_eps_examples():
    assert exact_RS_eps(dictator(1), 0.99) == 1
    assert exact_RS_eps(nand2(), 1 / 3) == 2
    gv, _ = rs_game_value(nand2(), 1)
    assert gv.value == Fraction(1, 2)
    assert exact_RS_eps(BooleanFunction(2, 0), 1 / 3) == 0  # constant: no pairs


def test_rs_star_adversary_lower_bound():
    # depth budgets below two thirds of the sensitivity leave value > 1/3
    for m in (1, 2, 3):
        f = xor(m)
        for k in range(math.ceil(2 * m / 3)):
            gv, _ = rs_game_value(f, k)
            assert gv.value > Fraction(1, 3)


def test_exact_RSE_values():
    assert exact_RSE(nand2()) == Fraction(3, 2)
    assert exact_RSE(xor(2)) == Fraction(3, 2)  # both query orders, hand check
    assert exact_RSE(dictator(1)) == 1


def test_zero_error_tree_filter():
    trees = zero_error_trees(nand2())
    assert len(trees) == 4
    f = xor(2)
    assert all(t.depth == 2 for t in zero_error_trees(f))


# -- miss profiles -------------------------------------------------------------------


def complete_tree(m):
    def grow(var):
        if var > m:
            return Leaf(None)
        sub = grow(var + 1)
        return Query(var, sub, sub)

    return DecisionTree(m, grow(1))


def test_miss_profile_examples():
    f = nand2()
    assert sens_miss_profile(singleton(complete_tree(2)), f) == 0
    empty = singleton(DecisionTree(2, Leaf(None)))
    assert sens_miss_profile(empty, f) == 1
    assert pair_miss_profile(empty, f) == 1
    mix = RandomizedTree(((Fraction(1, 4), DecisionTree(2, Leaf(None))),
                          (Fraction(3, 4), complete_tree(2))))
    assert sens_miss_profile(mix, f) == Fraction(1, 4)


def test_star_pairs_reduce_to_miss_probability():
    rng = random.Random(3)
    for _ in range(20):
        m = rng.randint(1, 5)
        f = random_function(m, rng)
        from qclab.dtree import random_randomized_tree

        r = random_randomized_tree(m, rng)
        for idx in range(f.size):
            x = tuple((idx >> j) & 1 for j in range(m))
            for i in range(1, m + 1):
                if f.value_at(idx) == f.value_at(idx ^ (1 << (i - 1))):
                    continue
                pair_x = x
                miss = miss_probability(r, pair_x, i)
                # the pair (x, x^{+i}) is missed exactly when x_i is unqueried
                queried = [
                    (w, i in run(t, pair_x).queried) for w, t in r.entries
                ]
                assert miss == sum(w for w, hit in queried if not hit)


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_miss_profiles_agree(seed):
    rng = random.Random(seed)
    m = rng.randint(1, 6)
    f = random_function(m, rng)
    from qclab.dtree import random_randomized_tree

    r = random_randomized_tree(m, rng, support=4)
    assert pair_miss_profile(r, f) == sens_miss_profile(r, f)


# -- amplification ---------------------------------------------------------------------


def q_tree(m, var):
    return DecisionTree(m, Query(var, Leaf(None), Leaf(None)))


def test_amplify_identity_and_products():
    r = RandomizedTree(((Fraction(1, 2), q_tree(2, 1)), (Fraction(1, 2), q_tree(2, 2))))
    one = amplify(r, 1)
    assert set(one.entries) == set(r.entries)
    f = nand2()
    base_miss = sens_miss_profile(r, f)
    for reps in (2, 3, 4):
        amped = amplify(r, reps)
        assert sens_miss_profile(amped, f) == base_miss**reps
        assert sum(w for w, _ in amped.entries) == 1
    with pytest.raises(ValueError):
        amplify(r, 40)  # 2^40 tuples exceeds the support limit
    with pytest.raises(ValueError):
        amplify(r, 0)


def test_amplify_epsilon_repetition_bound():
    # (1 - eps)^ceil((2/eps) ln s) <= 1/s^2 at the construction's repetitions
    for eps, s in ((1 / 3, 2), (0.2, 3), (0.5, 4)):
        reps = math.ceil((2 / eps) * math.log(s))
        assert (1 - eps) ** reps <= 1 / s**2 + 1e-12


def test_compose_skips_repeat_queries():
    t1 = q_tree(3, 1)
    t2 = DecisionTree(3, Query(1, Query(2, Leaf(None), Leaf(None)), Leaf(None)))
    merged = compose_trees(t1, t2)
    for idx in range(8):
        x = tuple((idx >> j) & 1 for j in range(3))
        want = set(run(t1, x).queried) | set(run(t2, x).queried)
        assert set(run(merged, x).queried) == want


def test_check_amplified_bias_dictator_and_nand():
    f = dictator(1)
    r = singleton(DecisionTree(1, Query(1, Leaf(None), Leaf(None))))
    rng = np.random.default_rng(5)
    mus = [random_distribution(1, rng) for _ in range(10)]
    rep = check_amplified_bias(r, f, mus, eps=1.0)
    assert rep.ok and rep.max_bias == 0

    f = nand2()
    gv, cat = rs_game_value(f, 1)
    r = mixture_from_columns(cat.trees, gv)
    mus = [random_distribution(2, rng) for _ in range(25)]
    rep = check_amplified_bias(r, f, mus, eps=Fraction(1, 3))
    assert rep.ok
    assert rep.miss_after <= rep.miss_before ** rep.reps + Fraction(1, 10**9)

    with pytest.raises(ValueError):
        bad = singleton(DecisionTree(2, Leaf(None)))  # misses everything
        check_amplified_bias(bad, f, mus, eps=Fraction(1, 2))


def test_check_two_point_bound_cases():
    f = nand2()
    assert check_two_point_bound(singleton(complete_tree(2)), f).ok
    rep = check_two_point_bound(singleton(DecisionTree(2, Leaf(None))), f)
    assert rep.ok and rep.max_violation == 0  # equality at the empty tree


# -- the adversarial-distribution search ------------------------------------------------


def test_dprod_search_parity_and_dictator():
    res = dprod_search(xor(3), 1 / 3, restarts=3, seed=1)
    assert res.depth == 3
    assert dprod_search(dictator(2), 1 / 3, restarts=2, seed=1).depth == 1


def test_dprod_search_nand_tree_sandwich():
    from qclab.dtree import exact_D

    g2 = nand_tree(2)
    res = dprod_search(g2, 1 / 3, restarts=4, seed=3)
    uniform_value = exact_Dmu_eps(g2, uniform_distribution(4), 1 / 3)
    assert uniform_value <= res.depth <= exact_D(g2)


def test_dump_game_renders():
    text = dump_game([[1, 2], [3, 4]], ["a", "b"], ["c", "d"])
    assert '"payoff"' in text and '"rows"' in text
