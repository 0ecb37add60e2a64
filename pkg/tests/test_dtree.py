import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from qclab.boolfunc import (
    BooleanFunction,
    ProductDistribution,
    and_f,
    constant,
    nand2,
    nand_tree,
    random_dyadic_distribution,
    random_function,
    uniform_distribution,
    xor,
)
from qclab.dtree import (
    DecisionTree,
    Leaf,
    Query,
    RandomizedTree,
    avg_leaf_bias,
    dist_error_curve_fast,
    exact_D,
    exact_Dmu_eps,
    label_leaves,
    leaf_profile,
    optimal_dist_error,
    random_randomized_tree,
    random_tree,
    run,
    singleton,
    tree_error,
    tree_from_json,
    tree_leaves,
    tree_to_json,
    zero_error_expected_cost,
)


def complete_tree(m, f=None):
    """The full-depth tree querying 1..m in order, labeled by f if given."""

    def grow(fixed, var):
        if var > m:
            if f is None:
                return Leaf(None)
            idx = 0
            for i, b in fixed:
                idx |= b << (i - 1)
            return Leaf(f.value_at(idx))
        return Query(var, grow(fixed + [(var, 0)], var + 1), grow(fixed + [(var, 1)], var + 1))

    return DecisionTree(m, grow([], 1))


# -- structure ----------------------------------------------------------------


def test_repeated_variable_rejected():
    with pytest.raises(ValueError):
        DecisionTree(2, Query(1, Leaf(0), Query(1, Leaf(0), Leaf(1))))
    with pytest.raises(ValueError):
        DecisionTree(1, Query(2, Leaf(0), Leaf(1)))


def test_run_examples():
    t = DecisionTree(2, Query(1, Leaf(0), Leaf(1)))
    res = run(t, (1, 0))
    assert res.queried == (1,) and res.output == 1 and res.leaf_id == "1"
    single = DecisionTree(3, Leaf(0))
    assert run(single, (1, 1, 1)).queried == ()

    f = xor(2)
    t = complete_tree(2, f)
    for idx in range(4):
        x = ((idx >> 0) & 1, (idx >> 1) & 1)
        assert run(t, x).output == f.value_at(idx)


def test_randomized_tree_validation():
    t = DecisionTree(1, Leaf(0))
    with pytest.raises(ValueError):
        RandomizedTree(())
    with pytest.raises(ValueError):
        RandomizedTree(((0.5, t), (0.4, t)))
    with pytest.raises(ValueError):
        RandomizedTree(((1.0, t), (0.0, t)))
    with pytest.raises(ValueError):
        RandomizedTree(((0.5, t), (0.5, DecisionTree(2, Leaf(0)))))
    r = RandomizedTree(((Fraction(1, 3), t), (Fraction(2, 3), t)))
    assert r.arity == 1 and r.complexity == 0


# -- exact_D -------------------------------------------------------------------


def test_exact_D_examples():
    for m in (1, 2, 3, 4):
        assert exact_D(xor(m)) == m
    assert exact_D(constant(3, 0)) == 0
    assert exact_D(nand_tree(2)) == 4  # depth-2 NAND tree needs every leaf


def test_exact_D_matches_brute_force_m2():
    from qclab.games import enumerate_trees

    catalog = enumerate_trees(2, None, labeled=True)
    for table in range(16):
        f = BooleanFunction(2, table)
        best = min(
            t.depth
            for t in catalog.trees
            if all(run(t, ((i >> 0) & 1, (i >> 1) & 1)).output == f.value_at(i) for i in range(4))
        )
        assert exact_D(f) == best


def test_exact_D_cap():
    with pytest.raises(ValueError):
        exact_D(constant(15, 0) if False else BooleanFunction(15, 0))


# -- distributional error DP ----------------------------------------------------


def test_optimal_dist_error_examples():
    u = uniform_distribution(2)
    assert optimal_dist_error(xor(2), u, 1) == pytest.approx(0.5)
    assert optimal_dist_error(and_f(2), u, 1) == pytest.approx(0.25)
    f = nand2()
    assert optimal_dist_error(f, u, exact_D(f)) == 0


def test_exact_Dmu_eps_examples():
    u = uniform_distribution(2)
    assert exact_Dmu_eps(xor(2), u, 1 / 3) == 2
    assert exact_Dmu_eps(nand2(), u, 0.30) == 0  # majority answer errs 1/4
    rng = random.Random(9)
    for _ in range(25):
        m = rng.randint(1, 5)
        f = random_function(m, rng)
        mu = random_dyadic_distribution(m, rng)
        assert exact_Dmu_eps(f, mu, Fraction(0)) <= exact_D(f)


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_dist_error_monotone_in_depth(data):
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    m = rng.randint(1, 5)
    f = random_function(m, rng)
    mu = ProductDistribution(tuple(rng.uniform(0.05, 0.95) for _ in range(m)))
    prev = None
    for k in range(m + 1):
        err = optimal_dist_error(f, mu, k)
        assert 0 <= err <= 0.5 + 1e-12
        if prev is not None:
            assert err <= prev + 1e-12
        prev = err
    assert prev == pytest.approx(0.0, abs=1e-12)


def test_lattice_engine_matches_recursive_dp():
    rng = random.Random(17)
    for _ in range(20):
        m = rng.randint(1, 6)
        f = random_function(m, rng)
        ps = [rng.uniform(0.05, 0.95) for _ in range(m)]
        curve = dist_error_curve_fast(f, ps)
        mu = ProductDistribution(tuple(ps))
        for k in range(m + 1):
            assert curve[k] == pytest.approx(optimal_dist_error(f, mu, k), abs=1e-11)


# -- zero-error expected cost ----------------------------------------------------


def test_zero_error_cost_examples():
    u = uniform_distribution(2)
    assert zero_error_expected_cost(nand2(), u) == pytest.approx(1.5)
    assert zero_error_expected_cost(constant(3, 1), uniform_distribution(3)) == 0
    assert zero_error_expected_cost(xor(2), ProductDistribution((0.3, 0.7))) == pytest.approx(2.0)


def test_markov_direction():
    # a 1/3-error tree exists within triple the zero-error expected cost
    rng = random.Random(23)
    for _ in range(40):
        m = rng.randint(1, 6)
        f = random_function(m, rng)
        mu = ProductDistribution(tuple(rng.uniform(0.1, 0.9) for _ in range(m)))
        cost = zero_error_expected_cost(f, mu)
        assert exact_Dmu_eps(f, mu, 1 / 3) <= math.ceil(3 * cost)


# -- leaf statistics -------------------------------------------------------------


def test_leaf_profile_examples():
    u = uniform_distribution(2)
    f = nand2()
    single = DecisionTree(2, Leaf(None))
    prof = leaf_profile(single, f, u)
    assert prof.leaves[0].reach == pytest.approx(1.0)
    assert prof.leaves[0].bias == pytest.approx(0.25)

    full = complete_tree(2)
    prof = leaf_profile(full, f, u)
    assert all(st.bias == 0 for st in prof.leaves)
    assert sum(st.reach for st in prof.leaves) == pytest.approx(1.0)

    split = DecisionTree(2, Query(1, Leaf(None), Leaf(None)))
    prof = leaf_profile(split, f, u)
    assert prof.leaves[0].bias == 0  # f|x1=0 is constant 1
    assert prof.leaves[1].bias == pytest.approx(0.5)


def test_zero_reach_leaf_bias_is_zero():
    mu = ProductDistribution((1.0, 0.5))
    f = xor(2)
    split = DecisionTree(2, Query(1, Leaf(None), Leaf(None)))
    prof = leaf_profile(split, f, mu)
    assert prof.leaves[0].reach == 0 and prof.leaves[0].bias == 0


def test_label_leaves_and_error():
    u = uniform_distribution(2)
    f = nand2()
    full = label_leaves(complete_tree(2), f, u)
    assert tree_error(full, f, u) == 0
    for _, cube, label, _ in tree_leaves(full):
        idx = 0
        for i, b in cube.fixed:
            idx |= b << (i - 1)
        assert label == f.value_at(idx)

    empty = label_leaves(DecisionTree(2, Leaf(None)), f, u)
    assert empty.root.label == 1  # Pr[f=1] = 3/4
    assert tree_error(empty, f, u) == pytest.approx(0.25)


def test_tree_error_requires_labels():
    u = uniform_distribution(2)
    with pytest.raises(ValueError):
        tree_error(DecisionTree(2, Leaf(None)), nand2(), u)


def test_majority_label_error_equals_total_bias():
    # with every leaf strictly majority-labeled, the error is the avg bias
    rng = random.Random(31)
    for _ in range(30):
        m = rng.randint(1, 6)
        f = random_function(m, rng)
        mu = random_dyadic_distribution(m, rng)
        t = random_tree(m, rng, max_depth=3)
        labeled = label_leaves(t, f, mu)
        bias = leaf_profile(t, f, mu).total_bias()
        err = tree_error(labeled, f, mu)
        assert err <= bias  # equality unless some leaf is exactly balanced
        assert bias <= err + Fraction(1, 2)


def test_avg_leaf_bias_linearity():
    u = uniform_distribution(2)
    f = nand2()
    t1 = complete_tree(2)
    t2 = DecisionTree(2, Leaf(None))
    mix = RandomizedTree(((0.5, t1), (0.5, t2)))
    b1 = avg_leaf_bias(singleton(t1), f, u)
    b2 = avg_leaf_bias(singleton(t2), f, u)
    assert avg_leaf_bias(mix, f, u) == pytest.approx((b1 + b2) / 2)
    assert b1 == 0 and b2 == pytest.approx(0.25)
    balanced = xor(2)
    assert avg_leaf_bias(singleton(t2), balanced, u) == pytest.approx(0.5)


# -- serialization ----------------------------------------------------------------


def test_tree_json_roundtrip():
    rng = random.Random(41)
    for _ in range(20):
        t = random_tree(rng.randint(1, 5), rng, labeled=bool(rng.randint(0, 1)))
        assert tree_from_json(tree_to_json(t)) == t
    text = tree_to_json(DecisionTree(2, Query(1, Leaf(0), Leaf(None))))
    assert text.index("child0") < text.index("child1")


def test_random_randomized_tree_weights_exact():
    rng = random.Random(43)
    for _ in range(20):
        r = random_randomized_tree(4, rng)
        assert sum(w for w, _ in r.entries) == 1
        assert all(isinstance(w, Fraction) for w, _ in r.entries)
