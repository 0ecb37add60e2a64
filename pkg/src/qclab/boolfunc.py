"""Truth-table Boolean functions with restriction, sensitivity, influence and
product-distribution primitives.

Variables are 1-indexed. A point ``x = (x_1, ..., x_m)`` is a tuple of bits;
its truth-table index is ``sum(x_j << (j-1))``, so ``x_1`` is the least
significant bit. Probability arithmetic is type-preserving: marginals may be
floats (default, compared with ``TOL``) or ``fractions.Fraction`` for exact
work.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

MAX_ARITY = 24
TOL = 1e-9

Point = tuple

__all__ = [
    "MAX_ARITY",
    "TOL",
    "BooleanFunction",
    "ProductDistribution",
    "Subcube",
    "Point",
    "point_from_index",
    "index_of_point",
    "evaluate",
    "flip",
    "restrict",
    "sensitivity_at",
    "sensitivity",
    "influence_i",
    "influence",
    "variance",
    "avg_sensitivity",
    "prob_one",
    "subcube_prob",
    "condition",
    "check_poincare",
    "PoincareReport",
    "constant",
    "dictator",
    "xor",
    "and_f",
    "or_f",
    "nand2",
    "nand_tree",
    "builtin_function",
    "random_function",
    "uniform_distribution",
    "constant_distribution",
    "random_distribution",
    "parse_truth_table",
    "format_truth_table",
    "load_function",
    "save_function",
    "load_distribution",
    "save_distribution",
]


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BooleanFunction:
    """A total function {0,1}^m -> {0,1} stored as a 2^m-bit truth table.

    Bit ``i`` of ``table`` is the value at the point encoded by ``i``.
    """

    arity: int
    table: int

    def __post_init__(self):
        if not 1 <= self.arity <= MAX_ARITY:
            raise ValueError(f"arity must be in [1, {MAX_ARITY}], got {self.arity}")
        if not 0 <= self.table < (1 << (1 << self.arity)):
            raise ValueError("truth table does not fit 2^arity bits")

    @property
    def size(self) -> int:
        return 1 << self.arity

    def value_at(self, index: int) -> int:
        return (self.table >> index) & 1

    def is_constant(self) -> bool:
        return self.table == 0 or self.table == (1 << self.size) - 1

    def bits(self) -> tuple:
        return tuple(self.value_at(i) for i in range(self.size))

    def table_array(self) -> np.ndarray:
        """Truth table as a uint8 vector indexed like ``value_at``."""
        nbytes = (self.size + 7) // 8
        raw = np.frombuffer(self.table.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.size]

    def __str__(self):
        return f"BooleanFunction(m={self.arity})"


@dataclass(frozen=True)
class ProductDistribution:
    """Independent per-variable marginals: x_i = 1 with probability p_i."""

    marginals: tuple

    def __post_init__(self):
        for p in self.marginals:
            if not 0 <= p <= 1:
                raise ValueError(f"marginal {p!r} outside [0, 1]")
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def arity(self) -> int:
        return len(self.marginals)

    def point_prob(self, x: Point):
        if len(x) != self.arity:
            raise ValueError("point length does not match distribution arity")
        prob = 1
        for b, p in zip(x, self.marginals):
            prob = prob * (p if b else (1 - p))
        return prob

    def weight_array(self) -> np.ndarray:
        """Vector of point masses indexed like the truth table."""
        w = np.array([1.0])
        for p in self.marginals:
            w = np.kron(np.array([1.0 - float(p), float(p)]), w)
        return w

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        p = np.array([float(q) for q in self.marginals])
        return (rng.random((n, self.arity)) < p).astype(np.uint8)


@dataclass(frozen=True)
class Subcube:
    """A subcube given by fixed variable assignments ``{i: b}`` (1-indexed)."""

    fixed: tuple

    def __post_init__(self):
        pairs = tuple(sorted(dict(self.fixed).items()))
        if len(pairs) != len(tuple(self.fixed)):
            raise ValueError("duplicate fixed variable")
        for i, b in pairs:
            if i < 1:
                raise ValueError(f"variable index {i} must be >= 1")
            if b not in (0, 1):
                raise ValueError(f"fixed bit must be 0 or 1, got {b!r}")
        object.__setattr__(self, "fixed", pairs)

    @classmethod
    def of(cls, assignment: Mapping[int, int] | Iterable) -> "Subcube":
        items = assignment.items() if isinstance(assignment, Mapping) else assignment
        return cls(tuple(items))

    @property
    def codim(self) -> int:
        return len(self.fixed)

    def fixed_map(self) -> dict:
        return dict(self.fixed)

    def fixed_vars(self) -> tuple:
        return tuple(i for i, _ in self.fixed)

    def contains(self, x: Point) -> bool:
        return all(x[i - 1] == b for i, b in self.fixed)

    def merge(self, other: "Subcube") -> "Subcube":
        """Intersection of two subcubes; conflicting assignments are an error."""
        combined = self.fixed_map()
        for i, b in other.fixed:
            if combined.get(i, b) != b:
                raise ValueError(f"conflicting assignment for variable {i}")
            combined[i] = b
        return Subcube.of(combined)

    def free_vars(self, arity: int) -> tuple:
        fixed = set(self.fixed_vars())
        return tuple(i for i in range(1, arity + 1) if i not in fixed)


EMPTY_SUBCUBE = Subcube(())


# ---------------------------------------------------------------------------
# Point helpers
# ---------------------------------------------------------------------------


def point_from_index(index: int, m: int) -> Point:
    return tuple((index >> j) & 1 for j in range(m))


def index_of_point(x: Point) -> int:
    idx = 0
    for j, b in enumerate(x):
        if b not in (0, 1):
            raise ValueError(f"point coordinate must be a bit, got {b!r}")
        idx |= b << j
    return idx


def flip(x: Point, indices: Iterable[int]) -> Point:
    """x^{+I}: flip the coordinates listed in ``indices`` (1-indexed)."""
    out = list(x)
    for i in indices:
        if not 1 <= i <= len(x):
            raise ValueError(f"flip index {i} out of range for arity {len(x)}")
        out[i - 1] ^= 1
    return tuple(out)


def evaluate(f: BooleanFunction, x: Point) -> int:
    if len(x) != f.arity:
        raise ValueError(f"arity mismatch: function has {f.arity}, point has {len(x)}")
    return f.value_at(index_of_point(x))


# ---------------------------------------------------------------------------
# Restriction
# ---------------------------------------------------------------------------


def restrict(f: BooleanFunction, c: Subcube) -> BooleanFunction:
    """The function on the free variables of ``c`` agreeing with f on c.

    Free variables keep their relative order. Restricting to the empty
    subcube returns a function equal to f.
    """
    for i, _ in c.fixed:
        if i > f.arity:
            raise ValueError(f"fixed variable {i} out of range for arity {f.arity}")
    if c.codim == 0:
        return f
    if c.codim >= f.arity:
        raise ValueError("restriction must leave at least one free variable")
    free = c.free_vars(f.arity)
    base = 0
    for i, b in c.fixed:
        base |= b << (i - 1)
    table = 0
    for new_idx in range(1 << len(free)):
        full = base
        for j, var in enumerate(free):
            full |= ((new_idx >> j) & 1) << (var - 1)
        table |= f.value_at(full) << new_idx
    return BooleanFunction(len(free), table)


def restriction_value(f: BooleanFunction, c: Subcube):
    """Constant value of f on subcube c, or None if not constant there."""
    free = c.free_vars(f.arity)
    base = 0
    for i, b in c.fixed:
        base |= b << (i - 1)
    first = f.value_at(base)
    for new_idx in range(1, 1 << len(free)):
        full = base
        for j, var in enumerate(free):
            full |= ((new_idx >> j) & 1) << (var - 1)
        if f.value_at(full) != first:
            return None
    return first


# ---------------------------------------------------------------------------
# Sensitivity and influence
# ---------------------------------------------------------------------------


def sensitivity_at(f: BooleanFunction, x: Point) -> int:
    idx = index_of_point(x)
    if len(x) != f.arity:
        raise ValueError("arity mismatch")
    v = f.value_at(idx)
    return sum(1 for j in range(f.arity) if f.value_at(idx ^ (1 << j)) != v)

def sensitivity(f: BooleanFunction) -> int:
    tbl = f.table_array()
    idx = np.arange(f.size)
    sens = np.zeros(f.size, dtype=np.int64)
    for j in range(f.arity):
        sens += tbl != tbl[idx ^ (1 << j)]
    return int(sens.max())


def influence_i(f: BooleanFunction, mu: ProductDistribution, i: int):
    """4 p_i (1-p_i) Pr_{x~mu}[f(x) != f(x^{+i})]."""
    _check_pair(f, mu)
    if not 1 <= i <= f.arity:
        raise ValueError(f"variable index {i} out of range")
    p = mu.marginals[i - 1]
    factor = 4 * p * (1 - p)
    if factor == 0:
        return factor
    disagree = 0
    bit = 1 << (i - 1)
    for idx in range(f.size):
        if f.value_at(idx) != f.value_at(idx ^ bit):
            disagree = disagree + mu.point_prob(point_from_index(idx, f.arity))
    return factor * disagree


def influence(f: BooleanFunction, mu: ProductDistribution):
    _check_pair(f, mu)
    if isinstance(mu.marginals[0], Fraction) or f.arity <= 6:
        total = 0
        for i in range(1, f.arity + 1):
            total = total + influence_i(f, mu, i)
        return total
    # float fast path: one weight vector, all variables at once
    tbl = f.table_array()
    w = mu.weight_array()
    idx = np.arange(f.size)
    total = 0.0
    for j, p in enumerate(mu.marginals):
        pj = float(p)
        disagree = float(w[tbl != tbl[idx ^ (1 << j)]].sum())
        total += 4.0 * pj * (1.0 - pj) * disagree
    return total


def prob_one(f: BooleanFunction, mu: ProductDistribution):
    """Pr_{x~mu}[f(x) = 1]."""
    _check_pair(f, mu)
    if isinstance(mu.marginals[0], Fraction) or f.arity <= 6:
        q = 0
        for idx in range(f.size):
            if f.value_at(idx):
                q = q + mu.point_prob(point_from_index(idx, f.arity))
        return q
    tbl = f.table_array()
    w = mu.weight_array()
    return float(w[tbl == 1].sum())


def variance(f: BooleanFunction, mu: ProductDistribution):
    """Variance of the Bernoulli output: q(1-q) with q = Pr[f(x) = 1]."""
    q = prob_one(f, mu)
    return q * (1 - q)


def avg_sensitivity(f: BooleanFunction, mu: ProductDistribution):
    """E_{x~mu} s(f, x), by full-table summation."""
    _check_pair(f, mu)
    if not isinstance(mu.marginals[0], Fraction) and f.arity > 6:
        tbl = f.table_array()
        idx = np.arange(f.size)
        sens = np.zeros(f.size, dtype=np.int64)
        for j in range(f.arity):
            sens += tbl != tbl[idx ^ (1 << j)]
        return float(sens @ mu.weight_array())
    total = 0
    for idx in range(f.size):
        v = f.value_at(idx)
        s = sum(1 for j in range(f.arity) if f.value_at(idx ^ (1 << j)) != v)
        if s:
            total = total + s * mu.point_prob(point_from_index(idx, f.arity))
    return total


@dataclass(frozen=True)
class PoincareReport:
    lhs: object  # 4 Var(f)
    rhs: object  # Inf(f)
    holds: bool


def check_poincare(f: BooleanFunction, mu: ProductDistribution, tol: float = TOL) -> PoincareReport:
    """4 Var(f) <= Inf(f) for product distributions."""
    lhs = 4 * variance(f, mu)
    rhs = influence(f, mu)
    return PoincareReport(lhs, rhs, bool(lhs <= rhs + tol))


def _check_pair(f: BooleanFunction, mu: ProductDistribution):
    if f.arity != mu.arity:
        raise ValueError(f"arity mismatch: function {f.arity} vs distribution {mu.arity}")


# ---------------------------------------------------------------------------
# Distribution operations
# ---------------------------------------------------------------------------


def subcube_prob(mu: ProductDistribution, c: Subcube):
    """Mass of the subcube: product of the fixed-bit marginal factors."""
    prob = 1
    for i, b in c.fixed:
        if i > mu.arity:
            raise ValueError(f"fixed variable {i} out of range")
        p = mu.marginals[i - 1]
        prob = prob * (p if b else (1 - p))
    return prob


def condition(mu: ProductDistribution, c: Subcube) -> ProductDistribution:
    """mu conditioned on c: fixed marginals replaced by their bits."""
    if subcube_prob(mu, c) == 0:
        raise ValueError("conditioning on a zero-mass subcube")
    fixed = c.fixed_map()
    zero = type(mu.marginals[0])(0) if mu.marginals else 0
    one = zero + 1
    new = list(mu.marginals)
    for i, b in fixed.items():
        new[i - 1] = one if b else zero
    return ProductDistribution(tuple(new))


# ---------------------------------------------------------------------------
# Builtin functions and distributions
# ---------------------------------------------------------------------------


def constant(m: int, value: int) -> BooleanFunction:
    table = ((1 << (1 << m)) - 1) if value else 0
    return BooleanFunction(m, table)


def dictator(m: int, i: int = 1) -> BooleanFunction:
    table = 0
    for idx in range(1 << m):
        table |= ((idx >> (i - 1)) & 1) << idx
    return BooleanFunction(m, table)


def xor(m: int) -> BooleanFunction:
    table = 0
    for idx in range(1 << m):
        table |= (bin(idx).count("1") & 1) << idx
    return BooleanFunction(m, table)


def and_f(m: int) -> BooleanFunction:
    return BooleanFunction(m, 1 << ((1 << m) - 1))


def or_f(m: int) -> BooleanFunction:
    return BooleanFunction(m, ((1 << (1 << m)) - 1) & ~1)


def nand2() -> BooleanFunction:
    return BooleanFunction(2, 0b0111)


def nand_tree(depth: int) -> BooleanFunction:
    """The complete binary NAND-tree function on 2^depth variables."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    m = 1 << depth
    if m > MAX_ARITY:
        raise ValueError(f"nand tree of depth {depth} needs {m} > {MAX_ARITY} variables")
    table = 0
    for idx in range(1 << m):
        vals = [(idx >> j) & 1 for j in range(m)]
        while len(vals) > 1:
            vals = [1 - (vals[2 * k] & vals[2 * k + 1]) for k in range(len(vals) // 2)]
        table |= vals[0] << idx
    return BooleanFunction(m, table)


def builtin_function(name: str) -> BooleanFunction:
    """Parse builtin names: xor:2, and:3, or:2, dictator:4, nand2, nandtree:2,
    const0:m, const1:m."""
    base, _, arg = name.partition(":")
    base = base.strip().lower()
    if base == "nand2":
        return nand2()
    if not arg:
        raise ValueError(f"builtin {name!r} needs an arity argument, e.g. xor:2")
    k = int(arg)
    if base == "xor":
        return xor(k)
    if base == "and":
        return and_f(k)
    if base == "or":
        return or_f(k)
    if base == "dictator":
        return dictator(k)
    if base == "nandtree":
        return nand_tree(k)
    if base == "const0":
        return constant(k, 0)
    if base == "const1":
        return constant(k, 1)
    raise ValueError(f"unknown builtin function {name!r}")


def random_function(m: int, rng) -> BooleanFunction:
    """Uniformly random truth table; rng is ``random.Random`` or a numpy
    Generator."""
    if hasattr(rng, "getrandbits"):
        table = rng.getrandbits(1 << m)
    else:
        bits = rng.integers(0, 2, size=1 << m)
        table = sum(int(b) << i for i, b in enumerate(bits))
    return BooleanFunction(m, table)


def uniform_distribution(m: int) -> ProductDistribution:
    return ProductDistribution((0.5,) * m)


def constant_distribution(m: int, p) -> ProductDistribution:
    return ProductDistribution((p,) * m)


def random_distribution(m: int, rng, lo: float = 0.05, hi: float = 0.95) -> ProductDistribution:
    if hasattr(rng, "uniform"):
        ps = tuple(rng.uniform(lo, hi) for _ in range(m))
    else:
        ps = tuple(lo + (hi - lo) * float(u) for u in rng.random(m))
    return ProductDistribution(ps)


def random_dyadic_distribution(m: int, rng, denominator: int = 64) -> ProductDistribution:
    """Exact-rational marginals k/denominator with k in [1, denominator-1]."""
    if hasattr(rng, "randint"):
        ks = [rng.randint(1, denominator - 1) for _ in range(m)]
    else:
        ks = [int(k) for k in rng.integers(1, denominator, size=m)]
    return ProductDistribution(tuple(Fraction(k, denominator) for k in ks))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def format_truth_table(f: BooleanFunction) -> str:
    bits = "".join(str(f.value_at(i)) for i in range(f.size))
    return f"m={f.arity}\n{bits}\n"


def parse_truth_table(text: str) -> BooleanFunction:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 2 or not lines[0].startswith("m="):
        raise ValueError("truth-table text must be 'm=<int>' then a bit string")
    m = int(lines[0][2:])
    bits = lines[1]
    if len(bits) != (1 << m) or set(bits) - {"0", "1"}:
        raise ValueError(f"expected {1 << m} bits over {{0,1}}, got {len(bits)} chars")
    table = sum((b == "1") << i for i, b in enumerate(bits))
    return BooleanFunction(m, table)


def load_function(path: str) -> BooleanFunction:
    with open(path) as fh:
        return parse_truth_table(fh.read())


def save_function(f: BooleanFunction, path: str):
    with open(path, "w") as fh:
        fh.write(format_truth_table(f))


def load_distribution(path: str) -> ProductDistribution:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("distribution file must hold a JSON array of marginals")
    return ProductDistribution(tuple(float(p) for p in data))


def save_distribution(mu: ProductDistribution, path: str):
    with open(path, "w") as fh:
        json.dump([float(p) for p in mu.marginals], fh)
        fh.write("\n")
