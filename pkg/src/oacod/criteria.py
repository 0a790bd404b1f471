"""Moment matrices, A/D/G criterion values, closed forms, and certificates.

A design measure puts weights on feasible orders; its moment matrix is the
weighted average of x x^T over the model expansions x of the support. The
A, D, and G values reported here are tr(M^-1), det(M), and the maximum of
x^T M^-1 x over the *entire* feasible set. For measures over feasible sets
of group-partitioned systems the uniform measure is optimal and its values
have closed forms; those closed forms are the baselines all efficiencies
are computed against.

Two arithmetic paths coexist deliberately: rational arithmetic for anything
that feeds an optimality certificate, floating point for search loops.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import ratlinalg
from .model import ModelSpec, derive_model, expand, model_matrix
from .orders import ConstraintSystem, FeasibleSet, GroupPartition, Order
from .ratlinalg import SingularMatrixError

Weight = Fraction | float


@dataclass(frozen=True)
class DesignMeasure:
    """Nonnegative weights summing to one over a support of orders."""

    orders: tuple[Order, ...]
    weights: tuple[Weight, ...]

    def __post_init__(self):
        if len(self.orders) != len(self.weights):
            raise ValueError("support and weights differ in length")
        if not self.orders:
            raise ValueError("empty support")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        total = sum(self.weights)
        if self.is_exact:
            if total != 1:
                raise ValueError(f"weights sum to {total}, expected exactly 1")
        elif abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, expected 1 within 1e-12")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights)

    @classmethod
    def uniform(cls, orders: Sequence[Order] | FeasibleSet) -> "DesignMeasure":
        support = tuple(orders.orders if isinstance(orders, FeasibleSet) else map(tuple, orders))
        n = len(support)
        return cls(support, (Fraction(1, n),) * n)

    @classmethod
    def from_design(cls, rows: Sequence[Order]) -> "DesignMeasure":
        """Exact-design measure: weight k/n on an order occurring k times."""
        rows = [tuple(r) for r in rows]
        n = len(rows)
        counts: dict[Order, int] = {}
        for r in rows:
            counts[r] = counts.get(r, 0) + 1
        support = tuple(sorted(counts))
        return cls(support, tuple(Fraction(counts[o], n) for o in support))


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric p x p moment matrix, exact when built from rational weights."""

    spec: ModelSpec
    entries: tuple[tuple[Fraction, ...], ...] | None
    array: np.ndarray

    @property
    def is_exact(self) -> bool:
        return self.entries is not None

    @property
    def p(self) -> int:
        return self.spec.p

    def rows(self) -> list[list[Fraction]]:
        if self.entries is None:
            raise ValueError("moment matrix was built in floating point")
        return [list(r) for r in self.entries]


def moment_matrix(measure: DesignMeasure, spec: ModelSpec) -> MomentMatrix:
    """M = sum_pi w(pi) x(pi) x(pi)^T over the support."""
    x = model_matrix(measure.orders, spec)
    if measure.is_exact:
        den = math.lcm(*(Fraction(w).denominator for w in measure.weights))
        nums = np.array([int(Fraction(w) * den) for w in measure.weights], dtype=object)
        if den <= 2**40 and len(nums):
            nums64 = nums.astype(np.int64)
            gram = (x * nums64[:, None]).T @ x
            entries = tuple(
                tuple(Fraction(int(v), den) for v in row) for row in gram
            )
        else:
            p = spec.p
            acc = [[0] * p for _ in range(p)]
            for c, row in zip(nums, x):
                for a in range(p):
                    ra = int(row[a]) * int(c)
                    for b in range(a, p):
                        acc[a][b] += ra * int(row[b])
            entries = tuple(
                tuple(Fraction(acc[min(a, b)][max(a, b)], den) for b in range(p))
                for a in range(p)
            )
        arr = np.array([[float(v) for v in row] for row in entries])
        return MomentMatrix(spec, entries, arr)
    w = np.asarray(measure.weights, dtype=float)
    arr = (x * w[:, None]).T @ x.astype(float)
    return MomentMatrix(spec, None, arr)


def uniform_moment_closed_form(system: ConstraintSystem, spec: ModelSpec | None = None) -> MomentMatrix:
    """Exact moment matrix of the uniform measure, without enumeration.

    Requires at most one pairwise constraint per group. Entries follow the
    product structure of the feasible set:

    - mean of a term (i, j) in a group constrained by a->b: +1/3 when i = a
      or j = b, -1/3 when i = b or j = a, 0 otherwise;
    - two terms sharing one component in the same group: +-1/3 depending on
      whether the shared component sits at the same end;
    - disjoint terms in the same group: 0;
    - terms from different groups: product of their means.
    """
    if not system.has_single_constraints:
        raise ValueError("closed-form moment matrix needs at most one constraint per group")
    if spec is None:
        spec = derive_model(system)
    group_of = {label: g for g, grp in enumerate(system.partition.groups) for label in grp}
    constrained = {g: cons[0] for g in range(len(system.partition.groups)) for cons in [system.within_for_group(g)] if cons}

    def mean(term: tuple[int, int]) -> Fraction:
        i, j = term
        c = constrained.get(group_of[i])
        if c is None:
            return Fraction(0)
        a, b = c
        if i == a or j == b:
            return Fraction(1, 3)
        if i == b or j == a:
            return Fraction(-1, 3)
        return Fraction(0)

    p = spec.p
    ent = [[Fraction(0)] * p for _ in range(p)]
    ent[0][0] = Fraction(1)
    for a, ta in enumerate(spec.terms, start=1):
        ent[a][a] = Fraction(1)
        ent[0][a] = ent[a][0] = mean(ta)
        for b, tb in enumerate(spec.terms, start=1):
            if b <= a:
                continue
            if group_of[ta[0]] != group_of[tb[0]]:
                v = mean(ta) * mean(tb)
            else:
                shared = set(ta) & set(tb)
                if len(shared) == 1:
                    v = Fraction(1, 3) if (ta[0] == tb[0] or ta[1] == tb[1]) else Fraction(-1, 3)
                else:
                    v = Fraction(0)
            ent[a][b] = ent[b][a] = v
    entries = tuple(tuple(r) for r in ent)
    arr = np.array([[float(v) for v in row] for row in entries])
    return MomentMatrix(spec, entries, arr)


def a_value(measure: DesignMeasure, spec: ModelSpec) -> Fraction | float:
    """tr(M^-1); raises :class:`SingularMatrixError` for singular M."""
    m = moment_matrix(measure, spec)
    if m.is_exact:
        return ratlinalg.trace_of_inverse(m.rows(), spec.labels)
    return float(np.trace(_float_inverse(m.array, spec)))


def d_value(measure: DesignMeasure, spec: ModelSpec) -> Fraction | float:
    """det(M); zero for singular M."""
    m = moment_matrix(measure, spec)
    if m.is_exact:
        return ratlinalg.det(m.rows())
    return float(np.linalg.det(m.array))


def g_value(
    measure: DesignMeasure, spec: ModelSpec, feasible: FeasibleSet | Sequence[Order]
) -> Fraction | float:
    """max over the feasible set of x^T M^-1 x."""
    value, _ = g_value_argmax(measure, spec, feasible)
    return value


def g_value_argmax(
    measure: DesignMeasure, spec: ModelSpec, feasible: FeasibleSet | Sequence[Order]
) -> tuple[Fraction | float, Order]:
    """G value plus the lexicographically smallest order attaining it."""
    orders = feasible.orders if isinstance(feasible, FeasibleSet) else tuple(map(tuple, feasible))
    if not orders:
        raise ValueError("empty feasible set")
    x = model_matrix(orders, spec)
    m = moment_matrix(measure, spec)
    if m.is_exact:
        inv = ratlinalg.inverse(m.rows(), spec.labels)
        den = math.lcm(*(v.denominator for row in inv for v in row))
        q = np.array([[int(v * den) for v in row] for row in inv], dtype=object)
        if all(abs(int(v)) <= 2**40 for row in q for v in row):
            q64 = q.astype(np.int64)
            vals = np.einsum("ri,ij,rj->r", x, q64, x)
            k = int(np.argmax(vals))
            # ties resolve to the smallest index, i.e. lexicographically first
            return Fraction(int(vals[k]), den), orders[k]
        best: Fraction | None = None
        best_order = orders[0]
        for o, row in zip(orders, x):
            v = ratlinalg.quadratic_form([Fraction(int(t)) for t in row], inv)
            if best is None or v > best:
                best, best_order = v, o
        return best, best_order
    inv = _float_inverse(m.array, spec)
    vals = np.einsum("ri,ij,rj->r", x.astype(float), inv, x.astype(float))
    k = int(np.argmax(vals))
    return float(vals[k]), orders[k]


def _float_inverse(arr: np.ndarray, spec: ModelSpec) -> np.ndarray:
    if np.linalg.matrix_rank(arr) < arr.shape[0]:
        _, _, vh = np.linalg.svd(arr)
        null = vh[-1]
        frac_null = tuple(Fraction(round(float(v), 9)).limit_denominator(10**6) for v in null)
        raise SingularMatrixError(frac_null, spec.labels)
    return np.linalg.inv(arr)


def closed_form_pwgco(partition: GroupPartition) -> tuple[Fraction, Fraction, Fraction]:
    """(A, D, G) of the uniform measure over a group-constrained feasible set.

    A = 1 + sum 3s(s-1)^2 / (2(s+1));  D = prod (s+1)^(s-1) / 3^(s(s-1)/2);
    G = 1 + sum s(s-1)/2, with s running over the group sizes.
    """
    a = Fraction(1)
    d = Fraction(1)
    g = Fraction(1)
    for s in partition.sizes:
        a += Fraction(3 * s * (s - 1) ** 2, 2 * (s + 1))
        d *= Fraction((s + 1) ** (s - 1), 3 ** (s * (s - 1) // 2))
        g += Fraction(s * (s - 1), 2)
    return a, d, g


def closed_form_mpwco(
    partition: GroupPartition, within_counts: Sequence[int]
) -> tuple[Fraction, Fraction]:
    """(D, G) of the uniform measure when groups may carry one constraint.

    D is unchanged from the unconstrained-group case; G loses one unit per
    constrained group. No A value is claimed: with two or more constrained
    groups the uniform measure is not A-optimal.
    """
    if len(within_counts) != len(partition.sizes):
        raise ValueError("one constraint count per group expected")
    if any(k not in (0, 1) for k in within_counts):
        raise ValueError("closed form needs at most one constraint per group")
    _, d, g = closed_form_pwgco(partition)
    g -= sum(within_counts)
    return d, g


def reference_values(
    system: ConstraintSystem,
) -> tuple[Fraction | None, Fraction, Fraction]:
    """(A or None, D, G) baseline for a system, from the closed forms."""
    if any(k > 1 for k in system.within_counts):
        raise ValueError("no closed-form baseline for multi-constraint groups")
    if not system.within:
        return closed_form_pwgco(system.partition)
    d, g = closed_form_mpwco(system.partition, system.within_counts)
    return None, d, g


@dataclass(frozen=True)
class CriterionReport:
    """A/D/G values of a measure plus efficiencies against a baseline."""

    p: int
    a_value: float | None
    d_value: float
    g_value: float | None
    a_eff: float | None
    d_eff: float | None
    g_eff: float | None
    g_is_lower_bound: bool = False

    def lines(self) -> list[str]:
        def fmt(v):
            return "n/a" if v is None else f"{float(v):.12g}"

        out = [f"p={self.p}"]
        out.append(f"a_value={fmt(self.a_value)}")
        out.append(f"d_value={fmt(self.d_value)}")
        g_label = "g_lower_bound" if self.g_is_lower_bound else "g_value"
        out.append(f"{g_label}={fmt(self.g_value)}")
        out.append(f"a_eff={fmt(self.a_eff)}")
        out.append(f"d_eff={fmt(self.d_eff)}")
        out.append(f"g_eff={fmt(self.g_eff)}")
        return out


def efficiencies(
    measure: DesignMeasure,
    spec: ModelSpec,
    feasible: FeasibleSet | Sequence[Order] | None,
    baseline: tuple[Fraction | None, Fraction, Fraction],
    g_is_lower_bound: bool = False,
) -> CriterionReport:
    """Criterion values and A/D/G efficiencies relative to ``baseline``.

    ``A_eff = A0/A``, ``D_eff = (D/D0)^(1/p)``, ``G_eff = G0/G``. When the
    baseline has no A value (constrained groups), A efficiency is omitted.
    ``feasible`` may be a sample of the feasible set when full enumeration
    is off the table; the G value is then only a lower bound and is labeled
    as such.
    """
    a0, d0, g0 = baseline
    p = spec.p
    a = a_value(measure, spec) if a0 is not None else None
    d = d_value(measure, spec)
    g = g_value(measure, spec, feasible) if feasible is not None else None
    ratio = float(d) / float(d0)
    return CriterionReport(
        p=p,
        a_value=None if a is None else float(a),
        d_value=float(d),
        g_value=None if g is None else float(g),
        a_eff=None if a is None else float(a0) / float(a),
        d_eff=ratio ** (1.0 / p) if ratio > 0 else 0.0,
        g_eff=None if g is None else float(g0) / float(g),
        g_is_lower_bound=g_is_lower_bound,
    )


@dataclass(frozen=True)
class StructureViolation:
    row_label: str
    col_label: str
    expected: Fraction
    actual: Fraction


@dataclass(frozen=True)
class StructureReport:
    checked: int
    violations: tuple[StructureViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_moment_structure(rows: Sequence[Order], system: ConstraintSystem) -> StructureReport:
    """Check every normalized cross product of a design's model columns.

    The uniform measure over the feasible set fixes each entry of X^T X / n:
    ones on the diagonal, +-1/3 for same-group terms sharing a component,
    +-1/3 between the intercept and terms touching a constrained component,
    products of means across groups, zero elsewhere. Deviations are returned
    as data, not raised.
    """
    spec = derive_model(system)
    expected = uniform_moment_closed_form(system, spec)
    actual = moment_matrix(DesignMeasure.from_design(rows), spec)
    labels = spec.labels
    violations = []
    p = spec.p
    exp_rows = expected.rows()
    act_rows = actual.rows()
    for a in range(p):
        for b in range(a, p):
            if exp_rows[a][b] != act_rows[a][b]:
                violations.append(
                    StructureViolation(labels[a], labels[b], exp_rows[a][b], act_rows[a][b])
                )
    return StructureReport(checked=p * (p + 1) // 2, violations=tuple(violations))


def moment_matrices_equal(a: MomentMatrix, b: MomentMatrix) -> bool:
    """Exact equality of two rational moment matrices."""
    if not (a.is_exact and b.is_exact):
        raise ValueError("exact comparison needs exact matrices")
    return a.entries == b.entries
