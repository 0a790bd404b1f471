"""D-optimal design measures over enumerated feasible sets.

With general pairwise constraints the uniform measure is no longer optimal,
so the weights have to be computed. The support is a finite enumerated set,
which makes multiplicative updates the natural fit: each weight is scaled
by its variance-function value over the parameter count, which provably
never decreases the log determinant and converges to the D-optimum. The
stopping rule is the general-equivalence-theorem certificate
max_pi d(pi, xi) <= p (1 + tolerance).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .criteria import DesignMeasure
from .model import ModelSpec, derive_model_from_orders, expand, model_matrix
from .orders import FeasibleSet, Order
from .ratlinalg import SingularMatrixError

WEIGHT_FLOOR = 1e-15
ZERO_WEIGHT = 1e-9


class ConvergenceError(RuntimeError):
    """Optimizer failed to certify optimality within its iteration budget."""


class RankDeficiencyError(ValueError):
    """The model matrix over the support does not have full column rank."""


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 100_000
    tolerance: float = 1e-6
    damping: float = 1.0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("at least one iteration is required")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


def variance_function(order: Sequence[int], measure: DesignMeasure, spec: ModelSpec) -> float:
    """d(pi, xi) = x(pi)^T M(xi)^-1 x(pi)."""
    x = np.array(expand(order, spec), dtype=float)
    xs = model_matrix(measure.orders, spec).astype(float)
    w = np.array([float(v) for v in measure.weights])
    m = xs.T @ (w[:, None] * xs)
    if np.linalg.matrix_rank(m) < spec.p:
        _, _, vh = np.linalg.svd(m)
        null = tuple(Fraction(round(float(v), 9)).limit_denominator(10**6) for v in vh[-1])
        raise SingularMatrixError(null, spec.labels)
    return float(x @ np.linalg.solve(m, x))


def d_optimal_measure(
    feasible: FeasibleSet | Sequence[Order],
    spec: ModelSpec,
    config: OptimizerConfig = OptimizerConfig(),
) -> DesignMeasure:
    """D-optimal weights over the given support, by multiplicative updates.

    Starts from the uniform measure (already optimal for systems covered by
    the closed forms, so those converge immediately), repeatedly rescales
    w_i by (d_i / p) ** damping, and stops once the equivalence certificate
    max_i d_i <= p (1 + tolerance) holds. Weights below 1e-9 at convergence
    are reported as exact zeros.
    """
    orders = feasible.orders if isinstance(feasible, FeasibleSet) else tuple(map(tuple, feasible))
    x = model_matrix(orders, spec).astype(float)
    n, p = x.shape
    if n < p:
        raise RankDeficiencyError(f"support holds {n} orders but the model has {p} parameters")
    if np.linalg.matrix_rank(x) < p:
        deficient = _first_dependent_column(x, spec)
        raise RankDeficiencyError(f"model matrix is rank deficient (column {deficient})")
    w = np.full(n, 1.0 / n)
    last_logdet = -math.inf
    for _ in range(config.max_iterations):
        m = x.T @ (w[:, None] * x)
        sign, logdet = np.linalg.slogdet(m)
        assert sign > 0
        # multiplicative updates never decrease the log determinant
        assert logdet >= last_logdet - 1e-9 * (1 + abs(last_logdet))
        last_logdet = logdet
        d = np.einsum("ri,ij,rj->r", x, np.linalg.inv(m), x)
        if d.max() <= p * (1 + config.tolerance):
            w = np.where(w < ZERO_WEIGHT, 0.0, w)
            w /= w.sum()
            return DesignMeasure(orders, tuple(float(v) for v in w))
        w = w * (d / p) ** config.damping
        w = np.maximum(w, WEIGHT_FLOOR)
        w /= w.sum()
    raise ConvergenceError(
        f"no equivalence certificate after {config.max_iterations} iterations "
        f"(max d = {d.max():.6g}, p = {p})"
    )


def _first_dependent_column(x: np.ndarray, spec: ModelSpec) -> str:
    rank = 0
    for j in range(x.shape[1]):
        if np.linalg.matrix_rank(x[:, : j + 1]) == rank:
            return spec.labels[j]
        rank += 1
    return "unknown"


def round_to_exact(
    measure: DesignMeasure,
    n_trials: int,
    spec: ModelSpec | None = None,
    exhaustive_cap: int = 50_000,
) -> tuple[int, ...]:
    """Apportion ``n_trials`` runs to the support, maximizing D-efficiency.

    Counts are constrained to floor/ceil of n * w. The remainder after
    flooring is assigned by exhaustive search over the choice of rounded-up
    points when that search is small (at most ``exhaustive_cap`` subsets),
    and greedily by best log-det gain otherwise. Support points with zero
    weight receive zero.
    """
    w = np.array([float(v) for v in measure.weights])
    positive = int((w > 0).sum())
    if n_trials < positive:
        raise ValueError(f"{n_trials} trials cannot cover {positive} support points")
    base = np.floor(n_trials * w).astype(int)
    remainder = n_trials - int(base.sum())
    if remainder == 0:
        return tuple(int(c) for c in base)
    candidates = [i for i in range(len(w)) if w[i] > 0]
    if spec is None:
        spec = derive_model_from_orders(measure.orders)
    x = model_matrix(measure.orders, spec).astype(float)

    def logdet(counts: np.ndarray) -> float:
        m = x.T @ ((counts / n_trials)[:, None] * x)
        sign, val = np.linalg.slogdet(m)
        return val if sign > 0 else -math.inf

    if math.comb(len(candidates), remainder) <= exhaustive_cap:
        best, best_val = None, -math.inf
        for extra in itertools.combinations(candidates, remainder):
            counts = base.copy()
            counts[list(extra)] += 1
            val = logdet(counts.astype(float))
            if val > best_val + 1e-12:
                best, best_val = counts, val
        assert best is not None
        return tuple(int(c) for c in best)
    counts = base.astype(float)
    for _ in range(remainder):
        gains = []
        for i in candidates:
            if counts[i] >= base[i] + 1:
                gains.append(-math.inf)
                continue
            counts[i] += 1
            gains.append(logdet(counts))
            counts[i] -= 1
        pick = candidates[int(np.argmax(gains))]
        counts[pick] += 1
    return tuple(int(c) for c in counts)
