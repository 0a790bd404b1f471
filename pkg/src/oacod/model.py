"""Pairwise-ordering regression models on constrained feasible sets.

The unconstrained first-order model regresses the response on an intercept
plus one +-1 indicator per unordered component pair {i, j}, coding whether i
precedes j. Constraints make some indicators constant over the feasible set
(every cross-group pair, and every within-group constrained pair), so those
columns are confounded with the intercept and are dropped from the model
rather than zero-coded.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .orders import CapExceededError, ConstraintSystem, is_feasible, pwo

Pair = tuple[int, int]


@dataclass(frozen=True)
class ModelSpec:
    """Retained model terms: an intercept plus PWO pairs (i, j) with i < j."""

    m: int
    terms: tuple[Pair, ...]

    def __post_init__(self):
        for i, j in self.terms:
            if not (1 <= i < j <= self.m):
                raise ValueError(f"term ({i},{j}) is not an ordered pair in 1..{self.m}")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate model terms")

    @property
    def p(self) -> int:
        """Number of parameters including the intercept."""
        return 1 + len(self.terms)

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return ("intercept",) + tuple(f"I({i}<{j})" for i, j in self.terms)

    def header(self) -> str:
        """One-line text form, used in design-file headers."""
        terms = ",".join(f"{i}-{j}" for i, j in self.terms)
        return f"m={self.m}; terms={terms}"

    @classmethod
    def from_header(cls, text: str) -> "ModelSpec":
        try:
            m_part, terms_part = (s.strip() for s in text.split(";"))
            m = int(m_part.removeprefix("m="))
            body = terms_part.removeprefix("terms=")
            terms = tuple(
                tuple(int(x) for x in t.split("-")) for t in body.split(",") if t
            )
        except Exception as exc:
            raise ValueError(f"bad model header: {text!r}") from exc
        return cls(m, terms)  # type: ignore[arg-type]

    @classmethod
    def full(cls, m: int) -> "ModelSpec":
        """The unconstrained model with all C(m, 2) pairs."""
        return cls(m, tuple(itertools.combinations(range(1, m + 1), 2)))


def derive_model(system: ConstraintSystem) -> ModelSpec:
    """Model terms that stay estimable under ``system``.

    Keeps within-group pairs that are not constrained in either direction.
    When some group carries several constraints, a pair can also be forced
    constant transitively (e.g. 1->2 and 2->3 force 1 before 3); such pairs
    are detected by enumerating the group's feasible sub-orders and dropped
    as well.
    """
    terms: list[Pair] = []
    for g, group in enumerate(system.partition.groups):
        cons = system.within_for_group(g)
        fixed = {frozenset(c) for c in cons}
        pairs = [
            (i, j)
            for i, j in itertools.combinations(sorted(group), 2)
            if frozenset((i, j)) not in fixed
        ]
        if len(cons) > 1:
            feasible = _group_suborders(sorted(group), cons)
            pairs = [
                (i, j) for i, j in pairs if len({pwo(o, i, j) for o in feasible}) == 2
            ]
        terms.extend(pairs)
    return ModelSpec(system.m, tuple(sorted(terms)))


def derive_model_from_orders(orders: Sequence[Sequence[int]]) -> ModelSpec:
    """Model terms that vary over an explicit list of orders.

    Used when the design region is given as a bare order list rather than a
    constraint system: every pair whose indicator is constant over the list
    is confounded with the intercept and dropped.
    """
    rows = [tuple(o) for o in orders]
    if not rows:
        raise ValueError("empty order list")
    m = len(rows[0])
    terms = tuple(
        (i, j)
        for i, j in itertools.combinations(range(1, m + 1), 2)
        if len({pwo(o, i, j) for o in rows}) == 2
    )
    return ModelSpec(m, terms)


def _group_suborders(labels: Sequence[int], cons) -> list[tuple[int, ...]]:
    if math.factorial(len(labels)) > 10**7:
        raise CapExceededError(f"cannot scan all orders of a {len(labels)}-component group")
    out = []
    for perm in itertools.permutations(labels):
        pos = {v: k for k, v in enumerate(perm)}
        if all(pos[c.before] < pos[c.after] for c in cons):
            out.append(perm)
    return out


def expand(order: Sequence[int], spec: ModelSpec) -> tuple[int, ...]:
    """Model vector of an order: (1, signs of the retained pairs)."""
    if len(order) != spec.m:
        raise ValueError(f"order has {len(order)} labels, model expects {spec.m}")
    pos = {v: k for k, v in enumerate(order)}
    return (1,) + tuple(1 if pos[i] < pos[j] else -1 for i, j in spec.terms)


def model_matrix(
    rows: Iterable[Sequence[int]],
    spec: ModelSpec,
    system: ConstraintSystem | None = None,
) -> np.ndarray:
    """Stack model vectors into an n x p integer matrix.

    When ``system`` is given, rows that violate it only raise a warning:
    observational data may contain infeasible rows by error and should
    still be inspectable.
    """
    rows = [tuple(r) for r in rows]
    if system is not None:
        bad = [r for r in rows if not is_feasible(r, system)]
        if bad:
            warnings.warn(f"{len(bad)} design row(s) violate the constraint system", stacklevel=2)
    return np.array([expand(r, spec) for r in rows], dtype=np.int64)
