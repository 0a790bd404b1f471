"""Orders, precedence constraints, and feasible sets.

Components are labeled 1..m. An order is a tuple listing the components in
the sequence they are added; it must be a permutation of 1..m. Two layers of
constraints restrict the usable orders:

- an ordered partition of the labels into groups: every component of an
  earlier group must be added before every component of a later group;
- pairwise precedence constraints between two components of the *same*
  group ("4 must come before 5").

The feasible set is the collection of all orders satisfying both layers,
kept in lexicographic order so downstream output is reproducible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

Order = tuple[int, ...]

#: Default ceiling on the number of orders an enumeration may materialize.
DEFAULT_ENUMERATION_CAP = 10**7


class CapExceededError(RuntimeError):
    """Enumeration would exceed the configured size cap."""


class CyclicConstraintError(ValueError):
    """The precedence constraints admit no feasible order."""


class PairwiseConstraint(NamedTuple):
    """Require component ``before`` to precede component ``after``."""

    before: int
    after: int

    def __str__(self) -> str:
        return f"{self.before}->{self.after}"


def _check_order(seq: Sequence[int]) -> Order:
    order = tuple(seq)
    if sorted(order) != list(range(1, len(order) + 1)):
        raise ValueError(f"not a permutation of 1..{len(order)}: {order!r}")
    return order


@dataclass(frozen=True)
class GroupPartition:
    """An ordered partition of the labels 1..m into nonempty groups."""

    groups: tuple[frozenset[int], ...]

    def __init__(self, groups: Iterable[Iterable[int]]):
        object.__setattr__(self, "groups", tuple(frozenset(g) for g in groups))
        if not self.groups:
            raise ValueError("at least one group is required")
        labels = [x for g in self.groups for x in g]
        if not all(g for g in self.groups):
            raise ValueError("groups must be nonempty")
        if sorted(labels) != list(range(1, len(labels) + 1)):
            raise ValueError(f"groups must partition 1..m, got labels {sorted(labels)}")

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "GroupPartition":
        """Contiguously labeled partition, e.g. ``(2, 4)`` -> {1,2}, {3..6}."""
        groups, start = [], 1
        for s in sizes:
            groups.append(range(start, start + s))
            start += s
        return cls(groups)

    @property
    def m(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def group_index(self, label: int) -> int:
        for k, g in enumerate(self.groups):
            if label in g:
                return k
        raise ValueError(f"unknown label {label}")


@dataclass(frozen=True)
class ConstraintSystem:
    """A group partition plus within-group pairwise precedence constraints.

    Theory-backed closed forms require at most one pairwise constraint per
    group; systems with more are accepted (they are still meaningful for
    enumeration and measure optimization) and flagged by
    :attr:`has_single_constraints`.
    """

    partition: GroupPartition
    within: tuple[PairwiseConstraint, ...] = field(default=())

    def __init__(
        self,
        partition: GroupPartition,
        within: Iterable[PairwiseConstraint | tuple[int, int]] = (),
    ):
        object.__setattr__(self, "partition", partition)
        seen: list[PairwiseConstraint] = []
        for c in within:
            c = PairwiseConstraint(*c)
            if c.before == c.after:
                raise ValueError(f"constraint {c} is a self-loop")
            if c not in seen:
                seen.append(c)
        object.__setattr__(self, "within", tuple(seen))
        for c in self.within:
            gb = partition.group_index(c.before)
            ga = partition.group_index(c.after)
            if gb != ga:
                raise ValueError(
                    f"constraint {c} spans groups {gb + 1} and {ga + 1}; "
                    "cross-group precedence is set by the group order"
                )
        _check_acyclic(self)

    @property
    def m(self) -> int:
        return self.partition.m

    def within_for_group(self, g: int) -> tuple[PairwiseConstraint, ...]:
        group = self.partition.groups[g]
        return tuple(c for c in self.within if c.before in group)

    @property
    def within_counts(self) -> tuple[int, ...]:
        return tuple(len(self.within_for_group(g)) for g in range(len(self.partition.groups)))

    @property
    def has_single_constraints(self) -> bool:
        """True when every group carries at most one pairwise constraint."""
        return all(k <= 1 for k in self.within_counts)


@dataclass(frozen=True)
class FeasibleSet:
    """All feasible orders of a system, in lexicographic order."""

    orders: tuple[Order, ...]
    system: ConstraintSystem

    def __len__(self) -> int:
        return len(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def index(self, order: Order) -> int:
        return self.orders.index(tuple(order))


def pwo(order: Sequence[int], i: int, j: int) -> int:
    """Sign of the relative position of ``i`` and ``j`` in ``order``.

    Returns +1 when ``i`` precedes ``j`` and -1 otherwise. Antisymmetric in
    (i, j).

    >>> pwo((1, 2, 3), 1, 3)
    1
    >>> pwo((3, 1, 2), 1, 3)
    -1
    """
    if i == j:
        raise ValueError("components must be distinct")
    try:
        return 1 if order.index(i) < order.index(j) else -1
    except ValueError:
        raise ValueError(f"labels {i}, {j} must both appear in {order!r}") from None


def induced_constraints(partition: GroupPartition) -> frozenset[PairwiseConstraint]:
    """All pairwise constraints implied by the group precedence order."""
    out = set()
    for g1, g2 in itertools.combinations(range(len(partition.groups)), 2):
        for i in partition.groups[g1]:
            for j in partition.groups[g2]:
                out.add(PairwiseConstraint(i, j))
    return frozenset(out)


def _check_acyclic(system: ConstraintSystem) -> None:
    # Kahn's algorithm over the union of induced and within edges.
    m = system.m
    edges = set(induced_constraints(system.partition)) | set(system.within)
    succ: dict[int, set[int]] = {v: set() for v in range(1, m + 1)}
    indeg = {v: 0 for v in range(1, m + 1)}
    for a, b in edges:
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    ready = [v for v in indeg if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if seen != m:
        cyclic = sorted(v for v in indeg if indeg[v] > 0)
        raise CyclicConstraintError(f"constraints admit no feasible order (cycle through {cyclic})")


def is_feasible(order: Sequence[int], system: ConstraintSystem) -> bool:
    """Whether ``order`` satisfies every group and within-group constraint."""
    order = _check_order(order)
    if len(order) != system.m:
        raise ValueError(f"order has {len(order)} labels, system expects {system.m}")
    pos = {v: k for k, v in enumerate(order)}
    stop = 0
    for g in system.partition.groups:
        lo = min(pos[v] for v in g)
        hi = max(pos[v] for v in g)
        if lo != stop or hi != stop + len(g) - 1:
            # group must occupy the next contiguous band of positions
            return False
        stop = hi + 1
    return all(pos[c.before] < pos[c.after] for c in system.within)


def _group_orders(system: ConstraintSystem, g: int) -> list[Order]:
    group = sorted(system.partition.groups[g])
    cons = system.within_for_group(g)
    out = []
    for perm in itertools.permutations(group):
        pos = {v: k for k, v in enumerate(perm)}
        if all(pos[c.before] < pos[c.after] for c in cons):
            out.append(perm)
    return out


def enumerate_feasible(
    system: ConstraintSystem, cap: int = DEFAULT_ENUMERATION_CAP
) -> FeasibleSet:
    """Enumerate the feasible set, lexicographically sorted.

    Feasible orders are exactly the concatenations of one permutation per
    group (group bands are forced), so enumeration is a per-group filter
    followed by a Cartesian product. Raises :class:`CapExceededError` when
    the product of group factorials exceeds ``cap``.
    """
    bound = math.prod(math.factorial(s) for s in system.partition.sizes)
    if bound > cap:
        raise CapExceededError(f"feasible set may hold up to {bound} orders (cap {cap})")
    per_group = [_group_orders(system, g) for g in range(len(system.partition.groups))]
    orders = [sum(parts, ()) for parts in itertools.product(*per_group)]
    return FeasibleSet(tuple(orders), system)


def feasible_count(system: ConstraintSystem) -> int:
    """Closed-form size of the feasible set: prod |G_g|! / 2^{|C_g|}.

    Only valid when each group carries at most one pairwise constraint;
    otherwise the caller must enumerate.
    """
    if not system.has_single_constraints:
        raise ValueError(
            "closed-form count requires at most one constraint per group; "
            "use enumerate_feasible instead"
        )
    n = 1
    for size, k in zip(system.partition.sizes, system.within_counts):
        n *= math.factorial(size) // (2**k)
    return n
