"""Systematic construction of optimal fractional designs.

Full designs over a constrained feasible set are optimal but huge; these
builders assemble much smaller designs whose moment matrix *exactly* equals
the full design's, so every efficiency is 1 by construction. Four routes:

- ``grouped_design``: per-group component designs (catalog arrays for up to
  six components, block-design assembly beyond) stacked over all row
  combinations; handles systems whose only constraints are the group order.
- ``single_constraint_design_even`` / ``..._odd``: designs on one group of
  m components carrying a single pairwise constraint.
- ``mixed_design``: combines the two per group, for systems carrying at
  most one constraint per group.

``run_size`` reports the run counts of all of these without materializing
anything.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .blocks import (
    BlockDesign,
    ComponentDesign,
    MINIMAL_RUNS,
    UnsupportedSizeError,
    block_design_for_group,
    block_design_run_parameters,
    component_design_for_group,
    find_component_design,
    relabel_rows,
    verify_block_condition,
)
from .orders import (
    CapExceededError,
    ConstraintSystem,
    DEFAULT_ENUMERATION_CAP,
    GroupPartition,
    Order,
    PairwiseConstraint,
    enumerate_feasible,
)

Rows = tuple[Order, ...]


@dataclass(frozen=True)
class DesignTable:
    """An n x m list of orders plus a note on how it was built."""

    m: int
    rows: Rows
    provenance: str

    def __post_init__(self):
        ref = list(range(1, self.m + 1))
        for r in self.rows:
            if sorted(r) != ref:
                raise ValueError(f"row {r} is not an order of 1..{self.m}")

    @property
    def n(self) -> int:
        return len(self.rows)


def column_reversal(rows: Sequence[Sequence[int]]) -> Rows:
    """Reverse the position order of every row.

    >>> column_reversal([(5, 6, 7)])
    ((7, 6, 5),)
    """
    return tuple(tuple(reversed(r)) for r in rows)


def full_design(system: ConstraintSystem, cap: int = DEFAULT_ENUMERATION_CAP) -> DesignTable:
    """Every feasible order exactly once."""
    feasible = enumerate_feasible(system, cap)
    return DesignTable(system.m, feasible.orders, "full feasible set")


# ---------------------------------------------------------------------------
# per-group designs for unconstrained groups


def _all_perms(symbols: Sequence[int]) -> Rows:
    return tuple(itertools.permutations(sorted(symbols)))


def assemble_group_design(
    blocks: BlockDesign, inner: ComponentDesign, outer: ComponentDesign
) -> Rows:
    """Stack [B_l C_l; ~C_l B_l] over all blocks o_l of a block design.

    ``inner`` supplies the rows on each block's symbols (via monotone
    relabeling), ``outer`` the rows on the complements; both must have the
    same row count, and the block design must satisfy the balance identity.
    """
    if len(inner.rows) != len(outer.rows):
        raise ValueError("inner and outer component designs must have equal row counts")
    if not verify_block_condition(blocks):
        raise ValueError("block design violates the balance identity")
    symbols = set(blocks.points)
    out: list[Order] = []
    for block in blocks.blocks:
        comp = tuple(sorted(symbols - set(block)))
        b_rows = relabel_rows(inner.rows, block)
        c_rows = relabel_rows(outer.rows, comp)
        for b, c in zip(b_rows, c_rows):
            out.append(b + c)
        for b, c in zip(b_rows, c_rows):
            out.append(tuple(reversed(c)) + b)
    return tuple(out)


def group_design(symbols: Iterable[int]) -> Rows:
    """A minimal moment-equivalent design on one unconstrained group.

    Sizes up to six come straight from the component-design catalog. Larger
    groups are assembled from a block design plus two component designs of
    equal run count (the smallest count serving both widths).
    """
    syms = tuple(sorted(symbols))
    k = len(syms)
    if k in MINIMAL_RUNS:
        return component_design_for_group(syms).rows
    blocks = block_design_for_group(syms)
    inner_w = blocks.block_size
    outer_w = k - inner_w
    n = _common_rows(inner_w, outer_w)
    inner = find_component_design(range(1, inner_w + 1), n)
    outer = find_component_design(range(1, outer_w + 1), n)
    return assemble_group_design(blocks, inner, outer)


def _common_rows(w1: int, w2: int) -> int:
    return math.lcm(_available_rows(w1), _available_rows(w2))


def _available_rows(width: int) -> int:
    if width in MINIMAL_RUNS:
        return MINIMAL_RUNS[width]
    return group_run_size(width)


def group_run_size(size: int) -> int:
    """Run count of ``group_design`` for one group, without materializing."""
    if size in MINIMAL_RUNS:
        return MINIMAL_RUNS[size]
    b, inner_w = block_design_run_parameters(size)
    n = _common_rows(inner_w, size - inner_w)
    return 2 * b * n


# ---------------------------------------------------------------------------
# single-group designs under one pairwise constraint


def single_constraint_design_even(m: int, before: int, after: int) -> DesignTable:
    """Fractional design on m components (m even >= 4) with ``before -> after``.

    Blocks are the sets {before} + T over all (m/2-1)-subsets T of the other
    components. Per block, the left half runs over permutations of the block
    (restricted and duplicated when ``after`` lies inside), the right half
    over permutations of the complement; the second band swaps the halves
    with the complement column-reversed. Row count m!/(m/2)!.
    """
    if m % 2 or m < 4:
        raise ValueError(f"even-size construction needs even m >= 4, got {m}")
    if not (1 <= before <= m and 1 <= after <= m) or before == after:
        raise ValueError(f"bad constraint {before}->{after}")
    half = m // 2
    others = [x for x in range(1, m + 1) if x != before]
    out: list[Order] = []
    for t in itertools.combinations(others, half - 1):
        block = tuple(sorted((before,) + t))
        comp = tuple(sorted(set(range(1, m + 1)) - set(block)))
        if after in block:
            restricted = [
                p for p in itertools.permutations(block) if p.index(before) < p.index(after)
            ]
            b_rows = restricted + restricted
        else:
            b_rows = list(itertools.permutations(block))
        c_rows = list(itertools.permutations(comp))
        assert len(b_rows) == len(c_rows) == math.factorial(half)
        if after in block:
            for b, c in zip(b_rows, c_rows):
                out.append(b + c)
            for b, c in zip(b_rows, c_rows):
                out.append(tuple(reversed(c)) + b)
        else:
            for b, c in zip(b_rows, c_rows):
                out.append(b + c)
            for b, c in zip(b_rows, c_rows):
                out.append(b + tuple(reversed(c)))
    return DesignTable(m, tuple(out), f"single-constraint even m={m}, {before}->{after}")


def single_constraint_design_odd(
    m: int, before: int, after: int, insert_label: int | None = None
) -> DesignTable:
    """Fractional design on m components (m odd >= 5) with ``before -> after``.

    Builds the even-size design on m-1 components under 1->2, relabels 1, 2
    to the constrained pair and the rest onto the remaining labels except
    one spare component, then inserts a column of the spare at every
    position. Row count m!/((m-1)/2)!. The spare defaults to the smallest
    admissible label; pass ``insert_label`` to override.
    """
    if m % 2 == 0 or m < 5:
        raise ValueError(f"odd-size construction needs odd m >= 5, got {m}")
    if not (1 <= before <= m and 1 <= after <= m) or before == after:
        raise ValueError(f"bad constraint {before}->{after}")
    admissible = [x for x in range(1, m + 1) if x not in (before, after)]
    spare = admissible[0] if insert_label is None else insert_label
    if spare in (before, after):
        raise ValueError(f"insert label {spare} collides with the constraint")
    if spare not in admissible:
        raise ValueError(f"insert label {spare} out of range")
    base = single_constraint_design_even(m - 1, 1, 2)
    rest = [x for x in range(1, m + 1) if x not in (before, after, spare)]
    mapping = {1: before, 2: after}
    mapping.update({i + 3: lab for i, lab in enumerate(rest)})
    relabeled = [tuple(mapping[v] for v in row) for row in base.rows]
    out: list[Order] = []
    for k in range(m):
        for row in relabeled:
            out.append(row[:k] + (spare,) + row[k:])
    return DesignTable(
        m, tuple(out), f"single-constraint odd m={m}, {before}->{after}, insert {spare}"
    )


def _constrained_group_rows(symbols: Sequence[int], constraint: PairwiseConstraint) -> Rows:
    """Per-group rows when the group carries one pairwise constraint."""
    syms = tuple(sorted(symbols))
    k = len(syms)
    rank = {s: i + 1 for i, s in enumerate(syms)}
    if k == 2:
        return ((constraint.before, constraint.after),)
    if k == 3:
        rows = [
            p
            for p in itertools.permutations(syms)
            if p.index(constraint.before) < p.index(constraint.after)
        ]
        return tuple(sorted(rows))
    if k % 2 == 0:
        table = single_constraint_design_even(k, rank[constraint.before], rank[constraint.after])
    else:
        table = single_constraint_design_odd(k, rank[constraint.before], rank[constraint.after])
    return relabel_rows(table.rows, syms)


def constrained_group_run_size(size: int) -> int:
    """Rows contributed by a group of ``size`` components with one constraint."""
    if size < 2:
        raise ValueError("a constrained group needs at least two components")
    if size == 2:
        return 1
    if size == 3:
        return 3
    if size % 2 == 0:
        return math.factorial(size) // math.factorial(size // 2)
    return math.factorial(size) // math.factorial((size - 1) // 2)


# ---------------------------------------------------------------------------
# whole-system construction


def _stack_groups(per_group: Sequence[Rows], m: int, provenance: str, cap: int) -> DesignTable:
    n = math.prod(len(rows) for rows in per_group)
    if n > cap:
        raise CapExceededError(f"stacked design would hold {n} rows (cap {cap})")
    rows = tuple(sum(parts, ()) for parts in itertools.product(*per_group))
    return DesignTable(m, rows, provenance)


def grouped_design(
    partition: GroupPartition, cap: int = DEFAULT_ENUMERATION_CAP
) -> DesignTable:
    """Fractional design for a system whose only constraints are group order."""
    per_group = [group_design(g) for g in partition.groups]
    provenance = f"grouped construction, sizes {partition.sizes}"
    return _stack_groups(per_group, partition.m, provenance, cap)


def mixed_design(system: ConstraintSystem, cap: int = DEFAULT_ENUMERATION_CAP) -> DesignTable:
    """Fractional design when each group carries at most one constraint."""
    if not system.has_single_constraints:
        raise ValueError("mixed construction needs at most one constraint per group")
    per_group: list[Rows] = []
    for g, grp in enumerate(system.partition.groups):
        cons = system.within_for_group(g)
        if cons:
            per_group.append(_constrained_group_rows(sorted(grp), cons[0]))
        else:
            per_group.append(group_design(grp))
    provenance = (
        f"mixed construction, sizes {system.partition.sizes}, "
        f"constraints {[str(c) for c in system.within]}"
    )
    return _stack_groups(per_group, system.m, provenance, cap)


@dataclass(frozen=True)
class RunSize:
    """Dry-run report: construction size vs. the full design's."""

    n: int
    full_n: int

    @property
    def ratio(self) -> float:
        return self.n / self.full_n


def run_size(system: ConstraintSystem) -> RunSize:
    """Row counts of the applicable construction, without materializing."""
    if not system.has_single_constraints:
        raise ValueError("no systematic construction for multi-constraint groups")
    n = 1
    full_n = 1
    for size, k in zip(system.partition.sizes, system.within_counts):
        full_n *= math.factorial(size) // (2**k)
        n *= constrained_group_run_size(size) if k else group_run_size(size)
    return RunSize(n, full_n)


def construct(
    system: ConstraintSystem,
    method: str = "auto",
    cap: int = DEFAULT_ENUMERATION_CAP,
    insert_label: int | None = None,
) -> DesignTable:
    """Dispatch: 'full', 'c1' (grouped), 'c2'/'c3' (single constraint),
    'c4' (mixed), or 'auto' picking by the system's shape."""
    sizes = system.partition.sizes
    if method == "full":
        return full_design(system, cap)
    if method == "auto":
        method = "c1" if not system.within else "c4"
    if method == "c1":
        if system.within:
            raise ValueError("grouped construction ignores within-group constraints; use c4")
        return grouped_design(system.partition, cap)
    if method in ("c2", "c3"):
        if len(sizes) != 1 or len(system.within) != 1:
            raise ValueError("single-constraint construction needs one group and one constraint")
        c = system.within[0]
        if method == "c2":
            return single_constraint_design_even(system.m, c.before, c.after)
        return single_constraint_design_odd(system.m, c.before, c.after, insert_label)
    if method == "c4":
        return mixed_design(system, cap)
    raise ValueError(f"unknown construction method {method!r}")
