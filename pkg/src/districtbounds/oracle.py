"""Brute-force ground truth for desk-scale instances.

Enumerates every contiguous, population-feasible partition in canonical
labeling (node 0 opens district 0; the lowest unassigned node opens each next
district) and maximizes the true objective over the stream.
"""

from __future__ import annotations

from dataclasses import dataclass

from .instance import Assignment, contiguous, population_feasible
from .probit import DegenerateDistrictError, true_objective

MAX_NODES = 14


@dataclass
class EnumerationResult:
    optimum: float
    assignment: Assignment
    feasible_count: int


def _guard(inst):
    if inst.n > MAX_NODES:
        raise ValueError(f"brute force limited to {MAX_NODES} nodes, got {inst.n}")


def enumerate_contiguous_partitions(inst):
    """Yield canonical feasible assignments by growing connected districts.

    District d is grown from the lowest node not in districts 0..d-1, adding
    only neighbors of the part built so far, so every emitted district is
    connected by construction.
    """
    _guard(inst)
    lo, hi = inst.pop_bounds
    adj = inst._adjacency()
    district = [-1] * inst.n

    def grow(d, pop, frontier, excluded, unassigned):
        # members of district d are marked in `district`; pop <= hi always holds
        if lo <= pop:
            yield from open_next(d, unassigned)
        banned = set(excluded)
        for v in sorted(frontier - banned):
            if pop + inst.nodes[v].pop <= hi:
                district[v] = d
                nf = (frontier | {u for u in adj[v] if district[u] == -1}) - {v}
                yield from grow(d, pop + inst.nodes[v].pop, nf, set(banned),
                                unassigned - {v})
                district[v] = -1
            banned.add(v)  # later branches enumerate the subsets without v

    def open_next(d, unassigned):
        if d + 1 == inst.k:
            if not unassigned:
                yield Assignment(district=list(district))
            return
        if not unassigned:
            return
        anchor = min(unassigned)
        pop = inst.nodes[anchor].pop
        if pop > hi:
            return
        district[anchor] = d + 1
        frontier = {u for u in adj[anchor] if district[u] == -1}
        yield from grow(d + 1, pop, frontier, set(), unassigned - {anchor})
        district[anchor] = -1

    yield from open_next(-1, frozenset(range(inst.n)))


def enumerate_by_filtering(inst):
    """Independent cross-check: filter all canonical labelings directly."""
    _guard(inst)
    if inst.n > 10:
        raise ValueError("filtering enumerator limited to 10 nodes")

    def labelings(i, used):
        if i == inst.n:
            if used == inst.k:
                yield list(current)
            return
        for j in range(min(used + 1, inst.k)):
            current.append(j)
            yield from labelings(i + 1, max(used, j + 1))
            current.pop()

    current = []
    for lab in labelings(0, 0):
        a = Assignment(district=lab)
        if population_feasible(inst, a) and contiguous(inst, a):
            yield a


def brute_force_optimum(inst, spec) -> EnumerationResult:
    """Maximum of the true objective over all feasible contiguous partitions.

    Assignments whose objective is undefined (a zero denominator under the
    given spec) are counted as feasible but cannot be optimal.  Ties break
    toward the lexicographically smallest assignment.
    """
    _guard(inst)
    best_val, best = -float("inf"), None
    count = 0
    for a in enumerate_contiguous_partitions(inst):
        count += 1
        try:
            val = true_objective(inst, a, spec)
        except DegenerateDistrictError:
            continue
        key = tuple(a.district)
        if val > best_val or (val == best_val and (best is None or key < tuple(best.district))):
            best_val, best = val, Assignment(district=list(a.district))
    if best is None:
        return EnumerationResult(optimum=float("nan"), assignment=None,
                                 feasible_count=count)
    return EnumerationResult(optimum=best_val, assignment=best, feasible_count=count)
