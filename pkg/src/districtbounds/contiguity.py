"""Lazy contiguity enforcement via minimal vertex-separator inequalities.

A district whose induced subgraph is disconnected is rejected by cuts of the
form x_aj + x_bj <= 1 + sum_{c in C} x_cj, where C is a minimal a,b-separator:
any assignment placing a and b in district j without any of C cannot be
contiguous, so every contiguous assignment satisfies the cut.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .milp import lincon


@dataclass(frozen=True)
class SeparatorCut:
    district: int
    a: int
    b: int
    separator: tuple

    def tag(self):
        return f"sep[{self.district}]:{self.a}-{self.b}:" + ",".join(map(str, self.separator))


def _component_of(adj, allowed, start):
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v in allowed and v not in seen:
                seen.add(v)
                q.append(v)
    return seen


def _connected_avoiding(adj, n, removed, a, b):
    if a in removed or b in removed:
        return False
    allowed = set(range(n)) - set(removed)
    return b in _component_of(adj, allowed, a)


def find_separator(inst, S, a, b):
    """Minimal a,b-separator given a,b lie in distinct components of G[S].

    Starts from the neighborhood of a's component (outside S) and drops any
    node whose removal from the candidate set leaves a and b separated in the
    full graph.
    """
    S = set(S)
    if a not in S or b not in S:
        raise ValueError("endpoints must belong to the candidate set")
    adj = inst._adjacency()
    comp_a = _component_of(adj, S, a)
    if b in comp_a:
        raise ValueError(f"nodes {a} and {b} are already connected within the set")
    c0 = set()
    for u in comp_a:
        for v in adj[u]:
            if v not in S:
                c0.add(v)
    # minimalize deterministically
    sep = set(c0)
    for cnd in sorted(c0):
        trial = sep - {cnd}
        if not _connected_avoiding(adj, inst.n, trial, a, b):
            sep = trial
    return frozenset(sep)


def candidate_cuts(inst, assignment_lists):
    """Separator cuts for every disconnected district of an integral candidate.

    ``assignment_lists[j]`` holds the sorted node ids of district j.  One cut
    is produced per extra component, anchored at the largest component.
    """
    adj = inst._adjacency()
    cuts = []
    for j, members in enumerate(assignment_lists):
        if len(members) <= 1:
            continue
        remaining = set(members)
        comps = []
        while remaining:
            c = _component_of(adj, remaining, min(remaining))
            comps.append(sorted(c))
            remaining -= c
        if len(comps) == 1:
            continue
        comps.sort(key=lambda c: (-len(c), c[0]))
        a = comps[0][0]
        for other in comps[1:]:
            b = other[0]
            sep = find_separator(inst, set(members), a, b)
            cuts.append(SeparatorCut(district=j, a=a, b=b,
                                     separator=tuple(sorted(sep))))
    return cuts


def make_contiguity_callback(inst, x_ids):
    """Lazy-callback closure over the assignment variables of a model.

    ``x_ids[i][j]`` is the model variable id of node i in district j.  The
    callback is stateless; the solver deduplicates cuts by tag.
    """

    def callback(values):
        lists = [[] for _ in range(inst.k)]
        for i in range(inst.n):
            for j in range(inst.k):
                if values[x_ids[i][j]] > 0.5:
                    lists[j].append(i)
                    break
        out = []
        for cut in candidate_cuts(inst, lists):
            j = cut.district
            terms = [(x_ids[cut.a][j], 1.0), (x_ids[cut.b][j], 1.0)]
            terms += [(x_ids[cnd][j], -1.0) for cnd in cut.separator]
            out.append(lincon(terms, "<=", 1.0, tag=cut.tag()))
        return out

    return callback
