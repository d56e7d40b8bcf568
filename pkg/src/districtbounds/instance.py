"""Partitioning instances: node-weighted adjacency graphs with demographic
and vote attributes, plus validation, JSON I/O, and a synthetic grid generator.

All population accounting that feeds feasibility decisions is done in exact
rational arithmetic (``fractions.Fraction``) so that boundary cases do not
flip under floating point roundoff.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction


class ValidationError(ValueError):
    """Raised when an instance violates a structural invariant."""


DEMOGRAPHIC_FIELDS = ("pop", "vap", "bvap", "hvap")
VOTE_FIELDS = ("dv16", "tv16", "dv20", "tv20")


@dataclass(frozen=True)
class Node:
    """One parcel of land with its population and vote counts."""

    id: int
    pop: int = 0
    vap: int = 0
    bvap: int = 0
    hvap: int = 0
    dv16: int = 0
    tv16: int = 0
    dv20: int = 0
    tv20: int = 0

    def validate(self, label=None):
        name = self.id if label is None else label
        for f in DEMOGRAPHIC_FIELDS + VOTE_FIELDS:
            v = getattr(self, f)
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"node {name}: field {f} must be a nonnegative integer, got {v!r}")
        if self.bvap > self.vap:
            raise ValidationError(f"node {name}: bvap {self.bvap} > vap {self.vap}")
        if self.hvap > self.vap:
            raise ValidationError(f"node {name}: hvap {self.hvap} > vap {self.vap}")
        if self.vap > self.pop:
            raise ValidationError(f"node {name}: vap {self.vap} > pop {self.pop}")
        if self.dv16 > self.tv16:
            raise ValidationError(f"node {name}: dv16 {self.dv16} > tv16 {self.tv16}")
        if self.dv20 > self.tv20:
            raise ValidationError(f"node {name}: dv20 {self.dv20} > tv20 {self.tv20}")


@dataclass(frozen=True)
class Instance:
    """A validated partitioning instance.

    Node ids are dense ``0..n-1``.  Files may use arbitrary keys; the original
    labels are kept in ``labels`` so a round trip preserves them.
    """

    nodes: tuple
    edges: tuple
    k: int
    tau: float
    labels: tuple = None
    has_votes: bool = True

    def __post_init__(self):
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(self.nodes))))
        self.validate()

    # -- derived quantities ------------------------------------------------

    @property
    def n(self):
        return len(self.nodes)

    @property
    def total_pop(self):
        return sum(nd.pop for nd in self.nodes)

    @property
    def avg_pop(self) -> Fraction:
        """Average district population, exact."""
        return Fraction(self.total_pop, self.k)

    @property
    def pop_bounds(self):
        """Exact (lower, upper) admissible district population."""
        t = Fraction(*float(self.tau).as_integer_ratio())
        return (1 - t) * self.avg_pop, (1 + t) * self.avg_pop

    def big_m(self) -> float:
        """Upper district population (1+tau)*avg, the usual big-M scale."""
        return float(self.pop_bounds[1])

    def neighbors(self, i):
        return self._adjacency()[i]

    def _adjacency(self):
        adj = getattr(self, "_adj_cache", None)
        if adj is None:
            adj = [[] for _ in range(self.n)]
            for a, b in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            adj = [tuple(sorted(x)) for x in adj]
            object.__setattr__(self, "_adj_cache", adj)
        return adj

    # -- validation ----------------------------------------------------------

    def validate(self):
        n = len(self.nodes)
        if self.k < 1:
            raise ValidationError(f"district count k must be >= 1, got {self.k}")
        if not (0.0 <= self.tau <= 1.0):
            raise ValidationError(f"tau must lie in [0, 1], got {self.tau}")
        if n < self.k:
            raise ValidationError(f"cannot split {n} nodes into {self.k} districts")
        for idx, nd in enumerate(self.nodes):
            if nd.id != idx:
                raise ValidationError(f"node ids must be dense 0..n-1; position {idx} has id {nd.id}")
            nd.validate(label=self.labels[idx])
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"edge ({a},{b}) references an unknown node")
            if a == b:
                raise ValidationError(f"self-loop on node {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValidationError(f"duplicate edge ({a},{b})")
            seen.add(key)
        if n > 1 and not self._connected(range(n)):
            raise ValidationError("graph is not connected")

    def _connected(self, subset):
        nodes = set(subset)
        if not nodes:
            return True
        adj = self._adjacency()
        start = next(iter(nodes))
        seen = {start}
        q = deque([start])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    q.append(v)
        return len(seen) == len(nodes)

    def is_connected_subset(self, subset):
        """True if the induced subgraph on ``subset`` is connected (or empty)."""
        return self._connected(subset)


@dataclass
class Assignment:
    """Maps each node to a district in ``[0, k)``."""

    district: list

    def districts(self, k):
        out = [[] for _ in range(k)]
        for i, j in enumerate(self.district):
            out[j].append(i)
        return out

    def as_tuple(self):
        return tuple(self.district)


def district_populations(inst: Instance, a: Assignment):
    pops = [0] * inst.k
    for i, j in enumerate(a.district):
        pops[j] += inst.nodes[i].pop
    return pops


def population_feasible(inst: Instance, a: Assignment) -> bool:
    """Exact rational comparison of district populations to the tau band."""
    lo, hi = inst.pop_bounds
    return all(lo <= p <= hi for p in district_populations(inst, a))


def contiguous(inst: Instance, a: Assignment) -> bool:
    return all(
        members and inst.is_connected_subset(members)
        for members in a.districts(inst.k)
    )


def assignment_feasible(inst: Instance, a: Assignment) -> bool:
    if len(a.district) != inst.n:
        return False
    if any(not (0 <= j < inst.k) for j in a.district):
        return False
    return population_feasible(inst, a) and contiguous(inst, a)


# -- JSON ingestion ----------------------------------------------------------

def _node_from_record(rec, position, label):
    fields = {}
    for f in DEMOGRAPHIC_FIELDS + VOTE_FIELDS:
        v = rec.get(f, 0)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(f"node {label}: field {f} must be an integer, got {v!r}")
        fields[f] = v
    return Node(id=position, **fields)


def instance_from_dict(data) -> Instance:
    for key in ("k", "tau", "nodes", "edges"):
        if key not in data:
            raise ValidationError(f"missing required key {key!r}")
    records = data["nodes"]
    labels = []
    index = {}
    for pos, rec in enumerate(records):
        raw = rec.get("id", pos)
        label = str(raw)
        if label in index:
            raise ValidationError(f"duplicate node id {label!r}")
        index[label] = pos
        labels.append(label)
    nodes = [_node_from_record(rec, pos, labels[pos]) for pos, rec in enumerate(records)]
    edges = []
    for e in data["edges"]:
        if len(e) != 2:
            raise ValidationError(f"edge {e!r} must have exactly two endpoints")
        try:
            edges.append((index[str(e[0])], index[str(e[1])]))
        except KeyError as exc:
            raise ValidationError(f"edge {e!r} references unknown node {exc}") from None
    has_votes = all(
        all(f in rec for f in VOTE_FIELDS) for rec in records
    ) and any(rec.get("tv16", 0) > 0 for rec in records)
    return Instance(
        nodes=tuple(nodes),
        edges=tuple(edges),
        k=int(data["k"]),
        tau=float(data["tau"]),
        labels=tuple(labels),
        has_votes=has_votes,
    )


def load_instance(path) -> Instance:
    """Load and validate an instance from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def instance_to_dict(inst: Instance):
    return {
        "k": inst.k,
        "tau": inst.tau,
        "nodes": [
            {
                "id": inst.labels[i],
                **{f: getattr(nd, f) for f in DEMOGRAPHIC_FIELDS + VOTE_FIELDS},
            }
            for i, nd in enumerate(inst.nodes)
        ],
        "edges": [[inst.labels[a], inst.labels[b]] for a, b in inst.edges],
    }


def save_instance(inst: Instance, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- synthetic generator -------------------------------------------------------

def grid_instance(rows: int, cols: int, k: int, tau: float, seed: int) -> Instance:
    """Random rows x cols grid graph, deterministic for a fixed seed.

    Populations are uniform in [80, 120] with vap = pop; bvap and hvap split
    the voting-age population; vote totals stay below vap with dv <= tv.
    """
    if rows < 1 or cols < 1 or rows * cols < k or k < 1:
        raise ValidationError(f"invalid grid dimensions ({rows}x{cols}, k={k})")
    rng = random.Random(seed)
    nodes = []
    for i in range(rows * cols):
        pop = rng.randint(80, 120)
        vap = pop
        bvap = rng.randint(0, vap)
        hvap = rng.randint(0, vap - bvap)
        tv16 = rng.randint(vap // 2, vap)
        dv16 = rng.randint(0, tv16)
        tv20 = rng.randint(vap // 2, vap)
        dv20 = rng.randint(0, tv20)
        nodes.append(Node(id=i, pop=pop, vap=vap, bvap=bvap, hvap=hvap,
                          dv16=dv16, tv16=tv16, dv20=dv20, tv20=tv20))
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return Instance(nodes=tuple(nodes), edges=tuple(edges), k=k, tau=float(tau))


def instance_digest(inst: Instance) -> str:
    """Content hash of an instance, used as a cache key."""
    import hashlib

    blob = json.dumps(instance_to_dict(inst), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
