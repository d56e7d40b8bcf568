"""Solver-agnostic MILP representation, an embedded LP-based branch-and-bound
with a lazy-cut callback contract, and LP-file export/import.

The branch-and-bound is best-first on LP relaxation bounds.  Whenever an
LP-integral candidate appears, the model's lazy callback may reject it by
returning violated cuts; the cuts are added globally and the node re-queued.
Reported dual bounds stay valid upper bounds throughout.
"""

from __future__ import annotations

import heapq
import math
import re
import time
from dataclasses import dataclass, field

import numpy as np

from ._simplex import SimplexError, solve_lp

INF = math.inf


@dataclass
class Var:
    id: int
    kind: str = "continuous"          # "continuous" | "binary"
    lower: float = 0.0
    upper: float = INF
    name: str = ""
    priority: int = 0                 # larger branches earlier


@dataclass(frozen=True)
class LinConstraint:
    terms: tuple                      # ((var_id, coefficient), ...)
    sense: str                        # "<=", "=", ">="
    rhs: float
    tag: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"bad sense {self.sense!r}")
        seen = set()
        for vid, coef in self.terms:
            if vid in seen:
                raise ValueError(f"duplicate variable {vid} in constraint {self.tag!r}")
            seen.add(vid)
            if not math.isfinite(coef):
                raise ValueError(f"non-finite coefficient on variable {vid}")


def lincon(terms, sense, rhs, tag=""):
    """Build a constraint, merging duplicate variables and dropping zeros."""
    acc = {}
    for vid, coef in terms:
        acc[vid] = acc.get(vid, 0.0) + float(coef)
    cleaned = tuple((vid, c) for vid, c in acc.items() if c != 0.0)
    return LinConstraint(terms=cleaned, sense=sense, rhs=float(rhs), tag=tag)


class MilpModel:
    """Variables, linear constraints, a maximization objective, and an
    optional lazy-cut callback invoked at integral candidates."""

    def __init__(self, name="model"):
        self.name = name
        self.vars = []
        self.constraints = []
        self.objective = {}           # var id -> coefficient
        self.lazy_callback = None     # callable(values) -> [LinConstraint]
        self.heuristic = None         # callable(values) -> feasible values or None

    def add_var(self, kind="continuous", lower=0.0, upper=None, name=None, priority=0):
        if upper is None:
            upper = 1.0 if kind == "binary" else INF
        if kind == "binary":
            lower = max(0.0, lower)
            upper = min(1.0, upper)
        vid = len(self.vars)
        self.vars.append(Var(id=vid, kind=kind, lower=float(lower),
                             upper=float(upper),
                             name=name or f"v{vid}", priority=priority))
        return vid

    def add_constraint(self, terms, sense, rhs, tag=""):
        con = lincon(terms, sense, rhs, tag)
        for vid, _ in con.terms:
            if not (0 <= vid < len(self.vars)):
                raise ValueError(f"constraint references unknown variable {vid}")
        self.constraints.append(con)
        return con

    def set_objective(self, terms):
        self.objective = {vid: float(c) for vid, c in dict(terms).items() if c != 0.0}

    def var_by_name(self, name):
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)


@dataclass
class SolveResult:
    status: str                       # optimal | bound_limit | node_limit | time_limit | infeasible | unbounded
    dual_bound: float
    incumbent: np.ndarray = None
    mip_objective: float = None
    nodes: int = 0
    wall_time: float = 0.0
    cuts: list = field(default_factory=list)
    bound_history: list = field(default_factory=list)


DEFAULT_TOL = {"integrality": 1e-6, "gap": 1e-6}


def _matrices(model, extra_cuts):
    n = len(model.vars)
    cons = model.constraints + extra_cuts
    A = np.zeros((len(cons), n))
    senses, rhs = [], []
    for r, con in enumerate(cons):
        for vid, coef in con.terms:
            A[r, vid] = coef
        senses.append(con.sense)
        rhs.append(con.rhs)
    c = np.zeros(n)
    for vid, coef in model.objective.items():
        c[vid] = coef
    lb = np.array([v.lower for v in model.vars])
    ub = np.array([v.upper for v in model.vars])
    return c, A, senses, np.array(rhs), lb, ub


def solve(model: MilpModel, limits=None, tol=None) -> SolveResult:
    """Best-first branch-and-bound for a maximization MILP.

    ``limits`` may contain ``time`` (seconds), ``nodes``, and ``bound`` (stop
    once the incumbent reaches this value).  Lazy cuts returned by the model
    callback are added globally; they must be valid for all integer-feasible
    solutions the caller cares about.
    """
    limits = dict(limits or {})
    tols = dict(DEFAULT_TOL)
    tols.update(tol or {})
    t0 = time.monotonic()
    int_tol = tols["integrality"]
    gap_tol = tols["gap"]

    if any(v.lower > v.upper for v in model.vars):
        return SolveResult(status="infeasible", dual_bound=-INF)

    cuts = []
    c, A, senses, rhs, lb, ub = _matrices(model, cuts)
    binary_ids = np.array([v.id for v in model.vars if v.kind == "binary"], dtype=int)
    priorities = np.array([model.vars[i].priority for i in binary_ids]) if len(binary_ids) else None

    def lp(node_lb, node_ub):
        if cuts and A.shape[0] != len(model.constraints) + len(cuts):
            raise AssertionError("matrix out of sync with cuts")
        return solve_lp(c, A, senses, rhs, node_lb, node_ub)

    def rebuild():
        nonlocal c, A, senses, rhs, lb, ub
        c, A, senses, rhs, lb, ub = _matrices(model, cuts)

    def feasible_for_model(vals):
        if len(binary_ids):
            b = vals[binary_ids]
            if np.max(np.abs(b - np.round(b))) > int_tol:
                return False
        if np.any(vals < lb - 1e-6) or np.any(vals > ub + 1e-6):
            return False
        lhs = A @ vals
        for r, s in enumerate(senses):
            if s == "<=" and lhs[r] > rhs[r] + 1e-6:
                return False
            if s == ">=" and lhs[r] < rhs[r] - 1e-6:
                return False
            if s == "=" and abs(lhs[r] - rhs[r]) > 1e-6:
                return False
        if model.lazy_callback and model.lazy_callback(vals):
            return False
        return True

    root = lp(lb, ub)
    if root.status == "infeasible":
        return SolveResult(status="infeasible", dual_bound=-INF,
                           wall_time=time.monotonic() - t0)
    if root.status == "unbounded":
        return SolveResult(status="unbounded", dual_bound=INF,
                           wall_time=time.monotonic() - t0)

    best_x = None
    best_obj = -INF
    residual_bound = -INF     # bounds of subproblems retired without full proof
    added_tags = set()
    seq = 0
    heap = [(-root.objective, 0, seq, {})]
    nodes = 0
    history = []
    status = "optimal"

    while heap:
        if limits.get("time") is not None and time.monotonic() - t0 > limits["time"]:
            status = "time_limit"
            break
        if limits.get("nodes") is not None and nodes >= limits["nodes"]:
            status = "node_limit"
            break
        if limits.get("bound") is not None and best_obj >= limits["bound"]:
            status = "bound_limit"
            break

        neg_bound, depth, _, overrides = heapq.heappop(heap)
        node_bound = -neg_bound
        history.append(node_bound)
        if node_bound <= best_obj + gap_tol:
            residual_bound = max(residual_bound, node_bound)
            continue
        nodes += 1

        node_lb, node_ub = lb.copy(), ub.copy()
        for vid, (nl, nu) in overrides.items():
            node_lb[vid], node_ub[vid] = nl, nu
        try:
            res = lp(node_lb, node_ub)
        except SimplexError as exc:
            raise RuntimeError(f"LP failure at node {nodes}: {exc}") from exc
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            return SolveResult(status="unbounded", dual_bound=INF, nodes=nodes,
                               wall_time=time.monotonic() - t0, cuts=cuts)
        if res.objective <= best_obj + gap_tol:
            residual_bound = max(residual_bound, res.objective)
            continue

        x = res.x
        if model.heuristic is not None:
            guess = model.heuristic(x)
            if guess is not None:
                guess = np.asarray(guess, dtype=float)
                guess_obj = float(np.dot(c, guess))
                if guess_obj > best_obj and feasible_for_model(guess):
                    best_obj = guess_obj
                    best_x = guess
        frac = None
        if len(binary_ids):
            vals = x[binary_ids]
            dist = np.abs(vals - np.round(vals))
            frac_mask = dist > int_tol
            if frac_mask.any():
                # branch: highest priority class first, then most fractional
                cand = np.flatnonzero(frac_mask)
                pr = priorities[cand]
                cand = cand[pr == pr.max()]
                frac = int(binary_ids[cand[np.argmax(dist[cand])]])
        if frac is None:
            rounded = x.copy()
            if len(binary_ids):
                rounded[binary_ids] = np.round(rounded[binary_ids])
            raw = model.lazy_callback(rounded) if model.lazy_callback else []
            if raw:
                new_cuts = [cut for cut in raw if cut.tag not in added_tags]
                if not new_cuts:
                    raise RuntimeError(
                        f"lazy callback re-emitted known cuts at node {nodes}")
                for cut in new_cuts:
                    added_tags.add(cut.tag)
                cuts.extend(new_cuts)
                rebuild()
                seq += 1
                heapq.heappush(heap, (-res.objective, depth, seq, overrides))
                continue
            cand_obj = float(np.dot(c, rounded))
            if cand_obj > best_obj:
                best_obj = cand_obj
                best_x = rounded
            continue

        for nl, nu in (((0.0, 0.0)), ((1.0, 1.0))):
            child = dict(overrides)
            child[frac] = (nl, nu)
            seq += 1
            heapq.heappush(heap, (-res.objective, depth - 1, seq, child))

    open_bound = max((-h[0] for h in heap), default=-INF)
    dual = max(best_obj, residual_bound, open_bound)
    if status == "optimal":
        if best_x is None:
            return SolveResult(status="infeasible", dual_bound=-INF, nodes=nodes,
                               wall_time=time.monotonic() - t0, cuts=cuts,
                               bound_history=history)
        dual = max(best_obj, residual_bound)
    return SolveResult(
        status=status,
        dual_bound=dual,
        incumbent=best_x,
        mip_objective=best_obj if best_x is not None else None,
        nodes=nodes,
        wall_time=time.monotonic() - t0,
        cuts=cuts,
        bound_history=history,
    )


# -- LP-file export ------------------------------------------------------------

def _num(x: float) -> str:
    return f"{x:.17g}"


def _terms_text(terms, names):
    if not terms:
        return "0 " + names[0] if names else ""
    parts = []
    for idx, (vid, coef) in enumerate(terms):
        mag = abs(coef)
        coef_txt = "" if mag == 1.0 else _num(mag) + " "
        if idx == 0:
            sign = "- " if coef < 0 else ""
        else:
            sign = "- " if coef < 0 else "+ "
        parts.append(f"{sign}{coef_txt}{names[vid]}")
    return " ".join(parts)


def export_lp(model: MilpModel) -> str:
    """CPLEX-LP-format text: Maximize / Subject To / Bounds / Binaries / End.

    Deterministic: variables ordered by id, coefficients with 17 significant
    digits, so identical models export byte-identical files.
    """
    names = [v.name for v in model.vars]
    if len(set(names)) != len(names):
        raise ValueError("variable names must be unique for LP export")
    out = ["Maximize"]
    obj_terms = tuple((vid, model.objective[vid]) for vid in sorted(model.objective))
    out.append(" obj: " + _terms_text(obj_terms, names))
    out.append("Subject To")
    for idx, con in enumerate(model.constraints):
        terms = tuple(sorted(con.terms))
        out.append(f" c{idx}: {_terms_text(terms, names)} {con.sense} {_num(con.rhs)}")
    out.append("Bounds")
    for v in model.vars:
        if v.kind == "binary":
            continue
        if v.lower == 0.0 and v.upper == INF:
            continue
        if v.upper == INF:
            out.append(f" {names[v.id]} >= {_num(v.lower)}")
        else:
            out.append(f" {_num(v.lower)} <= {names[v.id]} <= {_num(v.upper)}")
    out.append("Binaries")
    binaries = [names[v.id] for v in model.vars if v.kind == "binary"]
    for i in range(0, len(binaries), 8):
        out.append(" " + " ".join(binaries[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


_SECTION = re.compile(r"^(maximize|subject to|bounds|binaries|end)\s*$", re.I)
_TERM = re.compile(r"([+-]?)\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w\.\[\]]*)")


def _parse_terms(expr):
    terms = []
    for sign, coef, name in _TERM.findall(expr):
        value = float(coef) if coef else 1.0
        if sign == "-":
            value = -value
        terms.append((name, value))
    return terms


def parse_lp(text: str) -> MilpModel:
    """Round-trip reader for the subset of LP files written by export_lp."""
    model = MilpModel()
    section = None
    name_to_id = {}

    def ensure(nm):
        if nm not in name_to_id:
            name_to_id[nm] = model.add_var(kind="continuous", lower=0.0, upper=INF, name=nm)
        return name_to_id[nm]

    pending = []  # (tag, terms, sense, rhs)
    objective = []
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        msec = _SECTION.match(line)
        if msec:
            section = msec.group(1).lower()
            continue
        if section == "maximize":
            body.append(line)
        elif section == "subject to":
            pending.append(line)
        elif section == "bounds":
            if line.endswith(" free"):
                nm = line[:-5].strip()
                v = model.vars[ensure(nm)]
                v.lower, v.upper = -INF, INF
                continue
            m3 = re.match(r"^(\S+)\s*(<=|>=)\s*(\S+)$", line)
            m2 = re.match(r"^(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)$", line)
            if m2:
                lo, nm, hi = m2.groups()
                v = model.vars[ensure(nm)]
                v.lower, v.upper = float(lo), float(hi)
            elif m3:
                a, sense, bvalue = m3.groups()
                try:
                    lo = float(a)
                    nm, is_lower = bvalue, (sense == "<=")
                except ValueError:
                    nm, is_lower = a, (sense == ">=")
                    lo = float(bvalue)
                v = model.vars[ensure(nm)]
                if is_lower:
                    v.lower = lo
                else:
                    v.upper = lo
            else:
                raise ValueError(f"cannot parse bound line {line!r}")
        elif section == "binaries":
            for nm in line.split():
                v = model.vars[ensure(nm)]
                v.kind = "binary"
                v.lower, v.upper = 0.0, 1.0
        elif section is None:
            raise ValueError(f"content before any section: {line!r}")

    obj_expr = " ".join(body)
    if ":" in obj_expr:
        obj_expr = obj_expr.split(":", 1)[1]
    objective = _parse_terms(obj_expr)
    for line in pending:
        tag = ""
        expr = line
        if ":" in line:
            tag, expr = line.split(":", 1)
            tag = tag.strip()
        m = re.match(r"^(.*?)(<=|>=|=)\s*([+-]?[\d.eE+-]+)\s*$", expr.strip())
        if not m:
            raise ValueError(f"cannot parse constraint {line!r}")
        lhs, sense, rhs = m.groups()
        terms = [(ensure(nm), coef) for nm, coef in _parse_terms(lhs)]
        model.add_constraint(terms, sense, float(rhs), tag=tag)
    model.set_objective({ensure(nm): coef for nm, coef in objective})
    return model
