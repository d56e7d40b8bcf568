"""Preprocessing that tightens the objective-variable domain.

Two stages: per-district ranges of the ratio aggregates under a symmetry
ordering (solved as small MILPs with contiguity), and root-node gradient
cuts that shave the projection polytope ``Q`` of the feasible region onto
the aggregate space.  Only certified bound directions are ever kept, so a
time- or node-limited solve can tighten but never invalidate ``Q``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import milp
from ._simplex import solve_lp
from .contiguity import make_contiguity_callback
from .instance import instance_digest
from .relax import _aggregates, _base, _node_ratio_range, _ordering, _term_coeffs

INF = math.inf


@dataclass
class DistrictBounds:
    """Certified per-district ranges for the aggregates of one ratio term."""

    y_lo: list
    y_hi: list
    z_lo: list
    z_hi: list
    zy_lo: list                     # bounds on z - y
    zy_hi: list
    ratio_lo: list
    ratio_hi: list
    f_lo: list
    f_hi: list

    def boxes(self):
        """(z_lo, z_hi, y_lo, y_hi) per district, for the 2-D relaxations."""
        return [(self.z_lo[j], self.z_hi[j], self.y_lo[j], self.y_hi[j])
                for j in range(len(self.y_lo))]

    def f_bounds(self):
        return list(zip(self.f_lo, self.f_hi))

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _range_model(inst, spec):
    model, x_ids = _base(inst, "ranges")
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    z_ids = _aggregates(model, inst, x_ids, den, "z")
    _ordering(model, y_ids, "y_order")
    return model, x_ids, y_ids, z_ids


def _certified_max(model, objective, limits):
    """A valid upper bound on max(objective); exact when the solve finishes."""
    model.set_objective(objective)
    res = milp.solve(model, limits=limits)
    if res.status == "infeasible":
        raise ValueError("instance admits no feasible contiguous partition")
    return res.dual_bound


def _solve_one_range(args):
    inst, spec, j, role, sign, limits = args
    model, _, y_ids, z_ids = _range_model(inst, spec)
    if role == "y":
        objective = {y_ids[j]: sign}
    elif role == "z":
        objective = {z_ids[j]: sign}
    else:
        objective = {z_ids[j]: sign, y_ids[j]: -sign}
    return sign * _certified_max(model, objective, limits)


def compute_variable_ranges(inst, spec, limits=None) -> DistrictBounds:
    """Ordered per-district ranges of the ratio aggregates.

    Districts are ordered by their numerator aggregate, which breaks the
    label symmetry and makes the ranges district-specific.  Maxima use the
    solver's dual bound, minima the dual bound of the negated problem, so
    every recorded direction is certified even under limits.  The 6k solves
    are independent; DISTRICTBOUNDS_THREADS > 1 runs them in a thread pool.
    """
    if not spec.single_ratio:
        raise ValueError("variable ranges support single-ratio objectives")
    limits = limits or {}
    curve = spec.curve
    _, r_max_nodes = _node_ratio_range(inst, spec.terms[0])

    jobs = [(inst, spec, j, role, sign, limits)
            for j in range(inst.k)
            for role in ("y", "z", "zy")
            for sign in (1.0, -1.0)]
    threads = int(os.environ.get("DISTRICTBOUNDS_THREADS", "1"))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_solve_one_range, jobs))
    else:
        values = [_solve_one_range(job) for job in jobs]

    out = DistrictBounds([], [], [], [], [], [], [], [], [], [])
    it = iter(values)
    for j in range(inst.k):
        y_hi, y_lo, z_hi, z_lo, zy_hi, zy_lo = (next(it) for _ in range(6))
        y_lo, z_lo = max(y_lo, 0.0), max(z_lo, 0.0)
        out.y_lo.append(y_lo)
        out.y_hi.append(y_hi)
        out.z_lo.append(z_lo)
        out.z_hi.append(z_hi)
        out.zy_lo.append(zy_lo)
        out.zy_hi.append(zy_hi)
        r_lo = y_lo / z_hi if z_hi > 0 else 0.0
        r_hi = min(r_max_nodes, y_hi / z_lo) if z_lo > 0 else r_max_nodes
        out.ratio_lo.append(r_lo)
        out.ratio_hi.append(r_hi)
        out.f_lo.append(curve.value(r_lo))
        out.f_hi.append(curve.value(r_hi))
    return out


@dataclass
class CutPolytope:
    """Linear outer approximation of the projection onto the aggregates.

    Rows are (coefficients, lo, hi) where coefficients maps ('y'|'z', j) to
    a float.  Always contains the projection of the contiguity-constrained
    feasible region with the ordering applied.
    """

    k: int
    bounds: DistrictBounds
    rows: list = field(default_factory=list)
    trace: list = field(default_factory=list)   # relaxed bound per iteration

    def add_row(self, coeffs, lo, hi):
        self.rows.append(({k: float(v) for k, v in coeffs.items()}, float(lo), float(hi)))

    # -- LP over Q -------------------------------------------------------------

    def _lp_data(self):
        k = self.k
        nvar = 2 * k

        def col(key):
            kind, j = key
            return j if kind == "y" else k + j

        lb = np.array([self.bounds.y_lo[j] for j in range(k)]
                      + [self.bounds.z_lo[j] for j in range(k)])
        ub = np.array([self.bounds.y_hi[j] for j in range(k)]
                      + [self.bounds.z_hi[j] for j in range(k)])
        rows, senses, rhs = [], [], []

        def add(coeffs, sense, b):
            r = np.zeros(nvar)
            for key, v in coeffs.items():
                r[col(key)] += v
            rows.append(r)
            senses.append(sense)
            rhs.append(b)

        for j in range(k):
            add({("z", j): 1.0, ("y", j): -1.0}, ">=", self.bounds.zy_lo[j])
            add({("z", j): 1.0, ("y", j): -1.0}, "<=", self.bounds.zy_hi[j])
        for j in range(k - 1):
            add({("y", j): 1.0, ("y", j + 1): -1.0}, "<=", 0.0)
        for coeffs, lo, hi in self.rows:
            add(coeffs, ">=", lo)
            add(coeffs, "<=", hi)
        A = np.vstack(rows) if rows else np.zeros((0, nvar))
        return A, senses, np.array(rhs), lb, ub

    def max_ratio(self, j, tol=1e-7):
        """Largest y_j / z_j over Q, found by bisection on y - t z >= 0."""
        A, senses, rhs, lb, ub = self._lp_data()
        k = self.k
        lo = self.bounds.ratio_lo[j]
        hi = self.bounds.ratio_hi[j]
        point = None

        def probe(t):
            c = np.zeros(2 * k)
            c[j] = 1.0
            c[k + j] = -t
            res = solve_lp(c, A, senses, rhs, lb, ub)
            if res.status != "optimal":
                return None
            return res

        base = probe(lo)
        if base is None:
            return lo, None
        point = base.x
        if base.objective < -1e-12:
            # even the recorded lower ratio is not attainable inside Q
            return lo, point
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            res = probe(mid)
            if res is not None and res.objective >= 0.0:
                lo = mid
                point = res.x
            else:
                hi = mid
        return hi, point

    def relaxed_objective(self, spec):
        """Valid upper bound on the true objective over Q: sum of the curve
        at each district's maximal ratio."""
        total = 0.0
        points = []
        for j in range(self.k):
            r, pt = self.max_ratio(j)
            total += spec.curve.value(r)
            points.append(pt)
        return total, points

    def add_to(self, build):
        """Install the box, difference, and gradient rows into a built model."""
        model = build.model
        y_ids = build.num_ids[0]
        z_ids = build.den_ids[0]
        for j in range(self.k):
            v = model.vars[y_ids[j]]
            v.lower = max(v.lower, self.bounds.y_lo[j])
            v.upper = min(v.upper, self.bounds.y_hi[j])
            v = model.vars[z_ids[j]]
            v.lower = max(v.lower, self.bounds.z_lo[j])
            v.upper = min(v.upper, self.bounds.z_hi[j])
            model.add_constraint([(z_ids[j], 1.0), (y_ids[j], -1.0)], ">=",
                                 self.bounds.zy_lo[j], tag=f"q_zy_lo[{j}]")
            model.add_constraint([(z_ids[j], 1.0), (y_ids[j], -1.0)], "<=",
                                 self.bounds.zy_hi[j], tag=f"q_zy_hi[{j}]")
        _ordering(model, y_ids, "q_y_order")
        for idx, (coeffs, lo, hi) in enumerate(self.rows):
            terms = []
            for (kind, j), v in coeffs.items():
                terms.append(((y_ids if kind == "y" else z_ids)[j], v))
            model.add_constraint(terms, ">=", lo, tag=f"q_cut_lo[{idx}]")
            model.add_constraint(terms, "<=", hi, tag=f"q_cut_hi[{idx}]")


def objective_gradient(spec, ys, zs):
    """Gradient of sum_j curve(sum_i y_ij / z_ij) at positive aggregates.

    ``ys`` and ``zs`` are (terms, districts) arrays.  Returns arrays of the
    same shape.  The radial identity grad . (y, z) = 0 holds at every point.
    """
    ys = np.asarray(ys, dtype=float)
    zs = np.asarray(zs, dtype=float)
    n_terms, k = ys.shape
    gy = np.zeros_like(ys)
    gz = np.zeros_like(zs)
    for j in range(k):
        arg = sum(ys[i, j] / zs[i, j] for i in range(n_terms))
        slope = spec.curve.derivative(arg)
        for i in range(n_terms):
            gy[i, j] = slope / zs[i, j]
            gz[i, j] = -slope * ys[i, j] / zs[i, j] ** 2
    return gy, gz


def gradient_cuts(inst, spec, f_star, tol=1e-4, limits=None,
                  bounds: DistrictBounds = None, max_rounds=8) -> CutPolytope:
    """Root-node cut loop over the aggregate projection.

    Maximizes the relaxed objective over Q; at the maximizer the gradient's
    dot product with the point is zero, so a certified one-sided range of
    grad . (y, z) over the feasible region separates the point, and both
    certified ends enter Q.  Stops when the relaxed bound reaches f_star +
    tol, the range straddles zero, progress stalls, or the round budget runs
    out.  The per-cut node budget doubles whenever progress falls under 0.1%.
    """
    if not spec.single_ratio:
        raise ValueError("gradient cuts support single-ratio objectives here")
    limits = dict(limits or {})
    node_budget = limits.get("nodes", 20000)
    if bounds is None:
        bounds = compute_variable_ranges(inst, spec, limits)
    Q = CutPolytope(k=inst.k, bounds=bounds)

    model, _, y_ids, z_ids = _range_model(inst, spec)
    prev = INF
    stagnant = 0
    for _ in range(max_rounds):
        relaxed, points = Q.relaxed_objective(spec)
        Q.trace.append(relaxed)
        if relaxed <= f_star + tol:
            break
        if prev - relaxed < 1e-3 * max(1.0, abs(prev)):
            node_budget *= 2
            stagnant += 1
            if stagnant >= 3:
                break
        else:
            stagnant = 0
        prev = relaxed

        # per-district maximizers: take district j's coordinates from its own
        # bisection point; the radial identity holds district by district
        y_star = np.array([points[j][j] for j in range(inst.k)])
        z_star = np.array([points[j][inst.k + j] for j in range(inst.k)])
        z_star = np.maximum(z_star, 1e-9)
        gy, gz = objective_gradient(spec, y_star[None, :], z_star[None, :])
        gy, gz = gy[0], gz[0]

        objective = {y_ids[j]: gy[j] for j in range(inst.k)}
        objective.update({z_ids[j]: gz[j] for j in range(inst.k)})
        lim = {"nodes": node_budget}
        if "time" in limits:
            lim["time"] = limits["time"]
        hi = _certified_max(model, objective, lim)
        lo = -_certified_max(model, {v: -c for v, c in objective.items()}, lim)
        if hi < -1e-9 or lo > 1e-9:
            coeffs = {("y", j): gy[j] for j in range(inst.k)}
            coeffs.update({("z", j): gz[j] for j in range(inst.k)})
            Q.add_row(coeffs, lo, hi)
        else:
            break
    return Q


# -- cache ---------------------------------------------------------------------

def bounds_cache_key(inst, spec):
    return f"{instance_digest(inst)}_{spec.kind}"


def load_cached_bounds(cache_dir, inst, spec):
    path = os.path.join(cache_dir, bounds_cache_key(inst, spec) + ".bounds.json")
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return DistrictBounds.from_json(fh.read())
    return None


def save_cached_bounds(cache_dir, inst, spec, bounds):
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, bounds_cache_key(inst, spec) + ".bounds.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(bounds.to_json())
    return path
