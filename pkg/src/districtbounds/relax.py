"""MILP relaxation builders.

Each builder turns an instance, an objective, and a breakpoint choice into a
MilpModel whose optimum upper-bounds the true optimum (step and logarithmic
families) or approximates it (the piecewise-linear restrictions).  All models
share the assignment/population base and enforce contiguity lazily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contiguity import candidate_cuts, make_contiguity_callback
from .graycode import gray, slice_angles, strengthened_support
from .instance import Assignment
from .milp import MilpModel

INF = math.inf


@dataclass
class RelaxationBuild:
    """A built model plus the variable maps needed to interpret solutions."""

    family: str
    model: MilpModel
    x_ids: list                       # x_ids[i][j]
    f_ids: list                       # objective variable per district
    num_ids: list = None              # numerator aggregate per (term, district)
    den_ids: list = None              # denominator aggregate per (term, district)
    deltas: list = None               # per-district step error bound
    certified_bound: bool = True      # False for the PWL restrictions
    meta: dict = field(default_factory=dict)

    def assignment_from(self, values) -> Assignment:
        district = []
        for i in range(len(self.x_ids)):
            row = [values[self.x_ids[i][j]] for j in range(len(self.x_ids[i]))]
            district.append(int(np.argmax(row)))
        return Assignment(district=district)

    def total_delta(self):
        return None if self.deltas is None else float(sum(self.deltas))


def _base(inst, name, fix_first=False):
    """Assignment variables plus the population band; contiguity is lazy.

    ``fix_first`` pins node 0 to district 0, a valid label-symmetry breaker
    whenever no other labeling convention (such as aggregate ordering) is in
    force.
    """
    model = MilpModel(name=name)
    x_ids = [[model.add_var(kind="binary", name=f"x_{i}_{j}", priority=1)
              for j in range(inst.k)] for i in range(inst.n)]
    if fix_first:
        model.vars[x_ids[0][0]].lower = 1.0
    for i in range(inst.n):
        model.add_constraint([(x_ids[i][j], 1.0) for j in range(inst.k)],
                             "=", 1.0, tag=f"assign[{i}]")
    lo, hi = inst.pop_bounds
    for j in range(inst.k):
        terms = [(x_ids[i][j], float(inst.nodes[i].pop)) for i in range(inst.n)]
        model.add_constraint(terms, ">=", float(lo), tag=f"pop_lo[{j}]")
        model.add_constraint(terms, "<=", float(hi), tag=f"pop_hi[{j}]")
    model.lazy_callback = make_contiguity_callback(inst, x_ids)
    return model, x_ids


def _round_assignment(inst, x_ids, values, ordering_key=None, fix_first=False):
    """Integral assignment from LP values, relabeled to fit the model's
    symmetry convention; None if population or contiguity fails."""
    district = [int(np.argmax([values[x_ids[i][j]] for j in range(inst.k)]))
                for i in range(inst.n)]
    if ordering_key is not None:
        agg = [0.0] * inst.k
        for i, j in enumerate(district):
            agg[j] += ordering_key[i]
        order = sorted(range(inst.k), key=lambda j: (agg[j], j))
        relabel = {old: new for new, old in enumerate(order)}
        district = [relabel[j] for j in district]
    elif fix_first:
        j0 = district[0]
        district = [0 if j == j0 else (j0 if j == 0 else j) for j in district]
    lo, hi = inst.pop_bounds
    pops = [0] * inst.k
    members = [[] for _ in range(inst.k)]
    for i, j in enumerate(district):
        pops[j] += inst.nodes[i].pop
        members[j].append(i)
    if any(not (lo <= p <= hi) for p in pops):
        return None
    if candidate_cuts(inst, members):
        return None
    return district, members


def _fill_step_values(curve, pts, vals, y, z, lo_f, hi_f):
    """Consistent (delta, f) completion for one district of a step model."""
    ell = len(pts) - 1
    delta = [1.0 if pts[t] * z - y > 1e-9 else 0.0 for t in range(1, ell + 1)]
    active = [vals[t] for t in range(1, ell + 1) if delta[t - 1] > 0.5]
    f = min(active) if active else vals[ell]
    f = min(f, hi_f)
    if f < lo_f - 1e-9:
        return None
    return delta, max(f, lo_f)


def _term_coeffs(inst, term):
    num = np.array([term.numer_of(nd) for nd in inst.nodes], dtype=float)
    den = np.array([term.denom_of(nd) for nd in inst.nodes], dtype=float)
    return num, den


def _aggregates(model, inst, x_ids, coeffs, prefix):
    """One linked aggregate variable per district for a nodewise quantity."""
    total = float(coeffs.sum())
    ids = []
    for j in range(inst.k):
        vid = model.add_var(kind="continuous", lower=0.0, upper=total,
                            name=f"{prefix}_{j}")
        terms = [(x_ids[i][j], float(coeffs[i])) for i in range(inst.n)
                 if coeffs[i] != 0.0]
        terms.append((vid, -1.0))
        model.add_constraint(terms, "=", 0.0, tag=f"{prefix}_link[{j}]")
        ids.append(vid)
    return ids


def _node_ratio_range(inst, term):
    num, den = _term_coeffs(inst, term)
    mask = den > 0
    if not mask.any():
        raise ValueError(f"no node has positive {term.denominator}")
    ratios = num[mask] / den[mask]
    return float(ratios.min()), float(ratios.max())


def _ordering(model, ids, tag):
    for j in range(len(ids) - 1):
        model.add_constraint([(ids[j], 1.0), (ids[j + 1], -1.0)], "<=", 0.0,
                             tag=f"{tag}[{j}]")


def _per_district(bs, k):
    if isinstance(bs, (list, tuple)):
        if len(bs) != k:
            raise ValueError(f"expected {k} breakpoint sets, got {len(bs)}")
        return list(bs)
    return [bs] * k


# -- threshold (step) models -----------------------------------------------------


def build_step_single(inst, spec, bs, dominating=False, ordering=False,
                      f_bounds=None, cuts=None, big_m=None,
                      fix_first=None) -> RelaxationBuild:
    """Step upper bound for a single-ratio objective.

    ``bs`` is one BreakpointSet or one per district (district-specific sets
    require ``ordering``).  With ``dominating`` the per-breakpoint objective
    caps are replaced by the aggregated telescoping inequality, which is
    tighter in the LP relaxation.  ``f_bounds`` are per-district (lo, hi)
    bounds on the curve value, as produced by range preprocessing.
    """
    if not spec.single_ratio:
        raise ValueError("step_single requires a single ratio objective")
    bsets = _per_district(bs, inst.k)
    if any(b is not bsets[0] for b in bsets) and not ordering:
        raise ValueError("per-district breakpoints need the ordering option")
    curve = spec.curve
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    if not num.any():
        raise ValueError(f"instance has no {[f for f, _ in term.numerator]} data")

    ordering = ordering or cuts is not None
    if fix_first is None:
        fix_first = not ordering
    model, x_ids = _base(inst, "step_single", fix_first=fix_first)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    z_ids = _aggregates(model, inst, x_ids, den, "z")

    U = float(big_m) if big_m is not None else inst.big_m()
    z_ub = min(U, float(den.sum()))
    f_ids, deltas, delta_ids = [], [], []
    for j in range(inst.k):
        pts = bsets[j].points
        vals = [curve.value(b) for b in pts]
        ell = len(pts) - 1
        lo_f, hi_f = 0.0, 1.0
        if f_bounds is not None:
            lo_f, hi_f = f_bounds[j]
        fid = model.add_var(kind="continuous", lower=lo_f, upper=hi_f, name=f"f_{j}")
        f_ids.append(fid)
        # the threshold indicators drive the objective; branch them first
        d_ids = [model.add_var(kind="binary", name=f"delta_{j}_{t}", priority=2)
                 for t in range(1, ell + 1)]
        delta_ids.append(d_ids)
        for t in range(1, ell + 1):
            # population-scale big-M, tightened per row: b_t*z - y <= b_t*z_ub
            Mt = max(pts[t], 1e-9) * z_ub
            model.add_constraint(
                [(z_ids[j], pts[t]), (y_ids[j], -1.0), (d_ids[t - 1], -Mt)],
                "<=", 0.0, tag=f"step_ind[{j},{t}]")
        if dominating:
            # f_j <= value(b_ell) - sum (value(b_{t+1}) - value(b_t)) * delta_t
            terms = [(fid, 1.0)]
            terms += [(d_ids[t - 1], vals[t + 1] - vals[t]) for t in range(1, ell)]
            model.add_constraint(terms, "<=", vals[ell], tag=f"step_obj_dom[{j}]")
        else:
            for t in range(1, ell + 1):
                model.add_constraint([(fid, 1.0), (d_ids[t - 1], 1.0)], "<=",
                                     vals[t] + 1.0, tag=f"step_obj[{j},{t}]")
        for t in range(ell - 1):
            model.add_constraint([(d_ids[t], 1.0), (d_ids[t + 1], -1.0)], "<=",
                                 0.0, tag=f"step_order[{j},{t + 1}]")
        deltas.append(max(vals[t] - vals[t - 1] for t in range(1, ell + 1)))

    if ordering:
        _ordering(model, y_ids, "y_order")
    model.set_objective({fid: 1.0 for fid in f_ids})
    build = RelaxationBuild(family="step_single", model=model, x_ids=x_ids,
                            f_ids=f_ids, num_ids=[y_ids], den_ids=[z_ids],
                            deltas=deltas)
    if cuts is not None:
        cuts.add_to(build)

    values_per_set = [[curve.value(b) for b in s.points] for s in bsets]
    bound_list = ([f_bounds[j] for j in range(inst.k)] if f_bounds is not None
                  else [(0.0, 1.0)] * inst.k)

    def heuristic(values):
        rounded = _round_assignment(inst, x_ids, values,
                                    ordering_key=num if ordering else None,
                                    fix_first=fix_first)
        if rounded is None:
            return None
        district, members = rounded
        out = np.zeros(len(model.vars))
        for i, j in enumerate(district):
            out[x_ids[i][j]] = 1.0
        for j in range(inst.k):
            y = float(sum(num[i] for i in members[j]))
            z = float(sum(den[i] for i in members[j]))
            out[y_ids[j]] = y
            out[z_ids[j]] = z
            filled = _fill_step_values(curve, bsets[j].points, values_per_set[j],
                                       y, z, *bound_list[j])
            if filled is None:
                return None
            delta, f = filled
            out[f_ids[j]] = f
            for t, dv in enumerate(delta):
                out[delta_ids[j][t]] = dv
        return out

    model.heuristic = heuristic
    return build


def build_step_multi(inst, spec, grid, ordering=False, cuts=None,
                     fix_first=None) -> RelaxationBuild:
    """Step upper bound for the two-ratio vote objective.

    One ordered indicator family per election year; the objective cap uses the
    precomputed table of curve values at summed breakpoints.
    """
    if spec.single_ratio:
        raise ValueError("step_multi requires a multi-ratio objective")
    if float(inst.pop_bounds[0]) <= 0:
        raise ValueError("population band admits empty districts; "
                         "a district vote denominator could be zero")
    for term in spec.terms:
        _, den = _term_coeffs(inst, term)
        if (den <= 0).any():
            bad = int(np.argmin(den))
            raise ValueError(f"node {bad} has zero {term.denominator}; "
                             "a district vote denominator could be zero")

    ordering = ordering or cuts is not None
    if fix_first is None:
        fix_first = not ordering
    model, x_ids = _base(inst, "step_multi", fix_first=fix_first)
    num_ids, den_ids, M_year = [], [], []
    for q, term in enumerate(spec.terms):
        num, den = _term_coeffs(inst, term)
        num_ids.append(_aggregates(model, inst, x_ids, num, f"d{q}"))
        den_ids.append(_aggregates(model, inst, x_ids, den, f"t{q}"))
        M_year.append(float(den.sum()))

    ell = grid.sets[0].ell
    f_ids = []
    delta_ids = []    # delta_ids[q][j][t-1]
    for q, bset in enumerate(grid.sets):
        pts = bset.points
        per_year = []
        for j in range(inst.k):
            ids = [model.add_var(kind="binary", name=f"delta{q}_{j}_{t}",
                                 priority=2)
                   for t in range(1, ell + 1)]
            for t in range(1, ell + 1):
                Mt = max(pts[t], 1e-9) * M_year[q]
                model.add_constraint(
                    [(den_ids[q][j], pts[t]), (num_ids[q][j], -1.0),
                     (ids[t - 1], -Mt)],
                    "<=", 0.0, tag=f"multi_ind[{q},{j},{t}]")
            for t in range(ell - 1):
                model.add_constraint([(ids[t], 1.0), (ids[t + 1], -1.0)], "<=",
                                     0.0, tag=f"multi_order[{q},{j},{t + 1}]")
            per_year.append(ids)
        delta_ids.append(per_year)

    psi = grid.psi
    for j in range(inst.k):
        fid = model.add_var(kind="continuous", lower=0.0, upper=1.0, name=f"f_{j}")
        f_ids.append(fid)
        for s in range(1, ell + 1):
            for t in range(1, ell + 1):
                # f_j <= psi[s,t] + (1 - delta16_js) + (1 - delta20_jt)
                model.add_constraint(
                    [(fid, 1.0), (delta_ids[0][j][s - 1], 1.0),
                     (delta_ids[1][j][t - 1], 1.0)],
                    "<=", float(psi[s, t]) + 2.0, tag=f"multi_obj[{j},{s},{t}]")

    if ordering:
        _ordering(model, num_ids[0], "d_order")
    model.set_objective({fid: 1.0 for fid in f_ids})
    build = RelaxationBuild(family="step_multi", model=model, x_ids=x_ids,
                            f_ids=f_ids, num_ids=num_ids, den_ids=den_ids,
                            deltas=[grid.delta()] * inst.k)
    if cuts is not None:
        cuts.add_to(build)

    coeffs = [_term_coeffs(inst, term) for term in spec.terms]
    order_key = coeffs[0][0] if ordering else None

    def heuristic(values):
        rounded = _round_assignment(inst, x_ids, values, ordering_key=order_key,
                                    fix_first=fix_first)
        if rounded is None:
            return None
        district, members = rounded
        out = np.zeros(len(model.vars))
        for i, j in enumerate(district):
            out[x_ids[i][j]] = 1.0
        for j in range(inst.k):
            caps = psi[1:, 1:].copy()
            for q in range(2):
                numq, denq = coeffs[q]
                yq = float(sum(numq[i] for i in members[j]))
                zq = float(sum(denq[i] for i in members[j]))
                out[num_ids[q][j]] = yq
                out[den_ids[q][j]] = zq
                pts = grid.sets[q].points
                dv = [1.0 if pts[t] * zq - yq > 1e-9 else 0.0
                      for t in range(1, ell + 1)]
                for t, val in enumerate(dv):
                    out[delta_ids[q][j][t]] = val
                slack = 1.0 - np.array(dv)
                caps = caps + (slack[:, None] if q == 0 else slack[None, :])
            out[f_ids[j]] = min(1.0, float(caps.min()))
        return out

    model.heuristic = heuristic
    return build


# -- piecewise-linear restrictions ------------------------------------------------


def _interp(pts, vals, r):
    if r <= pts[0]:
        return vals[0]
    if r >= pts[-1]:
        return vals[-1]
    idx = np.searchsorted(pts, r) - 1
    t = (r - pts[idx]) / (pts[idx + 1] - pts[idx])
    return vals[idx] * (1 - t) + vals[idx + 1] * t


def build_pwl_discretized(inst, spec, bs, resolution=1000) -> RelaxationBuild:
    """Piecewise-linear model with the ratio snapped to a 1/resolution grid.

    An ordered indicator chain selects the grid cell rho with
    resolution * y_j = rho * z_j; the objective variable takes the linear
    interpolation of the curve at rho/resolution.  This restricts ratios to
    grid points, so it reports an approximate objective, not a bound.
    """
    if not spec.single_ratio:
        raise ValueError("discretized PWL requires a single ratio objective")
    R = int(resolution)
    if R < bs.ell:
        raise ValueError(f"resolution {R} below breakpoint count {bs.ell}")
    curve = spec.curve
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    pts = np.array(bs.points)
    vals = np.array([curve.value(b) for b in pts])

    model, x_ids = _base(inst, "pwl_discretized", fix_first=True)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    z_ids = _aggregates(model, inst, x_ids, den, "z")
    U = inst.big_m()
    bigm = R * U * max(1.0, pts[-1])

    rho_lo = int(math.floor(pts[0] * R))
    rho_hi = int(math.ceil(pts[-1] * R))
    f_ids = []
    for j in range(inst.k):
        fid = model.add_var(kind="continuous", lower=0.0, upper=1.0, name=f"f_{j}")
        f_ids.append(fid)
        chain = {}
        for rho in range(rho_lo, rho_hi + 1):
            fixed = 1.0 if rho == rho_hi else 0.0
            chain[rho] = model.add_var(kind="binary", lower=fixed,
                                       name=f"cell_{j}_{rho}")
        for rho in range(rho_lo, rho_hi):
            model.add_constraint([(chain[rho], 1.0), (chain[rho + 1], -1.0)],
                                 "<=", 0.0, tag=f"pwl_order[{j},{rho}]")
        for rho in range(rho_lo, rho_hi + 1):
            # cell rho is selected where the chain steps 0 -> 1; then the
            # ratio is pinned: |R*y - rho*z| <= bigm * (1 - zeta_rho)
            sel = [(chain[rho], bigm)]
            if rho > rho_lo:
                sel.append((chain[rho - 1], -bigm))
            model.add_constraint([(y_ids[j], float(R)), (z_ids[j], -float(rho))] + sel,
                                 "<=", bigm, tag=f"pwl_snap_hi[{j},{rho}]")
            model.add_constraint([(y_ids[j], -float(R)), (z_ids[j], float(rho))] + sel,
                                 "<=", bigm, tag=f"pwl_snap_lo[{j},{rho}]")
        # f_j <= sum over cells of interpolated value
        terms = [(fid, 1.0)]
        v_hi = _interp(pts, vals, rho_hi / R)
        for rho in range(rho_lo, rho_hi):
            v_r = _interp(pts, vals, rho / R)
            v_n = _interp(pts, vals, (rho + 1) / R)
            terms.append((chain[rho], v_n - v_r))
        model.add_constraint(terms, "<=", v_hi, tag=f"pwl_value[{j}]")

    model.set_objective({fid: 1.0 for fid in f_ids})
    return RelaxationBuild(family="pwl_discretized", model=model, x_ids=x_ids,
                           f_ids=f_ids, num_ids=[y_ids], den_ids=[z_ids],
                           certified_bound=False)


def build_va_pwl(inst, spec, bs) -> RelaxationBuild:
    """Heuristic with every district's denominator fixed to its average.

    The ratio becomes linear in the numerator aggregate and the curve is
    traced exactly by an incremental piecewise-linear formulation.  Purely
    linear, but neither a bound nor exact: quality degrades with denominator
    imbalance.
    """
    if not spec.single_ratio:
        raise ValueError("va_pwl requires a single ratio objective")
    curve = spec.curve
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    if den.sum() <= 0:
        raise ValueError(f"instance has no {term.denominator} data")
    den_avg = float(den.sum()) / inst.k

    pts = list(bs.points)
    vals = [curve.value(b) for b in pts]
    sup = float(num.sum()) / den_avg
    if pts[-1] < sup:
        pts.append(sup)
        vals.append(curve.value(sup))

    model, x_ids = _base(inst, "va_pwl", fix_first=True)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    f_ids = []
    for j in range(inst.k):
        fid = model.add_var(kind="continuous", lower=0.0, upper=1.0, name=f"f_{j}")
        f_ids.append(fid)
        seg_ids, w_ids = [], []
        for t in range(1, len(pts)):
            length = pts[t] - pts[t - 1]
            sid = model.add_var(kind="continuous", lower=0.0, upper=length,
                                name=f"seg_{j}_{t}")
            seg_ids.append(sid)
            if t < len(pts) - 1:
                w_ids.append(model.add_var(kind="binary", name=f"w_{j}_{t}"))
        # y_j / den_avg = b_0 + sum of segment fills, filled left to right
        terms = [(y_ids[j], 1.0 / den_avg)] + [(sid, -1.0) for sid in seg_ids]
        model.add_constraint(terms, "=", pts[0], tag=f"va_fill[{j}]")
        for t in range(1, len(pts) - 1):
            length = pts[t] - pts[t - 1]
            model.add_constraint([(seg_ids[t - 1], 1.0), (w_ids[t - 1], -length)],
                                 ">=", 0.0, tag=f"va_full[{j},{t}]")
            nxt_len = pts[t + 1] - pts[t]
            model.add_constraint([(seg_ids[t], 1.0), (w_ids[t - 1], -nxt_len)],
                                 "<=", 0.0, tag=f"va_open[{j},{t}]")
        terms = [(fid, 1.0)]
        for t in range(1, len(pts)):
            slope = (vals[t] - vals[t - 1]) / (pts[t] - pts[t - 1])
            terms.append((seg_ids[t - 1], -slope))
        model.add_constraint(terms, "=", vals[0], tag=f"va_value[{j}]")

    model.set_objective({fid: 1.0 for fid in f_ids})
    return RelaxationBuild(family="va_pwl", model=model, x_ids=x_ids,
                           f_ids=f_ids, num_ids=[y_ids], den_ids=None,
                           certified_bound=False)


# -- logarithmic 2-D piecewise-linear bounds ---------------------------------------


def _upper_facets(verts, vals):
    """Affine majorants whose pointwise min is the concave envelope of the
    vertex values over the polygon (upper hull of the lifted 3-D points)."""
    pts = [(float(x), float(y), float(v)) for (x, y), v in zip(verts, vals)]
    n = len(pts)
    planes = []
    if n == 1:
        return [(0.0, 0.0, pts[0][2])]
    if n == 2:
        (x1, y1, v1), (x2, y2, v2) = pts
        dx, dy = x2 - x1, y2 - y1
        nrm = dx * dx + dy * dy
        if nrm < 1e-18:
            return [(0.0, 0.0, max(v1, v2))]
        a = (v2 - v1) * dx / nrm
        b = (v2 - v1) * dy / nrm
        return [(a, b, v1 - a * x1 - b * y1)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                (x1, y1, v1), (x2, y2, v2), (x3, y3, v3) = pts[i], pts[j], pts[k]
                det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
                if abs(det) < 1e-9 * max(1.0, abs(x1) + abs(y1)) ** 2:
                    continue
                a = ((v2 - v1) * (y3 - y1) - (v3 - v1) * (y2 - y1)) / det
                b = ((x2 - x1) * (v3 - v1) - (x3 - x1) * (v2 - v1)) / det
                c = v1 - a * x1 - b * y1
                if all(a * x + b * y + c >= v - 1e-9 for (x, y, v) in pts):
                    planes.append((a, b, c))
    if not planes:
        # all lifted points coplanar-ish; one least-squares plane suffices
        A = np.array([[x, y, 1.0] for (x, y, _) in pts])
        v = np.array([v for (_, _, v) in pts])
        sol, *_ = np.linalg.lstsq(A, v, rcond=None)
        planes.append((float(sol[0]), float(sol[1]), float(sol[2]) + 1e-9))
    return planes


def _envelope_value(planes, x, y):
    return min(a * x + b * y + c for (a, b, c) in planes)


def _concavity_uplift(curve, planes, samples):
    """Largest shortfall of the envelope below the curve over sample points.

    ``samples`` yields (z, y, ratio); the returned uplift (>= 0, plus a small
    safety margin) restores the upper-bound property on the sampled region.
    """
    gap = 0.0
    for (z, y, ratio) in samples:
        short = curve.value(ratio) - _envelope_value(planes, z, y)
        if short > gap:
            gap = short
    return gap * (1.0 + 1e-9) + 1e-9 if gap > 0.0 else 0.0


def _polygon_samples(poly, grid=8):
    """Fan-triangulated barycentric grid over a convex polygon."""
    out = []
    x0, y0 = poly[0]
    for i in range(1, len(poly) - 1):
        x1, y1 = poly[i]
        x2, y2 = poly[i + 1]
        for a in range(grid + 1):
            for b in range(grid + 1 - a):
                w0 = a / grid
                w1 = b / grid
                w2 = 1.0 - w0 - w1
                out.append((w0 * x0 + w1 * x1 + w2 * x2,
                            w0 * y0 + w1 * y1 + w2 * y2))
    return out


def _clip_polygon(poly, a, b, c):
    """Sutherland-Hodgman clip of polygon to half-plane a*x + b*y <= c."""
    out = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        pin = a * px + b * py <= c + 1e-12
        qin = a * qx + b * qy <= c + 1e-12
        if pin:
            out.append((px, py))
        if pin != qin:
            denom = a * (qx - px) + b * (qy - py)
            if abs(denom) > 1e-15:
                t = (c - a * px - b * py) / denom
                out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def _dedup(poly):
    out = []
    for p in poly:
        if not any(abs(p[0] - q[0]) < 1e-9 and abs(p[1] - q[1]) < 1e-9 for q in out):
            out.append(p)
    return out


def _district_box(inst, spec, j, boxes, r_out=None):
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    U = inst.big_m()
    _, r_max = _node_ratio_range(inst, term)
    z_hi = min(U, float(den.sum()))
    y_hi = min(U * max(1.0, r_max), float(num.sum()))
    box = (0.0, z_hi, 0.0, y_hi)
    if boxes is not None:
        z_lo, z_hi2, y_lo, y_hi2 = boxes[j]
        box = (max(0.0, z_lo), min(z_hi, z_hi2), max(0.0, y_lo), min(y_hi, y_hi2))
    if r_out is not None:
        box = (box[0], min(box[1], r_out), box[2], min(box[3], r_out))
    return box


def build_loge_pwl(inst, spec, nu, bs=None, boxes=None, r_in=None,
                   r_out=None) -> RelaxationBuild:
    """2-D piecewise-linear upper bound with logarithmically many binaries.

    The (denominator, numerator) plane is sliced by rays at breakpoint ratios
    (clipped to each district's bound box); each slice polygon carries curve
    values at its vertices, selected through reflective-Gray-code labels so
    adjacent slices share one bit.  ``nu`` binaries give up to 2^nu slices.
    """
    if not spec.single_ratio:
        raise ValueError("loge requires a single ratio objective")
    if nu < 0:
        raise ValueError("nu must be >= 0")
    curve = spec.curve
    term = spec.terms[0]
    r_node_lo, r_node_hi = _node_ratio_range(inst, term)

    model, x_ids = _base(inst, "loge_pwl", fix_first=True)
    num, den = _term_coeffs(inst, term)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    z_ids = _aggregates(model, inst, x_ids, den, "z")

    f_ids = []
    for j in range(inst.k):
        z_lo, z_hi, y_lo, y_hi = _district_box(inst, spec, j, boxes, r_out)
        r_lo = max(r_node_lo, y_lo / z_hi if z_hi > 0 else 0.0)
        r_hi = min(r_node_hi, y_hi / z_lo if z_lo > 0 else INF)
        if not r_lo < r_hi:
            r_lo, r_hi = r_node_lo, r_node_hi
        if bs is not None:
            rays = [r for r in bs.points if r_lo < r < r_hi]
        else:
            rays = list(np.linspace(r_lo, r_hi, 2 ** nu + 1))[1:-1]
        # box corner ratios keep slice polygons inside single box edges
        for corner in ((y_lo / z_lo if z_lo > 0 else None),
                       (y_hi / z_hi if z_hi > 0 else None)):
            if corner is not None and r_lo < corner < r_hi:
                rays.append(corner)
        merged = []
        for r in sorted([r_lo] + rays + [r_hi]):
            if not merged or r - merged[-1] > 1e-12 * max(1.0, abs(r)):
                merged.append(r)
        merged[-1] = r_hi
        rays = merged
        while len(rays) - 1 > 2 ** nu:
            # thin interior rays to honor the bit budget
            interior = rays[1:-1]
            drop = min(range(len(interior)),
                       key=lambda t: rays[t + 2] - rays[t])
            rays.pop(drop + 1)
        n_slice = len(rays) - 1
        if n_slice < 1:
            raise ValueError(f"district {j}: empty ratio range")

        box_poly = [(z_lo, y_lo), (z_hi, y_lo), (z_hi, y_hi), (z_lo, y_hi)]
        vertices = []          # (z, y, value), per-slice copies
        slice_members = []     # vertex indices per slice
        for s in range(n_slice):
            lo_r, hi_r = rays[s], rays[s + 1]
            poly = _clip_polygon(box_poly, lo_r, -1.0, 0.0)     # y >= lo_r * z
            poly = _clip_polygon(poly, -hi_r, 1.0, 0.0)         # y <= hi_r * z
            poly = _dedup(poly)
            vals = []
            for (px, py) in poly:
                ratio = min(max(py / px, lo_r), hi_r) if px > 1e-12 else hi_r
                vals.append(curve.value(ratio))
            if poly:
                # lift the vertex values where the chord envelope dips below
                # the curve, keeping every slice a true upper bound
                planes = _upper_facets(poly, vals)
                samples = [(px, py, py / px) for (px, py)
                           in _polygon_samples(poly) if px > 1e-12]
                uplift = _concavity_uplift(curve, planes, samples)
                vals = [v + uplift for v in vals]
            members = []
            for (px, py), v in zip(poly, vals):
                members.append(len(vertices))
                vertices.append((px, py, v))
            slice_members.append(members)

        fid = model.add_var(kind="continuous", lower=0.0, upper=1.0, name=f"f_{j}")
        f_ids.append(fid)
        lam = [model.add_var(kind="continuous", lower=0.0, upper=1.0,
                             name=f"lam_{j}_{v}") for v in range(len(vertices))]
        model.add_constraint([(l, 1.0) for l in lam], "=", 1.0, tag=f"loge_hull[{j}]")
        model.add_constraint([(z_ids[j], 1.0)] + [(lam[v], -vertices[v][0])
                                                  for v in range(len(vertices))],
                             "=", 0.0, tag=f"loge_z[{j}]")
        model.add_constraint([(y_ids[j], 1.0)] + [(lam[v], -vertices[v][1])
                                                  for v in range(len(vertices))],
                             "=", 0.0, tag=f"loge_y[{j}]")
        model.add_constraint([(fid, 1.0)] + [(lam[v], -vertices[v][2])
                                             for v in range(len(vertices))],
                             "<=", 0.0, tag=f"loge_f[{j}]")

        if nu >= 1 and n_slice > 1:
            codes = [gray(s, nu) for s in range(n_slice)]
            d_ids = [model.add_var(kind="binary", name=f"loge_delta_{j}_{t}",
                                   priority=2)
                     for t in range(nu)]
            for t in range(nu):
                zero_side, one_side = [], []
                for s in range(n_slice):
                    side = one_side if codes[s][t] else zero_side
                    side.extend(slice_members[s])
                if one_side:
                    model.add_constraint([(lam[v], 1.0) for v in one_side]
                                         + [(d_ids[t], -1.0)], "<=", 0.0,
                                         tag=f"loge_sel1[{j},{t}]")
                if zero_side:
                    model.add_constraint([(lam[v], 1.0) for v in zero_side]
                                         + [(d_ids[t], 1.0)], "<=", 1.0,
                                         tag=f"loge_sel0[{j},{t}]")

    model.set_objective({fid: 1.0 for fid in f_ids})
    return RelaxationBuild(family="loge_pwl", model=model, x_ids=x_ids,
                           f_ids=f_ids, num_ids=[y_ids], den_ids=[z_ids])


def build_bn_pwl(inst, spec, nu, boxes=None) -> RelaxationBuild:
    """Rotation-based 2-D piecewise-linear upper bound.

    ``nu`` halving rotations fold the (denominator, numerator) point into a
    thin wedge; binaries record the reflections and spell out the reflective
    Gray code of the slice that contained the point.  Per-slice curve caps
    are activated through truncated support sets of the code.
    """
    if not spec.single_ratio:
        raise ValueError("bn requires a single ratio objective")
    if nu < 1:
        raise ValueError("nu must be >= 1")
    curve = spec.curve
    term = spec.terms[0]
    num, den = _term_coeffs(inst, term)
    mask = den > 0
    if (num[mask] > den[mask]).any() or (num[~mask] > 0).any():
        raise ValueError("bn needs numerator <= denominator on every node")

    model, x_ids = _base(inst, "bn_pwl", fix_first=True)
    y_ids = _aggregates(model, inst, x_ids, num, "y")
    z_ids = _aggregates(model, inst, x_ids, den, "z")
    U = inst.big_m()
    norm_bound = math.sqrt(2.0) * U
    r_inner = float(np.sqrt(num ** 2 + den ** 2).min())

    wedge = math.pi / (4.0 * 2.0 ** nu)
    outer = norm_bound / math.cos(wedge / 2.0) * (1.0 + 1e-9)
    corners = [
        (outer, 0.0),
        (r_inner, 0.0),
        (outer * math.cos(wedge), outer * math.sin(wedge)),
        (r_inner * math.cos(wedge), r_inner * math.sin(wedge)),
    ]

    def slice_cap_values(s):
        """Corner values for slice s, lifted to cover the curve on the
        slice's folded preimage (chords undershoot where the curve is
        concave)."""
        lo_ang, hi_ang = slice_angles(s, nu)
        lo_ang = max(lo_ang, 0.0)
        v_lo = curve.value(math.tan(lo_ang))
        v_hi = curve.value(math.tan(hi_ang))
        flipped = s % 2 == 1
        at_zero = v_hi if flipped else v_lo
        at_wedge = v_lo if flipped else v_hi
        f_vals = (at_zero, at_zero, at_wedge, at_wedge)
        planes = _upper_facets(corners, f_vals)
        samples = []
        radii = np.linspace(r_inner, norm_bound, 7) if r_inner < norm_bound \
            else [r_inner]
        for alpha in np.linspace(0.0, wedge, 25):
            theta = hi_ang - alpha if flipped else lo_ang + alpha
            ratio = math.tan(theta)
            ca, sa = math.cos(alpha), math.sin(alpha)
            for r in radii:
                samples.append((r * ca, r * sa, ratio))
        uplift = _concavity_uplift(curve, planes, samples)
        return tuple(v + uplift for v in f_vals)

    cap_values = [slice_cap_values(s) for s in range(2 ** nu)]
    f_ids = []
    for j in range(inst.k):
        xi_prev = model.add_var(kind="continuous", lower=0.0, upper=norm_bound,
                                name=f"xi_{j}_0")
        eta_prev = model.add_var(kind="continuous", lower=0.0, upper=norm_bound,
                                 name=f"eta_{j}_0")
        model.add_constraint([(xi_prev, 1.0), (z_ids[j], -1.0)], "=", 0.0,
                             tag=f"bn_init_xi[{j}]")
        model.add_constraint([(eta_prev, 1.0), (y_ids[j], -1.0)], "=", 0.0,
                             tag=f"bn_init_eta[{j}]")
        d_ids = []
        for stage in range(1, nu + 1):
            theta = math.pi / (4.0 * 2.0 ** stage)
            cos_t, sin_t = math.cos(theta), math.sin(theta)
            xi = model.add_var(kind="continuous", lower=0.0, upper=norm_bound,
                               name=f"xi_{j}_{stage}")
            eta_t = model.add_var(kind="continuous", lower=-norm_bound,
                                  upper=norm_bound, name=f"etat_{j}_{stage}")
            eta = model.add_var(kind="continuous", lower=0.0, upper=norm_bound,
                                name=f"eta_{j}_{stage}")
            dlt = model.add_var(kind="binary", name=f"bn_delta_{j}_{stage}",
                                priority=2)
            d_ids.append(dlt)
            model.add_constraint([(xi, 1.0), (xi_prev, -cos_t), (eta_prev, -sin_t)],
                                 "=", 0.0, tag=f"bn_rot_xi[{j},{stage}]")
            model.add_constraint([(eta_t, 1.0), (xi_prev, sin_t), (eta_prev, -cos_t)],
                                 "=", 0.0, tag=f"bn_rot_eta[{j},{stage}]")
            # eta = |eta_t| with the reflection bit: delta = 1 iff eta_t < 0
            model.add_constraint([(eta, 1.0), (eta_t, -1.0)], ">=", 0.0,
                                 tag=f"bn_abs_a[{j},{stage}]")
            model.add_constraint([(eta, 1.0), (eta_t, 1.0)], ">=", 0.0,
                                 tag=f"bn_abs_b[{j},{stage}]")
            model.add_constraint([(eta, 1.0), (eta_t, -1.0), (dlt, -norm_bound)],
                                 "<=", 0.0, tag=f"bn_abs_c[{j},{stage}]")
            model.add_constraint([(eta, 1.0), (eta_t, 1.0), (dlt, norm_bound)],
                                 "<=", norm_bound, tag=f"bn_abs_d[{j},{stage}]")
            xi_prev, eta_prev = xi, eta

        lam = [model.add_var(kind="continuous", lower=0.0, upper=1.0,
                             name=f"bn_lam_{j}_{v}") for v in range(4)]
        model.add_constraint([(l, 1.0) for l in lam], "=", 1.0, tag=f"bn_hull[{j}]")
        model.add_constraint([(xi_prev, 1.0)] + [(lam[v], -corners[v][0])
                                                 for v in range(4)],
                             "=", 0.0, tag=f"bn_xi_comb[{j}]")
        model.add_constraint([(eta_prev, 1.0)] + [(lam[v], -corners[v][1])
                                                  for v in range(4)],
                             "=", 0.0, tag=f"bn_eta_comb[{j}]")

        fid = model.add_var(kind="continuous", lower=0.0, upper=1.0, name=f"f_{j}")
        f_ids.append(fid)
        for s in range(2 ** nu):
            code = gray(s, nu)
            f_vals = cap_values[s]
            terms = [(fid, 1.0)] + [(lam[v], -f_vals[v]) for v in range(4)]
            rhs = 0.0
            for t in strengthened_support(code):
                if code[t - 1] == 0:
                    terms.append((d_ids[t - 1], -1.0))
                else:
                    terms.append((d_ids[t - 1], 1.0))
                    rhs += 1.0
            model.add_constraint(terms, "<=", rhs, tag=f"bn_f[{j},{s}]")

    model.set_objective({fid: 1.0 for fid in f_ids})
    return RelaxationBuild(family="bn_pwl", model=model, x_ids=x_ids,
                           f_ids=f_ids, num_ids=[y_ids], den_ids=[z_ids])
