"""Dense bounded-variable primal simplex (maximization).

Two phases with artificial variables, Dantzig pricing with a Bland fallback
once stalling is detected, and periodic basis refactorization to keep the
explicit inverse honest.  Sized for desk-scale models (hundreds of rows).
"""

from __future__ import annotations

import numpy as np

NB_LB, NB_UB, BASIC = 0, 1, 2

TOL_RC = 1e-9        # reduced cost threshold
TOL_PIV = 1e-10      # smallest acceptable pivot magnitude
REFRESH_EVERY = 500
STALL_LIMIT = 1000   # degenerate iterations before Bland's rule kicks in
MAX_ITER = 200_000


class LpResult:
    __slots__ = ("status", "x", "objective")

    def __init__(self, status, x=None, objective=None):
        self.status = status
        self.x = x
        self.objective = objective


class SimplexError(RuntimeError):
    pass


def solve_lp(c, A, senses, rhs, lb, ub):
    """Maximize c@x subject to A x (<=,=,>=) rhs and lb <= x <= ub.

    Every lower bound must be finite; upper bounds may be +inf.
    Returns an LpResult with status 'optimal', 'infeasible' or 'unbounded'.
    """
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n = len(c)
    A = np.asarray(A, dtype=float).reshape(-1, n) if n else np.zeros((len(rhs), 0))
    rhs = np.asarray(rhs, dtype=float)
    m = A.shape[0]
    if np.any(~np.isfinite(lb)):
        raise SimplexError("all lower bounds must be finite")
    if np.any(lb > ub + 1e-12):
        return LpResult("infeasible")
    if m == 0:
        if np.any((c > TOL_RC) & ~np.isfinite(ub)):
            return LpResult("unbounded")
        x = np.where(c > TOL_RC, ub, lb)
        return LpResult("optimal", x, float(c @ x))

    # append slack columns; every row becomes an equality
    cols = [A]
    slack_bounds = []
    for i, s in enumerate(senses):
        if s == "=":
            continue
        col = np.zeros((m, 1))
        col[i, 0] = 1.0 if s == "<=" else -1.0
        cols.append(col)
        slack_bounds.append((0.0, np.inf))
    T = np.hstack(cols)
    lo = np.concatenate([lb, [b[0] for b in slack_bounds]])
    hi = np.concatenate([ub, [b[1] for b in slack_bounds]])
    nt = T.shape[1]

    # nonbasic start at lower bounds, artificials absorb the residual
    x = lo.copy()
    resid = rhs - T @ x
    art = np.zeros((m, m))
    for i in range(m):
        art[i, i] = 1.0 if resid[i] >= 0 else -1.0
    T = np.hstack([T, art])
    lo = np.concatenate([lo, np.zeros(m)])
    hi = np.concatenate([hi, np.full(m, np.inf)])
    x = np.concatenate([x, np.abs(resid)])
    status = np.full(T.shape[1], NB_LB, dtype=np.int8)
    basis = np.arange(nt, nt + m)
    status[basis] = BASIC
    binv = np.diag(np.diag(art).copy())  # art is its own inverse (diagonal +-1)

    phase1 = np.zeros(T.shape[1])
    phase1[nt:] = -1.0
    out = _iterate(phase1, T, rhs, lo, hi, x, status, basis, binv)
    if out != "optimal":
        raise SimplexError("phase 1 terminated abnormally")
    if float(phase1 @ x) < -1e-7:
        return LpResult("infeasible")
    hi[nt:] = 0.0  # artificials pinned for phase 2
    binv[:] = _refresh(T, rhs, lo, hi, x, status, basis)

    full_c = np.zeros(T.shape[1])
    full_c[:n] = c
    out = _iterate(full_c, T, rhs, lo, hi, x, status, basis, binv)
    if out == "unbounded":
        return LpResult("unbounded")
    xs = x[:n].copy()
    return LpResult("optimal", xs, float(c @ xs))


def _refresh(T, rhs, lo, hi, x, status, basis):
    try:
        binv = np.linalg.inv(T[:, basis])
    except np.linalg.LinAlgError as exc:
        raise SimplexError(f"singular basis: {exc}") from exc
    nb = status != BASIC
    x[nb] = np.where(status[nb] == NB_UB, hi[nb], lo[nb])
    x[basis] = binv @ (rhs - T[:, nb] @ x[nb])
    return binv


def _iterate(c, T, rhs, lo, hi, x, status, basis, binv):
    m = T.shape[0]
    fixed = lo == hi
    best = -np.inf
    stall = 0
    bland = False
    for it in range(MAX_ITER):
        if it and it % REFRESH_EVERY == 0:
            binv[:] = _refresh(T, rhs, lo, hi, x, status, basis)
        y = c[basis] @ binv
        reduced = c - y @ T
        cand = (((status == NB_LB) & (reduced > TOL_RC))
                | ((status == NB_UB) & (reduced < -TOL_RC))) & ~fixed
        if not cand.any():
            return "optimal"
        if bland:
            q = int(np.flatnonzero(cand)[0])
        else:
            q = int(np.argmax(np.where(cand, np.abs(reduced), -1.0)))
        direction = 1.0 if status[q] == NB_LB else -1.0
        d = binv @ T[:, q]
        coefs = direction * d
        xb = x[basis]

        # ratio test: how far can x[q] move before a basic variable or its own
        # opposite bound blocks it
        flip = hi[q] - lo[q]
        rooms = np.full(m, np.inf)
        dec = coefs > TOL_PIV
        inc = coefs < -TOL_PIV
        rooms[dec] = (xb[dec] - lo[basis[dec]]) / coefs[dec]
        ub_b = hi[basis]
        inc &= np.isfinite(ub_b)
        rooms[inc] = (ub_b[inc] - xb[inc]) / (-coefs[inc])
        np.maximum(rooms, 0.0, out=rooms)
        min_room = rooms.min() if m else np.inf
        limit = min(flip, min_room)
        if np.isinf(limit):
            return "unbounded"

        if limit > 1e-12:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall > STALL_LIMIT:
                bland = True

        if np.isfinite(flip) and flip <= min_room + 1e-12:
            # entering variable runs to its opposite bound; basis unchanged
            x[q] = hi[q] if direction > 0 else lo[q]
            x[basis] = xb - coefs * flip
            status[q] = NB_UB if direction > 0 else NB_LB
            continue

        ties = np.flatnonzero(rooms <= min_room + 1e-12)
        if bland:
            leave_pos = int(ties[np.argmin(basis[ties])])
        else:
            leave_pos = int(ties[np.argmax(np.abs(coefs[ties]))])
        leave = basis[leave_pos]
        x[q] += direction * limit
        x[basis] = xb - coefs * limit
        if coefs[leave_pos] > 0:
            x[leave] = lo[leave]
            status[leave] = NB_LB
        else:
            x[leave] = hi[leave]
            status[leave] = NB_UB
        status[q] = BASIC
        basis[leave_pos] = q
        piv = d[leave_pos]
        if abs(piv) < TOL_PIV:
            binv[:] = _refresh(T, rhs, lo, hi, x, status, basis)
            continue
        binv[leave_pos, :] /= piv
        rows = np.arange(m) != leave_pos
        binv[rows, :] -= np.outer(d[rows], binv[leave_pos, :])
    raise SimplexError("iteration limit exceeded")
