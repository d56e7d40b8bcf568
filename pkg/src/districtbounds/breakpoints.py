"""Breakpoint sequences for threshold relaxations and their error metrics.

Two placement schemes for a single increasing curve: spreading the curve
values evenly (minimal worst-case step height) and minimizing the expected
overshoot under a uniformly distributed ratio.  A geometric scheme for
multiplicative error guarantees and the two-ratio grid with its precomputed
curve table round out the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BreakpointSet:
    """Strictly increasing breakpoints b_0 < ... < b_l over a curve's domain."""

    points: tuple
    curve: object = None
    converged: bool = True

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def ell(self):
        return len(self.points) - 1

    @property
    def domain(self):
        return self.points[0], self.points[-1]

    def values(self):
        """Curve values at every breakpoint."""
        return tuple(self.curve.value(b) for b in self.points)


def step_max_breakpoints(curve, b0: float, bl: float, ell: int) -> BreakpointSet:
    """Breakpoints with equal curve increments: worst-case step error is
    (value(bl) - value(b0)) / ell, which no other placement beats."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not b0 < bl:
        raise ValueError("need b0 < bl")
    lo, hi = curve.value(b0), curve.value(bl)
    eps = (hi - lo) / ell
    pts = [b0]
    for t in range(1, ell):
        pts.append(curve.inverse(lo + t * eps))
    pts.append(bl)
    return BreakpointSet(points=tuple(pts), curve=curve)


def _isotonic(y):
    # pool-adjacent-violators, unweighted
    vals, counts = [], []
    for v in y:
        vals.append(v)
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    out = np.empty(len(y))
    pos = 0
    for v, c in zip(vals, counts):
        out[pos:pos + c] = v
        pos += c
    return out


def step_exp_breakpoints(curve, b0: float, bl: float, ell: int,
                         tol: float = 1e-8, max_iter: int = 10_000) -> BreakpointSet:
    """Interior breakpoints minimizing the uniform-ratio expected overshoot.

    Minimizes sum_t value(b_t) * (b_t - b_{t-1}) with fixed endpoints by
    projected gradient descent (Barzilai-Borwein trial step, backtracking,
    isotonic projection).  A result that failed the gradient tolerance is
    returned with ``converged=False``.
    """
    if ell < 2:
        raise ValueError("ell must be >= 2")
    if not b0 < bl:
        raise ValueError("need b0 < bl")

    def fval(x):
        b = np.concatenate(([b0], x, [bl]))
        v = np.array([curve.value(t) for t in b[1:]])
        return float(np.dot(v, np.diff(b)))

    def grad(x):
        b = np.concatenate(([b0], x, [bl]))
        g = np.empty(len(x))
        for idx in range(len(x)):
            t = idx + 1
            g[idx] = (curve.derivative(b[t]) * (b[t] - b[t - 1])
                      + curve.value(b[t]) - curve.value(b[t + 1]))
        return g

    def project(x):
        return np.clip(_isotonic(x), b0, bl)

    x = np.linspace(b0, bl, ell + 1)[1:-1]
    f = fval(x)
    g = grad(x)
    step = 0.1 * (bl - b0)
    converged = False
    for _ in range(max_iter):
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        alpha = step
        for _ in range(60):
            x_new = project(x - alpha * g)
            f_new = fval(x_new)
            dx = x_new - x
            if f_new <= f + 1e-4 * float(np.dot(g, dx)) or not dx.any():
                break
            alpha *= 0.5
        if not (x_new - x).any():
            # stuck on the boundary of the monotone cone
            break
        g_new = grad(x_new)
        dx, dg = x_new - x, g_new - g
        dxdg = float(np.dot(dx, dg))
        step = float(np.dot(dx, dx)) / dxdg if dxdg > 1e-16 else alpha * 2.0
        step = min(max(step, 1e-12), 1e3)
        x, f, g = x_new, f_new, g_new
    else:
        converged = np.max(np.abs(grad(x))) <= tol

    pts = np.concatenate(([b0], x, [bl]))
    # projection ties are non-generic; separate minimally if they occur
    for i in range(1, len(pts)):
        if pts[i] <= pts[i - 1]:
            pts[i] = np.nextafter(pts[i - 1], bl)
    return BreakpointSet(points=tuple(pts), curve=curve, converged=bool(converged))


def max_error(curve, bs: BreakpointSet) -> float:
    """Largest curve increment between consecutive breakpoints."""
    vals = [curve.value(b) for b in bs.points]
    return max(b - a for a, b in zip(vals, vals[1:]))


def _adaptive_simpson(f, a, b, tol):
    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)
                + recurse(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1))

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 50)


def curve_integral(curve, a: float, b: float, tol: float = 1e-9) -> float:
    """Integral of the curve over [a, b] by adaptive Simpson quadrature."""
    return _adaptive_simpson(curve.value, a, b, tol)


def expected_error(curve, bs: BreakpointSet) -> float:
    """Mean overshoot of the step approximation under a uniform ratio."""
    b = bs.points
    riemann = sum(curve.value(b[t]) * (b[t] - b[t - 1]) for t in range(1, len(b)))
    return (riemann - curve_integral(curve, b[0], b[-1])) / (b[-1] - b[0])


def multiplicative_breakpoints(a: float, b: float, ell: int):
    """Geometric breakpoints b_i = a * (b/a)^(i/ell).

    Returns the set together with gamma = min_i b_i^2 / b_{i+1}^2, the
    multiplicative error guarantee; the geometric spacing maximizes it.
    """
    if a <= 0:
        raise ValueError("lower endpoint must be positive")
    if not (a < b and ell >= 1):
        raise ValueError("need 0 < a < b and ell >= 1")
    ratio = b / a
    pts = tuple(a * ratio ** (i / ell) for i in range(ell + 1))
    gamma = min((pts[i] / pts[i + 1]) ** 2 for i in range(ell))
    return BreakpointSet(points=pts), gamma


@dataclass(frozen=True)
class MultiRatioGrid:
    """Per-ratio breakpoints and the precomputed curve table for two ratios."""

    sets: tuple                 # one BreakpointSet per ratio term
    psi: np.ndarray             # psi[s, t] = curve(b1_s + b2_t), s,t in 0..ell
    curve: object

    @property
    def table(self):
        """The (ell x ell) block actually indexed by the relaxation."""
        return self.psi[1:, 1:]

    def delta(self) -> float:
        """Worst step of the grid approximation over all index vectors."""
        p = self.psi
        return float(np.max(p[1:, 1:] - p[:-1, :-1]))


def multi_ratio_grid(curve, domains, ells) -> MultiRatioGrid:
    """Evenly spaced breakpoints per ratio plus the summed-curve table."""
    if len(domains) != 2:
        raise ValueError("the grid supports exactly two ratio terms")
    if isinstance(ells, int):
        ells = (ells, ells)
    if ells[0] != ells[1]:
        raise ValueError("both ratios must use the same number of breakpoints")
    sets = []
    for (lo, hi), ell in zip(domains, ells):
        if not (lo < hi and ell >= 1):
            raise ValueError(f"bad domain ({lo}, {hi}) or ell {ell}")
        sets.append(BreakpointSet(points=tuple(np.linspace(lo, hi, ell + 1)), curve=curve))
    b1 = np.array(sets[0].points)
    b2 = np.array(sets[1].points)
    psi = np.array([[curve.value(x + y) for y in b2] for x in b1])
    return MultiRatioGrid(sets=tuple(sets), psi=psi, curve=curve)
