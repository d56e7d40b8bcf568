"""Closed-form solver for the simplified boundaryless allocation problem:

    maximize sum_i f(x_i)  subject to  sum_i x_i = M,  x in [a, b]^n,

where f is continuous, strictly increasing, antisymmetric about a center c,
and concave above c.  Optimal solutions use at most three values {a, y, b};
the tangency point d_a of the chord from a pins the interior value, and the
integer problem reduces to comparing a constant number of rounded candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SigmoidFn:
    """An increasing S-curve on [a, b] given by value/derivative closures.

    ``c`` is the antisymmetry center: f(x) - f(c) = f(c) - f(2c - x).
    The shape assumptions are spot-checked numerically at construction.
    """

    value: object
    derivative: object
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a < self.c < self.b):
            raise ValueError(f"center {self.c} must lie strictly inside "
                             f"[{self.a}, {self.b}]")
        f, c = self.value, self.c
        span = self.b - self.a
        for i in range(1, 8):
            t = span * i / 16.0
            lhs = f(c + t) - f(c)
            rhs = f(c) - f(c - t)
            if abs(lhs - rhs) > 1e-10 * max(1.0, abs(lhs)):
                raise ValueError(f"not antisymmetric about {c}: offset {t}")
        # strict increase is assumed; floats may tie deep in the tails
        samples = [self.a + span * i / 16.0 for i in range(17)]
        vals = [f(s) for s in samples]
        if any(v2 < v1 for v1, v2 in zip(vals, vals[1:])):
            raise ValueError("function is not increasing on [a, b]")

    @classmethod
    def from_curve(cls, curve, a: float, b: float):
        return cls(value=curve.value, derivative=curve.derivative,
                   a=a, b=b, c=curve.center)


@dataclass(frozen=True)
class KSolution:
    k_a: float
    k_b: float
    k_y: float
    y: float            # interior value; meaningless when k_y == 0
    objective: float

    def counts(self):
        return self.k_a, self.k_b, self.k_y


def d_r(f: SigmoidFn, r: float, tol: float = 1e-10) -> float:
    """The unique y with f'(y) = (f(y) - f(r)) / (y - r).

    Lies between the mirror point 2c - r and c (on whichever side of c is
    opposite to r).  Found by bisection on g(x) = f(x) + (r-x) f'(x) - f(r).
    """
    c = f.c
    if abs(r - c) < 1e-12:
        raise ValueError("d_r is undefined at the center")

    def g(x):
        return f.value(x) + (r - x) * f.derivative(x) - f.value(r)

    if r > c:
        lo, hi = 2.0 * c - r, c
    else:
        lo, hi = c, 2.0 * c - r
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise ValueError(f"no sign change on bracket ({lo}, {hi})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo < tol:
            return mid
        if (gm > 0) == (ghi > 0):
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def _value(f, k_a, k_b, k_y, y):
    total = f.value(f.a) * k_a + f.value(f.b) * k_b
    if k_y > 0:
        total += f.value(y) * k_y
    return total


def continuous_optimum(f: SigmoidFn, a: float, b: float, n: int, M: float) -> KSolution:
    """Optimal fractional allocation.

    Above the tipping mass d_a * n everything sits at the common interior
    value M / n; below it, the mass splits between the floor a and the
    tangency value d_a.
    """
    _check_problem(f, a, b, n, M)
    da = d_r(f, a)
    if da >= b:
        # the tangency exceeds the ceiling: endpoints only
        k_b = (M - a * n) / (b - a)
        k_a = n - k_b
        return KSolution(k_a, k_b, 0.0, b, _value(f, k_a, k_b, 0.0, b))
    if M >= da * n:
        y = M / n
        return KSolution(0.0, 0.0, float(n), y, _value(f, 0.0, 0.0, n, y))
    k_a = (da * n - M) / (da - a)
    k_y = (M - a * n) / (da - a)
    return KSolution(k_a, 0.0, k_y, da, _value(f, k_a, 0.0, k_y, da))


def _candidate(f, a, b, n, M, k_a, k_b, tol=1e-9):
    """Fill k_y and y from the two equality constraints; None if infeasible."""
    if k_a < 0 or k_b < 0 or k_a + k_b > n:
        return None
    k_y = n - k_a - k_b
    rest = M - a * k_a - b * k_b
    if k_y == 0:
        if abs(rest) > tol * max(1.0, abs(M)):
            return None
        return KSolution(float(k_a), float(k_b), 0.0, a, _value(f, k_a, k_b, 0, a))
    y = rest / k_y
    if y < a - tol or y > b + tol:
        return None
    y = min(max(y, a), b)
    return KSolution(float(k_a), float(k_b), float(k_y), y,
                     _value(f, k_a, k_b, k_y, y))


def integer_optimum(f: SigmoidFn, a: float, b: float, n: int, M: float) -> KSolution:
    """Optimal allocation with integer multiplicities.

    When M >= d_a * n the all-interior solution is already integral.  Below
    that the optimum is among a constant number of rounded splits: the
    endpoint split, the two roundings of the tangency split against a, and,
    when the center sits close enough to b that the tangency leaves the
    domain, the mirrored one-sided splits.  Infeasible candidates drop out.
    """
    _check_problem(f, a, b, n, M)
    da = d_r(f, a)
    if da < b and M >= da * n:
        y = M / n
        return KSolution(0.0, 0.0, float(n), y, _value(f, 0.0, 0.0, n, y))
    split_a = (b * n - M) / (b - a)
    split_b = (M - a * n) / (b - a)
    pairs = {
        (0, 0),
        (math.floor(split_a), math.floor(split_b)),
        (math.floor(split_a), 0),
        (math.ceil(split_a), 0),
        (0, math.floor(split_b)),
        (0, math.ceil(split_b)),
    }
    if da < b:
        tangency = (da * n - M) / (da - a)
        pairs.add((math.floor(tangency), 0))
        pairs.add((math.ceil(tangency), 0))
    db = d_r(f, b)
    if db > a:
        mirror = (M - db * n) / (b - db)
        pairs.add((0, math.floor(mirror)))
        pairs.add((0, math.ceil(mirror)))
    candidates = [_candidate(f, a, b, n, M, ka, kb) for ka, kb in pairs]
    feasible = [s for s in candidates if s is not None]
    if not feasible:
        raise AssertionError("no feasible candidate for a feasible mass")
    return max(feasible, key=lambda s: s.objective)


def brute_force_integer(f: SigmoidFn, a: float, b: float, n: int, M: float,
                        tol: float = 1e-9) -> KSolution:
    """Exhaustive search over every integer (k_a, k_b) pair."""
    _check_problem(f, a, b, n, M)
    best = None
    for k_a in range(n + 1):
        for k_b in range(n + 1 - k_a):
            sol = _candidate(f, a, b, n, M, k_a, k_b, tol)
            if sol is not None and (best is None or sol.objective > best.objective):
                best = sol
    if best is None:
        raise AssertionError("no feasible integer solution")
    return best


def _check_problem(f, a, b, n, M):
    if abs(a - f.a) > 1e-12 or abs(b - f.b) > 1e-12:
        raise ValueError("bounds must match the function's domain")
    if n < 1:
        raise ValueError("need at least one variable")
    if not (a * n - 1e-9 <= M <= b * n + 1e-9):
        raise ValueError(f"mass {M} outside feasible range [{a * n}, {b * n}]")
