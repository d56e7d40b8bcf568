"""Exact-arithmetic simplex oracle for cross-checking the float LP solver.

Plain tableau simplex over Fractions with Bland's rule (terminating, slow,
and only meant for tiny random programs).  Bounds are handled as explicit
rows, all variables shifted to x >= 0.
"""

from fractions import Fraction


def _to_fraction(v):
    # exact conversion; callers wanting decimal semantics pass Fractions
    return v if isinstance(v, Fraction) else Fraction(v)


def solve_rational_lp(c, A, senses, b, lb, ub):
    """Maximize c@x s.t. A x (<=,=,>=) b, lb <= x <= ub. Finite bounds only.

    Returns (status, objective) with objective a Fraction for 'optimal'.
    """
    n = len(c)
    c = [_to_fraction(v) for v in c]
    A = [[_to_fraction(v) for v in row] for row in A]
    b = [_to_fraction(v) for v in b]
    lb = [_to_fraction(v) for v in lb]
    ub = [_to_fraction(v) for v in ub]

    # shift x = x' + lb, x' >= 0; add rows x' <= ub - lb
    rows, senses2, rhs = [], [], []
    for row, s, bv in zip(A, senses, b):
        rows.append(list(row))
        senses2.append(s)
        rhs.append(bv - sum(row[j] * lb[j] for j in range(n)))
    for j in range(n):
        r = [Fraction(0)] * n
        r[j] = Fraction(1)
        rows.append(r)
        senses2.append("<=")
        rhs.append(ub[j] - lb[j])
    const = sum(c[j] * lb[j] for j in range(n))

    # equalities become two inequalities; >= negated: all rows A x <= b
    ineq, rv = [], []
    for row, s, bv in zip(rows, senses2, rhs):
        if s in ("<=", "="):
            ineq.append(list(row))
            rv.append(bv)
        if s in (">=", "="):
            ineq.append([-v for v in row])
            rv.append(-bv)
    m = len(ineq)

    # phase 1 via big single artificial if some rhs negative
    # tableau: columns = n structural + m slacks (+1 artificial)
    neg = [i for i in range(m) if rv[i] < 0]
    ncols = n + m + (1 if neg else 0)
    T = [[Fraction(0)] * (ncols + 1) for _ in range(m)]
    for i in range(m):
        for j in range(n):
            T[i][j] = ineq[i][j]
        T[i][n + i] = Fraction(1)
        if neg:
            T[i][n + m] = Fraction(-1)
        T[i][ncols] = rv[i]
    basis = [n + i for i in range(m)]

    def pivot(T, basis, pr, pc):
        pv = T[pr][pc]
        T[pr] = [v / pv for v in T[pr]]
        for i in range(len(T)):
            if i != pr and T[i][pc] != 0:
                f = T[i][pc]
                T[i] = [a - f * bb for a, bb in zip(T[i], T[pr])]
        basis[pr] = pc

    def run(obj):
        # maximize obj over current tableau; Bland's rule
        while True:
            red = list(obj)
            zval = Fraction(0)
            for i, bi in enumerate(basis):
                f = obj[bi]
                if f != 0:
                    zval += f * T[i][ncols]
                    for j in range(ncols):
                        red[j] -= f * T[i][j]
            enter = -1
            for j in range(ncols):
                if red[j] > 0:
                    enter = j
                    break
            if enter < 0:
                return zval
            ratios = [(T[i][ncols] / T[i][enter], basis[i], i)
                      for i in range(m) if T[i][enter] > 0]
            if not ratios:
                return None  # unbounded
            ratios.sort(key=lambda t: (t[0], t[1]))
            pivot(T, basis, ratios[0][2], enter)

    if neg:
        # make artificial basic in the most negative row first
        worst = min(range(m), key=lambda i: rv[i])
        pivot(T, basis, worst, n + m)
        art_obj = [Fraction(0)] * ncols
        art_obj[n + m] = Fraction(-1)
        z = run(art_obj)
        if z is None or z < 0:
            return "infeasible", None
        if (n + m) in basis:
            i = basis.index(n + m)
            piv_col = next((j for j in range(n + m) if T[i][j] != 0), None)
            if piv_col is not None:
                pivot(T, basis, i, piv_col)

    obj = [Fraction(0)] * ncols
    for j in range(n):
        obj[j] = c[j]
    if neg:
        obj[n + m] = Fraction(-10**9)  # keep artificial out
    z = run(obj)
    if z is None:
        return "unbounded", None
    return "optimal", z + const
