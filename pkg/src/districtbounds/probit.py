"""Increasing probit objective curves and true-objective evaluation.

Each curve is ``value(r) = Phi(beta * r - beta0)`` with ``Phi`` the standard
normal CDF.  The built-in parameterizations:

* ``bvap``      -- chance of electing a Black representative from the
                   district's BVAP/VAP ratio (beta = 6.826, beta0 = 2.827).
* ``brh_rim``   -- Black + Hispanic combined score, rim-south parameters
                   (beta = 1, beta0 = -4.194; numerator 0.975*BVAP + 0.3*HVAP).
* ``brh_deep``  -- deep-south parameters (beta0 = -4.729, 1.044/0.3 weights).
* ``cpvi``      -- chance of electing a Democrat from the two-cycle vote-share
                   sum, Phi((50*x - 51.69) / 4.8).

Note the published brh intercepts make those curves saturate near 1 for any
nonnegative ratio; they are implemented exactly as given and callers should
treat brh results accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF via erfc; absolute error well below 1e-14."""
    return 0.5 * math.erfc(-z / SQRT2)


def std_normal_pdf(z: float) -> float:
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


@dataclass(frozen=True)
class ProbitCurve:
    """Increasing curve r -> Phi(beta*r - beta0)."""

    beta: float
    beta0: float
    kind: str = "custom"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive for an increasing curve, got {self.beta}")

    @property
    def center(self) -> float:
        """Ratio at which the curve crosses 1/2 (its antisymmetry point)."""
        return self.beta0 / self.beta

    def value(self, r: float) -> float:
        return std_normal_cdf(self.beta * r - self.beta0)

    def derivative(self, r: float) -> float:
        return self.beta * std_normal_pdf(self.beta * r - self.beta0)

    def inverse(self, p: float) -> float:
        """Ratio r with value(r) = p, by bisection (monotone, 60 rounds)."""
        if not (0.0 < p < 1.0):
            raise ValueError(f"inverse requires 0 < p < 1, got {p}")
        # 40 sigma brackets every double-precision probability
        lo = (self.beta0 - 40.0) / self.beta
        hi = (self.beta0 + 40.0) / self.beta
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.value(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def phi(curve: ProbitCurve, r: float) -> float:
    return curve.value(r)


def phi_inverse(curve: ProbitCurve, p: float) -> float:
    return curve.inverse(p)


def phi_derivative(curve: ProbitCurve, r: float) -> float:
    return curve.derivative(r)


# -- objective specifications --------------------------------------------------

@dataclass(frozen=True)
class RatioTerm:
    """One numerator/denominator pair, both linear in node fields."""

    numerator: tuple          # ((field, coefficient), ...)
    denominator: str

    def numer_of(self, node) -> float:
        return sum(c * getattr(node, f) for f, c in self.numerator)

    def denom_of(self, node) -> float:
        return getattr(node, self.denominator)


@dataclass(frozen=True)
class ObjectiveSpec:
    """A curve applied to a sum of district-aggregated ratio terms."""

    kind: str
    curve: ProbitCurve
    terms: tuple

    @property
    def single_ratio(self) -> bool:
        return len(self.terms) == 1


_BRH_WEIGHTS = {
    "brh_rim": (-4.194, 0.975, 0.3),
    "brh_deep": (-4.729, 1.044, 0.3),
}


def objective_spec(kind: str, beta: float = None, beta0: float = None) -> ObjectiveSpec:
    """Factory for the built-in objectives; beta/beta0 may be overridden."""
    kind = kind.replace("-", "_")
    if kind == "bvap":
        curve = ProbitCurve(beta if beta is not None else 6.826,
                            beta0 if beta0 is not None else 2.827, "bvap")
        terms = (RatioTerm((("bvap", 1.0),), "vap"),)
    elif kind in _BRH_WEIGHTS:
        b0, wb, wh = _BRH_WEIGHTS[kind]
        curve = ProbitCurve(beta if beta is not None else 1.0,
                            beta0 if beta0 is not None else b0, kind)
        terms = (RatioTerm((("bvap", wb), ("hvap", wh)), "vap"),)
    elif kind == "cpvi":
        curve = ProbitCurve(beta if beta is not None else 50.0 / 4.8,
                            beta0 if beta0 is not None else 51.69 / 4.8, "cpvi")
        terms = (RatioTerm((("dv16", 1.0),), "tv16"),
                 RatioTerm((("dv20", 1.0),), "tv20"))
    else:
        raise ValueError(f"unknown objective kind {kind!r}")
    return ObjectiveSpec(kind=kind, curve=curve, terms=terms)


class DegenerateDistrictError(ValueError):
    """A district aggregated to a zero denominator."""


def district_ratio_parts(inst, members, spec: ObjectiveSpec):
    """Per-term (numerator, denominator) sums over a district's members."""
    parts = []
    for term in spec.terms:
        num = sum(term.numer_of(inst.nodes[i]) for i in members)
        den = sum(term.denom_of(inst.nodes[i]) for i in members)
        parts.append((num, den))
    return parts


def district_value(inst, members, spec: ObjectiveSpec, label=None) -> float:
    total = 0.0
    for (num, den), term in zip(district_ratio_parts(inst, members, spec), spec.terms):
        if den <= 0:
            where = "district" if label is None else f"district {label}"
            raise DegenerateDistrictError(
                f"{where} has zero {term.denominator}; objective undefined")
        total += num / den
    return spec.curve.value(total)


def true_objective(inst, assignment, spec: ObjectiveSpec) -> float:
    """Evaluate the exact objective of an assignment (sum over districts)."""
    total = 0.0
    for j, members in enumerate(assignment.districts(inst.k)):
        total += district_value(inst, members, spec, label=j)
    return total
