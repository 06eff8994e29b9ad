"""Resolvent and heat-trace expansion terms for the model wedge.

The resolvent trace ``tr (Delta + z^2)^{-d}`` near the tip splits into three
families of terms:

* scaling terms ``z^{-l-1}`` whose coefficients need the full fiber resolvent at
  finite argument (emitted as placeholders, never evaluated);
* interior terms ``z^{-2d+m-2j}`` from finite-part integrals of ``sigma_j``;
* a single surviving log term ``z^{-2d+1} log z`` when ``m`` is odd.

The log term maps to ``c t^{-1/2} log t`` in the heat trace through the Mellin
pair ``Gamma(d)^{-1} int t^{d-1} e^{-t z^2} t^{-1/2} log t dt
= Gamma(d - 1/2)/Gamma(d) z^{1-2d} (psi(d - 1/2) - 2 log z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .chart_geometry import metric_inverse
from .errors import InvariantOrderError
from .heat_invariants import (MAX_ORDER, NORMALIZED, SigmaParams, gamma_factor,
                              scaled_fiber_integral)
from .wedge_geometry import WedgeModel

INTERIOR = "interior"
SAL_LOG = "sal_log"
SAL_SCALING = "sal_scaling"

# r at which r-invariant fiber integrals are evaluated; any r in (0, 1) gives the same value
_PROBE_R = 0.5


@dataclass(frozen=True)
class ExpansionTerm:
    power: Fraction
    has_log: bool
    coefficient: float | None
    origin: str
    variable: str = "z"
    finite_part_fired: bool = False

    @property
    def available(self) -> bool:
        return self.coefficient is not None

    def as_dict(self) -> dict:
        return {"power": str(self.power), "log": self.has_log, "coefficient": self.coefficient,
                "origin": self.origin, "variable": self.variable,
                "available": self.available, "finite_part_fired": self.finite_part_fired}


@dataclass
class HeatCoefficients:
    """``(4 pi t)^{-m/2} sum_j a_tilde[j] t^j + b t^{-1/2} + c t^{-1/2} log t`` (model cone only)."""

    m: int
    a_tilde: dict
    c: float
    b: float | None = None

    def as_dict(self):
        return {"m": self.m, "a_tilde": {str(k): v for k, v in self.a_tilde.items()},
                "b": self.b, "c": self.c}


def finite_part_power_integral(a, upper=1):
    """Finite part of ``int_0^upper r^a dr``.

    ``upper^{a+1} / (a+1)`` for ``a != -1`` and 0 for ``a == -1``. Exact
    (a ``Fraction``) when ``a`` is an integer and ``upper`` is rational.
    """
    if upper <= 0:
        raise ValueError("upper limit must be positive")
    if a == -1:
        return Fraction(0) if isinstance(upper, Rational) else 0.0
    if isinstance(a, int) and isinstance(upper, Rational):
        return Fraction(upper) ** (a + 1) / (a + 1)
    return upper ** (a + 1) / (a + 1)


def _check_log_order(m):
    k = (m - 1) // 2
    if k > MAX_ORDER:
        raise InvariantOrderError(
            f"invariant order not implemented: the log term for m = {m} needs u_{k}")
    return k


def log_order(m: int) -> int | None:
    """Index j of the invariant feeding the log term, or None for even m."""
    return None if m % 2 == 0 else (m - 1) // 2


def tip_moment(model: WedgeModel, convention: str = NORMALIZED) -> float:
    """``(r^{m-1} int_F u_{(m-1)/2} dvol_F)`` at the tip, via its r-independence."""
    k = _check_log_order(model.m)
    return scaled_fiber_integral(model, k, _PROBE_R, convention)


def _monomial_derivative_at_zero(power: int, order: int) -> int:
    """``d^order/dr^order r^power`` at ``r = 0``."""
    return math.factorial(order) if power == order else 0


def log_coefficient_L(model: WedgeModel, d: int, convention: str = NORMALIZED) -> float:
    """Coefficient of ``z^{-2d+1} log z`` in the resolvent trace expansion.

    Keeps the Taylor factor ``d_r^{2d-2}(r^{2d-2} * tip_moment) / (2d-2)!`` of the
    surviving log-sum term, which equals ``tip_moment``.
    """
    m = model.m
    SigmaParams(d, m)
    if m % 2 == 0:
        return 0.0
    moment = tip_moment(model, convention)
    order = 2 * d - 2
    taylor = _monomial_derivative_at_zero(order, order) / math.factorial(order)
    return ((4.0 * math.pi) ** (-m / 2) * math.gamma(d - 0.5) * model.vol_sigma
            / math.factorial(d - 1) * taylor * moment)


def resolvent_log_to_heat(L: float, d: int) -> float:
    """Heat coefficient of ``t^{-1/2} log t`` producing ``L z^{-2d+1} log z``."""
    return -L * math.factorial(d - 1) / (2.0 * math.gamma(d - 0.5))


def heat_log_coefficient_c(model: WedgeModel, convention: str = NORMALIZED) -> float:
    """``c = -(4 pi)^{-m/2} (1/2) Vol(Sigma) (r^{m-1} int_F u_{(m-1)/2})|_{r=0}``; 0 for even m."""
    m = model.m
    if m % 2 == 0:
        return 0.0
    return -(4.0 * math.pi) ** (-m / 2) * 0.5 * model.vol_sigma * tip_moment(model, convention)


def _space_form_defect_density(fiber, x, curv):
    g = fiber.jet(x).g
    ginv = metric_inverse(g)
    e = curv.ricci - 2.0 * g
    e_sq = np.einsum("ij,kl,ik,jl->", e, e, ginv, ginv)
    return 3.0 * (curv.scal - 6.0) ** 2 + 6.0 * float(e_sq)


def space_form_defect(model: WedgeModel) -> float:
    """``int_F 3 (Scal - 6)^2 + 6 |Ric - 2g|^2 dvol_F`` for a 3-dimensional fiber."""
    if model.m != 5:
        raise ValueError(f"space-form defect is defined for m = 5, got m = {model.m}")
    fiber = model.fiber
    nodes, weights = fiber.quadrature
    return math.fsum(w * _space_form_defect_density(fiber, x, c)
                     for x, w, c in zip(nodes, weights, fiber.node_curvature))


def c_dim5(model: WedgeModel) -> float:
    """Dimension-5 log coefficient from fiber Scal and Ric; always <= 0."""
    return -(model.vol_sigma / 720.0) * (4.0 * math.pi) ** -2.5 * space_form_defect(model)


def spherical_space_form_test(model: WedgeModel, tol: float = 1e-10):
    """``(verdict, residual)``: the fiber has constant sectional curvature one iff residual ~ 0."""
    residual = space_form_defect(model)
    return residual <= tol, residual


def interior_heat_terms(model: WedgeModel, J: int, convention: str = NORMALIZED) -> list:
    """Model-cone interior terms ``coef * t^{j - m/2}`` for ``j = 0..J``.

    The term where the radial exponent ``m-2-2j`` equals -1 has finite part zero and
    is kept with coefficient 0 and ``finite_part_fired`` set.
    """
    if J > MAX_ORDER:
        raise InvariantOrderError(f"invariant order not implemented: u_{J}")
    m = model.m
    out = []
    for j in range(J + 1):
        a = m - 2 - 2 * j
        fp = finite_part_power_integral(a, 1)
        moment = scaled_fiber_integral(model, j, _PROBE_R, convention)
        coef = (4.0 * math.pi) ** (-m / 2) * model.vol_sigma * moment * float(fp)
        out.append(ExpansionTerm(Fraction(2 * j - m, 2), False, coef, INTERIOR,
                                 variable="t", finite_part_fired=(a == -1)))
    return out


def heat_coefficients(model: WedgeModel, J: int = 2, b: float | None = None,
                      convention: str = NORMALIZED) -> HeatCoefficients:
    scale = (4.0 * math.pi) ** (model.m / 2)
    a = {j: term.coefficient * scale
         for j, term in enumerate(interior_heat_terms(model, J, convention))}
    c = 0.0 if model.m % 2 == 0 else heat_log_coefficient_c(model, convention)
    return HeatCoefficients(model.m, a, c, b)


def sal_expansion_report(model: WedgeModel, d: int, J: int,
                         convention: str = NORMALIZED) -> list:
    """All resolvent-trace terms with their z-powers; scaling terms carry no coefficient."""
    m = model.m
    SigmaParams(d, m)
    if J > MAX_ORDER:
        raise InvariantOrderError(f"invariant order not implemented: u_{J}")
    terms = [ExpansionTerm(Fraction(-l - 1), False, None, SAL_SCALING) for l in range(J + 1)]
    for j in range(J + 1):
        a = m - 2 - 2 * j
        fp = finite_part_power_integral(a, 1)
        moment = scaled_fiber_integral(model, j, _PROBE_R, convention)
        coef = ((4.0 * math.pi) ** (-m / 2) * model.vol_sigma * moment
                * gamma_factor(SigmaParams(d, m, j)) * float(fp))
        terms.append(ExpansionTerm(Fraction(-2 * d + m - 2 * j), False, coef, INTERIOR,
                                   finite_part_fired=(a == -1)))
    if m % 2 == 1:
        terms.append(ExpansionTerm(Fraction(-2 * d + 1), True, log_coefficient_L(model, d, convention),
                                   SAL_LOG))
    return terms
