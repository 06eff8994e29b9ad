"""Local heat invariants u_0, u_1, u_2 and the resolvent-trace coefficients sigma_j(r).

``u1`` defaults to ``Scal / 6``, the normalization under which the
dimension-3 log coefficient ``(1/2) Vol(Sigma) (1/6) Scal`` and the
dimension-5 formula built from ``u2`` are mutually consistent. Pass
``convention="literal"`` to get ``u1 = Scal``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .chart_geometry import CurvatureData, laplacian_scalar_field
from .errors import InvariantOrderError
from .wedge_geometry import WedgeModel, WedgePoint, wedge_curvature, wedge_laplacian_of_scalar

NORMALIZED = "normalized"
LITERAL = "literal"
MAX_ORDER = 2


@dataclass(frozen=True)
class InvariantInputs:
    curv: CurvatureData
    lap_scal: float = 0.0


def u0(inputs: InvariantInputs | None = None) -> float:
    return 1.0


def u1(inputs: InvariantInputs, convention: str = NORMALIZED) -> float:
    if convention == NORMALIZED:
        return inputs.curv.scal / 6.0
    if convention == LITERAL:
        return inputs.curv.scal
    raise ValueError(f"unknown u1 convention {convention!r}")


def u2(inputs: InvariantInputs) -> float:
    c = inputs.curv
    return (12.0 * inputs.lap_scal + 5.0 * c.scal ** 2
            - 2.0 * c.ricci_norm_sq + 2.0 * c.riem_norm_sq) / 360.0


def invariant(j: int, inputs: InvariantInputs, convention: str = NORMALIZED) -> float:
    if j == 0:
        return u0()
    if j == 1:
        return u1(inputs, convention)
    if j == 2:
        return u2(inputs)
    raise InvariantOrderError(f"invariant order not implemented: u_{j} (only j <= {MAX_ORDER})")


def wedge_inputs(model: WedgeModel, p: WedgePoint, fiber_curv=None, fiber_lap=None):
    curv = wedge_curvature(model, p, fiber_curv)
    return InvariantInputs(curv, wedge_laplacian_of_scalar(model, p, fiber_lap))


@lru_cache(maxsize=256)
def fiber_integral(model: WedgeModel, j: int, r: float = 0.5,
                   convention: str = NORMALIZED) -> float:
    """``int_F u_j(r, theta, x) dvol_F`` with ``u_j`` evaluated on the wedge metric."""
    if j > MAX_ORDER:
        raise InvariantOrderError(f"invariant order not implemented: u_{j}")
    fiber = model.fiber
    if j == 0:
        return fiber.volume()
    nodes, weights = fiber.quadrature
    curvs = fiber.node_curvature
    lap = laplacian_scalar_field(fiber.scal, fiber) if j == 2 else None
    vals = []
    for x, w, fc in zip(nodes, weights, curvs):
        p = WedgePoint(r, 0.0, x)
        inputs = wedge_inputs(model, p, fc, lap) if j == 2 else \
            InvariantInputs(wedge_curvature(model, p, fc))
        vals.append(w * invariant(j, inputs, convention))
    return math.fsum(vals)


def scaled_fiber_integral(model: WedgeModel, j: int, r: float = 0.5,
                          convention: str = NORMALIZED) -> float:
    """``r^{2j} int_F u_j dvol_F``, independent of ``r`` on the exact wedge."""
    return r ** (2 * j) * fiber_integral(model, j, r, convention)


@dataclass(frozen=True)
class SigmaParams:
    d: int
    m: int
    j: int = 0

    def __post_init__(self):
        if int(self.d) != self.d:
            raise ValueError("resolvent power d must be an integer")
        if not self.d > self.m / 2:
            raise ValueError(f"resolvent power d = {self.d} must exceed m/2 = {self.m / 2}")
        if self.j < 0:
            raise ValueError("coefficient index j must be >= 0")


def gamma_factor(params: SigmaParams) -> float:
    """``Gamma(d + j - m/2) / (d - 1)!``."""
    return math.gamma(params.d + params.j - params.m / 2) / math.factorial(params.d - 1)


def sigma_j(r: float, params: SigmaParams, model: WedgeModel,
            convention: str = NORMALIZED) -> float:
    if r <= 0:
        raise ValueError("r must be positive")
    if params.m != model.m:
        raise ValueError("SigmaParams.m does not match the model dimension")
    if params.j > MAX_ORDER:
        raise InvariantOrderError(f"invariant order not implemented: u_{params.j}")
    m, d, j = params.m, params.d, params.j
    if j == 0:
        integral = model.fiber.volume()
    else:
        # exact r^{-2j} scaling of the wedge invariants lets us evaluate inside (0, 1)
        integral = scaled_fiber_integral(model, j, 0.5, convention) * r ** (-2 * j)
    return ((4.0 * math.pi) ** (-m / 2) * r ** (2 * d - 2 + 2 * j) * integral
            * gamma_factor(params))


def sigma_partial_sum(r: float, zeta: float, d: int, J: int, model: WedgeModel,
                      convention: str = NORMALIZED) -> float:
    """Asymptotic (zeta -> infinity) partial sum ``sum_{j<=J} zeta^{-2d+m-2j} sigma_j(r)``.

    Not a convergent series; only meaningful for large ``zeta``.
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    m = model.m
    terms = [zeta ** (-2 * d + m - 2 * j) * sigma_j(r, SigmaParams(d, m, j), model, convention)
             for j in range(J + 1)]
    return math.fsum(terms)
