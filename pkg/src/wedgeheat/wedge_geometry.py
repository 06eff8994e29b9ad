"""Wedge metric ``dr^2 + dtheta^2 + r^2 g_V`` and its closed-form curvature.

Coordinates are ordered ``(r, theta, x^1, ..., x^{m-2})``.

The closed forms for the fiber-index Riemann and Ricci components carry an
overall ``r^-2``. Those are the components against the rescaled frame
``r^-1 d/dx^i`` (unit length in the wedge whenever ``d/dx^i`` is unit in
``g_V``). In plain coordinates the same tensors are ``r^4`` and ``r^2``
times larger; :func:`verify_transformation` converts before comparing, and
contractions of the frame components use the fiber metric ``g_V``.
Components carrying an ``r`` or ``theta`` index vanish identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chart_geometry import (CurvatureData, FiberModel, MetricJet, curvature_from_jet,
                             laplacian_scalar_field, metric_inverse, norms)
from .errors import VerificationError

R, THETA = 0, 1


@dataclass(frozen=True)
class WedgeModel:
    m: int
    fiber: FiberModel
    sigma_length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("wedge dimension m must be >= 3")
        if self.fiber.dim != self.m - 2:
            raise ValueError(
                f"fiber dimension {self.fiber.dim} does not match m - 2 = {self.m - 2}")
        if not self.sigma_length > 0:
            raise ValueError("sigma_length must be positive")

    @property
    def vol_sigma(self) -> float:
        return self.sigma_length

    def describe(self) -> dict:
        return {"m": self.m, "sigma_length": self.sigma_length, "fiber": self.fiber.describe()}


@dataclass(frozen=True, eq=False)
class WedgePoint:
    r: float
    theta: float
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"wedge point needs r in (0, 1), got {self.r}")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


def random_point(model: WedgeModel, rng: np.random.Generator) -> WedgePoint:
    return WedgePoint(rng.uniform(0.05, 0.95), rng.uniform(0.0, model.sigma_length),
                      model.fiber.sample_point(rng))


def wedge_metric_jet(model: WedgeModel, p: WedgePoint) -> MetricJet:
    m, r = model.m, p.r
    fj = model.fiber.jet(p.x)
    F = slice(2, m)
    g = np.zeros((m, m))
    dg = np.zeros((m,) * 3)
    ddg = np.zeros((m,) * 4)
    g[R, R] = g[THETA, THETA] = 1.0
    g[F, F] = r * r * fj.g
    dg[F, F, R] = 2.0 * r * fj.g
    dg[F, F, F] = r * r * fj.dg
    ddg[F, F, R, R] = 2.0 * fj.g
    ddg[F, F, R, F] = 2.0 * r * fj.dg
    ddg[F, F, F, R] = 2.0 * r * fj.dg
    ddg[F, F, F, F] = r * r * fj.ddg
    return MetricJet(g, dg, ddg)


def wedge_christoffel(model: WedgeModel, p: WedgePoint) -> np.ndarray:
    """Christoffel symbols assembled from the case table, not the generic formula."""
    m, r = model.m, p.r
    fiber_curv = model.fiber.curvature(p.x)
    g_v = model.fiber.jet(p.x).g
    gamma = np.zeros((m, m, m))
    F = slice(2, m)
    gamma[R, F, F] = -r * g_v
    eye = np.eye(m - 2) / r
    gamma[F, R, F] = eye
    gamma[F, F, R] = eye
    gamma[F, F, F] = fiber_curv.gamma
    return gamma


def shifted_scalar(model: WedgeModel, fiber_scal: float) -> float:
    """``Scal_F - (m-2)(m-3)``: the r-free numerator of the wedge scalar curvature."""
    return fiber_scal - (model.m - 2) * (model.m - 3)


def wedge_scalar(model: WedgeModel, p: WedgePoint) -> float:
    return shifted_scalar(model, model.fiber.scal(p.x)) / p.r ** 2


def _riemann_frame(model, r, g_v, fiber_curv):
    gg = np.einsum("ik,jl->ijkl", g_v, g_v) - np.einsum("il,jk->ijkl", g_v, g_v)
    return (fiber_curv.riemann - gg) / r ** 2


def _ricci_frame(model, r, g_v, fiber_curv):
    return (fiber_curv.ricci - (model.m - 3) * g_v) / r ** 2


def wedge_riemann(model: WedgeModel, p: WedgePoint) -> np.ndarray:
    """Fiber-index Riemann components in the rescaled frame ``r^-1 d/dx^i``."""
    return _riemann_frame(model, p.r, model.fiber.jet(p.x).g, model.fiber.curvature(p.x))


def wedge_ricci(model: WedgeModel, p: WedgePoint) -> np.ndarray:
    """Fiber-index Ricci components in the rescaled frame ``r^-1 d/dx^i``."""
    return _ricci_frame(model, p.r, model.fiber.jet(p.x).g, model.fiber.curvature(p.x))


def wedge_curvature(model: WedgeModel, p: WedgePoint, fiber_curv=None) -> CurvatureData:
    """Full coordinate CurvatureData of the wedge assembled from the closed forms.

    ``fiber_curv`` may be passed to reuse a precomputed fiber curvature at ``p.x``.
    """
    m, r = model.m, p.r
    g_v = model.fiber.jet(p.x).g
    if fiber_curv is None:
        fiber_curv = model.fiber.curvature(p.x)
    F = slice(2, m)
    riem = np.zeros((m,) * 4)
    ric = np.zeros((m, m))
    riem_frame = _riemann_frame(model, r, g_v, fiber_curv)
    ric_frame = _ricci_frame(model, r, g_v, fiber_curv)
    riem[F, F, F, F] = r ** 4 * riem_frame
    ric[F, F] = r ** 2 * ric_frame
    gv_inv = metric_inverse(g_v)
    ric_sq, riem_sq = norms(gv_inv, ric_frame, riem_frame)
    scal = shifted_scalar(model, fiber_curv.scal) / r ** 2
    gamma = np.zeros((m, m, m))
    gamma[R, F, F] = -r * g_v
    gamma[F, R, F] = gamma[F, F, R] = np.eye(m - 2) / r
    gamma[F, F, F] = fiber_curv.gamma
    return CurvatureData(gamma, riem, ric, scal, ric_sq, riem_sq)


def wedge_laplacian_of_scalar(model: WedgeModel, p: WedgePoint, fiber_lap=None) -> float:
    """Positive Laplacian of the wedge scalar curvature.

    With ``Scal~ = r^-2 s(x)``, the radial part ``-d_r^2 - (m-2)/r d_r`` gives
    ``(2m - 10) r^-4 s`` and the fiber part gives ``r^-4 Delta_F s``.
    ``fiber_lap`` may supply a prebuilt ``laplacian_scalar_field(fiber.scal, ...)``.
    """
    m, r = model.m, p.r
    s = shifted_scalar(model, model.fiber.scal(p.x))
    if fiber_lap is None:
        fiber_lap = laplacian_scalar_field(model.fiber.scal, model.fiber)
    return ((2 * m - 10) * s + fiber_lap(p.x)) / r ** 4


# ---------------------------------------------------------------------------
# oracle comparison
# ---------------------------------------------------------------------------

@dataclass
class TensorDeviation:
    name: str
    max_abs: float
    max_rel: float
    worst_index: tuple

    def as_dict(self):
        return {"name": self.name, "max_abs": self.max_abs, "max_rel": self.max_rel,
                "worst_index": list(self.worst_index)}


@dataclass
class TransformationReport:
    tol: float
    deviations: list
    mixed_max_abs: float
    mixed_worst_path: str
    passed: bool
    failures: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.passed:
            raise VerificationError("closed-form wedge curvature mismatch: "
                                    + "; ".join(self.failures), path=self.failures[0])
        return self

    def as_dict(self):
        return {"tol": self.tol, "passed": self.passed, "failures": self.failures,
                "mixed_max_abs": self.mixed_max_abs,
                "mixed_worst_path": self.mixed_worst_path,
                "deviations": [d.as_dict() for d in self.deviations]}


_LABELS = ("r", "theta")


def _label(idx):
    return "(" + ",".join(_LABELS[i] if i < 2 else f"x{i - 1}" for i in idx) + ")"


def _compare(name, direct, closed, offset=0):
    direct = np.atleast_1d(np.asarray(direct, dtype=float))
    closed = np.atleast_1d(np.asarray(closed, dtype=float))
    diff = np.abs(direct - closed)
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    max_abs = float(diff[worst])
    scale = max(1.0, float(np.max(np.abs(closed))))
    return TensorDeviation(name, max_abs, max_abs / scale, tuple(int(i) + offset for i in worst))


def verify_transformation(model: WedgeModel, p: WedgePoint, tol: float,
                          mixed_tol: float | None = None) -> TransformationReport:
    """Compare the closed-form wedge curvature with a direct jet computation.

    Relative deviations are taken against ``max(1, max |closed|)`` per tensor, so
    vanishing tensors are checked absolutely. A tolerance of zero never passes.
    """
    mixed_tol = tol if mixed_tol is None else mixed_tol
    m, r = model.m, p.r
    direct = curvature_from_jet(wedge_metric_jet(model, p))
    F = slice(2, m)

    devs = [
        _compare("christoffel", direct.gamma, wedge_christoffel(model, p)),
        _compare("riemann", direct.riemann[F, F, F, F] / r ** 4, wedge_riemann(model, p), 2),
        _compare("ricci", direct.ricci[F, F] / r ** 2, wedge_ricci(model, p), 2),
        _compare("scal", direct.scal, wedge_scalar(model, p)),
    ]
    closed = wedge_curvature(model, p)
    devs.append(_compare("ricci_norm_sq", direct.ricci_norm_sq, closed.ricci_norm_sq))
    devs.append(_compare("riem_norm_sq", direct.riem_norm_sq, closed.riem_norm_sq))

    mixed_riem = direct.riemann.copy()
    mixed_riem[F, F, F, F] = 0.0
    mixed_ric = direct.ricci.copy()
    mixed_ric[F, F] = 0.0
    i_riem = np.unravel_index(int(np.argmax(np.abs(mixed_riem))), mixed_riem.shape)
    i_ric = np.unravel_index(int(np.argmax(np.abs(mixed_ric))), mixed_ric.shape)
    if abs(mixed_riem[i_riem]) >= abs(mixed_ric[i_ric]):
        mixed_abs, mixed_path = float(abs(mixed_riem[i_riem])), "riemann" + _label(i_riem)
    else:
        mixed_abs, mixed_path = float(abs(mixed_ric[i_ric])), "ricci" + _label(i_ric)

    failures = []
    for d in devs:
        if not d.max_rel <= tol or tol <= 0:
            failures.append(f"{d.name}{_label(d.worst_index) if d.name in ('christoffel', 'riemann', 'ricci') else ''}"
                            f" deviates by {d.max_rel:.3e} (tol {tol:g})")
    if not mixed_abs <= mixed_tol or mixed_tol <= 0:
        failures.append(f"mixed component {mixed_path} = {mixed_abs:.3e} (tol {mixed_tol:g})")
    return TransformationReport(tol, devs, mixed_abs, mixed_path, not failures, failures)
