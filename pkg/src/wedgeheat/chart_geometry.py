"""Pointwise Riemannian curvature from metric jets, plus fiber models.

A metric enters as a jet at a chart point: the components ``g_ij``, their
first derivatives ``dg[i, j, k] = d_k g_ij`` and second derivatives
``ddg[i, j, k, l] = d_l d_k g_ij``. Everything downstream (Christoffel
symbols, Riemann, Ricci, scalar curvature, invariant norms) is computed
algebraically from those arrays.

Conventions
-----------
* ``R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}``
  and ``R_ijkl = g_im R^m_{jkl}``, so the unit round sphere has
  ``R_ijkl = g_ik g_jl - g_il g_jk`` and positive sectional curvature.
* ``Ric_jl = R^i_{jil}``, ``Scal = g^{ij} Ric_ij``.
* Norms raise every index with ``g``.
* Laplacians are positive (geometer's sign): ``-d^2/dx^2`` on a line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, ResolutionError

_SYM_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class MetricJet:
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        n = g.shape[0]
        dg = np.asarray(self.dg, dtype=float)
        ddg = np.asarray(self.ddg, dtype=float)
        if g.shape != (n, n) or dg.shape != (n,) * 3 or ddg.shape != (n,) * 4:
            raise ValueError(
                f"inconsistent jet shapes {g.shape}, {dg.shape}, {ddg.shape}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "dg", dg)
        object.__setattr__(self, "ddg", ddg)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def validate(self):
        """Check the symmetry invariants; raises on failure."""
        scale = max(1.0, float(np.max(np.abs(self.g))))
        if not np.allclose(self.g, self.g.T, rtol=0, atol=_SYM_ATOL * scale):
            raise DegenerateMetricError("degenerate metric: g is not symmetric")
        if not np.allclose(self.dg, self.dg.transpose(1, 0, 2), atol=1e-10):
            raise ValueError("dg is not symmetric in (i, j)")
        if not (np.allclose(self.ddg, self.ddg.transpose(1, 0, 2, 3), atol=1e-10)
                and np.allclose(self.ddg, self.ddg.transpose(0, 1, 3, 2), atol=1e-10)):
            raise ValueError("ddg is not symmetric in (i, j) and (k, l)")
        metric_inverse(self.g)
        return self


@dataclass(frozen=True, eq=False)
class CurvatureData:
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scal: float
    ricci_norm_sq: float
    riem_norm_sq: float


def metric_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse metric; a failed Cholesky factorization means g is not positive definite."""
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError(
            "degenerate metric: g is not positive definite") from None
    return np.linalg.inv(g)


def _christoffel_lower(dg):
    # [m, j, k] = 1/2 (d_k g_mj + d_j g_mk - d_m g_jk)
    return 0.5 * (dg + np.einsum("mkj->mjk", dg) - np.einsum("jkm->mjk", dg))


def christoffel(jet: MetricJet) -> np.ndarray:
    """Christoffel symbols ``gamma[i, j, k] = G^i_{jk}`` of the second kind."""
    ginv = metric_inverse(jet.g)
    return np.einsum("im,mjk->ijk", ginv, _christoffel_lower(jet.dg))


def norms(g_inv, ricci, riemann):
    ric_sq = np.einsum("ij,kl,ik,jl->", ricci, ricci, g_inv, g_inv)
    raised = riemann
    for _ in range(4):
        # contracts the leading index and rotates it to the back
        raised = np.tensordot(raised, g_inv, axes=([0], [0]))
    return float(ric_sq), float(np.sum(riemann * raised))


def curvature_from_jet(jet: MetricJet) -> CurvatureData:
    ginv = metric_inverse(jet.g)
    lower = _christoffel_lower(jet.dg)
    gamma = np.einsum("im,mjk->ijk", ginv, lower)

    dginv = -np.einsum("ia,abl,bm->iml", ginv, jet.dg, ginv)
    ddg = jet.ddg
    dlower = 0.5 * (ddg + np.einsum("mkjl->mjkl", ddg) - np.einsum("jkml->mjkl", ddg))
    # dgamma[i, j, k, l] = d_l G^i_{jk}
    dgamma = (np.einsum("iml,mjk->ijkl", dginv, lower)
              + np.einsum("im,mjkl->ijkl", ginv, dlower))

    r_up = (np.einsum("iljk->ijkl", dgamma) - np.einsum("ikjl->ijkl", dgamma)
            + np.einsum("ikm,mlj->ijkl", gamma, gamma)
            - np.einsum("ilm,mkj->ijkl", gamma, gamma))
    riemann = np.einsum("ia,ajkl->ijkl", jet.g, r_up)
    ricci = np.einsum("ijil->jl", r_up)
    ricci = 0.5 * (ricci + ricci.T)
    scal = float(np.einsum("ij,ij->", ginv, ricci))
    ric_sq, riem_sq = norms(ginv, ricci, riemann)
    return CurvatureData(gamma, riemann, ricci, scal, ric_sq, riem_sq)


def constant_curvature_tensor(g: np.ndarray, kappa: float) -> np.ndarray:
    """``kappa (g_ik g_jl - g_il g_jk)``."""
    return kappa * (np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g))


# ---------------------------------------------------------------------------
# Fiber models
# ---------------------------------------------------------------------------

class FiberModel:
    """A closed Riemannian manifold described by one chart and a quadrature rule.

    Subclasses provide ``dim``, ``jet(x)`` and ``quadrature`` (nodes, weights),
    where the weights already include ``sqrt(det g)``.
    """

    kind = "abstract"
    dim: int

    def jet(self, x) -> MetricJet:
        raise NotImplementedError

    @cached_property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def node_spacing(self) -> float:
        """Typical coordinate distance between neighbouring quadrature nodes."""
        raise NotImplementedError

    def curvature(self, x) -> CurvatureData:
        return curvature_from_jet(self.jet(x))

    def scal(self, x) -> float:
        return self.curvature(x).scal

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def node_curvature(self) -> list:
        nodes, _ = self.quadrature
        return [self.curvature(x) for x in nodes]

    def volume(self) -> float:
        return float(math.fsum(self.quadrature[1]))

    def describe(self) -> dict:
        return {"kind": self.kind}


def _gauss_interval(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _midpoint(n, length):
    h = length / n
    return (np.arange(n) + 0.5) * h, np.full(n, h)


@dataclass(frozen=True)
class RoundSphere(FiberModel):
    """Round sphere of dimension ``n`` and radius ``radius`` in hyperspherical angles.

    Chart point ``(phi_1, ..., phi_n)`` with ``phi_1..phi_{n-1}`` in ``(0, pi)``
    and ``phi_n`` in ``(0, 2 pi)``; ``g = radius^2 diag(1, s1^2, s1^2 s2^2, ...)``.
    """

    n: int
    radius: float = 1.0
    resolution: int = 12

    kind = "round_sphere"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sphere dimension must be >= 1")
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    @property
    def dim(self):
        return self.n

    def _diag(self, x):
        x = np.asarray(x, dtype=float)
        s2 = np.sin(x) ** 2
        prods = np.concatenate(([1.0], np.cumprod(s2[:-1])))
        return self.radius ** 2 * prods

    def jet(self, x) -> MetricJet:
        x = np.asarray(x, dtype=float)
        n = self.n
        diag = self._diag(x)
        cot = np.cos(x) / np.sin(x)
        g = np.diag(diag)
        dg = np.zeros((n,) * 3)
        ddg = np.zeros((n,) * 4)
        for k in range(n):
            gk = diag[k]
            for a in range(k):
                dg[k, k, a] = 2.0 * cot[a] * gk
                for b in range(k):
                    if a == b:
                        ddg[k, k, a, a] = gk * (4.0 * cot[a] ** 2 - 2.0 / math.sin(x[a]) ** 2)
                    else:
                        ddg[k, k, a, b] = 4.0 * cot[a] * cot[b] * gk
        return MetricJet(g, dg, ddg)

    def curvature(self, x) -> CurvatureData:
        jet = self.jet(x)
        g, n = jet.g, self.n
        kappa = self.radius ** -2
        riemann = constant_curvature_tensor(g, kappa)
        ricci = (n - 1) * kappa * g
        scal = n * (n - 1) * kappa
        ginv = np.diag(1.0 / np.diag(g))
        ric_sq, riem_sq = norms(ginv, ricci, riemann)
        return CurvatureData(christoffel(jet), riemann, ricci, scal, ric_sq, riem_sq)

    def scal(self, x) -> float:
        return self.n * (self.n - 1) / self.radius ** 2

    @cached_property
    def quadrature(self):
        n, q = self.n, self.resolution
        axes, wts = [], []
        for i in range(n - 1):
            x, w = _gauss_interval(q, 0.0, math.pi)
            axes.append(x)
            wts.append(w * np.sin(x) ** (n - 1 - i))
        x, w = _midpoint(2 * q, 2.0 * math.pi)
        axes.append(x)
        wts.append(w)
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        weights = self.radius ** n
        for i, w in enumerate(np.meshgrid(*wts, indexing="ij")):
            weights = weights * w
        return nodes, weights.reshape(-1)

    @property
    def node_spacing(self):
        return math.pi / self.resolution

    def exact_volume(self) -> float:
        return 2.0 * math.pi ** ((self.n + 1) / 2) / math.gamma((self.n + 1) / 2) * self.radius ** self.n

    def sample_point(self, rng):
        x = rng.uniform(0.15, math.pi - 0.15, size=self.n)
        x[-1] = rng.uniform(0.0, 2.0 * math.pi)
        return x

    def describe(self):
        return {"kind": self.kind, "n": self.n, "radius": self.radius}


@dataclass(frozen=True)
class FlatTorus(FiberModel):
    sides: tuple
    resolution: int = 8

    kind = "flat_torus"

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        if not self.sides or min(self.sides) <= 0:
            raise ValueError("torus sides must be positive")

    @property
    def dim(self):
        return len(self.sides)

    def jet(self, x):
        n = self.dim
        return MetricJet(np.eye(n), np.zeros((n,) * 3), np.zeros((n,) * 4))

    def curvature(self, x):
        n = self.dim
        return CurvatureData(np.zeros((n,) * 3), np.zeros((n,) * 4), np.zeros((n, n)),
                             0.0, 0.0, 0.0)

    def scal(self, x):
        return 0.0

    @cached_property
    def quadrature(self):
        axes, wts = zip(*(_midpoint(self.resolution, L) for L in self.sides))
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        weights = np.ones(len(nodes)) * math.prod(w[0] for w in wts)
        return nodes, weights

    @property
    def node_spacing(self):
        return max(self.sides) / self.resolution

    def exact_volume(self):
        return math.prod(self.sides)

    def sample_point(self, rng):
        return np.array([rng.uniform(0.0, L) for L in self.sides])

    def describe(self):
        return {"kind": self.kind, "sides": list(self.sides)}


@dataclass(frozen=True)
class Circle(FiberModel):
    length: float = 2.0 * math.pi
    resolution: int = 64

    kind = "circle"

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("circle length must be positive")

    dim = 1

    def jet(self, x):
        return MetricJet(np.eye(1), np.zeros((1, 1, 1)), np.zeros((1, 1, 1, 1)))

    def curvature(self, x):
        return CurvatureData(np.zeros((1, 1, 1)), np.zeros((1,) * 4), np.zeros((1, 1)),
                             0.0, 0.0, 0.0)

    def scal(self, x):
        return 0.0

    @cached_property
    def quadrature(self):
        x, w = _midpoint(self.resolution, self.length)
        return x[:, None], w

    @property
    def node_spacing(self):
        return self.length / self.resolution

    def exact_volume(self):
        return self.length

    def sample_point(self, rng):
        return np.array([rng.uniform(0.0, self.length)])

    def describe(self):
        return {"kind": self.kind, "length": self.length}


@dataclass(frozen=True, eq=False)
class CustomChart(FiberModel):
    """User-supplied fiber: a jet evaluator and a quadrature grid.

    ``weights`` must already contain ``sqrt(det g)``. ``spacing`` is the coordinate
    spacing used to size finite-difference steps.
    """

    jet_fn: Callable[[np.ndarray], MetricJet]
    nodes: np.ndarray
    weights: np.ndarray
    spacing: float = 0.1

    kind = "custom_chart"

    @property
    def dim(self):
        return int(np.asarray(self.nodes).shape[1])

    def jet(self, x):
        return self.jet_fn(np.asarray(x, dtype=float))

    @cached_property
    def quadrature(self):
        return np.asarray(self.nodes, dtype=float), np.asarray(self.weights, dtype=float)

    @property
    def node_spacing(self):
        return self.spacing

    def sample_point(self, rng):
        nodes = self.quadrature[0]
        return nodes[rng.integers(len(nodes))]


def integrate_over_fiber(fn: Callable[[np.ndarray], float], model: FiberModel) -> float:
    """Quadrature sum of ``fn`` over the fiber volume form."""
    nodes, weights = model.quadrature
    return math.fsum(w * fn(x) for x, w in zip(nodes, weights))


_MAX_FD_STEP = 0.0125
_FD_STEPS_PER_SPACING = 32


def fd_step(model: FiberModel) -> float:
    h = model.node_spacing / _FD_STEPS_PER_SPACING
    if h > _MAX_FD_STEP:
        need = model.node_spacing / (h / _MAX_FD_STEP)
        raise ResolutionError(
            f"resolution: node spacing {model.node_spacing:.3g} too coarse for second "
            f"differences; need spacing <= {need:.3g}",
            required=need)
    return h


def _d1(f, x, i, h):
    e = np.zeros_like(x)
    e[i] = h
    return (f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / (12 * h)


def _d2(f, x, i, h):
    e = np.zeros_like(x)
    e[i] = h
    return (-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x) + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)


def laplacian_scalar_field(fn: Callable, model: FiberModel, h: float | None = None) -> Callable:
    """Return ``x -> -g^{ij}(d_i d_j f - G^k_ij d_k f)`` using fourth-order central differences."""
    step = fd_step(model) if h is None else h

    def lap(x):
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        jet = model.jet(x)
        ginv = metric_inverse(jet.g)
        gamma = christoffel(jet)
        grad = np.array([_d1(fn, x, i, step) for i in range(n)])
        hess = np.empty((n, n))
        for i in range(n):
            hess[i, i] = _d2(fn, x, i, step)
            for j in range(i + 1, n):
                hess[i, j] = hess[j, i] = _d1(lambda y: _d1(fn, y, j, step), x, i, step)
        return -float(np.einsum("ij,ij->", ginv, hess - np.einsum("kij,k->ij", gamma, grad)))

    return lap
