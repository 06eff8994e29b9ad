"""Exact spectrum of the model wedge, heat-trace summation and coefficient fitting.

The model wedge is ``(0, 1) x S^1_L x F`` with metric ``dr^2 + dtheta^2 + r^2 g_V``,
Dirichlet condition at ``r = 1`` and the Friedrichs extension at ``r = 0``.

Separation of variables: with ``u = r^{-(m-2)/2} v(r) e^{2 pi i k theta / L} phi_mu(x)``
the radial equation becomes ``-v'' + (mu + ((m-2)/2)((m-2)/2 - 1)) r^-2 v = lambda' v``.
Its Friedrichs solutions are ``v = sqrt(r) J_nu(sqrt(lambda') r)`` with
``nu^2 = mu + ((m-2)/2)((m-2)/2 - 1) + 1/4 = mu + ((m-3)/2)^2``; the second
solution ``sqrt(r) Y_nu`` is never admitted (for ``nu >= 1`` it is not even
square integrable, for ``0 <= nu < 1`` excluding it is what selects the
Friedrichs extension). Dirichlet at ``r = 1`` then gives
``lambda = j_{nu,n}^2 + (2 pi k / L)^2``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc

from .bessel import bessel_zeros_below
from .chart_geometry import Circle, FiberModel, FlatTorus, RoundSphere
from .errors import CutoffError, FitRefusedError, SpectrumUnavailableError
from .expansion_engine import heat_log_coefficient_c
from .wedge_geometry import WedgeModel

BLOCK_SIZE = 1 << 15


@dataclass(frozen=True, eq=False)
class FiberSpectrum:
    mu: np.ndarray
    mult: np.ndarray
    cutoff: float

    @property
    def entries(self):
        return list(zip(self.mu.tolist(), self.mult.tolist()))

    def counting(self, lam: float) -> int:
        return int(self.mult[self.mu <= lam].sum())


def _sphere_multiplicity(l, n):
    if l == 0:
        return 1
    return math.comb(l + n, n) - (math.comb(l + n - 2, n) if l >= 2 else 0)


def fiber_spectrum(model: FiberModel, cutoff: float) -> FiberSpectrum:
    """Eigenvalues of the positive fiber Laplacian up to ``cutoff``, with multiplicities."""
    if isinstance(model, RoundSphere):
        n, rho2 = model.n, model.radius ** 2
        mu, mult = [], []
        l = 0
        while l * (l + n - 1) / rho2 <= cutoff:
            mu.append(l * (l + n - 1) / rho2)
            mult.append(_sphere_multiplicity(l, n))
            l += 1
    elif isinstance(model, Circle):
        w = 2.0 * math.pi / model.length
        kmax = int(math.floor(math.sqrt(cutoff) / w))
        mu = [(w * k) ** 2 for k in range(kmax + 1)]
        mult = [1] + [2] * kmax
    elif isinstance(model, FlatTorus):
        ws = [2.0 * math.pi / L for L in model.sides]
        ranges = [range(-int(math.sqrt(cutoff) / w), int(math.sqrt(cutoff) / w) + 1) for w in ws]
        # exact integer keys avoid merging distinct values or splitting equal ones
        counts = {}
        for ks in itertools.product(*ranges):
            val = sum((w * k) ** 2 for w, k in zip(ws, ks))
            if val <= cutoff:
                key = round(val, 9)
                counts[key] = counts.get(key, 0) + 1
        mu = sorted(counts)
        mult = [counts[v] for v in mu]
    else:
        raise SpectrumUnavailableError(f"spectrum unavailable for fiber kind {model.kind!r}")
    return FiberSpectrum(np.asarray(mu, dtype=float), np.asarray(mult, dtype=np.int64), cutoff)


def bessel_orders(fs: FiberSpectrum, m: int):
    """Bessel orders ``nu = sqrt(mu + ((m-3)/2)^2)`` and their multiplicities."""
    if m < 3:
        raise ValueError("m must be >= 3")
    return np.sqrt(fs.mu + ((m - 3) / 2) ** 2), fs.mult.copy()


def weyl_constant(volume: float, m: int) -> float:
    """``C`` in ``N(lambda) ~ C lambda^{m/2}``."""
    return volume / ((4.0 * math.pi) ** (m / 2) * math.gamma(m / 2 + 1))


def wedge_volume(model: WedgeModel) -> float:
    return model.sigma_length * model.fiber.exact_volume() / (model.m - 1)


def _li_yau_factor(m):
    return (1.0 + 2.0 / m) ** (m / 2)


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    nu: np.ndarray
    n: np.ndarray
    k: np.ndarray
    lam: np.ndarray
    mult: np.ndarray
    lambda_max: float
    m: int
    majorant: float  # A with N(lambda) <= A lambda^{m/2}

    @property
    def size(self) -> int:
        return int(self.lam.size)

    @property
    def mode_count(self) -> int:
        return int(self.mult.sum())

    def tail_bound(self, t):
        """Bound on ``sum_{lambda > lambda_max} e^{-t lambda}`` from the Weyl-type majorant.

        Integration by parts against ``N(lambda) <= A lambda^{m/2}`` gives
        ``A t^{-m/2} Gamma(m/2 + 1, t lambda_max)``.
        """
        t = np.asarray(t, dtype=float)
        s = self.m / 2 + 1
        return self.majorant * t ** (-self.m / 2) * math.gamma(s) * gammaincc(s, t * self.lambda_max)

    def counting(self, lam: float) -> int:
        return int(self.mult[self.lam <= lam].sum())

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("nu,n,k,lambda,multiplicity\n")
            for row in zip(self.nu.tolist(), self.n.tolist(), self.k.tolist(),
                           self.lam.tolist(), self.mult.tolist()):
                fh.write("%r,%d,%d,%r,%d\n" % row)


def required_fiber_cutoff(m: int, lambda_max: float) -> float:
    # j_{nu,1} > nu, so every admitted order has nu^2 < lambda_max
    return lambda_max - ((m - 3) / 2) ** 2


def cone_spectrum(model: WedgeModel, lambda_max: float,
                  fiber_cutoff: float | None = None) -> SpectrumSet:
    """All eigenvalues ``j_{nu,n}^2 + (2 pi k / L)^2 <= lambda_max``; ``+-k`` merged into one row."""
    m, L = model.m, model.sigma_length
    need = required_fiber_cutoff(m, lambda_max)
    if fiber_cutoff is not None and fiber_cutoff < need:
        raise CutoffError(
            f"fiber cutoff {fiber_cutoff:g} too small for lambda_max {lambda_max:g}; "
            f"need fiber cutoff >= {need:g}", required=need)
    fs = fiber_spectrum(model.fiber, max(need, 0.0) if fiber_cutoff is None else fiber_cutoff)
    orders, fmult = bessel_orders(fs, m)
    xmax = math.sqrt(lambda_max)
    nus, ns, zs, mults = [], [], [], []
    for nu, mu_mult in zip(orders.tolist(), fmult.tolist()):
        z = bessel_zeros_below(nu, xmax)
        if z.size == 0:
            continue
        nus.append(np.full(z.size, nu))
        ns.append(np.arange(1, z.size + 1))
        zs.append(z)
        mults.append(np.full(z.size, mu_mult, dtype=np.int64))
    if not zs:
        raise CutoffError(f"lambda_max {lambda_max:g} is below the first eigenvalue")
    nu, n, z, fm = (np.concatenate(a) for a in (nus, ns, zs, mults))
    radial = z * z
    w = 2.0 * math.pi / L
    kmax = np.floor(np.sqrt(np.maximum(lambda_max - radial, 0.0)) / w).astype(np.int64)
    reps = kmax + 1
    idx = np.repeat(np.arange(radial.size), reps)
    offsets = np.cumsum(reps) - reps
    k = np.arange(idx.size) - np.repeat(offsets, reps)
    lam = radial[idx] + (w * k) ** 2
    keep = lam <= lambda_max
    idx, k, lam = idx[keep], k[keep], lam[keep]
    mult = fm[idx] * np.where(k > 0, 2, 1)
    order = np.lexsort((k, n[idx], nu[idx], lam))
    spec_nu, spec_n, spec_k = nu[idx][order], n[idx][order], k[order]
    lam, mult = lam[order], mult[order]

    cumulative = np.cumsum(mult)
    observed = float(np.max(cumulative / lam ** (m / 2)))
    majorant = max(_li_yau_factor(m) * weyl_constant(wedge_volume(model), m), 1.05 * observed)
    return SpectrumSet(spec_nu, spec_n.astype(np.int64), spec_k, lam, mult.astype(np.int64),
                       float(lambda_max), m, majorant)


@dataclass
class HeatTrace:
    t: np.ndarray
    value: np.ndarray
    tail_bound: np.ndarray
    flagged: np.ndarray

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,trace,tail_bound\n")
            for row in zip(self.t.tolist(), self.value.tolist(), self.tail_bound.tolist()):
                fh.write("%r,%r,%r\n" % row)


def _block_sums(lam, mult, t):
    return (np.exp(-np.outer(t, lam)) * mult).sum(axis=1)


def heat_trace(spec: SpectrumSet, t, tol: float | None = None, threads: int = 1) -> HeatTrace:
    """``sum mult * exp(-t lambda)`` over the truncated spectrum.

    Modes are summed from the largest eigenvalue down in blocks of fixed size; block
    partial sums are combined with ``math.fsum``. The block layout does not depend
    on ``threads`` so the result is bitwise reproducible for any thread count.
    The true trace lies in ``[value, value + tail_bound]``; entries whose tail
    bound exceeds ``tol * value`` are flagged.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    lam = spec.lam[::-1]
    mult = spec.mult[::-1].astype(float)
    starts = range(0, lam.size, BLOCK_SIZE)
    work = [(lam[s:s + BLOCK_SIZE], mult[s:s + BLOCK_SIZE]) for s in starts]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            partials = list(pool.map(lambda b: _block_sums(b[0], b[1], t), work))
    else:
        partials = [_block_sums(l, w, t) for l, w in work]
    stacked = np.array(partials)
    value = np.array([math.fsum(stacked[:, i]) for i in range(t.size)])
    tail = np.asarray(spec.tail_bound(t), dtype=float)
    flagged = np.zeros(t.size, dtype=bool) if tol is None else tail > tol * value
    return HeatTrace(t, value, tail, flagged)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisElement:
    power: Fraction
    log: bool = False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = t ** float(self.power)
        return out * np.log(t) if self.log else out

    def label(self):
        s = f"t^({self.power})"
        return s + "*log(t)" if self.log else s


def default_basis(m: int, top=Fraction(3, 2)) -> list:
    """Half-integer powers ``t^{-m/2} .. t^{top}`` plus ``t^{-1/2} log t``.

    ``top = 1/2`` is the shortest basis that contains every term of the expansion
    shape; two more powers absorb the truncation error of the asymptotic series
    over a window of useful width.
    """
    top = Fraction(top)
    if top.denominator not in (1, 2):
        raise ValueError("top power must be a multiple of 1/2")
    powers = [Fraction(k, 2) for k in range(-m, int(2 * top) + 1)]
    return [BasisElement(p) for p in powers] + [BasisElement(Fraction(-1, 2), True)]


@dataclass
class FitResult:
    basis: list
    coefficients: np.ndarray
    residual_norm: float
    condition: float
    refused: bool
    n_samples: int

    def coefficient(self, power, log=False) -> float:
        target = BasisElement(Fraction(power), log)
        for b, c in zip(self.basis, self.coefficients):
            if b == target:
                return float(c)
        raise KeyError(target.label())

    def predict(self, t):
        return sum(c * b(t) for b, c in zip(self.basis, self.coefficients))

    def as_dict(self):
        return {"basis": [{"power": str(b.power), "log": b.log} for b in self.basis],
                "coefficients": [float(c) for c in self.coefficients],
                "residual_norm": self.residual_norm, "condition": self.condition,
                "refused": self.refused, "n_samples": self.n_samples}


def fit_expansion(t, values, basis, weights=None, cond_threshold: float = 1e12) -> FitResult:
    """Weighted linear least squares of ``values`` on ``basis`` over sample times ``t``.

    Default weights ``1/values`` make the residual a relative error. Columns are
    equilibrated before the SVD; the condition diagnostic is the ratio of extreme
    singular values of the equilibrated design. Samples are sorted by ``t`` first
    so the result does not depend on input order.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    w = 1.0 / y if weights is None else np.asarray(weights, dtype=float)
    if t.size < 2 * len(basis):
        raise ValueError(f"need at least {2 * len(basis)} samples for {len(basis)} basis elements")
    order = np.lexsort((w, y, t))
    t, y, w = t[order], y[order], w[order]
    design = np.column_stack([b(t) for b in basis]) * w[:, None]
    rhs = y * w
    scale = np.linalg.norm(design, axis=0)
    u, s, vt = np.linalg.svd(design / scale, full_matrices=False)
    cond = float(s[0] / s[-1])
    coef = (vt.T @ ((u.T @ rhs) / s)) / scale
    resid = float(np.linalg.norm(design @ coef - rhs))
    return FitResult(list(basis), coef, resid, cond, cond > cond_threshold, int(t.size))


# ---------------------------------------------------------------------------
# end-to-end extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractProtocol:
    t_min: float = 4e-4
    t_max: float = 1e-2
    n_t: int = 60
    lambda_max: float | None = None
    tail_rtol: float = 1e-15
    cond_threshold: float = 1e12
    basis_top: Fraction = Fraction(3, 2)
    threads: int = 1

    def t_grid(self):
        return np.geomspace(self.t_min, self.t_max, self.n_t)


def auto_lambda_max(model: WedgeModel, t_min: float, tail_rtol: float) -> float:
    """Smallest lambda_max whose a-priori tail bound at ``t_min`` is ``tail_rtol`` of the Weyl trace."""
    m = model.m
    vol = wedge_volume(model)
    a = _li_yau_factor(m) * weyl_constant(vol, m)
    s = m / 2 + 1
    # Dirichlet traces sit a few percent below the Weyl term at t_min; keep a margin
    target = 0.1 * tail_rtol * vol / (4.0 * math.pi) ** (m / 2)

    def excess(x):
        return math.log(a * math.gamma(s) * gammaincc(s, x) + 1e-300) - math.log(target)

    x = brentq(excess, 1e-6, 2000.0)
    return x / t_min


@dataclass
class ExtractCResult:
    c_measured: float
    c_predicted: float
    abs_deviation: float
    rel_deviation: float | None
    b_fitted: float
    leading_fitted: float
    leading_predicted: float
    fit: FitResult
    trace: HeatTrace
    lambda_max: float
    modes: int
    rows: int
    tail_flagged: bool

    def as_dict(self):
        return {"c_measured": self.c_measured, "c_predicted": self.c_predicted,
                "abs_deviation": self.abs_deviation, "rel_deviation": self.rel_deviation,
                "b_fitted": self.b_fitted, "leading_fitted": self.leading_fitted,
                "leading_predicted": self.leading_predicted, "lambda_max": self.lambda_max,
                "modes": self.modes, "spectrum_rows": self.rows,
                "tail_flagged": self.tail_flagged, "fit": self.fit.as_dict()}


def extract_c(model: WedgeModel, protocol: ExtractProtocol = ExtractProtocol(),
              spectrum: SpectrumSet | None = None) -> ExtractCResult:
    """Fit the heat trace of the exact spectrum and compare its log coefficient with c."""
    m = model.m
    lam_max = protocol.lambda_max or auto_lambda_max(model, protocol.t_min, protocol.tail_rtol)
    spec = spectrum if spectrum is not None else cone_spectrum(model, lam_max)
    ts = protocol.t_grid()
    tr = heat_trace(spec, ts, tol=protocol.tail_rtol, threads=protocol.threads)
    basis = default_basis(m, protocol.basis_top)
    fit = fit_expansion(ts, tr.value, basis, cond_threshold=protocol.cond_threshold)
    if fit.refused:
        raise FitRefusedError(
            f"fit refused: condition {fit.condition:.3e} exceeds {protocol.cond_threshold:.3e}",
            fit=fit)
    c_meas = fit.coefficient(Fraction(-1, 2), log=True)
    c_pred = heat_log_coefficient_c(model)
    dev = abs(c_meas - c_pred)
    lead_pred = wedge_volume(model) / (4.0 * math.pi) ** (m / 2)
    return ExtractCResult(
        c_measured=c_meas, c_predicted=c_pred, abs_deviation=dev,
        rel_deviation=dev / abs(c_pred) if c_pred != 0 else None,
        b_fitted=fit.coefficient(Fraction(-1, 2)),
        leading_fitted=fit.coefficient(Fraction(-m, 2)), leading_predicted=lead_pred,
        fit=fit, trace=tr, lambda_max=float(spec.lambda_max), modes=spec.mode_count,
        rows=spec.size, tail_flagged=bool(tr.flagged.any()))
