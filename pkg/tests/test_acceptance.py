"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL criterion N: ...`` line, printed as it runs
and again in the terminal summary.
"""
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from wedgeheat.bessel import bessel_zeros
from wedgeheat.chart_geometry import (Circle, FlatTorus, RoundSphere, curvature_from_jet,
                                      laplacian_scalar_field)
from wedgeheat.expansion_engine import c_dim5, finite_part_power_integral, heat_log_coefficient_c
from wedgeheat.spectral_sim import BasisElement, ExtractProtocol, extract_c, fit_expansion
from wedgeheat.wedge_geometry import (WedgeModel, WedgePoint, random_point, verify_transformation,
                                      wedge_curvature, wedge_laplacian_of_scalar, wedge_metric_jet)

import conftest

SEED = 20240601


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


def presets():
    out = [WedgeModel(3, Circle()), WedgeModel(3, FlatTorus((1.0,)))]
    out += [WedgeModel(3, RoundSphere(1, rho)) for rho in (0.8, 1.0, 1.3)]
    for m in (4, 5, 6):
        out.append(WedgeModel(m, FlatTorus((1.0,) * (m - 2))))
        out += [WedgeModel(m, RoundSphere(m - 2, rho)) for rho in (0.8, 1.0, 1.3)]
    return out


def test_criterion_1_closed_form_curvature():
    rng = np.random.default_rng(SEED)
    worst_rel = worst_mixed = 0.0
    failures = []
    start = time.perf_counter()
    models = presets()
    for model in models:
        for _ in range(50):
            rep = verify_transformation(model, random_point(model, rng), 1e-8, 1e-9)
            worst_rel = max([worst_rel] + [d.max_rel for d in rep.deviations])
            worst_mixed = max(worst_mixed, rep.mixed_max_abs)
            if not rep.passed:
                failures.append(f"m={model.m} {model.fiber.kind}: {rep.failures}")
    elapsed = time.perf_counter() - start
    ok = not failures and worst_rel <= 1e-8 and worst_mixed <= 1e-9 and elapsed < 10.0
    record(1, ok, f"{len(models)} presets x 50 points, max rel {worst_rel:.2e} (tol 1e-8), "
                  f"max mixed {worst_mixed:.2e} (tol 1e-9), {elapsed:.2f} s (limit 10 s)")
    assert ok, failures[:3]


def test_criterion_2_flat_cone():
    worst = 0.0
    rng = np.random.default_rng(SEED)
    for m in (3, 4, 5, 6):
        model = WedgeModel(m, RoundSphere(m - 2, 1.0))
        for _ in range(20):
            p = random_point(model, rng)
            closed = wedge_curvature(model, p)
            direct = curvature_from_jet(wedge_metric_jet(model, p))
            for curv in (closed, direct):
                worst = max(worst, abs(curv.scal), math.sqrt(abs(curv.ricci_norm_sq)),
                            math.sqrt(abs(curv.riem_norm_sq)),
                            float(np.max(np.abs(curv.riemann))), float(np.max(np.abs(curv.ricci))))
    ok = worst <= 1e-10
    record(2, ok, f"unit-sphere fibers m=3..6, max curvature norm {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_3_coefficient_consistency():
    models = {f"S3({rho})": WedgeModel(5, RoundSphere(3, rho)) for rho in (0.8, 1.25, 1.5)}
    models["T3"] = WedgeModel(5, FlatTorus((1.0, 1.0, 1.0)))
    worst_rel = 0.0
    for model in models.values():
        c = heat_log_coefficient_c(model)
        worst_rel = max(worst_rel, abs(c - c_dim5(model)) / abs(c_dim5(model)))

    # Laplacian term of u2, scaled by r^4 so it is r-independent, over the full quadrature
    worst_lap = 0.0
    for model in list(models.values()) + [WedgeModel(5, RoundSphere(3, 1.0))]:
        lap = laplacian_scalar_field(model.fiber.scal, model.fiber)
        nodes, weights = model.fiber.quadrature
        r = 0.5
        total = math.fsum(w * 12.0 * wedge_laplacian_of_scalar(model, WedgePoint(r, 0.0, x), lap)
                          / 360.0 * r ** 4 for x, w in zip(nodes, weights))
        worst_lap = max(worst_lap, abs(total))

    signs = {}
    for rho in (0.8, 1.0, 1.25, 1.3, 1.5):
        signs[rho] = heat_log_coefficient_c(WedgeModel(5, RoundSphere(3, rho)))
    signs["T3"] = heat_log_coefficient_c(models["T3"])
    sign_ok = all(c <= 0 for c in signs.values())
    zero_only_at_one = all((abs(c) <= 1e-15) == (k == 1.0) for k, c in signs.items())

    ok = worst_rel <= 1e-8 and worst_lap <= 1e-10 and sign_ok and zero_only_at_one
    record(3, ok, f"c vs c_dim5 max rel {worst_rel:.2e} (tol 1e-8), Laplacian term "
                  f"{worst_lap:.2e} (tol 1e-10), c<=0 on all m=5 presets: {sign_ok}, "
                  f"zero only at rho=1: {zero_only_at_one}")
    assert ok


@pytest.fixture(scope="module")
def sphere_125():
    return extract_c(WedgeModel(5, RoundSphere(3, 1.25)), ExtractProtocol())


@pytest.mark.slow
def test_criterion_4_spectral_ground_truth(sphere_125):
    res = sphere_125
    ref = abs(res.c_predicted)
    null_sphere = extract_c(WedgeModel(5, RoundSphere(3, 1.0)), ExtractProtocol())
    null_even = extract_c(WedgeModel(4, RoundSphere(2, 1.3)), ExtractProtocol())
    within = res.rel_deviation <= 0.10
    null1 = abs(null_sphere.c_measured) <= 0.01 * ref
    null2 = abs(null_even.c_measured) <= 0.01 * ref
    ok = within and null1 and null2 and res.rows <= 10 ** 7
    record(4, ok, f"S3(1.25) fitted c {res.c_measured:.6e} vs predicted {res.c_predicted:.6e}, "
                  f"rel {res.rel_deviation:.2e} (tol 0.1); nulls |c| rho=1 "
                  f"{abs(null_sphere.c_measured):.2e}, m=4 {abs(null_even.c_measured):.2e} "
                  f"(limit {0.01 * ref:.2e}); lambda_max {res.lambda_max:.3g}, "
                  f"{res.rows} spectrum rows")
    assert ok


@pytest.mark.slow
def test_criterion_5_weyl_leading_term(sphere_125):
    res = sphere_125
    vol = math.pi ** 3 * 1.25 ** 3
    expected = vol / (4 * math.pi) ** 2.5
    rel = abs(res.leading_fitted - expected) / expected
    ok = rel <= 0.01
    record(5, ok, f"fitted t^(-5/2) coefficient {res.leading_fitted:.10e} vs "
                  f"{expected:.10e}, rel {rel:.2e} (tol 1e-2)")
    assert ok


SELF_TEST_BASIS = ([BasisElement(Fraction(k, 2)) for k in range(-5, 0)]
                   + [BasisElement(Fraction(-1, 2), True), BasisElement(Fraction(0))])


def _recovery(basis, t, rng, trials=50):
    worst = 0.0
    for _ in range(trials):
        true = rng.uniform(0.5, 2.0, len(basis)) * rng.choice([-1, 1], len(basis))
        values = sum(c * b(t) for b, c in zip(basis, true))
        fit = fit_expansion(t, values, basis)
        worst = max(worst, float(np.max(np.abs(fit.coefficients - true) / np.abs(true))))
    return worst


def test_criterion_6_fit_self_test():
    rng = np.random.default_rng(SEED)
    worst = _recovery(SELF_TEST_BASIS, np.geomspace(5e-3, 5e-1, 60), rng)
    # reported only: the narrower extraction window has a larger dynamic range
    narrow = _recovery(SELF_TEST_BASIS, np.geomspace(4e-4, 1e-2, 60), rng)
    t = np.geomspace(5e-3, 5e-1, 60)
    y = sum(b(t) for b in SELF_TEST_BASIS)
    strict = fit_expansion(t, y, SELF_TEST_BASIS, cond_threshold=10.0)
    # duplicating a column makes the design singular under the default threshold
    singular = fit_expansion(t, y, SELF_TEST_BASIS + [BasisElement(Fraction(0))])
    refused = strict.refused and singular.refused
    ok = worst <= 1e-8 and refused
    record(6, ok, f"synthetic recovery max rel {worst:.2e} (tol 1e-8; {narrow:.1e} on the "
                  f"extraction window), refusal flag set above threshold: {refused}")
    assert ok


def test_criterion_7_finite_part_rules():
    got = {a: finite_part_power_integral(a, 1) for a in (2, 0, -3, -1)}
    expected = {2: Fraction(1, 3), 0: Fraction(1), -3: Fraction(-1, 2), -1: Fraction(0)}
    ok = all(isinstance(v, Fraction) and v == expected[a] for a, v in got.items())
    record(7, ok, "fp int_0^1 r^a dr: " + ", ".join(f"a={a} -> {v}" for a, v in got.items()))
    assert ok


def _bisect(nu, a, b):
    f = lambda x: mpmath.besselj(nu, x)
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    for _ in range(80):
        mid = (a + b) / 2
        if f(a) * f(mid) <= 0:
            b = mid
        else:
            a = mid
    return float((a + b) / 2)


def test_criterion_8_bessel_kernel():
    e0 = abs(bessel_zeros(0, 1)[0] - _bisect(0, 2, 3))
    e1 = abs(bessel_zeros(1, 1)[0] - _bisect(1, 3, 4))
    orders = [k / 4 for k in range(0, 161)] + [0.5 * k + 0.3 for k in range(0, 60)]
    n = 40
    broken = 0
    for nu in orders:
        a = bessel_zeros(nu, n + 1)
        b = bessel_zeros(nu + 1, n)
        if not (nu < a[0] and np.all(a[:-1] < b) and np.all(b < a[1:])):
            broken += 1
    ok = e0 <= 1e-10 and e1 <= 1e-10 and broken == 0
    record(8, ok, f"|j01 - bisection| {e0:.1e}, |j11 - bisection| {e1:.1e} (tol 1e-10), "
                  f"interlacing over {len(orders)} orders x {n} zeros, violations {broken}")
    assert ok
