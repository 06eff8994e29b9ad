import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wedgeheat.chart_geometry import Circle, FlatTorus, RoundSphere, curvature_from_jet
from wedgeheat.errors import VerificationError
from wedgeheat.wedge_geometry import (WedgeModel, WedgePoint, random_point, verify_transformation,
                                      wedge_christoffel, wedge_curvature,
                                      wedge_laplacian_of_scalar, wedge_metric_jet, wedge_ricci,
                                      wedge_riemann, wedge_scalar)

import oracles

R, TH = 0, 1
TORUS5 = WedgeModel(5, FlatTorus((1.0, 1.0, 1.0)))


def test_metric_jet_torus_example():
    jet = wedge_metric_jet(TORUS5, WedgePoint(0.5, 0.3, np.zeros(3)))
    np.testing.assert_allclose(jet.g[2:, 2:], 0.25 * np.eye(3))
    np.testing.assert_allclose(jet.dg[2:, 2:, R], np.eye(3))
    np.testing.assert_allclose(jet.ddg[2:, 2:, R, R], 2 * np.eye(3))
    assert jet.g[R, R] == jet.g[TH, TH] == 1.0


@pytest.mark.parametrize("fiber", [RoundSphere(3, 1.3), FlatTorus((1.0, 2.0, 1.5))])
def test_no_theta_dependence_in_jet(fiber):
    model = WedgeModel(5, fiber)
    p = random_point(model, np.random.default_rng(4))
    jet = wedge_metric_jet(model, p)
    assert not np.any(jet.dg[:, :, TH])
    assert not np.any(jet.ddg[:, :, TH, :]) and not np.any(jet.ddg[:, :, :, TH])


def test_christoffel_torus_example():
    gam = wedge_christoffel(TORUS5, WedgePoint(0.25, 0.0, np.zeros(3)))
    assert gam[R, 2, 2] == pytest.approx(-0.25)
    assert gam[2, R, 2] == pytest.approx(4.0)
    assert gam[2, 2, R] == pytest.approx(4.0)
    assert not np.any(gam[TH]) and not np.any(gam[:, TH, :]) and not np.any(gam[:, :, TH])


def test_scalar_examples():
    x = np.array([0.8, 1.1, 2.0])
    unit = WedgeModel(5, RoundSphere(3))
    for r in (0.1, 0.5, 0.9):
        assert wedge_scalar(unit, WedgePoint(r, 0.0, x)) == pytest.approx(0.0, abs=1e-12)
    assert wedge_scalar(TORUS5, WedgePoint(0.5, 0.0, np.zeros(3))) == -24.0
    cone3 = WedgeModel(3, Circle())
    assert wedge_scalar(cone3, WedgePoint(0.3, 0.0, np.array([1.0]))) == 0.0


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_unit_sphere_fiber_is_flat(m):
    model = WedgeModel(m, RoundSphere(m - 2))
    p = random_point(model, np.random.default_rng(m))
    assert np.abs(wedge_riemann(model, p)).max() <= 1e-12
    assert np.abs(wedge_ricci(model, p)).max() <= 1e-12


def test_ricci_torus_example():
    ric = wedge_ricci(TORUS5, WedgePoint(0.5, 0.0, np.zeros(3)))
    np.testing.assert_allclose(ric, -8 * np.eye(3))


@pytest.mark.parametrize("model", [WedgeModel(5, RoundSphere(3, 1.3)),
                                   WedgeModel(6, FlatTorus((1.0, 2.0, 1.0, 3.0))),
                                   WedgeModel(4, RoundSphere(2, 0.8))])
def test_contraction_consistency(model):
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = random_point(model, rng)
        gv_inv = np.linalg.inv(model.fiber.jet(p.x).g)
        contracted = np.einsum("ik,ijkl->jl", gv_inv, wedge_riemann(model, p))
        np.testing.assert_allclose(contracted, wedge_ricci(model, p), atol=1e-10)


def test_m4_wedge_against_symbolic_oracle():
    model = WedgeModel(4, RoundSphere(2, 1.3))
    p = WedgePoint(0.4, 1.0, np.array([0.7, 2.0]))
    closed = wedge_curvature(model, p)
    direct = curvature_from_jet(wedge_metric_jet(model, p))
    for curv in (closed, direct):
        assert curv.scal == pytest.approx(oracles.WEDGE4_SCAL, rel=1e-12)
        assert curv.ricci_norm_sq == pytest.approx(oracles.WEDGE4_RIC_SQ, rel=1e-11)
        assert curv.riem_norm_sq == pytest.approx(oracles.WEDGE4_RIEM_SQ, rel=1e-11)


def test_verify_transformation_examples():
    model = WedgeModel(5, RoundSphere(3, 1.3))
    p = WedgePoint(0.4, 1.0, np.array([0.9, 1.7, 3.0]))
    rep = verify_transformation(model, p, 1e-8)
    assert rep.passed, rep.failures
    assert rep.raise_if_failed() is rep
    torus = WedgeModel(4, FlatTorus((1.0, 2.0)))
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert verify_transformation(torus, random_point(torus, rng), 1e-8).passed


def test_zero_tolerance_fails():
    rep = verify_transformation(TORUS5, WedgePoint(0.5, 0.0, np.zeros(3)), 0.0)
    assert not rep.passed
    with pytest.raises(VerificationError):
        rep.raise_if_failed()


def test_report_names_offending_component():
    rep = verify_transformation(WedgeModel(5, RoundSphere(3, 1.3)),
                                WedgePoint(0.3, 0.0, np.array([0.9, 1.7, 3.0])), 1e-30)
    assert not rep.passed
    assert any(f.startswith("christoffel(") or f.startswith("riemann(") for f in rep.failures)
    d = rep.as_dict()
    assert {"tol", "passed", "failures", "deviations", "mixed_max_abs"} <= set(d)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.0, 6.2))
def test_r_scaling_and_theta_invariance(r1, r2, theta):
    model = WedgeModel(5, RoundSphere(3, 1.3))
    x = np.array([0.9, 1.7, 3.0])
    a = wedge_curvature(model, WedgePoint(r1, 0.0, x))
    b = wedge_curvature(model, WedgePoint(r2, theta, x))
    assert a.scal * r1 ** 2 == pytest.approx(b.scal * r2 ** 2, rel=1e-12)
    assert a.riem_norm_sq * r1 ** 4 == pytest.approx(b.riem_norm_sq * r2 ** 4, rel=1e-12)
    assert a.ricci_norm_sq * r1 ** 4 == pytest.approx(b.ricci_norm_sq * r2 ** 4, rel=1e-12)
    c = wedge_curvature(model, WedgePoint(r1, theta, x))
    np.testing.assert_array_equal(a.riemann, c.riemann)


def test_invalid_points_and_models():
    with pytest.raises(ValueError):
        WedgePoint(1.0, 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        WedgePoint(0.0, 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        WedgeModel(5, RoundSphere(2))
    with pytest.raises(ValueError):
        WedgeModel(2, Circle())


def _radial_fd_laplacian(model, x, r, h=1e-3):
    def scal(rr):
        return wedge_scalar(model, WedgePoint(rr, 0.0, x))
    f = [scal(r + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    return -(d2 + (model.m - 2) / r * d1)


@pytest.mark.parametrize("model", [WedgeModel(3, Circle()), WedgeModel(4, RoundSphere(2, 1.3)),
                                   WedgeModel(5, RoundSphere(3, 0.8)),
                                   WedgeModel(6, FlatTorus((1.0, 1.0, 1.0, 1.0))),
                                   WedgeModel(6, RoundSphere(4, 1.2, resolution=8))])
def test_laplacian_of_scalar_closed_form(model):
    rng = np.random.default_rng(8)
    m = model.m
    for _ in range(3):
        p = random_point(model, rng)
        p = WedgePoint(min(max(p.r, 0.2), 0.8), p.theta, p.x)
        s0 = model.fiber.scal(p.x)
        closed = (2 * m - 10) * (s0 - (m - 2) * (m - 3)) / p.r ** 4
        got = wedge_laplacian_of_scalar(model, p)
        assert got == pytest.approx(closed, rel=1e-8, abs=1e-7)
        # the two radial terms cancel at m = 5, so measure against their size
        scale = 6 * abs(s0 - (m - 2) * (m - 3)) / p.r ** 4
        assert abs(got - _radial_fd_laplacian(model, p.x, p.r)) <= 1e-6 * max(scale, 1.0)


def test_laplacian_of_scalar_vanishes_in_dimension_five():
    for fiber in (RoundSphere(3), RoundSphere(3, 1.25), FlatTorus((1.0, 1.0, 1.0))):
        model = WedgeModel(5, fiber)
        p = random_point(model, np.random.default_rng(0))
        assert abs(wedge_laplacian_of_scalar(model, p)) <= 1e-7
