"""Tests for the phase-plane objects: field, equilibria, nullcline residuals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helisurf.errors import DomainError, NoEquilibriumError, OnNullclineError
from helisurf.phase import (
    F_eps,
    PhaseModel,
    PhasePoint,
    angle_nu,
    axis_points,
    beta0,
    equilibrium,
    f2_and_gradient,
    f_eps_level,
    fd_jacobian,
    linearize_at_equilibrium,
    monotonicity_region,
    vector_field,
)
from helisurf.prescription import parse_h


def model(text, c0=1.0, eps=1):
    return PhaseModel(parse_h(text), c0, eps)


# ---------------------------------------------------------------------------
# model and point validation
# ---------------------------------------------------------------------------

def test_zero_pitch_rejected():
    with pytest.raises(DomainError):
        PhaseModel(parse_h("1"), 0.0)


def test_bad_eps_rejected():
    with pytest.raises(DomainError):
        PhaseModel(parse_h("1"), 1.0, eps=2)


def test_phase_point_strictly_interior():
    PhasePoint(0.5, 0.0)
    with pytest.raises(DomainError):
        PhasePoint(0.0, 0.5)
    with pytest.raises(DomainError):
        PhasePoint(1.0, 1.0)


# ---------------------------------------------------------------------------
# vector field
# ---------------------------------------------------------------------------

def test_field_vanishes_at_equilibrium():
    dx, dy = vector_field(model("1"), PhasePoint(0.5, 0.0))
    assert dx == 0.0
    assert abs(dy) < 1e-15


def test_field_value_on_axis_of_symmetry():
    # h == 1, c0 = 1 at (1, 0): numerator 1 - 2, denominator 1 + 1
    dx, dy = vector_field(model("1"), PhasePoint(1.0, 0.0))
    assert dx == 0.0
    assert dy == pytest.approx(-0.5, abs=1e-15)


def test_field_value_off_axis():
    # h = t^2, c0 = 1 at (1, 1/2); value re-derived symbolically from the
    # second-order profile equation: dy/ds = 9/16 - sqrt(15)/16
    dx, dy = vector_field(model("t^2"), PhasePoint(1.0, 0.5))
    assert dx == 0.5
    assert dy == pytest.approx(9.0 / 16.0 - math.sqrt(15.0) / 16.0, abs=1e-14)


def test_field_rejects_boundary():
    m = model("1")
    with pytest.raises(DomainError):
        vector_field(m, (0.0, 0.5))
    with pytest.raises(DomainError):
        vector_field(m, (1.0, 1.0))
    with pytest.raises(DomainError):
        vector_field(m, (-0.5, 0.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.05, max_value=5.0),
       st.floats(min_value=-0.95, max_value=0.95),
       st.floats(min_value=0.25, max_value=2.0))
def test_even_prescription_field_symmetric_in_y(x, y, c0):
    # for even h the angle function's sign flip is invisible, so dy/ds is even in y
    m = PhaseModel(parse_h("t^2 + 0.3"), c0)
    _, dy_plus = vector_field(m, (x, y))
    _, dy_minus = vector_field(m, (x, -y))
    assert dy_plus == pytest.approx(dy_minus, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# equilibrium and axis points
# ---------------------------------------------------------------------------

def test_equilibrium_constant_prescription():
    e0 = equilibrium(model("1"))
    assert (e0.x, e0.y) == (0.5, 0.0)


def test_equilibrium_absent_wrong_orientation():
    assert equilibrium(model("1", eps=-1)) is None


def test_equilibrium_absent_when_h_vanishes_at_zero():
    assert equilibrium(model("t^2")) is None
    assert equilibrium(model("t^2", eps=-1)) is None


def test_axis_points_constant_prescription():
    pts = axis_points(model("1"))
    assert pts is not None
    (x1, y1), (x2, y2) = pts
    assert x1 == 0.0 and x2 == 0.0
    assert y1 == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    assert y2 == -y1


def test_axis_points_h_vanishing_at_zero():
    for eps in (1, -1):
        pts = axis_points(model("t^2", eps=eps))
        assert pts[0] == (0.0, 1.0)
        assert pts[1] == (0.0, -1.0)


def test_axis_points_absent():
    assert axis_points(model("1", eps=-1)) is None


# ---------------------------------------------------------------------------
# F_eps and f_eps
# ---------------------------------------------------------------------------

def test_F_values_constant_prescription():
    m = model("1")
    assert F_eps(m, (1.0, 0.0)) == pytest.approx(1.0, abs=1e-15)
    assert F_eps(m, (0.5, 0.0)) == pytest.approx(0.0, abs=1e-15)


def test_F_negative_left_of_equilibrium():
    assert F_eps(model("t^2 + 1"), (0.25, 0.0)) < 0


def test_F_continuous_up_to_axis():
    m = model("t^2 + 1", c0=1.5)
    for y in (0.3, -0.8):
        exact = F_eps(m, (0.0, y))
        h0 = 1.0
        expected = 2 * m.c0**2 * y**2 * (h0 * abs(m.c0 * y) - math.sqrt(1 - y**2))
        assert exact == pytest.approx(expected, abs=1e-14)
        assert F_eps(m, (1e-9, y)) == pytest.approx(exact, abs=1e-7)


def test_f_level_values():
    m = model("1")
    assert f_eps_level(m, (1.0, 0.0)) == pytest.approx(0.5, abs=1e-15)
    # boundary continuation on the axis
    assert f_eps_level(m, (0.0, 1.0 / math.sqrt(2.0))) == pytest.approx(1.0, abs=1e-12)


def test_f_level_corner_rejected():
    with pytest.raises(DomainError):
        f_eps_level(model("1"), (0.0, 0.0))


def test_sign_dy_equals_minus_sign_F():
    # dy/ds = -sqrt(1 - y^2) F_eps / (x^3 + c0^2 x) links the two expressions
    m = model("t^2 + 1", c0=0.7)
    for x, y in [(0.3, 0.2), (1.5, -0.6), (0.8, 0.9), (2.5, 0.01)]:
        _, dy = vector_field(m, (x, y))
        f = F_eps(m, (x, y))
        expected = -math.sqrt(1 - y * y) * f / (x**3 + m.c0**2 * x)
        assert dy == pytest.approx(expected, rel=1e-12, abs=1e-14)


# ---------------------------------------------------------------------------
# F2 certificate
# ---------------------------------------------------------------------------

def test_f2_on_v_axis_vanishes_at_equilibrium_abscissa():
    m = model("1")
    u0 = 1.0 / (4.0 * 1.0**2)  # x0^2
    val, _ = f2_and_gradient(m, u0, 0.0)
    assert abs(val) < 1e-14
    val_larger, _ = f2_and_gradient(m, 1.0, 0.0)
    assert val_larger == pytest.approx(2.0 - 1.0, abs=1e-14)


def test_f2_domain_error():
    with pytest.raises(DomainError):
        f2_and_gradient(model("1"), 1.0, 0.9)  # radicand 0.19 - 0.81 < 0
    with pytest.raises(DomainError):
        f2_and_gradient(model("1"), 0.0, 0.0)


def test_f2_gradient_matches_finite_differences():
    m = model("t^2 + 1", c0=1.3)
    step = 1e-7
    for u, v in [(1.0, 0.1), (0.5, -0.3), (2.0, 0.5), (4.0, 0.0)]:
        _, (du, dv) = f2_and_gradient(m, u, v)
        fd_u = (f2_and_gradient(m, u + step, v)[0]
                - f2_and_gradient(m, u - step, v)[0]) / (2 * step)
        fd_v = (f2_and_gradient(m, u, v + step)[0]
                - f2_and_gradient(m, u, v - step)[0]) / (2 * step)
        assert du == pytest.approx(fd_u, rel=1e-6, abs=1e-6)
        assert dv == pytest.approx(fd_v, rel=1e-6, abs=1e-6)


def test_f2_consistent_with_F_through_the_coordinate_change():
    # F2(x^2, nu) and F_eps(x, y) vanish together
    m = model("t^2 + 1")
    x, y = 0.9, 0.4
    nu = angle_nu(m, x, y)
    f2, _ = f2_and_gradient(m, x * x, nu)
    f = F_eps(m, (x, y))
    assert math.copysign(1, f2) == math.copysign(1, f)


# ---------------------------------------------------------------------------
# beta0 curves
# ---------------------------------------------------------------------------

def test_beta0_boundary_points():
    b = beta0(model("(t - 0.6)^2"), 0.6)
    assert b.boundary_point[0] == pytest.approx(0.75, abs=1e-15)
    assert b.boundary_point[1] == 1.0
    b2 = beta0(model("(t - 0.5)*(t + 2)"), 0.5)
    assert b2.boundary_point[0] == pytest.approx(math.sqrt(3.0) / 3.0, abs=1e-12)


def test_beta0_is_a_constant_angle_curve():
    m = model("(t - 0.6)^2")
    b = beta0(m, 0.6, x_max=8.0)
    nus = angle_nu(m, b.x[1:], b.y[1:])
    np.testing.assert_allclose(nus, 0.6, rtol=0, atol=1e-12)


def test_beta0_asymptote():
    b = beta0(model("(t - 0.5)*(t + 2)"), 0.5, x_max=200.0)
    assert b.asymptote_y == 0.5
    assert abs(b.y[-1] - 0.5) < 1e-4


def test_beta0_degenerate_zero():
    b = beta0(model("t"), 0.0)
    assert b.boundary_point is None
    assert np.all(b.y == 0.0)


def test_beta0_negative_t0_mirrors():
    b = beta0(model("(t + 0.6)^2"), -0.6)
    assert b.boundary_point == pytest.approx((0.75, -1.0))
    assert np.all(b.y[1:] < 0)


def test_beta0_rejects_bad_t0():
    with pytest.raises(DomainError):
        beta0(model("t"), 1.0)


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def test_linearization_eigenvalues_unit_case():
    jac, eigvals = linearize_at_equilibrium(model("1"))
    assert jac[0, 0] == 0.0 and jac[0, 1] == 1.0 and jac[1, 1] == 0.0
    assert jac[1, 0] == pytest.approx(-4.0 / 5.0, abs=1e-15)
    target = 2.0 / math.sqrt(5.0)
    assert sorted(ev.imag for ev in eigvals) == pytest.approx([-target, target])
    assert max(abs(ev.real) for ev in eigvals) < 1e-12


def test_linearization_pitch_two():
    jac, _ = linearize_at_equilibrium(model("1", c0=2.0))
    assert jac[1, 0] == pytest.approx(-4.0 / 17.0, abs=1e-15)


def test_linearization_requires_equilibrium():
    with pytest.raises(NoEquilibriumError):
        linearize_at_equilibrium(model("t^2"))


@pytest.mark.parametrize("text,c0", [("1", 1.0), ("t^2 + 1", 1.0),
                                     ("cos(40*t) + 2", 0.5),
                                     ("t + 2", 1.5)])
def test_linearization_matches_finite_differences(text, c0):
    m = model(text, c0)
    jac, _ = linearize_at_equilibrium(m)
    fd = fd_jacobian(m, equilibrium(m))
    np.testing.assert_allclose(jac, fd, rtol=0, atol=1e-4)


def test_noneven_prescription_has_real_eigenvalue_part():
    # h'(0) != 0 tilts the linearization off the purely imaginary axis
    _, eigvals = linearize_at_equilibrium(model("t + 2"))
    assert all(ev.real != 0 for ev in eigvals)


# ---------------------------------------------------------------------------
# monotonicity regions
# ---------------------------------------------------------------------------

def test_monotonicity_sign_dx_follows_y():
    m = model("1")
    assert monotonicity_region(m, (1.0, 0.1))[0] == 1
    assert monotonicity_region(m, (1.0, -0.1))[0] == -1


def test_monotonicity_sign_dy():
    m = model("1")
    assert monotonicity_region(m, (1.0, 0.1))[1] == -1
    assert monotonicity_region(m, (0.2, 0.1))[1] == 1


def test_monotonicity_on_nullcline_raises():
    m = model("1")
    with pytest.raises(OnNullclineError):
        monotonicity_region(m, (1.0, 0.0))  # on y = 0
    with pytest.raises(OnNullclineError):
        monotonicity_region(m, (0.5, 1e-12))


def test_monotonicity_consistent_with_field():
    m = model("cos(40*t) + 2", c0=0.8)
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = rng.uniform(0.05, 4.0)
        y = rng.uniform(-0.95, 0.95)
        try:
            sx, sy = monotonicity_region(m, (x, y))
        except OnNullclineError:
            continue
        dx, dy = vector_field(m, (x, y))
        assert math.copysign(1, dx) == sx
        assert math.copysign(1, dy) == sy
