"""Tests for nullcline tracing: counts, residuals, endpoints, certificates."""

import math

import numpy as np
import pytest

from helisurf.errors import EmptyNullclineError
from helisurf.nullcline import trace_nullcline, write_nullcline_csv
from helisurf.phase import PhaseModel, angle_nu, axis_points, equilibrium, f_eps_level
from helisurf.prescription import parse_h


def model(text, c0=1.0, eps=1):
    return PhaseModel(parse_h(text), c0, eps)


def test_window_validation():
    with pytest.raises(ValueError):
        trace_nullcline(model("1"), -1.0)
    with pytest.raises(ValueError):
        trace_nullcline(model("1"), 4.0, n=32)


def test_connected_case_single_component():
    curve = trace_nullcline(model("t^2 + 1"), 4.0, 400)
    assert len(curve.components) == 1
    comp = curve.components[0]
    assert not comp.closed
    kinds = {e.kind for e in comp.endpoints}
    assert kinds == {"axis_point"}


def test_empty_case():
    with pytest.raises(EmptyNullclineError):
        trace_nullcline(model("t^2 + 1", eps=-1), 4.0, 400)


def test_three_components():
    curve = trace_nullcline(model("(t - 0.6)^2"), 6.0, 400)
    assert len(curve.components) == 3


def test_oscillatory_prescription_disconnected():
    curve = trace_nullcline(model("cos(40*t) + 2"), 4.0, 400)
    assert len(curve.components) > 1
    # this prescription pinches off closed ovals away from the boundary
    assert any(c.closed for c in curve.components)
    for c in curve.components:
        if c.closed:
            assert c.endpoints is None


def test_residuals_below_tolerance():
    for text in ["t^2 + 1", "(t - 0.6)^2", "cos(40*t) + 2"]:
        curve = trace_nullcline(model(text), 4.0, 200)
        for comp in curve.components:
            assert comp.residuals.max() < 1e-8


def test_regularity_certificate():
    curve = trace_nullcline(model("t^2 + 1"), 4.0, 400)
    for comp in curve.components:
        assert comp.regular.all()


def test_axis_endpoints_match_axis_points():
    m = model("t^2 + 1")
    curve = trace_nullcline(m, 4.0, 400)
    (_, yp), _ = axis_points(m)
    ends = curve.components[0].endpoints
    got = sorted(e.point[1] for e in ends)
    assert got == pytest.approx([-yp, yp], abs=1e-3)
    for e in ends:
        assert e.point[0] == 0.0


def test_angle_boundary_endpoints_match_p0():
    # h = (t - 0.6)^2 has the angle-boundary limit at x = 3/4 on y = 1
    curve = trace_nullcline(model("(t - 0.6)^2"), 6.0, 400)
    angle_ends = [e for c in curve.components if c.endpoints
                  for e in c.endpoints if e.kind == "angle_boundary"]
    assert len(angle_ends) == 2
    for e in angle_ends:
        assert e.point[0] == pytest.approx(0.75, abs=1e-3)
        assert e.point[1] == 1.0


def test_constant_prescription_is_level_curve():
    # for h == H0 the nullcline is exactly the H0-level of f_eps
    m = model("0.8")
    curve = trace_nullcline(m, 4.0, 400)
    assert len(curve.components) == 1
    for x, y in curve.components[0].samples:
        assert abs(f_eps_level(m, (x, y)) - 0.8) < 1e-6


def test_nullcline_avoids_constant_angle_curve():
    # Gamma never meets beta_0: the angle function stays away from the zero of h
    m = model("(t - 0.6)^2")
    curve = trace_nullcline(m, 6.0, 400)
    for comp in curve.components:
        nus = angle_nu(m, comp.samples[:, 0], comp.samples[:, 1])
        assert np.min(np.abs(nus - 0.6)) > 1e-3


def test_y_zero_crossing_only_at_equilibrium():
    m = model("t^2 + 1")
    curve = trace_nullcline(m, 4.0, 400)
    e0 = equilibrium(m)
    for comp in curve.components:
        near_zero = comp.samples[np.abs(comp.samples[:, 1]) < 1e-6]
        for x, _ in near_zero:
            assert abs(x - e0.x) < 1e-6
        # the smallest-|y| samples must bracket the equilibrium abscissa
        k = np.argmin(np.abs(comp.samples[:, 1]))
        assert abs(comp.samples[k, 0] - e0.x) < 0.01


def test_component_ordering_deterministic():
    a = trace_nullcline(model("(t - 0.6)^2"), 6.0, 200)
    b = trace_nullcline(model("(t - 0.6)^2"), 6.0, 200)
    for ca, cb in zip(a.components, b.components):
        np.testing.assert_array_equal(ca.samples, cb.samples)


def test_csv_export(tmp_path):
    curve = trace_nullcline(model("t^2 + 1"), 4.0, 128)
    out = tmp_path / "gamma.csv"
    write_nullcline_csv(curve, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "component_id,x,y,F_residual,regular_flag"
    assert len(lines) == 1 + sum(len(c.samples) for c in curve.components)
    cid, x, y, res, flag = lines[1].split(",")
    assert cid == "0"
    assert float(res) < 1e-8
    assert flag in ("0", "1")
    # byte-identical on re-export
    out2 = tmp_path / "gamma2.csv"
    write_nullcline_csv(curve, out2)
    assert out.read_bytes() == out2.read_bytes()
