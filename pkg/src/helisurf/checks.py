"""Cross-module invariant suites with machine-readable verdicts.

Each suite measures a few quantities that must hold for any admissible
prescription (derivative consistency, angle bounds, curvature residuals,
symmetry retraces, ...) and reports them as uniform records, so a front end
can print one line per invariant and fail loudly when any is violated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoEquilibriumError, NormalMismatchError
from .geometry import build_mesh, build_profile, glue_check
from .nullcline import trace_nullcline
from .orbits import (
    CurveState,
    IntegrateOptions,
    integrate,
    start_from_axis,
)
from .phase import (
    PhaseModel,
    equilibrium,
    f2_and_gradient,
    fd_jacobian,
    linearize_at_equilibrium,
    vector_field,
)
from .prescription import profile_of

__all__ = ["CheckRecord", "run_all", "format_record"]


@dataclass(frozen=True)
class CheckRecord:
    """One measured invariant: passes when measured `comparison` tolerance."""

    name: str
    measured: float
    tolerance: float
    comparison: str = "<"
    passed: bool = True


def _rec(name: str, measured: float, tol: float, comparison: str = "<"):
    measured = float(measured)
    ok = measured < tol if comparison == "<" else measured > tol
    return CheckRecord(name, measured, float(tol), comparison, bool(ok))


def format_record(r: CheckRecord) -> str:
    tag = "PASS" if r.passed else "FAIL"
    return (f"{tag}  {r.name}: measured {r.measured:.3e} "
            f"{r.comparison} {r.tolerance:.0e}")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _prescription_checks(m: PhaseModel) -> list:
    ts = np.linspace(-0.999, 0.999, 401)
    step = 1e-6
    fd = (np.asarray(m.h(ts + step), dtype=float)
          - np.asarray(m.h(ts - step), dtype=float)) / (2.0 * step)
    ad = np.asarray(m.h.deriv(ts), dtype=float)
    if ad.shape == ():
        ad = np.full(ts.shape, float(ad))
    vals = np.asarray(m.h(np.linspace(-1.0, 1.0, 401)), dtype=float)
    return [
        _rec("prescription/derivative-fd-agreement", np.max(np.abs(ad - fd)),
             1e-6),
        _rec("prescription/finite-on-domain",
             float(np.sum(~np.isfinite(vals))), 1.0),
    ]


def _phase_checks(m: PhaseModel, x_max: float) -> list:
    records = []
    e0 = equilibrium(m)
    if e0 is not None:
        fx, fy = vector_field(m, e0)
        records.append(_rec("phase/equilibrium-rest", math.hypot(fx, fy),
                            1e-12))
        jac, eig = linearize_at_equilibrium(m)
        records.append(_rec("phase/jacobian-fd-agreement",
                            np.max(np.abs(jac - fd_jacobian(m, e0))), 1e-4))
        if abs(float(m.h.deriv(0.0))) < 1e-12:
            records.append(_rec("phase/eigenvalues-imaginary",
                                np.max(np.abs(eig.real)), 1e-12))
    xs = np.linspace(x_max / 40, x_max, 25)
    ys = np.linspace(-0.99, 0.99, 25)
    X, Y = np.meshgrid(xs, ys)
    nu = X * Y / np.sqrt(X * X + m.c0 * m.c0 * Y * Y)
    records.append(_rec("phase/angle-bound", np.max(np.abs(nu)), 1.0))
    return records


def _nullcline_checks(m: PhaseModel, x_max: float, grid_n: int) -> list:
    curve = trace_nullcline(m, x_max, grid_n)
    if not curve.components:
        return []
    worst_res = max(float(np.max(c.residuals)) for c in curve.components)
    grad_min = math.inf
    for comp in curve.components:
        for x, y in comp.samples:
            if x <= 1e-8 or 1.0 - y * y <= 1e-8:
                continue
            u = x * x
            v = x * y / math.sqrt(x * x + m.c0 * m.c0 * y * y)
            if u * (1.0 - v * v) - m.c0 * m.c0 * v * v <= 0.0:
                continue
            _, (du, dv) = f2_and_gradient(m, u, v)
            grad_min = min(grad_min, math.hypot(du, dv))
    records = [_rec("nullcline/residual", worst_res, 1e-7)]
    if math.isfinite(grad_min):
        records.append(_rec("nullcline/regular-value", grad_min, 1e-6, ">"))
    return records


def _pick_start(m: PhaseModel):
    e0 = equilibrium(m)
    if e0 is not None:
        return CurveState(0.0, 0.9 * e0.x, 0.0, math.pi / 2)
    if abs(float(m.h(0.0))) > 1e-12:
        return start_from_axis(m)
    return CurveState(0.0, 1.0, 0.0, math.pi / 2)


def _reversal_deviation(m: PhaseModel, s_span: float, tol: float) -> float:
    """Retrace an orbit backwards through the reflection symmetry and
    measure the worst radial deviation on a shared sample grid."""
    start = _pick_start(m)
    grid = tuple(np.linspace(0.0, s_span, 201))
    opts = IntegrateOptions(rtol=tol, atol=tol, t_eval=grid)
    fwd = integrate(m, start, s_span, opts)
    end = fwd.state_at(-1)
    span = float(fwd.s[-1] - fwd.s[0])
    grid_b = tuple(np.linspace(0.0, span, len(fwd.s)))
    back = integrate(m, CurveState(0.0, end.x, 0.0, math.pi - end.phi),
                     span, IntegrateOptions(rtol=tol, atol=tol,
                                            t_eval=grid_b))
    n = min(len(back.x), len(fwd.x))
    return float(np.max(np.abs(back.x[:n] - fwd.x[::-1][:n])))


def _orbit_and_geometry_checks(m: PhaseModel, s_max: float,
                               tol: float) -> list:
    records = []
    start = _pick_start(m)
    opts = IntegrateOptions(rtol=min(tol, 1e-9), atol=min(tol, 1e-9),
                            x_stop=50.0)
    orbit = integrate(m, start, s_max, opts)
    records.append(_rec("orbit/curvature-residual", orbit.h_residual_max,
                        1e-6))
    nu = orbit.x * np.cos(orbit.phi) / np.sqrt(
        orbit.x ** 2 + m.c0 ** 2 * np.cos(orbit.phi) ** 2)
    records.append(_rec("orbit/angle-bound", np.max(np.abs(nu)), 1.0))
    if orbit.match_residual is not None:
        records.append(_rec("orbit/axis-shooting-match",
                            orbit.match_residual, 1e-6))
    if profile_of(m.h).is_even:
        # short arc at tight tolerance: the retrace certifies the symmetry,
        # and rapidly oscillating prescriptions amplify long-arc step error
        records.append(_rec("orbit/time-reversal",
                            _reversal_deviation(m, min(s_max, 3.0), 1e-12),
                            1e-6))

    profile = build_profile(orbit, m)
    records.append(_rec("geometry/unit-speed",
                        np.max(np.abs(profile.xp ** 2 + profile.zp ** 2
                                      - 1.0)), 1e-10))
    mesh = build_mesh(profile, m, n_theta=16)
    records.append(_rec("geometry/unit-normal",
                        np.max(np.abs(np.linalg.norm(mesh.normals, axis=1)
                                      - 1.0)), 1e-12))
    records.append(_rec("geometry/mesh-residual", np.max(mesh.residual),
                        1e-6))
    H = mesh.H.reshape(mesh.shape)
    records.append(_rec("geometry/theta-invariance",
                        np.max(np.ptp(H, axis=1)), 1e-10))
    if any(ev.kind == "EpsilonSwitch" for ev in orbit.events):
        try:
            report = glue_check(orbit, m)
            records.append(_rec("geometry/glue-mismatch",
                                report.max_mismatch, 1e-8))
        except NormalMismatchError:
            records.append(_rec("geometry/glue-mismatch", math.inf, 1e-8))
    return records


def run_all(m: PhaseModel, *, x_max: float = 4.0, grid_n: int = 400,
            s_max: float = 30.0, tol: float = 1e-9):
    """Run every suite; returns (records, warnings)."""
    records = []
    records += _prescription_checks(m)
    records += _phase_checks(m, x_max)
    records += _nullcline_checks(m, x_max, grid_n)
    records += _orbit_and_geometry_checks(m, s_max, tol)

    warnings = []
    prof = profile_of(m.h)
    if not prof.is_increasing_on_0_1:
        warnings.append(
            "prescription is not nondecreasing on [0, 1]; axis-periodicity "
            "guarantees do not apply, numerical suites still ran")
    return records, warnings
