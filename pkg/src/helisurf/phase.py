"""Phase plane for the profile-curve system.

The reduced dynamics lives on Theta_eps = (0, inf) x (-1, 1) with coordinates
(x, y): distance to the rotation axis and its arc-length derivative.  The
system is

    dx/ds = y
    dy/ds = [ (1 - y^2)(x^2 + 2 c0^2 y^2)
              - 2 eps h(nu) sqrt(1 - y^2) (c0^2 y^2 + x^2)^{3/2} ]
            / (x^3 + c0^2 x)

where nu = x y / sqrt(c0^2 y^2 + x^2) is the angle function.  This module
holds the static objects attached to that field: the equilibrium, the points
where orbits may meet the axis, the nullcline residual F_eps, the constant
mean curvature level function f_eps, the regularity certificate F2 in
(u, v) = (x^2, nu) coordinates, the constant-angle curves beta_0, and the
linearization at the equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoEquilibriumError, OnNullclineError
from .prescription import HFunction

NULLCLINE_GUARD = 1e-10

__all__ = [
    "PhaseModel",
    "PhasePoint",
    "Beta0Curve",
    "angle_nu",
    "vector_field",
    "equilibrium",
    "axis_points",
    "F_eps",
    "f_eps_level",
    "f2_and_gradient",
    "beta0",
    "linearize_at_equilibrium",
    "fd_jacobian",
    "monotonicity_region",
]


@dataclass(frozen=True)
class PhaseModel:
    """Prescription h, pitch c0 != 0, and orientation eps in {-1, +1}."""

    h: HFunction
    c0: float
    eps: int = 1

    def __post_init__(self):
        if self.c0 == 0:
            raise DomainError("pitch c0 must be nonzero")
        if self.eps not in (-1, 1):
            raise DomainError(f"eps must be -1 or +1, got {self.eps!r}")


@dataclass(frozen=True)
class PhasePoint:
    """Interior point of the phase space: x > 0 and |y| < 1 strictly."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.x > 0 and abs(self.y) < 1):
            raise DomainError(
                f"phase point ({self.x}, {self.y}) outside (0,inf) x (-1,1)")


def _xy(p) -> tuple[float, float]:
    """Accept a PhasePoint or a bare (x, y) pair (for closure points)."""
    if isinstance(p, PhasePoint):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


def angle_nu(m: PhaseModel, x, y):
    """Angle function nu = x y / sqrt(c0^2 y^2 + x^2); 0 at the origin corner."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.hypot(m.c0 * y, x)
    nu = np.where(d > 0, x * y / np.where(d > 0, d, 1.0), 0.0)
    return float(nu) if nu.ndim == 0 else nu


def vector_field(m: PhaseModel, p) -> tuple[float, float]:
    """Right-hand side (dx/ds, dy/ds) at an interior point."""
    x, y = _xy(p)
    if not (x > 0 and abs(y) < 1):
        raise DomainError(f"vector field undefined at ({x}, {y})")
    nu = angle_nu(m, x, y)
    q = m.c0 * m.c0 * y * y + x * x
    num = ((1 - y * y) * (x * x + 2 * m.c0 * m.c0 * y * y)
           - 2 * m.eps * float(m.h(nu)) * math.sqrt(1 - y * y) * q ** 1.5)
    return y, num / (x ** 3 + m.c0 * m.c0 * x)


def equilibrium(m: PhaseModel) -> PhasePoint | None:
    """The unique rest point (1/(2 eps h(0)), 0), when eps*h(0) > 0."""
    h0 = float(m.h(0.0))
    if m.eps * h0 <= 0:
        return None
    return PhasePoint(1.0 / (2.0 * m.eps * h0), 0.0)


def axis_points(m: PhaseModel):
    """Closure points (0, +/- 1/sqrt(1 + c0^2 h(0)^2)) where orbits can meet x=0.

    Present iff eps*h(0) >= 0.  Returned as bare (x, y) tuples since they sit
    on the boundary of the phase space.
    """
    h0 = float(m.h(0.0))
    if m.eps * h0 < 0:
        return None
    yp = 1.0 / math.sqrt(1.0 + m.c0 * m.c0 * h0 * h0)
    return (0.0, yp), (0.0, -yp)


def F_eps(m: PhaseModel, p) -> float:
    """Nullcline residual; dy/ds = -sqrt(1-y^2) F_eps / (x^3 + c0^2 x).

    Continuous on the closure of the phase space, so boundary points
    (x = 0 or |y| = 1) are accepted.
    """
    x, y = _xy(p)
    nu = angle_nu(m, x, y)
    q = x * x + m.c0 * m.c0 * y * y
    return (2.0 * m.eps * float(m.h(nu)) * q ** 1.5
            - (x * x + 2.0 * m.c0 * m.c0 * y * y) * math.sqrt(max(1.0 - y * y, 0.0)))


def f_eps_level(m: PhaseModel, p) -> float:
    """Level function whose H0-level set is the nullcline of h == H0.

    f_eps = eps (x^2 + 2 c0^2 y^2) sqrt(1 - y^2) / (2 (x^2 + c0^2 y^2)^{3/2});
    on the axis x = 0 (y != 0) this continues to eps sqrt(1-y^2)/(|c0||y|).
    """
    x, y = _xy(p)
    q = x * x + m.c0 * m.c0 * y * y
    if q == 0.0:
        raise DomainError("f_eps is undefined at the corner (0, 0)")
    return (m.eps * (x * x + 2.0 * m.c0 * m.c0 * y * y)
            * math.sqrt(max(1.0 - y * y, 0.0)) / (2.0 * q ** 1.5))


def f2_and_gradient(m: PhaseModel, u: float, v: float):
    """Certificate function F2(u, v) and its gradient, (u, v) = (x^2, nu).

    F2 = 2 eps h(v) u^2 - (u + c0^2 v^2) sqrt(u(1 - v^2) - c0^2 v^2).
    A nullcline point is regular when the gradient does not vanish there.
    """
    c2 = m.c0 * m.c0
    rad = u * (1.0 - v * v) - c2 * v * v
    if not (u > 0.0 and rad > 0.0):
        raise DomainError(
            f"(u, v) = ({u}, {v}) outside the (x^2, nu) image of the phase space")
    r = math.sqrt(rad)
    h = float(m.h(v))
    dh = float(m.h.deriv(v))
    value = 2.0 * m.eps * h * u * u - (u + c2 * v * v) * r
    d_u = (8.0 * m.eps * h * u * r + 3.0 * u * (v * v - 1.0)
           + c2 * v * v * (1.0 + v * v)) / (2.0 * r)
    d_v = (2.0 * m.eps * u * u * dh
           + v * (u * u + 3.0 * c2 * c2 * v * v + c2 * u * (3.0 * v * v - 1.0)) / r)
    return value, (d_u, d_v)


@dataclass(frozen=True)
class Beta0Curve:
    """Constant-angle curve nu == t0, as a sampled graph y(x)."""

    t0: float
    x: np.ndarray
    y: np.ndarray
    asymptote_y: float
    boundary_point: tuple[float, float] | None  # on |y| = 1; None when t0 = 0


def beta0(m: PhaseModel, t0: float, x_max: float = 10.0, n: int = 512) -> Beta0Curve:
    """The curve where the angle function equals t0: y = t0 x / sqrt(x^2 - c0^2 t0^2).

    Inside the phase space it runs from the boundary point
    p0 = (|c0 t0| / sqrt(1 - t0^2), sign(t0)) down to the horizontal
    asymptote y = t0.  For t0 = 0 it degenerates to the half-line y = 0.
    """
    if not -1.0 < t0 < 1.0:
        raise DomainError(f"t0 = {t0} must lie in (-1, 1)")
    if t0 == 0.0:
        x = np.linspace(x_max / n, x_max, n)
        return Beta0Curve(0.0, x, np.zeros_like(x), 0.0, None)
    xb = abs(m.c0 * t0) / math.sqrt(1.0 - t0 * t0)
    if x_max <= xb:
        raise DomainError(
            f"x_max = {x_max} must exceed the boundary abscissa {xb:.6g}")
    # grade the samples toward xb, where the graph is steep
    s = np.linspace(0.0, 1.0, n)
    x = xb + (x_max - xb) * s * s
    y = np.empty_like(x)
    y[0] = math.copysign(1.0, t0)
    y[1:] = t0 * x[1:] / np.sqrt(x[1:] ** 2 - (m.c0 * t0) ** 2)
    return Beta0Curve(t0, x, y, t0, (xb, math.copysign(1.0, t0)))


def linearize_at_equilibrium(m: PhaseModel):
    """Jacobian of the field at the equilibrium and its eigenvalues.

    The (2,1) entry is -4 h(0)^2 / (1 + 4 c0^2 h(0)^2).  The (2,2) entry
    -2 eps h'(0) x0^2 / (x0^2 + c0^2) vanishes exactly when h'(0) = 0; in that
    case the eigenvalues are the purely imaginary pair
    +/- i 2 h(0) / sqrt(1 + 4 c0^2 h(0)^2) and nearby orbits wind around the
    equilibrium.
    """
    e0 = equilibrium(m)
    if e0 is None:
        raise NoEquilibriumError(
            "no equilibrium: eps * h(0) must be positive")
    h0 = float(m.h(0.0))
    dh0 = float(m.h.deriv(0.0))
    c2 = m.c0 * m.c0
    x0 = e0.x
    a21 = -4.0 * h0 * h0 / (1.0 + 4.0 * c2 * h0 * h0)
    a22 = -2.0 * m.eps * dh0 * x0 * x0 / (x0 * x0 + c2)
    jac = np.array([[0.0, 1.0], [a21, a22]])
    eigvals = np.linalg.eigvals(jac)
    return jac, eigvals


def fd_jacobian(m: PhaseModel, p, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of vector_field, for cross-checks."""
    x, y = _xy(p)
    jac = np.empty((2, 2))
    for j, (dx, dy) in enumerate(((step, 0.0), (0.0, step))):
        fp = vector_field(m, (x + dx, y + dy))
        fm = vector_field(m, (x - dx, y - dy))
        jac[0, j] = (fp[0] - fm[0]) / (2.0 * step)
        jac[1, j] = (fp[1] - fm[1]) / (2.0 * step)
    return jac


def monotonicity_region(m: PhaseModel, p) -> tuple[int, int]:
    """Strict signs (sign dx/ds, sign dy/ds) away from the nullclines.

    Raises OnNullclineError when the point is within 1e-10 of y = 0 or of
    F_eps = 0, where a strict sign is not defined.
    """
    x, y = _xy(p)
    if not (x > 0 and abs(y) < 1):
        raise DomainError(f"({x}, {y}) outside the phase space")
    f = F_eps(m, (x, y))
    if abs(y) <= NULLCLINE_GUARD or abs(f) <= NULLCLINE_GUARD:
        raise OnNullclineError(
            f"({x}, {y}) lies on a nullcline to within {NULLCLINE_GUARD}")
    return (1 if y > 0 else -1), (1 if f < 0 else -1)
