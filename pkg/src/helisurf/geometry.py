"""Surface reconstruction: profile curves, helicoidal meshes, and the
Gauss-map / curvature verification layer.

The immersion is Psi(s, theta) = (x(s) cos theta, x(s) sin theta,
z(s) + c0 theta).  Everything here is a pure transformation of integrated
orbit data; the mean curvature is evaluated analytically from the profile
jet (the closed form and the fundamental-form route are both implemented
and must agree), not by discrete mesh operators.

A profile that runs through x = 0 carries the fold bookkeeping of the orbit
representation (x is kept nonnegative).  Meshing the folded profile is
exact: the helicoidal screw motion by pi maps the folded continuation onto
the true negative-x sheet, so the folded mesh describes the same complete
surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateJetError,
    DegenerateProfileError,
    DomainError,
    InconclusiveOrbitError,
    NormalMismatchError,
    UnclassifiedSurfaceError,
)
from .orbits import EPSILON_SWITCH, CurveState, Orbit, classify, phi_rate
from .phase import PhaseModel
from .prescription import profile_of

GLUE_TOL = 1e-8

__all__ = [
    "ProfileCurve",
    "HelicoidMesh",
    "BoundaryHelix",
    "SwitchGlue",
    "GlueReport",
    "SurfaceLabel",
    "build_profile",
    "profile_self_intersections",
    "gauss_map",
    "mean_curvature",
    "mean_curvature_forms",
    "build_mesh",
    "glue_check",
    "surface_taxonomy",
    "write_obj",
    "write_profile_csv",
]


# ---------------------------------------------------------------------------
# profile curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileCurve:
    """Arclength-sampled generating curve (x(s), z(s)) with its first and
    second jets.

    The second derivatives are reconstructed from the turning rate; at an
    exact axis sample (x = 0) the turning-rate formula is 0/0 and the second
    jet is stored as nan.  Every consumer that needs curvature there uses the
    x = 0 limit of the curvature formula instead, which does not involve the
    second jet.
    """

    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    xp: np.ndarray
    zp: np.ndarray
    xpp: np.ndarray
    zpp: np.ndarray

    def __len__(self):
        return len(self.s)


def _turn_rate_arrays(m: PhaseModel, x, cp, sp):
    """Vectorized turning rate; nan where x = 0 (limit handled by callers)."""
    c2 = m.c0 * m.c0
    cc = c2 * cp * cp
    q = x * x + cc
    out = np.full_like(np.asarray(x, dtype=float), np.nan)
    pos = x > 0
    nu = x[pos] * cp[pos] / np.sqrt(q[pos])
    num = (2.0 * np.asarray(m.h(nu), dtype=float) * q[pos] ** 1.5
           - sp[pos] * (x[pos] ** 2 + 2.0 * cc[pos]))
    out[pos] = num / (x[pos] ** 3 + c2 * x[pos])
    return out


def build_profile(orbit: Orbit, m: PhaseModel) -> ProfileCurve:
    """Extract the generating curve from an orbit, second jet included."""
    if orbit.s.size < 2:
        raise DegenerateProfileError("profile needs at least two samples")
    x = np.asarray(orbit.x, dtype=float)
    cp = np.cos(orbit.phi)
    sp = np.sin(orbit.phi)
    pdot = _turn_rate_arrays(m, x, cp, sp)
    return ProfileCurve(s=np.asarray(orbit.s, dtype=float), x=x,
                        z=np.asarray(orbit.z, dtype=float),
                        xp=cp, zp=sp, xpp=-sp * pdot, zpp=cp * pdot)


def _orient(px, pz, qx, qz, rx, rz, tol=1e-12):
    v = (qx - px) * (rz - pz) - (qz - pz) * (rx - px)
    if abs(v) <= tol:
        return 0
    return 1 if v > 0 else -1


def _segments_cross(a, b, c, d) -> bool:
    o1 = _orient(*a, *b, *c)
    o2 = _orient(*a, *b, *d)
    o3 = _orient(*c, *d, *a)
    o4 = _orient(*c, *d, *b)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    # collinear overlap cases

    def on(p, q, r):
        return (min(p[0], q[0]) - 1e-12 <= r[0] <= max(p[0], q[0]) + 1e-12 and
                min(p[1], q[1]) - 1e-12 <= r[1] <= max(p[1], q[1]) + 1e-12)
    if o1 == 0 and on(a, b, c):
        return True
    if o2 == 0 and on(a, b, d):
        return True
    if o3 == 0 and on(c, d, a):
        return True
    if o4 == 0 and on(c, d, b):
        return True
    return False


def profile_self_intersections(profile: ProfileCurve) -> list[tuple[int, int]]:
    """Indices (i, j) of non-adjacent profile segments that cross in the
    (x, z) plane.  Plane sweep over x-extents; exact-orientation predicates.
    """
    x, z = profile.x, profile.z
    n = len(x) - 1
    if n < 3:
        return []
    x_lo = np.minimum(x[:-1], x[1:])
    x_hi = np.maximum(x[:-1], x[1:])
    z_lo = np.minimum(z[:-1], z[1:])
    z_hi = np.maximum(z[:-1], z[1:])
    order = np.argsort(x_lo, kind="stable")
    hits = []
    for a_pos in range(n):
        i = int(order[a_pos])
        for b_pos in range(a_pos + 1, n):
            j = int(order[b_pos])
            if x_lo[j] > x_hi[i]:
                break
            lo, hi = (i, j) if i < j else (j, i)
            if hi - lo <= 1:
                continue
            if z_lo[j] > z_hi[i] or z_hi[j] < z_lo[i]:
                continue
            if _segments_cross((x[lo], z[lo]), (x[lo + 1], z[lo + 1]),
                               (x[hi], z[hi]), (x[hi + 1], z[hi + 1])):
                hits.append((lo, hi))
    return sorted(set(hits))


# ---------------------------------------------------------------------------
# Gauss map and mean curvature
# ---------------------------------------------------------------------------

def gauss_map(m: PhaseModel, state: CurveState, theta: float) -> np.ndarray:
    """Unit normal of the helicoidal surface at (state.s, theta).

    eta = (c0 sin(th) x' - cos(th) z' x, -sin(th) x z' - c0 cos(th) x', x x')
          / sqrt(c0^2 x'^2 + x^2).
    """
    x = state.x
    xp = math.cos(state.phi)
    zp = math.sin(state.phi)
    w2 = m.c0 * m.c0 * xp * xp + x * x
    if w2 <= 1e-24:
        raise DegenerateJetError(
            f"Gauss map undefined at (x, x') = ({x}, {xp})")
    ct, st_ = math.cos(theta), math.sin(theta)
    eta = np.array([m.c0 * st_ * xp - ct * zp * x,
                    -st_ * x * zp - m.c0 * ct * xp,
                    x * xp])
    return eta / math.sqrt(w2)


def _second_jet(m, state, phi_dot):
    if phi_dot is None:
        if state.x > 0:
            phi_dot = phi_rate(m, state)
        else:
            phi_dot = 0.0     # coefficient of phi' vanishes at x = 0
    return phi_dot


def mean_curvature(m: PhaseModel, state: CurveState,
                   phi_dot: float | None = None) -> float:
    """Closed-form mean curvature from the profile jet.

    H = [phi' (x^3 + c0^2 x) + z'(2 c0^2 x'^2 + x^2)]
        / (2 (c0^2 x'^2 + x^2)^{3/2}),
    where phi' = x'z'' - z'x''.  Continues to x = 0 (the phi' term drops).
    """
    x = state.x
    xp = math.cos(state.phi)
    zp = math.sin(state.phi)
    w2 = m.c0 * m.c0 * xp * xp + x * x
    if w2 <= 1e-24:
        raise DegenerateJetError(
            f"curvature undefined at (x, x') = ({x}, {xp})")
    pd = _second_jet(m, state, phi_dot)
    return ((pd * (x ** 3 + m.c0 * m.c0 * x)
             + zp * (2.0 * m.c0 * m.c0 * xp * xp + x * x))
            / (2.0 * w2 ** 1.5))


def mean_curvature_forms(m: PhaseModel, state: CurveState,
                         phi_dot: float | None = None) -> float:
    """Mean curvature via the first/second fundamental forms.

    E = 1, F = c0 z', G = x^2 + c0^2; e = x phi'/w, f = -c0 x'^2/w,
    g = x^2 z'/w with w = sqrt(c0^2 x'^2 + x^2);
    H = (eG - 2fF + gE) / (2 (EG - F^2)).
    """
    x = state.x
    xp = math.cos(state.phi)
    zp = math.sin(state.phi)
    w2 = m.c0 * m.c0 * xp * xp + x * x
    if w2 <= 1e-24:
        raise DegenerateJetError(
            f"curvature undefined at (x, x') = ({x}, {xp})")
    w = math.sqrt(w2)
    pd = _second_jet(m, state, phi_dot)
    E = 1.0
    F = m.c0 * zp
    G = x * x + m.c0 * m.c0
    e = x * pd / w
    f = -m.c0 * xp * xp / w
    g = x * x * zp / w
    return (e * G - 2.0 * f * F + g * E) / (2.0 * (E * G - F * F))


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryHelix:
    """Boundary curve gamma(t) = (r cos t, r sin t, z0 + c0 t)."""

    radius: float
    z0: float
    c0: float

    def point(self, t: float) -> np.ndarray:
        return np.array([self.radius * math.cos(t),
                         self.radius * math.sin(t),
                         self.z0 + self.c0 * t])


@dataclass
class HelicoidMesh:
    """Structured surface mesh with per-vertex verification data.

    Vertices are laid out row-major: index = i * n_theta + j for profile row
    i and angular column j.  Faces are triangles (each grid quad split in
    two), wound so that face normals agree with the analytic unit normal.
    """

    vertices: np.ndarray          # (N, 3)
    faces: np.ndarray             # (M, 3) vertex indices
    normals: np.ndarray           # (N, 3) analytic Gauss map
    nu: np.ndarray                # (N,) angle function
    H: np.ndarray                 # (N,) mean curvature
    residual: np.ndarray          # (N,) |H - h(nu)|
    shape: tuple                  # (n_rows, n_theta)
    thetas: np.ndarray
    boundary_helices: tuple = ()
    self_intersecting: bool = False


def build_mesh(profile: ProfileCurve, m: PhaseModel,
               theta_range: tuple = (0.0, 2.0 * math.pi),
               n_theta: int = 64) -> HelicoidMesh:
    """Sweep the profile through the helicoidal motion on a (s, theta) grid."""
    if n_theta < 8:
        raise DomainError(f"n_theta must be at least 8, got {n_theta}")
    if len(profile) < 2:
        raise DegenerateProfileError("profile needs at least two samples")
    if np.all(profile.x < 1e-12):
        raise DegenerateProfileError("profile has zero radius everywhere")
    t0, t1 = theta_range
    if not t1 > t0:
        raise DomainError("theta_range must be increasing")

    thetas = np.linspace(t0, t1, n_theta)
    x, z = profile.x, profile.z
    xp, zp = profile.xp, profile.zp
    n_rows = len(profile)

    ct, st_ = np.cos(thetas), np.sin(thetas)
    X = x[:, None] * ct[None, :]
    Y = x[:, None] * st_[None, :]
    Z = z[:, None] + m.c0 * thetas[None, :]
    vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    w = np.sqrt(m.c0 * m.c0 * xp * xp + x * x)
    if np.any(w <= 1e-12):
        raise DegenerateJetError("profile contains a point with (x, x')=(0,0)")
    e1 = (m.c0 * st_[None, :] * xp[:, None] - ct[None, :] * (zp * x)[:, None])
    e2 = (-st_[None, :] * (x * zp)[:, None] - m.c0 * ct[None, :] * xp[:, None])
    e3 = np.broadcast_to((x * xp)[:, None], e1.shape)
    normals = np.stack([e1.ravel(), e2.ravel(), e3.ravel()], axis=1)
    normals /= w[:, None].repeat(n_theta, axis=1).reshape(-1, 1)

    nu_row = x * xp / w
    pdot = np.where(x > 0, np.nan_to_num(xp * profile.zpp - zp * profile.xpp),
                    0.0)
    w2 = w * w
    H_row = ((pdot * (x ** 3 + m.c0 * m.c0 * x)
              + zp * (2.0 * m.c0 * m.c0 * xp * xp + x * x)) / (2.0 * w2 * w))
    res_row = np.abs(H_row - np.asarray(m.h(nu_row), dtype=float))

    nu = np.repeat(nu_row, n_theta)
    H = np.repeat(H_row, n_theta)
    residual = np.repeat(res_row, n_theta)

    faces = []
    for i in range(n_rows - 1):
        for j in range(n_theta - 1):
            a = i * n_theta + j
            b = a + 1
            c = a + n_theta
            d = c + 1
            faces.append((a, c, d))
            faces.append((a, d, b))
    faces = np.array(faces, dtype=int)

    # hemisphere test: flip the winding if face normals oppose the Gauss map
    p0, p1, p2 = (vertices[faces[:, 0]], vertices[faces[:, 1]],
                  vertices[faces[:, 2]])
    fn = np.cross(p1 - p0, p2 - p0)
    avg = (normals[faces[:, 0]] + normals[faces[:, 1]] + normals[faces[:, 2]])
    if np.sum(np.einsum("ij,ij->i", fn, avg) < 0) > len(faces) / 2:
        faces = faces[:, ::-1]

    helices = []
    for idx in (0, n_rows - 1):
        if abs(abs(xp[idx]) - 1.0) < 1e-8:
            helices.append(BoundaryHelix(float(x[idx]), float(z[idx]), m.c0))

    return HelicoidMesh(vertices=vertices, faces=faces, normals=normals,
                        nu=nu, H=H, residual=residual,
                        shape=(n_rows, n_theta), thetas=thetas,
                        boundary_helices=tuple(helices),
                        self_intersecting=bool(profile_self_intersections(profile)))


# ---------------------------------------------------------------------------
# gluing verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwitchGlue:
    s: float
    radius: float
    mismatch: float
    normal: tuple


@dataclass(frozen=True)
class GlueReport:
    switches: tuple
    max_mismatch: float


def glue_check(orbit: Orbit, m: PhaseModel, theta: float = 0.0) -> GlueReport:
    """Verify the unit normal matches across every orientation switch.

    At each EpsilonSwitch the normal is evaluated from both one-sided jets
    (first-order Taylor at s -/+ 1e-9 off the switch) and compared; the
    boundary helix radius and the matched normal are reported.
    """
    switches = [ev for ev in orbit.events if ev.kind == EPSILON_SWITCH]
    if not switches:
        raise DomainError("orbit carries no orientation switch to glue")
    rows = []
    worst = 0.0
    d = 1e-9
    for ev in switches:
        st = ev.state
        pd = phi_rate(m, st)
        sides = []
        for sgn in (-1.0, 1.0):
            x_side = st.x + sgn * d * math.cos(st.phi)
            phi_side = st.phi + sgn * d * pd
            sides.append(gauss_map(
                m, CurveState(st.s + sgn * d, x_side, st.z, phi_side), theta))
        mismatch = float(np.max(np.abs(sides[1] - sides[0])))
        worst = max(worst, mismatch)
        if mismatch > GLUE_TOL:
            raise NormalMismatchError(
                f"one-sided normals disagree by {mismatch:.3e} at the switch "
                f"s = {st.s:.6g} (radius {st.x:.6g})")
        matched = gauss_map(m, st, theta)
        rows.append(SwitchGlue(s=st.s, radius=st.x, mismatch=mismatch,
                               normal=tuple(float(v) for v in matched)))
    return GlueReport(switches=tuple(rows), max_mismatch=worst)


# ---------------------------------------------------------------------------
# taxonomy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceLabel:
    tag: str
    metadata: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __str__(self):
        if self.tag == "LineAsymptotic":
            return f"LineAsymptotic({self.metadata['t0']:g})"
        return self.tag


def surface_taxonomy(orbit: Orbit, profile: ProfileCurve,
                     m: PhaseModel) -> SurfaceLabel:
    """Name the surface family from the orbit verdict and profile geometry.

    Labels: Cylinder, AxisPeriodic, Tube, NodoidFamily, UnduloidFamily,
    AxisAsymptotic, LineAsymptotic(t0).  A window-exit verdict cannot name a
    family and raises UnclassifiedSurfaceError, as does an inconclusive
    orbit.
    """
    cls = orbit.classification
    if cls is None:
        try:
            cls = classify(orbit, m)
        except InconclusiveOrbitError as exc:
            raise UnclassifiedSurfaceError(
                "orbit classification is inconclusive") from exc

    if cls.tag == "Equilibrium":
        return SurfaceLabel("Cylinder", {"radius": cls.metadata["x0"]})

    if cls.tag == "AxisMeeting":
        arrivals = [ev.s for ev in orbit.events if ev.kind == "AxisApproach"]
        if len(arrivals) >= 2:
            period = arrivals[1] - arrivals[0]
        else:
            # orbits launched from the axis put s = 0 at the axis itself
            period = arrivals[0]
        return SurfaceLabel("AxisPeriodic",
                            {"axis_period": period,
                             "slope": cls.metadata["slope"]})

    if cls.tag == "TubeClosedProfile":
        warnings = ()
        prof = profile_of(m.h)
        if prof.max_value - prof.min_value < 1e-12:
            warnings = ("an embedded tube with constant prescription "
                        "cannot exist; closure is numerical only",)
        return SurfaceLabel("Tube", dict(cls.metadata), warnings)

    if cls.tag == "NodoidType":
        crossings = profile_self_intersections(profile)
        return SurfaceLabel("NodoidFamily",
                            {**cls.metadata, "embedded": not crossings,
                             "profile_crossings": len(crossings)})

    if cls.tag == "ClosedUnduloidType":
        return SurfaceLabel("UnduloidFamily",
                            {**cls.metadata,
                             "z_monotone": bool(np.all(np.diff(orbit.z) > 0)
                                                or np.all(np.diff(orbit.z) < 0))})

    if cls.tag == "AsymptoteToYZeroAxis":
        return SurfaceLabel("AxisAsymptotic", dict(cls.metadata))

    if cls.tag == "AsymptoteToLine":
        return SurfaceLabel("LineAsymptotic", dict(cls.metadata))

    raise UnclassifiedSurfaceError(
        f"no surface family for orbit verdict {cls.tag}; integrate further "
        "or widen the window")


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def write_obj(mesh: HelicoidMesh, path, sidecar=None) -> None:
    """Wavefront OBJ (v/vn/f, triangles) plus a per-vertex scalar sidecar CSV.

    The sidecar defaults to the OBJ path with a .csv suffix and is keyed by
    the (1-based) vertex index used in the OBJ file.
    """
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for nrm in mesh.normals:
        lines.append(f"vn {float(nrm[0])!r} {float(nrm[1])!r} {float(nrm[2])!r}")
    for f in mesh.faces:
        a, b, c = (int(f[0]) + 1, int(f[1]) + 1, int(f[2]) + 1)
        lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

    if sidecar is None:
        sidecar = str(path)
        sidecar = sidecar[:-4] + ".csv" if sidecar.endswith(".obj") \
            else sidecar + ".csv"
    rows = ["vertex,nu,H,residual"]
    for i in range(len(mesh.vertices)):
        rows.append(f"{i + 1},{float(mesh.nu[i])!r},{float(mesh.H[i])!r},"
                    f"{float(mesh.residual[i])!r}")
    with open(sidecar, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def write_profile_csv(profile: ProfileCurve, path) -> None:
    lines = ["s,x,z,phi"]
    phi = np.arctan2(profile.zp, profile.xp)
    for i in range(len(profile)):
        lines.append(f"{float(profile.s[i])!r},{float(profile.x[i])!r},"
                     f"{float(profile.z[i])!r},{float(phi[i])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
