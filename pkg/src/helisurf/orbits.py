"""Orbit integration in tangent-angle coordinates, events, and classification.

The profile curve (x(s), 0, z(s)) is integrated in the desingularized form

    x' = cos(phi),   z' = sin(phi),
    phi' = [ 2 h(nu) (x^2 + c0^2 cos^2 phi)^{3/2}
             - sin(phi) (x^2 + 2 c0^2 cos^2 phi) ] / (x^3 + c0^2 x),

with nu = x cos(phi) / sqrt(x^2 + c0^2 cos^2 phi).  Unlike the (x, y) phase
system this form stays smooth at |y| = 1 (y = cos phi), so crossing the
boundary - where the two orientation sheets are glued - is an ordinary
integration step and the unit normal matches across the switch by continuity
of phi.

Meeting the rotation axis is different: the axis points are degenerate for
the flow, and an orbit that truly reaches x = 0 is a separatrix.  Forward
integration into the axis is ill-conditioned (perturbations grow like a power
of x_start/x), so when the axis-approach event fires the final stretch is
reconstructed by shooting: the tail is cut at a matching radius x_match, the
arc is re-integrated backward from the analytically known arrival state
(slope +/-1/sqrt(1 + c0^2 h(0)^2) at x = 0), and the mismatch of the two legs
at x_match is recorded on the orbit as ``match_residual``.  The reconstruction
changes how the mandated arrival state is reached, not what it is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    DomainError,
    DomainExitError,
    InconclusiveOrbitError,
    NoAxisOrbitError,
    NoEquilibriumError,
    NoReturnError,
    NotAtAxisError,
    StepFailureError,
)
from .phase import F_eps, PhaseModel, equilibrium, linearize_at_equilibrium
from .prescription import profile_of

AXIS_DELTA = 1e-6          # scaled by max(1, |c0|)
CLOSURE_TOL = 1e-5         # (x, phi mod 2pi, z) return tolerance
ASYMPTOTE_TOL = 1e-2       # |y - t0| band over the trailing fifth
EQUILIBRIUM_TOL = 1e-8

AXIS_APPROACH = "AxisApproach"
EPSILON_SWITCH = "EpsilonSwitch"
NULLCLINE_CROSSING = "NullclineCrossing"
Y_ZERO_CROSSING = "YZeroCrossing"
POINCARE_RETURN = "PoincareReturn"
WINDOW_EXIT = "WindowExit"

__all__ = [
    "CurveState",
    "OrbitEvent",
    "OrbitClass",
    "Orbit",
    "IntegrateOptions",
    "phi_rate",
    "axis_delta",
    "integrate",
    "start_from_axis",
    "continue_through_axis",
    "classify",
    "poincare_return",
    "integrate_xy",
    "h_residual",
    "write_orbit_csv",
]


@dataclass(frozen=True)
class CurveState:
    """Point of the arclength-parametrized profile curve.

    cos(phi) = x' and sin(phi) = z', so the arclength identity holds by
    representation; y = cos(phi) recovers the phase-plane ordinate and the
    orientation is eps = sign(sin(phi)) wherever sin(phi) != 0.
    """

    s: float
    x: float
    z: float
    phi: float

    def __post_init__(self):
        if self.x < 0:
            raise DomainError(f"radius must be nonnegative, got x = {self.x}")

    @property
    def y(self) -> float:
        return math.cos(self.phi)

    @property
    def eps(self) -> int:
        sp = math.sin(self.phi)
        return 0 if sp == 0 else (1 if sp > 0 else -1)


@dataclass(frozen=True)
class OrbitEvent:
    kind: str
    s: float
    state: CurveState


@dataclass(frozen=True)
class OrbitClass:
    tag: str
    metadata: dict = field(default_factory=dict)

    def __str__(self):
        if self.tag == "AsymptoteToLine":
            return f"AsymptoteToLine({self.metadata['t0']:g})"
        return self.tag


@dataclass
class Orbit:
    """Integrated profile arc: sample arrays, events, and diagnostics.

    ``h_residuals`` holds |H - h(nu)| per sample, with the turning rate phi'
    estimated by finite differences of the dense solution rather than from
    the closed form (which would make the identity circular); it measures the
    self-consistency of the integrated curve.  ``match_residual`` is set when
    an axis arrival was reconstructed by shooting; it measures how well the
    forward leg and the backward leg from the mandated axis state agree at
    the matching radius.
    """

    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    events: list[OrbitEvent]
    h_residuals: np.ndarray
    h_residual_max: float
    match_residual: float | None = None
    classification: OrbitClass | None = None

    @property
    def y(self) -> np.ndarray:
        return np.cos(self.phi)

    @property
    def samples(self) -> list[CurveState]:
        return [CurveState(float(s), float(x), float(z), float(p))
                for s, x, z, p in zip(self.s, self.x, self.z, self.phi)]

    def state_at(self, i: int) -> CurveState:
        return CurveState(float(self.s[i]), float(self.x[i]),
                          float(self.z[i]), float(self.phi[i]))


@dataclass(frozen=True)
class IntegrateOptions:
    rtol: float = 1e-9
    atol: float = 1e-9
    method: str = "RK45"
    max_step: float | None = None     # None: let the solver choose freely
    x_stop: float | None = None       # window-exit radius (WindowExit event)
    t_eval: tuple | None = None       # report samples at these s instead of
                                      # the accepted steps (events unaffected)


def axis_delta(m: PhaseModel) -> float:
    return AXIS_DELTA * max(1.0, abs(m.c0))


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------

def _phi_rate_xp(m: PhaseModel, x: float, phi: float) -> float:
    c2 = m.c0 * m.c0
    cp = math.cos(phi)
    sp = math.sin(phi)
    cc = c2 * cp * cp
    q = x * x + cc
    nu = x * cp / math.sqrt(q)
    num = 2.0 * float(m.h(nu)) * q ** 1.5 - sp * (x * x + 2.0 * cc)
    return num / (x ** 3 + c2 * x)


def phi_rate(m: PhaseModel, state: CurveState) -> float:
    """Turning rate of the tangent angle; equals the geodesic curvature.

    Independent of m.eps: the orientation is carried by sign(sin phi).
    """
    if state.x <= 0:
        raise DomainError(f"phi_rate needs x > 0, got x = {state.x}")
    return _phi_rate_xp(m, state.x, state.phi)


def _make_rhs(m: PhaseModel):
    c2 = m.c0 * m.c0
    h = m.h

    def rhs(s, u):
        x, _, phi = u
        cp = math.cos(phi)
        sp = math.sin(phi)
        if x <= 0.0:
            # only reachable by trial stages past a terminal event
            return (cp, sp, 0.0)
        cc = c2 * cp * cp
        q = x * x + cc
        nu = x * cp / math.sqrt(q)
        num = 2.0 * float(h(nu)) * q ** 1.5 - sp * (x * x + 2.0 * cc)
        return (cp, sp, num / (x ** 3 + c2 * x))

    return rhs


def h_residual(m: PhaseModel, x, phi, phi_dot=None):
    """|H(jet) - h(nu)| per sample; accepts arrays.

    The mean curvature is recovered from the integrated jet as
    H = [phi' (x^3 + c0^2 x) + sin(phi)(x^2 + 2 c0^2 cos^2 phi)]
        / (2 (x^2 + c0^2 cos^2 phi)^{3/2}),
    which continues to x = 0 where the phi' term drops out.
    """
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c2 = m.c0 * m.c0
    cp = np.cos(phi)
    sp = np.sin(phi)
    cc = c2 * cp * cp
    q = x * x + cc
    if phi_dot is None:
        phi_dot = np.zeros_like(x)
        pos = x > 0
        num = (2.0 * np.asarray(m.h(x[pos] * cp[pos] / np.sqrt(q[pos])))
               * q[pos] ** 1.5 - sp[pos] * (x[pos] ** 2 + 2.0 * cc[pos]))
        phi_dot[pos] = num / (x[pos] ** 3 + c2 * x[pos])
    else:
        phi_dot = np.asarray(phi_dot, dtype=float)
    H = (phi_dot * (x ** 3 + c2 * x) + sp * (x * x + 2.0 * cc)) / (2.0 * q ** 1.5)
    nu = x * cp / np.sqrt(q)
    return np.abs(H - np.asarray(m.h(nu), dtype=float))


# ---------------------------------------------------------------------------
# event plumbing
# ---------------------------------------------------------------------------

def _event_functions(m: PhaseModel, rhs, delta: float, x_stop: float | None):
    def ev_axis(s, u):
        return u[0] - delta
    ev_axis.terminal = True
    ev_axis.direction = -1

    def ev_switch(s, u):
        return math.sin(u[2])
    ev_switch.terminal = False
    ev_switch.direction = 0

    def ev_yzero(s, u):
        return math.cos(u[2])
    ev_yzero.terminal = False
    ev_yzero.direction = 0

    def ev_null(s, u):
        return rhs(s, u)[2]
    ev_null.terminal = False
    ev_null.direction = 0

    funcs = [ev_axis, ev_switch, ev_yzero, ev_null]
    kinds = [AXIS_APPROACH, EPSILON_SWITCH, Y_ZERO_CROSSING, NULLCLINE_CROSSING]
    if x_stop is not None:
        def ev_window(s, u):
            return u[0] - x_stop
        ev_window.terminal = True
        ev_window.direction = 1
        funcs.append(ev_window)
        kinds.append(WINDOW_EXIT)
    return funcs, kinds


def _collect_events(sol, funcs, kinds, s_map=None):
    """Turn solve_ivp event output into raw event rows, dropping degenerate hits.

    A non-terminal hit is kept only when its event function genuinely changes
    sign across it; an orbit sitting identically on the zero level (e.g. an
    equilibrium start, where cos phi and phi' vanish forever) would otherwise
    fire at every step.
    """
    rows = []
    for k, (ts, us) in enumerate(zip(sol.t_events, sol.y_events)):
        for t, u in zip(ts, us):
            rows.append((k, float(t), np.array(u, dtype=float)))
    rows.sort(key=lambda e: e[1])

    lo, hi = min(sol.t[0], sol.t[-1]), max(sol.t[0], sol.t[-1])
    filtered = []
    for k, t, u in rows:
        kind = kinds[k]
        if kind in (AXIS_APPROACH, WINDOW_EXIT):
            filtered.append((kind, t, u))
            continue
        probe = 1e-7
        ta, tb = t - probe, t + probe
        if ta < lo or tb > hi:
            continue
        ga = funcs[k](ta, sol.sol(ta))
        gb = funcs[k](tb, sol.sol(tb))
        if ga * gb < 0:
            filtered.append((kind, t, u))
    if s_map is not None:
        filtered = [(kind, s_map(t), u) for kind, t, u in filtered]
    return filtered


def _finalize_events(raw) -> list[OrbitEvent]:
    out = []
    for kind, s, u in sorted(raw, key=lambda e: e[1]):
        out.append(OrbitEvent(kind, s, CurveState(s, max(float(u[0]), 0.0),
                                                  float(u[1]), float(u[2]))))
    return out


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def _run_leg(m, rhs, u0, s_span, opts, delta):
    funcs, kinds = _event_functions(m, rhs, delta, opts.x_stop)
    sol = solve_ivp(rhs, s_span, u0, method=opts.method,
                    rtol=opts.rtol, atol=opts.atol,
                    max_step=np.inf if opts.max_step is None else opts.max_step,
                    t_eval=None if opts.t_eval is None else np.asarray(opts.t_eval),
                    events=funcs, dense_output=True)
    if not sol.success and sol.status == -1:
        xl, zl, pl = sol.y[:, -1]
        raise StepFailureError(
            f"integrator stalled at s = {sol.t[-1]:.6g}: {sol.message}",
            state=CurveState(float(sol.t[-1]), max(float(xl), 0.0),
                             float(zl), float(pl)))
    if not np.all(np.isfinite(sol.y)):
        raise DomainExitError("integration state left the admissible domain "
                              f"(non-finite values near s = {sol.t[-1]:.6g})")
    return sol, funcs, kinds


def _dense_phi_fd(sol, ts):
    """Estimate phi'(s) by central differences of the dense interpolant.

    Probe spacing is a fraction of the local accepted step, so the stencil
    stays inside the polynomial piece scale and the formula for phi' is never
    consulted: the result genuinely measures the realized curve.
    """
    ts = np.asarray(ts, dtype=float)
    lo = float(min(sol.t[0], sol.t[-1]))
    hi = float(max(sol.t[0], sol.t[-1]))
    if ts.size < 2 or hi <= lo:
        return np.zeros_like(ts)
    h = np.maximum(1e-3 * np.abs(np.gradient(ts)), 1e-7)
    sp = np.minimum(ts + h, hi)
    sm = np.maximum(ts - h, lo)
    out = (sol.sol(sp)[2] - sol.sol(sm)[2]) / (sp - sm)
    # a clamped central stencil is only first-order; use one-sided
    # second-order stencils at the span ends instead
    for i in np.nonzero((ts + h > hi) & (ts - 2 * h >= lo))[0]:
        f0, f1, f2 = sol.sol([ts[i], ts[i] - h[i], ts[i] - 2 * h[i]])[2]
        out[i] = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h[i])
    for i in np.nonzero((ts - h < lo) & (ts + 2 * h <= hi))[0]:
        f0, f1, f2 = sol.sol([ts[i], ts[i] + h[i], ts[i] + 2 * h[i]])[2]
        out[i] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h[i])
    return out


def _terminated_by(sol, funcs, kinds, kind):
    for k, name in enumerate(kinds):
        if name == kind and getattr(funcs[k], "terminal", False) \
                and len(sol.t_events[k]) > 0:
            if sol.status == 1 and math.isclose(sol.t_events[k][-1], sol.t[-1],
                                                rel_tol=0, abs_tol=1e-9):
                return float(sol.t_events[k][-1])
    return None


def _mandated_arrival_phi(m: PhaseModel, arriving: bool) -> float:
    """Tangent angle at the axis: cos = -/+ 1/sqrt(1 + c0^2 h0^2) for an
    arriving/departing arc, sin following the sign of h(0)."""
    h0 = float(m.h(0.0))
    den = math.sqrt(1.0 + m.c0 * m.c0 * h0 * h0)
    cp = (-1.0 if arriving else 1.0) / den
    sp = abs(m.c0) * h0 / den
    return math.atan2(sp, cp)


def _reconstruct_axis_arrival(m, rhs, sol, funcs, kinds, s_hit, opts, delta):
    """Replace the ill-conditioned final descent with a backward-shot leg.

    Returns (t_cut, leg) where the forward solution should be truncated at
    t_cut and ``leg`` carries the reconstructed samples, events, arrival
    event, and the match residual; or None when no matching radius is
    available (the orbit never rose above it).
    """
    acc = np.asarray(sol.sol.ts)          # accepted steps, not the t_eval grid
    ts = acc[acc <= s_hit]
    xs = sol.sol(ts)[0] if len(ts) else np.array([])
    x_peak = xs.max() if len(xs) else 0.0
    x_match = min(0.1 * max(1.0, abs(m.c0)), 0.8 * x_peak)
    if x_match <= 20 * delta:
        return None

    # last downward crossing of x = x_match before the hit
    above = np.nonzero(xs >= x_match)[0]
    if len(above) == 0:
        return None
    k = above[-1]
    if k + 1 >= len(ts):
        hi_t = s_hit
    else:
        hi_t = ts[k + 1]
    t_cut = brentq(lambda t: sol.sol(t)[0] - x_match, ts[k], hi_t, xtol=1e-13)
    u_cut = sol.sol(t_cut)
    phi_star = _mandated_arrival_phi(m, arriving=True)
    # keep the angle on the forward leg's branch of the circle
    phi_star += 2.0 * math.pi * round((u_cut[2] - phi_star) / (2.0 * math.pi))

    span = 2.0 * (s_hit - t_cut) + 1.0

    def ev_match(t, u):
        return u[0] - x_match
    ev_match.terminal = True
    ev_match.direction = 1

    back_funcs, back_kinds = _event_functions(m, rhs, delta / 2, None)
    back_funcs = back_funcs[1:] + [ev_match]     # drop the axis event
    back_kinds = back_kinds[1:] + ["match"]
    sol_b = solve_ivp(rhs, (0.0, -span), [delta, 0.0, phi_star],
                      method=opts.method, rtol=opts.rtol, atol=opts.atol,
                      events=back_funcs, dense_output=True)
    hit_idx = back_kinds.index("match")
    if sol_b.status != 1 or len(sol_b.t_events[hit_idx]) == 0:
        return None
    t_b = float(sol_b.t_events[hit_idx][0])     # negative
    u_b = sol_b.y_events[hit_idx][0]

    residual = abs(math.cos(u_b[2]) - math.cos(u_cut[2]))
    s_axis = t_cut - t_b                         # arclength of arrival at delta
    z_shift = u_cut[1] - u_b[1]

    # backward samples run 0 -> -T; reverse into ascending arclength
    tb = sol_b.t[(sol_b.t <= 0.0) & (sol_b.t >= t_b)]
    ub = sol_b.sol(tb)
    order = np.argsort(tb)
    leg_s = s_axis + tb[order]
    leg_x = ub[0][order]
    leg_z = ub[1][order] + z_shift
    leg_phi = ub[2][order]
    leg_phi_dot = _dense_phi_fd(sol_b, tb[order])

    raw_events = [(kind, s, u) for kind, s, u in
                  _collect_events(sol_b, back_funcs, back_kinds,
                                  s_map=lambda t: s_axis + t)
                  if kind != "match"]
    arrival_state = np.array([delta, z_shift, phi_star])
    raw_events.append((AXIS_APPROACH, s_axis, arrival_state))
    return t_cut, {
        "s": leg_s, "x": leg_x, "z": leg_z, "phi": leg_phi,
        "phi_dot": leg_phi_dot, "events": raw_events, "residual": residual,
    }


def integrate(m: PhaseModel, start: CurveState, s_max: float,
              options: IntegrateOptions | None = None) -> Orbit:
    """Integrate the profile system from ``start`` for ``s_max`` of arclength.

    Stops early at an AxisApproach (x falls to the axis shell delta_axis) or
    a WindowExit (x exceeds options.x_stop); EpsilonSwitch, YZeroCrossing and
    NullclineCrossing events are recorded and integration continues through
    them.  The phase-plane orientation eps of the model is not consulted:
    the tangent angle carries it.
    """
    opts = options or IntegrateOptions()
    if start.x <= 0:
        raise DomainError("integration must start at x > 0; use "
                          "start_from_axis for an axis departure")
    delta = axis_delta(m)
    rhs = _make_rhs(m)
    u0 = [start.x, start.z, start.phi]
    sol, funcs, kinds = _run_leg(m, rhs, u0, (start.s, start.s + s_max),
                                 opts, delta)

    raw_events = _collect_events(sol, funcs, kinds)
    s_arr, u_arr = sol.t, sol.y
    if s_arr.size == 0:
        raise DomainError("t_eval grid does not intersect the integrated span")
    phi_dot = _dense_phi_fd(sol, s_arr)
    match_residual = None

    s_hit = _terminated_by(sol, funcs, kinds, AXIS_APPROACH)
    if s_hit is not None:
        rebuilt = _reconstruct_axis_arrival(m, rhs, sol, funcs, kinds,
                                            s_hit, opts, delta)
        if rebuilt is not None:
            t_cut, leg = rebuilt
            keep = s_arr < t_cut
            s_arr = np.concatenate([s_arr[keep], leg["s"]])
            u_arr = np.column_stack([u_arr[:, keep],
                                     np.vstack([leg["x"], leg["z"], leg["phi"]])])
            phi_dot = np.concatenate([phi_dot[keep], leg["phi_dot"]])
            raw_events = [e for e in raw_events if e[1] < t_cut] + leg["events"]
            match_residual = leg["residual"]
        # else: the naive samples and the raw AxisApproach row stand as-is

    events = _finalize_events(raw_events)
    x_arr = np.maximum(u_arr[0], 0.0)
    res = h_residual(m, x_arr, u_arr[2], phi_dot=phi_dot)
    return Orbit(s=s_arr, x=x_arr, z=u_arr[1], phi=u_arr[2],
                 events=events, h_residuals=res,
                 h_residual_max=float(res.max()),
                 match_residual=match_residual)


def start_from_axis(m: PhaseModel, direction: int = 1) -> CurveState:
    """State just off the axis for the unique orbit that meets it.

    The axis slope is forced: cos(phi0) = direction / sqrt(1 + c0^2 h(0)^2)
    and sin(phi0) = |c0| h(0) / sqrt(1 + c0^2 h(0)^2), so the orientation of
    the sheet is sign(h(0)) and eps*h(0) >= 0 automatically.  The returned
    state sits at x = delta_axis, advanced from (0, 0) by a first-order
    predictor (errors are O(delta_axis^2)), with s = 0 at the axis itself.
    """
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction!r}")
    h0 = float(m.h(0.0))
    if not math.isfinite(h0):
        raise NoAxisOrbitError("prescription is not finite at nu = 0")
    delta = axis_delta(m)
    den = math.sqrt(1.0 + m.c0 * m.c0 * h0 * h0)
    cp = direction / den
    sp = abs(m.c0) * h0 / den
    phi0 = math.atan2(sp, cp)
    ds = delta / abs(cp)
    return CurveState(s=direction * ds, x=delta, z=sp * ds * direction, phi=phi0)


def continue_through_axis(orbit: Orbit, m: PhaseModel, s_extra: float,
                          options: IntegrateOptions | None = None,
                          rotated_sheet: bool = False) -> Orbit:
    """Extend an orbit whose last event is an AxisApproach through x = 0.

    The continuation is the central-symmetry reflection phi -> pi - phi: the
    profile crosses the axis with the mandated slope and continues smoothly
    (the surface it generates is the same one, met again after a half-turn of
    the ambient rotation).  With ``rotated_sheet`` the continuation is written
    in the representative that shifts heights by c0*pi instead.
    """
    if not orbit.events or orbit.events[-1].kind != AXIS_APPROACH:
        raise NotAtAxisError("orbit does not end at an axis approach")
    ev = orbit.events[-1]
    st = ev.state
    delta = axis_delta(m)
    cp = math.cos(st.phi)
    sp = math.sin(st.phi)
    ds = delta / abs(cp)

    s_axis = st.s + ds
    z_axis = st.z + sp * ds
    phi_dep = math.pi - st.phi
    z_off = m.c0 * math.pi if rotated_sheet else 0.0
    dep = CurveState(s=s_axis + ds, x=delta, z=z_axis + sp * ds + z_off,
                     phi=phi_dep)

    tail = integrate(m, dep, s_extra, options)
    axis_sample_phi = phi_dep

    s = np.concatenate([orbit.s, [s_axis], tail.s])
    x = np.concatenate([orbit.x, [0.0], tail.x])
    z = np.concatenate([orbit.z, [z_axis], tail.z])
    phi = np.concatenate([orbit.phi, [axis_sample_phi], tail.phi])
    axis_res = h_residual(m, np.array([0.0]), np.array([axis_sample_phi]))
    h_res = np.concatenate([orbit.h_residuals, axis_res, tail.h_residuals])
    events = list(orbit.events) + list(tail.events)
    residuals = [r for r in (orbit.match_residual, tail.match_residual)
                 if r is not None]
    return Orbit(s=s, x=x, z=z, phi=phi, events=events,
                 h_residuals=h_res, h_residual_max=float(h_res.max()),
                 match_residual=max(residuals) if residuals else None)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _crossing_direction(m: PhaseModel, st: CurveState) -> float:
    """Sign of dy/ds = -sin(phi) * phi' at a section state (0 if tangent)."""
    if st.x <= 0:
        return 0.0
    d = -math.sin(st.phi) * _phi_rate_xp(m, st.x, st.phi)
    return math.copysign(1.0, d) if d != 0 else 0.0


def _section_crossings(orbit: Orbit, m: PhaseModel):
    rows = []
    st0 = orbit.state_at(0)
    if orbit.x.size and abs(math.cos(st0.phi)) < 1e-12:
        d0 = _crossing_direction(m, st0)
        if d0 != 0:
            rows.append((st0.s, st0, d0))
    for ev in orbit.events:
        if ev.kind != Y_ZERO_CROSSING or ev.state.x <= 0:
            continue
        d = _crossing_direction(m, ev.state)
        if d != 0:
            rows.append((ev.s, ev.state, d))
    return rows


def _find_period(orbit: Orbit, m: PhaseModel, closure_tol: float):
    """First same-direction section return that closes in (x, phi mod 2pi).

    Returns (s_i, s_j, delta_z) or None.  For an autonomous field a
    non-closing first return rules out periodicity through that crossing,
    but later crossings are still tried to absorb marginal numerics.
    """
    rows = _section_crossings(orbit, m)
    for i in range(len(rows)):
        si, sti, di = rows[i]
        for j in range(i + 1, len(rows)):
            sj, stj, dj = rows[j]
            if dj != di:
                continue
            gap = math.hypot(stj.x - sti.x, _wrap_angle(stj.phi - sti.phi))
            if gap < closure_tol:
                return si, sj, stj.z - sti.z
            break
    return None


def classify(orbit: Orbit, m: PhaseModel, *,
             closure_tol: float = CLOSURE_TOL,
             asymptote_tol: float = ASYMPTOTE_TOL,
             equilibrium_tol: float = EQUILIBRIUM_TOL) -> OrbitClass:
    """Match an integrated orbit against the taxonomy of profile behaviors.

    Decision order: Equilibrium, AxisMeeting, TubeClosedProfile, NodoidType,
    ClosedUnduloidType, AsymptoteToLine(t0), AsymptoteToYZeroAxis, and
    EscapeUnbounded for orbits that left through the radius window.  Raises
    InconclusiveOrbitError (with the gathered evidence attached) when the
    integration horizon was too short to support any verdict.

    The result is also stored on ``orbit.classification``.
    """
    if orbit.x.size < 2:
        raise InconclusiveOrbitError("orbit carries fewer than two samples",
                                     evidence={"n_samples": int(orbit.x.size)})

    eq = equilibrium(m)
    if eq is not None:
        dev = float(np.max(np.abs(orbit.x - eq.x)))
        if dev < equilibrium_tol:
            result = OrbitClass("Equilibrium",
                                {"x0": eq.x, "max_deviation": dev})
            orbit.classification = result
            return result

    arrivals = [ev for ev in orbit.events if ev.kind == AXIS_APPROACH]
    if arrivals:
        ev = arrivals[0]
        result = OrbitClass("AxisMeeting", {
            "slope": math.cos(ev.state.phi),
            "s": ev.s,
            "meetings": len(arrivals),
        })
        orbit.classification = result
        return result

    period = _find_period(orbit, m, closure_tol)
    if period is not None:
        si, sj, dz = period
        switches = sum(1 for ev in orbit.events
                       if ev.kind == EPSILON_SWITCH and si < ev.s <= sj)
        meta = {"period": sj - si, "z_advance": dz}
        if abs(dz) < closure_tol:
            result = OrbitClass("TubeClosedProfile", meta)
        elif switches >= 1:
            meta["switches_per_period"] = switches
            result = OrbitClass("NodoidType", meta)
        else:
            result = OrbitClass("ClosedUnduloidType", meta)
        orbit.classification = result
        return result

    n = orbit.x.size
    tail = slice(int(0.8 * n), None)
    ys = orbit.y[tail]
    xs = orbit.x[tail]

    for t0 in profile_of(m.h).zeros:
        if abs(t0) <= 1e-6:
            continue
        if float(np.max(np.abs(ys - t0))) < asymptote_tol:
            result = OrbitClass("AsymptoteToLine", {"t0": float(t0)})
            orbit.classification = result
            return result

    if float(np.max(np.abs(ys))) < asymptote_tol and xs[-1] > xs[0]:
        result = OrbitClass("AsymptoteToYZeroAxis",
                            {"x_final": float(xs[-1])})
        orbit.classification = result
        return result

    if any(ev.kind == WINDOW_EXIT for ev in orbit.events):
        result = OrbitClass("EscapeUnbounded",
                            {"x_exit": float(orbit.x[-1])})
        orbit.classification = result
        return result

    raise InconclusiveOrbitError(
        "no verdict at this horizon; integrate further",
        evidence={
            "s_span": (float(orbit.s[0]), float(orbit.s[-1])),
            "x_range": (float(orbit.x.min()), float(orbit.x.max())),
            "tail_y_range": (float(ys.min()), float(ys.max())),
            "n_events": len(orbit.events),
            "n_section_crossings": len(_section_crossings(orbit, m)),
        })


# ---------------------------------------------------------------------------
# Poincare return map on the y = 0 section
# ---------------------------------------------------------------------------

def poincare_return(m: PhaseModel, x_start: float, *,
                    s_max: float | None = None,
                    options: IntegrateOptions | None = None,
                    full_output: bool = False):
    """First return to the y = 0 section with the same crossing direction.

    Returns (x_return, return_time); with ``full_output`` the integrated
    Orbit is appended as a third element.  ``return_time`` is the elapsed
    arclength, i.e. one full turn of the planar orbit around the center
    (the section is crossed once in each direction per turn).
    """
    eq = equilibrium(m)
    if eq is None:
        raise NoEquilibriumError(
            "the section map needs a center; no equilibrium for this "
            "prescription/orientation")
    if x_start <= 0:
        raise DomainError(f"section coordinate must be positive, got {x_start}")
    if abs(x_start - eq.x) < 1e-12:
        return (x_start, 0.0, None) if full_output else (x_start, 0.0)

    if s_max is None:
        _, eigs = linearize_at_equilibrium(m)
        omega = float(np.max(np.abs(eigs.imag)))
        s_max = 40.0 * math.pi / omega if omega > 1e-12 else 1000.0

    phi0 = 0.5 * math.pi if m.eps > 0 else -0.5 * math.pi
    start = CurveState(0.0, x_start, 0.0, phi0)
    d0 = _crossing_direction(m, start)
    orb = integrate(m, start, s_max, options)

    target = None
    for ev in orb.events:
        if ev.kind != Y_ZERO_CROSSING:
            continue
        if _crossing_direction(m, ev.state) == d0:
            target = ev
            break
    if target is None:
        raise NoReturnError(
            f"no same-direction section return within s = {s_max:g} "
            f"from x = {x_start}")

    x_ret, s_ret = target.state.x, target.s
    if full_output:
        orb.events = sorted(
            orb.events + [OrbitEvent(POINCARE_RETURN, s_ret, target.state)],
            key=lambda e: e.s)
        return x_ret, s_ret, orb
    return x_ret, s_ret


# ---------------------------------------------------------------------------
# planar reference integration (consistency checks)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XYTrace:
    """Direct integration of the planar (x, y) system.

    ``at`` is the dense interpolant: at(s) -> array [x, y].  The planar form
    degenerates at |y| = 1, so traces stop at |y| = y_cap; use the tangent
    angle integrator to cross the boundary.
    """

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    at: object


def integrate_xy(m: PhaseModel, x0: float, y0: float, s_max: float,
                 rtol: float = 1e-9, y_cap: float = 0.97) -> XYTrace:
    if x0 <= 0 or abs(y0) >= 1:
        raise DomainError("planar start must have x > 0 and |y| < 1, got "
                          f"({x0}, {y0})")
    c2 = m.c0 * m.c0
    delta = axis_delta(m)

    def rhs(s, u):
        x, y = u
        if x <= 0.0 or abs(y) >= 1.0:
            return (y, 0.0)
        return (y, -math.sqrt(1.0 - y * y) * F_eps(m, (x, y))
                / (x ** 3 + c2 * x))

    def ev_cap(s, u):
        return abs(u[1]) - y_cap
    ev_cap.terminal = True
    ev_cap.direction = 1

    def ev_axis(s, u):
        return u[0] - delta
    ev_axis.terminal = True
    ev_axis.direction = -1

    sol = solve_ivp(rhs, (0.0, s_max), [x0, y0], method="RK45",
                    rtol=rtol, atol=rtol, events=[ev_cap, ev_axis],
                    dense_output=True)
    if not sol.success and sol.status == -1:
        raise StepFailureError(f"planar integration stalled: {sol.message}")
    return XYTrace(s=sol.t, x=sol.y[0], y=sol.y[1], at=sol.sol)


# ---------------------------------------------------------------------------
# delimited output
# ---------------------------------------------------------------------------

def write_orbit_csv(m: PhaseModel, orbit: Orbit, path) -> None:
    """Write samples as s,x,y,z,phi,nu,kappa,H_residual rows.

    kappa is the turning rate phi'; at a synthetic axis sample (x = 0) it is
    written as nan (the closed form is 0/0 there).  Events are appended as
    commented rows, and the classification - when present - as a final
    comment.  Floats are written with full round-trip precision.
    """
    x = orbit.x
    phi = orbit.phi
    cp = np.cos(phi)
    sp = np.sin(phi)
    c2 = m.c0 * m.c0
    cc = c2 * cp * cp
    q = x * x + cc
    nu = x * cp / np.sqrt(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = ((2.0 * np.asarray(m.h(nu), dtype=float) * q ** 1.5
                  - sp * (x * x + 2.0 * cc)) / (x ** 3 + c2 * x))
    res = orbit.h_residuals

    lines = ["s,x,y,z,phi,nu,kappa,H_residual"]
    for i in range(len(orbit.s)):
        row = (orbit.s[i], x[i], cp[i], orbit.z[i], phi[i],
               nu[i], kappa[i], res[i])
        lines.append(",".join(repr(float(v)) for v in row))
    for ev in orbit.events:
        lines.append(f"# event,{ev.kind},s={float(ev.s)!r},"
                     f"x={float(ev.state.x)!r},z={float(ev.state.z)!r},"
                     f"phi={float(ev.state.phi)!r}")
    if orbit.classification is not None:
        lines.append(f"# classification,{orbit.classification}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

