"""Nullcline tracing on a phase window.

The nullcline is the zero set of the residual F_eps(x, y).  It is found by
marching squares over sign(F_eps) on an n x n grid inset from the boundary
(the formula extends continuously to x = 0 and |y| = 1 but the phase space is
open), with each crossing edge refined by bisection until |F_eps| < 1e-8 and
segments chained into polyline components.

Components can end four ways, and the endpoint metadata distinguishes them:
on the axis x = 0 the limit is one of the two axis points +/-p_eps; on the
boundary |y| = 1 the limit is a point p0 where the angle function equals a
zero of the prescription; otherwise the curve leaves through the open window
edge, or (exceptionally) the chain simply stops inside.  The boundary limits
are sharpened by continuation: the crossing is re-solved on a geometric
sequence of grid-free lines approaching the boundary, and the limit point is
finally solved on the boundary line itself, where F_eps still makes sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EmptyNullclineError
from .phase import F_eps, PhaseModel, angle_nu, axis_points, f2_and_gradient
from .prescription import profile_of

RESIDUAL_TOL = 1e-8
REGULARITY_FLOOR = 1e-6

__all__ = [
    "NullclineComponent",
    "NullclineCurve",
    "NullclineEndpoint",
    "trace_nullcline",
    "write_nullcline_csv",
]


@dataclass(frozen=True)
class NullclineEndpoint:
    """Where a component ends: kind is 'axis_point' (limit +/-p_eps on x=0),
    'angle_boundary' (limit p0 on |y|=1), 'window_edge', or 'interior'."""

    kind: str
    point: tuple[float, float]


@dataclass(frozen=True)
class NullclineComponent:
    samples: np.ndarray          # (N, 2) ordered points
    residuals: np.ndarray        # |F_eps| at each sample
    regular: np.ndarray          # per-sample gradient certificate
    closed: bool
    endpoints: tuple[NullclineEndpoint, NullclineEndpoint] | None


@dataclass(frozen=True)
class NullclineCurve:
    components: tuple[NullclineComponent, ...]
    x_max: float
    grid_n: int


# ---------------------------------------------------------------------------
# grid evaluation
# ---------------------------------------------------------------------------

def _F_grid(m: PhaseModel, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    c2 = m.c0 * m.c0
    q = X * X + c2 * Y * Y
    nu = X * Y / np.sqrt(q)
    return (2.0 * m.eps * np.asarray(m.h(nu), dtype=float) * q ** 1.5
            - (X * X + 2.0 * c2 * Y * Y) * np.sqrt(1.0 - Y * Y))


def _bisect_edge(m: PhaseModel, pa, fa, pb, fb):
    """Refine the crossing on the segment pa-pb until |F_eps| < RESIDUAL_TOL.

    fa < 0 <= fb on entry (marching-squares sign convention)."""
    if fb == 0.0:
        return pb, 0.0
    xa, ya = pa
    xb, yb = pb
    best_p, best_f = pa, abs(fa)
    for _ in range(200):
        xm, ym = 0.5 * (xa + xb), 0.5 * (ya + yb)
        fm = F_eps(m, (xm, ym))
        if abs(fm) < best_f:
            best_p, best_f = (xm, ym), abs(fm)
        if best_f < RESIDUAL_TOL * 0.1:
            break
        if fm < 0.0:
            xa, ya = xm, ym
        else:
            xb, yb = xm, ym
        if abs(xb - xa) + abs(yb - ya) < 1e-15 * (1.0 + abs(xm) + abs(ym)):
            break
    return best_p, best_f


# marching-squares lookup: cell corners c0..c3 counterclockwise from
# bottom-left; a set bit means F < 0.  Edges are B(ottom), R(ight), T(op),
# L(eft).  Cases 5 and 10 are ambiguous and resolved by the center sample.
_LUT = {
    1: [("L", "B")], 2: [("B", "R")], 3: [("L", "R")], 4: [("R", "T")],
    6: [("B", "T")], 7: [("L", "T")], 8: [("L", "T")], 9: [("B", "T")],
    11: [("R", "T")], 12: [("L", "R")], 13: [("B", "R")], 14: [("L", "B")],
}


def _cell_segments(idx: int, center_negative: bool):
    if idx == 5:
        return [("B", "R"), ("L", "T")] if center_negative else [("L", "B"), ("R", "T")]
    if idx == 10:
        return [("L", "B"), ("R", "T")] if center_negative else [("B", "R"), ("L", "T")]
    return _LUT[idx]


# ---------------------------------------------------------------------------
# boundary continuation for endpoint metadata
# ---------------------------------------------------------------------------

def _root_in_y(m: PhaseModel, x_fixed: float, y_guess: float, width: float):
    """Solve F_eps(x_fixed, y) = 0 near y_guess with an expanding bracket."""
    for w in (width, 4 * width, 16 * width):
        lo = max(-1.0, y_guess - w)
        hi = min(1.0, y_guess + w)
        f_lo = F_eps(m, (x_fixed, lo))
        f_hi = F_eps(m, (x_fixed, hi))
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi < 0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                f_mid = F_eps(m, (x_fixed, mid))
                if abs(f_mid) < 1e-13 or hi - lo < 1e-15:
                    return mid
                if (f_mid < 0) == (f_lo < 0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    return None


def _root_in_x(m: PhaseModel, y_fixed: float, x_guess: float, width: float):
    for w in (width, 4 * width, 16 * width):
        lo = max(1e-12, x_guess - w)
        hi = x_guess + w
        f_lo = F_eps(m, (lo, y_fixed))
        f_hi = F_eps(m, (hi, y_fixed))
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi < 0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                f_mid = F_eps(m, (mid, y_fixed))
                if abs(f_mid) < 1e-13 or hi - lo < 1e-15 * (1 + hi):
                    return mid
                if (f_mid < 0) == (f_lo < 0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    # two nearby crossings can straddle the guess with equal outer signs
    # (branches pinching toward a common limit); fall back on minimizing |F|
    lo = max(1e-12, x_guess - width)
    res = minimize_scalar(lambda t: abs(F_eps(m, (t, y_fixed))),
                          bounds=(lo, x_guess + width), method="bounded",
                          options={"xatol": 1e-14})
    if abs(res.fun) < RESIDUAL_TOL:
        return float(res.x)
    return None


def _refine_axis_limit(m: PhaseModel, xe: float, ye: float, dyc: float):
    """Continue the curve x -> 0, then solve on the axis line itself."""
    y, x = ye, xe
    while x > 1e-9:
        x *= 0.5
        found = _root_in_y(m, x, y, 2 * dyc)
        if found is None:
            return None
        y = found
    y_axis = _root_in_y(m, 0.0, y, 4 * dyc)
    if y_axis is None:
        return None
    return NullclineEndpoint("axis_point", (0.0, y_axis))


def _refine_angle_limit(m: PhaseModel, xe: float, ye: float, sign: float):
    """Continue the curve |y| -> 1, then minimize |F_eps| on the boundary.

    On |y| = 1 the residual reduces to 2 eps h(nu) (x^2+c0^2)^{3/2}, whose
    zeros are the points p0 with nu equal to a zero of h; even-order zeros
    give no sign change, so the boundary solve minimizes |F| instead of
    bisecting.
    """
    x, delta = xe, 1.0 - abs(ye)
    moved = 0.0
    while delta > 1e-13:
        delta *= 0.4
        found = _root_in_x(m, sign * (1.0 - delta), x, max(0.05, 2 * moved))
        if found is None:
            return None
        moved = abs(found - x) + 1e-6
        x = found
    w = max(0.02, 4 * moved)
    res = minimize_scalar(lambda t: abs(F_eps(m, (t, sign))),
                          bounds=(max(1e-12, x - w), x + w), method="bounded",
                          options={"xatol": 1e-13})
    if abs(res.fun) > 1e-6:
        return None
    return NullclineEndpoint("angle_boundary", (float(res.x), sign))


def _endpoint_info(m: PhaseModel, sample, xs, ys) -> NullclineEndpoint:
    xe, ye = float(sample[0]), float(sample[1])
    dxc = xs[1] - xs[0]
    dyc = ys[1] - ys[0]
    if xe <= xs[0] + 2 * dxc:
        info = _refine_axis_limit(m, xe, ye, dyc)
        if info is not None:
            return info
    if ye >= ys[-1] - 2 * dyc:
        info = _refine_angle_limit(m, xe, ye, 1.0)
        if info is not None:
            return info
    if ye <= ys[0] + 2 * dyc:
        info = _refine_angle_limit(m, xe, ye, -1.0)
        if info is not None:
            return info
    if xe >= xs[-1] - 2 * dxc:
        return NullclineEndpoint("window_edge", (xe, ye))
    return NullclineEndpoint("interior", (xe, ye))


# ---------------------------------------------------------------------------
# tracer
# ---------------------------------------------------------------------------

def trace_nullcline(m: PhaseModel, x_max: float, n: int = 400) -> NullclineCurve:
    """Trace the nullcline inside x in (0, x_max], |y| < 1 on an n x n grid."""
    if x_max <= 0:
        raise ValueError(f"x_max must be positive, got {x_max}")
    if n < 64:
        raise ValueError(f"grid must be at least 64x64, got {n}")

    xs = np.linspace(x_max / (2 * n), x_max, n)
    ys = np.linspace(-1.0 + 1.0 / n, 1.0 - 1.0 / n, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = _F_grid(m, X, Y)
    neg = F < 0.0

    # crossing points are shared between cells, so cache them per grid edge
    crossings: dict[tuple, tuple[tuple[float, float], float]] = {}

    def edge_key(name, i, j):
        if name == "B":
            return ("h", i, j)
        if name == "T":
            return ("h", i, j + 1)
        if name == "L":
            return ("v", i, j)
        return ("v", i + 1, j)

    def edge_point(key):
        if key in crossings:
            return
        kind, i, j = key
        if kind == "h":
            pa, pb = (xs[i], ys[j]), (xs[i + 1], ys[j])
            fa, fb = F[i, j], F[i + 1, j]
        else:
            pa, pb = (xs[i], ys[j]), (xs[i], ys[j + 1])
            fa, fb = F[i, j], F[i, j + 1]
        if fa >= 0.0:  # orient so the F < 0 end comes first
            pa, pb, fa, fb = pb, pa, fb, fa
        crossings[key] = _bisect_edge(m, pa, fa, pb, fb)

    idx_grid = (neg[:-1, :-1].astype(np.int8)
                | neg[1:, :-1].astype(np.int8) << 1
                | neg[1:, 1:].astype(np.int8) << 2
                | neg[:-1, 1:].astype(np.int8) << 3)

    segments: list[tuple[tuple, tuple]] = []
    for i, j in np.argwhere((idx_grid != 0) & (idx_grid != 15)):
        idx = int(idx_grid[i, j])
        if idx in (5, 10):
            fc = F_eps(m, (0.5 * (xs[i] + xs[i + 1]),
                           0.5 * (ys[j] + ys[j + 1])))
            segs = _cell_segments(idx, fc < 0.0)
        else:
            segs = _cell_segments(idx, False)
        for ea, eb in segs:
            ka, kb = edge_key(ea, int(i), int(j)), edge_key(eb, int(i), int(j))
            edge_point(ka)
            edge_point(kb)
            segments.append((ka, kb))

    if not segments:
        raise EmptyNullclineError(
            f"nullcline is empty in x <= {x_max}, |y| < 1 (eps = {m.eps:+d})")

    chains = _chain(segments)
    components = []
    for keys, closed in chains:
        pts = np.array([crossings[k][0] for k in keys])
        res = np.array([crossings[k][1] for k in keys])
        reg = _regularity(m, pts)
        endpoints = None
        if not closed:
            endpoints = (_endpoint_info(m, pts[0], xs, ys),
                         _endpoint_info(m, pts[-1], xs, ys))
        components.append(NullclineComponent(pts, res, reg, closed, endpoints))

    components.sort(key=lambda c: (c.samples[:, 0].min(), c.samples[:, 1].min()))
    return NullclineCurve(tuple(components), x_max, n)


def _chain(segments):
    """Link cell segments that share a grid edge into ordered chains."""
    adjacency: dict[tuple, list[int]] = {}
    for s, (ka, kb) in enumerate(segments):
        adjacency.setdefault(ka, []).append(s)
        adjacency.setdefault(kb, []).append(s)

    used = [False] * len(segments)

    def walk(start_edge):
        keys = [start_edge]
        cur = start_edge
        while True:
            nxt_seg = next((s for s in adjacency[cur] if not used[s]), None)
            if nxt_seg is None:
                return keys, False
            used[nxt_seg] = True
            ka, kb = segments[nxt_seg]
            cur = kb if ka == cur else ka
            if cur == start_edge:
                return keys, True
            keys.append(cur)

    chains = []
    # open chains start at edges touched by exactly one segment
    for edge, segs in adjacency.items():
        if len(segs) == 1 and not used[segs[0]]:
            chains.append(walk(edge))
    # whatever remains is a set of closed loops
    for s, (ka, _) in enumerate(segments):
        if not used[s]:
            chains.append(walk(ka))
    return chains


def _regularity(m: PhaseModel, pts: np.ndarray) -> np.ndarray:
    """Gradient certificate in (u, v) = (x^2, nu) coordinates, per sample."""
    flags = np.empty(len(pts), dtype=bool)
    for k, (x, y) in enumerate(pts):
        v = angle_nu(m, x, y)
        _, (du, dv) = f2_and_gradient(m, x * x, v)
        flags[k] = math.hypot(du, dv) > REGULARITY_FLOOR
    return flags


def write_nullcline_csv(curve: NullclineCurve, path) -> None:
    """Delimited export: one row per sample, components in traced order."""
    lines = ["component_id,x,y,F_residual,regular_flag"]
    for cid, comp in enumerate(curve.components):
        for (x, y), r, g in zip(comp.samples, comp.residuals, comp.regular):
            lines.append(f"{cid},{float(x)!r},{float(y)!r},{float(r)!r},{int(g)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
