"""Command-line front end.

Subcommands
-----------
phase-portrait   vector field, nullclines, constant-angle curves, markers,
                 and seeded orbit traces; SVG figure plus one CSV per layer
orbit            integrate one profile orbit, classify it, export CSV
surface          orbit -> profile -> mesh -> OBJ with per-vertex scalars
classify         integrate and print the orbit verdict and surface family
verify           run every module's invariant suite for the given model

Configuration is taken from ``key = value`` text files (``--config``) with
individual flags overriding file entries.  Exit codes: 0 ok, 1 invalid
configuration, 2 numeric failure, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import checks as checks_mod
from .errors import (
    ConfigError,
    DegenerateJetError,
    DegenerateProfileError,
    DomainError,
    DomainExitError,
    EmptyNullclineError,
    InconclusiveOrbitError,
    NoAxisOrbitError,
    NoEquilibriumError,
    NoReturnError,
    NormalMismatchError,
    NotAtAxisError,
    ParseError,
    StepFailureError,
    UnclassifiedSurfaceError,
)
from .geometry import (
    build_mesh,
    build_profile,
    glue_check,
    surface_taxonomy,
    write_obj,
    write_profile_csv,
)
from .nullcline import trace_nullcline, write_nullcline_csv
from .orbits import (
    CurveState,
    IntegrateOptions,
    classify,
    integrate,
    integrate_xy,
    start_from_axis,
    write_orbit_csv,
)
from .phase import PhaseModel, axis_points, beta0, equilibrium, vector_field
from .prescription import parse_h, profile_of

NUMERIC_ERRORS = (
    DegenerateJetError,
    DegenerateProfileError,
    DomainError,
    DomainExitError,
    EmptyNullclineError,
    InconclusiveOrbitError,
    NoAxisOrbitError,
    NoEquilibriumError,
    NoReturnError,
    NotAtAxisError,
    StepFailureError,
    UnclassifiedSurfaceError,
)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    h_expression: str
    c0: float = 1.0
    eps: int = 1
    x_max: float = 4.0
    grid_n: int = 400
    s_max: float = 30.0
    tol: float = 1e-9
    out: str | None = None
    start: str | None = None          # "x,y" or "from-axis"
    theta_range: tuple = (0.0, 2.0 * math.pi)
    n_theta: int = 64
    seeds: tuple = ()
    plot: bool = False
    windowed: bool = False            # xmax was given explicitly


def _validate(cfg: RunConfig) -> RunConfig:
    if not cfg.h_expression:
        raise ConfigError("h: a prescription expression is required")
    if not (math.isfinite(cfg.c0) and cfg.c0 != 0.0):
        raise ConfigError(f"c0: must be finite and nonzero, got {cfg.c0}")
    if cfg.eps not in (1, -1):
        raise ConfigError(f"eps: must be +1 or -1, got {cfg.eps}")
    if not (math.isfinite(cfg.x_max) and cfg.x_max > 0):
        raise ConfigError(f"xmax: must be finite and positive, got {cfg.x_max}")
    if cfg.grid_n < 64:
        raise ConfigError(f"grid: must be at least 64, got {cfg.grid_n}")
    if not (math.isfinite(cfg.s_max) and cfg.s_max > 0):
        raise ConfigError(f"smax: must be finite and positive, got {cfg.s_max}")
    if not (0.0 < cfg.tol <= 1e-2):
        raise ConfigError(f"tol: must be in (0, 1e-2], got {cfg.tol}")
    if cfg.n_theta < 8:
        raise ConfigError(f"n_theta: must be at least 8, got {cfg.n_theta}")
    t0, t1 = cfg.theta_range
    if not (math.isfinite(t0) and math.isfinite(t1) and t1 > t0):
        raise ConfigError(f"theta_range: must be an increasing pair, got "
                          f"{cfg.theta_range}")
    return cfg


def _parse_pair(text: str, name: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{name}: expected 'a,b', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _parse_seeds(text: str) -> tuple:
    seeds = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            seeds.append(_parse_pair(chunk, "seeds"))
    return tuple(seeds)


def load_config(path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            for ln, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{ln}: expected 'key = value', got {raw!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key] = value
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    return values


_FILE_KEYS = {
    "h": ("h_expression", str),
    "c0": ("c0", float),
    "eps": ("eps", int),
    "xmax": ("x_max", float),
    "grid": ("grid_n", int),
    "smax": ("s_max", float),
    "tol": ("tol", float),
    "out": ("out", str),
    "start": ("start", str),
    "n_theta": ("n_theta", int),
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config-file entries, then explicit flags."""
    cfg = RunConfig(h_expression="")
    if getattr(args, "config", None):
        raw = load_config(args.config)
        updates = {}
        for key, value in raw.items():
            if key in _FILE_KEYS:
                name, cast = _FILE_KEYS[key]
                try:
                    updates[name] = cast(value)
                except ValueError:
                    raise ConfigError(f"{key}: cannot parse {value!r}")
            elif key == "theta_range":
                updates["theta_range"] = _parse_pair(value, "theta_range")
            elif key == "seeds":
                updates["seeds"] = _parse_seeds(value)
            else:
                raise ConfigError(f"{key}: unknown configuration key")
        cfg = replace(cfg, **updates)

    flag_map = {
        "h": "h_expression", "c0": "c0", "eps": "eps", "xmax": "x_max",
        "grid": "grid_n", "smax": "s_max", "tol": "tol", "out": "out",
        "start": "start", "n_theta": "n_theta",
    }
    updates = {}
    for flag, name in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if getattr(args, "from_axis", False):
        updates["start"] = "from-axis"
    if getattr(args, "theta_range", None) is not None:
        updates["theta_range"] = _parse_pair(args.theta_range, "theta_range")
    if getattr(args, "seeds", None) is not None:
        updates["seeds"] = _parse_seeds(args.seeds)
    if getattr(args, "plot", False):
        updates["plot"] = True
    if "x_max" in updates or cfg.x_max != RunConfig.__dataclass_fields__["x_max"].default:
        updates["windowed"] = True
    return _validate(replace(cfg, **updates))


def _model(cfg: RunConfig) -> PhaseModel:
    return PhaseModel(h=parse_h(cfg.h_expression), c0=cfg.c0, eps=cfg.eps)


def _resolve_start(cfg: RunConfig, m: PhaseModel) -> CurveState:
    if cfg.start is None:
        raise ConfigError("start: give --start x,y or --from-axis")
    if cfg.start == "from-axis":
        return start_from_axis(m)
    x, y = _parse_pair(cfg.start, "start")
    if not (x > 0 and abs(y) < 1):
        raise ConfigError(
            f"start: need x > 0 and |y| < 1 inside the phase space, got "
            f"({x}, {y})")
    phi = math.atan2(m.eps * math.sqrt(1.0 - y * y), y)
    return CurveState(0.0, x, 0.0, phi)


def _stem(path: str, suffix: str) -> str:
    return path[: -len(suffix)] if path.endswith(suffix) else path


# ---------------------------------------------------------------------------
# phase-portrait
# ---------------------------------------------------------------------------

def _default_seeds(cfg: RunConfig, m: PhaseModel) -> tuple:
    """Qualitative picks: two near the equilibrium, one in the outer region,
    one next to the axis when an axis orbit exists."""
    seeds = []
    e0 = equilibrium(m)
    if e0 is not None and e0.x < cfg.x_max:
        seeds += [(0.9 * e0.x, 0.0), (0.6 * e0.x, 0.0)]
        outer = min(4.0 * e0.x, 0.8 * cfg.x_max)
        if outer > 1.5 * e0.x:
            seeds.append((outer, 0.0))
    else:
        seeds += [(0.25 * cfg.x_max, 0.0), (0.6 * cfg.x_max, 0.0)]
    pts = axis_points(m)
    if pts is not None and abs(float(m.h(0.0))) > 1e-12:
        seeds.append((0.02 * max(1.0, abs(m.c0)), 0.995 * pts[0][1]))
    return tuple(seeds)


def _layer_path(stem: str, layer: str) -> str:
    return f"{stem}_{layer}.csv"


def cmd_phase_portrait(cfg: RunConfig) -> int:
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "helisurf"
    import matplotlib.pyplot as plt

    m = _model(cfg)
    out = cfg.out or "portrait.svg"
    stem = _stem(out, ".svg")

    fig, ax = plt.subplots(figsize=(7.0, 5.0))

    # layer: direction glyphs on a coarse grid
    gx = np.linspace(cfg.x_max / 20, cfg.x_max, 20)
    gy = np.linspace(-0.95, 0.95, 17)
    rows = ["x,y,dx,dy"]
    GX, GY, GU, GV = [], [], [], []
    for yv in gy:
        for xv in gx:
            dx, dy = vector_field(m, (xv, yv))
            norm = math.hypot(dx, dy)
            if norm > 0:
                dx, dy = dx / norm, dy / norm
            rows.append(f"{float(xv)!r},{float(yv)!r},{float(dx)!r},{float(dy)!r}")
            GX.append(xv), GY.append(yv), GU.append(dx), GV.append(dy)
    with open(_layer_path(stem, "field"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    ax.quiver(GX, GY, GU, GV, color="0.75", width=2.2e-3, scale=45,
              headwidth=3.2)

    # layer: nullcline components (legitimately absent on some sheets)
    try:
        curve = trace_nullcline(m, cfg.x_max, cfg.grid_n)
    except EmptyNullclineError:
        curve = None
    if curve is not None and curve.components:
        write_nullcline_csv(curve, _layer_path(stem, "nullcline"))
        for comp in curve.components:
            ax.plot(comp.samples[:, 0], comp.samples[:, 1], color="crimson",
                    lw=1.8, zorder=3)
        ax.plot([], [], color="crimson", lw=1.8, label="turning locus")

    # layer: constant-angle curves through the zeros of h
    zeros = profile_of(m.h).zeros
    if zeros:
        rows = ["t0,x,y"]
        for t0 in zeros:
            try:
                b = beta0(m, t0, x_max=cfg.x_max)
            except DomainError:
                continue
            for xv, yv in zip(b.x, b.y):
                rows.append(f"{float(t0)!r},{float(xv)!r},{float(yv)!r}")
            ax.plot(b.x, b.y, color="seagreen", ls="--", lw=1.3, zorder=2)
        with open(_layer_path(stem, "beta0"), "w") as fh:
            fh.write("\n".join(rows) + "\n")
        ax.plot([], [], color="seagreen", ls="--", lw=1.3,
                label="constant angle")

    # layer: markers
    rows = ["kind,x,y"]
    e0 = equilibrium(m)
    if e0 is not None:
        rows.append(f"equilibrium,{float(e0.x)!r},{float(e0.y)!r}")
        ax.plot([e0.x], [e0.y], "ko", ms=6, zorder=5)
    pts = axis_points(m)
    if pts is not None:
        for xv, yv in pts:
            rows.append(f"axis_limit,{float(xv)!r},{float(yv)!r}")
            ax.plot([xv], [yv], marker="^", color="navy", ms=7, ls="none",
                    zorder=5)
    with open(_layer_path(stem, "markers"), "w") as fh:
        fh.write("\n".join(rows) + "\n")

    # layer: seeded orbit traces, forward and backward
    seeds = cfg.seeds or _default_seeds(cfg, m)
    rows = ["seed,direction,s,x,y"]
    for k, (x0, y0) in enumerate(seeds):
        for direction, span in (("fwd", cfg.s_max), ("bwd", -cfg.s_max)):
            try:
                tr = integrate_xy(m, x0, y0, span, rtol=cfg.tol)
            except (DomainError, StepFailureError):
                continue
            for sv, xv, yv in zip(tr.s, tr.x, tr.y):
                rows.append(f"{k},{direction},{float(sv)!r},{float(xv)!r},"
                            f"{float(yv)!r}")
            ax.plot(tr.x, tr.y, color="steelblue", lw=1.0, zorder=4)
    with open(_layer_path(stem, "orbits"), "w") as fh:
        fh.write("\n".join(rows) + "\n")

    ax.set_xlim(0.0, cfg.x_max)
    ax.set_ylim(-1.0, 1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y = x'")
    ax.set_title(f"h(t) = {m.h.source},  c0 = {cfg.c0:g},  eps = {cfg.eps:+d}")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    n_comp = len(curve.components) if curve is not None else 0
    print(f"portrait: {out} ({n_comp} nullcline components, "
          f"{len(seeds)} orbit seeds)")
    return 0


# ---------------------------------------------------------------------------
# orbit / classify / surface
# ---------------------------------------------------------------------------

def _integrate_for(cfg: RunConfig, m: PhaseModel):
    """Orbits are only window-limited when the user asked for a window;
    slow asymptotic regimes need the radius left unbounded."""
    start = _resolve_start(cfg, m)
    x_stop = 10.0 * cfg.x_max if cfg.windowed else None
    opts = IntegrateOptions(rtol=cfg.tol, atol=cfg.tol, x_stop=x_stop)
    return integrate(m, start, cfg.s_max, opts)


def _summarize(orbit, m) -> tuple:
    verdict = classify(orbit, m)
    label = surface_taxonomy(orbit, build_profile(orbit, m), m)
    return verdict, label


def cmd_orbit(cfg: RunConfig) -> int:
    m = _model(cfg)
    orbit = _integrate_for(cfg, m)
    out = cfg.out or "orbit.csv"
    try:
        verdict, label = _summarize(orbit, m)
    except (InconclusiveOrbitError, UnclassifiedSurfaceError) as exc:
        write_orbit_csv(m, orbit, out)
        print(f"orbit: {out} ({len(orbit.s)} samples, "
              f"{len(orbit.events)} events)")
        raise exc
    write_orbit_csv(m, orbit, out)
    print(f"orbit: {out} ({len(orbit.s)} samples, {len(orbit.events)} events)")
    print(f"classification: {verdict}")
    print(f"surface family: {label}")
    print(f"curvature residual: {orbit.h_residual_max:.3e}")
    if cfg.plot:
        _plot_orbit(cfg, m, orbit, _stem(out, ".csv") + ".svg")
    return 0


def _plot_orbit(cfg, m, orbit, path):
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "helisurf"
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.2))
    ax1.plot(orbit.x, orbit.y, color="steelblue", lw=1.2)
    ax1.set_xlabel("x")
    ax1.set_ylabel("y = x'")
    ax1.set_title("phase plane")
    ax2.plot(orbit.x, orbit.z, color="darkorange", lw=1.2)
    ax2.set_xlabel("x")
    ax2.set_ylabel("z")
    ax2.set_title("profile curve")
    ax2.set_aspect("equal", adjustable="datalim")
    fig.suptitle(f"h(t) = {m.h.source},  c0 = {cfg.c0:g}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    print(f"overlay: {path}")


def cmd_classify(cfg: RunConfig) -> int:
    m = _model(cfg)
    orbit = _integrate_for(cfg, m)
    verdict, label = _summarize(orbit, m)
    print(f"classification: {verdict}")
    if verdict.metadata:
        for key in sorted(verdict.metadata):
            print(f"  {key}: {verdict.metadata[key]:g}")
    print(f"surface family: {label}")
    for warning in label.warnings:
        print(f"  warning: {warning}")
    return 0


def cmd_surface(cfg: RunConfig) -> int:
    m = _model(cfg)
    orbit = _integrate_for(cfg, m)
    profile = build_profile(orbit, m)
    label = surface_taxonomy(orbit, profile, m)
    mesh = build_mesh(profile, m, theta_range=cfg.theta_range,
                      n_theta=cfg.n_theta)
    out = cfg.out or "surface.obj"
    stem = _stem(out, ".obj")
    write_obj(mesh, out)
    write_profile_csv(profile, f"{stem}_profile.csv")
    print(f"surface: {out} ({len(mesh.vertices)} vertices, "
          f"{len(mesh.faces)} faces)")
    print(f"surface family: {label}")
    print(f"mesh curvature residual: {float(np.max(mesh.residual)):.3e}")
    if mesh.self_intersecting:
        print("profile curve self-intersects (surface is not embedded)")
    if any(ev.kind == "EpsilonSwitch" for ev in orbit.events):
        report = glue_check(orbit, m)
        print(f"glue report: {len(report.switches)} switches, "
              f"max normal mismatch {report.max_mismatch:.3e}")
        for sw in report.switches:
            print(f"  s = {sw.s:.6g}: boundary helix radius {sw.radius:.6g}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    m = _model(cfg)
    records, warnings = checks_mod.run_all(
        m, x_max=cfg.x_max, grid_n=cfg.grid_n, s_max=cfg.s_max, tol=cfg.tol)
    for rec in records:
        print(checks_mod.format_record(rec))
    for warning in warnings:
        print(f"warning: {warning}")
    failed = [rec for rec in records if not rec.passed]
    print(f"{len(records) - len(failed)}/{len(records)} invariants hold")
    return 3 if failed else 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):          # usage problems are config errors
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--h", help="prescription expression in t")
    common.add_argument("--c0", type=float, help="helicoidal pitch (nonzero)")
    common.add_argument("--eps", type=int, choices=(1, -1),
                        help="orientation sheet")
    common.add_argument("--xmax", type=float, help="phase window half-width")
    common.add_argument("--grid", type=int, help="nullcline grid resolution")
    common.add_argument("--smax", type=float, help="arclength horizon")
    common.add_argument("--tol", type=float, help="integration tolerance")
    common.add_argument("--out", help="output path")
    common.add_argument("--config", help="key = value configuration file")

    seeded = _Parser(add_help=False, parents=[common])
    seeded.add_argument("--from-axis", action="store_true",
                        help="launch the orbit from the rotation axis")
    seeded.add_argument("--start", help="planar start 'x,y'")

    parser = _Parser(prog="helisurf",
                     description="helicoidal surfaces of prescribed mean "
                                 "curvature: portraits, orbits, meshes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-portrait", parents=[common],
                       help="SVG portrait with per-layer CSV companions")
    p.add_argument("--seeds", help="orbit seeds 'x1,y1;x2,y2;...'")

    p = sub.add_parser("orbit", parents=[seeded],
                       help="integrate, classify, and export one orbit")
    p.add_argument("--plot", action="store_true",
                   help="also write an SVG overlay")

    sub.add_parser("classify", parents=[seeded],
                   help="print the orbit verdict and surface family")

    p = sub.add_parser("surface", parents=[seeded],
                       help="build and export the swept mesh")
    p.add_argument("--theta-range", dest="theta_range",
                   help="angular window 'a,b'")
    p.add_argument("--n-theta", dest="n_theta", type=int,
                   help="angular samples (>= 8)")

    sub.add_parser("verify", parents=[common],
                   help="run the invariant suites; nonzero exit on failure")
    return parser


_DISPATCH = {
    "phase-portrait": cmd_phase_portrait,
    "orbit": cmd_orbit,
    "classify": cmd_classify,
    "surface": cmd_surface,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return _DISPATCH[args.command](cfg)
    except (ConfigError, ParseError) as exc:
        print(f"helisurf: configuration error: {exc}", file=sys.stderr)
        return 1
    except NormalMismatchError as exc:
        print(f"helisurf: invariant failure: {exc}", file=sys.stderr)
        return 3
    except NUMERIC_ERRORS as exc:
        print(f"helisurf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
