"""helisurf: a numerical laboratory for helicoidal surfaces of prescribed mean curvature."""

from .checks import CheckRecord, run_all
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
    NormalMismatchError,
    NoReturnError,
    NotAtAxisError,
    OnNullclineError,
    ParseError,
    StepFailureError,
    UnclassifiedSurfaceError,
)
from .geometry import (
    BoundaryHelix,
    GlueReport,
    HelicoidMesh,
    ProfileCurve,
    SurfaceLabel,
    build_mesh,
    build_profile,
    gauss_map,
    glue_check,
    mean_curvature,
    mean_curvature_forms,
    profile_self_intersections,
    surface_taxonomy,
    write_obj,
    write_profile_csv,
)
from .nullcline import (
    NullclineComponent,
    NullclineCurve,
    NullclineEndpoint,
    trace_nullcline,
    write_nullcline_csv,
)
from .orbits import (
    CurveState,
    IntegrateOptions,
    Orbit,
    OrbitClass,
    OrbitEvent,
    XYTrace,
    classify,
    continue_through_axis,
    h_residual,
    integrate,
    integrate_xy,
    phi_rate,
    poincare_return,
    start_from_axis,
    write_orbit_csv,
)
from .phase import (
    Beta0Curve,
    PhaseModel,
    PhasePoint,
    F_eps,
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
from .prescription import HFunction, HProfile, parse_h, profile_of

__version__ = "0.1.0"

__all__ = [
    # prescription
    "HFunction",
    "HProfile",
    "parse_h",
    "profile_of",
    # phase space
    "PhaseModel",
    "PhasePoint",
    "Beta0Curve",
    "F_eps",
    "angle_nu",
    "axis_points",
    "beta0",
    "equilibrium",
    "f2_and_gradient",
    "f_eps_level",
    "fd_jacobian",
    "linearize_at_equilibrium",
    "monotonicity_region",
    "vector_field",
    # nullcline tracing
    "NullclineComponent",
    "NullclineCurve",
    "NullclineEndpoint",
    "trace_nullcline",
    "write_nullcline_csv",
    # orbit engine
    "CurveState",
    "IntegrateOptions",
    "Orbit",
    "OrbitClass",
    "OrbitEvent",
    "XYTrace",
    "classify",
    "continue_through_axis",
    "h_residual",
    "integrate",
    "integrate_xy",
    "phi_rate",
    "poincare_return",
    "start_from_axis",
    "write_orbit_csv",
    # surface geometry
    "BoundaryHelix",
    "GlueReport",
    "HelicoidMesh",
    "ProfileCurve",
    "SurfaceLabel",
    "build_mesh",
    "build_profile",
    "gauss_map",
    "glue_check",
    "mean_curvature",
    "mean_curvature_forms",
    "profile_self_intersections",
    "surface_taxonomy",
    "write_obj",
    "write_profile_csv",
    # verification
    "CheckRecord",
    "run_all",
    # errors
    "ConfigError",
    "DegenerateJetError",
    "DegenerateProfileError",
    "DomainError",
    "DomainExitError",
    "EmptyNullclineError",
    "InconclusiveOrbitError",
    "NoAxisOrbitError",
    "NoEquilibriumError",
    "NoReturnError",
    "NormalMismatchError",
    "NotAtAxisError",
    "OnNullclineError",
    "ParseError",
    "StepFailureError",
    "UnclassifiedSurfaceError",
    "__version__",
]
