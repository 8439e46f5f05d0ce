"""Closest point parameterization of closed planar curves over the positive
edges of a background triangulation."""

from .curve_geometry import (
    BoundaryCurve,
    CurvePoint,
    ImplicitCurve,
    ParametricCurve,
    Projection,
    ReachEstimate,
    circle,
    closest_point,
    ellipse,
    estimate_reach,
    grad_pi,
    hess_phi,
    negated,
    signed_curvature,
    signed_distance,
    spline,
    union,
)
from .cut_classifier import (
    ConditionReport,
    ConditionRow,
    CutClassification,
    CutTriangle,
    adjacent_angle,
    check_conditions,
    classify,
    curvature_bound,
)
from .edge_topology import PositiveLoop, build_loops, loop_orientation, orient_loops
from .parameterization import (
    LoopSamples,
    ParamSample,
    VerificationReport,
    edge_estimate_checks,
    jacobian,
    sample_loop,
    sample_loops,
    verify_homeomorphism,
)
from .triangulation import (
    Triangulation,
    build_triangulation,
    edge_incident_triangles,
    generate_equilateral_grid,
    triangle_metrics,
)

__version__ = "0.1.0"


def __getattr__(name):
    # the estimator pulls in scikit-learn; load it on first use
    if name == "PositiveEdgeParameterizer":
        from .estimator import PositiveEdgeParameterizer

        return PositiveEdgeParameterizer
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
