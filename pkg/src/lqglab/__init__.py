"""Lattice laboratory for weak Liouville quantum gravity metrics."""

from .errors import (
    BallTouchesBorder,
    EmptyMask,
    EmptyTargetSet,
    GridTooSmall,
    InsufficientResolution,
    InsufficientSamples,
    InvalidCenter,
    InvalidSpec,
    IterationLimit,
    LatticeError,
    NoPath,
    OutOfBounds,
    PathMissesAnnulus,
    VertexOutsideRegion,
    WalkBudgetExceeded,
    WeightOverflow,
)
from .field import (
    COV_SLOPE,
    FieldSpec,
    ScalarField,
    add_log_singularity,
    circle_average,
    mollify,
    sample_gff,
)
from .metric import (
    GAMMA_SQRT83,
    DistanceField,
    LatticeMetric,
    LfppParams,
    annulus_crossing_distance,
    build_metric,
    default_params,
    distance,
    distance_field,
    internal_distance,
    normalized_distance,
    scaling_constant,
    set_to_set_distance,
)
from .ball import (
    BoundaryCycle,
    RegionMask,
    fill_holes,
    filled_ball,
    metric_ball,
    partition_arcs_by_harmonic_measure,
    tau_r,
    trace_boundary,
)
from .geodesic import (
    ArcImage,
    ConfluenceResult,
    GeodesicPath,
    arc_image,
    coalescence_radius,
    confluence_count,
    geodesic,
    hit_index,
    leftmost_family,
    leftmost_geodesic,
    prefix_consistency_violations,
    winding_number,
    winding_spread,
    winding_totals,
)
from .probe import (
    GoodAnnulusParams,
    ScalingReport,
    crossing_functional,
    fkg_check,
    good_annulus_event,
    good_annulus_probability,
    inversion_check,
    monotone_functional,
    negate,
    point_distance_functional,
    region_diameter_functional,
    scaling_sandwich,
    set_distance_functional,
)
from .stats import MonteCarloResult, jackknife_stderr

__version__ = "0.1.0"

__all__ = [
    "ArcImage",
    "BallTouchesBorder",
    "BoundaryCycle",
    "COV_SLOPE",
    "ConfluenceResult",
    "DistanceField",
    "EmptyMask",
    "EmptyTargetSet",
    "FieldSpec",
    "GAMMA_SQRT83",
    "GeodesicPath",
    "GoodAnnulusParams",
    "GridTooSmall",
    "InsufficientResolution",
    "InsufficientSamples",
    "InvalidCenter",
    "InvalidSpec",
    "IterationLimit",
    "LatticeError",
    "LatticeMetric",
    "LfppParams",
    "MonteCarloResult",
    "NoPath",
    "OutOfBounds",
    "PathMissesAnnulus",
    "RegionMask",
    "ScalarField",
    "ScalingReport",
    "VertexOutsideRegion",
    "WalkBudgetExceeded",
    "WeightOverflow",
    "add_log_singularity",
    "annulus_crossing_distance",
    "arc_image",
    "build_metric",
    "circle_average",
    "coalescence_radius",
    "confluence_count",
    "crossing_functional",
    "default_params",
    "distance",
    "distance_field",
    "fill_holes",
    "filled_ball",
    "fkg_check",
    "geodesic",
    "good_annulus_event",
    "good_annulus_probability",
    "hit_index",
    "internal_distance",
    "inversion_check",
    "jackknife_stderr",
    "leftmost_family",
    "leftmost_geodesic",
    "metric_ball",
    "mollify",
    "monotone_functional",
    "negate",
    "normalized_distance",
    "partition_arcs_by_harmonic_measure",
    "point_distance_functional",
    "prefix_consistency_violations",
    "region_diameter_functional",
    "sample_gff",
    "scaling_constant",
    "scaling_sandwich",
    "set_distance_functional",
    "set_to_set_distance",
    "tau_r",
    "trace_boundary",
    "winding_number",
    "winding_spread",
    "winding_totals",
]
