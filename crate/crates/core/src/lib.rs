//! Cut-cell quadrature: octree partitioning of trimmed elements, midpoint
//! tessellation, nested quadrature rule sequences and worst-case error driven
//! optimization of the number of integration points.

pub mod error;
pub mod error_estimator;
pub mod geometry;
pub mod octree;
pub mod optimizer;
pub mod quadrature;
pub mod scaling;
pub mod tessellation;

pub use error::{Error, Result};
pub use geometry::{
    classify_cell, make_ellipsoid_exclusion, Affine, BoxCell, Classification, Ellipsoid, FnField, GeometrySpec,
    LevelSet, Point, SignPattern, SignRule,
};
pub use octree::{partition_element, partition_volume, subcell_census, Census, Partition, SubCell};
pub use tessellation::{tessellate, tessellate_2d, tessellate_3d, SimplexCell, SimplexKind, TessellationResult};
pub use quadrature::{
    assemble_scheme, box_rule, gauss_1d, reference_scheme, simplex_rule, BoxRuleKind, QuadratureScheme, Rule,
    RuleFamily, RuleIndexList,
};
pub use error_estimator::{
    exact_moments, gramian, indicators, localized_errors, worst_case_error, Basis, ErrorModel, ErrorReport, Norm,
    PolynomialSpace,
};
pub use optimizer::{
    equal_order_sweep, optimize, optimize_global, rule_of_thumb, thumb_degrees, Marked, Marking, OptimizationTrace,
    OptimizeOptions, StopRule, SweepPoint, Termination, ThumbRule, TraceStep,
};
pub use scaling::{
    asymptotic_points, compare_counts, measure_surface_fraction, predict_counts, surface_constant, CountPrediction,
    ScalingInputs, SurfaceFraction,
};
