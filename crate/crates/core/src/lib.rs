//! Real-interpolation toolkit on finite metric-measure spaces.
//!
//! Rearrangements, maximal functions, Whitney covers, Calderón–Zygmund
//! decompositions of Sobolev functions and two-sided K-functional
//! estimates, each paired with an exact or independent check.

pub mod calculus;
pub mod cover;
pub mod czd;
pub mod error;
pub mod fields;
pub mod kfun;
pub mod maximal;
pub mod rearrange;
pub mod space;

pub use calculus::{
    grad, gradient, homogeneous_seminorm, lp_norm, poincare_scan, read_field, render_field, sobolev_norm, write_field, Neighborhood,
    PoincareReport, ScalarField, TestFamily,
};
pub use cover::{
    relative_doubling_check, unit_ball_cover, whitney, BallFamily, PartitionOfUnity, RelativeDoubling, UnitCover,
};
pub use czd::{
    czd_global, czd_homogeneous, czd_local, omega, verify_decomposition, Certificate, Decomposition, VerifyReport, Variant,
};
pub use error::{Error, Result};
pub use kfun::{
    alpha_of_t, interpolation_norm, k_curve, k_homogeneous, k_lower, k_oracle, k_oracle_pair, k_upper, norm_equivalence_report,
    CurveSpec, KCurve, KOracle, KUpper, PairSpec, WitnessSpec,
};
pub use maximal::{maximal_function, maximal_vs_double_star, relative_maximal, weak_type_ratio};
pub use rearrange::{decreasing_rearrangement, k_lp_linf, DoubleStar, StepFunction};
pub use space::{
    build_cone, build_grid, doubling_constant, load_space, save_space, Ball, BallIndex, DoublingReport, PointId,
    PointSet, RadiusLadder, Space, WeightProfile,
};
