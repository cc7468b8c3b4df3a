//! Numerics for moment curves x + rγ(t), γ(t) = (t, t², …, t^d): tangency and
//! intersection geometry, tube volumes, test fields, discretized maximal
//! averages, Fourier-side multiplier checks and scaling fits.

pub mod calibration;
pub mod curve;
pub mod error;
pub mod field;
pub mod maximal;
pub mod multiplier;
pub mod planar;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod tangency;
pub mod tube;

pub use curve::{curve_point, distance_to_curve, gamma_point, MomentCurve, ParamRange, Point};
pub use error::{Error, Result};
pub use planar::{curve_intersections, planar_intersections, project_to_parabola, IntersectionReport, PlanarParabola};
pub use tangency::{is_tangent, pair_invariants, solve_tangent_curve, PairInvariants, SignConvention};
pub use tube::{
    analytic_intersection_bound, intersection_volume, perturbed_tangency_volume, tube_volume, BoundEvaluation,
    Regime, VolumeEstimate, VolumeMethod,
};
