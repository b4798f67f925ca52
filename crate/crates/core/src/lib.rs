//! Planning library for an uncertainty-aware trajectory planner driving on
//! bird's-eye-view occupancy predictions.
//!
//! The pipeline: behavioral inputs (lateral offset target, speed setpoint)
//! are sampled from a Gaussian, turned into piecewise-cubic seed trajectories
//! in the Frenet frame, pushed to the constraint set by a batched
//! alternating-minimization projection with discrete-time barrier
//! constraints, and scored by an analytic cost plus an MMD collision
//! surrogate computed from noisy distance-field queries. A CEM-style update
//! adapts the sampling distribution between iterations.
//!
//! All numeric code is generic over the scalar type via [`Real`]; `f64`
//! aliases for the main types are exported at the crate root.

pub mod basis;
pub mod error;
pub mod frenet;
pub mod grid;
pub mod mmd;
pub mod optimizer;
pub mod projection;
pub mod rng;
pub mod seed;

pub use basis::{build_basis, eval_trajectory, BasisSet, StateSequence, TrajectoryCoeffs};
pub use error::CoreError;
pub use frenet::Centerline;
pub use grid::{
    build_distance_field, trajectory_distances, DistanceField, DistanceProfile, GridSequence,
    OccupancyGrid,
};
pub use mmd::{
    collision_cost_samples, fit_error_model, mmd_cost, sample_noisy_distances, CostSamples,
    ErrorModel, KernelConfig, NoiseCorrelation,
};
pub use optimizer::{
    evaluate_costs, iterate, optimize, update_distribution, CandidateRecord, Diagnostics,
    OptimizeResult, OptimizerConfig, SceneContext,
};
pub use projection::{
    build_problem, project, residual_norm, LeadVehicleTrack, PlannerLimits, ProjectionOutcome,
    ProjectionProblem, ProjectionState,
};
pub use seed::{
    analytic_cost, sample_behaviors, seed_trajectory, BehavioralInput, BoundaryConditions,
    CostWeights, FrenetState, SamplingDistribution, SeedSolver,
};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the planner math is generic over (`f32` or `f64`).
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {}
impl<T> Real for T where T: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// `Result` alias used throughout the crate.
pub type Result<T, E = CoreError> = std::result::Result<T, E>;

pub type BasisSet64 = BasisSet<f64>;
pub type Centerline64 = Centerline<f64>;
pub type StateSequence64 = StateSequence<f64>;
pub type DistanceField64 = DistanceField<f64>;
pub type ErrorModel64 = ErrorModel<f64>;
pub type PlannerLimits64 = PlannerLimits<f64>;
pub type ProjectionProblem64 = ProjectionProblem<f64>;
pub type SamplingDistribution64 = SamplingDistribution<f64>;
pub type OptimizerConfig64 = OptimizerConfig<f64>;
