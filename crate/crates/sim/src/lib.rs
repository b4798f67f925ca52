//! Closed-loop 2D driving harness around the planner: scripted neighbor
//! vehicles, synthetic BEV perception with horizon-growing noise, episode
//! execution with ground-truth collision checking, and metrics.
//!
//! Everything here is concrete `f64`; the planner math lives in
//! `bevplan-core`.

pub mod config;
pub mod episode;
pub mod error;
pub mod metrics;
pub mod perception;
pub mod scenario;
pub mod trace;
pub mod world;

pub use config::{PerceptionEmulation, PlannerConfig};
pub use episode::{run_episode, EpisodeResult, PlannerVariant};
pub use error::SimError;
pub use metrics::{compute_metrics, EpisodeMetrics, Outcome};
pub use scenario::{NeighborScript, Scenario, ScenarioMode};
pub use trace::TraceRecord;
pub use world::World;

pub type Result<T, E = SimError> = std::result::Result<T, E>;
