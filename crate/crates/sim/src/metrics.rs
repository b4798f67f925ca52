//! Episode metrics computed from the ground-truth trace.

use serde::{Deserialize, Serialize};

use crate::trace::TraceRecord;
use crate::{Result, SimError};

/// Episode termination cause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Collision,
    Stuck,
    Timeout,
    PlannerFailure,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Collision => "collision",
            Outcome::Stuck => "stuck",
            Outcome::Timeout => "timeout",
            Outcome::PlannerFailure => "planner_failure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "completed" => Outcome::Completed,
            "collision" => Outcome::Collision,
            "stuck" => Outcome::Stuck,
            "timeout" => Outcome::Timeout,
            "planner_failure" => Outcome::PlannerFailure,
            _ => return Err(SimError::TraceSchema(format!("unknown outcome '{s}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub outcome: Outcome,
    pub collisions_per_km: f64,
    pub completed: bool,
    pub completion_pct: f64,
    /// Sim seconds, reported only for completed routes.
    pub duration: Option<f64>,
    /// Mean magnitude of the acceleration rate (m/s^3).
    pub smoothness: f64,
    /// Minimum longitudinal gap to a same-lane neighbor ahead, if one ever
    /// existed.
    pub min_gap: Option<f64>,
    pub distance_m: f64,
}

/// Same-lane gate used for the `min_gap` metric (meters of lateral offset).
pub const MIN_GAP_LATERAL_GATE: f64 = 2.0;

/// Computes metrics from a trace. The final record must carry the episode
/// outcome; distances below 1 m are floored to keep the per-km rate
/// defined.
pub fn compute_metrics(trace: &[TraceRecord], route_length: f64) -> Result<EpisodeMetrics> {
    if trace.is_empty() {
        return Err(SimError::TraceSchema("empty trace".into()));
    }
    let outcome_str = trace
        .last()
        .unwrap()
        .outcome
        .as_ref()
        .ok_or_else(|| SimError::TraceSchema("final record missing outcome".into()))?;
    let outcome = Outcome::parse(outcome_str)?;

    let mut distance = 0.0;
    let mut collisions = 0usize;
    let mut was_colliding = false;
    let mut jerk_sum = 0.0;
    let mut jerk_count = 0usize;
    let mut min_gap: Option<f64> = None;
    for (i, record) in trace.iter().enumerate() {
        if i > 0 {
            let prev = &trace[i - 1];
            let dx = record.ego.x - prev.ego.x;
            let dy = record.ego.y - prev.ego.y;
            distance += dx.hypot(dy);
            let dt = record.t - prev.t;
            if dt > 0.0 {
                let jx = (record.ego.ax - prev.ego.ax) / dt;
                let jy = (record.ego.ay - prev.ego.ay) / dt;
                jerk_sum += jx.hypot(jy);
                jerk_count += 1;
            }
        }
        if record.collision && !was_colliding {
            collisions += 1;
        }
        was_colliding = record.collision;
        for n in &record.neighbors {
            if (n.y - record.ego.lat).abs() <= MIN_GAP_LATERAL_GATE && n.s > record.ego.s {
                let gap = n.s - record.ego.s;
                min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
            }
        }
    }
    let start_s = trace[0].ego.s;
    let end_s = trace.last().unwrap().ego.s;
    let completion_pct = ((end_s - start_s) / route_length * 100.0).clamp(0.0, 100.0);
    let completed = outcome == Outcome::Completed;
    let duration = completed.then(|| trace.last().unwrap().t);
    let smoothness = if jerk_count > 0 {
        jerk_sum / jerk_count as f64
    } else {
        0.0
    };
    Ok(EpisodeMetrics {
        outcome,
        collisions_per_km: collisions as f64 / (distance.max(1.0) / 1000.0),
        completed,
        completion_pct,
        duration,
        smoothness,
        min_gap,
        distance_m: distance,
    })
}
