//! JSON-lines trace log: one record per simulation step.
//!
//! Replan steps additionally carry the predicted/ground-truth distance
//! pairs per future frame (the calibration input) and the chosen
//! trajectory's cost terms. The final record carries the episode outcome so
//! metrics can be recomputed from a persisted trace alone.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct EgoRecord {
    pub s: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NeighborRecord {
    pub s: f64,
    pub y: f64,
    pub x_world: f64,
    pub y_world: f64,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CostRecord {
    pub analytic: f64,
    pub collision: f64,
    pub residual: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub ego: EgoRecord,
    pub neighbors: Vec<NeighborRecord>,
    pub collision: bool,
    /// Predicted distance to the nearest occupied cell per future frame,
    /// queried along the chosen trajectory (replan steps only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_pred: Option<Vec<f64>>,
    /// Ground-truth counterpart of `d_pred`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_gt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost: Option<CostRecord>,
    /// Set on the final record.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outcome: Option<String>,
}

pub fn write_jsonl(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut file, record)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| {
            SimError::TraceSchema(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Extracts `(frame, d_pred, d_gt)` observations for error-model fitting.
///
/// Records carrying `d_pred` must carry a matching `d_gt`; a missing or
/// length-mismatched counterpart is a schema error.
pub fn calibration_observations(traces: &[Vec<TraceRecord>]) -> Result<Vec<(usize, f64, f64)>> {
    let mut observations = Vec::new();
    for trace in traces {
        for record in trace {
            let Some(d_pred) = &record.d_pred else {
                continue;
            };
            let d_gt = record.d_gt.as_ref().ok_or_else(|| {
                SimError::TraceSchema(format!(
                    "record at t={} has d_pred but no d_gt",
                    record.t
                ))
            })?;
            if d_gt.len() != d_pred.len() {
                return Err(SimError::TraceSchema(format!(
                    "record at t={}: d_pred has {} frames, d_gt has {}",
                    record.t,
                    d_pred.len(),
                    d_gt.len()
                )));
            }
            for (k, (&p, &g)) in d_pred.iter().zip(d_gt).enumerate() {
                observations.push((k, p, g));
            }
        }
    }
    Ok(observations)
}
