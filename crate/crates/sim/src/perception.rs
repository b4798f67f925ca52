//! Synthetic BEV perception: rasterizes scripted neighbor futures into
//! ego-centric occupancy grids and corrupts them with horizon-growing
//! noise.
//!
//! For each future frame `f` the ground-truth neighbor states are
//! propagated by their scripts, each footprint is translated by a per-axis
//! Gaussian with std `jitter * (1 + f)`, dropped entirely with probability
//! `dropout * f`, and the frame is dilated/eroded by the configured cell
//! counts. The lead track holds the noisy longitudinal centroid of the
//! same-lane leading neighbor, expanded to one entry per planner step (a
//! dropped frame holds the previous frame's value; frame 0 never drops).

use bevplan_core::grid::frame_of_step;
use bevplan_core::rng::rng_from_seed;
use bevplan_core::{Centerline, GridSequence, LeadVehicleTrack, OccupancyGrid};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::PerceptionEmulation;
use crate::scenario::Scenario;
use crate::world::World;
use crate::Result;

/// One planning cycle's perception output.
#[derive(Clone, Debug)]
pub struct Perception {
    pub grids: GridSequence<f64>,
    /// Longitudinal lead positions per planner step, when a same-lane
    /// leading neighbor is visible.
    pub lead: Option<LeadVehicleTrack<f64>>,
}

/// Ego-centric grid: the ego sits at the central cell, so cell (0, 0) is
/// anchored at minus half the window extent.
pub fn ego_grid(emu: &PerceptionEmulation) -> Result<OccupancyGrid<f64>> {
    let origin = (
        -emu.resolution * (emu.grid_width - 1) as f64 / 2.0,
        -emu.resolution * (emu.grid_height - 1) as f64 / 2.0,
    );
    Ok(OccupancyGrid::empty(
        emu.grid_height,
        emu.grid_width,
        emu.resolution,
        origin,
    )?)
}

/// Noise-free rasterization of the scripted neighbor futures; the
/// reference for error calibration and for the zero-noise identity.
pub fn ground_truth_prediction(
    world: &World,
    scenario: &Scenario,
    centerline: &Centerline<f64>,
    emu: &PerceptionEmulation,
    neighbor_radius: f64,
) -> Result<GridSequence<f64>> {
    let anchor = world.ego_world;
    let mut frames = Vec::with_capacity(emu.frames + 1);
    for f in 0..=emu.frames {
        let t = world.t + f as f64 * emu.frame_period;
        let mut grid = ego_grid(emu)?;
        for n in world.neighbor_states(scenario, centerline, t)? {
            grid.fill_disc(n.world.0 - anchor.0, n.world.1 - anchor.1, neighbor_radius);
        }
        frames.push(grid);
    }
    Ok(GridSequence::new(frames)?)
}

/// Predicted occupancy with injected noise, plus the lead-vehicle track.
///
/// Draw order is fixed (frames outer, neighbors in file order; two normals
/// then one uniform per footprint), so a given seed yields one noise
/// realization regardless of parameter values.
pub fn emulate_bev_prediction(
    world: &World,
    scenario: &Scenario,
    centerline: &Centerline<f64>,
    emu: &PerceptionEmulation,
    neighbor_radius: f64,
    planner_steps: usize,
    dt: f64,
    rng_seed: u64,
) -> Result<Perception> {
    let mut rng = rng_from_seed(rng_seed);
    let anchor = world.ego_world;
    let mut frames = Vec::with_capacity(emu.frames + 1);
    // noisy frenet longitudinal position per (frame, neighbor); None = dropped
    let mut noisy_s: Vec<Vec<Option<f64>>> = Vec::with_capacity(emu.frames + 1);
    let mut frame_zero_lat: Vec<Option<f64>> = vec![None; scenario.neighbors.len()];
    for f in 0..=emu.frames {
        let t = world.t + f as f64 * emu.frame_period;
        let mut grid = ego_grid(emu)?;
        let mut row = Vec::with_capacity(scenario.neighbors.len());
        for (i, n) in world
            .neighbor_states(scenario, centerline, t)?
            .into_iter()
            .enumerate()
        {
            let std = emu.jitter * (1.0 + f as f64);
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let dropped = u < emu.dropout * f as f64;
            if dropped {
                row.push(None);
                continue;
            }
            let pos = (n.world.0 + std * zx, n.world.1 + std * zy);
            grid.fill_disc(pos.0 - anchor.0, pos.1 - anchor.1, neighbor_radius);
            let (s_noisy, lat_noisy) = match centerline.to_frenet(pos.0, pos.1) {
                Ok(sd) => sd,
                Err(_) => {
                    row.push(None);
                    continue;
                }
            };
            row.push(Some(s_noisy));
            if f == 0 {
                frame_zero_lat[i] = Some(lat_noisy);
            }
        }
        grid.dilate(emu.dilate_cells);
        grid.erode(emu.erode_cells);
        frames.push(grid);
        noisy_s.push(row);
    }

    // lead selection from the frame-0 noisy state: nearest same-lane
    // neighbor ahead within the gating window
    let mut lead_idx: Option<usize> = None;
    for i in 0..scenario.neighbors.len() {
        let (Some(s0), Some(lat0)) = (noisy_s[0][i], frame_zero_lat[i]) else {
            continue;
        };
        let ahead = s0 - world.ego.s;
        if (lat0 - world.ego.lat).abs() <= emu.lead_gate_lateral
            && ahead > 0.0
            && ahead <= emu.lead_gate_ahead
        {
            let better = lead_idx
                .map(|j| s0 < noisy_s[0][j].unwrap())
                .unwrap_or(true);
            if better {
                lead_idx = Some(i);
            }
        }
    }
    let lead = lead_idx.map(|i| {
        // dropped frames are filled by constant-velocity extrapolation from
        // the last observed pair
        let mut per_frame = Vec::with_capacity(emu.frames + 1);
        let mut last = noisy_s[0][i].expect("frame 0 never drops");
        let mut velocity = 0.0;
        for (f, row) in noisy_s.iter().enumerate() {
            let s = match row[i] {
                Some(s) => {
                    if f > 0 {
                        velocity = s - last;
                    }
                    s
                }
                None => last + velocity,
            };
            per_frame.push(s);
            last = s;
        }
        let positions = (0..planner_steps)
            .map(|k| per_frame[frame_of_step(k, dt, emu.frame_period, per_frame.len())])
            .collect();
        LeadVehicleTrack { positions }
    });

    Ok(Perception {
        grids: GridSequence::new(frames)?,
        lead,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NeighborScript;

    fn setup() -> (Scenario, Centerline<f64>, World, PerceptionEmulation) {
        let mut scenario = Scenario::empty_road("t", 100.0);
        scenario.ego_speed = 5.0;
        scenario.neighbors = vec![NeighborScript::constant(12.0, 0.0, 4.0)];
        let centerline = scenario.build_centerline().unwrap();
        let world = World::init(&scenario, &centerline).unwrap();
        let emu = PerceptionEmulation {
            grid_height: 120,
            grid_width: 120,
            ..Default::default()
        };
        (scenario, centerline, world, emu)
    }

    #[test]
    fn zero_noise_matches_ground_truth_bit_exactly() {
        let (scenario, centerline, world, mut emu) = setup();
        emu.jitter = 0.0;
        emu.dropout = 0.0;
        let truth =
            ground_truth_prediction(&world, &scenario, &centerline, &emu, 1.0).unwrap();
        let pred = emulate_bev_prediction(
            &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, 99,
        )
        .unwrap();
        for (a, b) in truth.frames().iter().zip(pred.grids.frames()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn full_dropout_empties_future_frames_only() {
        let (scenario, centerline, world, mut emu) = setup();
        emu.jitter = 0.0;
        emu.dropout = 1.0;
        let pred = emulate_bev_prediction(
            &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, 5,
        )
        .unwrap();
        let occupied = |g: &OccupancyGrid<f64>| g.cells.iter().filter(|&&c| c).count();
        assert!(occupied(&pred.grids.frames()[0]) > 0);
        for f in 1..=emu.frames {
            assert_eq!(occupied(&pred.grids.frames()[f]), 0);
        }
    }

    #[test]
    fn jitter_statistics_match_injection() {
        let (scenario, centerline, world, mut emu) = setup();
        emu.dropout = 0.0;
        emu.jitter = 0.1;
        // recover the injected std from the noisy lead track at each frame
        let mut per_frame: Vec<Vec<f64>> = vec![Vec::new(); emu.frames + 1];
        for seed in 0..1000u64 {
            let pred = emulate_bev_prediction(
                &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, seed,
            )
            .unwrap();
            let lead = pred.lead.expect("neighbor ahead in lane");
            for f in 0..=emu.frames {
                // first planner step mapped to frame f
                let k = (0..30)
                    .find(|&k| frame_of_step(k, 0.1, emu.frame_period, emu.frames + 1) == f)
                    .unwrap();
                per_frame[f].push(lead.positions[k]);
            }
        }
        for (f, samples) in per_frame.iter().enumerate() {
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                / (samples.len() - 1) as f64;
            let expected = 0.1 * (1.0 + f as f64);
            assert!(
                (var.sqrt() - expected).abs() <= 0.15 * expected,
                "frame {f}: std {} vs {expected}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn lead_gating_requires_same_lane_ahead() {
        let (mut scenario, centerline, _, emu) = setup();
        // neighbor in the adjacent lane: no lead
        scenario.neighbors = vec![NeighborScript::constant(12.0, 3.5, 4.0)];
        let world = World::init(&scenario, &centerline).unwrap();
        let pred = emulate_bev_prediction(
            &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, 3,
        )
        .unwrap();
        assert!(pred.lead.is_none());
        // neighbor behind: no lead
        scenario.neighbors = vec![NeighborScript::constant(0.5, 0.0, 4.0)];
        let world = World::init(&scenario, &centerline).unwrap();
        let pred = emulate_bev_prediction(
            &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, 3,
        )
        .unwrap();
        assert!(pred.lead.is_none());
    }

    #[test]
    fn lead_track_has_one_entry_per_planner_step() {
        let (scenario, centerline, world, emu) = setup();
        let pred = emulate_bev_prediction(
            &world, &scenario, &centerline, &emu, 1.0, 30, 0.1, 11,
        )
        .unwrap();
        assert_eq!(pred.lead.unwrap().positions.len(), 30);
    }
}
