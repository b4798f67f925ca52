//! Closed-loop episode execution: replan on a fixed period, execute the
//! chosen trajectory with perfect tracking, terminate on completion,
//! collision, stuck detection, timeout, or planner failure.

use bevplan_core::grid::build_distance_field;
use bevplan_core::rng::derive_seed;
use bevplan_core::{
    build_basis, eval_trajectory, optimize, BehavioralInput, ErrorModel, KernelConfig,
    NoiseCorrelation, OptimizerConfig, SamplingDistribution, SceneContext, TrajectoryCoeffs,
};
use nalgebra::{Matrix2, Vector2};

use crate::config::PlannerConfig;
use crate::metrics::{compute_metrics, EpisodeMetrics, Outcome};
use crate::perception::{emulate_bev_prediction, ground_truth_prediction};
use crate::scenario::Scenario;
use crate::trace::{CostRecord, EgoRecord, NeighborRecord, TraceRecord};
use crate::world::World;
use crate::{Result, SimError};

/// Planner variants mirroring the benchmark baselines: the full
/// uncertainty-aware planner, the deterministic-distance cost (no noise
/// model), and the single-pass sampler (no distribution adaptation).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlannerVariant {
    Uap,
    Deterministic,
    SinglePass,
}

impl PlannerVariant {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "uap" => PlannerVariant::Uap,
            "deterministic" => PlannerVariant::Deterministic,
            "single-pass" => PlannerVariant::SinglePass,
            _ => {
                return Err(SimError::Config(format!(
                    "unknown variant '{s}' (expected uap|deterministic|single-pass)"
                )))
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerVariant::Uap => "uap",
            PlannerVariant::Deterministic => "deterministic",
            PlannerVariant::SinglePass => "single-pass",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub trace: Vec<TraceRecord>,
    pub diagnostics: Vec<CycleDiagnostics>,
}

/// Optimizer statistics for one planning cycle.
#[derive(Clone, Debug)]
pub struct CycleDiagnostics {
    pub cycle: u64,
    pub t: f64,
    pub iterations: Vec<bevplan_core::optimizer::IterationStats<f64>>,
}

fn make_record(world: &World) -> TraceRecord {
    TraceRecord {
        t: world.t,
        ego: EgoRecord {
            s: world.ego.s,
            lat: world.ego.lat,
            x: world.ego_world.0,
            y: world.ego_world.1,
            vx: world.ego.vs,
            vy: world.ego.vlat,
            ax: world.ego.acc_s,
            ay: world.ego.acc_lat,
        },
        neighbors: world
            .neighbors
            .iter()
            .map(|n| NeighborRecord {
                s: n.s,
                y: n.y,
                x_world: n.world.0,
                y_world: n.world.1,
                speed: n.speed,
            })
            .collect(),
        collision: world.collision,
        d_pred: None,
        d_gt: None,
        cost: None,
        outcome: None,
    }
}

/// Runs one closed-loop episode. Fully deterministic for a fixed
/// `(scenario, config, variant, planner_seed)` tuple; the perception noise
/// stream is derived from the scenario seed and the planner seed, so
/// different variants face the same noise realization per cycle.
pub fn run_episode(
    scenario: &Scenario,
    cfg: &PlannerConfig,
    variant: PlannerVariant,
    planner_seed: u64,
) -> Result<EpisodeResult> {
    scenario.validate()?;
    let centerline = scenario.build_centerline()?;
    let basis = build_basis(cfg.basis_segments, cfg.basis_steps, cfg.dt)?;
    let mut world = World::init(scenario, &centerline)?;

    // variant-specific model, kernel, and iteration budget
    let error_model = match variant {
        PlannerVariant::Deterministic => ErrorModel::zero(cfg.emu.frames + 1),
        _ => cfg.resolve_error_model()?,
    };
    let kernel = match variant {
        PlannerVariant::Deterministic => KernelConfig::new(cfg.kernel.gamma, 1)?,
        _ => cfg.kernel,
    };
    let opt_cfg = OptimizerConfig {
        iterations: match variant {
            PlannerVariant::SinglePass => 1,
            _ => cfg.optimizer.iterations,
        },
        ..cfg.optimizer
    };
    let correlation = match variant {
        PlannerVariant::Deterministic => NoiseCorrelation::PerStep,
        _ => cfg.noise_correlation(),
    };

    let cruise = cfg.cruise_speed.unwrap_or(scenario.ego_speed);
    let cruise_reference = BehavioralInput {
        lateral_offset_target: 0.0,
        velocity_setpoint: cruise,
    };
    let initial_sigma = Matrix2::new(
        cfg.initial_sigma_lat * cfg.initial_sigma_lat,
        0.0,
        0.0,
        cfg.initial_sigma_vel * cfg.initial_sigma_vel,
    );
    let mut carried_mu = Vector2::new(0.0, cruise);

    let perception_salt = derive_seed(scenario.seed, planner_seed);
    let steps_per_plan = cfg.steps_per_plan();
    // The lead gate is ego-relative (same lane as the ego right now), so
    // the separation barrier holds while following and releases once a
    // lane change puts the ego outside the gate band.
    let lead_enabled = cfg.longitudinal_barrier;

    let mut records: Vec<TraceRecord> = Vec::new();
    let mut diagnostics: Vec<CycleDiagnostics> = Vec::new();
    let mut slow_time = 0.0;
    let mut cycle = 0u64;
    let mut step = 0usize;
    let mut outcome: Option<Outcome> = None;

    loop {
        let mut record = make_record(&world);
        // replan at the start of each planning period
        if outcome.is_none() && step % steps_per_plan == 0 {
            match replan(
                scenario,
                cfg,
                &centerline,
                &basis,
                &mut world,
                &error_model,
                kernel,
                &opt_cfg,
                correlation,
                lead_enabled,
                carried_mu,
                initial_sigma,
                cruise_reference,
                derive_seed(perception_salt, cycle),
                derive_seed(planner_seed, cycle),
            ) {
                Ok(info) => {
                    record.d_pred = Some(info.d_pred);
                    record.d_gt = Some(info.d_gt);
                    record.cost = Some(info.cost);
                    diagnostics.push(CycleDiagnostics {
                        cycle,
                        t: world.t,
                        iterations: info.iteration_stats,
                    });
                    if cfg.warm_start {
                        carried_mu = info.posterior_mu;
                    }
                }
                Err(err) => {
                    log::warn!("planner failed at t={:.2}: {err}", world.t);
                    outcome = Some(Outcome::PlannerFailure);
                }
            }
            cycle += 1;
        }
        // termination checks on the current state
        if outcome.is_none() {
            if world.collision {
                outcome = Some(Outcome::Collision);
            } else if world.ego.s - scenario.ego_s >= scenario.route_length {
                outcome = Some(Outcome::Completed);
            } else if slow_time > cfg.stuck_time {
                outcome = Some(Outcome::Stuck);
            } else if world.t >= scenario.timeout {
                outcome = Some(Outcome::Timeout);
            }
        }
        if let Some(out) = outcome {
            record.outcome = Some(out.as_str().into());
            records.push(record);
            break;
        }
        records.push(record);

        world.step(
            scenario,
            &centerline,
            cfg.dt,
            cfg.ego_radius,
            cfg.neighbor_radius,
        )?;
        if world.ego_speed() < cfg.stuck_speed {
            slow_time += cfg.dt;
        } else {
            slow_time = 0.0;
        }
        step += 1;
    }

    let metrics = compute_metrics(&records, scenario.route_length)?;
    Ok(EpisodeResult {
        metrics,
        trace: records,
        diagnostics,
    })
}

struct ReplanInfo {
    d_pred: Vec<f64>,
    d_gt: Vec<f64>,
    cost: CostRecord,
    posterior_mu: Vector2<f64>,
    iteration_stats: Vec<bevplan_core::optimizer::IterationStats<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn replan(
    scenario: &Scenario,
    cfg: &PlannerConfig,
    centerline: &bevplan_core::Centerline<f64>,
    basis: &bevplan_core::BasisSet<f64>,
    world: &mut World,
    error_model: &ErrorModel<f64>,
    kernel: KernelConfig<f64>,
    opt_cfg: &OptimizerConfig<f64>,
    correlation: NoiseCorrelation,
    lead_enabled: bool,
    mu: Vector2<f64>,
    sigma: Matrix2<f64>,
    cruise_reference: BehavioralInput<f64>,
    perception_seed: u64,
    planner_seed: u64,
) -> Result<ReplanInfo> {
    let perception = emulate_bev_prediction(
        world,
        scenario,
        centerline,
        &cfg.emu,
        cfg.neighbor_radius,
        basis.n,
        cfg.dt,
        perception_seed,
    )?;
    let gt_grids =
        ground_truth_prediction(world, scenario, centerline, &cfg.emu, cfg.neighbor_radius)?;
    let fields = perception.grids.distance_fields();
    let gt_fields: Vec<_> = gt_grids.frames().iter().map(build_distance_field).collect();

    let lead = if lead_enabled { perception.lead } else { None };
    let ctx = SceneContext {
        basis,
        centerline,
        ego: world.ego,
        grid_anchor: world.ego_world,
        fields: &fields,
        frame_period: cfg.emu.frame_period,
        error_model,
        limits: cfg.limits,
        weights: cfg.weights,
        kernel,
        correlation,
        lead: lead.as_ref(),
        reference: cruise_reference,
    };
    let dist = SamplingDistribution::new(mu, sigma);
    let (result, diag) = optimize(&ctx, &dist, opt_cfg, planner_seed)?;
    let best = result.best;
    let coeffs = TrajectoryCoeffs::from_stacked(&best.projected_xi)?;
    let states = eval_trajectory(basis, &coeffs)?;
    let cart = centerline.state_to_cartesian(&states)?;

    // distance pairs per future frame at the chosen trajectory
    let frames = cfg.emu.frames + 1;
    let anchor = world.ego_world;
    let mut d_pred = Vec::with_capacity(frames);
    let mut d_gt = Vec::with_capacity(frames);
    for f in 0..frames {
        let k = (((f as f64 * cfg.emu.frame_period) / cfg.dt).round() as usize).min(basis.n - 1);
        let point = (cart.x[k] - anchor.0, cart.y[k] - anchor.1);
        d_pred.push(fields[f].query(point.0, point.1).distance);
        d_gt.push(gt_fields[f].query(point.0, point.1).distance);
    }

    let terms = best.costs.expect("selected candidate always carries costs");
    world.set_plan(states);
    Ok(ReplanInfo {
        d_pred,
        d_gt,
        cost: CostRecord {
            analytic: terms.analytic,
            collision: terms.collision,
            residual: terms.residual,
            total: terms.total,
        },
        posterior_mu: result.final_distribution.mu,
        iteration_stats: diag.iterations,
    })
}
