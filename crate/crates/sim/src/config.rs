//! Planner and emulation configuration with `key=value` overrides.
//!
//! Precedence: command-line overrides > scenario `planner.*` lines >
//! built-in defaults. `effective_text` renders the full configuration for
//! provenance output.

use bevplan_core::{
    CostWeights, ErrorModel, KernelConfig, NoiseCorrelation, OptimizerConfig, PlannerLimits,
};

use crate::scenario::Scenario;
use crate::{Result, SimError};

/// Synthetic BEV prediction settings: grid geometry, horizon, and the
/// noise injected per future frame (jitter std grows as `jitter * (1+f)`,
/// dropout probability as `dropout * f`).
#[derive(Clone, Copy, Debug)]
pub struct PerceptionEmulation {
    /// Future frames beyond the current one (grids produced: frames + 1).
    pub frames: usize,
    pub frame_period: f64,
    pub jitter: f64,
    pub dropout: f64,
    pub dilate_cells: usize,
    pub erode_cells: usize,
    pub grid_height: usize,
    pub grid_width: usize,
    pub resolution: f64,
    /// Lead-vehicle gating: same-lane lateral tolerance and look-ahead.
    pub lead_gate_lateral: f64,
    pub lead_gate_ahead: f64,
}

impl Default for PerceptionEmulation {
    fn default() -> Self {
        Self {
            frames: 4,
            frame_period: 0.75,
            jitter: 0.1,
            dropout: 0.05,
            dilate_cells: 0,
            erode_cells: 0,
            grid_height: 200,
            grid_width: 200,
            resolution: 0.2,
            lead_gate_lateral: 2.0,
            lead_gate_ahead: 30.0,
        }
    }
}

/// Where the planner's distance-error model comes from.
#[derive(Clone, Debug, Default)]
pub enum ErrorModelSource {
    /// Horizon-growing synthetic stand-in.
    #[default]
    DefaultSynthetic,
    /// Gaussian table loaded from a calibration file.
    File(std::path::PathBuf),
    Explicit(ErrorModel<f64>),
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub limits: PlannerLimits<f64>,
    pub weights: CostWeights<f64>,
    pub kernel: KernelConfig<f64>,
    pub optimizer: OptimizerConfig<f64>,
    pub emu: PerceptionEmulation,
    pub error_model: ErrorModelSource,
    pub noise_correlated: bool,
    /// Seconds between replans.
    pub plan_period: f64,
    pub basis_segments: usize,
    pub basis_steps: usize,
    pub dt: f64,
    /// Keep the sampling mean across planning cycles (covariance is
    /// re-inflated to the initial diagonal each cycle).
    pub warm_start: bool,
    pub longitudinal_barrier: bool,
    /// Initial sampling distribution: mean lateral offset is 0 and the mean
    /// speed defaults to the scenario's ego speed.
    pub initial_sigma_lat: f64,
    pub initial_sigma_vel: f64,
    pub cruise_speed: Option<f64>,
    pub ego_radius: f64,
    pub neighbor_radius: f64,
    pub stuck_speed: f64,
    pub stuck_time: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            limits: PlannerLimits::default(),
            // Keeps the 1.0 : 0.5 : 0.2 term ratios, scaled so a full
            // 30-step analytic sum is commensurate with the collision
            // surrogate (bounded by 2) and the beta = 0.9 elite weighting.
            weights: CostWeights {
                smoothness: 0.01,
                velocity: 0.005,
                lateral: 0.002,
            },
            kernel: KernelConfig::default(),
            optimizer: OptimizerConfig::default(),
            emu: PerceptionEmulation::default(),
            error_model: ErrorModelSource::default(),
            noise_correlated: false,
            plan_period: 0.5,
            basis_segments: 3,
            basis_steps: 10,
            dt: 0.1,
            warm_start: true,
            longitudinal_barrier: true,
            initial_sigma_lat: 1.0,
            initial_sigma_vel: 2.0,
            cruise_speed: None,
            ego_radius: 1.0,
            neighbor_radius: 1.0,
            stuck_speed: 0.1,
            stuck_time: 10.0,
        }
    }
}

impl PlannerConfig {
    /// Resolves the error model for the emulation horizon.
    pub fn resolve_error_model(&self) -> Result<ErrorModel<f64>> {
        match &self.error_model {
            ErrorModelSource::DefaultSynthetic => {
                Ok(ErrorModel::default_synthetic(self.emu.frames + 1))
            }
            ErrorModelSource::File(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(ErrorModel::from_text(&text)?)
            }
            ErrorModelSource::Explicit(model) => Ok(model.clone()),
        }
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: String| SimError::Config(format!("{key}={value}: {e}"));
        let f = || value.parse::<f64>().map_err(|e| bad(e.to_string()));
        let u = || value.parse::<usize>().map_err(|e| bad(e.to_string()));
        let b = || value.parse::<bool>().map_err(|e| bad(e.to_string()));
        match key {
            "limits.v_min" => self.limits.v_min = f()?,
            "limits.v_max" => self.limits.v_max = f()?,
            "limits.a_max" => self.limits.a_max = f()?,
            "limits.y_lb" => self.limits.y_lb = f()?,
            "limits.y_ub" => self.limits.y_ub = f()?,
            "limits.gamma_lane" => self.limits.gamma_lane = f()?,
            "limits.gamma_long" => self.limits.gamma_long = f()?,
            "limits.s_min" => self.limits.s_min = f()?,
            "limits.r_safe" => self.limits.r_safe = f()?,
            "limits.rho" => self.limits.rho = f()?,
            "weights.smoothness" => self.weights.smoothness = f()?,
            "weights.velocity" => self.weights.velocity = f()?,
            "weights.lateral" => self.weights.lateral = f()?,
            "kernel.gamma" => self.kernel.gamma = f()?,
            "kernel.samples" => self.kernel.sample_count = u()?,
            "optimizer.samples" => self.optimizer.samples = u()?,
            "optimizer.constraint_elites" => self.optimizer.constraint_elites = u()?,
            "optimizer.elites" => self.optimizer.elites = u()?,
            "optimizer.iterations" => self.optimizer.iterations = u()?,
            "optimizer.beta" => self.optimizer.beta = f()?,
            "optimizer.eta" => self.optimizer.eta = f()?,
            "optimizer.covariance_floor" => self.optimizer.covariance_floor = f()?,
            "optimizer.all_time_best" => self.optimizer.return_all_time_best = b()?,
            "optimizer.projection_iters" => self.optimizer.projection_iters = u()?,
            "optimizer.projection_tol" => self.optimizer.projection_tol = f()?,
            "emu.frames" => self.emu.frames = u()?,
            "emu.frame_period" => self.emu.frame_period = f()?,
            "emu.jitter" => self.emu.jitter = f()?,
            "emu.dropout" => self.emu.dropout = f()?,
            "emu.dilate" => self.emu.dilate_cells = u()?,
            "emu.erode" => self.emu.erode_cells = u()?,
            "emu.grid_height" => self.emu.grid_height = u()?,
            "emu.grid_width" => self.emu.grid_width = u()?,
            "emu.resolution" => self.emu.resolution = f()?,
            "emu.lead_gate_lateral" => self.emu.lead_gate_lateral = f()?,
            "emu.lead_gate_ahead" => self.emu.lead_gate_ahead = f()?,
            "error_model.file" => {
                self.error_model = ErrorModelSource::File(value.into());
            }
            "noise.correlated" => self.noise_correlated = b()?,
            "plan.period" => self.plan_period = f()?,
            "plan.warm_start" => self.warm_start = b()?,
            "plan.initial_sigma_lat" => self.initial_sigma_lat = f()?,
            "plan.initial_sigma_vel" => self.initial_sigma_vel = f()?,
            "plan.cruise_speed" => self.cruise_speed = Some(f()?),
            "basis.segments" => self.basis_segments = u()?,
            "basis.steps" => self.basis_steps = u()?,
            "basis.dt" => self.dt = f()?,
            "barrier.longitudinal" => self.longitudinal_barrier = b()?,
            "sim.ego_radius" => self.ego_radius = f()?,
            "sim.neighbor_radius" => self.neighbor_radius = f()?,
            "sim.stuck_speed" => self.stuck_speed = f()?,
            "sim.stuck_time" => self.stuck_time = f()?,
            _ => return Err(SimError::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Default config with the scenario's lane bounds and `planner.*`
    /// overrides folded in.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.limits.y_lb = scenario.y_lb;
        cfg.limits.y_ub = scenario.y_ub;
        for (key, value) in &scenario.overrides {
            cfg.apply_override(key, value)?;
        }
        Ok(cfg)
    }

    pub fn noise_correlation(&self) -> NoiseCorrelation {
        if self.noise_correlated {
            NoiseCorrelation::PerSample
        } else {
            NoiseCorrelation::PerStep
        }
    }

    /// Steps executed between replans.
    pub fn steps_per_plan(&self) -> usize {
        ((self.plan_period / self.dt).round() as usize).max(1)
    }

    /// Renders every effective setting, one `key = value` per line.
    pub fn effective_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("limits.v_min", self.limits.v_min.to_string());
        kv("limits.v_max", self.limits.v_max.to_string());
        kv("limits.a_max", self.limits.a_max.to_string());
        kv("limits.y_lb", self.limits.y_lb.to_string());
        kv("limits.y_ub", self.limits.y_ub.to_string());
        kv("limits.gamma_lane", self.limits.gamma_lane.to_string());
        kv("limits.gamma_long", self.limits.gamma_long.to_string());
        kv("limits.s_min", self.limits.s_min.to_string());
        kv("limits.r_safe", self.limits.r_safe.to_string());
        kv("limits.rho", self.limits.rho.to_string());
        kv("weights.smoothness", self.weights.smoothness.to_string());
        kv("weights.velocity", self.weights.velocity.to_string());
        kv("weights.lateral", self.weights.lateral.to_string());
        kv("kernel.gamma", self.kernel.gamma.to_string());
        kv("kernel.samples", self.kernel.sample_count.to_string());
        kv("optimizer.samples", self.optimizer.samples.to_string());
        kv(
            "optimizer.constraint_elites",
            self.optimizer.constraint_elites.to_string(),
        );
        kv("optimizer.elites", self.optimizer.elites.to_string());
        kv("optimizer.iterations", self.optimizer.iterations.to_string());
        kv("optimizer.beta", self.optimizer.beta.to_string());
        kv("optimizer.eta", self.optimizer.eta.to_string());
        kv(
            "optimizer.covariance_floor",
            self.optimizer.covariance_floor.to_string(),
        );
        kv(
            "optimizer.all_time_best",
            self.optimizer.return_all_time_best.to_string(),
        );
        kv(
            "optimizer.projection_iters",
            self.optimizer.projection_iters.to_string(),
        );
        kv(
            "optimizer.projection_tol",
            self.optimizer.projection_tol.to_string(),
        );
        kv("emu.frames", self.emu.frames.to_string());
        kv("emu.frame_period", self.emu.frame_period.to_string());
        kv("emu.jitter", self.emu.jitter.to_string());
        kv("emu.dropout", self.emu.dropout.to_string());
        kv("emu.dilate", self.emu.dilate_cells.to_string());
        kv("emu.erode", self.emu.erode_cells.to_string());
        kv("emu.grid_height", self.emu.grid_height.to_string());
        kv("emu.grid_width", self.emu.grid_width.to_string());
        kv("emu.resolution", self.emu.resolution.to_string());
        kv(
            "emu.lead_gate_lateral",
            self.emu.lead_gate_lateral.to_string(),
        );
        kv("emu.lead_gate_ahead", self.emu.lead_gate_ahead.to_string());
        kv(
            "error_model",
            match &self.error_model {
                ErrorModelSource::DefaultSynthetic => "default-synthetic".into(),
                ErrorModelSource::File(p) => format!("file:{}", p.display()),
                ErrorModelSource::Explicit(_) => "explicit".into(),
            },
        );
        kv("noise.correlated", self.noise_correlated.to_string());
        kv("plan.period", self.plan_period.to_string());
        kv("plan.warm_start", self.warm_start.to_string());
        kv(
            "plan.initial_sigma_lat",
            self.initial_sigma_lat.to_string(),
        );
        kv(
            "plan.initial_sigma_vel",
            self.initial_sigma_vel.to_string(),
        );
        kv(
            "plan.cruise_speed",
            self.cruise_speed
                .map(|v| v.to_string())
                .unwrap_or_else(|| "scenario".into()),
        );
        kv("basis.segments", self.basis_segments.to_string());
        kv("basis.steps", self.basis_steps.to_string());
        kv("basis.dt", self.dt.to_string());
        kv(
            "barrier.longitudinal",
            self.longitudinal_barrier.to_string(),
        );
        kv("sim.ego_radius", self.ego_radius.to_string());
        kv("sim.neighbor_radius", self.neighbor_radius.to_string());
        kv("sim.stuck_speed", self.stuck_speed.to_string());
        kv("sim.stuck_time", self.stuck_time.to_string());
        s
    }
}
