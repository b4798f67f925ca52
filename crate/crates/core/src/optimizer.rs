//! Sampling-based trajectory optimizer.
//!
//! Each iteration draws behavioral inputs from a Gaussian, fits seed
//! trajectories, projects every seed to the constraint set, keeps the
//! constraint-elite subset with the lowest residual norms, evaluates the
//! full augmented cost (analytic + collision surrogate + residual) on that
//! subset only, and reweights the sampling distribution from the elites
//! with exponentiated-cost weights. The returned trajectory is the elite
//! minimizer of the final iteration.

use nalgebra::{DVector, Matrix2, Vector2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::{eval_trajectory, BasisSet, TrajectoryCoeffs};
use crate::frenet::Centerline;
use crate::grid::{trajectory_distances, DistanceField};
use crate::mmd::{
    mmd_cost, sample_noisy_distances, worst_violation_samples, ErrorModel, KernelConfig,
    NoiseCorrelation,
};
use crate::projection::{
    build_problem, project_with_target, residual_norm, LeadVehicleTrack, PlannerLimits,
};
use crate::rng::derive_seed;
use crate::seed::{
    analytic_cost, sample_behaviors, BehavioralInput, CostWeights, FrenetState,
    SamplingDistribution, SeedSolver,
};
use crate::{real, CoreError, Real, Result};

/// Iteration and selection parameters.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerConfig<T: Real> {
    /// Behaviors drawn per iteration.
    pub samples: usize,
    /// Constraint-elite count ranked by residual norm.
    pub constraint_elites: usize,
    /// Elite count ranked by augmented cost.
    pub elites: usize,
    /// Outer iterations.
    pub iterations: usize,
    /// Temperature of the exponentiated-cost weights.
    pub beta: T,
    /// Distribution learning rate in (0, 1].
    pub eta: T,
    /// Diagonal floor added to the covariance after each update.
    pub covariance_floor: T,
    /// Return the best candidate over all iterations instead of the final
    /// iteration's elite minimizer.
    pub return_all_time_best: bool,
    /// Projection iteration budget and tolerance.
    pub projection_iters: usize,
    pub projection_tol: T,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            samples: 100,
            constraint_elites: 30,
            elites: 10,
            iterations: 8,
            beta: real(0.9),
            eta: real(0.6),
            covariance_floor: real(1e-4),
            return_all_time_best: false,
            projection_iters: 75,
            projection_tol: real(1e-3),
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.elites == 0
            || self.elites > self.constraint_elites
            || self.constraint_elites > self.samples
        {
            return Err(CoreError::InvalidArgument(
                "need elites <= constraint_elites <= samples, all positive".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(CoreError::InvalidArgument("iterations must be >= 1".into()));
        }
        if self.beta <= T::zero() {
            return Err(CoreError::InvalidArgument("beta must be positive".into()));
        }
        if self.eta <= T::zero() || self.eta > T::one() {
            return Err(CoreError::InvalidArgument("eta must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Cost breakdown of an evaluated candidate; `total` is always the sum of
/// the three components.
#[derive(Clone, Copy, Debug)]
pub struct CostTerms<T: Real> {
    pub analytic: T,
    pub collision: T,
    pub residual: T,
    pub total: T,
}

/// One sampled candidate after seeding and projection. Cost terms are
/// present only for constraint elites; the collision surrogate is evaluated
/// nowhere else.
#[derive(Clone, Debug)]
pub struct CandidateRecord<T: Real> {
    pub input: BehavioralInput<T>,
    pub seed_xi: DVector<T>,
    pub projected_xi: DVector<T>,
    pub residual: T,
    pub converged: bool,
    pub costs: Option<CostTerms<T>>,
}

/// Everything one planning cycle needs to score candidates.
#[derive(Clone)]
pub struct SceneContext<'a, T: Real> {
    pub basis: &'a BasisSet<T>,
    pub centerline: &'a Centerline<T>,
    /// Current ego state in the Frenet frame.
    pub ego: FrenetState<T>,
    /// World-frame anchor of the ego-centric grids (subtracted from world
    /// coordinates before distance queries).
    pub grid_anchor: (T, T),
    pub fields: &'a [DistanceField<T>],
    pub frame_period: T,
    pub error_model: &'a ErrorModel<T>,
    pub limits: PlannerLimits<T>,
    pub weights: CostWeights<T>,
    pub kernel: KernelConfig<T>,
    pub correlation: NoiseCorrelation,
    pub lead: Option<&'a LeadVehicleTrack<T>>,
    /// Mission reference the analytic cost scores against (cruise speed and
    /// lane-center offset). Scoring each candidate against its own sampled
    /// setpoint would zero the speed term for every candidate and leave the
    /// optimizer without a progress incentive.
    pub reference: BehavioralInput<T>,
}

/// Augmented cost of one projected candidate; `None` when the trajectory
/// leaves the mapped region or the cost is non-finite.
pub fn evaluate_costs<T: Real>(
    ctx: &SceneContext<'_, T>,
    xi: &DVector<T>,
    residual: T,
    mmd_seed: u64,
) -> Option<CostTerms<T>>
where
    StandardNormal: Distribution<T>,
{
    let coeffs = TrajectoryCoeffs::from_stacked(xi).ok()?;
    let states = eval_trajectory(ctx.basis, &coeffs).ok()?;
    let analytic = analytic_cost(&states, &ctx.reference, &ctx.weights);
    let cart = ctx.centerline.state_to_cartesian(&states).ok()?;
    let points: Vec<(T, T)> = (0..cart.len())
        .map(|k| (cart.x[k] - ctx.grid_anchor.0, cart.y[k] - ctx.grid_anchor.1))
        .collect();
    let profile =
        trajectory_distances(ctx.fields, ctx.frame_period, ctx.basis.dt, &points).ok()?;
    let noisy = sample_noisy_distances(
        &profile,
        ctx.error_model,
        ctx.kernel.sample_count,
        mmd_seed,
        ctx.correlation,
    )
    .ok()?;
    let samples = worst_violation_samples(&noisy, ctx.limits.r_safe);
    let collision = mmd_cost(&samples, &ctx.kernel).ok()?;
    let total = analytic + collision + residual;
    if !total.is_finite() {
        return None;
    }
    Some(CostTerms {
        analytic,
        collision,
        residual,
        total,
    })
}

/// Output of a single optimizer iteration.
#[derive(Clone, Debug)]
pub struct IterationOutput<T: Real> {
    pub new_dist: SamplingDistribution<T>,
    pub candidates: Vec<CandidateRecord<T>>,
    /// Index into `candidates` of the lowest-total elite.
    pub best_index: usize,
}

/// Sort key treating non-finite values as worst; ties break by index for
/// determinism.
fn rank_indices<T: Real>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let fa = values[a].is_finite();
        let fb = values[b].is_finite();
        match (fa, fb) {
            (true, true) => values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b)),
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => a.cmp(&b),
        }
    });
    idx
}

/// One draw-seed-project-select-update cycle (one outer iteration).
pub fn iterate<T: Real>(
    dist: &SamplingDistribution<T>,
    ctx: &SceneContext<'_, T>,
    cfg: &OptimizerConfig<T>,
    rng_seed: u64,
) -> Result<IterationOutput<T>>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    // Clamp sampled targets into the velocity and lane boxes: the boundary
    // system pins them as equalities, so out-of-box targets can never
    // project feasibly.
    let behaviors: Vec<BehavioralInput<T>> =
        sample_behaviors(dist, cfg.samples, derive_seed(rng_seed, 0))?
            .into_iter()
            .map(|p| BehavioralInput {
                lateral_offset_target: p
                    .lateral_offset_target
                    .clamp(ctx.limits.y_lb, ctx.limits.y_ub),
                velocity_setpoint: p
                    .velocity_setpoint
                    .clamp(ctx.limits.v_min, ctx.limits.v_max),
            })
            .collect();
    let solver = SeedSolver::new(ctx.basis)?;
    // template problem shares the assembled matrices and KKT factorization
    let (_, bc0) = solver.solve(&behaviors[0], &ctx.ego);
    let template = build_problem(ctx.basis, &bc0, &ctx.limits, ctx.lead)?;

    let mut candidates: Vec<CandidateRecord<T>> = behaviors
        .par_iter()
        .map(|input| {
            let (coeffs, bc) = solver.solve(input, &ctx.ego);
            let seed_xi = coeffs.stack();
            let outcome = project_with_target(
                &seed_xi,
                &template,
                &bc.b,
                cfg.projection_iters,
                cfg.projection_tol,
            )?;
            let residual = residual_norm(&outcome.xi, &template);
            Ok(CandidateRecord {
                input: *input,
                seed_xi,
                projected_xi: outcome.xi,
                residual,
                converged: outcome.converged,
                costs: None,
            })
        })
        .collect::<Result<_>>()?;

    // stage 1: constraint elites by residual norm
    let residuals: Vec<T> = candidates.iter().map(|c| c.residual).collect();
    let ranked = rank_indices(&residuals);
    let constraint_elite: Vec<usize> = ranked[..cfg.constraint_elites.min(ranked.len())].to_vec();

    // stage 2: augmented cost on the constraint elites only
    let costs: Vec<(usize, Option<CostTerms<T>>)> = constraint_elite
        .par_iter()
        .map(|&i| {
            let c = &candidates[i];
            let terms = evaluate_costs(
                ctx,
                &c.projected_xi,
                c.residual,
                derive_seed(rng_seed, 1 + i as u64),
            );
            (i, terms)
        })
        .collect();
    for (i, terms) in costs {
        candidates[i].costs = terms;
    }

    let mut scored: Vec<usize> = constraint_elite
        .iter()
        .copied()
        .filter(|&i| candidates[i].costs.is_some())
        .collect();
    if scored.len() < cfg.elites {
        return Err(CoreError::TooFewCandidates {
            found: scored.len(),
            needed: cfg.elites,
        });
    }
    scored.sort_by(|&a, &b| {
        let ta = candidates[a].costs.unwrap().total;
        let tb = candidates[b].costs.unwrap().total;
        ta.partial_cmp(&tb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let elite_indices = &scored[..cfg.elites];
    let elites: Vec<(BehavioralInput<T>, T)> = elite_indices
        .iter()
        .map(|&i| (candidates[i].input, candidates[i].costs.unwrap().total))
        .collect();
    let new_dist = update_distribution(dist, &elites, cfg.beta, cfg.eta, cfg.covariance_floor)?;
    Ok(IterationOutput {
        new_dist,
        candidates,
        best_index: elite_indices[0],
    })
}

/// Elite-weighted distribution update.
///
/// Weights are `exp(-total / beta)` (evaluated with the minimum total
/// subtracted, which cancels in the weight ratios); the mean and covariance
/// blend with learning rate `eta`, and the covariance is symmetrized and
/// floored by `floor * I` to keep sampling non-degenerate.
pub fn update_distribution<T: Real>(
    dist: &SamplingDistribution<T>,
    elites: &[(BehavioralInput<T>, T)],
    beta: T,
    eta: T,
    floor: T,
) -> Result<SamplingDistribution<T>> {
    if elites.is_empty() {
        return Err(CoreError::EmptyInput("elite set".into()));
    }
    let t_min = elites
        .iter()
        .map(|&(_, t)| t)
        .fold(elites[0].1, |a, b| a.min(b));
    let mut sum_w = T::zero();
    let mut sum_wp = Vector2::zeros();
    let mut weights = Vec::with_capacity(elites.len());
    for &(p, t) in elites {
        let w = (-(t - t_min) / beta).exp();
        weights.push(w);
        sum_w += w;
        sum_wp += Vector2::new(p.lateral_offset_target, p.velocity_setpoint) * w;
    }
    if !(sum_w > T::zero()) || !sum_w.is_finite() {
        return Err(CoreError::DegenerateWeights);
    }
    let one = T::one();
    let mu = dist.mu * (one - eta) + (sum_wp / sum_w) * eta;
    let mut spread = Matrix2::zeros();
    for (&(p, _), &w) in elites.iter().zip(&weights) {
        let diff = Vector2::new(p.lateral_offset_target, p.velocity_setpoint) - mu;
        spread += diff * diff.transpose() * w;
    }
    let mut sigma = dist.sigma * (one - eta) + spread * (eta / sum_w);
    sigma = (sigma + sigma.transpose()) * real::<T>(0.5);
    sigma[(0, 0)] += floor;
    sigma[(1, 1)] += floor;
    let eig = nalgebra::SymmetricEigen::new(sigma);
    if eig.eigenvalues.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(CoreError::NotPsd);
    }
    Ok(SamplingDistribution::new(mu, sigma))
}

/// Per-iteration optimizer statistics.
#[derive(Clone, Copy, Debug)]
pub struct IterationStats<T: Real> {
    pub best_total: T,
    pub mean_total: T,
    pub covariance_trace: T,
    pub residual_min: T,
    pub residual_median: T,
    pub residual_p90: T,
    pub residual_max: T,
}

#[derive(Clone, Debug)]
pub struct Diagnostics<T: Real> {
    pub iterations: Vec<IterationStats<T>>,
}

impl<T: Real> Default for Diagnostics<T> {
    fn default() -> Self {
        Self {
            iterations: Vec::new(),
        }
    }
}

/// Final optimizer output.
#[derive(Clone, Debug)]
pub struct OptimizeResult<T: Real> {
    /// Selected candidate (final-iteration elite minimizer by default, the
    /// all-time best when configured).
    pub best: CandidateRecord<T>,
    pub all_time_best: CandidateRecord<T>,
    pub final_distribution: SamplingDistribution<T>,
}

/// Runs the full optimizer: `iterations` rounds of [`iterate`], returning
/// the selected trajectory plus per-iteration diagnostics. Deterministic
/// for a fixed seed, configuration, and scene.
pub fn optimize<T: Real>(
    ctx: &SceneContext<'_, T>,
    initial: &SamplingDistribution<T>,
    cfg: &OptimizerConfig<T>,
    rng_seed: u64,
) -> Result<(OptimizeResult<T>, Diagnostics<T>)>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    let mut dist = initial.clone();
    let mut diagnostics = Diagnostics::default();
    let mut final_best: Option<CandidateRecord<T>> = None;
    let mut all_time: Option<CandidateRecord<T>> = None;
    for l in 0..cfg.iterations {
        let out = iterate(&dist, ctx, cfg, derive_seed(rng_seed, l as u64))?;
        let best = out.candidates[out.best_index].clone();
        let best_total = best.costs.unwrap().total;
        let evaluated: Vec<T> = out
            .candidates
            .iter()
            .filter_map(|c| c.costs.map(|t| t.total))
            .collect();
        let mean_total =
            evaluated.iter().fold(T::zero(), |a, &b| a + b) / real::<T>(evaluated.len() as f64);
        let mut residuals: Vec<T> = out.candidates.iter().map(|c| c.residual).collect();
        residuals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let q = |frac: f64| residuals[((residuals.len() - 1) as f64 * frac).round() as usize];
        diagnostics.iterations.push(IterationStats {
            best_total,
            mean_total,
            covariance_trace: out.new_dist.sigma.trace(),
            residual_min: residuals[0],
            residual_median: q(0.5),
            residual_p90: q(0.9),
            residual_max: *residuals.last().unwrap(),
        });
        if all_time
            .as_ref()
            .map_or(true, |b| best_total < b.costs.unwrap().total)
        {
            all_time = Some(best.clone());
        }
        final_best = Some(best);
        dist = out.new_dist;
    }
    let final_best = final_best.unwrap();
    let all_time_best = all_time.unwrap();
    let best = if cfg.return_all_time_best {
        all_time_best.clone()
    } else {
        final_best
    };
    Ok((
        OptimizeResult {
            best,
            all_time_best,
            final_distribution: dist,
        },
        diagnostics,
    ))
}
