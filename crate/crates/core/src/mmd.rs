//! Distance-error model, noisy distance samples, and the MMD collision
//! surrogate.
//!
//! The error in closest-obstacle distance queries grows with the prediction
//! step; it is modeled per future frame either as a Gaussian (mean, std) or
//! as an empirical residual bank. Noisy copies of a trajectory's distance
//! profile produce sample collision costs `prod_k max(r_safe - d_i[k], 0)`,
//! whose RKHS embedding is compared against the embedding of a Dirac at
//! zero. The squared RKHS distance (MMD, computed with the kernel trick) is
//! the collision surrogate: zero iff every sample cost is zero.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::DistanceProfile;
use crate::rng::rng_from_seed;
use crate::{real, CoreError, Real, Result};

/// Per-future-frame distance-error distributions.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorModel<T: Real> {
    /// Entry `k` holds `(mean, std)` of the error at future frame `k`.
    Gaussian(Vec<(T, T)>),
    /// Entry `k` holds observed residuals for future frame `k`.
    Empirical(Vec<Vec<T>>),
}

/// How error samples correlate across trajectory steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseCorrelation {
    /// Fresh draw per (sample, step).
    #[default]
    PerStep,
    /// One draw per sample, shared by every step (one error profile per
    /// noisy world replica).
    PerSample,
}

impl<T: Real> ErrorModel<T> {
    /// Model with zero error everywhere (deterministic distances).
    pub fn zero(frames: usize) -> Self {
        ErrorModel::Gaussian(vec![(T::zero(), T::zero()); frames])
    }

    /// Synthetic stand-in with horizon-growing error:
    /// `mean_k = 0.1 k`, `std_k = 0.15 (1 + 0.5 k)` meters.
    pub fn default_synthetic(frames: usize) -> Self {
        ErrorModel::Gaussian(
            (0..frames)
                .map(|k| {
                    let kf = k as f64;
                    (real::<T>(0.1 * kf), real::<T>(0.15 * (1.0 + 0.5 * kf)))
                })
                .collect(),
        )
    }

    pub fn frames(&self) -> usize {
        match self {
            ErrorModel::Gaussian(v) => v.len(),
            ErrorModel::Empirical(v) => v.len(),
        }
    }

    /// Gaussian parameters per frame, if in Gaussian mode.
    pub fn gaussian_entries(&self) -> Option<&[(T, T)]> {
        match self {
            ErrorModel::Gaussian(v) => Some(v),
            ErrorModel::Empirical(_) => None,
        }
    }

    /// Serializes a Gaussian model as one `k mu sigma` line per frame.
    /// Empirical models serialize through [`ErrorModel::to_residual_text`].
    pub fn to_text(&self) -> Result<String> {
        let ErrorModel::Gaussian(entries) = self else {
            return Err(CoreError::InvalidArgument(
                "empirical models serialize as a residual file".into(),
            ));
        };
        let mut out = String::from("# k mu sigma\n");
        for (k, (mu, sigma)) in entries.iter().enumerate() {
            out.push_str(&format!(
                "{k} {} {}\n",
                mu.to_f64().unwrap(),
                sigma.to_f64().unwrap()
            ));
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let entries = parse_step_lines(text)?;
        let gaussian = entries
            .into_iter()
            .map(|nums| {
                if nums.len() != 2 {
                    return Err(CoreError::Parse(
                        "gaussian model lines need exactly `k mu sigma`".into(),
                    ));
                }
                Ok((real(nums[0]), real(nums[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ErrorModel::Gaussian(gaussian))
    }

    /// Companion residual file for empirical mode: one `k r1 r2 ...` line
    /// per frame.
    pub fn to_residual_text(&self) -> Result<String> {
        let ErrorModel::Empirical(banks) = self else {
            return Err(CoreError::InvalidArgument(
                "gaussian models serialize as `k mu sigma` lines".into(),
            ));
        };
        let mut out = String::from("# k residuals...\n");
        for (k, bank) in banks.iter().enumerate() {
            out.push_str(&format!("{k}"));
            for r in bank {
                out.push_str(&format!(" {}", r.to_f64().unwrap()));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_residual_text(text: &str) -> Result<Self> {
        let entries = parse_step_lines(text)?;
        for (k, bank) in entries.iter().enumerate() {
            if bank.is_empty() {
                return Err(CoreError::Parse(format!("step {k} has no residuals")));
            }
        }
        Ok(ErrorModel::Empirical(
            entries
                .into_iter()
                .map(|nums| nums.into_iter().map(real).collect())
                .collect(),
        ))
    }
}

/// Parses `k v1 v2 ...` lines into per-step value lists, requiring steps
/// 0..K to each appear exactly once.
fn parse_step_lines(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let k: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|e| CoreError::Parse(format!("line {}: {e}", ln + 1)))?;
        let nums = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| CoreError::Parse(format!("line {}: {e}", ln + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((k, nums));
    }
    if rows.is_empty() {
        return Err(CoreError::Parse("empty error model".into()));
    }
    rows.sort_by_key(|&(k, _)| k);
    for (i, &(k, _)) in rows.iter().enumerate() {
        if k != i {
            return Err(CoreError::Parse(format!("missing or duplicate step {i}")));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

/// Fits an error model from `(frame, d_pred, d_gt)` observations.
///
/// Residuals are `d_gt - d_pred`. Gaussian mode stores the sample mean and
/// (n-1 normalized) standard deviation per frame; empirical mode stores the
/// residuals verbatim. Every frame from 0 to the maximum observed needs at
/// least 2 observations.
pub fn fit_error_model<T: Real>(
    observations: &[(usize, T, T)],
    empirical: bool,
) -> Result<ErrorModel<T>> {
    if observations.is_empty() {
        return Err(CoreError::EmptyInput("error observations".into()));
    }
    let max_k = observations.iter().map(|&(k, _, _)| k).max().unwrap();
    let mut banks: Vec<Vec<T>> = vec![Vec::new(); max_k + 1];
    for &(k, d_pred, d_gt) in observations {
        banks[k].push(d_gt - d_pred);
    }
    for (k, bank) in banks.iter().enumerate() {
        if bank.len() < 2 {
            return Err(CoreError::TooFewObservations {
                step: k,
                count: bank.len(),
            });
        }
    }
    if empirical {
        return Ok(ErrorModel::Empirical(banks));
    }
    let entries = banks
        .iter()
        .map(|bank| {
            let n = real::<T>(bank.len() as f64);
            let mean = bank.iter().fold(T::zero(), |acc, &r| acc + r) / n;
            let ss = bank
                .iter()
                .fold(T::zero(), |acc, &r| acc + (r - mean) * (r - mean));
            let sigma = (ss / (n - T::one())).sqrt();
            (mean, sigma)
        })
        .collect();
    Ok(ErrorModel::Gaussian(entries))
}

/// Draws an `m x n` matrix of noisy distances `d_i[k] = d[k] + eps_{k,i}`.
///
/// The error at step `k` comes from the model entry for the frame the step
/// was mapped to. Deterministic for a fixed seed.
pub fn sample_noisy_distances<T: Real>(
    profile: &DistanceProfile<T>,
    model: &ErrorModel<T>,
    m: usize,
    rng_seed: u64,
    correlation: NoiseCorrelation,
) -> Result<DMatrix<T>>
where
    StandardNormal: Distribution<T>,
{
    if m == 0 {
        return Err(CoreError::InvalidArgument("need at least one sample".into()));
    }
    let n = profile.distances.len();
    for &f in &profile.frame_index {
        if f >= model.frames() {
            return Err(CoreError::ModelMismatch(f));
        }
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut out = DMatrix::zeros(m, n);
    for i in 0..m {
        // PerSample mode: one standard draw reused across the row
        let shared: T = rng.sample(StandardNormal);
        let shared_u: f64 = rng.random::<f64>();
        for k in 0..n {
            let f = profile.frame_index[k];
            let eps = match model {
                ErrorModel::Gaussian(entries) => {
                    let (mu, sigma) = entries[f];
                    let z: T = match correlation {
                        NoiseCorrelation::PerStep => rng.sample(StandardNormal),
                        NoiseCorrelation::PerSample => shared,
                    };
                    mu + sigma * z
                }
                ErrorModel::Empirical(banks) => {
                    let bank = &banks[f];
                    let u = match correlation {
                        NoiseCorrelation::PerStep => rng.random::<f64>(),
                        NoiseCorrelation::PerSample => shared_u,
                    };
                    bank[((u * bank.len() as f64) as usize).min(bank.len() - 1)]
                }
            };
            out[(i, k)] = profile.distances[k] + eps;
        }
    }
    Ok(out)
}

/// RBF kernel configuration for the MMD cost.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig<T: Real> {
    /// RBF bandwidth parameter (1/m^2).
    pub gamma: T,
    /// Number of noisy distance samples per trajectory.
    pub sample_count: usize,
}

impl<T: Real> KernelConfig<T> {
    pub fn new(gamma: T, sample_count: usize) -> Result<Self> {
        if gamma <= T::zero() {
            return Err(CoreError::InvalidArgument("gamma must be positive".into()));
        }
        if sample_count == 0 {
            return Err(CoreError::InvalidArgument(
                "sample_count must be >= 1".into(),
            ));
        }
        Ok(Self {
            gamma,
            sample_count,
        })
    }
}

impl<T: Real> Default for KernelConfig<T> {
    fn default() -> Self {
        Self {
            gamma: real(0.1),
            sample_count: 100,
        }
    }
}

/// Non-negative per-sample collision costs.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSamples<T: Real>(pub Vec<T>);

/// Sample collision costs `f_i = prod_k max(r_safe - d_i[k], 0)`.
pub fn collision_cost_samples<T: Real>(noisy: &DMatrix<T>, r_safe: T) -> CostSamples<T> {
    let mut out = Vec::with_capacity(noisy.nrows());
    for i in 0..noisy.nrows() {
        let mut product = T::one();
        for k in 0..noisy.ncols() {
            let violation = (r_safe - noisy[(i, k)]).max(T::zero());
            product *= violation;
            if product == T::zero() {
                break;
            }
        }
        out.push(product);
    }
    CostSamples(out)
}

/// Worst-step clearance violation per sample:
/// `f_i = max_k max(r_safe - d_i[k], 0)`.
///
/// This is the trajectory-level risk magnitude the closed-loop planner
/// embeds: zero iff the sampled world keeps every step clear, and it keeps
/// an O(meters) scale over any horizon length. The per-step product form
/// underflows to zero over realistic horizons (thirty factors below one)
/// whenever a single step is clear, which would leave the collision
/// surrogate silent in every near-miss.
pub fn worst_violation_samples<T: Real>(noisy: &DMatrix<T>, r_safe: T) -> CostSamples<T> {
    let mut out = Vec::with_capacity(noisy.nrows());
    for i in 0..noisy.nrows() {
        let mut worst = T::zero();
        for k in 0..noisy.ncols() {
            worst = worst.max(r_safe - noisy[(i, k)]);
        }
        out.push(worst.max(T::zero()));
    }
    CostSamples(out)
}

#[inline]
fn rbf<T: Real>(a: T, b: T, gamma: T) -> T {
    let d = a - b;
    if d == T::zero() {
        T::one()
    } else {
        (-gamma * d * d).exp()
    }
}

/// Squared RKHS distance between the sample-cost embedding and the
/// embedding of a Dirac at zero, via the kernel trick:
/// `(1/m^2) sum_ij k(f_i, f_j) - (2/m) sum_i k(f_i, 0) + k(0, 0)`.
/// Tiny negative rounding results are clamped to zero.
pub fn mmd_cost<T: Real>(samples: &CostSamples<T>, kernel: &KernelConfig<T>) -> Result<T> {
    let m = samples.0.len();
    if m == 0 {
        return Err(CoreError::EmptyInput("cost samples".into()));
    }
    let mf = real::<T>(m as f64);
    let gamma = kernel.gamma;
    let mut pair_sum = T::zero();
    for i in 0..m {
        pair_sum += T::one(); // k(f_i, f_i)
        for j in i + 1..m {
            pair_sum += real::<T>(2.0) * rbf(samples.0[i], samples.0[j], gamma);
        }
    }
    let mut zero_sum = T::zero();
    for i in 0..m {
        zero_sum += rbf(samples.0[i], T::zero(), gamma);
    }
    let value =
        pair_sum / (mf * mf) - real::<T>(2.0) * zero_sum / mf + T::one();
    Ok(value.max(T::zero()))
}
