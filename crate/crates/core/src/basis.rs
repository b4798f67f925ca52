//! Piecewise-cubic trajectory basis.
//!
//! A trajectory axis is a chain of cubic segments, each sampled at
//! `steps_per_segment` points with spacing `dt` and parametrized by local
//! time `tau` with basis `[1, tau, tau^2, tau^3]`. Row `k` of the position
//! basis evaluates the active segment at the global step time `k * dt`;
//! velocity and acceleration bases hold the analytic derivatives. Continuity
//! across segment joins is not baked into the basis; it is expressed as
//! linear rows (position/velocity/acceleration match at the join) that
//! callers append to their equality systems.

use nalgebra::{DMatrix, DVector};

use crate::{real, CoreError, Real, Result};

/// Sampled piecewise-cubic basis matrices for one axis.
#[derive(Clone, Debug)]
pub struct BasisSet<T: Real> {
    pub segment_count: usize,
    pub steps_per_segment: usize,
    /// Seconds between consecutive sampled steps.
    pub dt: T,
    /// Total sampled steps `segment_count * steps_per_segment`.
    pub n: usize,
    /// n x 4S position basis, block diagonal per segment.
    pub position: DMatrix<T>,
    /// n x 4S velocity basis (first time derivative of `position` rows).
    pub velocity: DMatrix<T>,
    /// n x 4S acceleration basis (second time derivative).
    pub acceleration: DMatrix<T>,
    /// 3(S-1) x 4S rows enforcing C0/C1/C2 joins; `continuity * c = 0` for
    /// any coefficient vector that is C2-continuous across joins.
    pub continuity: DMatrix<T>,
}

/// Cubic polynomial row `[1, tau, tau^2, tau^3]` and its derivatives.
fn poly_rows<T: Real>(tau: T) -> ([T; 4], [T; 4], [T; 4]) {
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    let six = real::<T>(6.0);
    let p = [T::one(), tau, tau * tau, tau * tau * tau];
    let v = [T::zero(), T::one(), two * tau, three * tau * tau];
    let a = [T::zero(), T::zero(), two, six * tau];
    (p, v, a)
}

/// Builds the basis matrices for the given segmentation.
pub fn build_basis<T: Real>(
    segment_count: usize,
    steps_per_segment: usize,
    dt: T,
) -> Result<BasisSet<T>> {
    if segment_count == 0 || steps_per_segment == 0 {
        return Err(CoreError::InvalidArgument(
            "segment_count and steps_per_segment must be positive".into(),
        ));
    }
    if dt <= T::zero() {
        return Err(CoreError::InvalidArgument("dt must be positive".into()));
    }
    let n = segment_count * steps_per_segment;
    let dim = 4 * segment_count;
    let mut position = DMatrix::zeros(n, dim);
    let mut velocity = DMatrix::zeros(n, dim);
    let mut acceleration = DMatrix::zeros(n, dim);
    for k in 0..n {
        let seg = k / steps_per_segment;
        let local = k % steps_per_segment;
        let tau = real::<T>(local as f64) * dt;
        let (p, v, a) = poly_rows(tau);
        for j in 0..4 {
            position[(k, 4 * seg + j)] = p[j];
            velocity[(k, 4 * seg + j)] = v[j];
            acceleration[(k, 4 * seg + j)] = a[j];
        }
    }
    // Joins sit at the segment end, one dt past the last sampled step.
    let t_end = real::<T>(steps_per_segment as f64) * dt;
    let joins = segment_count - 1;
    let mut continuity = DMatrix::zeros(3 * joins, dim);
    let (p_end, v_end, a_end) = poly_rows(t_end);
    let (p_0, v_0, a_0) = poly_rows(T::zero());
    for s in 0..joins {
        for j in 0..4 {
            continuity[(3 * s, 4 * s + j)] = p_end[j];
            continuity[(3 * s, 4 * (s + 1) + j)] = -p_0[j];
            continuity[(3 * s + 1, 4 * s + j)] = v_end[j];
            continuity[(3 * s + 1, 4 * (s + 1) + j)] = -v_0[j];
            continuity[(3 * s + 2, 4 * s + j)] = a_end[j];
            continuity[(3 * s + 2, 4 * (s + 1) + j)] = -a_0[j];
        }
    }
    Ok(BasisSet {
        segment_count,
        steps_per_segment,
        dt,
        n,
        position,
        velocity,
        acceleration,
        continuity,
    })
}

impl<T: Real> BasisSet<T> {
    /// Coefficient count per axis (`4 * segment_count`).
    pub fn coeff_dim(&self) -> usize {
        4 * self.segment_count
    }

    /// Time of sampled step `k`.
    pub fn step_time(&self, k: usize) -> T {
        real::<T>(k as f64) * self.dt
    }
}

/// Polynomial coefficients for both axes of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryCoeffs<T: Real> {
    pub x: DVector<T>,
    pub y: DVector<T>,
}

impl<T: Real> TrajectoryCoeffs<T> {
    pub fn new(x: DVector<T>, y: DVector<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "cx has {} coefficients, cy has {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    /// Stacks `(cx, cy)` into a single decision vector.
    pub fn stack(&self) -> DVector<T> {
        let d = self.x.len();
        let mut xi = DVector::zeros(2 * d);
        xi.rows_mut(0, d).copy_from(&self.x);
        xi.rows_mut(d, d).copy_from(&self.y);
        xi
    }

    /// Splits a stacked decision vector back into per-axis coefficients.
    pub fn from_stacked(xi: &DVector<T>) -> Result<Self> {
        if xi.len() % 2 != 0 {
            return Err(CoreError::DimensionMismatch(
                "stacked vector must have even length".into(),
            ));
        }
        let d = xi.len() / 2;
        Ok(Self {
            x: xi.rows(0, d).into_owned(),
            y: xi.rows(d, d).into_owned(),
        })
    }
}

/// Per-step positions and derivatives along both axes.
#[derive(Clone, Debug)]
pub struct StateSequence<T: Real> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub vx: DVector<T>,
    pub vy: DVector<T>,
    pub ax: DVector<T>,
    pub ay: DVector<T>,
}

impl<T: Real> StateSequence<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.len() == 0
    }

    /// Speed magnitude at step `k`.
    pub fn speed(&self, k: usize) -> T {
        self.vx[k].hypot(self.vy[k])
    }

    /// Acceleration magnitude at step `k`.
    pub fn accel(&self, k: usize) -> T {
        self.ax[k].hypot(self.ay[k])
    }
}

/// Evaluates a coefficient pair against the basis.
pub fn eval_trajectory<T: Real>(
    basis: &BasisSet<T>,
    coeffs: &TrajectoryCoeffs<T>,
) -> Result<StateSequence<T>> {
    if coeffs.x.len() != basis.coeff_dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "coefficients have length {}, basis expects {}",
            coeffs.x.len(),
            basis.coeff_dim()
        )));
    }
    Ok(StateSequence {
        x: &basis.position * &coeffs.x,
        y: &basis.position * &coeffs.y,
        vx: &basis.velocity * &coeffs.x,
        vy: &basis.velocity * &coeffs.y,
        ax: &basis.acceleration * &coeffs.x,
        ay: &basis.acceleration * &coeffs.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn vec64(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(build_basis::<f64>(0, 10, 0.1).is_err());
        assert!(build_basis::<f64>(1, 0, 0.1).is_err());
        assert!(build_basis::<f64>(1, 10, 0.0).is_err());
        assert!(build_basis::<f64>(1, 10, -0.1).is_err());
    }

    #[test]
    fn constant_coefficients_give_constant_trajectory() {
        let basis = build_basis::<f64>(1, 10, 0.1).unwrap();
        let c = vec64(&[5.0, 0.0, 0.0, 0.0]);
        let pos = &basis.position * &c;
        let vel = &basis.velocity * &c;
        let acc = &basis.acceleration * &c;
        for k in 0..10 {
            assert_eq!(pos[k], 5.0);
            assert_eq!(vel[k], 0.0);
            assert_eq!(acc[k], 0.0);
        }
    }

    #[test]
    fn unit_velocity_line_samples_at_step_times() {
        let basis = build_basis::<f64>(1, 10, 0.1).unwrap();
        let c = vec64(&[0.0, 1.0, 0.0, 0.0]);
        let pos = &basis.position * &c;
        let vel = &basis.velocity * &c;
        for k in 0..10 {
            assert_abs_diff_eq!(pos[k], 0.1 * k as f64, epsilon = 1e-15);
            assert_eq!(vel[k], 1.0);
        }
    }

    #[test]
    fn quadratic_gives_constant_acceleration() {
        let basis = build_basis::<f64>(1, 10, 0.1).unwrap();
        let coeffs = TrajectoryCoeffs::new(
            vec64(&[0.0, 0.0, 1.0, 0.0]),
            vec64(&[0.0; 4]),
        )
        .unwrap();
        let states = eval_trajectory(&basis, &coeffs).unwrap();
        for k in 0..10 {
            assert_abs_diff_eq!(states.ax[k], 2.0, epsilon = 1e-14);
            assert_eq!(states.ay[k], 0.0);
        }
    }

    /// Projects a random coefficient vector onto the nullspace of the
    /// continuity rows so finite differences are valid across joins.
    fn continuous_random_coeffs(basis: &BasisSet<f64>, seed: u64) -> DVector<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        let dim = basis.coeff_dim();
        let raw = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let c = &basis.continuity;
        // raw - C^T (C C^T)^-1 C raw
        let gram = c * c.transpose();
        let rhs = c * &raw;
        let sol = gram.lu().solve(&rhs).expect("continuity rows independent");
        &raw - c.transpose() * sol
    }

    #[test]
    fn finite_differences_match_derivative_bases() {
        let dt = 0.1;
        let basis = build_basis::<f64>(2, 10, dt).unwrap();
        for seed in 0..5u64 {
            let c = continuous_random_coeffs(&basis, seed);
            assert!((&basis.continuity * &c).amax() < 1e-12);
            let pos = &basis.position * &c;
            let vel = &basis.velocity * &c;
            let acc = &basis.acceleration * &c;
            let bound = 5.0 * dt * dt * c.amax();
            for k in 1..basis.n - 1 {
                let fd_v = (pos[k + 1] - pos[k - 1]) / (2.0 * dt);
                assert!(
                    (fd_v - vel[k]).abs() <= bound,
                    "velocity FD error {} exceeds {}",
                    (fd_v - vel[k]).abs(),
                    bound
                );
                // the velocity field is only C1 at segment joins, so the
                // acceleration check needs the stencil inside one segment
                let same_segment = (k - 1) / basis.steps_per_segment
                    == (k + 1) / basis.steps_per_segment;
                if same_segment {
                    let fd_a = (vel[k + 1] - vel[k - 1]) / (2.0 * dt);
                    assert!((fd_a - acc[k]).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn random_coeffs_match_horner_evaluation() {
        let basis = build_basis::<f64>(3, 7, 0.05).unwrap();
        let mut rng = crate::rng::rng_from_seed(42);
        let dim = basis.coeff_dim();
        let cx = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
        let cy = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
        let coeffs = TrajectoryCoeffs::new(cx.clone(), cy).unwrap();
        let states = eval_trajectory(&basis, &coeffs).unwrap();
        for k in 0..basis.n {
            let seg = k / basis.steps_per_segment;
            let tau = (k % basis.steps_per_segment) as f64 * 0.05;
            let a = &cx.as_slice()[4 * seg..4 * seg + 4];
            let horner = ((a[3] * tau + a[2]) * tau + a[1]) * tau + a[0];
            assert_abs_diff_eq!(states.x[k], horner, epsilon = 1e-12);
        }
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let basis = build_basis::<f64>(2, 10, 0.1).unwrap();
        let coeffs = TrajectoryCoeffs::new(vec64(&[0.0; 4]), vec64(&[0.0; 4])).unwrap();
        assert!(matches!(
            eval_trajectory(&basis, &coeffs),
            Err(CoreError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn stack_round_trip() {
        let coeffs =
            TrajectoryCoeffs::new(vec64(&[1.0, 2.0, 3.0, 4.0]), vec64(&[5.0, 6.0, 7.0, 8.0]))
                .unwrap();
        let xi = coeffs.stack();
        assert_eq!(TrajectoryCoeffs::from_stacked(&xi).unwrap(), coeffs);
    }

    #[test]
    fn works_in_f32() {
        let basis = build_basis::<f32>(1, 5, 0.1f32).unwrap();
        let c = DVector::from_column_slice(&[0.0f32, 1.0, 0.0, 0.0]);
        let pos = &basis.position * &c;
        assert_abs_diff_eq!(pos[4], 0.4f32, epsilon = 1e-6);
    }
}
