//! Behavioral-input sampling and Frenet seed trajectories.
//!
//! A behavioral input bundles a terminal lateral offset and a cruise-speed
//! setpoint. The seed planner fits the coefficient vector of minimum
//! acceleration energy that meets the boundary system: full initial state,
//! terminal lateral position with zero terminal lateral
//! velocity/acceleration, terminal longitudinal velocity with zero terminal
//! acceleration, and C2 continuity across segment joins. Where the system
//! is exactly determined the quadratic is irrelevant; the one spare
//! longitudinal degree of freedom is resolved toward the smoothest fit, so
//! a steady-state input reproduces the constant-velocity line exactly. The
//! same `(A, b)` system is handed to the projection step so seeds start
//! equality-feasible.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{BasisSet, StateSequence, TrajectoryCoeffs};
use crate::rng::rng_from_seed;
use crate::{real, CoreError, Real, Result};

/// Sampled high-level decision driving one seed trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehavioralInput<T: Real> {
    /// Desired terminal lateral offset in the Frenet frame (meters).
    pub lateral_offset_target: T,
    /// Desired cruise speed (m/s).
    pub velocity_setpoint: T,
}

/// Gaussian over behavioral inputs.
#[derive(Clone, Debug)]
pub struct SamplingDistribution<T: Real> {
    pub mu: Vector2<T>,
    pub sigma: Matrix2<T>,
}

impl<T: Real> SamplingDistribution<T> {
    pub fn new(mu: Vector2<T>, sigma: Matrix2<T>) -> Self {
        Self { mu, sigma }
    }

    /// Factor `L` with `L L^T = sigma`, via spectral decomposition so
    /// semi-definite covariances (including zero) are accepted.
    fn factor(&self) -> Result<Matrix2<T>> {
        let asym = (self.sigma[(0, 1)] - self.sigma[(1, 0)]).abs();
        let scale = self.sigma.amax().max(T::one());
        if asym > real::<T>(1e-9) * scale {
            return Err(CoreError::NotPsd);
        }
        let sym = (self.sigma + self.sigma.transpose()) * real::<T>(0.5);
        let eig = nalgebra::SymmetricEigen::new(sym);
        let tol = -real::<T>(1e-12) * scale;
        let mut sqrt_vals = Vector2::zeros();
        for i in 0..2 {
            let v = eig.eigenvalues[i];
            if v < tol {
                return Err(CoreError::NotPsd);
            }
            sqrt_vals[i] = v.max(T::zero()).sqrt();
        }
        Ok(eig.eigenvectors * Matrix2::from_diagonal(&sqrt_vals))
    }
}

/// Draws `count` i.i.d. behavioral inputs; deterministic for a fixed seed.
pub fn sample_behaviors<T: Real>(
    dist: &SamplingDistribution<T>,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<BehavioralInput<T>>>
where
    StandardNormal: Distribution<T>,
{
    if count == 0 {
        return Err(CoreError::InvalidArgument("count must be >= 1".into()));
    }
    let l = dist.factor()?;
    let mut rng = rng_from_seed(rng_seed);
    Ok((0..count)
        .map(|_| {
            let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let p = dist.mu + l * z;
            BehavioralInput {
                lateral_offset_target: p.x,
                velocity_setpoint: p.y,
            }
        })
        .collect())
}

/// Current ego state in the Frenet frame.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrenetState<T: Real> {
    pub s: T,
    pub lat: T,
    pub vs: T,
    pub vlat: T,
    pub acc_s: T,
    pub acc_lat: T,
}

/// Equality system `A xi = b` bundling boundary conditions and continuity.
#[derive(Clone, Debug)]
pub struct BoundaryConditions<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    /// Row indices whose targets vary with the behavioral input:
    /// terminal longitudinal velocity, then terminal lateral position.
    pub velocity_row: usize,
    pub lateral_row: usize,
}

/// Builds and solves seed boundary systems; the equality matrix and the
/// factorized KKT system are shared across candidates.
pub struct SeedSolver<T: Real> {
    a: DMatrix<T>,
    kkt: nalgebra::LU<T, Dyn, Dyn>,
    velocity_row: usize,
    lateral_row: usize,
}

impl<T: Real> SeedSolver<T> {
    pub fn new(basis: &BasisSet<T>) -> Result<Self> {
        let d = basis.coeff_dim();
        let n = basis.n;
        let joins = 3 * (basis.segment_count - 1);
        let rows = 11 + 2 * joins;
        if rows > 2 * d {
            return Err(CoreError::RankDeficient);
        }
        let mut a = DMatrix::zeros(rows, 2 * d);
        let mut set = |row: usize, axis: usize, src: &DMatrix<T>, k: usize| {
            for j in 0..d {
                a[(row, axis * d + j)] = src[(k, j)];
            }
        };
        // x block: initial position/velocity/acceleration, terminal
        // velocity and acceleration (rows 0..5)
        set(0, 0, &basis.position, 0);
        set(1, 0, &basis.velocity, 0);
        set(2, 0, &basis.acceleration, 0);
        set(3, 0, &basis.velocity, n - 1);
        set(4, 0, &basis.acceleration, n - 1);
        // y block: full initial and terminal state (rows 5..11)
        set(5, 1, &basis.position, 0);
        set(6, 1, &basis.velocity, 0);
        set(7, 1, &basis.acceleration, 0);
        set(8, 1, &basis.position, n - 1);
        set(9, 1, &basis.velocity, n - 1);
        set(10, 1, &basis.acceleration, n - 1);
        // continuity rows for both axes
        for axis in 0..2 {
            for r in 0..joins {
                for j in 0..d {
                    a[(11 + axis * joins + r, axis * d + j)] = basis.continuity[(r, j)];
                }
            }
        }
        // full-row-rank check
        let gram = &a * a.transpose();
        Cholesky::new(gram).ok_or(CoreError::RankDeficient)?;
        // KKT system of min 1/2 xi^T R xi s.t. A xi = b, with R the
        // acceleration Gram matrix per axis
        let r_axis = basis.acceleration.transpose() * &basis.acceleration;
        let dim2 = 2 * d;
        let size = dim2 + rows;
        let mut kkt = DMatrix::zeros(size, size);
        kkt.view_mut((0, 0), (d, d)).copy_from(&r_axis);
        kkt.view_mut((d, d), (d, d)).copy_from(&r_axis);
        kkt.view_mut((0, dim2), (dim2, rows))
            .copy_from(&a.transpose());
        kkt.view_mut((dim2, 0), (rows, dim2)).copy_from(&a);
        let kkt = kkt.lu();
        if !kkt.is_invertible() {
            return Err(CoreError::RankDeficient);
        }
        Ok(Self {
            a,
            kkt,
            velocity_row: 3,
            lateral_row: 8,
        })
    }

    /// Target vector for one behavioral input.
    pub fn target(&self, p: &BehavioralInput<T>, ego: &FrenetState<T>) -> DVector<T> {
        let mut b = DVector::zeros(self.a.nrows());
        b[0] = ego.s;
        b[1] = ego.vs;
        b[2] = ego.acc_s;
        b[3] = p.velocity_setpoint;
        b[5] = ego.lat;
        b[6] = ego.vlat;
        b[7] = ego.acc_lat;
        b[8] = p.lateral_offset_target;
        b
    }

    /// Minimum-acceleration-energy solution of `A xi = b(p)`.
    pub fn solve(
        &self,
        p: &BehavioralInput<T>,
        ego: &FrenetState<T>,
    ) -> (TrajectoryCoeffs<T>, BoundaryConditions<T>) {
        let b = self.target(p, ego);
        let dim2 = self.a.ncols();
        let mut rhs = DVector::zeros(dim2 + self.a.nrows());
        rhs.rows_mut(dim2, self.a.nrows()).copy_from(&b);
        let sol = self.kkt.solve(&rhs).expect("seed KKT verified nonsingular");
        let xi = sol.rows(0, dim2).into_owned();
        let coeffs = TrajectoryCoeffs::from_stacked(&xi).expect("xi has even length");
        (
            coeffs,
            BoundaryConditions {
                a: self.a.clone(),
                b,
                velocity_row: self.velocity_row,
                lateral_row: self.lateral_row,
            },
        )
    }
}

/// Fits a seed trajectory for one behavioral input.
pub fn seed_trajectory<T: Real>(
    p: &BehavioralInput<T>,
    ego: &FrenetState<T>,
    basis: &BasisSet<T>,
) -> Result<(TrajectoryCoeffs<T>, BoundaryConditions<T>)> {
    let solver = SeedSolver::new(basis)?;
    Ok(solver.solve(p, ego))
}

/// Weights of the analytic cost terms.
#[derive(Clone, Copy, Debug)]
pub struct CostWeights<T: Real> {
    pub smoothness: T,
    pub velocity: T,
    pub lateral: T,
}

impl<T: Real> Default for CostWeights<T> {
    fn default() -> Self {
        Self {
            smoothness: T::one(),
            velocity: real(0.5),
            lateral: real(0.2),
        }
    }
}

/// Analytic trajectory cost: squared acceleration, squared departure from
/// the speed setpoint, and squared lateral deviation from the centerline,
/// summed over steps. The sequence is expected in the Frenet frame, where
/// the lateral deviation is the `y` coordinate itself.
pub fn analytic_cost<T: Real>(
    traj: &StateSequence<T>,
    p: &BehavioralInput<T>,
    weights: &CostWeights<T>,
) -> T {
    let mut smooth = T::zero();
    let mut vel = T::zero();
    let mut lat = T::zero();
    for k in 0..traj.len() {
        smooth += traj.ax[k] * traj.ax[k] + traj.ay[k] * traj.ay[k];
        let dv = traj.speed(k) - p.velocity_setpoint;
        vel += dv * dv;
        lat += traj.y[k] * traj.y[k];
    }
    weights.smoothness * smooth + weights.velocity * vel + weights.lateral * lat
}
