//! Batch projection of seed trajectories onto the constraint set.
//!
//! Velocity and acceleration norm bounds are rewritten in polar form
//! (angle + box-bounded magnitude); lane keeping and longitudinal
//! separation enter as discrete-time barrier rows `G xi <= b_barrier`
//! built from consecutive basis rows. The nonconvex polar targets and the
//! barrier inequalities are relaxed as quadratic penalties with a Lagrange
//! multiplier, and the resulting augmented Lagrangian is minimized by
//! alternating closed-form updates: polar angles, polar magnitudes,
//! inequality slacks, multiplier, penalty targets, and finally an
//! equality-constrained QP in the coefficients solved through a prefactored
//! KKT system. Boundary conditions `A xi = b` hold exactly at every
//! iterate.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::basis::BasisSet;
use crate::seed::BoundaryConditions;
use crate::{real, CoreError, Real, Result};

/// Motion and barrier limits (Table-style constraint parameters).
#[derive(Clone, Copy, Debug)]
pub struct PlannerLimits<T: Real> {
    pub v_min: T,
    pub v_max: T,
    pub a_max: T,
    /// Frenet lateral lane bounds.
    pub y_lb: T,
    pub y_ub: T,
    /// Barrier constants in (0, 1].
    pub gamma_lane: T,
    pub gamma_long: T,
    /// Minimum longitudinal gap to the lead vehicle (meters).
    pub s_min: T,
    /// Clearance radius for the collision cost (meters).
    pub r_safe: T,
    /// Penalty weight of the augmented Lagrangian.
    pub rho: T,
}

impl<T: Real> Default for PlannerLimits<T> {
    fn default() -> Self {
        Self {
            v_min: T::zero(),
            v_max: real(10.0),
            a_max: real(4.0),
            y_lb: real(-1.75),
            y_ub: real(1.75),
            gamma_lane: real(0.9),
            gamma_long: real(0.9),
            s_min: real(4.0),
            r_safe: real(2.5),
            rho: T::one(),
        }
    }
}

impl<T: Real> PlannerLimits<T> {
    pub fn validate(&self) -> Result<()> {
        if self.v_min > self.v_max {
            return Err(CoreError::InvalidArgument("v_min > v_max".into()));
        }
        if self.a_max <= T::zero() {
            return Err(CoreError::InvalidArgument("a_max must be positive".into()));
        }
        if self.y_lb >= self.y_ub {
            return Err(CoreError::InvalidArgument("y_lb must be below y_ub".into()));
        }
        for gamma in [self.gamma_lane, self.gamma_long] {
            if gamma <= T::zero() || gamma > T::one() {
                return Err(CoreError::InvalidArgument(
                    "barrier constants must lie in (0, 1]".into(),
                ));
            }
        }
        if self.rho <= T::zero() {
            return Err(CoreError::InvalidArgument("rho must be positive".into()));
        }
        Ok(())
    }
}

/// Predicted longitudinal position of the lead vehicle, one entry per
/// planner step.
#[derive(Clone, Debug)]
pub struct LeadVehicleTrack<T: Real> {
    pub positions: Vec<T>,
}

/// Assembled projection instance. The KKT system is factored once and
/// shared by every solve against this problem.
#[derive(Clone, Debug)]
pub struct ProjectionProblem<T: Real> {
    /// Equality system (boundary conditions + continuity).
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    /// Stacked derivative blocks: rows `[W1 cx; W2 cx; W1 cy; W2 cy]`.
    pub f_tilde: DMatrix<T>,
    /// Barrier rows (upper lane, lower lane, optional longitudinal).
    pub g: DMatrix<T>,
    pub b_barrier: DVector<T>,
    /// Box bounds for the polar magnitudes `[d_v; d_a]`.
    pub d_min: DVector<T>,
    pub d_max: DVector<T>,
    pub rho: T,
    pub limits: PlannerLimits<T>,
    /// `[f_tilde; g]` stacked.
    f: DMatrix<T>,
    kkt: LU<T, Dyn, Dyn>,
    n: usize,
    dim: usize,
}

/// Iterates of the alternating minimization.
#[derive(Clone, Debug)]
pub struct ProjectionState<T: Real> {
    pub xi: DVector<T>,
    /// Polar angles `[alpha_v; alpha_a]`, one pair block per step.
    pub alpha: DVector<T>,
    /// Polar magnitudes `[d_v; d_a]`, within `[d_min, d_max]`.
    pub d: DVector<T>,
    /// Multiplier in coefficient space.
    pub lambda: DVector<T>,
    /// Inequality slacks, elementwise non-negative.
    pub s: DVector<T>,
    /// Current penalty target `[e_tilde; b_barrier - s]`.
    pub e: DVector<T>,
}

/// Result of one projection run.
#[derive(Clone, Debug)]
pub struct ProjectionOutcome<T: Real> {
    pub xi: DVector<T>,
    /// `max |F xi - e|` after each iteration.
    pub residual_history: Vec<T>,
    pub converged: bool,
}

/// Builds the projection problem for one boundary system.
///
/// Lane barrier rows act on the lateral coefficient block, the longitudinal
/// barrier rows (present only with a lead track) on the longitudinal block.
pub fn build_problem<T: Real>(
    basis: &BasisSet<T>,
    bc: &BoundaryConditions<T>,
    limits: &PlannerLimits<T>,
    lead: Option<&LeadVehicleTrack<T>>,
) -> Result<ProjectionProblem<T>> {
    limits.validate()?;
    let n = basis.n;
    let d = basis.coeff_dim();
    let dim = 2 * d;
    if bc.a.ncols() != dim {
        return Err(CoreError::DimensionMismatch(format!(
            "boundary system has {} columns, basis needs {dim}",
            bc.a.ncols()
        )));
    }
    if let Some(track) = lead {
        if track.positions.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "lead track has {} entries, planner horizon has {n} steps",
                track.positions.len()
            )));
        }
    }

    // F_tilde: velocity and acceleration rows per axis block
    let mut f_tilde = DMatrix::zeros(4 * n, dim);
    for k in 0..n {
        for j in 0..d {
            f_tilde[(k, j)] = basis.velocity[(k, j)];
            f_tilde[(n + k, j)] = basis.acceleration[(k, j)];
            f_tilde[(2 * n + k, d + j)] = basis.velocity[(k, j)];
            f_tilde[(3 * n + k, d + j)] = basis.acceleration[(k, j)];
        }
    }

    // barrier rows combine consecutive position-basis rows
    let pairs = n - 1;
    let g_rows = if lead.is_some() { 3 * pairs } else { 2 * pairs };
    let mut g = DMatrix::zeros(g_rows, dim);
    let mut b_barrier = DVector::zeros(g_rows);
    let one = T::one();
    for k in 0..pairs {
        for j in 0..d {
            let w_next = basis.position[(k + 1, j)];
            let w_cur = basis.position[(k, j)];
            // upper lane: y[k+1] - (1 - gamma) y[k] <= gamma * y_ub
            g[(k, d + j)] = w_next + (limits.gamma_lane - one) * w_cur;
            // lower lane: -y[k+1] + (1 - gamma) y[k] <= -gamma * y_lb
            g[(pairs + k, d + j)] = -w_next + (one - limits.gamma_lane) * w_cur;
        }
        b_barrier[k] = limits.gamma_lane * limits.y_ub;
        b_barrier[pairs + k] = -limits.gamma_lane * limits.y_lb;
    }
    if let Some(track) = lead {
        for k in 0..pairs {
            for j in 0..d {
                g[(2 * pairs + k, j)] = basis.position[(k + 1, j)]
                    + (limits.gamma_long - one) * basis.position[(k, j)];
            }
            b_barrier[2 * pairs + k] = track.positions[k + 1]
                + (limits.gamma_long - one) * track.positions[k]
                - limits.gamma_long * limits.s_min;
        }
    }

    let mut d_min = DVector::zeros(2 * n);
    let mut d_max = DVector::zeros(2 * n);
    for k in 0..n {
        d_min[k] = limits.v_min;
        d_max[k] = limits.v_max;
        d_min[n + k] = T::zero();
        d_max[n + k] = limits.a_max;
    }

    let mut f = DMatrix::zeros(4 * n + g_rows, dim);
    f.view_mut((0, 0), (4 * n, dim)).copy_from(&f_tilde);
    f.view_mut((4 * n, 0), (g_rows, dim)).copy_from(&g);

    // KKT matrix [[I + rho F^T F, A^T], [A, 0]]
    let a_rows = bc.a.nrows();
    let size = dim + a_rows;
    let mut kkt = DMatrix::zeros(size, size);
    let mut quad = f.transpose() * &f * limits.rho;
    for i in 0..dim {
        quad[(i, i)] += one;
    }
    kkt.view_mut((0, 0), (dim, dim)).copy_from(&quad);
    kkt.view_mut((0, dim), (dim, a_rows)).copy_from(&bc.a.transpose());
    kkt.view_mut((dim, 0), (a_rows, dim)).copy_from(&bc.a);
    let kkt = kkt.lu();
    if !kkt.is_invertible() {
        return Err(CoreError::SingularKkt);
    }

    Ok(ProjectionProblem {
        a: bc.a.clone(),
        b: bc.b.clone(),
        f_tilde,
        g,
        b_barrier,
        d_min,
        d_max,
        rho: limits.rho,
        limits: *limits,
        f,
        kkt,
        n,
        dim,
    })
}

impl<T: Real> ProjectionProblem<T> {
    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn coeff_dim(&self) -> usize {
        self.dim
    }

    pub fn stacked_f(&self) -> &DMatrix<T> {
        &self.f
    }

    /// Swaps in a new equality target; the matrix and factorization are
    /// unchanged, so one assembled problem serves a whole candidate batch.
    pub fn set_boundary_target(&mut self, b: DVector<T>) -> Result<()> {
        if b.len() != self.a.nrows() {
            return Err(CoreError::DimensionMismatch(format!(
                "target has {} entries, equality system has {} rows",
                b.len(),
                self.a.nrows()
            )));
        }
        self.b = b;
        Ok(())
    }

    /// Per-step velocity and acceleration magnitudes of a decoded
    /// coefficient vector.
    pub fn derivative_magnitudes(&self, xi: &DVector<T>) -> (Vec<T>, Vec<T>) {
        let fx = &self.f_tilde * xi;
        let n = self.n;
        let speeds = (0..n).map(|k| fx[k].hypot(fx[2 * n + k])).collect();
        let accels = (0..n).map(|k| fx[n + k].hypot(fx[3 * n + k])).collect();
        (speeds, accels)
    }
}

impl<T: Real> ProjectionState<T> {
    /// Initializes every block from the seed; the multiplier starts at zero.
    pub fn init(seed_xi: &DVector<T>, problem: &ProjectionProblem<T>) -> Self {
        let mut state = Self {
            xi: seed_xi.clone(),
            alpha: DVector::zeros(2 * problem.n),
            d: DVector::zeros(2 * problem.n),
            lambda: DVector::zeros(problem.dim),
            s: DVector::zeros(problem.g.nrows()),
            e: DVector::zeros(problem.f.nrows()),
        };
        polar_update(&mut state, problem);
        slack_update(&mut state, problem);
        refresh_target(&mut state, problem);
        state
    }
}

/// Closed-form polar step: angles from `atan2` of the current derivative
/// pairs, magnitudes clipped into their boxes. The stationary pair
/// `(0, 0)` maps to angle 0 with the magnitude clipped to its lower bound.
pub fn polar_update<T: Real>(state: &mut ProjectionState<T>, problem: &ProjectionProblem<T>) {
    let fx = &problem.f_tilde * &state.xi;
    let n = problem.n;
    for k in 0..n {
        let (vx, vy) = (fx[k], fx[2 * n + k]);
        state.alpha[k] = if vx == T::zero() && vy == T::zero() {
            T::zero()
        } else {
            vy.atan2(vx)
        };
        state.d[k] = vx.hypot(vy).clamp(problem.d_min[k], problem.d_max[k]);
        let (ax, ay) = (fx[n + k], fx[3 * n + k]);
        state.alpha[n + k] = if ax == T::zero() && ay == T::zero() {
            T::zero()
        } else {
            ay.atan2(ax)
        };
        state.d[n + k] = ax.hypot(ay).clamp(problem.d_min[n + k], problem.d_max[n + k]);
    }
}

/// Slack step: minimizer of the barrier penalty over `s >= 0`,
/// `s = max(0, b_barrier - G xi)`.
pub fn slack_update<T: Real>(state: &mut ProjectionState<T>, problem: &ProjectionProblem<T>) {
    let gx = &problem.g * &state.xi;
    for i in 0..state.s.len() {
        state.s[i] = (problem.b_barrier[i] - gx[i]).max(T::zero());
    }
}

/// Penalty target `[e_tilde(alpha, d); b_barrier - s]`.
fn refresh_target<T: Real>(state: &mut ProjectionState<T>, problem: &ProjectionProblem<T>) {
    let n = problem.n;
    for k in 0..n {
        let (av, dv) = (state.alpha[k], state.d[k]);
        let (aa, da) = (state.alpha[n + k], state.d[n + k]);
        state.e[k] = dv * av.cos();
        state.e[n + k] = da * aa.cos();
        state.e[2 * n + k] = dv * av.sin();
        state.e[3 * n + k] = da * aa.sin();
    }
    for i in 0..state.s.len() {
        state.e[4 * n + i] = problem.b_barrier[i] - state.s[i];
    }
}

/// Multiplier step on the stale target, then the target refresh:
/// `lambda -= rho F^T (F xi - e)` followed by `e = [e_tilde; b_barrier - s]`.
///
/// The coefficient-space multiplier enters the objective as `-lambda^T xi`,
/// so dual ascent on the penalty residual accumulates with a minus sign;
/// the plus variant feeds violations back into themselves and diverges.
pub fn multiplier_target_update<T: Real>(
    state: &mut ProjectionState<T>,
    problem: &ProjectionProblem<T>,
) {
    let residual = &problem.f * &state.xi - &state.e;
    state.lambda -= problem.f.transpose() * residual * problem.rho;
    refresh_target(state, problem);
}

/// Coefficient step: equality-constrained QP
/// `min 1/2 |xi - seed|^2 - lambda^T xi + rho/2 |F xi - e|^2  s.t.  A xi = b`
/// solved through the prefactored KKT system.
pub fn xi_update<T: Real>(
    state: &mut ProjectionState<T>,
    problem: &ProjectionProblem<T>,
    seed_xi: &DVector<T>,
) -> Result<()> {
    xi_update_with_target(state, problem, seed_xi, &problem.b)
}

/// [`xi_update`] against an explicit equality target (one assembled problem
/// serves a whole batch of per-candidate targets).
pub fn xi_update_with_target<T: Real>(
    state: &mut ProjectionState<T>,
    problem: &ProjectionProblem<T>,
    seed_xi: &DVector<T>,
    b: &DVector<T>,
) -> Result<()> {
    let dim = problem.dim;
    let a_rows = problem.a.nrows();
    let mut rhs = DVector::zeros(dim + a_rows);
    let top = seed_xi + &state.lambda + problem.f.transpose() * &state.e * problem.rho;
    rhs.rows_mut(0, dim).copy_from(&top);
    rhs.rows_mut(dim, a_rows).copy_from(b);
    let sol = problem.kkt.solve(&rhs).ok_or(CoreError::SingularKkt)?;
    state.xi = sol.rows(0, dim).into_owned();
    Ok(())
}

/// Runs the alternating-minimization loop until `max |F xi - e| <= tol` or
/// the iteration budget runs out. The equality system holds at every
/// iterate; non-convergence is reported, not an error.
pub fn project<T: Real>(
    seed_xi: &DVector<T>,
    problem: &ProjectionProblem<T>,
    max_iters: usize,
    tol: T,
) -> Result<ProjectionOutcome<T>> {
    project_with_target(seed_xi, problem, &problem.b, max_iters, tol)
}

/// [`project`] against an explicit equality target.
pub fn project_with_target<T: Real>(
    seed_xi: &DVector<T>,
    problem: &ProjectionProblem<T>,
    b: &DVector<T>,
    max_iters: usize,
    tol: T,
) -> Result<ProjectionOutcome<T>> {
    if max_iters == 0 {
        return Err(CoreError::InvalidArgument("max_iters must be >= 1".into()));
    }
    let mut state = ProjectionState::init(seed_xi, problem);
    let mut history = Vec::with_capacity(max_iters.min(128));
    let mut converged = false;
    for _ in 0..max_iters {
        polar_update(&mut state, problem);
        slack_update(&mut state, problem);
        multiplier_target_update(&mut state, problem);
        xi_update_with_target(&mut state, problem, seed_xi, b)?;
        let residual = (&problem.f * &state.xi - &state.e).amax();
        history.push(residual);
        if residual <= tol {
            converged = true;
            break;
        }
    }
    Ok(ProjectionOutcome {
        xi: state.xi,
        residual_history: history,
        converged,
    })
}

/// Constraint residual norm of a decoded trajectory: positive parts of the
/// barrier rows plus step-wise velocity and acceleration bound violations,
/// each aggregated as an L2 norm.
pub fn residual_norm<T: Real>(xi: &DVector<T>, problem: &ProjectionProblem<T>) -> T {
    let gx = &problem.g * xi;
    let mut barrier = T::zero();
    for i in 0..gx.len() {
        let v = (gx[i] - problem.b_barrier[i]).max(T::zero());
        barrier += v * v;
    }
    let (speeds, accels) = problem.derivative_magnitudes(xi);
    let mut over_v = T::zero();
    let mut under_v = T::zero();
    let mut over_a = T::zero();
    for k in 0..problem.n {
        let hi = (speeds[k] - problem.limits.v_max).max(T::zero());
        over_v += hi * hi;
        let lo = (problem.limits.v_min - speeds[k]).max(T::zero());
        under_v += lo * lo;
        let ha = (accels[k] - problem.limits.a_max).max(T::zero());
        over_a += ha * ha;
    }
    barrier.sqrt() + over_v.sqrt() + under_v.sqrt() + over_a.sqrt()
}
