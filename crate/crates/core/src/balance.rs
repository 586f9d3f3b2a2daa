//! Optimal balance: the boundary value problem
//!
//! ```text
//! q' = p,  p' = Jp - ε ρ(t/T) ∇V(q),   p(0) = 0,  q(T) = q*,  T = a/ε
//! ```
//!
//! solved by simple shooting on `q(0)` or by back-and-forth nudging. The
//! balanced momentum is `p* = p(T)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::{
    calibrate_step, integrate, integrate_endpoint, IntegratorConfig, Scheme, System, Trajectory,
    DEFAULT_BUDGET,
};
use crate::model::{apply_j_into, dist, norm, Potential, SmallParam, State};
use crate::ramp::Ramp;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SHOOTING_ITER: usize = 30;
pub const DEFAULT_NUDGING_ITER: usize = 200;

/// Slow-time steps per unit of `a` used by [`initial_guess`].
const GUESS_STEPS_PER_UNIT: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Shooting,
    Nudging,
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shooting" => Ok(Solver::Shooting),
            "nudging" => Ok(Solver::Nudging),
            other => Err(Error::Config(format!(
                "unknown solver '{other}', expected 'shooting' or 'nudging'"
            ))),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Solver::Shooting => write!(f, "shooting"),
            Solver::Nudging => write!(f, "nudging"),
        }
    }
}

/// Default fixed step of [`BalanceProblem::new`].
pub const DEFAULT_STEP: f64 = 0.005;

/// Default endpoint tolerance for step calibration.
pub const DEFAULT_CALIBRATION_TARGET: f64 = 1e-10;

/// Coarsest and finest steps tried by step calibration.
const CALIBRATION_START: f64 = 0.02;
const CALIBRATION_MIN: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct BalanceProblem {
    pub target: Vec<f64>,
    pub eps: SmallParam,
    pub ramp: Ramp,
    /// Slow horizon `a`; the ramp time is `T = a/ε`.
    pub horizon: f64,
    pub potential: Arc<dyn Potential>,
    pub solver: Solver,
    pub tol: f64,
    pub max_iter: usize,
    pub integrator: IntegratorConfig,
    /// Under-relaxation of the nudging update of `q(0)`, in `(0, 1]`.
    pub relaxation: f64,
    /// Record the solution trajectory with this stride.
    pub record_stride: Option<usize>,
}

impl BalanceProblem {
    /// Shooting problem with default tolerance and integrator.
    pub fn new(
        target: Vec<f64>,
        eps: SmallParam,
        ramp: Ramp,
        horizon: f64,
        potential: Arc<dyn Potential>,
    ) -> Result<Self> {
        let integrator = IntegratorConfig::new(Scheme::Rk4, DEFAULT_STEP)?;
        let prob = Self {
            target,
            eps,
            ramp,
            horizon,
            potential,
            solver: Solver::Shooting,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_SHOOTING_ITER,
            integrator,
            relaxation: 1.0,
            record_stride: None,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        if self.solver != solver {
            self.max_iter = match solver {
                Solver::Shooting => DEFAULT_SHOOTING_ITER,
                Solver::Nudging => DEFAULT_NUDGING_ITER,
            };
        }
        self.solver = solver;
        self
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "slow horizon a must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Config(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        let n = 2 * self.potential.d();
        if self.target.len() != n {
            return Err(Error::Config(format!(
                "target has length {} but the potential expects {n}",
                self.target.len()
            )));
        }
        if self.target.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("target contains non-finite entries".into()));
        }
        self.integrator.validate()
    }

    /// Ramp time `T = a/ε`.
    pub fn ramp_time(&self) -> f64 {
        self.horizon / self.eps.get()
    }

    pub fn system(&self) -> System {
        System::Ramped {
            eps: self.eps.get(),
            ramp_time: self.ramp_time(),
            ramp: self.ramp,
            potential: Arc::clone(&self.potential),
        }
    }

    /// Endpoint `(q(T), p(T))` of the ramped flow started at `(q0, 0)`.
    pub fn forward(&self, q0: &[f64]) -> Result<State> {
        let s0 = State::at_rest(q0.to_vec())?;
        integrate_endpoint(
            &s0,
            0.0,
            self.ramp_time(),
            &self.integrator.forward(),
            &self.system(),
        )
    }

    /// Replaces the step by the calibrated one for the ramp started at the
    /// initial guess: halve from `0.02` until the endpoint moves by at most
    /// `target`.
    pub fn calibrated(mut self, target: f64) -> Result<Self> {
        let guess = initial_guess(
            &self.target,
            &self.ramp,
            self.horizon,
            self.potential.as_ref(),
        )?;
        let s0 = State::at_rest(guess)?;
        let start = IntegratorConfig {
            dt: CALIBRATION_START,
            ..self.integrator.forward()
        };
        self.integrator.dt = calibrate_step(
            &s0,
            0.0,
            self.ramp_time(),
            &start,
            &self.system(),
            target,
            CALIBRATION_MIN,
        )?;
        Ok(self)
    }

    pub fn solve(&self) -> Result<BalanceResult> {
        match self.solver {
            Solver::Shooting => shoot(self),
            Solver::Nudging => nudge(self),
        }
    }
}

/// How the integration step of a problem is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// Calibrate by step halving to the given endpoint tolerance.
    Calibrated {
        target: f64,
    },
}

/// Everything in a [`BalanceProblem`] except `ε`, for sweeps.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub target: Vec<f64>,
    pub ramp: Ramp,
    pub horizon: f64,
    pub potential: Arc<dyn Potential>,
    pub solver: Solver,
    pub tol: f64,
    /// `None` selects the solver default.
    pub max_iter: Option<usize>,
    pub relaxation: f64,
    pub scheme: Scheme,
    pub step: StepPolicy,
    pub budget: u64,
}

impl ProblemTemplate {
    pub fn new(target: Vec<f64>, ramp: Ramp, horizon: f64, potential: Arc<dyn Potential>) -> Self {
        Self {
            target,
            ramp,
            horizon,
            potential,
            solver: Solver::Shooting,
            tol: DEFAULT_TOL,
            max_iter: None,
            relaxation: 1.0,
            scheme: Scheme::Rk4,
            step: StepPolicy::Calibrated {
                target: DEFAULT_CALIBRATION_TARGET,
            },
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn instantiate(&self, eps: f64) -> Result<BalanceProblem> {
        let mut prob = BalanceProblem::new(
            self.target.clone(),
            SmallParam::new(eps)?,
            self.ramp,
            self.horizon,
            Arc::clone(&self.potential),
        )?
        .with_solver(self.solver);
        prob.tol = self.tol;
        if let Some(m) = self.max_iter {
            prob.max_iter = m;
        }
        prob.relaxation = self.relaxation;
        prob.integrator.scheme = self.scheme;
        prob.integrator.budget = self.budget;
        match self.step {
            StepPolicy::Fixed(dt) => {
                prob.integrator.dt = dt;
                prob.validate()?;
                Ok(prob)
            }
            StepPolicy::Calibrated { target } => {
                prob.validate()?;
                prob.calibrated(target)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceResult {
    /// Balanced momentum `p* = p(T)`.
    pub p_star: Vec<f64>,
    /// Initial position `q(0)` of the ramped solution.
    pub q0: Vec<f64>,
    /// Shooting: `‖q(T) - q*‖`. Nudging: change between the last two sweeps.
    pub residual: f64,
    /// `‖q(T) - q*‖` of the final forward pass, for either solver.
    pub boundary_residual: f64,
    pub iterations: usize,
    pub trajectory: Option<Trajectory>,
}

/// Start guess for `q(0)`: the leading-order slow flow `dq/dτ = -ρ(τ/a) J∇V(q)`
/// integrated backward from `q*` at `τ = a` to `τ = 0`.
pub fn initial_guess(
    target: &[f64],
    ramp: &Ramp,
    horizon: f64,
    potential: &dyn Potential,
) -> Result<Vec<f64>> {
    if !(horizon > 0.0) {
        return Err(Error::Config(format!(
            "slow horizon a must be positive, got {horizon}"
        )));
    }
    let n = target.len();
    let steps = (GUESS_STEPS_PER_UNIT * horizon).ceil().max(1.0) as usize;
    let h = -horizon / steps as f64;
    let mut grad = vec![0.0; n];
    let rhs = |tau: f64, q: &[f64], grad: &mut [f64], out: &mut [f64]| -> Result<()> {
        potential.gradient_into(q, grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Evaluation {
                q: q.to_vec(),
                what: "non-finite gradient in the start-guess flow".into(),
            });
        }
        let rho = ramp.eval_unchecked((tau / horizon).clamp(0.0, 1.0));
        apply_j_into(grad, out);
        out.iter_mut().for_each(|x| *x *= -rho);
        Ok(())
    };
    let mut q = target.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut y = vec![0.0; n];
    for i in 0..steps {
        let tau = horizon + i as f64 * h;
        rhs(tau, &q, &mut grad, &mut k1)?;
        y.iter_mut()
            .zip(&q)
            .zip(&k1)
            .for_each(|((y, q), k)| *y = q + 0.5 * h * k);
        rhs(tau + 0.5 * h, &y, &mut grad, &mut k2)?;
        y.iter_mut()
            .zip(&q)
            .zip(&k2)
            .for_each(|((y, q), k)| *y = q + 0.5 * h * k);
        rhs(tau + 0.5 * h, &y, &mut grad, &mut k3)?;
        y.iter_mut()
            .zip(&q)
            .zip(&k3)
            .for_each(|((y, q), k)| *y = q + h * k);
        rhs(tau + h, &y, &mut grad, &mut k4)?;
        for j in 0..n {
            q[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    Ok(q)
}

fn residual_vec(prob: &BalanceProblem, q0: &[f64]) -> Result<(Vec<f64>, State)> {
    let end = prob.forward(q0)?;
    let r = end.q.iter().zip(&prob.target).map(|(a, b)| a - b).collect();
    Ok((r, end))
}

/// Solves `A x = b` for a small dense matrix stored row-major.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 || !a[pivot * n + col].is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

fn finish(
    prob: &BalanceProblem,
    q0: Vec<f64>,
    end: State,
    residual: f64,
    iterations: usize,
) -> Result<BalanceResult> {
    let trajectory = match prob.record_stride {
        Some(stride) => Some(integrate(
            &State::at_rest(q0.clone())?,
            0.0,
            prob.ramp_time(),
            &prob.integrator.forward().with_stride(stride),
            &prob.system(),
        )?),
        None => None,
    };
    Ok(BalanceResult {
        boundary_residual: dist(&end.q, &prob.target),
        p_star: end.p,
        q0,
        residual,
        iterations,
        trajectory,
    })
}

/// Newton iterate with its residual vector, endpoint and residual norm.
type Iterate = (Vec<f64>, Vec<f64>, State, f64);

/// One finite-difference Newton step with step halving.
fn newton_step(
    prob: &BalanceProblem,
    q0: &[f64],
    r: &[f64],
    rn: f64,
) -> Result<Option<Iterate>> {
    let n = q0.len();
    let h = 1e-7 * (1.0 + norm(q0));
    let mut jac = vec![0.0; n * n];
    for j in 0..n {
        let mut qp = q0.to_vec();
        qp[j] += h;
        let (rp, _) = residual_vec(prob, &qp)?;
        for i in 0..n {
            jac[i * n + j] = (rp[i] - r[i]) / h;
        }
    }
    let minus_r: Vec<f64> = r.iter().map(|x| -x).collect();
    let Some(delta) = solve_dense(jac, minus_r) else {
        return Ok(None);
    };
    let mut lambda = 1.0;
    loop {
        let trial: Vec<f64> = q0.iter().zip(&delta).map(|(q, d)| q + lambda * d).collect();
        match residual_vec(prob, &trial) {
            Ok((rt, et)) => {
                let rtn = norm(&rt);
                if rtn < rn || lambda < 1e-3 {
                    return Ok(Some((trial, rt, et, rtn)));
                }
            }
            Err(e) if lambda < 1e-3 => return Err(e),
            Err(_) => {}
        }
        lambda *= 0.5;
    }
}

/// Extra Newton steps taken after the tolerance is met, while each one at
/// least halves the residual.
const POLISH_STEPS: usize = 2;

/// Simple shooting on `q(0)` with a finite-difference Newton iteration and
/// step halving when the residual does not decrease.
pub fn shoot(prob: &BalanceProblem) -> Result<BalanceResult> {
    prob.validate()?;
    let mut q0 = initial_guess(
        &prob.target,
        &prob.ramp,
        prob.horizon,
        prob.potential.as_ref(),
    )?;
    let (mut r, mut end) = residual_vec(prob, &q0)?;
    let mut rn = norm(&r);
    let mut history = vec![rn];
    let mut iterations = 1;
    let mut polished = 0;
    let failure = |iterations: usize, history: &[f64]| Error::Solver {
        iterations,
        best_residual: history.iter().cloned().fold(f64::INFINITY, f64::min),
        history: history.to_vec(),
    };
    loop {
        let converged = rn <= prob.tol;
        if converged {
            if polished == POLISH_STEPS || rn == 0.0 {
                break;
            }
            polished += 1;
        } else if iterations >= prob.max_iter {
            return Err(failure(iterations, &history));
        }
        match newton_step(prob, &q0, &r, rn)? {
            Some((q_new, r_new, end_new, rn_new)) if !converged || rn_new < 0.5 * rn => {
                q0 = q_new;
                r = r_new;
                end = end_new;
                rn = rn_new;
            }
            _ if converged => break,
            _ => return Err(failure(iterations, &history)),
        }
        iterations += 1;
        history.push(rn);
    }
    finish(prob, q0, end, rn, iterations)
}

/// Back-and-forth nudging: integrate forward from `(q0, 0)`, reset
/// `q(T) ← q*`, integrate backward, reset `p(0) ← 0`, repeat.
pub fn nudge(prob: &BalanceProblem) -> Result<BalanceResult> {
    prob.validate()?;
    let system = prob.system();
    let big_t = prob.ramp_time();
    let mut q0 = initial_guess(
        &prob.target,
        &prob.ramp,
        prob.horizon,
        prob.potential.as_ref(),
    )?;
    let mut p_prev = vec![0.0; q0.len()];
    let mut history = Vec::new();
    for sweep in 1..=prob.max_iter {
        let end = prob.forward(&q0)?;
        let reset = State::new(prob.target.clone(), end.p.clone())?;
        let back = integrate_endpoint(&reset, big_t, 0.0, &prob.integrator.backward(), &system)?;
        let q_next: Vec<f64> = q0
            .iter()
            .zip(&back.q)
            .map(|(q, b)| q + prob.relaxation * (b - q))
            .collect();
        let change = (dist(&q_next, &q0).powi(2) + dist(&end.p, &p_prev).powi(2)).sqrt();
        history.push(change);
        if change <= prob.tol {
            return finish(prob, q0, end, change, sweep);
        }
        if !change.is_finite() {
            break;
        }
        q0 = q_next;
        p_prev = end.p;
    }
    Err(Error::Solver {
        iterations: history.len(),
        best_residual: history.iter().cloned().fold(f64::INFINITY, f64::min),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolynomialPotential;

    fn quartic() -> Arc<dyn Potential> {
        Arc::new(PolynomialPotential::quartic_aniso())
    }

    fn problem(eps: f64, ramp: Ramp, v: Arc<dyn Potential>) -> BalanceProblem {
        BalanceProblem::new(vec![1.0, 0.5], SmallParam::new(eps).unwrap(), ramp, 2.0, v).unwrap()
    }

    #[test]
    fn validation() {
        let eps = SmallParam::new(0.1).unwrap();
        assert!(
            BalanceProblem::new(vec![1.0, 0.5], eps, Ramp::Exponential, -1.0, quartic()).is_err()
        );
        assert!(BalanceProblem::new(vec![1.0], eps, Ramp::Exponential, 2.0, quartic()).is_err());
        let mut p = problem(0.1, Ramp::Exponential, quartic());
        p.tol = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn guess_for_zero_potential_is_target() {
        let v = PolynomialPotential::zero(1).unwrap();
        let g = initial_guess(&[0.3, -0.2], &Ramp::Exponential, 2.0, &v).unwrap();
        assert_eq!(g, vec![0.3, -0.2]);
    }

    #[test]
    fn guess_for_harmonic_is_rotation() {
        let v = PolynomialPotential::harmonic(1).unwrap();
        let q = [0.7, -0.4];
        let g = initial_guess(&q, &Ramp::Unity, 1.0, &v).unwrap();
        let (s, c) = 1.0f64.sin_cos();
        let expected = [c * q[0] + s * q[1], -s * q[0] + c * q[1]];
        for i in 0..2 {
            assert!((g[i] - expected[i]).abs() < 1e-10, "{g:?} vs {expected:?}");
        }
    }

    #[test]
    fn dense_solver() {
        let x = solve_dense(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn zero_potential_is_balanced_at_rest() {
        let v: Arc<dyn Potential> = Arc::new(PolynomialPotential::zero(1).unwrap());
        let p = problem(0.1, Ramp::Exponential, Arc::clone(&v));
        let r = shoot(&p).unwrap();
        assert_eq!(r.p_star, vec![0.0, 0.0]);
        assert_eq!(r.q0, p.target);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.residual, 0.0);
        let r = nudge(&p.with_solver(Solver::Nudging)).unwrap();
        assert_eq!(r.p_star, vec![0.0, 0.0]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn shooting_meets_tolerance() {
        let p = problem(1e-2, Ramp::Exponential, quartic());
        let r = shoot(&p).unwrap();
        assert!(r.residual <= 1e-10);
        assert_eq!(r.residual, r.boundary_residual);
        let check = p.forward(&r.q0).unwrap();
        assert_eq!(check.p, r.p_star);
    }

    #[test]
    fn tiny_epsilon_limit() {
        let p = problem(1e-6, Ramp::Exponential, quartic());
        let ramp_steps = p.ramp_time() / p.integrator.dt;
        assert!(ramp_steps > 1e8);
        // too long for the default grid; use a coarse step, the ramp is slow
        let mut p = p;
        p.integrator.dt = 0.1;
        p.integrator.budget = 30_000_000;
        let r = shoot(&p).unwrap();
        assert!(norm(&r.p_star) < 10.0 * 1e-6, "{:?}", r.p_star);
        let guess = initial_guess(&p.target, &p.ramp, p.horizon, p.potential.as_ref()).unwrap();
        // the slow drift over T = a/ε is O(1); q0 approaches the slow-flow guess
        assert!(dist(&r.q0, &guess) < 1e-4);
    }

    #[test]
    fn leading_order_balance() {
        let v = quartic();
        let defect = |eps: f64| {
            let r = shoot(&problem(eps, Ramp::Exponential, Arc::clone(&v))).unwrap();
            let mut g = vec![0.0; 2];
            v.gradient_into(&[1.0, 0.5], &mut g);
            let mut jg = vec![0.0; 2];
            apply_j_into(&g, &mut jg);
            dist(&r.p_star, &jg.iter().map(|x| -eps * x).collect::<Vec<_>>())
        };
        let (a, b) = (defect(2e-2), defect(1e-2));
        let slope = (a / b).log2();
        assert!(slope >= 1.8, "slope {slope}");
    }

    #[test]
    fn nudging_agrees_with_shooting() {
        let p = problem(1e-2, Ramp::Exponential, quartic());
        let s = shoot(&p).unwrap();
        let n = nudge(&p.clone().with_solver(Solver::Nudging)).unwrap();
        assert!(
            dist(&s.p_star, &n.p_star) <= 10.0 * p.tol,
            "{}",
            dist(&s.p_star, &n.p_star)
        );
    }

    #[test]
    fn nudging_contracts_monotonically() {
        let mut p = problem(1e-2, Ramp::Exponential, quartic()).with_solver(Solver::Nudging);
        p.max_iter = 5;
        p.tol = 1e-300;
        match nudge(&p) {
            Err(Error::Solver { history, .. }) => {
                assert_eq!(history.len(), 5);
                assert!(history.windows(2).all(|w| w[1] < w[0]), "{history:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recorded_trajectory_satisfies_boundary_conditions() {
        let mut p = problem(5e-2, Ramp::algebraic(2).unwrap(), quartic());
        p.record_stride = Some(100);
        let r = shoot(&p).unwrap();
        let traj = r.trajectory.unwrap();
        assert_eq!(traj.states[0].p, vec![0.0, 0.0]);
        assert_eq!(traj.last().p, r.p_star);
        assert!(dist(&traj.last().q, &p.target) <= p.tol);
    }

    #[test]
    fn shooting_failure_reports_history() {
        let mut p = problem(1e-1, Ramp::Exponential, quartic());
        p.max_iter = 1;
        match shoot(&p) {
            Err(Error::Solver {
                iterations,
                history,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(history.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
