//! Fixed-step time integration of the full, ramped and slow systems.
//!
//! Two schemes are available. The splitting scheme is the Strang composition
//! `rotate(h/2) ∘ kick(h) ∘ rotate(h/2)`, where `rotate` is the exact flow of
//! `q' = p, p' = Jp` and `kick` applies `p -= h ε ρ ∇V(q)` with the coupling
//! evaluated at the step midpoint. RK4 is the classical four-stage method and
//! is also the only scheme for the slow systems `q' = G_n(q)` and
//! `q' = ε F_n(q, εt)`.
//!
//! An interval `[t0, t1]` is covered by `n = ⌈|t1 - t0| / dt⌉` equal steps,
//! so the final time is hit exactly and a backward pass over the same interval
//! retraces the forward grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Potential, State};
use crate::ramp::Ramp;
use crate::slow::SlowField;

/// Largest admissible step; the fast rotation has unit frequency.
pub const MAX_DT: f64 = 0.1;

/// Default step budget per integration.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Splitting,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "splitting" => Ok(Scheme::Splitting),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}', expected 'splitting' or 'rk4'"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Splitting => write!(f, "splitting"),
            Scheme::Rk4 => write!(f, "rk4"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub direction: Direction,
    /// Record every `stride`-th step; `None` keeps only the endpoints.
    pub stride: Option<usize>,
    pub budget: u64,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Result<Self> {
        let cfg = Self {
            scheme,
            dt,
            direction: Direction::Forward,
            stride: None,
            budget: DEFAULT_BUDGET,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Config(format!(
                "step size must lie in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("sampling stride must be positive".into()));
        }
        Ok(())
    }

    pub fn backward(mut self) -> Self {
        self.direction = Direction::Backward;
        self
    }

    pub fn forward(mut self) -> Self {
        self.direction = Direction::Forward;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = Some(stride);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

/// The vector fields that can be integrated.
#[derive(Debug, Clone)]
pub enum System {
    /// `q' = p, p' = Jp - ε ∇V(q)`.
    Full {
        eps: f64,
        potential: Arc<dyn Potential>,
    },
    /// `q' = p, p' = Jp - ε ρ(t/T) ∇V(q)` on `[0, T]`.
    Ramped {
        eps: f64,
        ramp_time: f64,
        ramp: Ramp,
        potential: Arc<dyn Potential>,
    },
    /// `q' = G_n(q)`; the recorded momentum is `G_n(q)`.
    SlowG { eps: f64, field: SlowField },
    /// `q' = ε F_n(q, εt)` for a ramped field; the recorded momentum is `ε F_n`.
    RampedF { eps: f64, field: SlowField },
}

impl System {
    pub fn id(&self) -> &'static str {
        match self {
            System::Full { .. } => "full",
            System::Ramped { .. } => "ramped",
            System::SlowG { .. } => "slow-G",
            System::RampedF { .. } => "ramped-F",
        }
    }

    pub fn is_slow(&self) -> bool {
        matches!(self, System::SlowG { .. } | System::RampedF { .. })
    }

    /// Strength `ε ρ(t/T)` of the potential force at time `t`.
    fn coupling(&self, t: f64) -> f64 {
        match self {
            System::Full { eps, .. } => *eps,
            System::Ramped {
                eps,
                ramp_time,
                ramp,
                ..
            } => eps * ramp.eval_unchecked((t / ramp_time).clamp(0.0, 1.0)),
            _ => unreachable!("coupling of a slow system"),
        }
    }

    fn potential(&self) -> &dyn Potential {
        match self {
            System::Full { potential, .. } | System::Ramped { potential, .. } => potential.as_ref(),
            System::SlowG { field, .. } | System::RampedF { field, .. } => {
                field.potential().as_ref()
            }
        }
    }

    /// Slow momentum at `(q, t)` for the slow systems.
    fn slow_momentum(&self, q: &[f64], t: f64) -> Result<Vec<f64>> {
        match self {
            System::SlowG { eps, field } => field.eval(q, 0.0, *eps),
            System::RampedF { eps, field } => {
                let horizon = field.schedule().map(|s| s.horizon).unwrap_or(f64::INFINITY);
                let tau = (eps * t).clamp(0.0, horizon);
                let mut f = field.eval(q, tau, *eps)?;
                f.iter_mut().for_each(|x| *x *= eps);
                Ok(f)
            }
            _ => unreachable!("slow momentum of a full system"),
        }
    }

    fn check(&self, s: &State) -> Result<()> {
        let d = self.potential().d();
        if s.q.len() != 2 * d || s.p.len() != 2 * d {
            return Err(Error::Config(format!(
                "state dimension {} does not match potential dimension {}",
                s.q.len(),
                2 * d
            )));
        }
        match self {
            System::Ramped { ramp_time, .. } if !(*ramp_time > 0.0) => {
                Err(Error::Config("ramp time must be positive".into()))
            }
            System::RampedF { field, .. } if field.schedule().is_none() => Err(Error::Config(
                "ramped-F system needs a ramped slow field".into(),
            )),
            System::SlowG { field, .. } if field.schedule().is_some() => Err(Error::Config(
                "slow-G system needs an autonomous slow field".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Samples of an integrated solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub scheme: Scheme,
    /// Actual step length used (signed by direction).
    pub step: f64,
    pub system: &'static str,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }
}

/// Exact flow `exp(Jt) p` of `p' = Jp`.
pub fn rotate_exact(p: &[f64], t: f64) -> Vec<f64> {
    let mut out = p.to_vec();
    let (s, c) = t.sin_cos();
    rotate_in_place(&mut out, c, s);
    out
}

#[inline]
fn rotate_in_place(p: &mut [f64], cos: f64, sin: f64) {
    let d = p.len() / 2;
    for i in 0..d {
        let (a, b) = (p[i], p[i + d]);
        p[i] = cos * a + sin * b;
        p[i + d] = cos * b - sin * a;
    }
}

/// Precomputed exact linear flow over a fixed time `h`:
/// `q ← q + sin(h) p + (1 - cos h) Jp`, `p ← exp(Jh) p`.
#[derive(Debug, Clone, Copy)]
struct LinearFlow {
    sin: f64,
    one_minus_cos: f64,
}

impl LinearFlow {
    fn new(h: f64) -> Self {
        let half = (0.5 * h).sin();
        Self {
            sin: h.sin(),
            one_minus_cos: 2.0 * half * half,
        }
    }

    #[inline]
    fn apply(&self, q: &mut [f64], p: &mut [f64], cq: &mut [f64], cp: &mut [f64]) {
        let d = p.len() / 2;
        for i in 0..d {
            let (a, b) = (p[i], p[i + d]);
            // Jp = (b, -a)
            kahan_add(&mut q[i], &mut cq[i], self.sin * a + self.one_minus_cos * b);
            kahan_add(
                &mut q[i + d],
                &mut cq[i + d],
                self.sin * b - self.one_minus_cos * a,
            );
            kahan_add(&mut p[i], &mut cp[i], self.sin * b - self.one_minus_cos * a);
            kahan_add(
                &mut p[i + d],
                &mut cp[i + d],
                -self.sin * a - self.one_minus_cos * b,
            );
        }
    }
}

/// Compensated accumulation `x += inc`, carrying the lost low-order bits in `comp`.
#[inline]
fn kahan_add(x: &mut f64, comp: &mut f64, inc: f64) {
    let y = inc - *comp;
    let t = *x + y;
    *comp = (t - *x) - y;
    *x = t;
}

/// Reusable scratch buffers for one integration.
struct Stepper<'a> {
    system: &'a System,
    scheme: Scheme,
    flow: Option<(f64, LinearFlow)>,
    grad: Vec<f64>,
    k: [Vec<f64>; 8],
    tmp_q: Vec<f64>,
    tmp_p: Vec<f64>,
    comp_q: Vec<f64>,
    comp_p: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(system: &'a System, scheme: Scheme, n: usize) -> Result<Self> {
        if scheme == Scheme::Splitting && system.is_slow() {
            return Err(Error::Config(format!(
                "the splitting scheme needs the fast rotation; use rk4 for the {} system",
                system.id()
            )));
        }
        let z = || vec![0.0; n];
        Ok(Self {
            system,
            scheme,
            flow: None,
            grad: z(),
            k: [z(), z(), z(), z(), z(), z(), z(), z()],
            tmp_q: z(),
            tmp_p: z(),
            comp_q: z(),
            comp_p: z(),
        })
    }

    fn step(&mut self, t: f64, h: f64, q: &mut [f64], p: &mut [f64]) -> Result<()> {
        match (self.scheme, self.system.is_slow()) {
            (Scheme::Splitting, _) => self.splitting(t, h, q, p),
            (Scheme::Rk4, false) => self.rk4_full(t, h, q, p),
            (Scheme::Rk4, true) => self.rk4_slow(t, h, q, p)?,
        }
        if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Integration {
                t: t + h,
                q: q.to_vec(),
                p: p.to_vec(),
            });
        }
        Ok(())
    }

    fn splitting(&mut self, t: f64, h: f64, q: &mut [f64], p: &mut [f64]) {
        let half = match self.flow {
            Some((cached, flow)) if cached == h => flow,
            _ => {
                let flow = LinearFlow::new(0.5 * h);
                self.flow = Some((h, flow));
                flow
            }
        };
        let (cq, cp) = (&mut self.comp_q, &mut self.comp_p);
        half.apply(q, p, cq, cp);
        let c = self.system.coupling(t + 0.5 * h);
        self.system.potential().gradient_into(q, &mut self.grad);
        for ((pi, ci), g) in p.iter_mut().zip(cp.iter_mut()).zip(&self.grad) {
            kahan_add(pi, ci, -h * c * g);
        }
        half.apply(q, p, cq, cp);
    }

    fn rk4_full(&mut self, t: f64, h: f64, q: &mut [f64], p: &mut [f64]) {
        let n = q.len();
        let sys = self.system;
        let [k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p] = &mut self.k;
        let (tq, tp, grad) = (&mut self.tmp_q, &mut self.tmp_p, &mut self.grad);
        full_rhs(sys, t, q, p, grad, k1q, k1p);
        for i in 0..n {
            tq[i] = q[i] + 0.5 * h * k1q[i];
            tp[i] = p[i] + 0.5 * h * k1p[i];
        }
        full_rhs(sys, t + 0.5 * h, tq, tp, grad, k2q, k2p);
        for i in 0..n {
            tq[i] = q[i] + 0.5 * h * k2q[i];
            tp[i] = p[i] + 0.5 * h * k2p[i];
        }
        full_rhs(sys, t + 0.5 * h, tq, tp, grad, k3q, k3p);
        for i in 0..n {
            tq[i] = q[i] + h * k3q[i];
            tp[i] = p[i] + h * k3p[i];
        }
        full_rhs(sys, t + h, tq, tp, grad, k4q, k4p);
        let w = h / 6.0;
        for i in 0..n {
            kahan_add(
                &mut q[i],
                &mut self.comp_q[i],
                w * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]),
            );
            kahan_add(
                &mut p[i],
                &mut self.comp_p[i],
                w * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]),
            );
        }
    }

    fn rk4_slow(&mut self, t: f64, h: f64, q: &mut [f64], p: &mut [f64]) -> Result<()> {
        let sys = self.system;
        let k1 = sys.slow_momentum(q, t)?;
        let y2: Vec<f64> = q.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
        let k2 = sys.slow_momentum(&y2, t + 0.5 * h)?;
        let y3: Vec<f64> = q.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
        let k3 = sys.slow_momentum(&y3, t + 0.5 * h)?;
        let y4: Vec<f64> = q.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
        let k4 = sys.slow_momentum(&y4, t + h)?;
        for i in 0..q.len() {
            kahan_add(
                &mut q[i],
                &mut self.comp_q[i],
                h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]),
            );
        }
        let momentum = sys.slow_momentum(q, t + h)?;
        p.copy_from_slice(&momentum);
        Ok(())
    }
}

/// `(dq, dp) = (p, Jp - c ∇V(q))`.
#[inline]
fn full_rhs(
    sys: &System,
    t: f64,
    q: &[f64],
    p: &[f64],
    grad: &mut [f64],
    dq: &mut [f64],
    dp: &mut [f64],
) {
    let c = sys.coupling(t);
    sys.potential().gradient_into(q, grad);
    let d = p.len() / 2;
    dq.copy_from_slice(p);
    for i in 0..d {
        dp[i] = p[i + d] - c * grad[i];
        dp[i + d] = -p[i] - c * grad[i + d];
    }
}

/// One step of length `h` (negative for backward) from time `t`.
pub fn step(s: &State, t: f64, h: f64, scheme: Scheme, system: &System) -> Result<State> {
    system.check(s)?;
    let mut stepper = Stepper::new(system, scheme, s.q.len())?;
    let (mut q, mut p) = (s.q.clone(), s.p.clone());
    stepper.step(t, h, &mut q, &mut p)?;
    Ok(State { q, p })
}

/// Number of equal steps covering `span` with steps no longer than `dt`.
pub fn step_count(span: f64, dt: f64) -> u64 {
    let ratio = span.abs() / dt;
    // tolerate rounding when span is an exact multiple of dt
    ((ratio * (1.0 - 1e-12)).ceil() as u64).max(1)
}

/// Integrates from `t0` to `t1`, calling `observe(t, q, p)` after every step
/// (and once at `t0`).
pub fn integrate_observed<F>(
    s0: &State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    system: &System,
    mut observe: F,
) -> Result<State>
where
    F: FnMut(f64, &[f64], &[f64]),
{
    cfg.validate()?;
    system.check(s0)?;
    let span = t1 - t0;
    match cfg.direction {
        Direction::Forward if span < 0.0 => {
            return Err(Error::Config(format!(
                "forward integration needs t1 >= t0, got [{t0}, {t1}]"
            )))
        }
        Direction::Backward if span > 0.0 => {
            return Err(Error::Config(format!(
                "backward integration needs t1 <= t0, got [{t0}, {t1}]"
            )))
        }
        _ => {}
    }
    let (mut q, mut p) = (s0.q.clone(), s0.p.clone());
    if system.is_slow() {
        p = system.slow_momentum(&q, t0)?;
    }
    observe(t0, &q, &p);
    if span == 0.0 {
        return Ok(State { q, p });
    }
    let n = step_count(span, cfg.dt);
    if n > cfg.budget {
        return Err(Error::Budget {
            needed: n,
            budget: cfg.budget,
        });
    }
    let h = span / n as f64;
    let mut stepper = Stepper::new(system, cfg.scheme, q.len())?;
    for k in 0..n {
        let t = t0 + k as f64 * h;
        stepper.step(t, h, &mut q, &mut p)?;
        let t_next = if k + 1 == n {
            t1
        } else {
            t0 + (k + 1) as f64 * h
        };
        observe(t_next, &q, &p);
    }
    Ok(State { q, p })
}

/// Integrates from `t0` to `t1` and returns the sampled trajectory.
pub fn integrate(
    s0: &State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    system: &System,
) -> Result<Trajectory> {
    let n = if t1 == t0 {
        0
    } else {
        step_count(t1 - t0, cfg.dt)
    };
    let h = if n == 0 { 0.0 } else { (t1 - t0) / n as f64 };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut count = 0u64;
    let stride = cfg.stride.map(|s| s as u64);
    integrate_observed(s0, t0, t1, cfg, system, |t, q, p| {
        let keep = count == 0 || count == n || stride.is_some_and(|s| count.is_multiple_of(s));
        if keep {
            times.push(t);
            states.push(State {
                q: q.to_vec(),
                p: p.to_vec(),
            });
        }
        count += 1;
    })?;
    Ok(Trajectory {
        times,
        states,
        scheme: cfg.scheme,
        step: h,
        system: system.id(),
    })
}

/// Largest step `start / 2^j ≥ min_dt` whose endpoint differs from that of the
/// halved step by at most `target`.
pub fn calibrate_step(
    s0: &State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    system: &System,
    target: f64,
    min_dt: f64,
) -> Result<f64> {
    if !(target > 0.0 && min_dt > 0.0) {
        return Err(Error::Config(
            "calibration target and minimum step must be positive".into(),
        ));
    }
    let mut trial = *cfg;
    let mut coarse = integrate_endpoint(s0, t0, t1, &trial, system)?;
    loop {
        let dt = trial.dt;
        if 0.5 * dt < min_dt {
            return Err(Error::Config(format!(
                "step calibration did not reach {target:e} above the minimum step {min_dt:e}"
            )));
        }
        trial.dt = 0.5 * dt;
        let fine = integrate_endpoint(s0, t0, t1, &trial, system)?;
        if coarse.distance(&fine) <= target {
            return Ok(dt);
        }
        coarse = fine;
    }
}

/// Endpoint of an integration without storing samples.
pub fn integrate_endpoint(
    s0: &State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    system: &System,
) -> Result<State> {
    integrate_observed(s0, t0, t1, cfg, system, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_j, energy, PolynomialPotential};
    use std::f64::consts::PI;

    fn quartic() -> Arc<dyn Potential> {
        Arc::new(PolynomialPotential::quartic_aniso())
    }

    fn zero() -> Arc<dyn Potential> {
        Arc::new(PolynomialPotential::zero(1).unwrap())
    }

    #[test]
    fn rotation_examples() {
        let r = rotate_exact(&[1.0, 0.0], PI / 2.0);
        assert!(r[0].abs() < 1e-16 && (r[1] + 1.0).abs() < 1e-16);
        let p = [0.3, -0.7, 1.1, 0.2];
        assert_eq!(rotate_exact(&p, 0.0), p.to_vec());
        let back = rotate_exact(&rotate_exact(&p, 1.234), -1.234);
        for (a, b) in back.iter().zip(&p) {
            assert!((a - b).abs() < 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.2).is_err());
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.0).is_err());
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.1).is_ok());
        let cfg = IntegratorConfig::new(Scheme::Rk4, 0.01).unwrap();
        let s = State::at_rest(vec![1.0, 0.0]).unwrap();
        let sys = System::Full {
            eps: 0.1,
            potential: quartic(),
        };
        assert!(integrate(&s, 1.0, 0.0, &cfg, &sys).is_err());
        assert!(integrate(&s, 0.0, 1.0, &cfg.backward(), &sys).is_err());
        let tight = cfg.with_budget(10);
        assert!(matches!(
            integrate(&s, 0.0, 1.0, &tight, &sys),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn zero_length_interval() {
        let cfg = IntegratorConfig::new(Scheme::Splitting, 0.01).unwrap();
        let s = State::new(vec![1.0, 0.0], vec![0.1, 0.2]).unwrap();
        let sys = System::Full {
            eps: 0.1,
            potential: quartic(),
        };
        let traj = integrate(&s, 3.0, 3.0, &cfg, &sys).unwrap();
        assert_eq!(traj.states, vec![s]);
        assert_eq!(traj.times, vec![3.0]);
    }

    #[test]
    fn splitting_is_exact_for_free_motion() {
        let sys = System::Full {
            eps: 0.1,
            potential: zero(),
        };
        let s0 = State::new(vec![0.2, -0.4], vec![1.0, 0.5]).unwrap();
        let t = 7.3;
        let cfg = IntegratorConfig::new(Scheme::Splitting, 0.1).unwrap();
        let end = integrate_endpoint(&s0, 0.0, t, &cfg, &sys).unwrap();
        let p_exact = rotate_exact(&s0.p, t);
        // q(t) = q0 + J^{-1}(exp(Jt) - I) p0 and J^{-1} = -J
        let diff: Vec<f64> = p_exact.iter().zip(&s0.p).map(|(a, b)| a - b).collect();
        let jd = apply_j(&diff).unwrap();
        let q_exact: Vec<f64> = s0.q.iter().zip(&jd).map(|(q, x)| q - x).collect();
        for i in 0..2 {
            assert!((end.p[i] - p_exact[i]).abs() < 1e-13);
            assert!((end.q[i] - q_exact[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn splitting_step_is_reversible_for_free_motion() {
        let sys = System::Full {
            eps: 0.1,
            potential: zero(),
        };
        let s0 = State::new(vec![0.2, -0.4], vec![1.0, 0.5]).unwrap();
        let fwd = step(&s0, 0.0, 0.05, Scheme::Splitting, &sys).unwrap();
        let back = step(&fwd, 0.05, -0.05, Scheme::Splitting, &sys).unwrap();
        assert!(back.distance(&s0) <= 10.0 * f64::EPSILON);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let sys = System::Full {
            eps: 0.3,
            potential: quartic(),
        };
        let s0 = State::new(vec![0.9, 0.4], vec![0.1, -0.2]).unwrap();
        let reference = |h: f64| {
            let cfg = IntegratorConfig::new(Scheme::Rk4, h / 64.0).unwrap();
            integrate_endpoint(&s0, 0.0, h, &cfg, &sys).unwrap()
        };
        let errors: Vec<f64> = [0.08, 0.04]
            .iter()
            .map(|&h| {
                step(&s0, 0.0, h, Scheme::Rk4, &sys)
                    .unwrap()
                    .distance(&reference(h))
            })
            .collect();
        let slope = (errors[0] / errors[1]).log2();
        assert!((slope - 5.0).abs() <= 0.3, "slope {slope}");
    }

    fn global_error_slope(scheme: Scheme, dts: [f64; 2]) -> f64 {
        let sys = System::Ramped {
            eps: 0.2,
            ramp_time: 20.0,
            ramp: Ramp::Exponential,
            potential: quartic(),
        };
        let s0 = State::new(vec![1.0, 0.5], vec![0.05, -0.1]).unwrap();
        let run = |dt: f64| {
            let cfg = IntegratorConfig::new(scheme, dt).unwrap();
            integrate_endpoint(&s0, 0.0, 20.0, &cfg, &sys).unwrap()
        };
        let e1 = run(dts[0]).distance(&run(dts[0] / 16.0));
        let e2 = run(dts[1]).distance(&run(dts[1] / 16.0));
        (e1 / e2).ln() / (dts[0] / dts[1]).ln()
    }

    #[test]
    fn global_convergence_orders() {
        let rk4 = global_error_slope(Scheme::Rk4, [0.1, 0.05]);
        assert!((rk4 - 4.0).abs() <= 0.3, "rk4 slope {rk4}");
        let split = global_error_slope(Scheme::Splitting, [0.1, 0.05]);
        assert!((split - 2.0).abs() <= 0.3, "splitting slope {split}");
    }

    #[test]
    fn energy_drift_of_full_system() {
        let eps = 0.1;
        let sys = System::Full {
            eps,
            potential: quartic(),
        };
        let s0 = State::new(vec![1.0, 0.5], vec![0.05, -0.1]).unwrap();
        let e0 = energy(&s0, eps, quartic().as_ref()).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Rk4, 1e-3).unwrap();
        let mut drift = 0.0f64;
        integrate_observed(&s0, 0.0, 2.0 / eps, &cfg, &sys, |_, q, p| {
            let s = State {
                q: q.to_vec(),
                p: p.to_vec(),
            };
            drift = drift.max((energy(&s, eps, quartic().as_ref()).unwrap() - e0).abs());
        })
        .unwrap();
        assert!(drift <= 1e-8, "drift {drift}");
    }

    #[test]
    fn energy_drift_improves_under_halving() {
        let eps = 0.1;
        let v = quartic();
        let sys = System::Full {
            eps,
            potential: Arc::clone(&v),
        };
        let s0 = State::new(vec![1.0, 0.5], vec![0.05, -0.1]).unwrap();
        let e0 = energy(&s0, eps, v.as_ref()).unwrap();
        for scheme in [Scheme::Rk4, Scheme::Splitting] {
            let drift = |dt: f64| {
                let cfg = IntegratorConfig::new(scheme, dt).unwrap();
                let end = integrate_endpoint(&s0, 0.0, 10.0, &cfg, &sys).unwrap();
                (energy(&end, eps, v.as_ref()).unwrap() - e0).abs()
            };
            let (a, b, c) = (drift(0.1), drift(0.05), drift(0.025));
            assert!(a > b && b > c, "{scheme}: {a} {b} {c}");
        }
    }

    #[test]
    fn slow_flow_conserves_potential_in_the_limit() {
        let v = quartic();
        let field = SlowField::autonomous(0, Arc::clone(&v)).unwrap();
        let sys = System::SlowG { eps: 0.1, field };
        let s0 = State::at_rest(vec![1.0, 0.5]).unwrap();
        let v0 = v.value(&s0.q);
        let drift = |dt: f64| {
            let cfg = IntegratorConfig::new(Scheme::Rk4, dt).unwrap();
            let end = integrate_endpoint(&s0, 0.0, 20.0, &cfg, &sys).unwrap();
            (v.value(&end.q) - v0).abs()
        };
        let (a, b) = (drift(0.1), drift(0.05));
        assert!(b < a && b < 1e-6, "{a} {b}");
        assert!(integrate_endpoint(
            &s0,
            0.0,
            1.0,
            &IntegratorConfig::new(Scheme::Splitting, 0.1).unwrap(),
            &sys
        )
        .is_err());
    }

    #[test]
    fn schemes_agree_on_ramped_system() {
        let eps = 1e-2;
        let sys = System::Ramped {
            eps,
            ramp_time: 2.0 / eps,
            ramp: Ramp::Exponential,
            potential: quartic(),
        };
        let s0 = State::at_rest(vec![1.0, 0.5]).unwrap();
        let run = |scheme| {
            let cfg = IntegratorConfig::new(scheme, 1e-3).unwrap();
            integrate_endpoint(&s0, 0.0, 2.0 / eps, &cfg, &sys).unwrap()
        };
        let (a, b) = (run(Scheme::Splitting), run(Scheme::Rk4));
        let scale = (a.q.iter().chain(&a.p).map(|x| x * x).sum::<f64>()).sqrt();
        assert!(a.distance(&b) <= 1e-6 * scale, "{}", a.distance(&b));
    }

    #[test]
    fn forward_backward_round_trip() {
        let eps = 1e-2;
        let horizon = 2.0 / eps;
        let sys = System::Ramped {
            eps,
            ramp_time: horizon,
            ramp: Ramp::Exponential,
            potential: quartic(),
        };
        let s0 = State::at_rest(vec![1.0, 0.5]).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Splitting, 0.01).unwrap();
        let end = integrate_endpoint(&s0, 0.0, horizon, &cfg, &sys).unwrap();
        let back = integrate_endpoint(&end, horizon, 0.0, &cfg.backward(), &sys).unwrap();
        assert!(back.distance(&s0) <= 1e-9, "{}", back.distance(&s0));
    }

    #[test]
    fn calibration_halves_until_converged() {
        let eps = 1e-2;
        let sys = System::Ramped {
            eps,
            ramp_time: 2.0 / eps,
            ramp: Ramp::Exponential,
            potential: quartic(),
        };
        let s0 = State::at_rest(vec![1.0, 0.5]).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Rk4, 0.08).unwrap();
        let dt = calibrate_step(&s0, 0.0, 2.0 / eps, &cfg, &sys, 1e-13, 1e-4).unwrap();
        assert!(dt < 0.08);
        let run = |h: f64| {
            integrate_endpoint(
                &s0,
                0.0,
                2.0 / eps,
                &IntegratorConfig { dt: h, ..cfg },
                &sys,
            )
            .unwrap()
        };
        assert!(run(dt).distance(&run(0.5 * dt)) <= 1e-13);
        assert!(run(2.0 * dt).distance(&run(dt)) > 1e-13);
        assert!(calibrate_step(&s0, 0.0, 2.0 / eps, &cfg, &sys, 1e-30, 0.01).is_err());
    }

    #[test]
    fn trajectory_sampling() {
        let sys = System::Full {
            eps: 0.1,
            potential: quartic(),
        };
        let s0 = State::at_rest(vec![1.0, 0.5]).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Rk4, 0.1)
            .unwrap()
            .with_stride(3);
        let traj = integrate(&s0, 0.0, 1.0, &cfg, &sys).unwrap();
        assert_eq!(
            traj.times,
            vec![0.0, 0.30000000000000004, 0.6000000000000001, 0.9, 1.0]
        );
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        let back = integrate(traj.last(), 1.0, 0.0, &cfg.backward(), &sys).unwrap();
        assert!(back.times.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*back.times.last().unwrap(), 0.0);
    }
}
