//! Diagnosed imbalance, ε-sweeps, rate fits and the slow-flow convergence
//! experiment.
//!
//! The diagnosed imbalance of a target `q*` is obtained by balancing `q*`,
//! evolving the full system from `(q*, p*)` up to `t₁ = t1_slow/ε`, balancing
//! the evolved position `q₁* = q(t₁)` again and setting
//! `I = ε⁻¹ ‖p(t₁) - p₁*‖`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::balance::{BalanceProblem, ProblemTemplate};
use crate::error::{Error, Result};
use crate::integrate::{integrate_observed, IntegratorConfig, Scheme, System, MAX_DT};
use crate::model::{dist, Potential, SmallParam, State};
use crate::slow::SlowField;

/// Default slow time `ε t₁` of the evolution step.
pub const DEFAULT_T1_SLOW: f64 = 0.5;

/// Default target position.
pub const DEFAULT_TARGET: [f64; 2] = [1.0, 0.5];

/// Imbalances at or below this level are indistinguishable from round-off in
/// double precision and are left out of rate fits by default.
pub const RESOLUTION_FLOOR: f64 = 1e-13;

/// Minimum number of points in a fit.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Ok,
    /// The stage that failed (`initial`, `evolve` or `rebalance`) and why.
    Failed {
        stage: &'static str,
        reason: String,
    },
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordStatus::Ok => write!(f, "ok"),
            RecordStatus::Failed { stage, .. } => write!(f, "failed:{stage}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceRecord {
    pub eps: f64,
    pub ramp: String,
    pub horizon: f64,
    pub t1_slow: f64,
    /// `NaN` when the record failed.
    pub imbalance: f64,
    pub residual_initial: f64,
    pub residual_rebalance: f64,
    pub iters_initial: usize,
    pub iters_rebalance: usize,
    pub status: RecordStatus,
}

impl ImbalanceRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// Runs the four-step protocol for `prob.target`.
pub fn diagnosed_imbalance(prob: &BalanceProblem, t1_slow: f64) -> Result<ImbalanceRecord> {
    if !(t1_slow > 0.0 && t1_slow.is_finite()) {
        return Err(Error::Config(format!(
            "t1_slow must be positive, got {t1_slow}"
        )));
    }
    prob.validate()?;
    let eps = prob.eps.get();
    let mut record = ImbalanceRecord {
        eps,
        ramp: prob.ramp.id(),
        horizon: prob.horizon,
        t1_slow,
        imbalance: f64::NAN,
        residual_initial: f64::NAN,
        residual_rebalance: f64::NAN,
        iters_initial: 0,
        iters_rebalance: 0,
        status: RecordStatus::Ok,
    };
    let fail = |mut record: ImbalanceRecord, stage, err: Error| {
        if let Error::Solver {
            iterations,
            best_residual,
            ..
        } = &err
        {
            match stage {
                "initial" => {
                    record.iters_initial = *iterations;
                    record.residual_initial = *best_residual;
                }
                _ => {
                    record.iters_rebalance = *iterations;
                    record.residual_rebalance = *best_residual;
                }
            }
        }
        record.status = RecordStatus::Failed {
            stage,
            reason: err.to_string(),
        };
        Ok(record)
    };

    let first = match prob.solve() {
        Ok(r) => r,
        Err(e) => return fail(record, "initial", e),
    };
    record.residual_initial = first.residual;
    record.iters_initial = first.iterations;

    let start = State::new(prob.target.clone(), first.p_star)?;
    let full = System::Full {
        eps,
        potential: Arc::clone(&prob.potential),
    };
    let evolved = match integrate_observed(
        &start,
        0.0,
        t1_slow / eps,
        &prob.integrator.forward(),
        &full,
        |_, _, _| {},
    ) {
        Ok(s) => s,
        Err(e) => return fail(record, "evolve", e),
    };

    let second = match prob.clone().with_target(evolved.q.clone()).solve() {
        Ok(r) => r,
        Err(e) => return fail(record, "rebalance", e),
    };
    record.residual_rebalance = second.residual;
    record.iters_rebalance = second.iterations;
    record.imbalance = dist(&evolved.p, &second.p_star) / eps;
    Ok(record)
}

/// Diagnosed imbalance for every `ε` in `eps_list` (positive, descending).
/// Failures are recorded in the returned records; output order follows the
/// input. Runs on the current rayon pool.
pub fn sweep(
    eps_list: &[f64],
    template: &ProblemTemplate,
    t1_slow: f64,
) -> Result<Vec<ImbalanceRecord>> {
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("epsilon values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "epsilon values must be strictly descending".into(),
        ));
    }
    if !(t1_slow > 0.0 && t1_slow.is_finite()) {
        return Err(Error::Config(format!(
            "t1_slow must be positive, got {t1_slow}"
        )));
    }
    Ok(eps_list
        .par_iter()
        .map(|&eps| {
            let failed = |reason: String| ImbalanceRecord {
                eps,
                ramp: template.ramp.id(),
                horizon: template.horizon,
                t1_slow,
                imbalance: f64::NAN,
                residual_initial: f64::NAN,
                residual_rebalance: f64::NAN,
                iters_initial: 0,
                iters_rebalance: 0,
                status: RecordStatus::Failed {
                    stage: "setup",
                    reason,
                },
            };
            match template.instantiate(eps) {
                Ok(prob) => {
                    diagnosed_imbalance(&prob, t1_slow).unwrap_or_else(|e| failed(e.to_string()))
                }
                Err(e) => failed(e.to_string()),
            }
        })
        .collect())
}

/// `n` values log-spaced from `hi` down to `lo`, endpoints included.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("invalid grid bounds [{lo}, {hi}]")));
    }
    Ok(match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (hi.log10(), lo.log10());
            (0..n)
                .map(|i| match i {
                    0 => hi,
                    i if i == n - 1 => lo,
                    i => 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64),
                })
                .collect()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `ln I = slope · ln ε + b`.
    AlgebraicSlope,
    /// `ln(ln d - ln I) = ln c - α ln ε`.
    ExponentialAlpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    /// Fitted slope of the linear model in `ln ε`.
    pub slope: f64,
    pub intercept: f64,
    /// `-slope` for the exponential model.
    pub alpha: Option<f64>,
    pub ln_c: Option<f64>,
    pub d: Option<f64>,
    /// ε bounds of the points used.
    pub window: (f64, f64),
    pub n_points: usize,
    /// Points inside the window dropped for lying at or below the floor.
    pub n_below_floor: usize,
    pub residual_norm: f64,
    /// α for other choices of `d`, as `(d, α)`.
    pub sensitivity: Vec<(f64, f64)>,
}

/// Least squares line through `(x, y)`: `(slope, intercept, residual_norm)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Data(
            "a line fit needs at least two paired points".into(),
        ));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("a line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = x
        .iter()
        .zip(y)
        .map(|(u, v)| (v - intercept - slope * u).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((slope, intercept, res))
}

fn in_window(eps: f64, window: Option<(f64, f64)>) -> bool {
    // relative slack so that grid points on the bounds are kept
    window.is_none_or(|(lo, hi)| eps >= lo * (1.0 - 1e-9) && eps <= hi * (1.0 + 1e-9))
}

fn window_of(points: &[(f64, f64)]) -> (f64, f64) {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Slope of `ln I` against `ln ε` over the `(ε, I)` points inside `window`.
pub fn fit_order(points: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<FitResult> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| in_window(p.0, window))
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::Data(format!(
            "order fit needs at least {MIN_FIT_POINTS} points in the window, got {}",
            used.len()
        )));
    }
    if let Some(bad) = used.iter().find(|p| !(p.1 > 0.0) || !(p.0 > 0.0)) {
        return Err(Error::Domain(format!(
            "order fit needs positive ε and I, got ε = {}, I = {}",
            bad.0, bad.1
        )));
    }
    let x: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, residual_norm) = linear_fit(&x, &y)?;
    Ok(FitResult {
        model: FitModel::AlgebraicSlope,
        slope,
        intercept,
        alpha: None,
        ln_c: None,
        d: None,
        window: window_of(&used),
        n_points: used.len(),
        n_below_floor: 0,
        residual_norm,
        sensitivity: Vec::new(),
    })
}

fn alpha_line(used: &[(f64, f64)], d: f64) -> Result<(f64, f64, f64)> {
    if let Some(bad) = used.iter().find(|p| !(p.1 < d)) {
        return Err(Error::Domain(format!(
            "I = {} at ε = {} is not below d = {d}; choose a larger d",
            bad.1, bad.0
        )));
    }
    let x: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| (d.ln() - p.1.ln()).ln()).collect();
    linear_fit(&x, &y)
}

/// Fit of `ln(ln d - ln I) = ln c - α ln ε` over the points inside `window`
/// whose imbalance exceeds `floor`. The result also lists α for `d/10` and
/// `10 d` where those fits are defined.
pub fn fit_alpha(
    points: &[(f64, f64)],
    window: Option<(f64, f64)>,
    d: f64,
    floor: f64,
) -> Result<FitResult> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("d must be positive, got {d}")));
    }
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| in_window(p.0, window))
        .collect();
    if let Some(bad) = inside.iter().find(|p| !(p.0 > 0.0) || !(p.1 >= 0.0)) {
        return Err(Error::Domain(format!(
            "exponential fit needs positive ε and non-negative I, got ε = {}, I = {}",
            bad.0, bad.1
        )));
    }
    let used: Vec<(f64, f64)> = inside
        .iter()
        .copied()
        .filter(|p| p.1 > floor && p.1 > 0.0)
        .collect();
    let n_below_floor = inside.len() - used.len();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::Data(format!(
            "exponential fit needs at least {MIN_FIT_POINTS} points above the floor {floor:e} in the window, got {} ({} below)",
            used.len(),
            n_below_floor
        )));
    }
    let (slope, intercept, residual_norm) = alpha_line(&used, d)?;
    let sensitivity = [0.1 * d, 10.0 * d]
        .iter()
        .filter_map(|&dd| alpha_line(&used, dd).ok().map(|(s, _, _)| (dd, -s)))
        .collect();
    Ok(FitResult {
        model: FitModel::ExponentialAlpha,
        slope,
        intercept,
        alpha: Some(-slope),
        ln_c: Some(intercept),
        d: Some(d),
        window: window_of(&used),
        n_points: used.len(),
        n_below_floor,
        residual_norm,
        sensitivity,
    })
}

/// Successful records as `(ε, I)` points.
pub fn points(records: &[ImbalanceRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.eps, r.imbalance))
        .collect()
}

/// Second divided differences of `ln I` with respect to `ln ε` at the interior
/// points of a grid sorted by `ε`.
pub fn second_differences(points: &[(f64, f64)]) -> Result<Vec<f64>> {
    if points.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::Domain(
            "log-log curvature needs positive ε and I".into(),
        ));
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts
        .windows(3)
        .map(|w| {
            let d1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let d2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            2.0 * (d2 - d1) / (w[2].0 - w[0].0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub order: usize,
    /// `(ε, sup_t ‖q_ε(t) - q(t)‖)`.
    pub errors: Vec<(f64, f64)>,
    pub fit: Option<FitResult>,
}

/// Steps of the full system per slow-system step in [`slow_flow_error`].
const FULL_SUBSTEPS: usize = 20;

/// `sup_{t ∈ [0, a/ε]} ‖q_ε(t) - q(t)‖` between the full system started at
/// `(q0, G_n(q0))` and the slow flow `q' = G_n(q)` from `q0`, compared on the
/// slow grid of step at most `0.1`.
pub fn slow_flow_error(
    n: usize,
    eps: f64,
    q0: &[f64],
    horizon: f64,
    potential: Arc<dyn Potential>,
) -> Result<f64> {
    let eps = SmallParam::new(eps)?.get();
    if !(horizon > 0.0) {
        return Err(Error::Config(format!(
            "slow horizon a must be positive, got {horizon}"
        )));
    }
    let field = SlowField::autonomous(n, Arc::clone(&potential))?;
    let p0 = field.eval(q0, 0.0, eps)?;
    let big_t = horizon / eps;
    let steps = crate::integrate::step_count(big_t, MAX_DT);
    let h_slow = big_t / steps as f64;

    let slow = System::SlowG { eps, field };
    let slow_cfg = IntegratorConfig::new(Scheme::Rk4, h_slow)?.with_budget(u64::MAX);
    let mut slow_q = Vec::with_capacity(steps as usize + 1);
    integrate_observed(
        &State::at_rest(q0.to_vec())?,
        0.0,
        big_t,
        &slow_cfg,
        &slow,
        |_, q, _| slow_q.push(q.to_vec()),
    )?;

    let full = System::Full { eps, potential };
    let full_cfg =
        IntegratorConfig::new(Scheme::Rk4, h_slow / FULL_SUBSTEPS as f64)?.with_budget(u64::MAX);
    let mut sup = 0.0f64;
    let mut k = 0usize;
    integrate_observed(
        &State::new(q0.to_vec(), p0)?,
        0.0,
        big_t,
        &full_cfg,
        &full,
        |_, q, _| {
            if k.is_multiple_of(FULL_SUBSTEPS) {
                sup = sup.max(dist(q, &slow_q[k / FULL_SUBSTEPS]));
            }
            k += 1;
        },
    )?;
    debug_assert_eq!(k - 1, FULL_SUBSTEPS * (slow_q.len() - 1));
    Ok(sup)
}

/// Runs [`slow_flow_error`] for each `ε` and fits the slope of the sup-error.
/// The fit is omitted when fewer than four errors are positive.
pub fn verify_theorem1(
    n: usize,
    eps_list: &[f64],
    q0: &[f64],
    horizon: f64,
    potential: Arc<dyn Potential>,
) -> Result<Theorem1Report> {
    if n > 2 {
        return Err(Error::Config(format!(
            "slow-flow convergence is checked for n <= 2, got {n}"
        )));
    }
    let errors = eps_list
        .par_iter()
        .map(|&eps| slow_flow_error(n, eps, q0, horizon, Arc::clone(&potential)).map(|e| (eps, e)))
        .collect::<Result<Vec<_>>>()?;
    let positive = errors.iter().filter(|e| e.1 > 0.0).count();
    let fit = if positive >= MIN_FIT_POINTS && positive == errors.len() {
        Some(fit_order(&errors, None)?)
    } else {
        None
    };
    Ok(Theorem1Report {
        order: n,
        errors,
        fit,
    })
}
