//! TOML run configuration. Every table rejects unknown keys, and the whole
//! file is checked by [`RunConfig::validate`] before any computation starts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use optimal_balance::balance::{
    ProblemTemplate, Solver, StepPolicy, DEFAULT_CALIBRATION_TARGET, DEFAULT_TOL,
};
use optimal_balance::diagnostics::{log_grid, DEFAULT_T1_SLOW, DEFAULT_TARGET};
use optimal_balance::integrate::{Scheme, DEFAULT_BUDGET};
use optimal_balance::model::Monomial;
use optimal_balance::{PolynomialPotential, Potential, Ramp};

use crate::failure::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Default output path of `sweep` and of the `balance` trajectory.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `quartic-aniso`, `harmonic`, `zero` or `polynomial`.
    #[serde(default = "default_potential")]
    pub name: String,
    pub d: Option<usize>,
    /// Monomials of a `polynomial` potential.
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "default_target")]
    pub target: Vec<f64>,
    #[serde(default = "default_ramp")]
    pub ramp: String,
    #[serde(default = "default_a")]
    pub a: f64,
    /// `ε` of a single `balance` run.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    #[serde(default = "default_relaxation")]
    pub relaxation: f64,
    /// Sampling stride of the `balance` trajectory CSV.
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Fixed step; when absent the step is calibrated per problem.
    pub dt: Option<f64>,
    #[serde(default = "default_calibration")]
    pub calibration_target: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Ramp ids; defaults to `problem.ramp`.
    pub ramps: Option<Vec<String>>,
    /// Slow horizons; defaults to `problem.a`.
    pub a: Option<Vec<f64>>,
    #[serde(default = "default_eps_hi")]
    pub eps_hi: f64,
    #[serde(default = "default_eps_lo")]
    pub eps_lo: f64,
    #[serde(default = "default_eps_count")]
    pub eps_count: usize,
    /// Explicit grid, used instead of the log-spaced one.
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_t1")]
    pub t1_slow: f64,
}

fn default_potential() -> String {
    "quartic-aniso".into()
}
fn default_target() -> Vec<f64> {
    DEFAULT_TARGET.to_vec()
}
fn default_ramp() -> String {
    "exponential".into()
}
fn default_a() -> f64 {
    2.0
}
fn default_eps() -> f64 {
    1e-2
}
fn default_solver() -> String {
    "shooting".into()
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_relaxation() -> f64 {
    1.0
}
fn default_stride() -> usize {
    10
}
fn default_scheme() -> String {
    "rk4".into()
}
fn default_calibration() -> f64 {
    DEFAULT_CALIBRATION_TARGET
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}
fn default_eps_hi() -> f64 {
    1e-1
}
fn default_eps_lo() -> f64 {
    1e-3
}
fn default_eps_count() -> usize {
    17
}
fn default_t1() -> f64 {
    DEFAULT_T1_SLOW
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            name: default_potential(),
            d: None,
            terms: Vec::new(),
        }
    }
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            target: default_target(),
            ramp: default_ramp(),
            a: default_a(),
            eps: default_eps(),
            solver: default_solver(),
            tol: default_tol(),
            max_iter: None,
            relaxation: default_relaxation(),
            trajectory_stride: default_stride(),
        }
    }
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            scheme: default_scheme(),
            dt: None,
            calibration_target: default_calibration(),
            budget: default_budget(),
        }
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ramps: None,
            a: None,
            eps_hi: default_eps_hi(),
            eps_lo: default_eps_lo(),
            eps_count: default_eps_count(),
            eps: None,
            t1_slow: default_t1(),
        }
    }
}

/// One `(ramp, a)` series of a sweep.
#[derive(Debug, Clone)]
pub struct Series {
    pub ramp: Ramp,
    pub a: f64,
    pub template: ProblemTemplate,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub potential: Arc<dyn Potential>,
    pub single: Series,
    pub eps: f64,
    pub trajectory_stride: usize,
    pub series: Vec<Series>,
    pub grid: Vec<f64>,
    pub t1_slow: f64,
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))
    }

    fn build_potential(&self) -> Result<Arc<dyn Potential>, Failure> {
        let spec = &self.potential;
        let d = spec.d.unwrap_or(1);
        if spec.name != "polynomial" && !spec.terms.is_empty() {
            return Err(config_err(format!(
                "potential '{}' takes no terms",
                spec.name
            )));
        }
        let pot = match spec.name.as_str() {
            "quartic-aniso" => {
                if d != 1 {
                    return Err(config_err("quartic-aniso is defined for d = 1 only"));
                }
                PolynomialPotential::quartic_aniso()
            }
            "harmonic" => PolynomialPotential::harmonic(d)?,
            "zero" => PolynomialPotential::zero(d)?,
            "polynomial" => {
                let terms = spec
                    .terms
                    .iter()
                    .map(|t| Monomial {
                        coeff: t.coeff,
                        exponents: t.exponents.clone(),
                    })
                    .collect();
                PolynomialPotential::new(d, "polynomial", terms)?
            }
            other => {
                return Err(config_err(format!(
                    "unknown potential '{other}' (expected quartic-aniso, harmonic, zero or polynomial)"
                )))
            }
        };
        Ok(Arc::new(pot))
    }

    fn series(
        &self,
        potential: &Arc<dyn Potential>,
        ramp: &str,
        a: f64,
    ) -> Result<Series, Failure> {
        let p = &self.problem;
        let ramp: Ramp = ramp.parse()?;
        if !ramp.is_homotopy() {
            return Err(config_err(format!(
                "ramp '{ramp}' cannot drive a balance problem"
            )));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(config_err(format!(
                "slow horizon a must be positive, got {a}"
            )));
        }
        let mut template = ProblemTemplate::new(p.target.clone(), ramp, a, Arc::clone(potential));
        template.solver = p.solver.parse::<Solver>()?;
        template.tol = p.tol;
        template.max_iter = p.max_iter;
        template.relaxation = p.relaxation;
        template.scheme = self.integrator.scheme.parse::<Scheme>()?;
        template.budget = self.integrator.budget;
        // full validation of everything except ε and the step choice
        let mut probe = template.clone();
        probe.step = StepPolicy::Fixed(self.integrator.dt.unwrap_or(0.01));
        probe.instantiate(1e-2)?;
        template.step = match self.integrator.dt {
            Some(dt) => StepPolicy::Fixed(dt),
            None => {
                let target = self.integrator.calibration_target;
                if !(target > 0.0 && target.is_finite()) {
                    return Err(config_err(format!(
                        "calibration_target must be positive, got {target}"
                    )));
                }
                StepPolicy::Calibrated { target }
            }
        };
        Ok(Series { ramp, a, template })
    }

    pub fn validate(&self) -> Result<Plan, Failure> {
        let potential = self.build_potential()?;
        let p = &self.problem;
        if !(p.eps > 0.0 && p.eps < 1.0) {
            return Err(config_err(format!(
                "problem.eps must lie in (0, 1), got {}",
                p.eps
            )));
        }
        if p.trajectory_stride == 0 {
            return Err(config_err("trajectory_stride must be at least 1"));
        }
        let single = self.series(&potential, &p.ramp, p.a)?;

        let s = &self.sweep;
        let ramps = s.ramps.clone().unwrap_or_else(|| vec![p.ramp.clone()]);
        let horizons = s.a.clone().unwrap_or_else(|| vec![p.a]);
        let mut series = Vec::with_capacity(ramps.len() * horizons.len());
        for ramp in &ramps {
            for &a in &horizons {
                series.push(self.series(&potential, ramp, a)?);
            }
        }
        let grid = match &s.eps {
            Some(list) => {
                if list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    return Err(config_err("sweep.eps entries must lie in (0, 1)"));
                }
                if list.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(config_err("sweep.eps must be strictly descending"));
                }
                list.clone()
            }
            None => {
                if !(s.eps_hi < 1.0) {
                    return Err(config_err(format!(
                        "sweep.eps_hi must be below 1, got {}",
                        s.eps_hi
                    )));
                }
                log_grid(s.eps_hi, s.eps_lo, s.eps_count)?
            }
        };
        if !(s.t1_slow > 0.0 && s.t1_slow.is_finite()) {
            return Err(config_err(format!(
                "sweep.t1_slow must be positive, got {}",
                s.t1_slow
            )));
        }
        Ok(Plan {
            potential,
            single,
            eps: p.eps,
            trajectory_stride: p.trajectory_stride,
            series,
            grid,
            t1_slow: s.t1_slow,
            output: self.output.clone(),
        })
    }
}
