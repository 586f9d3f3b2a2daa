//! Ramp functions `ρ(θ) = f(θ) / (f(θ) + f(1 - θ))` and their derivatives.
//!
//! Derivatives are exact up to rounding: each ramp is expanded as a truncated
//! Taylor series `ρ(θ + h) = Σ ρ^{(j)}(θ) h^j / j!` by dividing the series of
//! the numerator by that of the denominator. For `f(θ) = θ^k` the inner series
//! are binomial expansions; for `f(θ) = exp(-1/θ)` they come from
//! `f^{(j)}(x) = exp(-1/x) P_j(1/x)` with integer polynomials `P_j`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Highest derivative order available from [`Ramp::deriv`].
pub const MAX_RAMP_ORDER: usize = 12;

/// Below this `θ`, `exp(-1/θ)` and all its derivatives are treated as zero
/// (they are smaller than `1e-240` for every order up to the maximum).
const EXP_CUTOFF: f64 = 1.0 / 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ramp {
    /// `f(θ) = θ^k`.
    Algebraic { k: u32 },
    /// `f(θ) = exp(-1/θ)`.
    Exponential,
    /// `ρ ≡ 1`: no ramping. Reference for comparisons with the unramped system;
    /// it does not satisfy `ρ(0) = 0` and cannot drive a balance problem.
    Unity,
}

impl Ramp {
    pub fn algebraic(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("algebraic ramp exponent must be >= 1".into()));
        }
        Ok(Ramp::Algebraic { k })
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    /// True for ramps with `ρ(0) = 0` and `ρ(1) = 1`.
    pub fn is_homotopy(&self) -> bool {
        !matches!(self, Ramp::Unity)
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.eval_unchecked(theta))
    }

    /// Evaluation without the domain check; `θ` must lie in `[0, 1]`.
    pub(crate) fn eval_unchecked(&self, theta: f64) -> f64 {
        match *self {
            Ramp::Unity => 1.0,
            Ramp::Algebraic { k } => {
                let a = theta.powi(k as i32);
                let b = (1.0 - theta).powi(k as i32);
                a / (a + b)
            }
            Ramp::Exponential => {
                if theta <= 0.0 {
                    0.0
                } else if theta >= 1.0 {
                    1.0
                } else {
                    // logistic form of f(θ)/(f(θ)+f(1-θ)), free of underflow
                    let s = 1.0 / theta - 1.0 / (1.0 - theta);
                    if s >= 0.0 {
                        let e = (-s).exp();
                        e / (1.0 + e)
                    } else {
                        1.0 / (1.0 + s.exp())
                    }
                }
            }
        }
    }

    /// The `order`-th derivative `ρ^{(order)}(θ)`.
    pub fn deriv(&self, theta: f64, order: usize) -> Result<f64> {
        let series = self.taylor(theta, order)?;
        Ok(series[order] * factorial(order))
    }

    /// Taylor coefficients `ρ^{(j)}(θ) / j!` for `j = 0..=order`.
    pub fn taylor(&self, theta: f64, order: usize) -> Result<Vec<f64>> {
        check_theta(theta)?;
        if order > MAX_RAMP_ORDER {
            return Err(Error::Capability(format!(
                "ramp derivative order {order} exceeds maximum {MAX_RAMP_ORDER}"
            )));
        }
        let series = match *self {
            Ramp::Unity => {
                let mut s = vec![0.0; order + 1];
                s[0] = 1.0;
                s
            }
            Ramp::Algebraic { k } => {
                let num = shifted_power_series(theta, k, 1.0, order);
                let mirror = shifted_power_series(1.0 - theta, k, -1.0, order);
                quotient(&num, &add(&num, &mirror))
            }
            Ramp::Exponential => {
                let num = exp_inv_series(theta, 1.0, order);
                let mirror = exp_inv_series(1.0 - theta, -1.0, order);
                if num[0] == 0.0 && mirror[0] == 0.0 {
                    unreachable!("f(θ) and f(1-θ) cannot vanish together");
                }
                quotient(&num, &add(&num, &mirror))
            }
        };
        Ok(series)
    }

    /// Checks `ρ^{(i)}(0) = ρ^{(i)}(1) = 0` for `i = 1..=n` to tolerance `tol`.
    pub fn check_order_condition(&self, n: usize, tol: f64) -> Result<OrderReport> {
        let left = self.taylor(0.0, n)?;
        let right = self.taylor(1.0, n)?;
        let at_zero: Vec<f64> = (1..=n).map(|i| left[i] * factorial(i)).collect();
        let at_one: Vec<f64> = (1..=n).map(|i| right[i] * factorial(i)).collect();
        let satisfied = at_zero.iter().chain(&at_one).all(|v| v.abs() <= tol);
        Ok(OrderReport {
            n,
            tol,
            at_zero,
            at_one,
            satisfied,
        })
    }
}

impl fmt::Display for Ramp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ramp::Algebraic { k } => write!(f, "algebraic:{k}"),
            Ramp::Exponential => write!(f, "exponential"),
            Ramp::Unity => write!(f, "unity"),
        }
    }
}

impl FromStr for Ramp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exponential" => Ok(Ramp::Exponential),
            "unity" => Ok(Ramp::Unity),
            other => {
                let k = other
                    .strip_prefix("algebraic:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown ramp '{other}', expected 'algebraic:<k>' or 'exponential'"
                        ))
                    })?;
                Ramp::algebraic(k)
            }
        }
    }
}

/// Endpoint derivative values for an order-condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub n: usize,
    pub tol: f64,
    /// `ρ^{(i)}(0)` for `i = 1..=n`.
    pub at_zero: Vec<f64>,
    /// `ρ^{(i)}(1)` for `i = 1..=n`.
    pub at_one: Vec<f64>,
    pub satisfied: bool,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "ramp argument {theta} outside [0, 1]"
        )));
    }
    Ok(())
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Series of `(x + sign·h)^k` in `h`.
fn shifted_power_series(x: f64, k: u32, sign: f64, order: usize) -> Vec<f64> {
    (0..=order)
        .map(|j| {
            if j as u32 > k {
                0.0
            } else {
                binomial(k, j as u32) * x.powi((k - j as u32) as i32) * sign.powi(j as i32)
            }
        })
        .collect()
}

/// Series of `exp(-1/(x + sign·h))` in `h`, zero below the underflow cutoff.
fn exp_inv_series(x: f64, sign: f64, order: usize) -> Vec<f64> {
    if x < EXP_CUTOFF {
        return vec![0.0; order + 1];
    }
    (0..=order)
        .map(|j| exp_inv_derivative(x, j) * sign.powi(j as i32) / factorial(j))
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Truncated series division `a / b`, `b[0] != 0`.
fn quotient(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    for j in 0..a.len() {
        let acc: f64 = (0..j).map(|i| c[i] * b[j - i]).sum();
        c[j] = (a[j] - acc) / b[0];
    }
    c
}

/// Integer coefficients of `P_n` with `d^n/dx^n exp(-1/x) = exp(-1/x) P_n(1/x)`,
/// from `P_{n+1}(u) = u^2 (P_n(u) - P_n'(u))`. Index is the power of `u`.
pub fn exp_inv_polynomial(n: usize) -> Vec<i128> {
    let mut p: Vec<i128> = vec![1];
    for _ in 0..n {
        let mut next = vec![0i128; p.len() + 2];
        for (i, &c) in p.iter().enumerate() {
            next[i + 2] += c;
            if i > 0 {
                next[i + 1] -= i as i128 * c;
            }
        }
        p = next;
    }
    p
}

/// `d^n/dx^n exp(-1/x)` for `x > 0`; zero for `x ≤ 0`.
pub fn exp_inv_derivative(x: f64, n: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = 1.0 / x;
    let poly = exp_inv_polynomial(n);
    let value = poly.iter().rev().fold(0.0, |acc, &c| acc * u + c as f64);
    (-u).exp() * value
}

/// Per-order entry of a Gevrey-2 bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct GevreyRow {
    pub n: usize,
    /// Grid supremum of `|f^{(n)}|`.
    pub sup: f64,
    /// `(n+1)!^2 / η^{n+1}`.
    pub bound: f64,
    /// `bound - sup`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GevreyReport {
    pub lambda: f64,
    pub eta: f64,
    pub rows: Vec<GevreyRow>,
    pub passed: bool,
}

/// Maximal order accepted by the Gevrey checks.
pub const MAX_GEVREY_ORDER: usize = 10;

/// `η = λ(1 - λ)/(1 + λ)^2`, defined for `λ ∈ (0, 1/2)`.
pub fn gevrey_eta(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!(
            "lambda must lie in (0, 1/2), got {lambda}"
        )));
    }
    Ok(lambda * (1.0 - lambda) / ((1.0 + lambda) * (1.0 + lambda)))
}

/// Grid of positive abscissae, logarithmically spaced over `[1e-3, 1e3]`.
fn positive_grid() -> impl Iterator<Item = f64> {
    const POINTS: usize = 60_001;
    (0..POINTS).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (POINTS - 1) as f64))
}

/// Checks `sup_x |f^{(n)}(x)| ≤ (n+1)!^2 / η^{n+1}` for `f(x) = exp(-1/x)`
/// and `n = 0..=n_max`.
pub fn check_gevrey2_bound(n_max: usize, lambda: f64) -> Result<GevreyReport> {
    let eta = gevrey_eta(lambda)?;
    if n_max > MAX_GEVREY_ORDER {
        return Err(Error::Capability(format!(
            "Gevrey check supports orders up to {MAX_GEVREY_ORDER}, got {n_max}"
        )));
    }
    let rows: Vec<GevreyRow> = (0..=n_max)
        .map(|n| {
            let sup = positive_grid()
                .map(|x| exp_inv_derivative(x, n).abs())
                .fold(0.0, f64::max);
            let bound = factorial(n + 1).powi(2) / eta.powi(n as i32 + 1);
            GevreyRow {
                n,
                sup,
                bound,
                margin: bound - sup,
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.margin >= 0.0);
    Ok(GevreyReport {
        lambda,
        eta,
        rows,
        passed,
    })
}

/// Gevrey-2 envelope fitted to a ramp: the largest `η` such that
/// `sup_θ |ρ^{(n)}(θ)| ≤ (n+1)!^2 / η^{n+1}` for all `1 ≤ n ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampEnvelope {
    /// `(n, sup_θ |ρ^{(n)}|, η_n)`; `η_n` is the largest admissible at order `n`.
    pub per_order: Vec<(usize, f64, f64)>,
    pub eta: f64,
}

pub fn fit_gevrey2_envelope(ramp: &Ramp, n_max: usize) -> Result<RampEnvelope> {
    if n_max == 0 || n_max > MAX_GEVREY_ORDER {
        return Err(Error::Capability(format!(
            "envelope fit supports orders 1..={MAX_GEVREY_ORDER}, got {n_max}"
        )));
    }
    const POINTS: usize = 4001;
    let mut sups = vec![0.0f64; n_max + 1];
    for i in 0..POINTS {
        let theta = i as f64 / (POINTS - 1) as f64;
        let series = ramp.taylor(theta, n_max)?;
        for (n, sup) in sups.iter_mut().enumerate().skip(1) {
            *sup = sup.max((series[n] * factorial(n)).abs());
        }
    }
    let per_order: Vec<(usize, f64, f64)> = (1..=n_max)
        .map(|n| {
            let eta_n = if sups[n] == 0.0 {
                f64::INFINITY
            } else {
                (factorial(n + 1).powi(2) / sups[n]).powf(1.0 / (n + 1) as f64)
            };
            (n, sups[n], eta_n)
        })
        .collect();
    let eta = per_order.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(RampEnvelope { per_order, eta })
}
