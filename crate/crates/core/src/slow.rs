//! Slow vector fields of the autonomous and the ramped system.
//!
//! The autonomous coefficients follow
//!
//! ```text
//! g_0 = -J ∇V,    g_k = -J Σ_{i+j=k-1} Dg_i g_j,
//! ```
//!
//! and `G_n = ε Σ_{i≤n} g_i ε^i`. For the ramped system the coefficients also
//! depend on slow time `τ`, with `ρ` evaluated at `τ/a`:
//!
//! ```text
//! f_0 = -ρ J ∇V,  f_k = -J ∂_τ f_{k-1} - J Σ_{i+j=k-1} Df_i f_j,
//! ```
//!
//! and `F_n = Σ_{i≤n} f_i ε^i` (no leading `ε`; the balanced momentum is `ε F_n`).
//!
//! Every coefficient is carried as a vector of [`Jet`]s in the perturbation
//! variables `(δq, δτ)`, so the Jacobians `D` and the slow-time derivative
//! `∂_τ` are exact coefficient manipulations. Computing `f_k` needs Taylor
//! data of order `k`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{apply_j_jets, Jet, JetBasis, MAX_JET_ORDER};
use crate::model::Potential;
use crate::ramp::Ramp;

/// Highest order `n` of `G_n` and of the autonomous coefficients `g_k`.
pub const MAX_SLOW_ORDER: usize = 4;

/// Highest index of the ramped coefficients `f_k`.
pub const MAX_RAMPED_COEFF: usize = MAX_JET_ORDER;

/// Ramp attached to a slow field, with its slow-time horizon `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSchedule {
    pub ramp: Ramp,
    pub horizon: f64,
}

/// Evaluator for `G_n` or `F_n` with cached jet bases.
///
/// Construction sets up the monomial tables; evaluation afterwards is
/// read-only and can be shared between threads.
#[derive(Debug, Clone)]
pub struct SlowField {
    order: usize,
    potential: Arc<dyn Potential>,
    schedule: Option<RampSchedule>,
    basis: Arc<JetBasis>,
}

impl SlowField {
    /// Autonomous field `G_n`.
    pub fn autonomous(order: usize, potential: Arc<dyn Potential>) -> Result<Self> {
        if order > MAX_SLOW_ORDER {
            return Err(Error::Capability(format!(
                "slow field order {order} exceeds maximum {MAX_SLOW_ORDER}"
            )));
        }
        let basis = JetBasis::new(2 * potential.d(), order)?;
        Ok(Self {
            order,
            potential,
            schedule: None,
            basis,
        })
    }

    /// Ramped field `F_n` with ramp `ρ(τ/a)`.
    pub fn ramped(
        order: usize,
        potential: Arc<dyn Potential>,
        ramp: Ramp,
        horizon: f64,
    ) -> Result<Self> {
        if order > MAX_RAMPED_COEFF {
            return Err(Error::Capability(format!(
                "ramped field order {order} exceeds maximum {MAX_RAMPED_COEFF}"
            )));
        }
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!(
                "slow horizon must be positive, got {horizon}"
            )));
        }
        let basis = JetBasis::new(2 * potential.d() + 1, order)?;
        Ok(Self {
            order,
            potential,
            schedule: Some(RampSchedule { ramp, horizon }),
            basis,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    pub fn schedule(&self) -> Option<RampSchedule> {
        self.schedule
    }

    /// Coefficients `g_0..=g_n` (autonomous) or `f_0..=f_n` (ramped) at `(q, τ)`.
    /// `τ` is ignored for the autonomous field.
    pub fn coefficients(&self, q: &[f64], tau: f64) -> Result<Vec<Vec<f64>>> {
        let jets = self.coefficient_jets(q, tau)?;
        Ok(jets
            .into_iter()
            .map(|c| c.iter().map(Jet::value).collect())
            .collect())
    }

    /// `G_n(q) = ε Σ g_i ε^i`, or for a ramped field `F_n(q, τ) = Σ f_i ε^i`.
    pub fn eval(&self, q: &[f64], tau: f64, eps: f64) -> Result<Vec<f64>> {
        let coeffs = self.coefficients(q, tau)?;
        let mut out = vec![0.0; q.len()];
        // Horner in ε
        for c in coeffs.iter().rev() {
            for (o, ci) in out.iter_mut().zip(c) {
                *o = *o * eps + ci;
            }
        }
        if self.schedule.is_none() {
            out.iter_mut().for_each(|o| *o *= eps);
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evaluation {
                q: q.to_vec(),
                what: "non-finite slow field".into(),
            });
        }
        Ok(out)
    }

    /// Jacobian-vector product `D c_k(q) v` of the `k`-th coefficient, read
    /// off the first-order jet terms. Needs `k < order`.
    pub fn coefficient_jvp(&self, k: usize, q: &[f64], tau: f64, v: &[f64]) -> Result<Vec<f64>> {
        if k >= self.order {
            return Err(Error::Capability(format!(
                "Jacobian of coefficient {k} needs a field of order > {k}, have {}",
                self.order
            )));
        }
        let jets = self.coefficient_jets(q, tau)?;
        Ok(jets[k]
            .iter()
            .map(|component| {
                v.iter()
                    .enumerate()
                    .map(|(c, vc)| vc * component.gradient_component(c))
                    .sum()
            })
            .collect())
    }

    fn coefficient_jets(&self, q: &[f64], tau: f64) -> Result<Vec<Vec<Jet>>> {
        let n2 = 2 * self.potential.d();
        if q.len() != n2 {
            return Err(Error::Config(format!(
                "slow field expects q of length {n2}, got {}",
                q.len()
            )));
        }
        let order = self.order;
        let grad = self.potential.gradient_jet(q, &self.basis, order)?;
        let mut base = apply_j_jets(&grad);
        for b in &mut base {
            *b = -&*b;
        }
        let tau_var = match self.schedule {
            None => None,
            Some(RampSchedule { ramp, horizon }) => {
                if !(0.0..=horizon).contains(&tau) {
                    return Err(Error::Domain(format!(
                        "slow time {tau} outside [0, {horizon}]"
                    )));
                }
                let theta = (tau / horizon).clamp(0.0, 1.0);
                let series = ramp.taylor(theta, order)?;
                let rho = ramp_jet(&self.basis, order, n2, &series, horizon);
                base = base.iter().map(|b| &rho * b).collect();
                Some(n2)
            }
        };
        recursion(base, order, n2, tau_var)
    }
}

/// Jet of `ρ((τ + δτ)/a)` in the variable `tau_var`.
fn ramp_jet(
    basis: &Arc<JetBasis>,
    order: usize,
    tau_var: usize,
    series: &[f64],
    horizon: f64,
) -> Jet {
    let mut coeffs = vec![0.0; basis.len(order)];
    let mut exps = vec![0u8; basis.nvars()];
    for (m, s) in series.iter().enumerate().take(order + 1) {
        exps[tau_var] = m as u8;
        let idx = basis.index_of(&exps).expect("monomial within basis");
        coeffs[idx] = s / horizon.powi(m as i32);
    }
    Jet::from_coeffs(basis, order, coeffs).expect("consistent layout")
}

/// Runs the coefficient recursion from `c_0 = base` up to index `max_k`.
/// With `tau_var` set, the `-J ∂_τ c_{k-1}` term is included.
fn recursion(
    base: Vec<Jet>,
    max_k: usize,
    nq: usize,
    tau_var: Option<usize>,
) -> Result<Vec<Vec<Jet>>> {
    let mut coeffs: Vec<Vec<Jet>> = vec![base];
    // jacobians[i][r][c] = ∂_c (c_i)_r
    let mut jacobians: Vec<Vec<Vec<Jet>>> = Vec::new();
    for k in 1..=max_k {
        let prev = k - 1;
        jacobians.push(jacobian(&coeffs[prev], nq)?);

        let order = max_k - k;
        let basis = Arc::clone(coeffs[0][0].basis());
        let mut sum: Vec<Jet> = (0..nq).map(|_| Jet::zero(&basis, order)).collect();
        for i in 0..k {
            let j = k - 1 - i;
            for (r, s) in sum.iter_mut().enumerate() {
                for c in 0..nq {
                    s.axpy(1.0, &(&jacobians[i][r][c] * &coeffs[j][c]));
                }
            }
        }
        if let Some(var) = tau_var {
            for (s, f) in sum.iter_mut().zip(&coeffs[prev]) {
                s.axpy(1.0, &f.derivative(var)?);
            }
        }
        let next: Vec<Jet> = apply_j_jets(&sum).iter().map(|x| -x).collect();
        coeffs.push(next);
    }
    Ok(coeffs)
}

fn jacobian(field: &[Jet], nq: usize) -> Result<Vec<Vec<Jet>>> {
    field
        .iter()
        .map(|component| (0..nq).map(|c| component.derivative(c)).collect())
        .collect()
}

/// `g_k(q)` for `0 ≤ k ≤ 4`.
pub fn slow_coeff_g(k: usize, q: &[f64], potential: Arc<dyn Potential>) -> Result<Vec<f64>> {
    let field = SlowField::autonomous(k, potential)?;
    Ok(field
        .coefficients(q, 0.0)?
        .pop()
        .expect("k + 1 coefficients"))
}

/// `G_n(q) = ε Σ_{i=0}^n g_i(q) ε^i`.
pub fn slow_field_g(
    n: usize,
    q: &[f64],
    eps: f64,
    potential: Arc<dyn Potential>,
) -> Result<Vec<f64>> {
    SlowField::autonomous(n, potential)?.eval(q, 0.0, eps)
}

/// `f_k(q, τ)` for `0 ≤ k ≤ 5`, with the ramp evaluated at `τ/a`.
pub fn ramped_coeff_f(
    k: usize,
    q: &[f64],
    tau: f64,
    ramp: Ramp,
    horizon: f64,
    potential: Arc<dyn Potential>,
) -> Result<Vec<f64>> {
    let field = SlowField::ramped(k, potential, ramp, horizon)?;
    Ok(field
        .coefficients(q, tau)?
        .pop()
        .expect("k + 1 coefficients"))
}

/// `F_n(q, τ) = Σ_{i=0}^n f_i(q, τ) ε^i`.
pub fn ramped_field_f(
    n: usize,
    q: &[f64],
    tau: f64,
    eps: f64,
    ramp: Ramp,
    horizon: f64,
    potential: Arc<dyn Potential>,
) -> Result<Vec<f64>> {
    SlowField::ramped(n, potential, ramp, horizon)?.eval(q, tau, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_j, PolynomialPotential};

    fn quartic() -> Arc<dyn Potential> {
        Arc::new(PolynomialPotential::quartic_aniso())
    }

    fn harmonic() -> Arc<dyn Potential> {
        Arc::new(PolynomialPotential::harmonic(1).unwrap())
    }

    fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
        let scale = b.iter().map(|x| x.abs()).fold(1e-300, f64::max);
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * scale)
    }

    #[test]
    fn g0_is_minus_j_grad() {
        let v = quartic();
        let q = [0.7, -0.4];
        let g0 = slow_coeff_g(0, &q, Arc::clone(&v)).unwrap();
        let expected: Vec<f64> = apply_j(&v.gradient(&q).unwrap())
            .unwrap()
            .iter()
            .map(|x| -x)
            .collect();
        assert_eq!(g0, expected);
    }

    #[test]
    fn harmonic_coefficients() {
        // g_0 = -Jq, g_1 = Jq, g_2 = -2Jq
        let q = [0.3, 1.7];
        let jq = apply_j(&q).unwrap();
        let g1 = slow_coeff_g(1, &q, harmonic()).unwrap();
        assert!(close(&g1, &jq, 1e-15));
        let g2 = slow_coeff_g(2, &q, harmonic()).unwrap();
        let expected: Vec<f64> = jq.iter().map(|x| -2.0 * x).collect();
        assert!(close(&g2, &expected, 1e-15));

        let eps = 0.05;
        let g = slow_field_g(1, &q, eps, harmonic()).unwrap();
        let expected: Vec<f64> = jq.iter().map(|x| eps * (eps - 1.0) * x).collect();
        assert!(close(&g, &expected, 1e-14));
    }

    #[test]
    fn quartic_closed_forms() {
        // expanded by hand from the recursion with H = diag(9 q1^2, 3 q2^2)
        let g1_exact = |q1: f64, q2: f64| [9.0 * q1 * q1 * q2.powi(3), -9.0 * q1.powi(3) * q2 * q2];
        let g2_exact = |q1: f64, q2: f64| {
            [
                54.0 * q1.powi(6) * q2
                    - 81.0 * q1.powi(4) * q2.powi(3)
                    - 27.0 * q1 * q1 * q2.powi(5),
                81.0 * q1.powi(5) * q2 * q2 + 27.0 * q1.powi(3) * q2.powi(4)
                    - 18.0 * q1 * q2.powi(6),
            ]
        };
        let v = quartic();
        for &(q1, q2) in &[(1.0, 0.5), (-0.7, 1.3), (0.21, -0.93), (1.4, 1.1)] {
            let g1 = slow_coeff_g(1, &[q1, q2], Arc::clone(&v)).unwrap();
            assert!(close(&g1, &g1_exact(q1, q2), 1e-12));
            let g2 = slow_coeff_g(2, &[q1, q2], Arc::clone(&v)).unwrap();
            assert!(close(&g2, &g2_exact(q1, q2), 1e-12));
        }
    }

    #[test]
    fn first_order_coefficient_matches_finite_difference_oracle() {
        // D g_0 g_0 by central differences of g_0
        let v = quartic();
        for &(q1, q2) in &[(0.6, -1.1), (1.3, 0.2), (-0.4, 0.75)] {
            let q = [q1, q2];
            let g0 = slow_coeff_g(0, &q, Arc::clone(&v)).unwrap();
            let h = 1e-6;
            let plus: Vec<f64> = q.iter().zip(&g0).map(|(x, d)| x + h * d).collect();
            let minus: Vec<f64> = q.iter().zip(&g0).map(|(x, d)| x - h * d).collect();
            let gp = slow_coeff_g(0, &plus, Arc::clone(&v)).unwrap();
            let gm = slow_coeff_g(0, &minus, Arc::clone(&v)).unwrap();
            let dg_g: Vec<f64> = gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            let oracle: Vec<f64> = apply_j(&dg_g).unwrap().iter().map(|x| -x).collect();
            let g1 = slow_coeff_g(1, &q, Arc::clone(&v)).unwrap();
            assert!(close(&g1, &oracle, 1e-6), "{g1:?} vs {oracle:?}");
        }
    }

    #[test]
    fn jet_jacobians_match_finite_differences() {
        let v = quartic();
        let field = SlowField::autonomous(4, Arc::clone(&v)).unwrap();
        let h = 1e-5;
        for &(q1, q2, v1, v2) in &[
            (0.9, 0.4, 0.3, -0.8),
            (-1.2, 0.7, 1.0, 0.2),
            (0.5, -0.6, -0.4, 0.9),
        ] {
            let q = [q1, q2];
            let dir = [v1, v2];
            for k in 0..4 {
                let jvp = field.coefficient_jvp(k, &q, 0.0, &dir).unwrap();
                let shifted = |s: f64| {
                    let x = [q1 + s * v1, q2 + s * v2];
                    field.coefficients(&x, 0.0).unwrap()[k].clone()
                };
                let (p, m) = (shifted(h), shifted(-h));
                let fd: Vec<f64> = p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect();
                assert!(close(&jvp, &fd, 1e-5), "k={k}: {jvp:?} vs {fd:?}");
            }
        }
        assert!(field
            .coefficient_jvp(4, &[0.1, 0.1], 0.0, &[1.0, 0.0])
            .is_err());
    }

    #[test]
    fn field_vanishes_at_zero_epsilon() {
        let g = slow_field_g(3, &[0.4, 0.9], 0.0, quartic()).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn order_limits() {
        assert!(matches!(
            slow_coeff_g(5, &[0.1, 0.2], quartic()),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            ramped_coeff_f(6, &[0.1, 0.2], 0.5, Ramp::Exponential, 1.0, quartic()),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            ramped_coeff_f(1, &[0.1, 0.2], 1.5, Ramp::Exponential, 1.0, quartic()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ramped_endpoints() {
        let v = quartic();
        let q = [0.9, 0.45];
        let a = 2.0;
        let g0 = slow_coeff_g(0, &q, Arc::clone(&v)).unwrap();
        let f0_end = ramped_coeff_f(0, &q, a, Ramp::Exponential, a, Arc::clone(&v)).unwrap();
        assert_eq!(f0_end, g0);
        let f0_start = ramped_coeff_f(0, &q, 0.0, Ramp::Exponential, a, Arc::clone(&v)).unwrap();
        assert_eq!(f0_start, vec![0.0, 0.0]);
        for k in 1..=3 {
            for tau in [0.0, a] {
                let fk = ramped_coeff_f(k, &q, tau, Ramp::Exponential, a, Arc::clone(&v)).unwrap();
                if tau == 0.0 {
                    assert_eq!(fk, vec![0.0, 0.0]);
                } else {
                    let gk = slow_coeff_g(k, &q, Arc::clone(&v)).unwrap();
                    assert!(close(&fk, &gk, 1e-13), "k={k}: {fk:?} vs {gk:?}");
                }
            }
        }
    }

    #[test]
    fn ramped_field_reduces_to_g_at_end_of_ramp() {
        let v = quartic();
        let q = [1.0, 0.5];
        let eps = 0.03;
        for n in 0..=4 {
            let f =
                ramped_field_f(n, &q, 2.0, eps, Ramp::Exponential, 2.0, Arc::clone(&v)).unwrap();
            let g = slow_field_g(n, &q, eps, Arc::clone(&v)).unwrap();
            let scaled: Vec<f64> = f.iter().map(|x| eps * x).collect();
            assert!(close(&scaled, &g, 1e-14), "n={n}");
            let start =
                ramped_field_f(n, &q, 0.0, eps, Ramp::Exponential, 2.0, Arc::clone(&v)).unwrap();
            assert_eq!(start, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn unit_ramp_matches_autonomous_everywhere() {
        let v = quartic();
        for &(q0, q1, tau) in &[(0.3, -0.8, 0.1), (1.2, 0.4, 0.77), (-0.5, 0.5, 1.0)] {
            let q = [q0, q1];
            for k in 0..=4 {
                let f = ramped_coeff_f(k, &q, tau, Ramp::Unity, 1.0, Arc::clone(&v)).unwrap();
                let g = slow_coeff_g(k, &q, Arc::clone(&v)).unwrap();
                assert!(close(&f, &g, 1e-13), "k={k}");
            }
        }
    }

    #[test]
    fn first_ramped_coefficient_carries_ramp_derivative() {
        // f_1 = -J ∂_τ f_0 + ρ^2 g_1 with ∂_τ f_0 = -(ρ'/a) J ∇V = (ρ'/a) g_0
        let v = quartic();
        let q = [0.8, -0.3];
        let (a, tau) = (2.0, 0.6);
        let ramp = Ramp::algebraic(2).unwrap();
        let rho = ramp.eval(tau / a).unwrap();
        let drho = ramp.deriv(tau / a, 1).unwrap() / a;
        let g0 = slow_coeff_g(0, &q, Arc::clone(&v)).unwrap();
        let g1 = slow_coeff_g(1, &q, Arc::clone(&v)).unwrap();
        let jg0 = apply_j(&g0).unwrap();
        let expected: Vec<f64> = jg0
            .iter()
            .zip(&g1)
            .map(|(j, g)| -drho * j + rho * rho * g)
            .collect();
        let f1 = ramped_coeff_f(1, &q, tau, ramp, a, Arc::clone(&v)).unwrap();
        assert!(close(&f1, &expected, 1e-14));
    }
}
