//! Phase-space types, the symplectic operator and the right-hand sides of the
//! gyroscopic model `q' = p`, `p' = Jp - ε ρ(t/T) ∇V(q)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetBasis};
use crate::ramp::Ramp;

/// Point `(q, p)` in phase space, both of length `2d`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl State {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        check_phase_dim(q.len())?;
        if p.len() != q.len() {
            return Err(Error::Config(format!(
                "q has length {} but p has length {}",
                q.len(),
                p.len()
            )));
        }
        let state = Self { q, p };
        if !state.is_finite() {
            return Err(Error::Evaluation {
                q: state.q,
                what: "non-finite state component".into(),
            });
        }
        Ok(state)
    }

    /// State at rest: `p = 0`.
    pub fn at_rest(q: Vec<f64>) -> Result<Self> {
        let p = vec![0.0; q.len()];
        Self::new(q, p)
    }

    /// Half the phase-space dimension of `q`, i.e. `d`.
    pub fn d(&self) -> usize {
        self.q.len() / 2
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }

    pub fn distance(&self, other: &State) -> f64 {
        (norm_sq_diff(&self.q, &other.q) + norm_sq_diff(&self.p, &other.p)).sqrt()
    }
}

fn check_phase_dim(len: usize) -> Result<()> {
    if len < 2 || !len.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "phase-space vectors must have even length 2d with d >= 1, got {len}"
        )));
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm_sq_diff(a, b).sqrt()
}

/// Small parameter `ε ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SmallParam(f64);

impl SmallParam {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1], got {eps}"
            )));
        }
        Ok(Self(eps))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SmallParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Apply `J = [[0, I_d], [-I_d, 0]]`.
pub fn apply_j(v: &[f64]) -> Result<Vec<f64>> {
    check_phase_dim(v.len())?;
    let mut out = vec![0.0; v.len()];
    apply_j_into(v, &mut out);
    Ok(out)
}

/// Unchecked `out = J v`; `v.len()` must be even.
#[inline]
pub fn apply_j_into(v: &[f64], out: &mut [f64]) {
    let d = v.len() / 2;
    for i in 0..d {
        out[i] = v[i + d];
        out[i + d] = -v[i];
    }
}

/// A smooth potential `V` on `R^{2d}`.
///
/// Implementations must also provide the Taylor expansion of `∇V` as jets,
/// which is what the slow-field recursion differentiates.
pub trait Potential: Send + Sync + fmt::Debug {
    /// Half the configuration dimension.
    fn d(&self) -> usize;

    fn tag(&self) -> &str;

    fn value(&self, q: &[f64]) -> f64;

    /// Writes `∇V(q)` into `out`.
    fn gradient_into(&self, q: &[f64], out: &mut [f64]);

    /// Taylor expansion of `∇V(q + δ)` where `δ` is carried by the first `2d`
    /// variables of `basis`, valid to `order`.
    fn gradient_jet(&self, q: &[f64], basis: &Arc<JetBasis>, order: usize) -> Result<Vec<Jet>>;

    /// Checked gradient.
    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != 2 * self.d() {
            return Err(Error::Config(format!(
                "potential expects q of length {}, got {}",
                2 * self.d(),
                q.len()
            )));
        }
        let mut out = vec![0.0; q.len()];
        self.gradient_into(q, &mut out);
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evaluation {
                q: q.to_vec(),
                what: "non-finite potential gradient".into(),
            });
        }
        Ok(out)
    }
}

/// One monomial `coeff · Π q_i^{exponents[i]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    fn eval(&self, q: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(q)
            .fold(self.coeff, |acc, (&e, &x)| acc * x.powi(e as i32))
    }
}

/// Polynomial potential; the catalog entries are all of this form.
#[derive(Debug, Clone)]
pub struct PolynomialPotential {
    d: usize,
    tag: String,
    terms: Vec<Monomial>,
    gradient_terms: Vec<Vec<Monomial>>,
}

impl PolynomialPotential {
    /// General polynomial from `(coefficient, exponents)` terms over `2d` variables.
    pub fn new(d: usize, tag: impl Into<String>, terms: Vec<Monomial>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("potential dimension d must be >= 1".into()));
        }
        for term in &terms {
            if term.exponents.len() != 2 * d {
                return Err(Error::Config(format!(
                    "monomial has {} exponents, expected {}",
                    term.exponents.len(),
                    2 * d
                )));
            }
            if !term.coeff.is_finite() {
                return Err(Error::Config("non-finite polynomial coefficient".into()));
            }
        }
        let gradient_terms = (0..2 * d)
            .map(|var| {
                terms
                    .iter()
                    .filter(|t| t.exponents[var] > 0)
                    .map(|t| {
                        let mut exponents = t.exponents.clone();
                        exponents[var] -= 1;
                        Monomial {
                            coeff: t.coeff * t.exponents[var] as f64,
                            exponents,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            d,
            tag: tag.into(),
            terms,
            gradient_terms,
        })
    }

    /// `V(q) = 3/4 q_1^4 + 1/4 q_2^4` with `d = 1`.
    pub fn quartic_aniso() -> Self {
        Self::new(
            1,
            "quartic-aniso",
            vec![
                Monomial {
                    coeff: 0.75,
                    exponents: vec![4, 0],
                },
                Monomial {
                    coeff: 0.25,
                    exponents: vec![0, 4],
                },
            ],
        )
        .expect("valid catalog potential")
    }

    /// `V(q) = |q|^2 / 2`.
    pub fn harmonic(d: usize) -> Result<Self> {
        let terms = (0..2 * d)
            .map(|i| {
                let mut exponents = vec![0; 2 * d];
                exponents[i] = 2;
                Monomial {
                    coeff: 0.5,
                    exponents,
                }
            })
            .collect();
        Self::new(d, "harmonic", terms)
    }

    /// `V ≡ 0`.
    pub fn zero(d: usize) -> Result<Self> {
        Self::new(d, "zero", Vec::new())
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    fn max_exponent(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.exponents.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

impl Potential for PolynomialPotential {
    fn d(&self) -> usize {
        self.d
    }

    fn tag(&self) -> &str {
        &self.tag
    }

    fn value(&self, q: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(q)).sum()
    }

    fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.gradient_terms) {
            *o = terms.iter().map(|t| t.eval(q)).sum();
        }
    }

    fn gradient_jet(&self, q: &[f64], basis: &Arc<JetBasis>, order: usize) -> Result<Vec<Jet>> {
        let n = 2 * self.d;
        if q.len() != n || basis.nvars() < n {
            return Err(Error::Config(format!(
                "gradient jet needs q of length {n} and a basis with at least {n} variables"
            )));
        }
        if order > basis.max_order() {
            return Err(Error::Capability(format!(
                "requested jet order {order} exceeds basis order {}",
                basis.max_order()
            )));
        }
        // powers[i][e] = (q_i + δ_i)^e
        let max_e = self.max_exponent() as usize;
        let powers: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                let x = Jet::variable(basis, order, i, q[i]);
                let mut row = vec![Jet::constant(basis, order, 1.0)];
                for e in 1..max_e.max(1) {
                    let next = &row[e - 1] * &x;
                    row.push(next);
                }
                row
            })
            .collect();
        let jets: Vec<Jet> = self
            .gradient_terms
            .iter()
            .map(|terms| {
                let mut acc = Jet::zero(basis, order);
                for t in terms {
                    let mut m = Jet::constant(basis, order, t.coeff);
                    for (i, &e) in t.exponents.iter().enumerate() {
                        if e > 0 {
                            m = &m * &powers[i][e as usize];
                        }
                    }
                    acc.axpy(1.0, &m);
                }
                acc
            })
            .collect();
        if jets.iter().any(|j| !j.is_finite()) {
            return Err(Error::Evaluation {
                q: q.to_vec(),
                what: "non-finite gradient jet".into(),
            });
        }
        Ok(jets)
    }
}

/// Right-hand side `(p, Jp - ε ∇V(q))` of the full system.
pub fn full_rhs(s: &State, eps: f64, potential: &dyn Potential) -> Result<State> {
    forced_rhs(s, eps, potential)
}

/// Right-hand side of the ramped system `(p, Jp - ε ρ(t/T) ∇V(q))` for `0 ≤ t ≤ T`.
pub fn ramped_rhs(
    s: &State,
    t: f64,
    eps: f64,
    horizon: f64,
    ramp: &Ramp,
    potential: &dyn Potential,
) -> Result<State> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "ramp time must be positive, got {horizon}"
        )));
    }
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, {horizon}]")));
    }
    let strength = ramp.eval(t / horizon)?;
    forced_rhs(s, eps * strength, potential)
}

fn forced_rhs(s: &State, coupling: f64, potential: &dyn Potential) -> Result<State> {
    check_phase_dim(s.q.len())?;
    let grad = potential.gradient(&s.q)?;
    let mut dp = apply_j(&s.p)?;
    for (o, g) in dp.iter_mut().zip(&grad) {
        *o -= coupling * g;
    }
    Ok(State {
        q: s.p.clone(),
        p: dp,
    })
}

/// Conserved energy `|p|^2 / 2 + ε V(q)` of the full system.
pub fn energy(s: &State, eps: f64, potential: &dyn Potential) -> Result<f64> {
    let e = 0.5 * s.p.iter().map(|x| x * x).sum::<f64>() + eps * potential.value(&s.q);
    if !e.is_finite() {
        return Err(Error::Evaluation {
            q: s.q.clone(),
            what: "non-finite energy".into(),
        });
    }
    Ok(e)
}
