//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a scalar function of `nvars`
//! perturbation variables `δ = (δ_0, …, δ_{nvars-1})` around a base point,
//! up to total degree `order`. Arithmetic on jets propagates these
//! coefficients exactly for polynomial operations, so evaluating a
//! polynomial on seeded variable jets yields its exact Taylor expansion.
//! Partial derivatives lower the valid order by one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported truncation order.
pub const MAX_JET_ORDER: usize = 5;

/// Monomial layout shared by all jets over the same variables and maximal order.
///
/// Monomials are stored graded by total degree, so truncating a jet to a lower
/// order is a prefix operation.
pub struct JetBasis {
    nvars: usize,
    max_order: usize,
    exponents: Vec<Vec<u8>>,
    /// `degree_start[m]` is the index of the first monomial of degree `m`;
    /// `degree_start[m + 1]` is the number of monomials of degree `≤ m`.
    degree_start: Vec<usize>,
    /// Product table `(i, j, k)`: monomial `i` times monomial `j` is monomial `k`.
    /// Sorted by degree of `k`; `product_count[m]` entries have degree `≤ m`.
    products: Vec<(u32, u32, u32)>,
    product_count: Vec<usize>,
    /// Per variable: `(src, dst, factor)` with `∂ x^src = factor · x^dst`.
    derivatives: Vec<Vec<(u32, u32, f64)>>,
}

impl fmt::Debug for JetBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetBasis")
            .field("nvars", &self.nvars)
            .field("max_order", &self.max_order)
            .field("len", &self.exponents.len())
            .finish()
    }
}

impl JetBasis {
    pub fn new(nvars: usize, max_order: usize) -> Result<Arc<Self>> {
        if nvars == 0 {
            return Err(Error::Config(
                "jet basis needs at least one variable".into(),
            ));
        }
        if max_order > MAX_JET_ORDER {
            return Err(Error::Capability(format!(
                "jet order {max_order} exceeds maximum {MAX_JET_ORDER}"
            )));
        }

        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(max_order + 2);
        for degree in 0..=max_order {
            degree_start.push(exponents.len());
            let mut current = vec![0u8; nvars];
            push_compositions(degree, 0, &mut current, &mut exponents);
        }
        degree_start.push(exponents.len());

        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let degree = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                if degree(ei) + degree(ej) > max_order {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| k);
        let product_count = (0..=max_order)
            .map(|m| {
                products
                    .iter()
                    .filter(|&&(_, _, k)| (k as usize) < degree_start[m + 1])
                    .count()
            })
            .collect();

        let derivatives = (0..nvars)
            .map(|var| {
                exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e[var] > 0)
                    .map(|(src, e)| {
                        let mut lowered = e.clone();
                        lowered[var] -= 1;
                        (src as u32, index[&lowered] as u32, e[var] as f64)
                    })
                    .collect()
            })
            .collect();

        Ok(Arc::new(Self {
            nvars,
            max_order,
            exponents,
            degree_start,
            products,
            product_count,
            derivatives,
        }))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of total degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }

    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exponents[index]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.exponents
            .iter()
            .position(|e| e.as_slice() == exponents)
    }
}

fn push_compositions(remaining: usize, var: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.clone());
        return;
    }
    for first in (0..=remaining).rev() {
        current[var] = first as u8;
        push_compositions(remaining - first, var + 1, current, out);
    }
    current[var] = 0;
}

/// Truncated Taylor expansion of a scalar function around a base point.
#[derive(Clone)]
pub struct Jet {
    basis: Arc<JetBasis>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(basis: &Arc<JetBasis>, order: usize, value: f64) -> Self {
        assert!(order <= basis.max_order, "jet order exceeds basis");
        let mut coeffs = vec![0.0; basis.len(order)];
        coeffs[0] = value;
        Self {
            basis: Arc::clone(basis),
            order,
            coeffs,
        }
    }

    pub fn zero(basis: &Arc<JetBasis>, order: usize) -> Self {
        Self::constant(basis, order, 0.0)
    }

    /// The seeded variable `value + δ_var`.
    pub fn variable(basis: &Arc<JetBasis>, order: usize, var: usize, value: f64) -> Self {
        assert!(var < basis.nvars, "variable index out of range");
        let mut jet = Self::constant(basis, order, value);
        if order >= 1 {
            // degree-one monomials are ordered with variable 0 first
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    /// Jet from explicit coefficients in basis order.
    pub fn from_coeffs(basis: &Arc<JetBasis>, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if order > basis.max_order || coeffs.len() != basis.len(order) {
            return Err(Error::Config(format!(
                "expected {} coefficients for order {order}",
                basis.len(order.min(basis.max_order))
            )));
        }
        Ok(Self {
            basis: Arc::clone(basis),
            order,
            coeffs,
        })
    }

    pub fn basis(&self) -> &Arc<JetBasis> {
        &self.basis
    }

    /// Truncation order up to which the coefficients are valid.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at the base point (order-0 projection).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// First-order coefficient along `var`, i.e. the partial derivative at the base point.
    pub fn gradient_component(&self, var: usize) -> f64 {
        if self.order == 0 {
            return f64::NAN;
        }
        self.coeffs[1 + var]
    }

    /// Coefficient of the monomial with the given exponents, zero if beyond the order.
    pub fn coeff(&self, exponents: &[u8]) -> f64 {
        match self.basis.index_of(exponents) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => 0.0,
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            basis: Arc::clone(&self.basis),
            order,
            coeffs: self.coeffs[..self.basis.len(order)].to_vec(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor * other`, truncating to the common order.
    pub fn axpy(&mut self, factor: f64, other: &Jet) {
        self.check_basis(other);
        if other.order < self.order {
            self.order = other.order;
            self.coeffs.truncate(self.basis.len(self.order));
        }
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += factor * o;
        }
    }

    /// Partial derivative along `var`; the result is valid to `order - 1`.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Capability(
                "cannot differentiate a jet truncated at order 0".into(),
            ));
        }
        let order = self.order - 1;
        let len = self.basis.len(order);
        let mut coeffs = vec![0.0; len];
        for &(src, dst, factor) in &self.basis.derivatives[var] {
            let (src, dst) = (src as usize, dst as usize);
            if dst < len && src < self.coeffs.len() {
                coeffs[dst] += factor * self.coeffs[src];
            }
        }
        Ok(Self {
            basis: Arc::clone(&self.basis),
            order,
            coeffs,
        })
    }

    /// Evaluate the truncated polynomial at a perturbation `δ`.
    pub fn eval_at(&self, delta: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e = self.basis.exponents(i);
                c * e
                    .iter()
                    .zip(delta)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn powi(&self, exponent: u32) -> Self {
        let mut result = Jet::constant(&self.basis, self.order, 1.0);
        for _ in 0..exponent {
            result = &result * self;
        }
        result
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_basis(&self, other: &Jet) {
        debug_assert!(
            Arc::ptr_eq(&self.basis, &other.basis),
            "jets over different bases"
        );
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;

    fn add(self, rhs: &'a Jet) -> Jet {
        let mut out = if self.order <= rhs.order {
            self.clone()
        } else {
            rhs.truncate(self.order)
        };
        let other = if self.order <= rhs.order { rhs } else { self };
        out.axpy(1.0, other);
        out
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;

    fn sub(self, rhs: &'a Jet) -> Jet {
        let mut out = self.truncate(rhs.order);
        out.axpy(-1.0, rhs);
        out
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;

    fn mul(self, rhs: &'a Jet) -> Jet {
        self.check_basis(rhs);
        let order = self.order.min(rhs.order);
        let basis = &self.basis;
        let mut coeffs = vec![0.0; basis.len(order)];
        for &(i, j, k) in &basis.products[..basis.product_count[order]] {
            coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            basis: Arc::clone(basis),
            order,
            coeffs,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;

    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Apply the canonical symplectic matrix to a vector of jets.
pub fn apply_j_jets(v: &[Jet]) -> Vec<Jet> {
    let d = v.len() / 2;
    (0..v.len())
        .map(|i| if i < d { v[i + d].clone() } else { -&v[i - d] })
        .collect()
}
