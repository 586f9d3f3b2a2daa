//! Exhaustive exact-arithmetic checks of two factorial inequalities:
//!
//! ```text
//! A.1   Σ_{m=0}^{n} (m+ℓ)! (n+k-m-ℓ)!  ≤  (n+k)!            0 ≤ n, 1 ≤ ℓ < k
//! A.2   Σ_{|β|=n} (α+β)!² / β!         ≤  (n+k)!² / n!      α > 0, |α| = k
//! ```
//!
//! Multi-index factorials are products of component factorials. Every term of
//! A.2 is an integer since `(α+β)!/β!` is a product of rising factorials, so
//! both checks run in `BigUint` without rationals.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cap on the number of `β` terms enumerated by [`lemma_a2_check`].
pub const MAX_A2_TERMS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// `|β|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All length-`parts` multi-indices with entries `≥ min_part` summing to `total`,
/// in lexicographic order.
pub fn compositions(total: usize, parts: usize, min_part: usize) -> Vec<MultiIndex> {
    fn rec(
        left: usize,
        parts: usize,
        min_part: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<MultiIndex>,
    ) {
        if parts == 1 {
            if left >= min_part {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
            }
            return;
        }
        let reserve = min_part * (parts - 1);
        if left < reserve {
            return;
        }
        for first in min_part..=left - reserve {
            cur.push(first);
            rec(left - first, parts - 1, min_part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(
            total,
            parts,
            min_part,
            &mut Vec::with_capacity(parts),
            &mut out,
        );
    }
    out
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `(a+b)! / b!` as the product `(b+1)(b+2)...(a+b)`.
fn rising(b: usize, a: usize) -> BigUint {
    (b + 1..=a + b).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// One evaluated instance of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaCase {
    pub label: String,
    pub lhs: BigUint,
    pub rhs: BigUint,
}

impl LemmaCase {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// `lhs / rhs` rounded to `f64`, for reporting only.
    pub fn ratio(&self) -> f64 {
        let (l, r) = (
            self.lhs.to_f64().unwrap_or(f64::INFINITY),
            self.rhs.to_f64().unwrap_or(f64::INFINITY),
        );
        l / r
    }

    /// Exact comparison of `lhs/rhs` with another case's ratio.
    fn ratio_exceeds(&self, other: &LemmaCase) -> bool {
        &self.lhs * &other.rhs > &other.lhs * &self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaReport {
    pub lemma: &'static str,
    pub cases: usize,
    pub violations: Vec<LemmaCase>,
    /// Case with the largest `lhs/rhs`.
    pub tightest: Option<LemmaCase>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_ratio(&self) -> f64 {
        self.tightest.as_ref().map_or(0.0, LemmaCase::ratio)
    }

    fn from_cases(lemma: &'static str, cases: Vec<LemmaCase>) -> Self {
        let tightest = cases
            .iter()
            .fold(None::<&LemmaCase>, |best, c| match best {
                Some(b) if !c.ratio_exceeds(b) => Some(b),
                _ => Some(c),
            })
            .cloned();
        let violations = cases.iter().filter(|c| !c.holds()).cloned().collect();
        Self {
            lemma,
            cases: cases.len(),
            violations,
            tightest,
        }
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, {} violations, max lhs/rhs = {:.6}",
            self.lemma,
            self.cases,
            self.violations.len(),
            self.max_ratio()
        )?;
        if let Some(t) = &self.tightest {
            write!(f, " at {}", t.label)?;
        }
        Ok(())
    }
}

/// Both sides of A.1 for one `(n, k, ℓ)`.
pub fn lemma_a1_case(n: usize, k: usize, l: usize) -> Result<LemmaCase> {
    if !(1 <= l && l < k) {
        return Err(Error::Domain(format!(
            "A.1 needs 1 <= l < k, got l = {l}, k = {k}"
        )));
    }
    let lhs = (0..=n)
        .map(|m| factorial(m + l) * factorial(n + k - m - l))
        .sum();
    Ok(LemmaCase {
        label: format!("n={n} k={k} l={l}"),
        lhs,
        rhs: factorial(n + k),
    })
}

/// Checks A.1 for all `0 ≤ n ≤ n_max`, `1 ≤ ℓ < k ≤ k_max`.
pub fn lemma_a1_check(n_max: usize, k_max: usize) -> Result<LemmaReport> {
    let grid: Vec<(usize, usize, usize)> = (0..=n_max)
        .flat_map(|n| (2..=k_max).flat_map(move |k| (1..k).map(move |l| (n, k, l))))
        .collect();
    let cases = grid
        .par_iter()
        .map(|&(n, k, l)| lemma_a1_case(n, k, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::from_cases("A.1", cases))
}

/// Both sides of A.2 for one `α` (entries ≥ 1) and order `n`.
pub fn lemma_a2_case(alpha: &MultiIndex, n: usize) -> Result<LemmaCase> {
    if alpha.is_empty() || alpha.entries().contains(&0) {
        return Err(Error::Domain(format!(
            "A.2 needs a non-empty strictly positive α, got {alpha}"
        )));
    }
    let k = alpha.order();
    let lhs = compositions(n, alpha.len(), 0)
        .iter()
        .map(|beta| {
            alpha
                .entries()
                .iter()
                .zip(beta.entries())
                .map(|(&a, &b)| factorial(a + b) * rising(b, a))
                .product::<BigUint>()
        })
        .sum();
    Ok(LemmaCase {
        label: format!("alpha={alpha} n={n}"),
        lhs,
        rhs: factorial(n + k) * rising(n, k),
    })
}

/// Checks A.2 for all strictly positive `α` of length `s ≤ s_max` with
/// `|α| = k ≤ k_max`, and all `n ≤ n_max`.
pub fn lemma_a2_check(n_max: usize, s_max: usize, k_max: usize) -> Result<LemmaReport> {
    // α of length s and order k: C(k-1, s-1); β of length s and order n: C(n+s-1, s-1)
    let mut terms = 0u64;
    for s in 1..=s_max {
        for k in s..=k_max {
            let alphas = binomial_u64((k - 1) as u64, (s - 1) as u64);
            for n in 0..=n_max {
                terms = terms.saturating_add(
                    alphas.saturating_mul(binomial_u64((n + s - 1) as u64, (s - 1) as u64)),
                );
            }
        }
    }
    if terms > MAX_A2_TERMS {
        return Err(Error::Capability(format!(
            "A.2 grid needs {terms} terms, above the limit {MAX_A2_TERMS}"
        )));
    }
    let mut grid = Vec::new();
    for s in 1..=s_max {
        for k in s..=k_max {
            for alpha in compositions(k, s, 1) {
                grid.extend((0..=n_max).map(|n| (alpha.clone(), n)));
            }
        }
    }
    let cases = grid
        .par_iter()
        .map(|(alpha, n)| lemma_a2_case(alpha, *n))
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::from_cases("A.2", cases))
}
