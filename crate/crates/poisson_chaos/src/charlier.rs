//! Monic Charlier polynomials: the orthogonal family of the Poisson law.
//!
//! For intensity `λ > 0` the monic Charlier polynomials satisfy
//!
//! ```text
//!   C_0 = 1,   C_1(x) = x − λ,
//!   C_{n+1}(x) = (x − n − λ)·C_n(x) − n·λ·C_{n−1}(x),
//! ```
//!
//! and are orthogonal for `X ~ Poisson(λ)` with `E[C_m(X) C_n(X)] =
//! δ_{mn}·n!·λⁿ`. They realize multiple Wiener-Itô integrals on a single
//! atom, which makes their product structure the computational core of the
//! chaos layer.
//!
//! Products are linearized **in the Charlier basis**: multiplication by `x`
//! acts tridiagonally,
//!
//! ```text
//!   x·C_j = C_{j+1} + (j + λ)·C_j + j·λ·C_{j−1},
//! ```
//!
//! so `C_m·C_n` is built by running the recurrence for `C_n` with `C_m` as
//! the starting vector. All intermediate quantities stay on the scale of the
//! answer. (Multiplying in the monomial basis instead loses
//! `log₁₀(λ^{m+n}/(n!λⁿ))` digits to cancellation — at `λ = 100, m = n = 16`
//! that is *all* of them, which is why the monomial route is provided only
//! as a conversion utility, not as the product path.)

use serde::Serialize;

/// Largest polynomial degree the table supports. Chaos elements of order up
/// to 4 need products up to degree 8 per cell; the cap leaves generous room
/// for composed operations (e.g. fourth moments of order-8 squares).
pub const MAX_DEGREE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum CharlierError {
    #[error("intensity must be positive and finite, got {0}")]
    BadIntensity(f64),
    #[error("degree {got} exceeds the table cap {cap}")]
    DegreeCap { got: usize, cap: usize },
}

/// Evaluates the monic `C_n(x; λ)` by the forward recurrence.
///
/// Accurate to a few ulp of the orthogonality scale `√(n!λⁿ)` for degrees
/// up to 8 across λ ∈ [0.1, 100]. Past that the recurrence cancels near
/// x = 0 when λ is small (the intermediate terms sit on the `n·λⁿ` scale
/// while the value is `λⁿ`), so deep evaluations should not be trusted
/// pointwise; moment computations go through [`CharlierTable::linearize`]
/// instead, which does not evaluate anything.
pub fn charlier_value(n: usize, x: f64, lambda: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x - lambda;
    for k in 1..n {
        let next = (x - k as f64 - lambda) * cur - k as f64 * lambda * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Precomputed Charlier data for one intensity: conversion matrices between
/// the monomial and Charlier bases, orthogonality normalizers, and the
/// product linearizer. Built once per `(λ, degree)` and shared read-only.
#[derive(Debug, Clone, Serialize)]
pub struct CharlierTable {
    lambda: f64,
    max_degree: usize,
    /// Row `n` = monomial coefficients of C_n (length n+1, unit leading).
    monomial_of_charlier: Vec<Vec<f64>>,
    /// Row `k` = Charlier coefficients of xᵏ (length k+1, unit leading).
    charlier_of_monomial: Vec<Vec<f64>>,
}

impl CharlierTable {
    pub fn new(lambda: f64, max_degree: usize) -> Result<Self, CharlierError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CharlierError::BadIntensity(lambda));
        }
        if max_degree > MAX_DEGREE {
            return Err(CharlierError::DegreeCap {
                got: max_degree,
                cap: MAX_DEGREE,
            });
        }
        // Monomial rows by the polynomial recurrence.
        let mut moc: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        moc.push(vec![1.0]);
        if max_degree >= 1 {
            moc.push(vec![-lambda, 1.0]);
        }
        for n in 1..max_degree {
            let mut next = vec![0.0; n + 2];
            for (k, &c) in moc[n].iter().enumerate() {
                next[k + 1] += c; // x·C_n
                next[k] -= (n as f64 + lambda) * c;
            }
            for (k, &c) in moc[n - 1].iter().enumerate() {
                next[k] -= n as f64 * lambda * c;
            }
            moc.push(next);
        }
        // Inverse rows by triangular elimination (both bases are monic).
        let mut com: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        for k in 0..=max_degree {
            let mut rem = vec![0.0; k + 1];
            rem[k] = 1.0;
            let mut row = vec![0.0; k + 1];
            for d in (0..=k).rev() {
                let c = rem[d];
                row[d] = c;
                if c != 0.0 {
                    for (j, &m) in moc[d].iter().enumerate() {
                        rem[j] -= c * m;
                    }
                }
            }
            com.push(row);
        }
        Ok(CharlierTable {
            lambda,
            max_degree,
            monomial_of_charlier: moc,
            charlier_of_monomial: com,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Orthogonality normalizer `E[C_n²] = n!·λⁿ`.
    pub fn norm_sq(&self, n: usize) -> f64 {
        let mut acc = 1.0;
        for k in 1..=n {
            acc *= k as f64 * self.lambda;
        }
        acc
    }

    pub fn evaluate(&self, n: usize, x: f64) -> f64 {
        charlier_value(n, x, self.lambda)
    }

    /// Monomial coefficients of C_n, constant term first.
    pub fn monomial_of_charlier(&self, n: usize) -> &[f64] {
        &self.monomial_of_charlier[n]
    }

    /// Charlier coefficients of xᵏ, C_0 coefficient first.
    pub fn charlier_of_monomial(&self, k: usize) -> &[f64] {
        &self.charlier_of_monomial[k]
    }

    /// Rewrites a polynomial from monomial to Charlier coefficients.
    pub fn to_charlier_basis(&self, monomial: &[f64]) -> Result<Vec<f64>, CharlierError> {
        self.check_degree(monomial.len().saturating_sub(1))?;
        let mut out = vec![0.0; monomial.len()];
        for (k, &c) in monomial.iter().enumerate() {
            if c != 0.0 {
                for (j, &w) in self.charlier_of_monomial[k].iter().enumerate() {
                    out[j] += c * w;
                }
            }
        }
        Ok(out)
    }

    /// Rewrites a polynomial from Charlier to monomial coefficients.
    pub fn to_monomial_basis(&self, charlier: &[f64]) -> Result<Vec<f64>, CharlierError> {
        self.check_degree(charlier.len().saturating_sub(1))?;
        let mut out = vec![0.0; charlier.len()];
        for (n, &c) in charlier.iter().enumerate() {
            if c != 0.0 {
                for (j, &w) in self.monomial_of_charlier[n].iter().enumerate() {
                    out[j] += c * w;
                }
            }
        }
        Ok(out)
    }

    /// Linearization coefficients of `C_m · C_n = Σ_k coeff_k · C_k`
    /// (length `m + n + 1`), computed in the Charlier basis.
    pub fn linearize(&self, m: usize, n: usize) -> Result<Vec<f64>, CharlierError> {
        self.check_degree(m + n)?;
        let lambda = self.lambda;
        let len = m + n + 1;
        // v_k holds C_m·C_k; run the C-recurrence in k with vector values.
        let mut v_prev = vec![0.0; len];
        let mut v_cur = vec![0.0; len];
        v_prev[m] = 1.0;
        if n == 0 {
            return Ok(v_prev);
        }
        // C_m·C_1 = x·C_m − λ·C_m.
        apply_x(&v_prev, &mut v_cur, lambda);
        v_cur[m] -= lambda;
        let mut scratch = vec![0.0; len];
        for k in 1..n {
            apply_x(&v_cur, &mut scratch, lambda);
            let kf = k as f64;
            for i in 0..len {
                scratch[i] += -(kf + lambda) * v_cur[i] - kf * lambda * v_prev[i];
            }
            std::mem::swap(&mut v_prev, &mut v_cur);
            std::mem::swap(&mut v_cur, &mut scratch);
        }
        // Coefficients below |m − n| vanish by orthogonality: the coefficient
        // of C_k is E[C_m C_n C_k] / (k! λ^k), and C_n·C_k has grade below m
        // whenever k < m − n. Pin them to exact zero so products never leak
        // roundoff mass into low grades.
        for slot in v_cur.iter_mut().take(m.abs_diff(n)) {
            *slot = 0.0;
        }
        Ok(v_cur)
    }

    fn check_degree(&self, d: usize) -> Result<(), CharlierError> {
        if d > self.max_degree {
            Err(CharlierError::DegreeCap {
                got: d,
                cap: self.max_degree,
            })
        } else {
            Ok(())
        }
    }
}

/// out[i] = coefficient of C_i in x·(Σ_j v_j C_j).
fn apply_x(v: &[f64], out: &mut [f64], lambda: f64) {
    let len = v.len();
    for i in 0..len {
        let mut acc = (i as f64 + lambda) * v[i];
        if i > 0 {
            acc += v[i - 1];
        }
        if i + 1 < len {
            acc += (i as f64 + 1.0) * lambda * v[i + 1];
        }
        out[i] = acc;
    }
}
