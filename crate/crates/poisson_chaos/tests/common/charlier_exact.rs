//! Exact-rational Charlier arithmetic used as an oracle.
//!
//! Monic Charlier polynomials expand in the falling-factorial basis with
//! closed-form coefficients, C_n(x; λ) = Σ_k C(n,k) (−λ)^{n−k} (x)_k, and
//! falling factorials multiply by the exact rule
//! (x)_j (x)_k = Σ_i C(j,i) C(k,i) i! (x)_{j+k−i}. Products, linearization
//! coefficients, and Poisson moments (E[(X)_k] = λ^k) therefore come out in
//! `BigRational` with no rounding at all, independent of how the production
//! code computes them.

use num::{BigInt, BigRational, One, Zero};

fn big_binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

fn big_factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Falling-factorial coefficients of the monic C_n(·; λ), degree 0..=n.
pub fn charlier_ff(n: usize, lambda: &BigRational) -> Vec<BigRational> {
    let neg = -lambda.clone();
    (0..=n)
        .map(|k| {
            let mut pow = BigRational::one();
            for _ in 0..(n - k) {
                pow *= neg.clone();
            }
            BigRational::from(big_binomial(n, k)) * pow
        })
        .collect()
}

/// Product of two polynomials given in the falling-factorial basis.
pub fn ff_multiply(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let deg = (a.len() - 1) + (b.len() - 1);
    let mut out = vec![BigRational::zero(); deg + 1];
    for (j, aj) in a.iter().enumerate() {
        if aj.is_zero() {
            continue;
        }
        for (k, bk) in b.iter().enumerate() {
            if bk.is_zero() {
                continue;
            }
            let prod = aj * bk;
            for i in 0..=j.min(k) {
                let c = BigRational::from(
                    big_binomial(j, i) * big_binomial(k, i) * big_factorial(i),
                );
                out[j + k - i] += &prod * c;
            }
        }
    }
    out
}

/// Rewrites a falling-factorial polynomial in the Charlier basis by
/// triangular elimination (C_d is monic in (x)_d).
pub fn ff_to_charlier(ff: &[BigRational], lambda: &BigRational) -> Vec<BigRational> {
    let mut rem = ff.to_vec();
    let deg = rem.len() - 1;
    let mut out = vec![BigRational::zero(); deg + 1];
    for d in (0..=deg).rev() {
        let c = rem[d].clone();
        if !c.is_zero() {
            let row = charlier_ff(d, lambda);
            for (k, rk) in row.iter().enumerate() {
                rem[k] -= &c * rk;
            }
        }
        out[d] = c;
    }
    out
}

/// Exact linearization: C_m · C_n = Σ_k coeff_k · C_k.
pub fn exact_linearization(m: usize, n: usize, lambda: &BigRational) -> Vec<BigRational> {
    let prod = ff_multiply(&charlier_ff(m, lambda), &charlier_ff(n, lambda));
    ff_to_charlier(&prod, lambda)
}

/// Exact E[C_m(X) C_n(X)] for X ~ Poisson(λ): the C_0 coefficient of the
/// linearization (all higher Charlier polynomials are centered).
pub fn exact_pair_moment(m: usize, n: usize, lambda: &BigRational) -> BigRational {
    exact_linearization(m, n, lambda)[0].clone()
}

/// Exact orthogonality normalizer n!·λⁿ.
pub fn exact_norm_sq(n: usize, lambda: &BigRational) -> BigRational {
    let mut pow = BigRational::one();
    for _ in 0..n {
        pow *= lambda.clone();
    }
    BigRational::from(big_factorial(n)) * pow
}

/// Exact C_n(k; λ) at a non-negative integer k: the falling factorials
/// (k)_j are integers, so the closed form evaluates in rationals.
pub fn exact_value_at(n: usize, k: u64, lambda: &BigRational) -> BigRational {
    ff_value_at(&charlier_ff(n, lambda), k)
}

fn ff_value_at(coeffs: &[BigRational], k: u64) -> BigRational {
    let mut falling = BigInt::one();
    let mut acc = coeffs[0].clone();
    for (j, c) in coeffs.iter().enumerate().skip(1) {
        if k < j as u64 {
            break; // (k)_j = 0 from here on
        }
        falling *= BigInt::from(k - (j as u64 - 1));
        acc += c * BigRational::from(falling.clone());
    }
    acc
}

/// E[C_m(X) C_n(X)] for X ~ Poisson(λ) by direct summation of the series
/// e^{−λ} Σ_k λᵏ/k! · C_m(k) C_n(k).
///
/// The polynomial values are exact rationals, rounded once per grid point
/// (floating recurrences are the weak link: they lose the small values near
/// x = 0 at high degree). Weights and accumulation run in f64, which costs
/// at most ~k_max·ε relative to Σ_k pmf·|C_m C_n|, and Cauchy–Schwarz bounds
/// that sum by √(m!λᵐ·n!λⁿ), the same scale callers set tolerances against.
/// The truncation tail is many orders below f64 resolution.
pub fn pmf_pair_moment(m: usize, n: usize, lambda: f64) -> f64 {
    use num::ToPrimitive;
    let lam = BigRational::from_float(lambda).expect("finite lambda");
    let cm = charlier_ff(m, &lam);
    let cn = charlier_ff(n, &lam);
    let k_max = (lambda + 30.0 * lambda.sqrt() + 4.0 * (m + n) as f64 + 25.0).ceil() as u64;
    let mut sum = 0.0;
    let mut weight = (-lambda).exp(); // e^{−λ} λᵏ/k!
    for k in 0..=k_max {
        if k > 0 {
            weight *= lambda / k as f64;
        }
        let vm = ff_value_at(&cm, k).to_f64().expect("value fits in f64");
        let vn = ff_value_at(&cn, k).to_f64().expect("value fits in f64");
        sum += weight * vm * vn;
    }
    sum
}
