//! Closed-form fourth-moment bound constants, univariate and multivariate,
//! plus the exchangeable-pair plug-in bounds they are assembled from.
//!
//! The central quantity everywhere is the fourth cumulant
//! `κ₄ = E[F⁴] − 3·E[F²]²`, which is nonnegative on a fixed chaos grade and
//! zero exactly in the Gaussian limit. The univariate Wasserstein bound is
//! `b·√κ₄` with two published constants (a grade-aware `b1` and its
//! grade-free relaxation `b2`); the multivariate smooth-distance bounds pair
//! a `Σᵢ√κ₄ᵢ` term with a quarter-power cross term, with constants `A2/B3`
//! for third-order test functions and `A1/B2` for second-order ones when the
//! covariance is invertible. [`plugin_bound_1d`] and [`plugin_bound_md`] are
//! the Stein/exchangeable-pair inequalities one level below; feeding them
//! the chaos mapping `λ = q`, `S = 2Γ(F,F)/σ² − 2q`, `ρ = ρ(F)/σ⁴`
//! reproduces the closed forms exactly, and the tests pin that identity.
//!
//! All functions here are pure and deterministic; the only numerics beyond
//! arithmetic is one symmetric eigendecomposition per [`CovMatrix`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chaos::{ChaosElement, ChaosError, InequalityCheck, SLACK_TOLERANCE};
use crate::comb::{binomial, factorial};
use crate::kernel::{Kernel, KernelError};

/// Eigenvalues below this fraction of the operator norm count as zero when
/// deciding positive definiteness.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Monte Carlo κ₄ estimates may undershoot zero by at most this fraction of
/// `σ⁴` before the input is rejected as inconsistent.
pub const KAPPA4_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("covariance matrix must be square, got {got} entries")]
    NotSquare { got: usize },
    #[error("covariance entry ({i},{j}) breaks symmetry by {gap:.3e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("covariance matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("{what} has length {got}, expected {want}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("coordinate orders must be sorted in nondecreasing order")]
    UnsortedOrders,
    #[error("the same-chaos variant requires all coordinate orders equal")]
    MixedOrders,
    #[error("coordinate {coordinate}: κ₄ = {value:.6e} is too negative to be noise")]
    NegativeKappa4 { coordinate: usize, value: f64 },
    #[error("diagonal matrix entry {i} is zero; not invertible")]
    SingularLambda { i: usize },
    #[error("{0}")]
    BadParameter(String),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// A symmetric covariance matrix with its spectral data precomputed.
///
/// Construction runs one symmetric eigendecomposition and caches the trace,
/// operator and Hilbert-Schmidt norms, the smallest eigenvalue, the inverse
/// square root when the matrix is positive definite, and a factor `L` with
/// `L·Lᵀ = Σ` for Gaussian sampling when it is positive semidefinite.
/// Eigenvalues within [`EIGENVALUE_FLOOR`]·‖Σ‖_op of zero are treated as
/// zero on both sides.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    m: DMatrix<f64>,
    trace: f64,
    op_norm: f64,
    hs_norm: f64,
    min_eigenvalue: f64,
    inv_sqrt_op_norm: Option<f64>,
    factor: Option<DMatrix<f64>>,
}

impl CovMatrix {
    /// Builds from a row-major flat slice of a `d×d` matrix.
    pub fn from_flat(d: usize, entries: &[f64]) -> Result<Self, BoundsError> {
        if d == 0 {
            return Err(BoundsError::BadParameter(
                "covariance dimension must be at least 1".into(),
            ));
        }
        if entries.len() != d * d {
            return Err(BoundsError::NotSquare { got: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(BoundsError::NonFinite);
        }
        let m = DMatrix::from_row_slice(d, d, entries);
        let scale = entries.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in i + 1..d {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > 1e-12 * scale {
                    return Err(BoundsError::NotSymmetric { i, j, gap });
                }
            }
        }
        // Work on the exactly symmetric average so the eigensolver sees a
        // symmetric matrix no matter how the input was rounded.
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let op_norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let min_eigenvalue = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        let floor = EIGENVALUE_FLOOR * op_norm.max(1e-300);
        let trace = sym.trace();
        let hs_norm = sym.norm();

        let positive_definite = min_eigenvalue > floor;
        let inv_sqrt_op_norm = positive_definite.then(|| 1.0 / min_eigenvalue.sqrt());
        let semidefinite = min_eigenvalue >= -floor;
        let factor = semidefinite.then(|| {
            let mut cols = eig.eigenvectors.clone();
            for (k, col) in cols.column_iter_mut().enumerate() {
                let lam = eig.eigenvalues[k].max(0.0);
                let s = lam.sqrt();
                let mut col = col;
                col *= s;
            }
            cols
        });

        Ok(CovMatrix {
            m: sym,
            trace,
            op_norm,
            hs_norm,
            min_eigenvalue,
            inv_sqrt_op_norm,
            factor,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, BoundsError> {
        let d = rows.len();
        let mut flat = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(BoundsError::NotSquare {
                    got: rows.iter().map(Vec::len).sum(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(d, &flat)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, BoundsError> {
        let d = diag.len();
        let mut flat = vec![0.0; d * d];
        for (i, &v) in diag.iter().enumerate() {
            flat[i * d + i] = v;
        }
        Self::from_flat(d, &flat)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_diagonal(&vec![1.0; d]).expect("identity is a valid covariance")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_positive_definite(&self) -> bool {
        self.inv_sqrt_op_norm.is_some()
    }

    /// `‖Σ^{-1/2}‖_op = 1/√λ_min`, available when positive definite.
    pub fn inv_sqrt_op_norm(&self) -> Option<f64> {
        self.inv_sqrt_op_norm
    }

    /// A factor `L` with `L·Lᵀ = Σ`, for sampling `N(0, Σ)` as `L·z`.
    /// Eigenvalues inside the noise floor are clamped to zero, so rank
    /// deficient covariances sample on their exact support.
    pub fn sampling_factor(&self) -> Result<&DMatrix<f64>, BoundsError> {
        self.factor
            .as_ref()
            .ok_or(BoundsError::NotPositiveSemidefinite {
                min_eig: self.min_eigenvalue,
            })
    }

    /// Largest |Σ_ij| over pairs whose orders differ. A chaos vector's exact
    /// covariance is block diagonal across grades, so this is genuinely zero
    /// (not merely small) when the inputs are exact.
    pub fn max_cross_order_entry(&self, orders: &[usize]) -> Result<f64, BoundsError> {
        if orders.len() != self.dim() {
            return Err(BoundsError::DimensionMismatch {
                what: "orders",
                got: orders.len(),
                want: self.dim(),
            });
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if orders[i] != orders[j] {
                    worst = worst.max(self.m[(i, j)].abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Smoothness constants of a test function: minimum Lipschitz constants of
/// the function and its first two derivative tensors, plus the sup of the
/// Hessian's Hilbert-Schmidt norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothnessSpec {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m2_tilde: f64,
}

impl SmoothnessSpec {
    pub fn new(m1: f64, m2: f64, m3: f64, m2_tilde: f64) -> Result<Self, BoundsError> {
        for (name, v) in [("m1", m1), ("m2", m2), ("m3", m3), ("m2_tilde", m2_tilde)] {
            if !v.is_finite() || v < 0.0 {
                return Err(BoundsError::BadParameter(format!(
                    "smoothness constant {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(SmoothnessSpec { m1, m2, m3, m2_tilde })
    }

    /// Constants of `x ↦ cos(⟨u,x⟩)` and `x ↦ sin(⟨u,x⟩)`: every derivative
    /// tensor has norm `‖u‖^k`, and the Hessian `±cos(⟨u,x⟩)·u uᵀ` has
    /// Hilbert-Schmidt norm at most `‖u‖²`.
    pub fn for_direction(u: &[f64]) -> Self {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        SmoothnessSpec {
            m1: norm,
            m2: norm * norm,
            m3: norm * norm * norm,
            m2_tilde: norm * norm,
        }
    }

    /// The Hessian sup-norm can never exceed `√d` times the second Lipschitz
    /// constant; inputs violating that are inconsistent.
    pub fn check_dimension(&self, d: usize) -> Result<(), BoundsError> {
        let cap = (d as f64).sqrt() * self.m2;
        if self.m2_tilde > cap * (1.0 + 1e-12) + 1e-300 {
            return Err(BoundsError::BadParameter(format!(
                "m2_tilde = {} exceeds √d·m2 = {cap}",
                self.m2_tilde
            )));
        }
        Ok(())
    }
}

/// The univariate Wasserstein constants: `d_W(F, σN) ≤ b·√κ₄`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UnivariateBound {
    /// Grade-aware constant `((2q−1)/(σq√(2π)) + (2/(3σ))·√((4q−3)/q))`
    /// times `√κ₄`.
    pub b1: f64,
    /// Grade-free relaxation `((1/σ)·√(2/π) + 4/(3σ))·√κ₄`; always ≥ b1.
    pub b2: f64,
    /// Set when a slightly negative κ₄ (Monte Carlo noise within
    /// [`KAPPA4_TOLERANCE`]·σ⁴) was clamped to zero.
    pub kappa4_clamped: bool,
}

/// Evaluates both univariate constants for a grade-q element with variance
/// `sigma2` and fourth cumulant `kappa4`.
pub fn univariate_bound(q: usize, sigma2: f64, kappa4: f64) -> Result<UnivariateBound, BoundsError> {
    if q == 0 {
        return Err(BoundsError::BadParameter("grade q must be at least 1".into()));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(BoundsError::BadParameter(format!(
            "variance must be positive and finite, got {sigma2}"
        )));
    }
    let (kappa4, kappa4_clamped) = clamp_kappa4(kappa4, sigma2 * sigma2, 0)?;
    let sigma = sigma2.sqrt();
    let qf = q as f64;
    let root = kappa4.sqrt();
    let tau = std::f64::consts::TAU;
    let b1 = ((2.0 * qf - 1.0) / (sigma * qf * tau.sqrt())
        + 2.0 / (3.0 * sigma) * ((4.0 * qf - 3.0) / qf).sqrt())
        * root;
    let b2 = ((2.0 / std::f64::consts::PI).sqrt() / sigma + 4.0 / (3.0 * sigma)) * root;
    Ok(UnivariateBound {
        b1,
        b2,
        kappa4_clamped,
    })
}

fn clamp_kappa4(kappa4: f64, sigma4: f64, coordinate: usize) -> Result<(f64, bool), BoundsError> {
    if !kappa4.is_finite() {
        return Err(BoundsError::NegativeKappa4 {
            coordinate,
            value: kappa4,
        });
    }
    if kappa4 >= 0.0 {
        Ok((kappa4, false))
    } else if kappa4 >= -KAPPA4_TOLERANCE * sigma4.max(1e-300) {
        Ok((0.0, true))
    } else {
        Err(BoundsError::NegativeKappa4 {
            coordinate,
            value: kappa4,
        })
    }
}

/// The multivariate smooth-distance constants for a vector with grades
/// between `q1` and `qd` in dimension `d`.
///
/// `a2`/`b3` exist for any covariance; `a1`/`b2` need `Σ` positive definite
/// and are `None` otherwise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MultivariateConstants {
    pub a2: f64,
    pub b3: f64,
    pub a1: Option<f64>,
    pub b2: Option<f64>,
}

pub fn multivariate_constants(
    q1: usize,
    qd: usize,
    d: usize,
    sigma: &CovMatrix,
    spec: &SmoothnessSpec,
) -> Result<MultivariateConstants, BoundsError> {
    if q1 == 0 || q1 > qd {
        return Err(BoundsError::BadParameter(format!(
            "need 1 ≤ q1 ≤ qd, got q1 = {q1}, qd = {qd}"
        )));
    }
    if d == 0 || sigma.dim() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "covariance",
            got: sigma.dim(),
            want: d,
        });
    }
    spec.check_dimension(d)?;
    let (q1f, qdf, df) = (q1 as f64, qd as f64, d as f64);
    let a2 = (2.0 * qdf - 1.0) * (2.0 * df).sqrt() / (4.0 * q1f) * spec.m2;
    let b3 = a2 + 2.0 * qdf * (df * sigma.trace()).sqrt() / (9.0 * q1f) * spec.m3;
    let (a1, b2) = match sigma.inv_sqrt_op_norm() {
        Some(inv_sqrt) => {
            let a1 = (2.0 * qdf - 1.0) * inv_sqrt / (q1f * std::f64::consts::PI.sqrt()) * spec.m1;
            let b2 = a1
                + qdf * std::f64::consts::TAU.sqrt() * inv_sqrt * sigma.trace().sqrt()
                    / (6.0 * q1f)
                    * spec.m2;
            (Some(a1), Some(b2))
        }
        None => (None, None),
    };
    Ok(MultivariateConstants { a2, b3, a1, b2 })
}

/// Which assembled multivariate bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Third-order test functions: constants `B3`/`A2`, any covariance.
    C3,
    /// Second-order test functions: constants `B2`/`A1`, positive definite
    /// covariance required.
    C2,
    /// All coordinates on one grade: the quarter-power cross term vanishes
    /// and `B3·Σᵢ√κ₄ᵢ` alone bounds the distance.
    SameChaos,
}

impl BoundVariant {
    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::C3 => "c3",
            BoundVariant::C2 => "c2",
            BoundVariant::SameChaos => "same_chaos",
        }
    }
}

/// One additive term of an assembled bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
}

/// An assembled bound with its constants, terms, and input fingerprint.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub constants: BTreeMap<String, f64>,
    pub terms: Vec<BoundTerm>,
    pub total: f64,
    /// Whether any κ₄ input was clamped from slightly negative to zero.
    pub kappa4_clamped: bool,
    pub inputs_digest: String,
}

impl BoundReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Assembles the smooth-distance bound for a chaos vector from per-coordinate
/// moments.
///
/// `orders` must be sorted nondecreasing (the cross term pairs lower
/// coordinates' fourth moments with higher coordinates' cumulants, so the
/// coordinate order is part of the statement). `kappa4s` and
/// `fourth_moments` are per coordinate; slightly negative cumulants are
/// clamped per [`KAPPA4_TOLERANCE`]. In dimension 1 the cross term is an
/// empty sum.
pub fn multivariate_bound(
    orders: &[usize],
    sigma: &CovMatrix,
    kappa4s: &[f64],
    fourth_moments: &[f64],
    spec: &SmoothnessSpec,
    variant: BoundVariant,
) -> Result<BoundReport, BoundsError> {
    let d = orders.len();
    if d == 0 {
        return Err(BoundsError::BadParameter("need at least one coordinate".into()));
    }
    if sigma.dim() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "covariance",
            got: sigma.dim(),
            want: d,
        });
    }
    if kappa4s.len() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "kappa4s",
            got: kappa4s.len(),
            want: d,
        });
    }
    if fourth_moments.len() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "fourth_moments",
            got: fourth_moments.len(),
            want: d,
        });
    }
    if orders.windows(2).any(|w| w[0] > w[1]) {
        return Err(BoundsError::UnsortedOrders);
    }
    if orders[0] == 0 {
        return Err(BoundsError::BadParameter("orders must be at least 1".into()));
    }
    if variant == BoundVariant::SameChaos && orders.iter().any(|&q| q != orders[0]) {
        return Err(BoundsError::MixedOrders);
    }

    let mut clamped = false;
    let mut kappas = Vec::with_capacity(d);
    for (i, &k) in kappa4s.iter().enumerate() {
        let sigma4 = sigma.entry(i, i).powi(2);
        let (k, c) = clamp_kappa4(k, sigma4, i)?;
        clamped |= c;
        kappas.push(k);
    }

    let constants = multivariate_constants(orders[0], orders[d - 1], d, sigma, spec)?;
    let (leading_name, leading_const, cross_name, cross_const) = match variant {
        BoundVariant::C3 => ("B3", constants.b3, "A2", constants.a2),
        BoundVariant::SameChaos => ("B3", constants.b3, "A2", constants.a2),
        BoundVariant::C2 => {
            let (Some(b2), Some(a1)) = (constants.b2, constants.a1) else {
                return Err(BoundsError::NotPositiveDefinite {
                    min_eig: sigma.min_eigenvalue(),
                });
            };
            ("B2", b2, "A1", a1)
        }
    };

    let cumulant_sum: f64 = kappas.iter().map(|k| k.sqrt()).sum();
    let leading = leading_const * cumulant_sum;
    let cross = if variant == BoundVariant::SameChaos {
        0.0
    } else {
        let moments: f64 = fourth_moments[..d - 1]
            .iter()
            .map(|m| m.max(0.0).powf(0.25))
            .sum();
        let tails: f64 = kappas[1..].iter().map(|k| k.powf(0.25)).sum();
        cross_const * moments * tails
    };

    let mut constants_map = BTreeMap::new();
    constants_map.insert("A2".to_string(), constants.a2);
    constants_map.insert("B3".to_string(), constants.b3);
    if let (Some(a1), Some(b2)) = (constants.a1, constants.b2) {
        constants_map.insert("A1".to_string(), a1);
        constants_map.insert("B2".to_string(), b2);
    }

    let mut hasher = Sha256::new();
    hasher.update(variant.name().as_bytes());
    for &q in orders {
        hasher.update((q as u64).to_le_bytes());
    }
    for i in 0..d {
        for j in 0..d {
            hasher.update(sigma.entry(i, j).to_bits().to_le_bytes());
        }
    }
    for v in kappa4s.iter().chain(fourth_moments) {
        hasher.update(v.to_bits().to_le_bytes());
    }
    for v in [spec.m1, spec.m2, spec.m3, spec.m2_tilde] {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let inputs_digest = format!("{:x}", hasher.finalize());

    Ok(BoundReport {
        variant,
        constants: constants_map,
        terms: vec![
            BoundTerm {
                name: format!("{leading_name}·Σ√κ₄"),
                value: leading,
            },
            BoundTerm {
                name: format!("{cross_name}·(ΣE[F⁴]^(1/4))·(Σκ₄^(1/4))"),
                value: cross,
            },
        ],
        total: leading + cross,
        kappa4_clamped: clamped,
        inputs_digest,
    })
}

/// The scalar exchangeable-pair bound: for a pair with contraction rate `λ`,
/// remainder `S`, and quartic rate `ρ`,
/// `d_W ≤ (√Var(Y)/(λ√(2π)))·E|S| + (√((2λ + E[S])·Var(Y))/(3λ))·√ρ`.
pub fn plugin_bound_1d(
    lambda: f64,
    mean_abs_s: f64,
    mean_s: f64,
    var_y: f64,
    rho_y: f64,
) -> Result<f64, BoundsError> {
    if !(lambda > 0.0) {
        return Err(BoundsError::BadParameter(format!(
            "pair rate λ must be positive, got {lambda}"
        )));
    }
    if !(var_y > 0.0) {
        return Err(BoundsError::BadParameter(format!(
            "Var(Y) must be positive, got {var_y}"
        )));
    }
    if rho_y < 0.0 || mean_abs_s < 0.0 {
        return Err(BoundsError::BadParameter(
            "ρ(Y) and E|S| must be nonnegative".into(),
        ));
    }
    let shifted = 2.0 * lambda + mean_s;
    if shifted < 0.0 {
        return Err(BoundsError::BadParameter(format!(
            "2λ + E[S] must be nonnegative, got {shifted}"
        )));
    }
    Ok(var_y.sqrt() / (lambda * std::f64::consts::TAU.sqrt()) * mean_abs_s
        + (shifted * var_y).sqrt() / (3.0 * lambda) * rho_y.sqrt())
}

/// The multivariate exchangeable-pair bound with diagonal contraction matrix
/// `Λ`: `Θ₁·E‖S‖_HS + Θ₂·√(Σᵢ(2Λᵢᵢ·Σᵢᵢ + E[Sᵢᵢ]))·√(Σᵢρᵢ)` for third-order
/// test functions, or the `K₁/K₂` analogue for second-order ones when `Σ` is
/// positive definite.
pub fn plugin_bound_md(
    lambda_diag: &[f64],
    sigma: &CovMatrix,
    mean_hs_s: f64,
    mean_s_diag: &[f64],
    rhos: &[f64],
    spec: &SmoothnessSpec,
    variant: BoundVariant,
) -> Result<f64, BoundsError> {
    let d = sigma.dim();
    if lambda_diag.len() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "lambda_diag",
            got: lambda_diag.len(),
            want: d,
        });
    }
    if mean_s_diag.len() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "mean_s_diag",
            got: mean_s_diag.len(),
            want: d,
        });
    }
    if rhos.len() != d {
        return Err(BoundsError::DimensionMismatch {
            what: "rhos",
            got: rhos.len(),
            want: d,
        });
    }
    if let Some(i) = lambda_diag.iter().position(|&l| l == 0.0 || !l.is_finite()) {
        return Err(BoundsError::SingularLambda { i });
    }
    if mean_hs_s < 0.0 || rhos.iter().any(|&r| r < 0.0) {
        return Err(BoundsError::BadParameter(
            "E‖S‖ and the ρᵢ must be nonnegative".into(),
        ));
    }
    spec.check_dimension(d)?;

    let inv_lambda_op = lambda_diag.iter().fold(0.0f64, |a, &l| a.max(1.0 / l.abs()));
    let df = d as f64;
    let (c1, c2) = match variant {
        BoundVariant::C3 | BoundVariant::SameChaos => {
            let theta1 = inv_lambda_op * spec.m2 * df.sqrt() / 4.0;
            let theta2 = df.sqrt() * spec.m3 * inv_lambda_op / 18.0;
            (theta1, theta2)
        }
        BoundVariant::C2 => {
            let inv_sqrt = sigma
                .inv_sqrt_op_norm()
                .ok_or(BoundsError::NotPositiveDefinite {
                    min_eig: sigma.min_eigenvalue(),
                })?;
            let k1 = spec.m1 * inv_lambda_op * inv_sqrt / std::f64::consts::TAU.sqrt();
            let k2 = std::f64::consts::TAU.sqrt() * spec.m2 * inv_lambda_op * inv_sqrt / 24.0;
            (k1, k2)
        }
    };

    let mut inner = 0.0;
    for i in 0..d {
        inner += 2.0 * lambda_diag[i] * sigma.entry(i, i) + mean_s_diag[i];
    }
    if inner < 0.0 {
        return Err(BoundsError::BadParameter(format!(
            "Σᵢ(2Λᵢᵢ·Σᵢᵢ + E[Sᵢᵢ]) must be nonnegative, got {inner}"
        )));
    }
    let rho_sum: f64 = rhos.iter().sum();
    Ok(c1 * mean_hs_s + c2 * inner.sqrt() * rho_sum.sqrt())
}

/// One element of a transfer study: the exact fourth cumulant, all nontrivial
/// contraction norms, and the inequality tying them together.
#[derive(Debug, Clone, Serialize)]
pub struct TransferRow {
    pub kappa4: f64,
    /// `‖f ⊗_r f‖` for r = 1, …, q−1.
    pub contraction_norms: Vec<f64>,
    /// `q!²·Σ_r C(q,r)²·‖f ⊗_r f‖² ≤ κ₄`.
    pub inequality: InequalityCheck,
}

/// Exact side of the transfer principle along a kernel sequence.
#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub order: usize,
    pub tol: f64,
    pub rows: Vec<TransferRow>,
    /// Final κ₄ at or below `tol`.
    pub kappa4_vanishes: bool,
    /// Final contraction norms within the budget `√κ₄/q!` the inequality
    /// allows, evaluated at `max(κ₄, tol)`.
    pub contractions_vanish: bool,
    pub all_ok: bool,
}

/// Walks a sequence of same-order kernels and verifies, exactly, that the
/// squared contraction norms stay dominated by the fourth cumulant, so
/// `κ₄ → 0` forces every contraction norm to zero.
///
/// Kernels must be symmetric with order ≥ 1. The Gaussian-driver side of the
/// transfer statement is empirical and lives with the experiment runners;
/// this check is the exact half.
pub fn transfer_principle_check(kernels: &[Kernel], tol: f64) -> Result<TransferReport, BoundsError> {
    if kernels.is_empty() {
        return Err(BoundsError::BadParameter("need at least one kernel".into()));
    }
    if !(tol > 0.0) {
        return Err(BoundsError::BadParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let order = kernels[0].order();
    if order == 0 {
        return Err(BoundsError::BadParameter("kernel order must be at least 1".into()));
    }
    let qfact = factorial(order);

    let mut rows = Vec::with_capacity(kernels.len());
    for kernel in kernels {
        if kernel.order() != order {
            return Err(BoundsError::BadParameter(format!(
                "kernel orders are mixed: {} vs {order}",
                kernel.order()
            )));
        }
        if !kernel.is_symmetric() {
            return Err(BoundsError::Kernel(KernelError::NotSymmetric));
        }
        let element = ChaosElement::from_kernel(kernel)?;
        let kappa4 = element.fourth_cumulant()?;

        let mut contraction_norms = Vec::with_capacity(order.saturating_sub(1));
        let mut weighted_sum = 0.0;
        for r in 1..order {
            let norm = kernel.contract(kernel, r)?.norm();
            let binom = binomial(order, r);
            weighted_sum += qfact * qfact * binom * binom * norm * norm;
            contraction_norms.push(norm);
        }
        let scale = weighted_sum.abs().max(kappa4.abs());
        let slack = kappa4 - weighted_sum;
        rows.push(TransferRow {
            kappa4,
            contraction_norms,
            inequality: InequalityCheck {
                name: "contraction sum vs fourth cumulant",
                lhs: weighted_sum,
                rhs: kappa4,
                slack,
                scale,
                ok: slack >= -SLACK_TOLERANCE * scale,
            },
        });
    }

    let last = rows.last().expect("nonempty");
    let kappa4_vanishes = last.kappa4 <= tol;
    let budget = last.kappa4.max(tol).max(0.0).sqrt() / qfact;
    let contractions_vanish = last
        .contraction_norms
        .iter()
        .all(|&n| n <= budget * (1.0 + 1e-9));
    let all_ok = rows.iter().all(|r| r.inequality.ok) && (!kappa4_vanishes || contractions_vanish);
    Ok(TransferReport {
        order,
        tol,
        rows,
        kappa4_vanishes,
        contractions_vanish,
        all_ok,
    })
}
