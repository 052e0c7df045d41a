//! Empirical distances and moment estimators.
//!
//! The univariate distance is the exact empirical 1-Wasserstein distance by
//! sorted coupling. In higher dimension no single empirical metric matches
//! what the multivariate theorems control, so [`smooth_test_distance`]
//! reports one gap per smooth test function together with that function's
//! own smoothness constants; any finite family under-estimates the full
//! Lipschitz supremum, so the statistic is a lower bound on `d_W` and the
//! reports label it as such. Standard errors of means are jackknife errors,
//! which for a plain mean collapse to the classical `s/√n`; the fourth
//! cumulant estimator carries an influence-function standard error instead
//! since it is a nonlinear functional of four moments.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::{BoundsError, CovMatrix, SmoothnessSpec};
use crate::rng::{stream, StreamPurpose};
use crate::sim::SampleMatrix;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    BadSample(String),
    #[error("{what} has dimension {got}, expected {want}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("need at least {need} replications for standard errors, got {got}")]
    SmallSample { got: usize, need: usize },
    #[error("sample set is empty")]
    Empty,
    #[error("bad sample file: {0}")]
    Format(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// An n×d matrix of replications with the seed and a provenance string
/// carried along. Columns are coordinates; rows are independent draws.
///
/// Invariants held by every constructor: at least two rows, all entries
/// finite, all columns equally long.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    columns: Vec<Vec<f64>>,
    n: usize,
    seed: u64,
    provenance: String,
}

impl SampleSet {
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self, StatsError> {
        if columns.is_empty() {
            return Err(StatsError::Empty);
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(StatsError::BadSample(format!(
                "need at least 2 replications, got {n}"
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(StatsError::BadSample(format!(
                    "column {j} has {} entries, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::BadSample(format!(
                    "column {j} contains a non-finite entry"
                )));
            }
        }
        Ok(SampleSet {
            columns,
            n,
            seed,
            provenance: provenance.into(),
        })
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self, StatsError> {
        if rows.is_empty() {
            return Err(StatsError::Empty);
        }
        let d = rows[0].len();
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(StatsError::BadSample(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                columns[j].push(v);
            }
        }
        Self::from_columns(columns, seed, provenance)
    }

    /// Adopts a simulated homogeneous-sum matrix, recording its driver,
    /// orders, and kernel digests as provenance.
    pub fn from_sample_matrix(matrix: &SampleMatrix) -> Result<Self, StatsError> {
        let columns: Vec<Vec<f64>> = (0..matrix.cols()).map(|j| matrix.column(j)).collect();
        let provenance = format!(
            "driver: {}; orders: {}; kernels: {}",
            matrix.driver().name(),
            matrix
                .orders()
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(","),
            matrix.kernel_digests().join(",")
        );
        Self::from_columns(columns, matrix.seed(), provenance)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Writes the same CSV shape the simulation layer emits: `#` metadata
    /// comments, an `F1,…,Fd` header, one row per replication, floats in
    /// shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# provenance: {}", self.provenance)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record((1..=self.n_cols()).map(|j| format!("F{j}")))?;
        for i in 0..self.n {
            csv.write_record(self.columns.iter().map(|c| format!("{}", c[i])))?;
        }
        csv.flush()
    }

    /// Reads any sample CSV in the crate's format, including files written
    /// by the simulation layer. The `seed` comment is required; every other
    /// comment line is folded into the provenance string.
    pub fn read_csv<R: Read>(mut r: R) -> Result<Self, StatsError> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| StatsError::Format(e.to_string()))?;

        let mut seed = None;
        let mut notes: Vec<String> = Vec::new();
        let mut body_start = 0;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            body_start += line.len() + 1;
            let rest = rest.trim();
            match rest.split_once(':') {
                Some((key, value)) if key.trim() == "seed" => {
                    seed = Some(value.trim().parse::<u64>().map_err(|_| {
                        StatsError::Format(format!("bad seed {:?}", value.trim()))
                    })?);
                }
                Some((key, value)) if key.trim() == "provenance" => {
                    notes.push(value.trim().to_string());
                }
                _ => notes.push(rest.to_string()),
            }
        }
        let seed = seed.ok_or_else(|| StatsError::Format("missing seed comment".into()))?;

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text[body_start..].as_bytes());
        let d = reader
            .headers()
            .map_err(|e| StatsError::Format(e.to_string()))?
            .len();
        let mut columns = vec![Vec::new(); d];
        for record in reader.records() {
            let record = record.map_err(|e| StatsError::Format(e.to_string()))?;
            if record.len() != d {
                return Err(StatsError::Format(format!(
                    "row has {} fields, expected {d}",
                    record.len()
                )));
            }
            for (j, field) in record.iter().enumerate() {
                let v = field
                    .parse::<f64>()
                    .map_err(|_| StatsError::Format(format!("bad float {field:?}")))?;
                columns[j].push(v);
            }
        }
        Self::from_columns(columns, seed, notes.join("; "))
    }
}

/// Exact empirical 1-Wasserstein distance between two equally sized slices:
/// sort both and average the absolute gaps, which realizes the optimal
/// coupling in one dimension.
pub fn wasserstein1_sorted_slices(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    if a.len() != b.len() {
        return Err(StatsError::DimensionMismatch {
            what: "sample sizes",
            got: b.len(),
            want: a.len(),
        });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n)
}

/// Empirical 1-d Wasserstein distance between two univariate sample sets.
///
/// Unequal sizes are reconciled by down-sampling the larger set without
/// replacement, deterministically from its own declared seed, before the
/// sorted coupling is taken.
pub fn wasserstein1_1d(a: &SampleSet, b: &SampleSet) -> Result<f64, StatsError> {
    if a.n_cols() != 1 {
        return Err(StatsError::DimensionMismatch {
            what: "left sample set",
            got: a.n_cols(),
            want: 1,
        });
    }
    if b.n_cols() != 1 {
        return Err(StatsError::DimensionMismatch {
            what: "right sample set",
            got: b.n_cols(),
            want: 1,
        });
    }
    let (xs, ys) = match a.n_rows().cmp(&b.n_rows()) {
        std::cmp::Ordering::Equal => (a.column(0).to_vec(), b.column(0).to_vec()),
        std::cmp::Ordering::Greater => (
            subsample(a.column(0), b.n_rows(), a.seed()),
            b.column(0).to_vec(),
        ),
        std::cmp::Ordering::Less => (
            a.column(0).to_vec(),
            subsample(b.column(0), a.n_rows(), b.seed()),
        ),
    };
    wasserstein1_sorted_slices(&xs, &ys)
}

/// First `m` entries of a seeded Fisher-Yates pass: a uniform sample of `m`
/// distinct positions.
fn subsample(values: &[f64], m: usize, seed: u64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let mut rng = stream(seed, StreamPurpose::Resample, 0, 0);
    for i in 0..m {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    idx[..m].iter().map(|&i| values[i]).collect()
}

/// Empirical W₁ between two equally sized slices plus a bootstrap standard
/// error: both sides are resampled with replacement `n_boot` times from
/// dedicated streams and the spread of the resampled distances is reported.
pub fn wasserstein1_bootstrap(
    a: &[f64],
    b: &[f64],
    n_boot: usize,
    seed: u64,
) -> Result<(f64, f64), StatsError> {
    let w1 = wasserstein1_sorted_slices(a, b)?;
    if n_boot < 2 {
        return Err(StatsError::BadSample(format!(
            "need at least 2 bootstrap replicates, got {n_boot}"
        )));
    }
    let n = a.len();
    let replicates: Vec<f64> = (0..n_boot as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng_a = stream(seed, StreamPurpose::Bootstrap, rep, 0);
            let mut rng_b = stream(seed, StreamPurpose::Bootstrap, rep, 1);
            let xs: Vec<f64> = (0..n).map(|_| a[rng_a.random_range(0..n)]).collect();
            let ys: Vec<f64> = (0..n).map(|_| b[rng_b.random_range(0..n)]).collect();
            wasserstein1_sorted_slices(&xs, &ys).expect("resampled slices are valid")
        })
        .collect();
    let (_, se_of_mean) = mean_with_se(replicates.iter().copied());
    // The bootstrap SE is the spread of the replicates themselves, not the
    // standard error of their mean.
    Ok((w1, se_of_mean * (n_boot as f64).sqrt()))
}

/// One test function's gap between a sample set and the Gaussian reference.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothGap {
    pub direction: Vec<f64>,
    /// "cos" or "sin".
    pub function: &'static str,
    pub smoothness: SmoothnessSpec,
    pub sample_mean: f64,
    pub gaussian_mean: f64,
    pub gap: f64,
    pub se: f64,
}

/// Per-test-function distances to a Gaussian law. Any finite family of test
/// functions bounds the Lipschitz supremum from below, never above.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothDistanceReport {
    pub statistic: &'static str,
    pub n_sample: usize,
    pub n_gauss: usize,
    pub gaps: Vec<SmoothGap>,
}

impl SmoothDistanceReport {
    /// Largest gap over the family, the working lower bound on `d_W`.
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().fold(0.0, |a, g| a.max(g.gap))
    }
}

/// The default direction family: every coordinate axis plus the diagonal,
/// each at norms 0.5, 1, and 2.
pub fn default_directions(d: usize) -> Vec<Vec<f64>> {
    let mut units: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut u = vec![0.0; d];
            u[j] = 1.0;
            u
        })
        .collect();
    if d > 1 {
        let c = 1.0 / (d as f64).sqrt();
        units.push(vec![c; d]);
    }
    let mut family = Vec::with_capacity(3 * units.len());
    for norm in [0.5, 1.0, 2.0] {
        for u in &units {
            family.push(u.iter().map(|x| x * norm).collect());
        }
    }
    family
}

/// Compares the empirical law of `a` with `N(0, Σ)` one smooth test function
/// at a time: `g_u = cos(⟨u,·⟩)` and `sin(⟨u,·⟩)` for each direction, whose
/// derivative norms are powers of `‖u‖`. The Gaussian side is sampled fresh
/// (`n_gauss` draws from the declared seed), and each gap carries the
/// combined jackknife standard error of the two means.
pub fn smooth_test_distance(
    a: &SampleSet,
    gaussian: &CovMatrix,
    directions: &[Vec<f64>],
    n_gauss: usize,
    seed: u64,
) -> Result<SmoothDistanceReport, StatsError> {
    let d = a.n_cols();
    if gaussian.dim() != d {
        return Err(StatsError::DimensionMismatch {
            what: "gaussian covariance",
            got: gaussian.dim(),
            want: d,
        });
    }
    for u in directions {
        if u.len() != d {
            return Err(StatsError::DimensionMismatch {
                what: "direction",
                got: u.len(),
                want: d,
            });
        }
    }
    let reference = sample_gaussian(gaussian, n_gauss, seed)?;

    let gaps: Vec<SmoothGap> = directions
        .par_iter()
        .flat_map_iter(|u| {
            let dots_a = dot_column(a, u);
            let dots_g = dot_column(&reference, u);
            let spec = SmoothnessSpec::for_direction(u);
            ["cos", "sin"].into_iter().map(move |function| {
                let f: fn(f64) -> f64 = if function == "cos" { f64::cos } else { f64::sin };
                let (mean_a, se_a) = mean_with_se(dots_a.iter().map(|&x| f(x)));
                let (mean_g, se_g) = mean_with_se(dots_g.iter().map(|&x| f(x)));
                SmoothGap {
                    direction: u.clone(),
                    function,
                    smoothness: spec,
                    sample_mean: mean_a,
                    gaussian_mean: mean_g,
                    gap: (mean_a - mean_g).abs(),
                    se: (se_a * se_a + se_g * se_g).sqrt(),
                }
            })
        })
        .collect();

    Ok(SmoothDistanceReport {
        statistic: "per-function smooth gap (lower bound on d_W)",
        n_sample: a.n_rows(),
        n_gauss: reference.n_rows(),
        gaps,
    })
}

fn dot_column(set: &SampleSet, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; set.n_rows()];
    for (j, &w) in u.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(set.column(j)) {
            *o += w * v;
        }
    }
    out
}

/// Mean and its jackknife standard error. Leaving one point out of a mean
/// shifts it by `(μ − xᵢ)/(n−1)`, so the jackknife variance collapses to the
/// textbook `s²/n`; it is computed that way.
fn mean_with_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical moments of a sample set, with standard errors for the means
/// and the fourth cumulants.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub means: Vec<f64>,
    pub mean_ses: Vec<f64>,
    /// Unbiased covariance estimates, divisor n−1.
    pub covariance: Vec<Vec<f64>>,
    /// Central second moments, divisor n (the κ₄ plug-in convention).
    pub variances: Vec<f64>,
    /// Central fourth moments, divisor n.
    pub fourth_moments: Vec<f64>,
    /// `κ̂₄ = m₄ − 3m₂²` per coordinate.
    pub kappa4s: Vec<f64>,
    /// Influence-function standard errors of κ̂₄.
    pub kappa4_ses: Vec<f64>,
}

/// Plug-in moment estimators per coordinate plus the full covariance.
///
/// The κ₄ standard error comes from the influence function of
/// `μ₄ − 3μ₂²` at the empirical law,
/// `IF(x) = (x−μ)⁴ − m₄ − 4m₃(x−μ) − 6m₂((x−μ)² − m₂)`,
/// whose empirical variance over n replications estimates `n·Var(κ̂₄)`.
pub fn moment_estimators(a: &SampleSet) -> Result<MomentReport, StatsError> {
    let n = a.n_rows();
    if n < 8 {
        return Err(StatsError::SmallSample { got: n, need: 8 });
    }
    let d = a.n_cols();
    let nf = n as f64;

    let means: Vec<f64> = (0..d)
        .map(|j| a.column(j).iter().sum::<f64>() / nf)
        .collect();
    let deviations: Vec<Vec<f64>> = (0..d)
        .map(|j| a.column(j).iter().map(|v| v - means[j]).collect())
        .collect();

    let mut covariance = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = deviations[i]
                .iter()
                .zip(&deviations[j])
                .map(|(x, y)| x * y)
                .sum();
            covariance[i][j] = s / (nf - 1.0);
            covariance[j][i] = covariance[i][j];
        }
    }

    let mut mean_ses = Vec::with_capacity(d);
    let mut variances = Vec::with_capacity(d);
    let mut fourth_moments = Vec::with_capacity(d);
    let mut kappa4s = Vec::with_capacity(d);
    let mut kappa4_ses = Vec::with_capacity(d);
    for dev in &deviations {
        let m2 = dev.iter().map(|x| x * x).sum::<f64>() / nf;
        let m3 = dev.iter().map(|x| x * x * x).sum::<f64>() / nf;
        let m4 = dev.iter().map(|x| x * x * x * x).sum::<f64>() / nf;
        let kappa4 = m4 - 3.0 * m2 * m2;
        let if_var = dev
            .iter()
            .map(|&x| {
                let inf = (x * x * x * x - m4) - 4.0 * m3 * x - 6.0 * m2 * (x * x - m2);
                inf * inf
            })
            .sum::<f64>()
            / nf;
        mean_ses.push((m2 / (nf - 1.0)).sqrt());
        variances.push(m2);
        fourth_moments.push(m4);
        kappa4s.push(kappa4);
        kappa4_ses.push((if_var / nf).sqrt());
    }

    Ok(MomentReport {
        n,
        means,
        mean_ses,
        covariance,
        variances,
        fourth_moments,
        kappa4s,
        kappa4_ses,
    })
}

/// Draws `n` replications of `N(0, Σ)` as `L·z` with `L·Lᵀ = Σ` and `z`
/// standard normal, one stream per replication.
pub fn sample_gaussian(sigma: &CovMatrix, n: usize, seed: u64) -> Result<SampleSet, StatsError> {
    if n < 2 {
        return Err(StatsError::BadSample(format!(
            "need at least 2 replications, got {n}"
        )));
    }
    let factor = sigma.sampling_factor()?;
    let d = sigma.dim();

    let rows: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, StreamPurpose::Gaussian, rep, 0);
            let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            (0..d)
                .map(|i| (0..d).map(|j| factor[(i, j)] * z[j]).sum())
                .collect()
        })
        .collect();

    let mut hasher = Sha256::new();
    for i in 0..d {
        for j in 0..d {
            hasher.update(sigma.entry(i, j).to_bits().to_le_bytes());
        }
    }
    let digest = format!("{:x}", hasher.finalize());
    SampleSet::from_rows(
        &rows,
        seed,
        format!("gaussian; d: {d}; sigma: {}", &digest[..12]),
    )
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
#[derive(Debug, Clone, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Computes `D = sup|F̂_a − F̂_b|` by a two-pointer sweep over the sorted
/// samples and converts it to the asymptotic Kolmogorov p-value with the
/// standard finite-sample size correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len(), ys.len());
    let (naf, nbf) = (na as f64, nb as f64);

    let mut d_stat = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        let t = xs[i].min(ys[j]);
        while i < na && xs[i] <= t {
            i += 1;
        }
        while j < nb && ys[j] <= t {
            j += 1;
        }
        d_stat = d_stat.max((i as f64 / naf - j as f64 / nbf).abs());
    }

    let n_eff = naf * nbf / (naf + nbf);
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d_stat;
    Ok(KsTest {
        statistic: d_stat,
        p_value: kolmogorov_tail(lambda),
        n_a: na,
        n_b: nb,
    })
}

/// `Q(λ) = 2·Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`, clamped to [0,1]. The series
/// only converges for positive λ; tiny arguments return 1.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-10 * sum.abs().max(1e-300) {
            return (2.0 * sum).clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
