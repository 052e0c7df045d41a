//! The six study runners.
//!
//! Shared conventions: grid points derive their seed as `spec.seed + index`
//! so points decorrelate while stream purposes keep samplers, references,
//! and resamplers independent within a point. Statistics that are already
//! noise-scaled (studentized gaps, p-values) are reported as estimates with
//! zero standard error. Every Monte Carlo verdict allows four standard
//! errors.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{
    multivariate_bound, multivariate_constants, transfer_principle_check, univariate_bound,
    BoundVariant, CovMatrix, SmoothnessSpec,
};
use crate::chaos::{
    verify_moment_inequalities, verify_pair_inequalities, ChaosElement, MultiIndex,
};
use crate::kernel::{GroundSpace, Kernel};
use crate::rng::{stream, StreamPurpose};
use crate::sim::{
    estimate_gamma_limit, estimate_rho, mehler_check, sample_homogeneous_sums, thin_at, Driver,
};
use crate::stats::{
    default_directions, ks_two_sample, moment_estimators, sample_gaussian, smooth_test_distance,
    wasserstein1_bootstrap, SampleSet,
};

use super::families::{
    kernel_family_blocks, kernel_family_blocks_rotated, kernel_family_blocks_weighted,
    kernel_family_spread,
};
use super::{config, ExperimentError, ExperimentKind, ExperimentReport, ExperimentSpec, ReportRow};

/// Bootstrap replicates behind every Wasserstein standard error.
const N_BOOT: usize = 32;
/// Monte Carlo verdicts allow this many standard errors.
const BAND: f64 = 4.0;
/// Final-grid-point distance threshold for the convergence studies.
const FINAL_DISTANCE: f64 = 0.05;
/// Family-wise level for the exchangeability KS probes.
const KS_LEVEL: f64 = 0.01;

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<(), ExperimentError> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(config(format!(
            "runner for {} got a {} spec",
            kind.name(),
            spec.kind.name()
        )));
    }
    Ok(())
}

fn point_seed(spec: &ExperimentSpec, index: usize) -> u64 {
    spec.seed.wrapping_add(index as u64)
}

fn driver_column(
    kernel: &Kernel,
    driver: Driver,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    let matrix = sample_homogeneous_sums(std::slice::from_ref(kernel), driver, n, seed)?;
    Ok(matrix.column(0))
}

fn gaussian_column(variance: f64, n: usize, seed: u64) -> Result<Vec<f64>, ExperimentError> {
    let sigma = CovMatrix::from_diagonal(&[variance])?;
    let set = sample_gaussian(&sigma, n, seed)?;
    Ok(set.column(0).to_vec())
}

/// `true` when the current value sits below the previous one, give or take
/// the combined noise of the two estimates.
fn decreases_within_noise(prev: (f64, f64), cur: (f64, f64)) -> bool {
    cur.0 <= prev.0 + BAND * (prev.1 * prev.1 + cur.1 * cur.1).sqrt()
}

/// Univariate fourth moment theorem on the order-one spread family.
///
/// Per grid size the exact fourth cumulant must match `1/(n·μ)`, and the
/// empirical Wasserstein distance between the Poisson-driver element and its
/// Gaussian target must sit below the first bound constant and decrease
/// along the grid.
pub fn run_univariate_fmt(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::UnivariateFmt)?;
    let mut rows = Vec::with_capacity(spec.grid.len());
    let mut prev: Option<(f64, f64)> = None;
    for (index, &n) in spec.grid.iter().enumerate() {
        let seed = point_seed(spec, index);
        let kernel = kernel_family_spread(1, n, spec.intensity)?;
        let element = ChaosElement::from_kernel(&kernel)?;
        let sigma2 = element.variance();
        let kappa4 = element.fourth_cumulant()?;
        let closed_form = 1.0 / (n as f64 * spec.intensity);
        let bound = univariate_bound(1, sigma2, kappa4)?;

        let xs = driver_column(&kernel, Driver::Poisson, spec.samples, seed)?;
        let ys = gaussian_column(sigma2, spec.samples, seed)?;
        let (w1, se) = wasserstein1_bootstrap(&xs, &ys, N_BOOT, seed)?;

        let mut row = ReportRow::new(format!("n={n}"));
        row.exact("sigma2", sigma2);
        row.exact("kappa4", kappa4);
        row.exact("kappa4_closed_form", closed_form);
        row.verdict(
            "kappa4_matches_closed_form",
            (kappa4 - closed_form).abs() <= 1e-9,
        );
        row.bound("wasserstein_b1", bound.b1);
        row.bound("wasserstein_b2", bound.b2);
        row.estimate("wasserstein", w1, se);
        row.verdict("within_bound", w1 <= bound.b1 + BAND * se);
        if let Some(prev) = prev {
            row.verdict("decreases_vs_previous", decreases_within_noise(prev, (w1, se)));
        }
        prev = Some((w1, se));
        rows.push(row);
    }
    Ok(ExperimentReport::new(spec, rows))
}

/// Exact transfer principle on the block family, shadowed by the
/// Gaussian-driver simulation it licenses.
///
/// The exact side checks the weighted contraction sum against the fourth
/// cumulant at every block count and requires both to decrease; the
/// empirical side requires the Gaussian-driver element to approach its
/// normal target, ending below [`FINAL_DISTANCE`], with the Poisson-driver
/// distance kept under the univariate bound along the way.
pub fn run_transfer(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::Transfer)?;
    if spec.grid.is_empty() {
        return Ok(ExperimentReport::new(spec, Vec::new()));
    }
    let kernels = spec
        .grid
        .iter()
        .map(|&b| kernel_family_blocks(b, spec.intensity))
        .collect::<Result<Vec<_>, _>>()?;
    let transfer = transfer_principle_check(&kernels, 1e-6)?;

    let mut rows = Vec::with_capacity(spec.grid.len() + 1);
    let mut prev_exact: Option<(f64, f64)> = None;
    let mut prev_w1: Option<(f64, f64)> = None;
    let mut exact_decreasing = true;
    let mut contractions_decreasing = true;
    for (index, (&b, kernel)) in spec.grid.iter().zip(&kernels).enumerate() {
        let seed = point_seed(spec, index);
        let detail = &transfer.rows[index];
        let contraction = detail.contraction_norms[0];

        let gauss = driver_column(kernel, Driver::Gaussian, spec.samples, seed)?;
        let reference = gaussian_column(1.0, spec.samples, seed)?;
        let (w1_g, se_g) = wasserstein1_bootstrap(&gauss, &reference, N_BOOT, seed)?;
        let poisson = driver_column(kernel, Driver::Poisson, spec.samples, seed)?;
        let (w1_p, se_p) = wasserstein1_bootstrap(&poisson, &reference, N_BOOT, seed.wrapping_add(17))?;
        let bound = univariate_bound(2, 1.0, detail.kappa4)?;

        let mut row = ReportRow::new(format!("b={b}"));
        row.exact("kappa4", detail.kappa4);
        row.exact("contraction_norm_r1", contraction);
        row.exact("weighted_contraction_sum", detail.inequality.lhs);
        row.verdict("contraction_sum_within_kappa4", detail.inequality.ok);
        row.estimate("gaussian_w1", w1_g, se_g);
        row.estimate("poisson_w1", w1_p, se_p);
        row.bound("poisson_b1", bound.b1);
        row.verdict("poisson_within_bound", w1_p <= bound.b1 + BAND * se_p);
        if let Some(prev) = prev_w1 {
            row.verdict(
                "gaussian_w1_decreases",
                decreases_within_noise(prev, (w1_g, se_g)),
            );
        }
        if index + 1 == spec.grid.len() {
            row.verdict("gaussian_w1_final_small", w1_g <= FINAL_DISTANCE);
        }
        if let Some((pk, pc)) = prev_exact {
            exact_decreasing &= detail.kappa4 < pk;
            contractions_decreasing &= contraction < pc;
        }
        prev_exact = Some((detail.kappa4, contraction));
        prev_w1 = Some((w1_g, se_g));
        rows.push(row);
    }

    let mut sequence = ReportRow::new("sequence");
    sequence.verdict("kappa4_strictly_decreases", exact_decreasing);
    sequence.verdict("contractions_strictly_decrease", contractions_decreasing);
    sequence.verdict("transfer_implication", transfer.all_ok);
    rows.push(sequence);
    Ok(ExperimentReport::new(spec, rows))
}

/// Fourth moment of a driver's standardized increment, the only law detail
/// the block family keeps.
fn driver_fourth_moment(driver: Driver, intensity: f64) -> f64 {
    match driver {
        Driver::Poisson => 3.0 + 1.0 / intensity,
        Driver::Gaussian => 3.0,
        Driver::Rademacher => 1.0,
        Driver::CenteredUniform => 9.0 / 5.0,
    }
}

/// Driver invariance on the weighted block family plus the failure case
/// that shows the fourth cumulant is what the invariance hinges on.
///
/// The weighted family avoids the lattice trap: with equal block weights a
/// sign driver yields a scaled sign count whose distance to any continuous
/// law is floored at `1/(2√b)`, which the 64-cell cap would pin above the
/// final-point threshold. Per block count, each driver's empirical fourth
/// cumulant must match the weight-wise closed form `(m₄² − 3)·Σ w_k⁴` and
/// the drivers must agree pairwise in Wasserstein distance at the final
/// grid point. The contrapositive row runs the order-two spread family,
/// whose contractions do not vanish, and requires its empirical fourth
/// cumulant to stay at least five standard errors away from zero.
pub fn run_universality(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::Universality)?;
    if spec.grid.is_empty() {
        return Ok(ExperimentReport::new(spec, Vec::new()));
    }
    let drivers = spec.parsed_drivers()?;
    let mut rows = Vec::with_capacity(spec.grid.len() + 1);
    for (index, &b) in spec.grid.iter().enumerate() {
        let seed = point_seed(spec, index);
        let kernel = kernel_family_blocks_weighted(b, spec.intensity)?;
        let element = ChaosElement::from_kernel(&kernel)?;
        let exact_poisson = element.fourth_cumulant()?;
        let weight_sum4: f64 = (0..b)
            .map(|k| {
                (2.0 * spec.intensity * kernel.value(&[2 * k, 2 * k + 1])).powi(4)
            })
            .sum();

        let mut row = ReportRow::new(format!("b={b}"));
        row.exact("kappa4_chaos", exact_poisson);
        let closed_poisson =
            (driver_fourth_moment(Driver::Poisson, spec.intensity).powi(2) - 3.0) * weight_sum4;
        row.verdict(
            "chaos_kappa4_matches_product_formula",
            (exact_poisson - closed_poisson).abs() <= 1e-9,
        );

        let mut columns: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for &driver in &drivers {
            let xs = driver_column(&kernel, driver, spec.samples, seed)?;
            let set = SampleSet::from_columns(
                vec![xs.clone()],
                seed,
                format!("universality; driver: {}", driver.name()),
            )?;
            let moments = moment_estimators(&set)?;
            let exact =
                (driver_fourth_moment(driver, spec.intensity).powi(2) - 3.0) * weight_sum4;
            row.exact(&format!("kappa4_{}", driver.name()), exact);
            row.estimate(
                &format!("kappa4_hat_{}", driver.name()),
                moments.kappa4s[0],
                moments.kappa4_ses[0],
            );
            row.verdict(
                &format!("kappa4_{}_within_band", driver.name()),
                (moments.kappa4s[0] - exact).abs() <= BAND * moments.kappa4_ses[0],
            );
            columns.insert(driver.name(), xs);
        }

        let last = index + 1 == spec.grid.len();
        for (i, &a) in drivers.iter().enumerate() {
            for &b_driver in &drivers[i + 1..] {
                let (w1, se) = wasserstein1_bootstrap(
                    &columns[a.name()],
                    &columns[b_driver.name()],
                    N_BOOT,
                    seed.wrapping_add(29),
                )?;
                let pair = format!("w1_{}_vs_{}", a.name(), b_driver.name());
                row.estimate(&pair, w1, se);
                if last {
                    row.verdict(&format!("{pair}_final_small"), w1 <= FINAL_DISTANCE);
                }
            }
        }
        rows.push(row);
    }

    rows.push(contrapositive_row(spec)?);
    Ok(ExperimentReport::new(spec, rows))
}

/// The non-vanishing-contraction family: order-two spread on a fixed cell
/// count, whose normalized law approaches a centered chi-square shape
/// instead of a Gaussian.
fn contrapositive_row(spec: &ExperimentSpec) -> Result<ReportRow, ExperimentError> {
    const CELLS: usize = 16;
    let seed = spec.seed.wrapping_add(0xC0);
    let kernel = kernel_family_spread(2, CELLS, spec.intensity)?;
    let element = ChaosElement::from_kernel(&kernel)?;
    let kappa4 = element.fourth_cumulant()?;
    let contraction = kernel.contract(&kernel, 1)?.norm();

    let xs = driver_column(&kernel, Driver::Poisson, spec.samples, seed)?;
    let set = SampleSet::from_columns(vec![xs], seed, "universality; contrapositive")?;
    let moments = moment_estimators(&set)?;
    let kappa4_hat = moments.kappa4s[0];
    let se = moments.kappa4_ses[0];

    let mut row = ReportRow::new(format!("contrapositive(order=2, n={CELLS})"));
    row.exact("kappa4", kappa4);
    row.exact("contraction_norm_r1", contraction);
    row.estimate("kappa4_hat", kappa4_hat, se);
    row.verdict("exact_kappa4_bounded_away", kappa4 >= 1.0);
    row.verdict("contraction_bounded_away", contraction >= 0.25);
    row.verdict("empirical_kappa4_bounded_away", kappa4_hat >= 5.0 * se);
    Ok(row)
}

/// Multivariate Peccati-Tudor study on the vector `(F₁, F₂, F₃)` with
/// `F₁` linear, `F₂` the block element, and `F₃` its rotation by 45 degrees
/// in the plane spanned with the orthogonal block element.
///
/// The covariance is exact with cross-grade entries identically zero and
/// `Σ₂₃ = 1/√2`. Smooth-gap distances against the matching Gaussian vector
/// must stay below both assembled bound variants direction by direction,
/// and the equal-order subvector `(F₂, F₃)` repeats the exercise with the
/// same-chaos variant.
pub fn run_multivariate_pt(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::MultivariatePt)?;
    let mut rows = Vec::with_capacity(spec.grid.len());
    for (index, &b) in spec.grid.iter().enumerate() {
        let seed = point_seed(spec, index);
        rows.push(multivariate_point(spec, b, seed)?);
    }
    Ok(ExperimentReport::new(spec, rows))
}

fn multivariate_point(
    spec: &ExperimentSpec,
    b: usize,
    seed: u64,
) -> Result<ReportRow, ExperimentError> {
    let orders = [1usize, 2, 2];
    let f2_kernel = kernel_family_blocks(b, spec.intensity)?;
    let g_kernel = kernel_family_blocks_rotated(b, spec.intensity)?;
    let space = f2_kernel.space().clone();
    let f1_kernel = kernel_family_spread(1, space.n_cells(), spec.intensity)?;
    let half = 0.5f64.sqrt();
    let f3_kernel = {
        let f2 = f2_kernel.clone();
        let g = g_kernel.clone();
        Kernel::from_fn(space, 2, move |idx| {
            half * (f2.value(idx) + g.value(idx))
        })?
    };

    let elements = [
        ChaosElement::from_kernel(&f1_kernel)?,
        ChaosElement::from_kernel(&f2_kernel)?,
        ChaosElement::from_kernel(&f3_kernel)?,
    ];
    let mut cov = vec![vec![0.0; 3]; 3];
    let mut kappa4s = [0.0; 3];
    let mut fourth_moments = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            cov[i][j] = elements[i].covariance(&elements[j])?;
        }
        kappa4s[i] = elements[i].fourth_cumulant()?;
        fourth_moments[i] = elements[i].moment4()?;
    }
    let sigma = CovMatrix::from_rows(&cov)?;

    let mut row = ReportRow::new(format!("b={b}"));
    row.exact("sigma_23", sigma.entry(1, 2));
    row.exact("kappa4_f1", kappa4s[0]);
    row.exact("kappa4_f2", kappa4s[1]);
    row.exact("kappa4_f3", kappa4s[2]);
    row.verdict(
        "cross_grade_covariances_vanish",
        sigma.max_cross_order_entry(&orders)? == 0.0,
    );
    row.verdict(
        "target_correlation_exact",
        (sigma.entry(1, 2) - half).abs() <= 1e-12,
    );

    let unit_spec = SmoothnessSpec::new(1.0, 1.0, 1.0, 1.0)?;
    let sub_sigma = CovMatrix::from_rows(&[
        vec![cov[1][1], cov[1][2]],
        vec![cov[2][1], cov[2][2]],
    ])?;
    let a2 = multivariate_constants(2, 2, 2, &sub_sigma, &unit_spec)?.a2;
    row.exact("a2_subvector", a2);
    row.verdict("a2_subvector_frozen", a2 == 0.75);

    let kernels = [f1_kernel, f2_kernel, f3_kernel];
    let matrix = sample_homogeneous_sums(&kernels, Driver::Poisson, spec.samples, seed)?;
    let set = SampleSet::from_sample_matrix(&matrix)?;
    let gaps = smooth_test_distance(
        &set,
        &sigma,
        &default_directions(3),
        spec.samples,
        seed,
    )?;

    let mut within_c3 = true;
    let mut within_c2 = true;
    let mut max_gap = (0.0f64, 0.0f64);
    let mut c3_at_max = 0.0f64;
    let mut c2_at_max = 0.0f64;
    for gap in &gaps.gaps {
        let c3 = multivariate_bound(
            &orders,
            &sigma,
            &kappa4s,
            &fourth_moments,
            &gap.smoothness,
            BoundVariant::C3,
        )?
        .total;
        let c2 = multivariate_bound(
            &orders,
            &sigma,
            &kappa4s,
            &fourth_moments,
            &gap.smoothness,
            BoundVariant::C2,
        )?
        .total;
        within_c3 &= gap.gap <= c3 + BAND * gap.se;
        within_c2 &= gap.gap <= c2 + BAND * gap.se;
        if gap.gap > max_gap.0 {
            max_gap = (gap.gap, gap.se);
            c3_at_max = c3;
            c2_at_max = c2;
        }
    }
    row.estimate("max_smooth_gap", max_gap.0, max_gap.1);
    row.bound("c3_at_max_gap", c3_at_max);
    row.bound("c2_at_max_gap", c2_at_max);
    row.verdict("gaps_within_c3", within_c3);
    row.verdict("gaps_within_c2", within_c2);

    let sub_set = SampleSet::from_columns(
        vec![set.column(1).to_vec(), set.column(2).to_vec()],
        seed,
        "multivariate_pt; subvector (F2, F3)",
    )?;
    let sub_gaps = smooth_test_distance(
        &sub_set,
        &sub_sigma,
        &default_directions(2),
        spec.samples,
        seed.wrapping_add(41),
    )?;
    let sub_kappa4s = [kappa4s[1], kappa4s[2]];
    let sub_moments = [fourth_moments[1], fourth_moments[2]];
    let mut within_same = true;
    let mut sub_max = (0.0f64, 0.0f64);
    let mut same_at_max = 0.0f64;
    for gap in &sub_gaps.gaps {
        let same = multivariate_bound(
            &[2, 2],
            &sub_sigma,
            &sub_kappa4s,
            &sub_moments,
            &gap.smoothness,
            BoundVariant::SameChaos,
        )?
        .total;
        within_same &= gap.gap <= same + BAND * gap.se;
        if gap.gap > sub_max.0 {
            sub_max = (gap.gap, gap.se);
            same_at_max = same;
        }
    }
    row.estimate("max_smooth_gap_subvector", sub_max.0, sub_max.1);
    row.bound("same_chaos_at_max_gap", same_at_max);
    row.verdict("subvector_gaps_within_same_chaos", within_same);
    Ok(row)
}

/// Randomized verification sweep of the exact moment and pair inequalities
/// over random spaces, intensities, and kernels of grades one through four.
pub fn run_lemma_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::LemmaSweep)?;

    let outcomes: Vec<Result<(usize, Vec<String>), ExperimentError>> = (0..spec.cases as u64)
        .into_par_iter()
        .map(|case| sweep_case(spec.seed, case))
        .collect();

    let mut grade_counts = [0usize; 4];
    let mut violations: Vec<String> = Vec::new();
    for outcome in outcomes {
        let (grade, failed) = outcome?;
        grade_counts[grade - 1] += 1;
        violations.extend(failed);
    }
    violations.sort();

    let mut row = ReportRow::new(format!("sweep(cases={})", spec.cases));
    for (i, &count) in grade_counts.iter().enumerate() {
        row.exact(&format!("cases_grade_{}", i + 1), count as f64);
    }
    row.exact("violations", violations.len() as f64);
    row.verdict("zero_violations", violations.is_empty());
    if spec.cases >= 100 {
        row.verdict(
            "covers_grades_1_to_4",
            grade_counts.iter().all(|&c| c > 0),
        );
    }

    let mut rows = vec![row];
    if spec.cases > 0 {
        rows.push(tightness_row()?);
    }
    Ok(ExperimentReport::new(spec, rows))
}

/// One randomized case: a moment report on a random homogeneous element and
/// a pair report against a second element on the same space.
fn sweep_case(seed: u64, case: u64) -> Result<(usize, Vec<String>), ExperimentError> {
    let mut rng = stream(seed, StreamPurpose::Sweep, case, 0);
    let grade = rng.random_range(1..=4usize);
    let n_cells = rng.random_range(grade.max(2)..=5usize);
    let intensities: Vec<f64> = (0..n_cells)
        .map(|_| {
            let log: f64 = rng.random_range(0.1f64.ln()..30f64.ln());
            log.exp()
        })
        .collect();
    let space = GroundSpace::with_intensities(&intensities)?;

    let f = random_element(space.clone(), grade, &mut rng)?;
    let mut failed: Vec<String> = Vec::new();
    let report = verify_moment_inequalities(&f)?;
    for check in &report.checks {
        if !check.ok {
            failed.push(format!("case {case}: moment: {}", check.name));
        }
    }

    let pair_grade = rng.random_range(1..=3usize.min(n_cells));
    let g = random_element(space, pair_grade, &mut rng)?;
    let pair = verify_pair_inequalities(&f, &g)?;
    for check in &pair.checks {
        if !check.ok {
            failed.push(format!("case {case}: pair: {}", check.name));
        }
    }
    Ok((grade, failed))
}

fn random_element(
    space: Arc<GroundSpace>,
    grade: usize,
    rng: &mut impl Rng,
) -> Result<ChaosElement, ExperimentError> {
    let n = space.n_cells();
    let mut values: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut tuple = (0..grade).collect::<Vec<usize>>();
    loop {
        values.insert(tuple.clone(), rng.random_range(-1.0..1.0));
        if !next_combination(&mut tuple, n) {
            break;
        }
    }
    let kernel = Kernel::from_fn(space, grade, move |idx| {
        let mut key = idx.to_vec();
        key.sort_unstable();
        values.get(&key).copied().unwrap_or(0.0)
    })?;
    Ok(ChaosElement::from_kernel(&kernel)?)
}

/// Advances a strictly increasing index tuple to the next combination.
fn next_combination(tuple: &mut [usize], n: usize) -> bool {
    let k = tuple.len();
    for i in (0..k).rev() {
        if tuple[i] < n - (k - i) {
            tuple[i] += 1;
            for j in i + 1..k {
                tuple[j] = tuple[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The linear element attains the variance inequality exactly and leaves
/// slack λ/2 in the cumulant comparison, pinning both constants.
fn tightness_row() -> Result<ReportRow, ExperimentError> {
    const LAMBDA: f64 = 4.0;
    let space = GroundSpace::with_intensities(&[LAMBDA])?;
    let f = ChaosElement::from_terms(space, [(MultiIndex::single(0, 1), 1.0)])?;
    let report = verify_moment_inequalities(&f)?;

    let variance_check = report
        .checks
        .iter()
        .find(|c| c.name == "gamma variance vs fourth cumulant")
        .expect("check is always emitted");
    let cumulant_check = report
        .checks
        .iter()
        .find(|c| c.name == "fourth cumulant vs gamma variance")
        .expect("check is always emitted");

    let mut row = ReportRow::new(format!("tightness(linear, lambda={LAMBDA})"));
    row.exact("gamma_variance", report.gamma_variance);
    row.exact("variance_check_slack", variance_check.slack);
    row.exact("cumulant_check_slack", cumulant_check.slack);
    row.verdict(
        "gamma_variance_equals_lambda_over_4",
        (report.gamma_variance - LAMBDA / 4.0).abs() <= 1e-12 * LAMBDA,
    );
    row.verdict(
        "variance_inequality_is_tight",
        variance_check.slack.abs() <= 1e-12 * LAMBDA,
    );
    row.verdict(
        "cumulant_slack_is_half_lambda",
        (cumulant_check.slack - LAMBDA / 2.0).abs() <= 1e-12 * LAMBDA,
    );
    Ok(row)
}

/// Thinning-pair limits for the one-cell linear element: the Mehler
/// contraction, the carré du champ limit, the quartic rate, and the
/// exchangeability of the pair in law.
pub fn run_pair_limits(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    expect_kind(spec, ExperimentKind::PairLimits)?;
    let space = GroundSpace::with_intensities(&[spec.intensity])?;
    let f = ChaosElement::from_terms(space, [(MultiIndex::single(0, 1), 1.0)])?;
    let t0 = spec.t_grid[0];
    let mut rows = Vec::new();

    let mehler = mehler_check(&f, t0, spec.outer, spec.inner, spec.seed)?;
    let mut row = ReportRow::new(format!("mehler(t={t0})"));
    row.estimate("max_abs_studentized", mehler.max_abs_studentized, 0.0);
    row.bound("studentized_budget", BAND);
    row.verdict("conditional_means_match", mehler.ok);
    rows.push(row);

    let gamma = estimate_gamma_limit(
        &f,
        &f,
        &spec.t_grid,
        spec.outer,
        spec.inner,
        spec.seed.wrapping_add(1),
    )?;
    let mut row = ReportRow::new("gamma");
    row.estimate("max_abs_studentized", gamma.max_abs_studentized, 0.0);
    row.estimate("worst_intercept", gamma.worst_intercept, 0.0);
    row.exact("worst_exact", gamma.worst_exact);
    row.bound("studentized_budget", BAND);
    row.verdict("limits_match_carre_du_champ", gamma.ok);
    rows.push(row);

    let rho = estimate_rho(&f, &spec.t_grid, spec.samples, spec.seed.wrapping_add(2))?;
    let mut row = ReportRow::new("rho");
    row.exact("rho_exact", rho.exact);
    row.exact(
        "rho_closed_form",
        2.0 * spec.intensity,
    );
    row.estimate("rho_intercept", rho.intercept, rho.intercept_se);
    row.bound("studentized_budget", BAND);
    row.verdict("closed_form_matches", (rho.exact - 2.0 * spec.intensity).abs() <= 1e-12);
    row.verdict("intercept_within_band", rho.ok);
    row.verdict("nonnegative_within_ci", rho.nonnegative_within_ci);
    rows.push(row);

    rows.extend(exchangeability_rows(spec)?);
    Ok(ExperimentReport::new(spec, rows))
}

/// Kolmogorov-Smirnov probes of pair exchangeability: the base and evolved
/// marginals of independent pair draws must agree in law, per grade and
/// thinning time, at level [`KS_LEVEL`] after a Bonferroni split.
fn exchangeability_rows(spec: &ExperimentSpec) -> Result<Vec<ReportRow>, ExperimentError> {
    let space = GroundSpace::with_intensities(&[1.5, 2.5, 4.0])?;
    let linear = Kernel::from_fn(space.clone(), 1, |idx| 0.3 + idx[0] as f64)?;
    let quadratic = Kernel::from_fn(space.clone(), 2, |idx| {
        if idx[0] == idx[1] {
            0.0
        } else {
            0.25 * (1.0 + idx[0].min(idx[1]) as f64)
        }
    })?;
    let elements = [
        ChaosElement::from_kernel(&linear)?,
        ChaosElement::from_kernel(&quadratic)?,
    ];
    let times = [spec.t_grid[0], 1.0];
    let n = spec.samples.min(4000);
    let level = KS_LEVEL / (elements.len() * times.len()) as f64;

    let mut rows = Vec::new();
    for (qi, element) in elements.iter().enumerate() {
        for (ti, &t) in times.iter().enumerate() {
            let seed = spec
                .seed
                .wrapping_add(0x5EED)
                .wrapping_add((qi * 8 + ti) as u64);
            let base_arm: Vec<f64> = (0..n as u64)
                .into_par_iter()
                .map(|rep| {
                    let sample = crate::sim::sample_measure_at(&space, seed, rep);
                    element.evaluate(sample.counts())
                })
                .collect();
            let evolved_arm: Vec<f64> = (0..n as u64)
                .into_par_iter()
                .map(|rep| {
                    let sample = crate::sim::sample_measure_at(&space, seed, n as u64 + rep);
                    let pair = thin_at(&sample, t, seed, n as u64 + rep)
                        .expect("valid thinning time");
                    element.evaluate(pair.evolved().counts())
                })
                .collect();
            let ks = ks_two_sample(&base_arm, &evolved_arm)?;

            let mut row = ReportRow::new(format!("ks(grade={}, t={t})", qi + 1));
            row.estimate("ks_statistic", ks.statistic, 0.0);
            row.estimate("ks_p_value", ks.p_value, 0.0);
            row.bound("level", level);
            row.verdict("exchangeable_in_law", ks.p_value >= level);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_runner_smoke() {
        let mut spec = ExperimentSpec::default_for(ExperimentKind::UnivariateFmt);
        spec.grid = vec![4, 16];
        spec.samples = 4000;
        let report = run_univariate_fmt(&spec).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.all_pass, "failures: {:?}", report.failures());
        assert_eq!(report.kind, "univariate_fmt");

        let rerun = run_univariate_fmt(&spec).unwrap();
        assert_eq!(rerun, report);
    }

    #[test]
    fn runners_reject_mismatched_specs() {
        let spec = ExperimentSpec::default_for(ExperimentKind::Transfer);
        assert!(matches!(
            run_univariate_fmt(&spec),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn empty_grids_produce_empty_passing_reports() {
        for kind in [
            ExperimentKind::UnivariateFmt,
            ExperimentKind::Transfer,
            ExperimentKind::MultivariatePt,
        ] {
            let mut spec = ExperimentSpec::default_for(kind);
            spec.grid.clear();
            spec.samples = 1000;
            let report = super::super::run(&spec).unwrap();
            assert!(report.rows.is_empty());
            assert!(report.all_pass);
        }
    }

    #[test]
    fn lemma_sweep_smoke() {
        let mut spec = ExperimentSpec::default_for(ExperimentKind::LemmaSweep);
        spec.cases = 40;
        let report = run_lemma_sweep(&spec).unwrap();
        assert!(report.all_pass, "failures: {:?}", report.failures());
        let total: f64 = (1..=4)
            .map(|g| report.rows[0].exact[&format!("cases_grade_{g}")])
            .sum();
        assert_eq!(total, 40.0);
    }

    #[test]
    fn combination_walker_enumerates_everything() {
        let mut tuple = vec![0, 1];
        let mut seen = vec![tuple.clone()];
        while next_combination(&mut tuple, 4) {
            seen.push(tuple.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }
}
