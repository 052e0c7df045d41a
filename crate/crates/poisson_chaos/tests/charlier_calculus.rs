//! Charlier arithmetic against two independent oracles: exact rational
//! linearization through the falling-factorial basis, and direct Poisson pmf
//! summation for orthogonality of the recurrence-evaluated polynomials.

mod common;

use common::charlier_exact::{
    exact_linearization, exact_norm_sq, exact_pair_moment,
};
use common::test_rng;
use num::{BigRational, ToPrimitive};
use poisson_chaos::charlier::{charlier_value, CharlierTable};
use rand::Rng;

fn rational(lambda: f64) -> BigRational {
    BigRational::from_float(lambda).expect("finite lambda")
}

#[test]
fn linearization_matches_exact_rational_oracle() {
    // Production path: tridiagonal recurrence in the Charlier basis.
    // Oracle: exact BigRational arithmetic, falling-factorial product rule.
    for &lambda in &[0.1, 0.7, 1.0, 4.0, 31.0, 100.0] {
        let exact_lambda = rational(lambda);
        let t = CharlierTable::new(lambda, 32).unwrap();
        for m in 0..=8usize {
            for n in m..=8usize {
                let got = t.linearize(m, n).unwrap();
                let want = exact_linearization(m, n, &exact_lambda);
                // Coefficients of C_k scale like √(m!n!k! λ^{m+n+k}) / k!λᵏ;
                // compare each against the orthogonality scale of its row.
                for (k, w) in want.iter().enumerate() {
                    let w = w.to_f64().unwrap();
                    let scale = w.abs().max(exact_norm_sq(n, &exact_lambda).to_f64().unwrap());
                    assert!(
                        (got[k] - w).abs() <= 1e-11 * scale.max(1.0),
                        "λ={lambda} m={m} n={n} k={k}: {} vs {w}",
                        got[k]
                    );
                }
            }
        }
    }
}

#[test]
fn deep_linearizations_stay_accurate_at_degree_16() {
    // The full degree-16 product grid at the extreme intensities. Relative
    // tolerance 1e−8 per coefficient, on each coefficient's own scale.
    for &lambda in &[0.1, 100.0] {
        let exact_lambda = rational(lambda);
        let t = CharlierTable::new(lambda, 32).unwrap();
        for m in [4usize, 8] {
            for n in [4usize, 8] {
                let got = t.linearize(m, n).unwrap();
                let want = exact_linearization(m, n, &exact_lambda);
                for (k, w) in want.iter().enumerate() {
                    let w = w.to_f64().unwrap();
                    let scale = w.abs().max(1.0);
                    assert!(
                        (got[k] - w).abs() <= 1e-8 * scale,
                        "λ={lambda} m={m} n={n} k={k}: {} vs {w}",
                        got[k]
                    );
                }
            }
        }
    }
}

#[test]
fn orthogonality_reproduced_by_pmf_summation() {
    // E[C_m C_n] = δ_{mn} n!λⁿ at 1e−10 relative to the cross scale
    // √(m!λᵐ·n!λⁿ). The oracle sums the Poisson series in exact rational
    // arithmetic (integer-point values via falling factorials) and rounds
    // once. Degrees to 16, intensities spanning [0.1, 100].
    for &lambda in &[0.1, 1.0, 10.0, 100.0] {
        let t = CharlierTable::new(lambda, 16).unwrap();
        for m in 0..=16usize {
            for n in m..=16usize {
                let got = common::charlier_exact::pmf_pair_moment(m, n, lambda);
                let want = if m == n { t.norm_sq(n) } else { 0.0 };
                let scale = (t.norm_sq(m) * t.norm_sq(n)).sqrt();
                assert!(
                    (got - want).abs() <= 1e-10 * scale,
                    "λ={lambda} m={m} n={n}: {got} vs {want} (scale {scale})"
                );
            }
        }
    }
}

#[test]
fn f64_recurrence_evaluation_accurate_through_degree_8() {
    // The forward recurrence is the production path for pointwise values
    // (chaos evaluation needs per-cell degrees ≤ 8). Against exact rational
    // values it stays within 5e−12 of the orthogonality scale across
    // λ ∈ [0.1, 100] and the entire sampling range of counts. (At degree 16
    // and small λ the recurrence *does* lose the tiny values near x = 0 to
    // cancellation, which is why deeper pointwise evaluation is out of
    // scope and the moment oracles above are exact-rational.)
    for &lambda in &[0.1, 0.5, 1.0, 4.0, 10.0, 31.0, 100.0] {
        let exact_lambda = rational(lambda);
        for n in 0..=8usize {
            let scale = {
                let t = CharlierTable::new(lambda, 8).unwrap();
                t.norm_sq(n).sqrt()
            };
            let k_max = (lambda + 10.0 * lambda.sqrt() + 30.0) as u64;
            for k in 0..=k_max {
                let want = common::charlier_exact::exact_value_at(n, k, &exact_lambda)
                    .to_f64()
                    .unwrap();
                let got = charlier_value(n, k as f64, lambda);
                assert!(
                    (got - want).abs() <= 5e-12 * want.abs().max(scale),
                    "λ={lambda} n={n} k={k}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn linearization_closes_under_pmf_integration() {
    // Randomized spot check that Σ_k coeff_k C_k(x) actually equals
    // C_m(x)·C_n(x) pointwise, not merely in moments.
    let mut rng = test_rng(0xcaa1);
    for _ in 0..50 {
        let lambda = rng.random_range(0.1..20.0);
        let m = rng.random_range(0..=6usize);
        let n = rng.random_range(0..=6usize);
        let t = CharlierTable::new(lambda, 16).unwrap();
        let lin = t.linearize(m, n).unwrap();
        for x in 0..15u64 {
            let x = x as f64;
            let direct = charlier_value(m, x, lambda) * charlier_value(n, x, lambda);
            let expanded: f64 = lin
                .iter()
                .enumerate()
                .map(|(k, &c)| c * charlier_value(k, x, lambda))
                .sum();
            let scale = direct.abs().max(t.norm_sq(m.max(n))).max(1.0);
            assert!(
                (direct - expanded).abs() <= 1e-10 * scale,
                "λ={lambda} m={m} n={n} x={x}: {direct} vs {expanded}"
            );
        }
    }
}

#[test]
fn pair_moments_match_exact_rational_oracle_at_high_degree() {
    let lambda = 100.0;
    let exact_lambda = rational(lambda);
    let t = CharlierTable::new(lambda, 32).unwrap();
    for n in [1usize, 4, 8, 12, 16] {
        let got = t.linearize(n, n).unwrap()[0];
        let want = exact_pair_moment(n, n, &exact_lambda).to_f64().unwrap();
        assert!(
            (got - want).abs() <= 1e-10 * want,
            "n={n}: {got} vs {want}"
        );
        let norm = exact_norm_sq(n, &exact_lambda).to_f64().unwrap();
        assert!((want - norm).abs() <= 1e-12 * norm);
    }
}
