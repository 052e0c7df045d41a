//! Oracle tests for the chaos calculus layer.
//!
//! Moments computed through the coefficient representation are checked
//! against independent routes: direct Poisson pmf summation, pointwise
//! evaluation identities, the kernel-side isometry, and hand-expanded
//! single-cell facts. The inequality reports are swept over randomized
//! homogeneous elements, including the cases where a bound is tight.

mod common;

use std::sync::Arc;

use approx::assert_relative_eq;
use common::{poisson_expectation, random_space, random_symmetric_kernel, test_rng};
use poisson_chaos::chaos::{
    verify_moment_inequalities, verify_pair_inequalities, verify_vector_fourth_moment, ChaosError,
};
use poisson_chaos::{ChaosElement, GroundSpace, Kernel, MultiIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn one_cell_c1(lambda: f64) -> (Arc<GroundSpace>, ChaosElement) {
    let space = GroundSpace::with_intensities(&[lambda]).unwrap();
    let f = ChaosElement::from_terms(space.clone(), [(MultiIndex::single(0, 1), 1.0)]).unwrap();
    (space, f)
}

/// Random element with bounded per-cell degree, possibly of mixed grade.
fn random_element(
    rng: &mut ChaCha8Rng,
    space: &Arc<GroundSpace>,
    max_deg: u8,
    max_terms: usize,
) -> ChaosElement {
    let n = space.n_cells() as u32;
    let n_terms = rng.random_range(1..=max_terms);
    let terms: Vec<(MultiIndex, f64)> = (0..n_terms)
        .map(|_| {
            let pairs: Vec<(u32, u8)> = (0..n)
                .filter_map(|c| {
                    let d = rng.random_range(0..=max_deg);
                    (d > 0).then_some((c, d))
                })
                .collect();
            (MultiIndex::from_pairs(pairs), rng.random_range(-2.0..2.0))
        })
        .collect();
    ChaosElement::from_terms(space.clone(), terms).unwrap()
}

/// E[g(counts)] over two independent Poisson cells by direct pmf summation.
fn two_cell_pmf_expectation(
    space: &GroundSpace,
    degree: usize,
    g: impl Fn(u64, u64) -> f64,
) -> f64 {
    let (l0, l1) = (space.intensity(0), space.intensity(1));
    poisson_expectation(l0, degree, |k0| {
        poisson_expectation(l1, degree, |k1| g(k0, k1))
    })
}

#[test]
fn single_cell_gamma_and_moments_match_hand_expansion() {
    for lambda in [0.7, 4.0] {
        let (_, f) = one_cell_c1(lambda);
        let g = f.gamma(&f).unwrap();
        assert_eq!(g.n_terms(), 2);
        assert_relative_eq!(g.expectation(), lambda, max_relative = 1e-13);
        assert_relative_eq!(
            g.coefficient(&MultiIndex::single(0, 1)),
            0.5,
            max_relative = 1e-13
        );
        assert_relative_eq!(g.variance(), lambda / 4.0, max_relative = 1e-13);

        let sq = f.multiply(&f).unwrap();
        assert_relative_eq!(
            sq.expectation_of_product(&g).unwrap(),
            lambda / 2.0 + lambda * lambda,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            f.moment4().unwrap(),
            lambda * (1.0 + 3.0 * lambda),
            max_relative = 1e-13
        );
        assert_relative_eq!(f.fourth_cumulant().unwrap(), lambda, max_relative = 1e-12);
        assert_relative_eq!(f.rho().unwrap(), 2.0 * lambda, max_relative = 1e-12);
    }
}

#[test]
fn single_cell_moments_match_pmf_oracle() {
    let mut rng = test_rng(0xA11CE);
    for lambda in [0.4, 2.0, 9.0] {
        let space = GroundSpace::with_intensities(&[lambda]).unwrap();
        let f = ChaosElement::from_terms(
            space,
            (1..=3u8).map(|d| {
                (
                    MultiIndex::single(0, d),
                    rng.random_range(0.25..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                )
            }),
        )
        .unwrap();
        let m2 = poisson_expectation(lambda, 6, |k| f.evaluate(&[k]).powi(2));
        let m4 = poisson_expectation(lambda, 12, |k| f.evaluate(&[k]).powi(4));
        assert_relative_eq!(f.variance(), m2, max_relative = 1e-11);
        assert_relative_eq!(f.moment4().unwrap(), m4, max_relative = 1e-11);
    }
}

#[test]
fn two_cell_moments_match_product_pmf_oracle() {
    let space = GroundSpace::with_intensities(&[0.8, 3.5]).unwrap();
    let f = ChaosElement::from_terms(
        space.clone(),
        [
            (MultiIndex::single(0, 1), 0.9),
            (MultiIndex::single(1, 1), -0.6),
            (MultiIndex::from_pairs([(0, 1), (1, 1)]), 1.1),
            (MultiIndex::single(1, 2), 0.4),
        ],
    )
    .unwrap();
    let m2 = two_cell_pmf_expectation(&space, 8, |k0, k1| f.evaluate(&[k0, k1]).powi(2));
    let m4 = two_cell_pmf_expectation(&space, 16, |k0, k1| f.evaluate(&[k0, k1]).powi(4));
    assert_relative_eq!(f.variance(), m2, max_relative = 1e-10);
    assert_relative_eq!(f.moment4().unwrap(), m4, max_relative = 1e-10);

    let g = ChaosElement::from_terms(
        space.clone(),
        [
            (MultiIndex::single(0, 2), 0.7),
            (MultiIndex::single(1, 1), 0.8),
            (MultiIndex::from_pairs([(0, 1), (1, 2)]), -0.5),
        ],
    )
    .unwrap();
    let e_fg = two_cell_pmf_expectation(&space, 10, |k0, k1| {
        f.evaluate(&[k0, k1]) * g.evaluate(&[k0, k1])
    });
    assert_relative_eq!(
        f.expectation_of_product(&g).unwrap(),
        e_fg,
        max_relative = 1e-10,
        epsilon = 1e-12
    );
}

#[test]
fn isometry_matches_kernel_inner_product() {
    let mut rng = test_rng(0x150_0001);
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let space = random_space(&mut rng, n, 0.2, 5.0);
        let p = rng.random_range(1..=4);
        let q = rng.random_range(1..=4);
        let f = random_symmetric_kernel(&mut rng, space.clone(), p);
        let g = random_symmetric_kernel(&mut rng, space.clone(), q);
        let fi = ChaosElement::from_kernel(&f).unwrap();
        let gi = ChaosElement::from_kernel(&g).unwrap();
        let lhs = fi.expectation_of_product(&gi).unwrap();
        let scale = (fi.variance() * gi.variance()).sqrt();
        if p == q {
            let factorial: f64 = (1..=p).product::<usize>() as f64;
            let rhs = factorial * f.inner(&g).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * scale.max(1e-12),
                "isometry violated: p={p} lhs={lhs} rhs={rhs}"
            );
        } else {
            assert_eq!(lhs, 0.0, "distinct grades must pair to zero");
        }
    }
}

#[test]
fn from_kernel_rejects_non_symmetric_input() {
    let space = GroundSpace::with_intensities(&[1.0, 2.0]).unwrap();
    let raw = Kernel::new(space, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
    assert!(ChaosElement::from_kernel(&raw).is_err());
}

#[test]
fn product_evaluates_pointwise() {
    let mut rng = test_rng(0x91D);
    for _ in 0..30 {
        let n = rng.random_range(2..=3);
        let space = random_space(&mut rng, n, 0.3, 6.0);
        let f = random_element(&mut rng, &space, 2, 4);
        let g = random_element(&mut rng, &space, 2, 4);
        let fg = f.multiply(&g).unwrap();
        for _ in 0..20 {
            let counts: Vec<u64> = (0..n)
                .map(|i| {
                    let lam = space.intensity(i);
                    rng.random_range(0..(lam + 4.0 * lam.sqrt() + 8.0) as u64)
                })
                .collect();
            let want = f.evaluate(&counts) * g.evaluate(&counts);
            let got = fg.evaluate(&counts);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "pointwise product mismatch: got {got}, want {want}"
            );
        }
    }
}

#[test]
fn top_grade_of_product_is_the_symmetrized_tensor() {
    let mut rng = test_rng(0x70_6872);
    for _ in 0..25 {
        let n = rng.random_range(2..=4);
        let space = random_space(&mut rng, n, 0.3, 4.0);
        let p = rng.random_range(1..=2);
        let q = rng.random_range(1..=2);
        let f = random_symmetric_kernel(&mut rng, space.clone(), p);
        let g = random_symmetric_kernel(&mut rng, space.clone(), q);
        let top = ChaosElement::from_kernel(&f)
            .unwrap()
            .multiply(&ChaosElement::from_kernel(&g).unwrap())
            .unwrap()
            .project(p + q);
        let tensor = Kernel::from_fn(space, p + q, |idx| {
            f.value(&idx[..p]) * g.value(&idx[p..])
        })
        .unwrap()
        .symmetrize();
        let want = ChaosElement::from_kernel(&tensor).unwrap();
        let scale = want
            .terms()
            .map(|(_, c)| c.abs())
            .fold(0.0f64, f64::max)
            .max(1e-12);
        for (alpha, c) in want.terms() {
            assert!(
                (top.coefficient(alpha) - c).abs() <= 1e-10 * scale,
                "top grade coefficient mismatch at {alpha:?}"
            );
        }
        assert_eq!(top.n_terms(), want.n_terms());
    }
}

#[test]
fn gamma_matches_its_definitional_composition() {
    let mut rng = test_rng(0x6A66A);
    for _ in 0..25 {
        let n = rng.random_range(2..=3);
        let space = random_space(&mut rng, n, 0.4, 5.0);
        let f = random_element(&mut rng, &space, 2, 4);
        let g = random_element(&mut rng, &space, 2, 4);
        let gamma = f.gamma(&g).unwrap();
        let def = f
            .multiply(&g)
            .unwrap()
            .apply_generator()
            .sub(&f.multiply(&g.apply_generator()).unwrap())
            .unwrap()
            .sub(&g.multiply(&f.apply_generator()).unwrap())
            .unwrap()
            .scale(0.5);
        let scale = def
            .terms()
            .map(|(_, c)| c.abs())
            .fold(1e-12f64, f64::max);
        for (alpha, c) in def.terms() {
            assert!(
                (gamma.coefficient(alpha) - c).abs() <= 1e-12 * scale,
                "gamma deviates from its definition at {alpha:?}"
            );
        }
        for (alpha, c) in gamma.terms() {
            assert!(
                (def.coefficient(alpha) - c).abs() <= 1e-12 * scale,
                "definition deviates from gamma at {alpha:?}"
            );
        }
    }
}

#[test]
fn gamma_pairing_and_mean_identities() {
    let mut rng = test_rng(0xE4E4);
    for _ in 0..20 {
        let n = rng.random_range(2..=3);
        let space = random_space(&mut rng, n, 0.4, 5.0);
        let f = random_element(&mut rng, &space, 2, 4);
        let g = random_element(&mut rng, &space, 2, 4);
        let mean_gamma = f.gamma(&g).unwrap().expectation();
        let pairing = -f.expectation_of_product(&g.apply_generator()).unwrap();
        assert_relative_eq!(mean_gamma, pairing, max_relative = 1e-11, epsilon = 1e-12);
    }
    for q in 1..=3usize {
        let mut rng = test_rng(0xE4E5 + q as u64);
        let space = random_space(&mut rng, 3, 0.4, 5.0);
        let f = ChaosElement::from_kernel(&random_symmetric_kernel(&mut rng, space, q)).unwrap();
        assert_relative_eq!(
            f.gamma(&f).unwrap().expectation(),
            q as f64 * f.variance(),
            max_relative = 1e-12
        );
    }
}

#[test]
fn gamma_grade_expansion_for_homogeneous_elements() {
    let mut rng = test_rng(0x5B1);
    for _ in 0..25 {
        let n = rng.random_range(2..=4);
        let space = random_space(&mut rng, n, 0.3, 6.0);
        let p = rng.random_range(1..=3);
        let f =
            ChaosElement::from_kernel(&random_symmetric_kernel(&mut rng, space.clone(), p)).unwrap();
        let sq = f.multiply(&f).unwrap();
        let gamma = f.gamma(&f).unwrap();

        let mut formula = ChaosElement::constant(space, p as f64 * f.variance());
        for k in 1..2 * p {
            formula = formula
                .add(&sq.project(k).scale(0.5 * (2 * p - k) as f64))
                .unwrap();
        }
        let scale = formula
            .terms()
            .map(|(_, c)| c.abs())
            .fold(1e-12f64, f64::max);
        for (alpha, c) in formula.terms() {
            assert!(
                (gamma.coefficient(alpha) - c).abs() <= 1e-11 * scale,
                "grade expansion mismatch at {alpha:?}"
            );
        }
        assert_eq!(gamma.project(2 * p).n_terms(), 0);
    }
}

#[test]
fn extract_kernel_inverts_the_multiple_integral() {
    let mut rng = test_rng(0x12F4);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let space = random_space(&mut rng, n, 0.3, 4.0);
        let p = rng.random_range(1..=3);
        let f = random_symmetric_kernel(&mut rng, space, p);
        let element = ChaosElement::from_kernel(&f).unwrap();
        let back = element.extract_kernel(p).unwrap();
        assert!(back.is_symmetric());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-14, epsilon = 1e-300);
        }
    }
}

#[test]
fn inequality_reports_hold_on_random_homogeneous_pairs() {
    let mut rng = test_rng(0x5EE9);
    for case in 0..120 {
        let n = rng.random_range(2..=4);
        let space = random_space(&mut rng, n, 0.2, 8.0);
        let p = rng.random_range(1..=3);
        let q = rng.random_range(1..=3);
        let f = ChaosElement::from_kernel(&random_symmetric_kernel(&mut rng, space.clone(), p))
            .unwrap();
        let g =
            ChaosElement::from_kernel(&random_symmetric_kernel(&mut rng, space, q)).unwrap();

        let rep = verify_moment_inequalities(&f).unwrap();
        assert!(
            rep.all_ok(),
            "case {case}: single-element check failed: {:?}",
            rep.checks.iter().filter(|c| !c.ok).collect::<Vec<_>>()
        );
        assert!(rep.fourth_cumulant > 0.0, "case {case}: cumulant not positive");

        let pair = verify_pair_inequalities(&f, &g).unwrap();
        assert!(
            pair.all_ok(),
            "case {case}: pair check failed: {:?}",
            pair.checks.iter().filter(|c| !c.ok).collect::<Vec<_>>()
        );

        let vector = verify_vector_fourth_moment(&[f, g]).unwrap();
        assert!(
            vector.all_ok(),
            "case {case}: vector check failed: {:?}",
            vector.checks.iter().filter(|c| !c.ok).collect::<Vec<_>>()
        );
    }
}

#[test]
fn single_cell_bounds_are_tight_where_expected() {
    let (_, f) = one_cell_c1(4.0);
    let rep = verify_moment_inequalities(&f).unwrap();
    for name in [
        "gamma variance vs fourth cumulant",
        "moment sandwich, upper side",
        "low grade variance vs fourth cumulant",
    ] {
        let row = rep.checks.iter().find(|c| c.name == name).unwrap();
        assert!(
            row.slack.abs() <= 1e-12 * row.scale,
            "{name} should be tight, slack {}",
            row.slack
        );
    }
}

#[test]
fn vector_report_reduces_correctly_in_one_dimension() {
    let (_, f) = one_cell_c1(2.0);
    let rep = verify_vector_fourth_moment(std::slice::from_ref(&f)).unwrap();
    let var = f.variance();
    assert_relative_eq!(
        rep.gaussian_fourth_moment,
        3.0 * var * var,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        rep.vector_fourth_moment,
        f.moment4().unwrap(),
        max_relative = 1e-14
    );
    assert!(rep.all_ok());
    assert!(matches!(
        verify_vector_fourth_moment(&[]),
        Err(ChaosError::NotHomogeneous(_))
    ));
}
