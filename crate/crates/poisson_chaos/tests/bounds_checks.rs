//! Cross-module checks of the bound layer: constants fed with exact chaos
//! moments, and the exact side of the transfer principle on hand-solved
//! kernel families.

use poisson_chaos::bounds::{
    multivariate_bound, multivariate_constants, transfer_principle_check, univariate_bound,
    BoundVariant, CovMatrix, SmoothnessSpec,
};
use poisson_chaos::{ChaosElement, GroundSpace, Kernel};

/// Order-2 kernel on `2b` unit cells pairing cell `2k` with `2k+1` at the
/// constant making the integral's variance exactly one.
fn block_kernel(b: usize) -> Kernel {
    let space = GroundSpace::unit(2 * b);
    let c = 1.0 / (2.0 * (b as f64).sqrt());
    Kernel::from_fn(space, 2, |idx| {
        if idx[0] / 2 == idx[1] / 2 && idx[0] != idx[1] {
            c
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Order-1 kernel constant `1/√n` on `n` unit cells, again unit variance.
fn spread_kernel_order_one(n: usize) -> Kernel {
    let space = GroundSpace::unit(n);
    let c = 1.0 / (n as f64).sqrt();
    Kernel::from_fn(space, 1, |_| c).unwrap()
}

#[test]
fn transfer_exact_side_matches_the_hand_solved_block_family() {
    // One block with c = 1/2 is the product X·Y of two centered unit
    // Poissons: E[(XY)²] = 1 and E[(XY)⁴] = 4·4 = 16, so κ₄ = 13. The sum
    // of b independent rescaled blocks then has κ₄ = 13/b, and the only
    // contraction is (f ⊗₁ f) = c²·(diagonal plates) with squared norm
    // 2·b·c⁴ = 1/(8b), giving weighted sum 2!²·C(2,1)²·‖f⊗₁f‖² = 2/b.
    let blocks = [2usize, 4, 8, 16];
    let kernels: Vec<Kernel> = blocks.iter().map(|&b| block_kernel(b)).collect();

    for (&b, kernel) in blocks.iter().zip(&kernels) {
        let f = ChaosElement::from_kernel(kernel).unwrap();
        let bf = b as f64;
        assert!((f.variance() - 1.0).abs() < 1e-12);
        let kappa4 = f.fourth_cumulant().unwrap();
        assert!(
            (kappa4 - 13.0 / bf).abs() < 1e-12 * (13.0 / bf),
            "b = {b}: κ₄ = {kappa4}, expected {}",
            13.0 / bf
        );
        let norm_sq = kernel.contract(kernel, 1).unwrap().norm().powi(2);
        assert!((norm_sq - 1.0 / (8.0 * bf)).abs() < 1e-14);
    }

    let tol = 13.0 / 16.0 + 1e-9;
    let report = transfer_principle_check(&kernels, tol).unwrap();
    assert!(report.all_ok);
    assert!(report.kappa4_vanishes);
    assert!(report.contractions_vanish);
    assert_eq!(report.order, 2);
    for (row, &b) in report.rows.iter().zip(&blocks) {
        let bf = b as f64;
        assert!((row.inequality.lhs - 2.0 / bf).abs() < 1e-13);
        assert!((row.inequality.rhs - 13.0 / bf).abs() < 1e-12);
        assert!(row.inequality.ok);
        assert_eq!(row.contraction_norms.len(), 1);
    }
    for pair in report.rows.windows(2) {
        assert!(pair[1].kappa4 < pair[0].kappa4);
    }

    // A tolerance below the final cumulant leaves the vanishing flags unset
    // without tripping the inequality verdicts.
    let strict = transfer_principle_check(&kernels, 1e-6).unwrap();
    assert!(!strict.kappa4_vanishes);
    assert!(strict.rows.iter().all(|r| r.inequality.ok));
}

#[test]
fn univariate_bound_on_the_spread_family_decays_as_root_n() {
    // The normalized sum of n centered unit Poissons has κ₄ = 1/n exactly,
    // so the grade-1 constant freezes to (1/√(2π) + 2/3)/√n.
    let coeff = 1.0 / (2.0 * std::f64::consts::PI).sqrt() + 2.0 / 3.0;
    for n in [10usize, 100, 1000] {
        let kernel = spread_kernel_order_one(n);
        let f = ChaosElement::from_kernel(&kernel).unwrap();
        let sigma2 = f.variance();
        let kappa4 = f.fourth_cumulant().unwrap();
        assert!((sigma2 - 1.0).abs() < 1e-12);
        // κ₄ comes from cancelling E[F⁴] ≈ 3 + 1/n against 3σ⁴ = 3, so the
        // roundoff floor sits at the O(3) scale, not at κ₄'s own scale.
        assert!((kappa4 - 1.0 / n as f64).abs() < 1e-11);

        let bound = univariate_bound(1, sigma2, kappa4).unwrap();
        assert!((bound.b1 - coeff / sigma2.sqrt() * kappa4.sqrt()).abs() < 1e-14);
        let expect = coeff / (n as f64).sqrt();
        assert!(
            (bound.b1 - expect).abs() < 1e-8 * expect,
            "n = {n}: b1 = {}, expected {expect}",
            bound.b1
        );
        assert!(bound.b1 <= bound.b2);
    }
}

#[test]
fn multivariate_bound_accepts_exact_chaos_moments() {
    // Vector (F₁, F₂, F₃) with grades (1, 2, 2): F₁ on its own cell, F₂ one
    // block pair, F₃ = (F₂ + G)/√2 with G on a disjoint pair. Exact
    // covariance is block diagonal across grades with Σ₂₃ = 1/√2.
    let space = GroundSpace::unit(5);
    let f1 = Kernel::from_fn(space.clone(), 1, |idx| if idx[0] == 0 { 1.0 } else { 0.0 }).unwrap();
    let pair = |a: usize, b: usize, c: f64| {
        Kernel::from_fn(space.clone(), 2, move |idx| {
            let (i, j) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
            if (i, j) == (a, b) {
                c
            } else {
                0.0
            }
        })
        .unwrap()
    };
    let f2 = pair(1, 2, 0.5);
    let g = pair(3, 4, 0.5);
    let root_half = 0.5f64.sqrt();
    let f3 = ChaosElement::from_kernel(&f2)
        .unwrap()
        .scale(root_half)
        .add(&ChaosElement::from_kernel(&g).unwrap().scale(root_half))
        .unwrap();

    let elements = [
        ChaosElement::from_kernel(&f1).unwrap(),
        ChaosElement::from_kernel(&f2).unwrap(),
        f3,
    ];
    let d = elements.len();
    let mut cov_rows = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            cov_rows[i][j] = elements[i].covariance(&elements[j]).unwrap();
        }
    }
    let sigma = CovMatrix::from_rows(&cov_rows).unwrap();
    assert_eq!(sigma.max_cross_order_entry(&[1, 2, 2]).unwrap(), 0.0);
    assert!((sigma.entry(1, 2) - root_half).abs() < 1e-12);
    assert!(sigma.is_positive_definite());

    let kappa4s: Vec<f64> = elements
        .iter()
        .map(|f| f.fourth_cumulant().unwrap())
        .collect();
    let m4s: Vec<f64> = elements.iter().map(|f| f.moment4().unwrap()).collect();
    assert!(kappa4s.iter().all(|&k| k >= 0.0));

    let spec = SmoothnessSpec::for_direction(&[1.0, 1.0, 1.0]);
    let c3 =
        multivariate_bound(&[1, 2, 2], &sigma, &kappa4s, &m4s, &spec, BoundVariant::C3).unwrap();
    let c2 =
        multivariate_bound(&[1, 2, 2], &sigma, &kappa4s, &m4s, &spec, BoundVariant::C2).unwrap();
    assert!(c3.total.is_finite() && c3.total > 0.0);
    assert!(c2.total.is_finite() && c2.total > 0.0);
    assert_eq!(c3.terms.len(), 2);
    assert!(c3.constants.contains_key("B3"));
    assert!(c2.constants.contains_key("B2"));

    // The constants behind the report match the closed forms for
    // q₁ = 1, q_d = 2, d = 3.
    let consts = multivariate_constants(1, 2, 3, &sigma, &spec).unwrap();
    let a2_hand = 3.0 * 6.0f64.sqrt() / 4.0 * spec.m2;
    assert!((consts.a2 - a2_hand).abs() < 1e-12 * a2_hand);
    let b3_hand = a2_hand + 4.0 * (3.0 * sigma.trace()).sqrt() / 9.0 * spec.m3;
    assert!((consts.b3 - b3_hand).abs() < 1e-12 * b3_hand);
}

#[test]
fn covariance_norm_inequality_holds_across_shapes() {
    let cases: Vec<(usize, Vec<f64>)> = vec![
        (1, vec![3.0]),
        (2, vec![1.0, -0.9, -0.9, 1.0]),
        (3, vec![2.0, 0.3, 0.0, 0.3, 1.0, -0.4, 0.0, -0.4, 0.7]),
        (2, vec![0.0, 0.0, 0.0, 0.0]),
    ];
    for (d, flat) in cases {
        let sigma = CovMatrix::from_flat(d, &flat).unwrap();
        assert!(
            sigma.hs_norm() <= (d as f64).sqrt() * sigma.op_norm() + 1e-12,
            "d = {d}: ‖Σ‖_HS = {} vs √d·‖Σ‖_op = {}",
            sigma.hs_norm(),
            (d as f64).sqrt() * sigma.op_norm()
        );
        assert!(sigma.op_norm() <= sigma.hs_norm() + 1e-12);
    }
}
