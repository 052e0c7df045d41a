//! Kernel algebra against definitional oracles: the production contraction
//! (blocked, parallel) must agree with the naive triple loop entry by entry,
//! and the product identity must hold on randomized symmetric pairs.

mod common;

use common::{naive_contract, naive_inner, random_space, random_symmetric_kernel, test_rng};
use poisson_chaos::kernel::{contraction_identity_report, GroundSpace, Kernel};
use rand::Rng;

#[test]
fn contraction_matches_naive_oracle_on_randomized_cases() {
    let mut rng = test_rng(0x5eed_0001);
    for case in 0..60 {
        let n = rng.random_range(2..=5);
        let space = random_space(&mut rng, n, 0.2, 3.0);
        let p = rng.random_range(1..=3);
        let q = rng.random_range(1..=3);
        let f = random_symmetric_kernel(&mut rng, space.clone(), p);
        let g = random_symmetric_kernel(&mut rng, space, q);
        for r in 0..=p.min(q) {
            let fast = f.contract(&g, r).unwrap();
            let slow = naive_contract(&f, &g, r);
            assert_eq!(fast.values().len(), slow.len());
            for (i, (a, b)) in fast.values().iter().zip(&slow).enumerate() {
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                    "case {case}: p={p} q={q} r={r} entry {i}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn inner_matches_naive_oracle() {
    let mut rng = test_rng(0x5eed_0002);
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let space = random_space(&mut rng, n, 0.1, 4.0);
        let q = rng.random_range(1..=4);
        let f = random_symmetric_kernel(&mut rng, space.clone(), q);
        let g = random_symmetric_kernel(&mut rng, space, q);
        let fast = f.inner(&g).unwrap();
        let slow = naive_inner(&f, &g);
        assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()));
    }
}

#[test]
fn product_identity_holds_on_randomized_symmetric_pairs() {
    let mut rng = test_rng(0x5eed_0003);
    for case in 0..120 {
        let n = rng.random_range(2..=5);
        let space = random_space(&mut rng, n, 0.2, 2.5);
        let p = rng.random_range(1..=3);
        let q = rng.random_range(1..=3);
        let f = random_symmetric_kernel(&mut rng, space.clone(), p);
        let g = random_symmetric_kernel(&mut rng, space, q);
        let rep = contraction_identity_report(&f, &g).unwrap();
        assert!(
            rep.identity_ok,
            "case {case}: relative gap {} (p={p}, q={q})",
            rep.relative_gap
        );
        assert!(rep.lower_bound_ok, "case {case}: lower bound violated");
    }
}

#[test]
fn contraction_of_indicator_kernels_counts_overlaps() {
    // f = 1_{A×A} with A = {c0, c1}: f ⊗_1 f (x, y) = μ(A ∩ …) reduces to
    // (μ₀+μ₁) on A×A. Hand-checkable smoke value.
    let space = GroundSpace::with_intensities(&[0.5, 1.5, 2.0]).unwrap();
    let f = Kernel::from_fn(space, 2, |i| {
        if i[0] < 2 && i[1] < 2 {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    let c = f.contract(&f, 1).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            let want = if x < 2 && y < 2 { 2.0 } else { 0.0 };
            assert_eq!(c.value(&[x, y]), want);
        }
    }
}
