//! Exchangeable thinning pairs: Mehler contraction, carré du champ limit,
//! and the quartic rate ρ, all checked against their exact chaos values.

use poisson_chaos::chaos::ChaosElement;
use poisson_chaos::kernel::GroundSpace;
use poisson_chaos::sim::{
    estimate_gamma_limit, estimate_rho, mehler_check, sample_measure, thin, STUDENTIZED_LIMIT,
};
use poisson_chaos::MultiIndex;

fn main() {
    let lambda = 4.0;
    let space = GroundSpace::with_intensities(&[lambda]).unwrap();
    let f = ChaosElement::from_terms(space.clone(), [(MultiIndex::single(0, 1), 1.0)]).unwrap();

    // The pair construction itself: keep each atom with probability e^{-t},
    // replenish from an independent Poisson with the complementary mass.
    let base = sample_measure(&space, 7);
    let pair = thin(&base, 0.35, 7).unwrap();
    println!("thinning pair at t = 0.35 (one cell, λ = {lambda}):");
    println!("  base counts     = {:?}", base.counts());
    println!("  retained counts = {:?}", pair.retained());
    println!("  fresh counts    = {:?}", pair.fresh());
    println!("  evolved counts  = {:?}", pair.evolved().counts());
    let identity = thin(&base, 0.0, 7).unwrap();
    println!(
        "  t = 0 keeps everything exactly: {}",
        identity.evolved().counts() == base.counts()
    );
    println!();

    // Mehler contraction: E[F(η_t) | η] = e^{-qt}·F(η) for grade q.
    let mehler = mehler_check(&f, 0.1, 100, 400, 12).unwrap();
    println!("mehler contraction for grade-1 F at t = 0.1:");
    println!("  outer × inner    = {} × {}", mehler.n_outer, mehler.n_inner);
    println!(
        "  max |studentized| = {:.3}  (budget {STUDENTIZED_LIMIT})",
        mehler.max_abs_studentized
    );
    println!(
        "  worst replication {}: estimate {:.4} vs target {:.4}",
        mehler.worst_replication, mehler.worst_estimate, mehler.worst_target
    );
    println!("  ok = {}", mehler.ok);
    assert!(mehler.ok);
    println!();

    // (1/t)·E[(F_t − F)(G_t − G) | η] → 2Γ(F,G) as t ↓ 0, extrapolated to
    // t = 0 from a geometric grid.
    let grid = [0.1, 0.05, 0.025];
    let gamma = estimate_gamma_limit(&f, &f, &grid, 40, 2000, 13).unwrap();
    println!("carré du champ limit for (F, F) on the grid {grid:?}:");
    println!(
        "  max |studentized| = {:.3} over {} base configurations",
        gamma.max_abs_studentized, gamma.n_outer
    );
    println!(
        "  worst: intercept {:.4} vs exact 2Γ = {:.4}",
        gamma.worst_intercept, gamma.worst_exact
    );
    println!("  ok = {}", gamma.ok);
    assert!(gamma.ok);
    println!();

    // The quartic rate ρ(F) = −4q·E[F⁴] + 12·E[F²·Γ(F,F)]; for this F the
    // exact value is 2λ = 8.
    let rho = estimate_rho(&f, &grid, 20_000, 17).unwrap();
    println!("quartic rate ρ(F), exact value {:.1}:", rho.exact);
    for point in &rho.per_t {
        println!(
            "  t = {:<5} estimate = {:.4}  se = {:.4}",
            point.t, point.estimate, point.se
        );
    }
    println!(
        "  extrapolated intercept = {:.4} ± {:.4}  (studentized {:.3})",
        rho.intercept, rho.intercept_se, rho.studentized
    );
    println!(
        "  ok = {}, nonnegative within CI = {}",
        rho.ok, rho.nonnegative_within_ci
    );
    assert!(rho.ok && rho.nonnegative_within_ci);
}
