//! Contraction algebra on symmetric kernels.
//!
//! Builds two symmetric kernels on a five-cell space, walks through the
//! contraction ladder f ⊗_r g, and checks the product identity
//!
//!   (p+q)!·‖sym(f ⊗ g)‖² = p!q!·Σ_r C(p,r)C(q,r)·‖f ⊗_r g‖²
//!
//! together with its lower bound p!q!‖f‖²‖g‖² (+ p!q!⟨f,g⟩² when p = q).
//! The left side is the second moment of the top chaos grade of a product
//! of multiple integrals; the right side is what the contraction ladder
//! predicts. Run with `cargo run --example kernel_contractions`.

use poisson_chaos::kernel::contraction_identity_report;
use poisson_chaos::{GroundSpace, Kernel};

fn main() {
    let space = GroundSpace::with_intensities(&[0.5, 1.0, 2.0, 3.5, 0.8]).unwrap();
    println!(
        "ground space: {} cells, total mass {:.2}",
        space.n_cells(),
        space.total_mass()
    );

    // A symmetric order-2 kernel with some off-diagonal structure and a
    // symmetric order-3 kernel built from a separable seed.
    let f = Kernel::from_fn(space.clone(), 2, |idx| {
        1.0 / (1.0 + (idx[0] as f64 - idx[1] as f64).abs())
    })
    .unwrap();
    let g = Kernel::from_fn(space.clone(), 3, |idx| {
        idx.iter().map(|&i| 0.3 + 0.2 * i as f64).product()
    })
    .unwrap()
    .symmetrize();

    println!("‖f‖ = {:.6}  (order {})", f.norm(), f.order());
    println!("‖g‖ = {:.6}  (order {})", g.norm(), g.order());

    println!("\ncontraction ladder f ⊗_r g:");
    for r in 0..=f.order().min(g.order()) {
        let c = f.contract(&g, r).unwrap();
        println!(
            "  r = {}: order {} kernel, ‖f ⊗_{} g‖ = {:.6}",
            r,
            c.order(),
            r,
            c.norm()
        );
    }

    let report = contraction_identity_report(&f, &g).unwrap();
    println!("\nproduct identity, mixed orders (p = 2, q = 3):");
    println!("  lhs  (p+q)!·‖sym(f⊗g)‖²           = {:.9}", report.lhs);
    println!("  rhs  p!q!·Σ_r C(p,r)C(q,r)‖f⊗_rg‖² = {:.9}", report.rhs);
    println!("  relative gap = {:.3e}", report.relative_gap);
    println!("  lower bound  = {:.9}", report.lower_bound);
    assert!(report.identity_ok && report.lower_bound_ok);

    // Equal orders activate the ⟨f,g⟩² term in the lower bound.
    let h = Kernel::from_fn(space.clone(), 2, |idx| {
        ((idx[0] + 2 * idx[1]) as f64 * 0.17).sin()
    })
    .unwrap()
    .symmetrize();
    let report = contraction_identity_report(&f, &h).unwrap();
    println!("\nproduct identity, equal orders (p = q = 2):");
    println!("  lhs          = {:.9}", report.lhs);
    println!("  rhs          = {:.9}", report.rhs);
    println!("  lower bound  = {:.9}  (includes p!q!⟨f,h⟩²)", report.lower_bound);
    println!("  slack        = {:.9}", report.rhs - report.lower_bound);
    assert!(report.identity_ok && report.lower_bound_ok);

    // Kernels round-trip through JSON with their digest intact.
    let json = f.to_json_string();
    let back = Kernel::from_json_str(&json).unwrap();
    println!("\nJSON round trip: digest {} preserved: {}", f.digest(), back.digest() == f.digest());
}
