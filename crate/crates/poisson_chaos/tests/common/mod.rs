//! Shared test oracles, implemented independently of the production paths:
//! contractions by the definitional triple loop, Charlier arithmetic in
//! exact rational arithmetic, and Poisson moments by direct pmf summation.

#![allow(dead_code)] // each integration test binary uses a subset

pub mod charlier_exact;

use poisson_chaos::kernel::{GroundSpace, Kernel};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use std::sync::Arc;

/// Naive `f ⊗_r g` straight from the definition: for every output tuple
/// `(x, y)`, sum `f(x, z) g(y, z) μ_{z₁}⋯μ_{z_r}` over all shared tuples
/// `z`. No blocking, no parallelism, no layout tricks.
pub fn naive_contract(f: &Kernel, g: &Kernel, r: usize) -> Vec<f64> {
    assert_eq!(f.space(), g.space());
    let n = f.space().n_cells();
    let mus: Vec<f64> = f.space().intensities().collect();
    let (p, q) = (f.order(), g.order());
    assert!(r <= p.min(q));

    let out_order = p + q - 2 * r;
    let mut out = vec![0.0; n.pow(out_order as u32)];
    let mut xy = vec![0usize; out_order];
    let mut fi = vec![0usize; p];
    let mut gi = vec![0usize; q];
    for (flat, slot) in out.iter_mut().enumerate() {
        unflatten(flat, n, &mut xy);
        let (x, y) = xy.split_at(p - r);
        let mut z = vec![0usize; r];
        let mut acc = 0.0;
        loop {
            fi[..p - r].copy_from_slice(x);
            fi[p - r..].copy_from_slice(&z);
            gi[..q - r].copy_from_slice(y);
            gi[q - r..].copy_from_slice(&z);
            let w: f64 = z.iter().map(|&c| mus[c]).product();
            acc += f.value(&fi) * g.value(&gi) * w;
            if !advance(&mut z, n) {
                break;
            }
        }
        *slot = acc;
    }
    out
}

/// Naive weighted inner product by direct summation over all tuples.
pub fn naive_inner(f: &Kernel, g: &Kernel) -> f64 {
    assert_eq!(f.order(), g.order());
    let n = f.space().n_cells();
    let mus: Vec<f64> = f.space().intensities().collect();
    let mut idx = vec![0usize; f.order()];
    let mut acc = 0.0;
    for flat in 0..f.values().len() {
        unflatten(flat, n, &mut idx);
        let w: f64 = idx.iter().map(|&c| mus[c]).product();
        acc += f.values()[flat] * g.values()[flat] * w;
    }
    acc
}

fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

fn advance(idx: &mut [usize], n: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Deterministic random ground space with intensities in [lo, hi].
pub fn random_space(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Arc<GroundSpace> {
    let mus: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    GroundSpace::with_intensities(&mus).unwrap()
}

/// Deterministic random symmetric kernel with entries in [−1, 1].
pub fn random_symmetric_kernel(
    rng: &mut ChaCha8Rng,
    space: Arc<GroundSpace>,
    order: usize,
) -> Kernel {
    let n = space.n_cells();
    let raw = Kernel::from_fn(space, order, |_| rng.random_range(-1.0..1.0)).unwrap();
    let sym = raw.symmetrize();
    debug_assert_eq!(sym.space().n_cells(), n);
    sym
}

/// Deterministic random symmetric kernel vanishing on diagonals.
pub fn random_diagonal_free_kernel(
    rng: &mut ChaCha8Rng,
    space: Arc<GroundSpace>,
    order: usize,
) -> Kernel {
    let raw = Kernel::from_fn(space, order, |idx| {
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                if idx[a] == idx[b] {
                    return 0.0;
                }
            }
        }
        rng.random_range(-1.0..1.0)
    })
    .unwrap();
    raw.symmetrize()
}

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// E[g(X)] for X ~ Poisson(λ) by direct pmf summation, truncated where the
/// tail is far below f64 resolution for polynomial integrands of the given
/// degree. Valid for λ ≤ ~500 (the pmf recurrence starts at e^{−λ}).
pub fn poisson_expectation(lambda: f64, degree: usize, g: impl Fn(u64) -> f64) -> f64 {
    let k_max = (lambda + 30.0 * lambda.sqrt() + 4.0 * degree as f64 + 25.0).ceil() as u64;
    let mut pmf = (-lambda).exp();
    let mut acc = pmf * g(0);
    for k in 1..=k_max {
        pmf *= lambda / k as f64;
        acc += pmf * g(k);
    }
    acc
}
