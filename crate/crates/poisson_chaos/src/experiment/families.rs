//! The kernel families the studies are built on.

use std::sync::Arc;

use crate::comb::factorial;
use crate::kernel::{GroundSpace, Kernel};

use super::{config, ExperimentError};

/// The spread family: constant on every off-diagonal `q`-tuple of `n` cells
/// of equal intensity, scaled so the induced element has unit variance.
///
/// With `P(n,q) = n(n−1)⋯(n−q+1)` ordered off-diagonal tuples the exact
/// normalization `q!·‖f‖² = 1` forces the constant `1/√(q!·P(n,q)·μ^q)`.
/// At order one this is the classical triangular array behind the central
/// limit theorem; at order two and a growing cell count the family instead
/// converges to a centered chi-square shape whose fourth cumulant stays
/// near 12, which is what the universality study's failure case needs.
pub fn kernel_family_spread(
    q: usize,
    n_cells: usize,
    intensity: f64,
) -> Result<Kernel, ExperimentError> {
    if q == 0 {
        return Err(config("spread family needs order at least 1"));
    }
    if n_cells < q {
        return Err(config(format!(
            "spread family of order {q} needs at least {q} cells, got {n_cells}"
        )));
    }
    let space = GroundSpace::with_intensities(&vec![intensity; n_cells])?;
    let mut tuples = 1.0;
    for k in 0..q {
        tuples *= (n_cells - k) as f64;
    }
    let c = 1.0 / (factorial(q) * tuples * intensity.powi(q as i32)).sqrt();
    let kernel = Kernel::from_fn(space, q, |idx| {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            0.0
        } else {
            c
        }
    })?;
    let norm_sq = kernel.norm() * kernel.norm();
    assert!(
        (factorial(q) * norm_sq - 1.0).abs() <= 1e-10,
        "spread normalization drifted: q!·‖f‖² = {}",
        factorial(q) * norm_sq
    );
    Ok(kernel)
}

/// The block family: an order-two kernel supported on `b` disjoint cell
/// pairs `(2k, 2k+1)`, constant `1/(2μ√b)` so the element has unit variance.
///
/// Each block contributes an independent product of two standardized counts,
/// so the element is a normalized sum of `b` independent copies and its
/// fourth cumulant decays like `1/b` under every driver. This is the family
/// whose contractions vanish, the success case of the transfer principle.
pub fn kernel_family_blocks(
    n_blocks: usize,
    intensity: f64,
) -> Result<Kernel, ExperimentError> {
    if n_blocks == 0 {
        return Err(config("block family needs at least one block"));
    }
    let space = GroundSpace::with_intensities(&vec![intensity; 2 * n_blocks])?;
    let c = 1.0 / (2.0 * intensity * (n_blocks as f64).sqrt());
    let pairs: Vec<(usize, usize)> = (0..n_blocks).map(|k| (2 * k, 2 * k + 1)).collect();
    kernel_from_pairs(space, &pairs, c)
}

/// The block family with a linear ramp of block weights, `r_k = 1 + k/(b−1)`
/// before normalization.
///
/// The induced element is `Σ w_k·X_{2k}·X_{2k+1}` with distinct weights
/// `w_k = 2μ·c_k`, `Σ w_k² = 1`. Distinct weights matter for the sign
/// driver: with equal weights the element is again a scaled sign count,
/// a lattice law whose Wasserstein distance to any continuous law cannot
/// drop below half the lattice gap, `1/(2√b)`. The ramp removes the lattice
/// while keeping every block moment computable from the weights.
pub fn kernel_family_blocks_weighted(
    n_blocks: usize,
    intensity: f64,
) -> Result<Kernel, ExperimentError> {
    if n_blocks == 0 {
        return Err(config("block family needs at least one block"));
    }
    let raw: Vec<f64> = (0..n_blocks)
        .map(|k| {
            if n_blocks == 1 {
                1.0
            } else {
                1.0 + k as f64 / (n_blocks - 1) as f64
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let space = GroundSpace::with_intensities(&vec![intensity; 2 * n_blocks])?;
    let values: Vec<f64> = raw
        .iter()
        .map(|r| (r / total).sqrt() / (2.0 * intensity))
        .collect();
    let kernel = Kernel::from_fn(space, 2, move |idx| {
        let (a, b) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        if b == a + 1 && a % 2 == 0 {
            values[a / 2]
        } else {
            0.0
        }
    })?;
    let norm_sq = kernel.norm() * kernel.norm();
    assert!(
        (2.0 * norm_sq - 1.0).abs() <= 1e-10,
        "weighted block normalization drifted: 2·‖f‖² = {}",
        2.0 * norm_sq
    );
    Ok(kernel)
}

/// The rotated partner of [`kernel_family_blocks`]: same cells, grouped in
/// fours with stride-two pairs `(4m, 4m+2)` and `(4m+1, 4m+3)`, so its tuple
/// support is disjoint from the block family's and the two kernels are
/// exactly orthogonal. Needs an even block count.
pub(super) fn kernel_family_blocks_rotated(
    n_blocks: usize,
    intensity: f64,
) -> Result<Kernel, ExperimentError> {
    if n_blocks == 0 || n_blocks % 2 != 0 {
        return Err(config(format!(
            "rotated block family needs an even positive block count, got {n_blocks}"
        )));
    }
    let space = GroundSpace::with_intensities(&vec![intensity; 2 * n_blocks])?;
    let c = 1.0 / (2.0 * intensity * (n_blocks as f64).sqrt());
    let mut pairs = Vec::with_capacity(n_blocks);
    for m in 0..n_blocks / 2 {
        pairs.push((4 * m, 4 * m + 2));
        pairs.push((4 * m + 1, 4 * m + 3));
    }
    kernel_from_pairs(space, &pairs, c)
}

/// Symmetric order-two kernel equal to `value` on the given unordered pairs.
fn kernel_from_pairs(
    space: Arc<GroundSpace>,
    pairs: &[(usize, usize)],
    value: f64,
) -> Result<Kernel, ExperimentError> {
    let set: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    let kernel = Kernel::from_fn(space, 2, move |idx| {
        let key = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        if set.contains(&key) {
            value
        } else {
            0.0
        }
    })?;
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::ChaosElement;
    use crate::comb::factorial;

    #[test]
    fn spread_family_is_normalized_at_every_order() {
        for (q, n, mu) in [(1usize, 7usize, 1.0f64), (2, 6, 0.5), (3, 6, 2.0), (4, 6, 1.0)] {
            let kernel = kernel_family_spread(q, n, mu).unwrap();
            assert!(kernel.is_symmetric());
            assert!(kernel.vanishes_on_diagonals());
            let norm_sq = kernel.norm() * kernel.norm();
            assert!((factorial(q) * norm_sq - 1.0).abs() < 1e-12);
            let f = ChaosElement::from_kernel(&kernel).unwrap();
            assert!((f.variance() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spread_family_order_one_matches_the_closed_form() {
        let kernel = kernel_family_spread(1, 16, 1.0).unwrap();
        assert!((kernel.value(&[3]) - 0.25).abs() < 1e-15);
        let f = ChaosElement::from_kernel(&kernel).unwrap();
        assert!((f.fourth_cumulant().unwrap() - 1.0 / 16.0).abs() < 1e-13);
    }

    #[test]
    fn block_families_are_unit_variance_and_orthogonal() {
        let mu = 1.5;
        let f = kernel_family_blocks(4, mu).unwrap();
        let g = kernel_family_blocks_rotated(4, mu).unwrap();
        assert_eq!(f.space().n_cells(), 8);
        assert!((2.0 * f.norm() * f.norm() - 1.0).abs() < 1e-12);
        assert!((2.0 * g.norm() * g.norm() - 1.0).abs() < 1e-12);
        assert_eq!(f.inner(&g).unwrap(), 0.0);

        let fe = ChaosElement::from_kernel(&f).unwrap();
        let ge = ChaosElement::from_kernel(&g).unwrap();
        assert!((fe.variance() - 1.0).abs() < 1e-12);
        assert!((ge.variance() - 1.0).abs() < 1e-12);
        assert_eq!(fe.covariance(&ge).unwrap(), 0.0);
    }

    #[test]
    fn block_family_fourth_cumulant_matches_the_product_formula() {
        for (b, mu) in [(2usize, 1.0f64), (4, 1.0), (4, 2.0)] {
            let kernel = kernel_family_blocks(b, mu).unwrap();
            let f = ChaosElement::from_kernel(&kernel).unwrap();
            let m4 = 3.0 + 1.0 / mu;
            let expected = (m4 * m4 - 3.0) / b as f64;
            assert!(
                (f.fourth_cumulant().unwrap() - expected).abs() < 1e-11,
                "b = {b}, mu = {mu}"
            );
        }
    }

    #[test]
    fn weighted_block_family_keeps_the_weightwise_product_formula() {
        let (b, mu) = (6usize, 4.0f64);
        let kernel = kernel_family_blocks_weighted(b, mu).unwrap();
        assert!(kernel.is_symmetric());
        let f = ChaosElement::from_kernel(&kernel).unwrap();
        assert!((f.variance() - 1.0).abs() < 1e-12);

        let s4: f64 = (0..b)
            .map(|k| (2.0 * mu * kernel.value(&[2 * k, 2 * k + 1])).powi(4))
            .sum();
        let m4 = 3.0 + 1.0 / mu;
        let expected = (m4 * m4 - 3.0) * s4;
        assert!((f.fourth_cumulant().unwrap() - expected).abs() < 1e-11);

        let w_first = 2.0 * mu * kernel.value(&[0, 1]);
        let w_last = 2.0 * mu * kernel.value(&[2 * b - 2, 2 * b - 1]);
        assert!((w_last / w_first - 2.0f64.sqrt()).abs() < 1e-12);

        let single = kernel_family_blocks_weighted(1, 1.0).unwrap();
        assert_eq!(single.value(&[0, 1]), 0.5);
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(kernel_family_spread(0, 4, 1.0).is_err());
        assert!(kernel_family_spread(3, 2, 1.0).is_err());
        assert!(kernel_family_blocks(0, 1.0).is_err());
        assert!(kernel_family_blocks_rotated(3, 1.0).is_err());
    }
}
