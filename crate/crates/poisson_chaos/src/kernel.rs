//! Ground spaces and kernels in `L²(μ^q)`.
//!
//! The ground space is a finite atomic measure space: `n` cells with
//! strictly positive intensities `μ_i`. A kernel of order `q` is a dense
//! real tensor `f : {0,…,n−1}^q → ℝ` stored row-major (first index slowest),
//! carrying the weighted geometry
//!
//! ```text
//!   ⟨f, g⟩ = Σ_{i₁…i_q} f(i₁,…,i_q) g(i₁,…,i_q) μ_{i₁} ⋯ μ_{i_q}.
//! ```
//!
//! The `r`-contraction glues the trailing `r` arguments of two symmetric
//! kernels against the measure,
//!
//! ```text
//!   (f ⊗_r g)(x, y) = Σ_z f(x, z) g(y, z) μ_{z₁} ⋯ μ_{z_r},
//! ```
//!
//! producing a kernel of order `p + q − 2r` that is in general *not*
//! symmetric; `r = 0` is the plain tensor product. Contractions are the
//! currency of fourth-moment analysis: the squared norms `‖f ⊗_r f‖²`
//! control fourth cumulants, and [`contraction_identity_report`] checks the
//! exact expansion
//!
//! ```text
//!   (p+q)!·‖sym(f ⊗ g)‖² = p!·q!·Σ_{r=0}^{p∧q} C(p,r) C(q,r) ‖f ⊗_r g‖²
//! ```
//!
//! together with its lower bound `p!q!‖f‖²‖g‖² (+ p!q!⟨f,g⟩² when p = q)`.
//!
//! Symmetry and diagonal-vanishing are tracked as exact flags, established
//! at construction by checking every adjacent index transposition (the
//! transpositions generate the symmetric group, so the check is complete,
//! not sampled).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comb::{binomial, factorial};

/// Hard ceiling on dense tensor storage (entries), 64⁴.
pub const MAX_TENSOR_LEN: usize = 64 * 64 * 64 * 64;
/// Hard ceiling on kernel order for internal tensors (products of two
/// order-4 kernels are still representable on small spaces).
pub const MAX_ORDER: usize = 8;
/// Ceiling on cell count; order ≥ 2 tensors are further limited by
/// [`MAX_TENSOR_LEN`].
pub const MAX_CELLS: usize = 1 << 20;

/// One atom of the ground space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub intensity: f64,
}

/// A finite atomic measure space: ordered cells with positive intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSpace {
    cells: Vec<Cell>,
}

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("ground space must contain at least one cell")]
    EmptySpace,
    #[error("cell {0} has non-positive or non-finite intensity {1}")]
    BadIntensity(usize, f64),
    #[error("value table has length {got}, expected n_cells^order = {want}")]
    BadLength { got: usize, want: usize },
    #[error("kernel contains a non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("kernels live on different ground spaces")]
    SpaceMismatch,
    #[error("operation requires equal orders, got {0} and {1}")]
    OrderMismatch(usize, usize),
    #[error("contraction depth {r} exceeds min(p, q) = min({p}, {q})")]
    BadContraction { r: usize, p: usize, q: usize },
    #[error("operation requires a symmetric kernel")]
    NotSymmetric,
}

impl GroundSpace {
    pub fn new(cells: Vec<Cell>) -> Result<Arc<Self>, KernelError> {
        if cells.is_empty() {
            return Err(KernelError::EmptySpace);
        }
        if cells.len() > MAX_CELLS {
            return Err(KernelError::ResourceCap(format!(
                "{} cells exceeds the cap of {}",
                cells.len(),
                MAX_CELLS
            )));
        }
        for (i, c) in cells.iter().enumerate() {
            if !(c.intensity.is_finite() && c.intensity > 0.0) {
                return Err(KernelError::BadIntensity(i, c.intensity));
            }
        }
        Ok(Arc::new(GroundSpace { cells }))
    }

    /// Space with the given intensities and generated ids `c0, c1, …`.
    pub fn with_intensities(intensities: &[f64]) -> Result<Arc<Self>, KernelError> {
        Self::new(
            intensities
                .iter()
                .enumerate()
                .map(|(i, &m)| Cell {
                    id: format!("c{i}"),
                    intensity: m,
                })
                .collect(),
        )
    }

    /// `n` cells of unit intensity.
    pub fn unit(n: usize) -> Arc<Self> {
        Self::with_intensities(&vec![1.0; n]).expect("unit space is valid")
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn intensity(&self, cell: usize) -> f64 {
        self.cells[cell].intensity
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.intensity)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Total mass μ(Z) = Σ μ_i.
    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.intensity).sum()
    }
}

/// A dense kernel of fixed order on a shared ground space.
#[derive(Debug, Clone)]
pub struct Kernel {
    space: Arc<GroundSpace>,
    order: usize,
    values: Vec<f64>,
    is_symmetric: bool,
    vanishes_on_diagonals: bool,
}

/// Flat JSON form: intensities, order, row-major values. Cell ids are not
/// part of the interchange format; loading regenerates `c0, c1, …`.
#[derive(Serialize, Deserialize)]
struct KernelJson {
    space: Vec<f64>,
    order: usize,
    values: Vec<f64>,
}

fn checked_len(n: usize, order: usize) -> Result<usize, KernelError> {
    if order > MAX_ORDER {
        return Err(KernelError::ResourceCap(format!(
            "order {order} exceeds the cap of {MAX_ORDER}"
        )));
    }
    let mut len: usize = 1;
    for _ in 0..order {
        len = len.checked_mul(n).ok_or_else(|| {
            KernelError::ResourceCap(format!("{n}^{order} entries overflow the tensor cap"))
        })?;
        if len > MAX_TENSOR_LEN {
            return Err(KernelError::ResourceCap(format!(
                "{n}^{order} entries exceed the tensor cap of {MAX_TENSOR_LEN}"
            )));
        }
    }
    Ok(len)
}

impl Kernel {
    /// Wraps a row-major value table. Scans the table once to establish the
    /// exact symmetry and diagonal-vanishing flags.
    pub fn new(
        space: Arc<GroundSpace>,
        order: usize,
        values: Vec<f64>,
    ) -> Result<Self, KernelError> {
        let n = space.n_cells();
        let want = checked_len(n, order)?;
        if values.len() != want {
            return Err(KernelError::BadLength {
                got: values.len(),
                want,
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(KernelError::NonFinite(bad));
        }
        let is_symmetric = detect_symmetry(&values, n, order);
        let vanishes_on_diagonals = detect_diagonal_vanishing(&values, n, order);
        Ok(Kernel {
            space,
            order,
            values,
            is_symmetric,
            vanishes_on_diagonals,
        })
    }

    /// Builds a kernel by evaluating `f` on every index tuple.
    pub fn from_fn(
        space: Arc<GroundSpace>,
        order: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self, KernelError> {
        let n = space.n_cells();
        let len = checked_len(n, order)?;
        let mut values = vec![0.0; len];
        let mut idx = vec![0usize; order];
        for (flat, slot) in values.iter_mut().enumerate() {
            unflatten(flat, n, &mut idx);
            *slot = f(&idx);
        }
        Kernel::new(space, order, values)
    }

    /// The zero kernel of the given order.
    pub fn zeros(space: Arc<GroundSpace>, order: usize) -> Result<Self, KernelError> {
        let len = checked_len(space.n_cells(), order)?;
        Kernel::new(space, order, vec![0.0; len])
    }

    pub fn space(&self) -> &Arc<GroundSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn vanishes_on_diagonals(&self) -> bool {
        self.vanishes_on_diagonals
    }

    /// Value at an index tuple; `idx.len()` must equal the order.
    pub fn value(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order, "index arity mismatch");
        self.values[flatten(idx, self.space.n_cells())]
    }

    /// Symmetrization: mean over all argument permutations.
    ///
    /// Each orbit is averaged once and the identical value written to every
    /// position in the orbit, so the result's symmetry flag holds bitwise.
    pub fn symmetrize(&self) -> Kernel {
        let n = self.space.n_cells();
        let q = self.order;
        if q <= 1 || self.is_symmetric {
            return self.clone();
        }
        let mut out = vec![0.0; self.values.len()];
        let mut idx = vec![0usize; q];
        for flat in 0..self.values.len() {
            unflatten(flat, n, &mut idx);
            if idx.windows(2).any(|w| w[0] > w[1]) {
                continue; // not the sorted orbit representative
            }
            let perms = distinct_permutations(&idx);
            let mean =
                perms.iter().map(|p| self.values[flatten(p, n)]).sum::<f64>() / perms.len() as f64;
            for p in &perms {
                out[flatten(p, n)] = mean;
            }
        }
        Kernel {
            space: self.space.clone(),
            order: q,
            values: out,
            is_symmetric: true,
            vanishes_on_diagonals: self.vanishes_on_diagonals,
        }
    }

    /// Weighted inner product ⟨f, g⟩ in `L²(μ^q)`.
    pub fn inner(&self, other: &Kernel) -> Result<f64, KernelError> {
        if self.space != other.space {
            return Err(KernelError::SpaceMismatch);
        }
        if self.order != other.order {
            return Err(KernelError::OrderMismatch(self.order, other.order));
        }
        let mus: Vec<f64> = self.space.intensities().collect();
        Ok(weighted_dot(&self.values, &other.values, &mus, self.order))
    }

    /// Weighted norm ‖f‖ in `L²(μ^q)`.
    pub fn norm(&self) -> f64 {
        self.inner(self)
            .expect("a kernel always matches itself")
            .max(0.0)
            .sqrt()
    }

    /// Contraction `f ⊗_r g` of two symmetric kernels, `0 ≤ r ≤ min(p, q)`.
    ///
    /// Runs as a blocked matrix product over the shared `r` indices
    /// (`out[x,y] = Σ_z f[x,z] · w(z) g[y,z]`), parallelized over the output
    /// rows. The result's flags are re-established exactly; contractions are
    /// generally not symmetric even for symmetric inputs.
    pub fn contract(&self, other: &Kernel, r: usize) -> Result<Kernel, KernelError> {
        if self.space != other.space {
            return Err(KernelError::SpaceMismatch);
        }
        let (p, q) = (self.order, other.order);
        if r > p.min(q) {
            return Err(KernelError::BadContraction { r, p, q });
        }
        if !(self.is_symmetric && other.is_symmetric) {
            return Err(KernelError::NotSymmetric);
        }
        let n = self.space.n_cells();
        let out_order = p + q - 2 * r;
        let out_len = checked_len(n, out_order)?;
        if r == p && r == q {
            // Full contraction of equal orders is the inner product.
            let v = self.inner(other)?;
            return Kernel::new(self.space.clone(), 0, vec![v]);
        }

        let rows = n.pow((p - r) as u32);
        let shared = n.pow(r as u32);
        let cols = n.pow((q - r) as u32);
        debug_assert_eq!(out_len, rows * cols);

        let mus: Vec<f64> = self.space.intensities().collect();
        let w = index_weights(&mus, r);

        // g with shared indices leading and pre-multiplied by the weight:
        // gt[z·cols + y] = w(z) · g[y·shared + z].
        let mut gt = vec![0.0; shared * cols];
        for y in 0..cols {
            for z in 0..shared {
                gt[z * cols + y] = w[z] * other.values[y * shared + z];
            }
        }

        let mut out = vec![0.0; out_len];
        let f = &self.values;
        let work = |x: usize, row: &mut [f64]| {
            for z in 0..shared {
                let a = f[x * shared + z];
                if a != 0.0 {
                    let gz = &gt[z * cols..(z + 1) * cols];
                    for (o, &g) in row.iter_mut().zip(gz) {
                        *o += a * g;
                    }
                }
            }
        };
        if out_len >= 1 << 14 {
            use rayon::prelude::*;
            out.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(x, row)| work(x, row));
        } else {
            for (x, row) in out.chunks_mut(cols).enumerate() {
                work(x, row);
            }
        }
        Kernel::new(self.space.clone(), out_order, out)
    }

    /// Canonical JSON form (`{space, order, values}`).
    pub fn to_json_string(&self) -> String {
        let doc = KernelJson {
            space: self.space.intensities().collect(),
            order: self.order,
            values: self.values.clone(),
        };
        serde_json::to_string(&doc).expect("kernel serialization cannot fail")
    }

    /// Parses the canonical JSON form and re-validates all invariants.
    pub fn from_json_str(s: &str) -> Result<Self, KernelError> {
        let doc: KernelJson =
            serde_json::from_str(s).map_err(|e| KernelError::ResourceCap(format!("bad JSON: {e}")))?;
        let space = GroundSpace::with_intensities(&doc.space)?;
        Kernel::new(space, doc.order, doc.values)
    }

    /// Hex SHA-256 of the canonical JSON form; the first 8 characters label
    /// sample columns in CSV output.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json_string().as_bytes());
        format!("{:x}", h.finalize())
    }
}

/// Outcome of the exact product-identity check for a symmetric pair (f, g).
#[derive(Debug, Clone, Serialize)]
pub struct ContractionIdentityReport {
    pub p: usize,
    pub q: usize,
    /// `(p+q)!·‖sym(f ⊗ g)‖²`.
    pub lhs: f64,
    /// `p!q!·Σ_r C(p,r) C(q,r) ‖f ⊗_r g‖²`.
    pub rhs: f64,
    /// `‖f ⊗_r g‖²` for r = 0, …, min(p, q).
    pub contraction_sq_norms: Vec<f64>,
    /// `p!q!‖f‖²‖g‖²  (+ p!q!⟨f,g⟩²  when p = q)`.
    pub lower_bound: f64,
    /// `|lhs − rhs|` relative to `max(|lhs|, |rhs|, 1e-300)`.
    pub relative_gap: f64,
    pub identity_ok: bool,
    pub lower_bound_ok: bool,
}

/// Evaluates both sides of the product identity and its lower bound.
///
/// Tolerance: the identity is flagged `ok` at relative gap ≤ 1e−10 and the
/// lower bound at slack ≥ −1e−10 relative to the left side.
pub fn contraction_identity_report(
    f: &Kernel,
    g: &Kernel,
) -> Result<ContractionIdentityReport, KernelError> {
    if !(f.is_symmetric() && g.is_symmetric()) {
        return Err(KernelError::NotSymmetric);
    }
    let (p, q) = (f.order(), g.order());
    let tensor = f.contract(g, 0)?;
    let lhs = factorial(p + q) * tensor.symmetrize().norm().powi(2);

    let mut contraction_sq_norms = Vec::with_capacity(p.min(q) + 1);
    let mut rhs = 0.0;
    for r in 0..=p.min(q) {
        let c = f.contract(g, r)?;
        let sq = c.norm().powi(2);
        contraction_sq_norms.push(sq);
        rhs += factorial(p) * factorial(q) * binomial(p, r) * binomial(q, r) * sq;
    }

    let mut lower_bound = factorial(p) * factorial(q) * f.norm().powi(2) * g.norm().powi(2);
    if p == q {
        lower_bound += factorial(p) * factorial(q) * f.inner(g)?.powi(2);
    }

    let scale = lhs.abs().max(rhs.abs()).max(1e-300);
    let relative_gap = (lhs - rhs).abs() / scale;
    Ok(ContractionIdentityReport {
        p,
        q,
        lhs,
        rhs,
        contraction_sq_norms,
        lower_bound,
        identity_ok: relative_gap <= 1e-10,
        lower_bound_ok: lhs - lower_bound >= -1e-10 * scale,
        relative_gap,
    })
}

/// Row-major flat index of a tuple.
pub(crate) fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Inverse of [`flatten`] into a caller-provided buffer.
pub(crate) fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

/// Weights μ_{z₁}⋯μ_{z_r} for every flat r-tuple, in flat order.
fn index_weights(mus: &[f64], r: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for _ in 0..r {
        let mut next = Vec::with_capacity(w.len() * mus.len());
        for &base in &w {
            for &m in mus {
                next.push(base * m);
            }
        }
        w = next;
    }
    w
}

/// Recursive weighted dot product; block recursion keeps the summation
/// shallow so rounding does not accumulate linearly in the tensor size.
fn weighted_dot(a: &[f64], b: &[f64], mus: &[f64], order: usize) -> f64 {
    if order == 0 {
        return a[0] * b[0];
    }
    let stride = a.len() / mus.len();
    let mut acc = 0.0;
    for (i, &mu) in mus.iter().enumerate() {
        let lo = i * stride;
        let hi = lo + stride;
        acc += mu * weighted_dot(&a[lo..hi], &b[lo..hi], mus, order - 1);
    }
    acc
}

/// Exact symmetry detection: invariance under every adjacent transposition
/// (these generate all permutations) with bitwise value comparison.
fn detect_symmetry(values: &[f64], n: usize, order: usize) -> bool {
    if order <= 1 {
        return true;
    }
    let mut idx = vec![0usize; order];
    for k in 0..order - 1 {
        for (flat, &v) in values.iter().enumerate() {
            unflatten(flat, n, &mut idx);
            if idx[k] >= idx[k + 1] {
                continue; // check each unordered pair once, skip fixed points
            }
            idx.swap(k, k + 1);
            let swapped = flatten(&idx, n);
            idx.swap(k, k + 1);
            if values[swapped] != v {
                return false;
            }
        }
    }
    true
}

fn detect_diagonal_vanishing(values: &[f64], n: usize, order: usize) -> bool {
    if order <= 1 {
        return true;
    }
    let mut idx = vec![0usize; order];
    for (flat, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        unflatten(flat, n, &mut idx);
        for a in 0..order {
            for b in a + 1..order {
                if idx[a] == idx[b] {
                    return false;
                }
            }
        }
    }
    true
}

/// All distinct permutations of a sorted tuple.
fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut pool = sorted.to_vec();
    let mut current = Vec::with_capacity(sorted.len());
    fn rec(pool: &mut Vec<usize>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pool.is_empty() {
            out.push(current.clone());
            return;
        }
        let mut last: Option<usize> = None;
        for i in 0..pool.len() {
            if last == Some(pool[i]) {
                continue; // duplicate branch
            }
            last = Some(pool[i]);
            let v = pool.remove(i);
            current.push(v);
            rec(pool, current, out);
            current.pop();
            pool.insert(i, v);
        }
    }
    rec(&mut pool, &mut current, &mut out);
    out
}
