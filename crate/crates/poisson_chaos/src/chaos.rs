//! Chaos calculus over the product-Charlier basis.
//!
//! Every polynomial functional of the discretized Poisson measure expands
//! uniquely as F = Σ_α a_α Ψ_α, where the multi-index α assigns a Charlier
//! degree to each cell and Ψ_α(x) = Π_i C_{α_i}(x_i; μ_i). Terms of total
//! degree k span the grade-k chaos, so the projections J_k, the generator
//! L = −Σ_k k·J_k, the semigroup P_t = Σ_k e^{−kt} J_k, and the carré du
//! champ Γ all act directly on the expansion. Orthogonality,
//! E[Ψ_α Ψ_β] = δ_{αβ} Π_i α_i!·μ_i^{α_i},
//! turns every pair expectation into a finite weighted coefficient sum, and
//! products reduce to one Charlier linearization per cell. Fourth moments
//! therefore need a single product: E[F⁴] is the weighted self-pairing of
//! the element F·F.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::charlier::{self, CharlierError, CharlierTable};
use crate::comb;
use crate::kernel::{GroundSpace, Kernel, KernelError};

/// Slack tolerance for the inequality reports: a check passes when
/// rhs − lhs ≥ −SLACK_TOLERANCE · max(|lhs|, |rhs|).
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChaosError {
    #[error("chaos elements live on different ground spaces")]
    SpaceMismatch,
    #[error("cell {cell} out of range for a space with {n_cells} cells")]
    BadCell { cell: u32, n_cells: usize },
    #[error("cell {cell} would need Charlier degree {needed}, cap is {cap}")]
    DegreeCap {
        cell: u32,
        needed: usize,
        cap: usize,
    },
    #[error("operation needs a homogeneous element of grade >= 1, grades present: {0:?}")]
    NotHomogeneous(Vec<usize>),
    #[error("coefficient for {0:?} is not finite")]
    NonFinite(Vec<(u32, u8)>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Charlier(#[from] CharlierError),
    #[error("bad chaos JSON: {0}")]
    Json(String),
}

/// Sparse assignment of a Charlier degree to each cell.
///
/// Indexes the basis element Ψ_α = Π_i C_{α_i}(x_i; μ_i). Pairs are sorted
/// by cell and zero degrees are never stored, so comparison and hashing are
/// structural.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct MultiIndex(Vec<(u32, u8)>);

impl MultiIndex {
    /// The empty index, i.e. the constant basis element 1.
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// Degree `degree` on one cell, zero elsewhere.
    pub fn single(cell: u32, degree: u8) -> Self {
        if degree == 0 {
            MultiIndex::empty()
        } else {
            MultiIndex(vec![(cell, degree)])
        }
    }

    /// Builds an index from (cell, degree) pairs, merging repeated cells and
    /// dropping zero degrees.
    ///
    /// Panics if a merged degree exceeds `u8::MAX`; the element constructors
    /// enforce the real cap [`charlier::MAX_DEGREE`].
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u8)>) -> Self {
        let mut raw: Vec<(u32, u8)> = pairs.into_iter().filter(|&(_, d)| d > 0).collect();
        raw.sort_unstable_by_key(|&(c, _)| c);
        let mut merged: Vec<(u32, u8)> = Vec::with_capacity(raw.len());
        for (cell, deg) in raw {
            match merged.last_mut() {
                Some((c, d)) if *c == cell => {
                    let sum = *d as u16 + deg as u16;
                    assert!(sum <= u8::MAX as u16, "merged degree overflows");
                    *d = sum as u8;
                }
                _ => merged.push((cell, deg)),
            }
        }
        MultiIndex(merged)
    }

    /// The multiset of a kernel index tuple: (2, 0, 2) becomes {0: 1, 2: 2}.
    pub(crate) fn from_tuple(idx: &[usize]) -> Self {
        MultiIndex::from_pairs(idx.iter().map(|&c| (c as u32, 1u8)))
    }

    /// The stored (cell, degree) pairs, sorted by cell, all degrees nonzero.
    pub fn pairs(&self) -> &[(u32, u8)] {
        &self.0
    }

    /// Sum of all degrees, i.e. the grade of the basis element.
    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|&(_, d)| d as usize).sum()
    }

    /// Degree on one cell (zero when absent).
    pub fn degree_of(&self, cell: u32) -> u8 {
        match self.0.binary_search_by_key(&cell, |&(c, _)| c) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Second moment of the basis element: Π_i α_i!·μ_i^{α_i}.
    fn weight(&self, space: &GroundSpace) -> f64 {
        self.0
            .iter()
            .map(|&(c, d)| comb::factorial(d as usize) * space.intensity(c as usize).powi(d as i32))
            .product()
    }
}

#[derive(Serialize, Deserialize)]
struct ChaosTermJson {
    alpha: Vec<(u32, u8)>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct ChaosJson {
    space: Vec<f64>,
    terms: Vec<ChaosTermJson>,
}

/// A functional of the Poisson measure in chaotic form: a finite coefficient
/// map over the product-Charlier basis.
///
/// Immutable after construction; operations return new elements. Terms are
/// kept in a sorted map so serialization and accumulation order are
/// deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosElement {
    space: Arc<GroundSpace>,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl ChaosElement {
    pub fn zero(space: Arc<GroundSpace>) -> Self {
        ChaosElement {
            space,
            coeffs: BTreeMap::new(),
        }
    }

    /// The deterministic element with value `c`.
    pub fn constant(space: Arc<GroundSpace>, c: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(MultiIndex::empty(), c);
        }
        ChaosElement { space, coeffs }
    }

    /// Builds an element from explicit terms. Repeated indices accumulate,
    /// exact-zero coefficients are dropped.
    pub fn from_terms(
        space: Arc<GroundSpace>,
        terms: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self, ChaosError> {
        let n_cells = space.n_cells();
        let mut coeffs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, c) in terms {
            if !c.is_finite() {
                return Err(ChaosError::NonFinite(alpha.0));
            }
            for &(cell, deg) in alpha.pairs() {
                if cell as usize >= n_cells {
                    return Err(ChaosError::BadCell { cell, n_cells });
                }
                if deg as usize > charlier::MAX_DEGREE {
                    return Err(ChaosError::DegreeCap {
                        cell,
                        needed: deg as usize,
                        cap: charlier::MAX_DEGREE,
                    });
                }
            }
            *coeffs.entry(alpha).or_insert(0.0) += c;
        }
        coeffs.retain(|_, c| *c != 0.0);
        Ok(ChaosElement { space, coeffs })
    }

    /// The multiple integral I_q(f) of a symmetric kernel: the grade-q
    /// element with coefficient (q!/Π_i α_i!)·f(α) on the multiset α of each
    /// q-tuple of cells. Diagonal-free 0/1 multisets reduce to the familiar
    /// coefficient q!·f.
    pub fn from_kernel(f: &Kernel) -> Result<Self, ChaosError> {
        if !f.is_symmetric() {
            return Err(KernelError::NotSymmetric.into());
        }
        let q = f.order();
        if q == 0 {
            return Ok(Self::constant(f.space().clone(), f.values()[0]));
        }
        let n = f.space().n_cells();
        let mut coeffs = BTreeMap::new();
        let mut tuple = vec![0usize; q];
        loop {
            let v = f.value(&tuple);
            if v != 0.0 {
                let alpha = MultiIndex::from_tuple(&tuple);
                let degrees: Vec<u32> = alpha.pairs().iter().map(|&(_, d)| d as u32).collect();
                coeffs.insert(alpha, comb::multinomial(q, &degrees) * v);
            }
            // Advance the non-decreasing tuple odometer.
            let mut pos = q;
            while pos > 0 && tuple[pos - 1] == n - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            let next = tuple[pos - 1] + 1;
            for slot in tuple.iter_mut().skip(pos - 1) {
                *slot = next;
            }
        }
        Ok(ChaosElement {
            space: f.space().clone(),
            coeffs,
        })
    }

    /// The symmetric kernel of the grade-k part, inverting
    /// [`ChaosElement::from_kernel`]: f(tuple) = a_α·(Π_i α_i!)/k! where α is
    /// the multiset of the tuple.
    pub fn extract_kernel(&self, k: usize) -> Result<Kernel, ChaosError> {
        let grade: HashMap<&MultiIndex, f64> = self
            .coeffs
            .iter()
            .filter(|(a, _)| a.total_degree() == k)
            .map(|(a, &c)| (a, c))
            .collect();
        let k_fact = comb::factorial(k);
        Ok(Kernel::from_fn(self.space.clone(), k, |idx| {
            let alpha = MultiIndex::from_tuple(idx);
            match grade.get(&alpha) {
                Some(&c) => {
                    let count_fact: f64 = alpha
                        .pairs()
                        .iter()
                        .map(|&(_, d)| comb::factorial(d as usize))
                        .product();
                    c * count_fact / k_fact
                }
                None => 0.0,
            }
        })?)
    }

    pub fn space(&self) -> &Arc<GroundSpace> {
        &self.space
    }

    /// Stored terms in deterministic (index-sorted) order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of one basis element (zero when absent).
    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    /// Largest grade with a nonzero term (zero for the zero element).
    pub fn max_grade(&self) -> usize {
        self.coeffs
            .keys()
            .map(MultiIndex::total_degree)
            .max()
            .unwrap_or(0)
    }

    /// Sorted list of grades with nonzero terms.
    pub fn grades(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.coeffs.keys().map(MultiIndex::total_degree).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Some(k) when every stored term has grade k; None for the zero
    /// element or for mixed grades.
    pub fn homogeneous_grade(&self) -> Option<usize> {
        match self.grades().as_slice() {
            [k] => Some(*k),
            _ => None,
        }
    }

    pub(crate) fn require_homogeneous(&self) -> Result<usize, ChaosError> {
        match self.homogeneous_grade() {
            Some(k) if k >= 1 => Ok(k),
            _ => Err(ChaosError::NotHomogeneous(self.grades())),
        }
    }

    fn check_space(&self, other: &Self) -> Result<(), ChaosError> {
        if self.space != other.space {
            return Err(ChaosError::SpaceMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, ChaosError> {
        self.check_space(other)?;
        let mut coeffs = self.coeffs.clone();
        for (alpha, &c) in &other.coeffs {
            *coeffs.entry(alpha.clone()).or_insert(0.0) += c;
        }
        coeffs.retain(|_, c| *c != 0.0);
        Ok(ChaosElement {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ChaosError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        for v in coeffs.values_mut() {
            *v *= c;
        }
        coeffs.retain(|_, v| *v != 0.0);
        ChaosElement {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// F − E[F].
    pub fn centered(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.remove(&MultiIndex::empty());
        ChaosElement {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// Grade projection J_k: keeps the terms of total degree k.
    pub fn project(&self, k: usize) -> Self {
        ChaosElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| a.total_degree() == k)
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
        }
    }

    /// E[F]: the coefficient of the empty index.
    pub fn expectation(&self) -> f64 {
        self.coefficient(&MultiIndex::empty())
    }

    /// E[F·G] without forming the product, by orthogonality:
    /// Σ_α a_α b_α Π_i α_i!·μ_i^{α_i}.
    pub fn expectation_of_product(&self, other: &Self) -> Result<f64, ChaosError> {
        self.check_space(other)?;
        let (small, big) = if self.coeffs.len() <= other.coeffs.len() {
            (&self.coeffs, &other.coeffs)
        } else {
            (&other.coeffs, &self.coeffs)
        };
        Ok(small
            .iter()
            .filter_map(|(a, &c)| big.get(a).map(|&d| c * d * a.weight(&self.space)))
            .sum())
    }

    /// Cov(F, G).
    pub fn covariance(&self, other: &Self) -> Result<f64, ChaosError> {
        Ok(self.expectation_of_product(other)? - self.expectation() * other.expectation())
    }

    pub fn variance(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(a, _)| !a.is_empty())
            .map(|(a, &c)| c * c * a.weight(&self.space))
            .sum()
    }

    /// The generator: LF = −Σ_k k·J_k(F).
    pub fn apply_generator(&self) -> Self {
        ChaosElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| !a.is_empty())
                .map(|(a, &c)| (a.clone(), -(a.total_degree() as f64) * c))
                .collect(),
        }
    }

    /// The semigroup P_t F = E[F] + Σ_k e^{−kt} J_k(F) for t ≥ 0.
    pub fn semigroup(&self, t: f64) -> Self {
        assert!(t >= 0.0, "semigroup time must be nonnegative");
        ChaosElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, &c)| (a.clone(), (-(a.total_degree() as f64) * t).exp() * c))
                .collect(),
        }
    }

    /// Exact product F·G via per-cell Charlier linearization.
    ///
    /// Cells appearing in only one factor pass through; cells shared by both
    /// expand through C_m·C_n = Σ_k w_k C_k. Errors when a shared cell would
    /// need a degree beyond [`charlier::MAX_DEGREE`].
    pub fn multiply(&self, other: &Self) -> Result<Self, ChaosError> {
        self.combine(other, |_, _, _| 1.0)
    }

    /// The carré du champ Γ(F, G) = ½(L(FG) − F·LG − G·LF), computed in one
    /// expansion pass: a product term of grade g coming from grades (a, b)
    /// enters with weight (a + b − g)/2.
    pub fn gamma(&self, other: &Self) -> Result<Self, ChaosError> {
        self.combine(other, |a, b, g| 0.5 * ((a + b) as f64 - g as f64))
    }

    fn combine(
        &self,
        other: &Self,
        weight: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self, ChaosError> {
        self.check_space(other)?;
        let mut deg_self: HashMap<u32, u8> = HashMap::new();
        for alpha in self.coeffs.keys() {
            for &(c, d) in alpha.pairs() {
                let e = deg_self.entry(c).or_insert(0);
                *e = (*e).max(d);
            }
        }
        let mut deg_other: HashMap<u32, u8> = HashMap::new();
        for beta in other.coeffs.keys() {
            for &(c, d) in beta.pairs() {
                let e = deg_other.entry(c).or_insert(0);
                *e = (*e).max(d);
            }
        }
        let mut tables: HashMap<u32, CharlierTable> = HashMap::new();
        for (&cell, &da) in &deg_self {
            if let Some(&db) = deg_other.get(&cell) {
                let needed = da as usize + db as usize;
                if needed > charlier::MAX_DEGREE {
                    return Err(ChaosError::DegreeCap {
                        cell,
                        needed,
                        cap: charlier::MAX_DEGREE,
                    });
                }
                tables.insert(
                    cell,
                    CharlierTable::new(self.space.intensity(cell as usize), needed)?,
                );
            }
        }

        let mut out: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        let mut fixed: Vec<(u32, u8)> = Vec::new();
        let mut shared: Vec<(u32, u8, u8)> = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut chosen: Vec<(u32, u8)> = Vec::new();
        for (alpha, &a) in &self.coeffs {
            let ga = alpha.total_degree();
            for (beta, &b) in &other.coeffs {
                let ab = a * b;
                if ab == 0.0 {
                    continue;
                }
                let gb = beta.total_degree();
                fixed.clear();
                shared.clear();
                let (pa, pb) = (alpha.pairs(), beta.pairs());
                let (mut i, mut j) = (0, 0);
                while i < pa.len() && j < pb.len() {
                    match pa[i].0.cmp(&pb[j].0) {
                        std::cmp::Ordering::Less => {
                            fixed.push(pa[i]);
                            i += 1;
                        }
                        std::cmp::Ordering::Greater => {
                            fixed.push(pb[j]);
                            j += 1;
                        }
                        std::cmp::Ordering::Equal => {
                            shared.push((pa[i].0, pa[i].1, pb[j].1));
                            i += 1;
                            j += 1;
                        }
                    }
                }
                fixed.extend_from_slice(&pa[i..]);
                fixed.extend_from_slice(&pb[j..]);

                rows.clear();
                for &(cell, m, n) in &shared {
                    let table = &tables[&cell];
                    rows.push(
                        table
                            .linearize(m as usize, n as usize)
                            .expect("table sized for every shared pair"),
                    );
                }
                chosen.clear();
                expand_product(
                    &shared, &rows, 0, ab, &fixed, ga, gb, &weight, &mut chosen, &mut out,
                );
            }
        }
        out.retain(|_, c| *c != 0.0);
        Ok(ChaosElement {
            space: self.space.clone(),
            coeffs: out,
        })
    }

    /// E[F⁴], exact: the weighted self-pairing of F·F.
    pub fn moment4(&self) -> Result<f64, ChaosError> {
        let sq = self.multiply(self)?;
        sq.expectation_of_product(&sq)
    }

    /// Fourth cumulant κ₄(F) = E[(F−EF)⁴] − 3·Var(F)². The mean is removed
    /// first, so constants contribute nothing.
    pub fn fourth_cumulant(&self) -> Result<f64, ChaosError> {
        let c = self.centered();
        let var = c.variance();
        Ok(c.moment4()? - 3.0 * var * var)
    }

    /// The quartic evolution rate of a homogeneous grade-q element:
    /// −4q·E[F⁴] + 12·E[F²·Γ(F,F)], the limit of t⁻¹·E[(P_t-evolved F − F)⁴],
    /// always nonnegative.
    pub fn rho(&self) -> Result<f64, ChaosError> {
        let q = self.require_homogeneous()?;
        let sq = self.multiply(self)?;
        let g = self.gamma(self)?;
        Ok(-4.0 * q as f64 * sq.expectation_of_product(&sq)?
            + 12.0 * sq.expectation_of_product(&g)?)
    }

    /// Evaluates the functional at a vector of per-cell counts.
    ///
    /// Accuracy follows [`charlier::charlier_value`]: reliable through
    /// per-cell degree 8, which covers every sampled family in this crate.
    pub fn evaluate(&self, counts: &[u64]) -> f64 {
        assert_eq!(
            counts.len(),
            self.space.n_cells(),
            "sample has {} cells, space has {}",
            counts.len(),
            self.space.n_cells()
        );
        self.coeffs
            .iter()
            .map(|(alpha, &c)| {
                c * alpha
                    .pairs()
                    .iter()
                    .map(|&(cell, d)| {
                        charlier::charlier_value(
                            d as usize,
                            counts[cell as usize] as f64,
                            self.space.intensity(cell as usize),
                        )
                    })
                    .product::<f64>()
            })
            .sum()
    }

    /// Canonical JSON form: {space, terms: [{alpha: [[cell, deg], ..], coeff}]}.
    pub fn to_json_string(&self) -> String {
        let doc = ChaosJson {
            space: self.space.intensities().collect(),
            terms: self
                .coeffs
                .iter()
                .map(|(a, &c)| ChaosTermJson {
                    alpha: a.pairs().to_vec(),
                    coeff: c,
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("chaos JSON serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self, ChaosError> {
        let doc: ChaosJson = serde_json::from_str(s).map_err(|e| ChaosError::Json(e.to_string()))?;
        let space = GroundSpace::with_intensities(&doc.space)?;
        ChaosElement::from_terms(
            space,
            doc.terms
                .into_iter()
                .map(|t| (MultiIndex::from_pairs(t.alpha), t.coeff)),
        )
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json_string().as_bytes());
        format!("{:x}", h.finalize())
    }
}

#[allow(clippy::too_many_arguments)]
fn expand_product(
    shared: &[(u32, u8, u8)],
    rows: &[Vec<f64>],
    level: usize,
    coeff: f64,
    fixed: &[(u32, u8)],
    ga: usize,
    gb: usize,
    weight: &impl Fn(usize, usize, usize) -> f64,
    chosen: &mut Vec<(u32, u8)>,
    out: &mut BTreeMap<MultiIndex, f64>,
) {
    if level == shared.len() {
        let mut pairs: Vec<(u32, u8)> = Vec::with_capacity(fixed.len() + chosen.len());
        pairs.extend_from_slice(fixed);
        pairs.extend_from_slice(chosen);
        pairs.sort_unstable_by_key(|&(c, _)| c);
        let grade: usize = pairs.iter().map(|&(_, d)| d as usize).sum();
        let w = weight(ga, gb, grade);
        if w != 0.0 {
            *out.entry(MultiIndex(pairs)).or_insert(0.0) += coeff * w;
        }
        return;
    }
    let cell = shared[level].0;
    for (k, &c) in rows[level].iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if k > 0 {
            chosen.push((cell, k as u8));
        }
        expand_product(
            shared,
            rows,
            level + 1,
            coeff * c,
            fixed,
            ga,
            gb,
            weight,
            chosen,
            out,
        );
        if k > 0 {
            chosen.pop();
        }
    }
}

/// One verified inequality lhs ≤ rhs. `ok` allows slack down to
/// −[`SLACK_TOLERANCE`]·scale, with scale the larger side in magnitude.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub scale: f64,
    pub ok: bool,
}

fn inequality(name: &'static str, lhs: f64, rhs: f64) -> InequalityCheck {
    let scale = lhs.abs().max(rhs.abs());
    let slack = rhs - lhs;
    InequalityCheck {
        name,
        lhs,
        rhs,
        slack,
        scale,
        ok: slack >= -SLACK_TOLERANCE * scale,
    }
}

/// Exact verification of the single-element variance and fourth-moment
/// inequalities for a homogeneous element.
#[derive(Clone, Debug, Serialize)]
pub struct MomentInequalityReport {
    pub grade: usize,
    pub variance: f64,
    pub fourth_moment: f64,
    pub fourth_cumulant: f64,
    pub gamma_variance: f64,
    pub rho: f64,
    pub checks: Vec<InequalityCheck>,
}

impl MomentInequalityReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Exact verification of the pair inequalities for two homogeneous elements
/// on the same space.
#[derive(Clone, Debug, Serialize)]
pub struct PairInequalityReport {
    pub grade_low: usize,
    pub grade_high: usize,
    pub checks: Vec<InequalityCheck>,
}

impl PairInequalityReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Exact comparison of a chaos vector's fourth moment against the Gaussian
/// vector with the same covariance.
#[derive(Clone, Debug, Serialize)]
pub struct VectorFourthMomentReport {
    pub covariance: Vec<Vec<f64>>,
    pub vector_fourth_moment: f64,
    pub gaussian_fourth_moment: f64,
    pub checks: Vec<InequalityCheck>,
}

impl VectorFourthMomentReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Verifies, exactly, the variance and fourth-moment inequalities obeyed by
/// a homogeneous grade-p element F:
///
/// - Var Γ(F,F) ≤ ((2p−1)²/4)·κ₄
/// - 0 ≤ (3/p)·E[F²Γ(F,F)] − E[F⁴] ≤ ((4p−3)/(2p))·κ₄
/// - p!² Σ_{r=1}^{p−1} C(p,r)²·‖f ⊗_r f‖² ≤ κ₄ for the extracted kernel f
/// - Σ_{k=1}^{2p−1} Var J_k(F²) ≤ κ₄
/// - 0 ≤ κ₄, p·κ₄ ≤ 6·Var Γ(F,F), and 0 ≤ rho(F)
pub fn verify_moment_inequalities(f: &ChaosElement) -> Result<MomentInequalityReport, ChaosError> {
    let p = f.require_homogeneous()?;
    let pf = p as f64;
    let sq = f.multiply(f)?;
    let g = f.gamma(f)?;
    let variance = f.variance();
    let m4 = sq.expectation_of_product(&sq)?;
    let kappa = m4 - 3.0 * variance * variance;
    let gamma_variance = g.variance();
    let e_sq_gamma = sq.expectation_of_product(&g)?;
    let rho = -4.0 * pf * m4 + 12.0 * e_sq_gamma;
    let sandwich = 3.0 / pf * e_sq_gamma - m4;

    let kernel = f.extract_kernel(p)?;
    let mut contraction_sum = 0.0;
    for r in 1..p {
        let c = comb::binomial(p, r);
        let norm = kernel.contract(&kernel, r)?.norm();
        contraction_sum += c * c * norm * norm;
    }
    contraction_sum *= comb::factorial(p) * comb::factorial(p);

    let low_grade_variance: f64 = (1..2 * p).map(|k| sq.project(k).variance()).sum();

    let checks = vec![
        inequality(
            "gamma variance vs fourth cumulant",
            gamma_variance,
            (2.0 * pf - 1.0) * (2.0 * pf - 1.0) / 4.0 * kappa,
        ),
        inequality("moment sandwich, lower side", 0.0, sandwich),
        inequality(
            "moment sandwich, upper side",
            sandwich,
            (4.0 * pf - 3.0) / (2.0 * pf) * kappa,
        ),
        inequality(
            "contraction sum vs fourth cumulant",
            contraction_sum,
            kappa,
        ),
        inequality(
            "low grade variance vs fourth cumulant",
            low_grade_variance,
            kappa,
        ),
        inequality("nonnegative fourth cumulant", 0.0, kappa),
        inequality(
            "fourth cumulant vs gamma variance",
            pf * kappa,
            6.0 * gamma_variance,
        ),
        inequality("nonnegative quartic rate", 0.0, rho),
    ];
    Ok(MomentInequalityReport {
        grade: p,
        variance,
        fourth_moment: m4,
        fourth_cumulant: kappa,
        gamma_variance,
        rho,
        checks,
    })
}

/// Verifies, exactly, the pair inequalities for homogeneous F (grade p) and
/// G (grade q) on one space:
///
/// - Var Γ(F,G) ≤ ((p+q−1)²/4)·(E[F²G²] − 2·E[FG]² − Var F·Var G)
/// - p < q: Cov(F²,G²) ≤ √E[F⁴]·√κ₄(G), with F the lower grade
/// - p = q: Cov(F²,G²) − 2·E[FG]² ≤ 2·√(κ₄(F)·κ₄(G))
pub fn verify_pair_inequalities(
    f: &ChaosElement,
    g: &ChaosElement,
) -> Result<PairInequalityReport, ChaosError> {
    let p = f.require_homogeneous()?;
    let q = g.require_homogeneous()?;
    let (low, high) = if p <= q { (f, g) } else { (g, f) };
    let (p, q) = (p.min(q), p.max(q));
    let (pf, qf) = (p as f64, q as f64);

    let sq_low = low.multiply(low)?;
    let sq_high = high.multiply(high)?;
    let gamma = low.gamma(high)?;
    let e_cross = low.expectation_of_product(high)?;
    let e_sq_sq = sq_low.expectation_of_product(&sq_high)?;
    let cov_sq = e_sq_sq - sq_low.expectation() * sq_high.expectation();
    let var_low = low.variance();
    let var_high = high.variance();
    let m4_low = sq_low.expectation_of_product(&sq_low)?;
    let m4_high = sq_high.expectation_of_product(&sq_high)?;
    let kappa_low = m4_low - 3.0 * var_low * var_low;
    let kappa_high = m4_high - 3.0 * var_high * var_high;

    let mut checks = vec![inequality(
        "gamma covariance variance bound",
        gamma.variance(),
        (pf + qf - 1.0) * (pf + qf - 1.0) / 4.0
            * (e_sq_sq - 2.0 * e_cross * e_cross - var_low * var_high),
    )];
    if p < q {
        checks.push(inequality(
            "square covariance, distinct grades",
            cov_sq,
            m4_low.sqrt() * kappa_high.max(0.0).sqrt(),
        ));
    } else {
        checks.push(inequality(
            "square covariance, equal grades",
            cov_sq - 2.0 * e_cross * e_cross,
            2.0 * (kappa_low.max(0.0) * kappa_high.max(0.0)).sqrt(),
        ));
    }
    Ok(PairInequalityReport {
        grade_low: p,
        grade_high: q,
        checks,
    })
}

/// Compares E[‖F‖⁴] for a vector of homogeneous elements against the
/// Gaussian vector N with the same covariance Σ:
///
/// - E[‖N‖⁴] = Σ_{ij}(Σ_ii·Σ_jj + 2·Σ_ij²) ≤ E[‖F‖⁴]
/// - E[‖F‖⁴] − E[‖N‖⁴] ≤ 2·(Σ_i √κ₄(F_i))² + 2·(Σ_{i<d} √E[F_i⁴])·(Σ_{j≥2} √κ₄(F_j)),
///   with components taken in increasing grade order and the cross term
///   dropped when all grades coincide.
pub fn verify_vector_fourth_moment(
    components: &[ChaosElement],
) -> Result<VectorFourthMomentReport, ChaosError> {
    let d = components.len();
    if d == 0 {
        return Err(ChaosError::NotHomogeneous(Vec::new()));
    }
    let mut order: Vec<usize> = (0..d).collect();
    let mut grades = vec![0usize; d];
    for (i, f) in components.iter().enumerate() {
        components[0].check_space(f)?;
        grades[i] = f.require_homogeneous()?;
    }
    order.sort_by_key(|&i| grades[i]);
    let sorted: Vec<&ChaosElement> = order.iter().map(|&i| &components[i]).collect();
    let same_grade = grades.iter().all(|&g| g == grades[0]);

    let squares: Vec<ChaosElement> = sorted
        .iter()
        .map(|f| f.multiply(f))
        .collect::<Result<_, _>>()?;
    let mut covariance = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            covariance[i][j] = sorted[i].expectation_of_product(sorted[j])?;
        }
    }
    let mut vector_m4 = 0.0;
    let mut gaussian_m4 = 0.0;
    for i in 0..d {
        for j in 0..d {
            vector_m4 += squares[i].expectation_of_product(&squares[j])?;
            gaussian_m4 += covariance[i][i] * covariance[j][j]
                + 2.0 * covariance[i][j] * covariance[i][j];
        }
    }

    let m4: Vec<f64> = squares
        .iter()
        .map(|s| s.expectation_of_product(s))
        .collect::<Result<_, _>>()?;
    let kappa: Vec<f64> = (0..d)
        .map(|i| m4[i] - 3.0 * covariance[i][i] * covariance[i][i])
        .collect();
    let sqrt_kappa_sum: f64 = kappa.iter().map(|k| k.max(0.0).sqrt()).sum();
    let mut gap_bound = 2.0 * sqrt_kappa_sum * sqrt_kappa_sum;
    if !same_grade {
        let cross_m4: f64 = m4[..d - 1].iter().map(|m| m.sqrt()).sum();
        let cross_kappa: f64 = kappa[1..].iter().map(|k| k.max(0.0).sqrt()).sum();
        gap_bound += 2.0 * cross_m4 * cross_kappa;
    }

    let checks = vec![
        inequality("gaussian fourth moment dominated", gaussian_m4, vector_m4),
        inequality(
            "vector fourth moment gap bound",
            vector_m4 - gaussian_m4,
            gap_bound,
        ),
    ];
    Ok(VectorFourthMomentReport {
        covariance,
        vector_fourth_moment: vector_m4,
        gaussian_fourth_moment: gaussian_m4,
        checks,
    })
}
