//! Exact chaos calculus and quantitative fourth moment theorems on finite
//! Poisson spaces.
//!
//! A Poisson random measure `η` lives on a finite atomic ground space: `n`
//! cells with strictly positive intensities `μ_i`, with independent counts
//! `η_i ~ Poisson(μ_i)`. On that space the crate provides, side by side,
//!
//! * an **exact layer**: symmetric kernels in `L²(μ^q)` with contractions
//!   ([`kernel`]), Wiener-Itô chaos expansions realized through per-cell
//!   Charlier polynomials with exact products, Ornstein-Uhlenbeck generator,
//!   semigroup, and carré du champ ([`chaos`], [`charlier`]),
//! * a **simulation layer**: deterministic, stream-split sampling of the
//!   measure, of `e^{-t}`-thinning exchangeable pairs, and of homogeneous
//!   sums under interchangeable drivers ([`sim`], [`rng`]),
//! * a **bound layer**: closed-form Wasserstein and smooth-distance constants
//!   of the fourth-moment type, univariate and multivariate, plus the
//!   Stein/exchangeable-pair plug-in forms they descend from ([`bounds`]),
//! * a **statistics layer**: empirical 1-d Wasserstein distance, smooth
//!   test-function distances, and cumulant estimators with delta-method
//!   standard errors ([`stats`]),
//! * an **experiment layer**: reproducible end-to-end studies that put the
//!   exact values, the Monte Carlo estimates, and the bounds on one row and
//!   render a verdict ([`experiment`]).
//!
//! The crate is example-first. Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example kernel_contractions   # contraction algebra + product identity
//! cargo run --example chaos_moments         # chaos elements, Γ, fourth cumulants
//! cargo run --example thinning_pairs        # exchangeable pairs, Mehler checks, ρ limits
//! cargo run --example fourth_moment_bounds  # bound constants, plug-in identities
//! cargo run --example univariate_clt        # empirical W₁ against the σ·b₁(q)·√κ₄ bound
//! cargo run --example multivariate_clt      # d=3 mixed-order vector, smooth distances
//! cargo run --example transfer_principle    # κ₄ → 0 forces contraction norms → 0
//! cargo run --example universality          # driver exchange on homogeneous sums
//! ```
//!
//! A thin binary (`poisson-chaos`) exposes the same capabilities as
//! subcommands (`contract`, `chaos`, `verify`, `simulate`, `experiment`,
//! `report`) for scripted runs; see the crate README.
//!
//! Determinism contract: every stochastic routine takes an explicit `u64`
//! seed and draws from counter-based streams split per (purpose,
//! replication, cell), so results are bit-identical across runs and across
//! thread counts.

pub mod bounds;
pub mod charlier;
pub mod chaos;
pub mod experiment;
pub mod kernel;
pub mod rng;
pub mod sim;
pub mod stats;

pub(crate) mod comb;

pub use chaos::{ChaosElement, MultiIndex};
pub use kernel::{GroundSpace, Kernel};
pub use stats::SampleSet;
