//! Counter-based random streams with explicit (purpose, replication, cell)
//! splitting.
//!
//! All sampling in this crate goes through [`stream`]. The generator is the
//! ChaCha8 stream cipher keyed by the user seed; the cipher's 64-bit stream
//! counter is carved into three fields,
//!
//! ```text
//!   bits 56..64   purpose   (which kind of draw)
//!   bits 24..56   replication index
//!   bits  0..24   cell index
//! ```
//!
//! so every (replication, cell) pair owns a private stream. Parallel and
//! serial execution therefore produce bit-identical output: no draw ever
//! depends on scheduling order, only on its coordinates.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream even at
/// equal (replication, cell) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Base Poisson counts of the measure itself.
    Base = 0,
    /// Binomial retention draws of a thinning pair.
    Retain = 1,
    /// Fresh Poisson increments of a thinning pair.
    Fresh = 2,
    /// Gaussian reference samples.
    Gaussian = 3,
    /// Non-Poisson homogeneous-sum drivers.
    Driver = 4,
    /// Down-sampling when comparing sample sets of unequal size.
    Resample = 5,
    /// Bootstrap resampling for standard errors.
    Bootstrap = 6,
    /// Randomized sweep case generation.
    Sweep = 7,
}

const REP_BITS: u64 = 32;
const CELL_BITS: u64 = 24;

/// Largest replication index addressable by a stream.
pub const MAX_REPLICATION: u64 = (1 << REP_BITS) - 1;
/// Largest cell index addressable by a stream.
pub const MAX_CELL: u64 = (1 << CELL_BITS) - 1;

/// A dedicated generator for one (seed, purpose, replication, cell) tuple.
///
/// # Panics
///
/// Panics if `replication` or `cell` exceed their field widths; resource caps
/// elsewhere keep well inside them.
pub fn stream(seed: u64, purpose: StreamPurpose, replication: u64, cell: u64) -> ChaCha8Rng {
    assert!(replication <= MAX_REPLICATION, "replication index too large");
    assert!(cell <= MAX_CELL, "cell index too large");
    let id = ((purpose as u64) << (REP_BITS + CELL_BITS)) | (replication << CELL_BITS) | cell;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
