//! Reproducible end-to-end studies combining the exact calculus, the
//! simulators, the bound evaluators, and the estimators into pass/fail
//! reports.
//!
//! An [`ExperimentSpec`] names one of six studies, a seed, and a grid of
//! problem sizes; [`run`] validates it, dispatches to the matching runner,
//! and returns an [`ExperimentReport`] whose rows carry exact quantities,
//! Monte Carlo estimates with standard errors, bound values, and boolean
//! verdicts. Reports serialize to JSON and to a long-format CSV, both
//! deterministic for a fixed spec.

mod families;
mod report;
mod runners;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::chaos::ChaosError;
use crate::kernel::KernelError;
use crate::sim::{Driver, SimError};
use crate::stats::StatsError;

pub use families::{kernel_family_blocks, kernel_family_blocks_weighted, kernel_family_spread};
pub use report::{Estimate, ExperimentReport, ReportRow};
pub use runners::{
    run_lemma_sweep, run_multivariate_pt, run_pair_limits, run_transfer, run_univariate_fmt,
    run_universality,
};

/// Version of the [`ExperimentSpec`] JSON schema accepted by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Largest cell count allowed for order-one families.
pub const MAX_CELLS_ORDER_ONE: usize = 4096;
/// Largest cell count allowed once kernels have order two or more.
pub const MAX_CELLS_HIGHER_ORDER: usize = 64;
/// Largest per-point Monte Carlo sample count.
pub const MAX_SAMPLES: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The spec failed validation; maps to the configuration exit code.
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn config(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

/// The six studies the toolkit ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Univariate fourth moment theorem on the order-one spread family.
    UnivariateFmt,
    /// Multivariate Peccati-Tudor study on a three-coordinate vector.
    MultivariatePt,
    /// Exact transfer principle plus its Gaussian-driver shadow.
    Transfer,
    /// Driver invariance of the block family, with a failure case.
    Universality,
    /// Randomized verification sweep of the moment inequalities.
    LemmaSweep,
    /// Thinning-pair limits for the one-cell linear element.
    PairLimits,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::UnivariateFmt => "univariate_fmt",
            ExperimentKind::MultivariatePt => "multivariate_pt",
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Universality => "universality",
            ExperimentKind::LemmaSweep => "lemma_sweep",
            ExperimentKind::PairLimits => "pair_limits",
        }
    }

    pub fn parse(name: &str) -> Option<ExperimentKind> {
        ExperimentKind::all().into_iter().find(|k| k.name() == name)
    }

    pub fn all() -> [ExperimentKind; 6] {
        [
            ExperimentKind::UnivariateFmt,
            ExperimentKind::MultivariatePt,
            ExperimentKind::Transfer,
            ExperimentKind::Universality,
            ExperimentKind::LemmaSweep,
            ExperimentKind::PairLimits,
        ]
    }
}

fn default_samples() -> usize {
    100_000
}

fn default_outer() -> usize {
    200
}

fn default_inner() -> usize {
    500
}

fn default_intensity() -> f64 {
    1.0
}

fn default_cases() -> usize {
    500
}

/// Declarative description of one study.
///
/// Unknown JSON keys are rejected, and [`ExperimentSpec::validate`] enforces
/// the schema version and the resource caps before anything runs. Fields a
/// given kind does not use are ignored by its runner but still validated
/// when present.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Family sizes: cell counts for order-one studies, block counts for
    /// order-two studies. An empty grid yields an empty passing report.
    #[serde(default)]
    pub grid: Vec<usize>,
    /// Monte Carlo replications per grid point.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Outer replications for nested conditional estimates.
    #[serde(default = "default_outer")]
    pub outer: usize,
    /// Inner replications for nested conditional estimates.
    #[serde(default = "default_inner")]
    pub inner: usize,
    /// Shared cell intensity of the family's ground space.
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    /// Thinning times for the limit extrapolations, strictly decreasing.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Driver names for the universality study; empty means all four.
    #[serde(default)]
    pub drivers: Vec<String>,
    /// Randomized case count for the lemma sweep.
    #[serde(default = "default_cases")]
    pub cases: usize,
}

impl ExperimentSpec {
    /// The shipped default configuration of a study; every acceptance-grade
    /// verdict refers to these values.
    pub fn default_for(kind: ExperimentKind) -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            schema: SCHEMA_VERSION,
            kind,
            seed: 0,
            grid: Vec::new(),
            samples: default_samples(),
            outer: default_outer(),
            inner: default_inner(),
            intensity: default_intensity(),
            t_grid: Vec::new(),
            drivers: Vec::new(),
            cases: default_cases(),
        };
        match kind {
            ExperimentKind::UnivariateFmt => {
                spec.grid = vec![10, 100, 1000];
            }
            ExperimentKind::MultivariatePt => {
                spec.grid = vec![4];
            }
            ExperimentKind::Transfer => {
                spec.grid = vec![4, 8, 16, 32];
            }
            ExperimentKind::Universality => {
                spec.grid = vec![4, 8, 16, 32];
                spec.samples = 100_000;
                spec.intensity = 4.0;
            }
            ExperimentKind::LemmaSweep => {}
            ExperimentKind::PairLimits => {
                spec.intensity = 4.0;
                spec.t_grid = vec![0.1, 0.05, 0.025];
                spec.samples = 50_000;
            }
        }
        spec
    }

    /// Parses a spec from JSON, rejecting unknown keys.
    pub fn from_json_str(s: &str) -> Result<ExperimentSpec, ExperimentError> {
        serde_json::from_str(s).map_err(|e| config(format!("bad spec JSON: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    /// Hex digest of the canonical JSON form; embedded in every output so a
    /// report names the configuration that produced it.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("specs serialize");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let bytes = hasher.finalize();
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Drivers requested for the universality study, defaulting to all four.
    pub fn parsed_drivers(&self) -> Result<Vec<Driver>, ExperimentError> {
        if self.drivers.is_empty() {
            return Ok(vec![
                Driver::Poisson,
                Driver::Gaussian,
                Driver::Rademacher,
                Driver::CenteredUniform,
            ]);
        }
        self.drivers
            .iter()
            .map(|name| {
                Driver::parse(name)
                    .ok_or_else(|| config(format!("unknown driver {name:?}")))
            })
            .collect()
    }

    /// Checks schema version, parameter ranges, and the resource caps.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.schema != SCHEMA_VERSION {
            return Err(config(format!(
                "schema version {} not supported, this build expects {}",
                self.schema, SCHEMA_VERSION
            )));
        }
        if !(self.intensity > 0.0) || !self.intensity.is_finite() || self.intensity > 1e6 {
            return Err(config(format!(
                "intensity must lie in (0, 1e6], got {}",
                self.intensity
            )));
        }
        if self.samples < 16 || self.samples > MAX_SAMPLES {
            return Err(config(format!(
                "samples must lie in [16, {MAX_SAMPLES}], got {}",
                self.samples
            )));
        }
        if self.outer < 2 || self.outer > 10_000 {
            return Err(config(format!(
                "outer replications must lie in [2, 10000], got {}",
                self.outer
            )));
        }
        if self.inner < 2 || self.inner > 100_000 {
            return Err(config(format!(
                "inner replications must lie in [2, 100000], got {}",
                self.inner
            )));
        }
        if self.cases > 100_000 {
            return Err(config(format!(
                "case count {} exceeds the cap of 100000",
                self.cases
            )));
        }
        let order_one = matches!(self.kind, ExperimentKind::UnivariateFmt);
        for &size in &self.grid {
            if size == 0 {
                return Err(config("grid sizes must be positive"));
            }
            if order_one && size > MAX_CELLS_ORDER_ONE {
                return Err(config(format!(
                    "grid size {size} exceeds the order-one cap of {MAX_CELLS_ORDER_ONE} cells"
                )));
            }
            if !order_one && 2 * size > MAX_CELLS_HIGHER_ORDER {
                return Err(config(format!(
                    "{size} blocks need {} cells, over the cap of {MAX_CELLS_HIGHER_ORDER} \
                     for higher-order kernels",
                    2 * size
                )));
            }
        }
        if self.kind == ExperimentKind::MultivariatePt {
            if let Some(&b) = self.grid.iter().find(|&&b| b % 2 != 0) {
                return Err(config(format!(
                    "multivariate_pt needs even block counts to host the rotated kernel, got {b}"
                )));
            }
        }
        if !self.t_grid.is_empty() {
            if self.t_grid.len() < 2 || self.t_grid.len() > 16 {
                return Err(config(format!(
                    "t_grid needs 2 to 16 points, got {}",
                    self.t_grid.len()
                )));
            }
            for w in self.t_grid.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(config("t_grid must be strictly decreasing"));
                }
            }
            let last = *self.t_grid.last().expect("nonempty");
            if !(last > 0.0) || !self.t_grid[0].is_finite() || self.t_grid[0] > 10.0 {
                return Err(config("t_grid values must lie in (0, 10]"));
            }
        }
        if self.kind == ExperimentKind::PairLimits && self.t_grid.is_empty() {
            return Err(config("pair_limits needs a t_grid"));
        }
        self.parsed_drivers()?;
        Ok(())
    }
}

/// Validates the spec and runs the study it names.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::UnivariateFmt => run_univariate_fmt(spec),
        ExperimentKind::MultivariatePt => run_multivariate_pt(spec),
        ExperimentKind::Transfer => run_transfer(spec),
        ExperimentKind::Universality => run_universality(spec),
        ExperimentKind::LemmaSweep => run_lemma_sweep(spec),
        ExperimentKind::PairLimits => run_pair_limits(spec),
    }
}
