//! Thin command-line front end over the library.
//!
//! Every subcommand maps onto one public entry point; all numerical work
//! lives in the library. Exit codes: 0 when every verdict passes, 1 when a
//! verdict fails, 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use poisson_chaos::bounds::{transfer_principle_check, univariate_bound};
use poisson_chaos::experiment::{
    self, kernel_family_blocks, kernel_family_blocks_weighted, kernel_family_spread,
    ExperimentError, ExperimentKind, ExperimentReport, ExperimentSpec,
};
use poisson_chaos::sim::{sample_homogeneous_sums, Driver};
use poisson_chaos::stats::moment_estimators;
use poisson_chaos::{ChaosElement, Kernel, SampleSet};

#[derive(Parser)]
#[command(name = "poisson-chaos", version, about = "Fourth moment theorems on finite Poisson spaces: exact calculus, simulation, bounds, and reproducible studies")]
struct Cli {
    /// Seed for stochastic subcommands; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the sampling pool; defaults to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for JSON and CSV outputs.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// JSON experiment spec; see `experiment --print-config --kind <NAME>`.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Named kernel family a subcommand instantiates one member of.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    /// Constant on off-diagonal q-tuples of `size` cells.
    Spread,
    /// Order-two pair blocks on `2·size` cells, equal weights.
    Blocks,
    /// Pair blocks with a ramp weight profile.
    WeightedBlocks,
}

#[derive(clap::Args)]
struct FamilyArgs {
    /// Kernel family to build.
    #[arg(long, value_enum)]
    family: Family,

    /// Kernel order; only the spread family takes orders other than 2.
    #[arg(long, default_value_t = 2)]
    order: usize,

    /// Cell count for the spread family, block count for the block families.
    #[arg(long)]
    size: usize,

    /// Shared cell intensity.
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
}

impl FamilyArgs {
    fn build(&self) -> Result<Kernel, ExperimentError> {
        match self.family {
            Family::Spread => kernel_family_spread(self.order, self.size, self.intensity),
            Family::Blocks | Family::WeightedBlocks => {
                if self.order != 2 {
                    return Err(ExperimentError::Config(format!(
                        "block families have order 2, got --order {}",
                        self.order
                    )));
                }
                match self.family {
                    Family::Blocks => kernel_family_blocks(self.size, self.intensity),
                    _ => kernel_family_blocks_weighted(self.size, self.intensity),
                }
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Contraction norms of a family member and the exact domination of
    /// their weighted sum by the fourth cumulant.
    Contract(FamilyArgs),

    /// Exact chaos moments of a family member and its closed-form normal
    /// approximation constants.
    Chaos(FamilyArgs),

    /// Randomized sweep of the exact moment and pair inequalities.
    Verify {
        /// Randomized cases to draw.
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },

    /// Draw homogeneous-sum replications of a family member and report
    /// moment estimates; writes the sample matrix when --out-dir is given.
    Simulate {
        #[command(flatten)]
        family: FamilyArgs,

        /// Replications to draw.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,

        /// Driving noise: poisson, gaussian, rademacher, or centered_uniform.
        #[arg(long, default_value = "poisson")]
        driver: String,
    },

    /// Run one study by kind or from --config, or the full default suite
    /// when neither is given; writes <kind>.json and <kind>.csv per study.
    Experiment {
        /// Study to run: univariate_fmt, multivariate_pt, transfer,
        /// universality, lemma_sweep, or pair_limits.
        #[arg(long)]
        kind: Option<String>,

        /// Print the default JSON spec for --kind instead of running.
        #[arg(long)]
        print_config: bool,
    },

    /// Summarize a report JSON file; re-renders its CSV when --out-dir is
    /// given.
    Report {
        /// Path to a <kind>.json written by `experiment`.
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads);
        if pool.build_global().is_err() {
            eprintln!("error: thread pool already initialized");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool, ExperimentError> {
    if cli.config.is_some() && !matches!(cli.command, Command::Experiment { .. }) {
        return Err(ExperimentError::Config(
            "--config files configure the experiment subcommand".into(),
        ));
    }
    match &cli.command {
        Command::Contract(family) => run_contract(family),
        Command::Chaos(family) => run_chaos(family),
        Command::Verify { cases } => run_verify(cli, *cases),
        Command::Simulate {
            family,
            samples,
            driver,
        } => run_simulate(cli, family, *samples, driver),
        Command::Experiment { kind, print_config } => {
            run_experiment(cli, kind.as_deref(), *print_config)
        }
        Command::Report { file } => run_report(cli, file),
    }
}

fn run_contract(family: &FamilyArgs) -> Result<bool, ExperimentError> {
    let kernel = family.build()?;
    let report = transfer_principle_check(std::slice::from_ref(&kernel), 1e-9)?;
    let row = &report.rows[0];
    println!(
        "kernel: order={} cells={} digest={}",
        kernel.order(),
        kernel.space().n_cells(),
        kernel.digest()
    );
    println!("kappa4 = {}", row.kappa4);
    for (r, norm) in row.contraction_norms.iter().enumerate() {
        println!("contraction_norm_r{} = {norm}", r + 1);
    }
    let verdict = if row.inequality.ok { "ok" } else { "VIOLATED" };
    println!(
        "weighted_contraction_sum = {} <= kappa4 = {}: {verdict}",
        row.inequality.lhs, row.inequality.rhs
    );
    Ok(row.inequality.ok)
}

fn run_chaos(family: &FamilyArgs) -> Result<bool, ExperimentError> {
    let kernel = family.build()?;
    let element = ChaosElement::from_kernel(&kernel)?;
    let sigma2 = element.variance();
    let kappa4 = element.fourth_cumulant()?;
    let gamma = element.gamma(&element)?;
    println!(
        "element: grade={} cells={} digest={}",
        kernel.order(),
        kernel.space().n_cells(),
        element.digest()
    );
    println!("variance = {sigma2}");
    println!("moment4 = {}", element.moment4()?);
    println!("kappa4 = {kappa4}");
    println!("gamma_mean = {}", gamma.expectation());
    println!("gamma_variance = {}", gamma.variance());
    let bound = univariate_bound(kernel.order(), sigma2, kappa4)?;
    println!("wasserstein_b1 = {}", bound.b1);
    println!("wasserstein_b2 = {}", bound.b2);
    Ok(true)
}

fn run_verify(cli: &Cli, cases: usize) -> Result<bool, ExperimentError> {
    let mut spec = ExperimentSpec::default_for(ExperimentKind::LemmaSweep);
    spec.cases = cases;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let report = experiment::run(&spec)?;
    finish_study(cli, &report)
}

fn run_simulate(
    cli: &Cli,
    family: &FamilyArgs,
    samples: usize,
    driver: &str,
) -> Result<bool, ExperimentError> {
    let driver = Driver::parse(driver)
        .ok_or_else(|| ExperimentError::Config(format!("unknown driver {driver:?}")))?;
    let kernel = family.build()?;
    let seed = cli.seed.unwrap_or(0);
    let matrix = sample_homogeneous_sums(std::slice::from_ref(&kernel), driver, samples, seed)?;
    let moments = moment_estimators(&SampleSet::from_sample_matrix(&matrix)?)?;
    println!(
        "samples: n={} driver={} seed={seed} kernel={}",
        matrix.rows(),
        driver.name(),
        kernel.digest()
    );
    println!("mean = {} (se {})", moments.means[0], moments.mean_ses[0]);
    println!("variance = {}", moments.variances[0]);
    println!(
        "kappa4_hat = {} (se {})",
        moments.kappa4s[0], moments.kappa4_ses[0]
    );
    if let Some(dir) = &cli.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("samples_{}.csv", driver.name()));
        let file = std::fs::File::create(&path)?;
        matrix.write_csv(std::io::BufWriter::new(file))?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn run_experiment(
    cli: &Cli,
    kind: Option<&str>,
    print_config: bool,
) -> Result<bool, ExperimentError> {
    let parse_kind = |name: &str| {
        ExperimentKind::parse(name)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment kind {name:?}")))
    };
    if print_config {
        let kind = kind.ok_or_else(|| {
            ExperimentError::Config("--print-config needs --kind <NAME>".into())
        })?;
        println!("{}", ExperimentSpec::default_for(parse_kind(kind)?).to_json_string());
        return Ok(true);
    }

    let mut specs = match (&cli.config, kind) {
        (Some(_), Some(_)) => {
            return Err(ExperimentError::Config(
                "pass at most one of --config and --kind".into(),
            ));
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            vec![ExperimentSpec::from_json_str(&text)?]
        }
        (None, Some(name)) => vec![ExperimentSpec::default_for(parse_kind(name)?)],
        (None, None) => ExperimentKind::all()
            .into_iter()
            .map(ExperimentSpec::default_for)
            .collect(),
    };
    if let Some(seed) = cli.seed {
        for spec in &mut specs {
            spec.seed = seed;
        }
    }

    let mut all_pass = true;
    for spec in &specs {
        let report = experiment::run(spec)?;
        all_pass &= finish_study(cli, &report)?;
    }
    Ok(all_pass)
}

fn run_report(cli: &Cli, file: &Path) -> Result<bool, ExperimentError> {
    let text = std::fs::read_to_string(file)?;
    let report = ExperimentReport::from_json_str(&text)?;
    println!(
        "kind={} seed={} spec={} rows={}",
        report.kind,
        report.seed,
        report.spec_digest,
        report.rows.len()
    );
    for row in &report.rows {
        let passed = row.verdicts.values().filter(|&&ok| ok).count();
        println!("  {}: verdicts {passed}/{}", row.key, row.verdicts.len());
    }
    if let Some(dir) = &cli.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", report.kind));
        let handle = std::fs::File::create(&path)?;
        report.write_csv(std::io::BufWriter::new(handle))?;
        println!("wrote {}", path.display());
    }
    print_verdict_line(&report);
    Ok(report.all_pass)
}

/// Prints the study's verdict line, writes its files when an output
/// directory was requested, and returns whether every verdict passed.
fn finish_study(cli: &Cli, report: &ExperimentReport) -> Result<bool, ExperimentError> {
    if let Some(dir) = &cli.out_dir {
        let (json_path, csv_path) = report.write_files(dir)?;
        println!("wrote {} and {}", json_path.display(), csv_path.display());
    }
    print_verdict_line(report);
    Ok(report.all_pass)
}

fn print_verdict_line(report: &ExperimentReport) {
    if report.all_pass {
        println!("{}: all verdicts pass", report.kind);
    } else {
        println!("{}: FAILED {}", report.kind, report.failures().join(", "));
    }
}
