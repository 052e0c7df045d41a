//! End-to-end checks of the experiment layer: report determinism across
//! runs and thread counts, byte-stable output files, configuration digests,
//! and config rejection through the public entry point.

use poisson_chaos::experiment::{
    run, ExperimentError, ExperimentKind, ExperimentReport, ExperimentSpec,
};

fn small_univariate(seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default_for(ExperimentKind::UnivariateFmt);
    spec.seed = seed;
    spec.grid = vec![4, 16];
    spec.samples = 4_000;
    spec
}

fn small_sweep(seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default_for(ExperimentKind::LemmaSweep);
    spec.seed = seed;
    spec.cases = 200;
    spec
}

#[test]
fn identical_specs_reproduce_reports_and_files_byte_for_byte() {
    let spec = small_univariate(7);
    let first = run(&spec).unwrap();
    let second = run(&spec).unwrap();
    assert_eq!(first, second);
    assert!(first.all_pass, "failures: {:?}", first.failures());
    assert_eq!(first.spec_digest, spec.digest());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (json_a, csv_a) = first.write_files(dir_a.path()).unwrap();
    let (json_b, csv_b) = second.write_files(dir_b.path()).unwrap();
    assert_eq!(json_a.file_name().unwrap(), "univariate_fmt.json");
    assert_eq!(csv_a.file_name().unwrap(), "univariate_fmt.csv");
    assert_eq!(
        std::fs::read(&json_a).unwrap(),
        std::fs::read(&json_b).unwrap()
    );
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap()
    );

    let text = std::fs::read_to_string(&json_a).unwrap();
    let parsed = ExperimentReport::from_json_str(&text).unwrap();
    assert_eq!(parsed, first);
}

#[test]
fn thread_count_does_not_change_results() {
    let sweep = small_sweep(11);
    let univariate = small_univariate(11);
    let wide_sweep = run(&sweep).unwrap();
    let wide_univariate = run(&univariate).unwrap();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let (narrow_sweep, narrow_univariate) =
        pool.install(|| (run(&sweep).unwrap(), run(&univariate).unwrap()));
    assert_eq!(wide_sweep, narrow_sweep);
    assert_eq!(wide_univariate, narrow_univariate);
}

#[test]
fn seeds_steer_estimates_but_never_exact_columns() {
    let first = run(&small_univariate(1)).unwrap();
    let second = run(&small_univariate(2)).unwrap();
    assert_ne!(first.spec_digest, second.spec_digest);
    assert_eq!(first.rows.len(), second.rows.len());

    let mut some_estimate_moved = false;
    for (a, b) in first.rows.iter().zip(&second.rows) {
        assert_eq!(a.key, b.key);
        assert_eq!(a.exact, b.exact);
        assert_eq!(a.bounds, b.bounds);
        some_estimate_moved |= a.estimates != b.estimates;
    }
    assert!(some_estimate_moved);
}

#[test]
fn spec_digest_pins_the_full_configuration() {
    let base = ExperimentSpec::default_for(ExperimentKind::Transfer);
    let digest = base.digest();
    assert_eq!(digest.len(), 64);
    assert!(digest.bytes().all(|b| b.is_ascii_hexdigit()));
    assert_eq!(base.clone().digest(), digest);

    let mut resized = base.clone();
    resized.samples += 1;
    assert_ne!(resized.digest(), digest);

    let mut regridded = base.clone();
    regridded.grid.pop();
    assert_ne!(regridded.digest(), digest);

    let mut reseeded = base;
    reseeded.seed = 1;
    assert_ne!(reseeded.digest(), digest);
}

#[test]
fn csv_body_stays_rectangular_after_the_comment_header() {
    let report = run(&small_sweep(3)).unwrap();
    let mut buffer = Vec::new();
    report.write_csv(&mut buffer).unwrap();
    let text = String::from_utf8(buffer).unwrap();

    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# kind: lemma_sweep"));
    assert!(lines.next().unwrap().starts_with("# seed: "));
    assert!(lines.next().unwrap().starts_with("# spec: "));
    let body: String = lines.collect::<Vec<_>>().join("\n");

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(
        reader.headers().unwrap(),
        &csv::StringRecord::from(vec!["key", "metric", "class", "value", "se"])
    );
    let mut records = 0usize;
    for record in reader.records() {
        let record = record.unwrap();
        assert_eq!(record.len(), 5);
        let class = &record[2];
        assert!(matches!(class, "exact" | "estimate" | "bound" | "verdict"));
        if class == "verdict" {
            assert!(matches!(&record[3], "true" | "false"));
        }
        records += 1;
    }
    let expected: usize = report
        .rows
        .iter()
        .map(|r| r.exact.len() + r.estimates.len() + r.bounds.len() + r.verdicts.len())
        .sum();
    assert_eq!(records, expected);
}

#[test]
fn invalid_specs_error_as_config_before_any_work() {
    let mut wrong_schema = small_univariate(0);
    wrong_schema.schema += 1;
    let mut rising_grid = ExperimentSpec::default_for(ExperimentKind::PairLimits);
    rising_grid.t_grid = vec![0.05, 0.1];
    let mut alien_driver = ExperimentSpec::default_for(ExperimentKind::Universality);
    alien_driver.drivers = vec!["cauchy".into()];

    for spec in [wrong_schema, rising_grid, alien_driver] {
        match run(&spec) {
            Err(ExperimentError::Config(msg)) => assert!(!msg.is_empty()),
            other => panic!("expected a config error, got {other:?}"),
        }
    }
}
