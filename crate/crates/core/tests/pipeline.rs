use std::path::Path;

use nevrand::experiments::{self, fold_tails, fold_verify, read_tail_file, read_trial_file, run_tails, run_verify, write_tails, write_verify, Artifacts};
use nevrand::{Error, ExperimentConfig, RecordFormat};

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn with_trials(mut config: ExperimentConfig, trials: usize) -> ExperimentConfig {
    config.trials = trials;
    config
}

fn small_verify() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
seed = 11
trials = 12
radii = [5.0, 8.0, 12.0]
model = "gaussian"
experiments = ["theorem1", "value_a", "bounds"]
target_values = [[1.0, 0.0], [0.0, -3.0]]

[base]
kind = "exponential"

[constants]
A = 1.8181818181818181
B = 1.0
C = 1.2
"#,
    )
    .unwrap()
}

#[test]
fn verify_report_refolds_from_both_formats() {
    let config = small_verify();
    let (records, report) = run_verify(&config, 2).unwrap();
    for format in [RecordFormat::Csv, RecordFormat::Jsonl] {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_verify(dir.path(), format, &config, &records, &report).unwrap();
        let reread = read_trial_file(&paths.records, format).unwrap();
        assert_eq!(reread, records, "{format:?}");
        assert_eq!(fold_verify(&config, &reread), report, "{format:?}");
    }
}

#[test]
fn tails_report_refolds_from_both_formats() {
    let mut config = with_trials(load("moments_rademacher.toml"), 150);
    config.experiments.push(nevrand::ExperimentKind::TailEstimates);
    let (records, report) = run_tails(&config, 2).unwrap();
    for format in [RecordFormat::Csv, RecordFormat::Jsonl] {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_tails(dir.path(), format, &config, &records, &report).unwrap();
        let reread = read_tail_file(&paths.records, format).unwrap();
        assert_eq!(reread, records, "{format:?}");
        assert_eq!(fold_tails(&config, &reread), report, "{format:?}");
    }
}

fn record_bytes(config: &ExperimentConfig, workers: usize, format: RecordFormat) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let (records, report) = run_verify(config, workers).unwrap();
    let paths: Artifacts = write_verify(dir.path(), format, config, &records, &report).unwrap();
    std::fs::read(paths.records).unwrap()
}

#[test]
fn records_identical_across_worker_counts() {
    let config = small_verify();
    for format in [RecordFormat::Csv, RecordFormat::Jsonl] {
        let one = record_bytes(&config, 1, format);
        assert_eq!(one, record_bytes(&config, 4, format));
        assert_eq!(one, record_bytes(&config, 7, format));
    }
}

#[test]
fn doubling_trials_keeps_first_half() {
    let config = small_verify();
    let (half, _) = run_verify(&with_trials(config.clone(), 6), 3).unwrap();
    let (full, _) = run_verify(&config, 2).unwrap();
    assert_eq!(full.len(), 2 * half.len());
    assert_eq!(&full[..half.len()], &half[..]);
}

#[test]
fn value_a_at_zero_reduces_to_theorem1() {
    let mut config = small_verify();
    config.target_values = vec![[0.0, 0.0]];
    let (records, _) = run_verify(&config, 2).unwrap();
    for v in records.iter().filter_map(|r| r.values.as_ref()) {
        let t = &v.targets[0];
        assert_eq!(t.n_a, v.n_zero);
        assert_eq!(t.counting_n_a, v.counting_n_zero);
        assert_eq!(t.deviation_a, v.deviation);
        assert!(t.deviation_a <= v.band_a || v.violated);
    }
}

#[test]
fn smoke_record_is_finite() {
    let (records, report) = run_verify(&load("smoke.toml"), 1).unwrap();
    assert_eq!(records.len(), 1);
    let v = records[0].values.as_ref().expect("smoke trial succeeds");
    for x in [v.counting_n_zero, v.log_sigma_f, v.log_sigma_omega, v.log_m_f, v.t_omega, v.x_r, v.deviation, v.band] {
        assert!(x.is_finite());
    }
    assert!(v.t_f.unwrap().is_finite());
    assert!(report.pass);
}

#[test]
fn tiny_exponent_gives_unit_moment() {
    let config = with_trials(load("tails_steinhaus.toml"), 100);
    for y in experiments::run_condition_y(&config, 1e-6, 1.0).unwrap() {
        assert!((y.estimate - 1.0).abs() < 1e-5, "{}", y.estimate);
        assert!(y.stable);
    }
}

#[test]
fn first_moment_is_mean_x_r() {
    let config = with_trials(load("moments_rademacher.toml"), 300);
    let growth = experiments::run_moment_growth(&config, &[1.0, 2.0]).unwrap();
    let tails = experiments::run_tails(&config, 2).unwrap().1.report;
    let mean_x = tails.per_radius[0].mean_x_r.unwrap();
    assert!((growth[0].moments[0].mean - mean_x).abs() < 1e-12);
    let p2 = &growth[0].moments[1];
    assert!(p2.interval.lower.is_finite() && p2.interval.upper.is_finite());
    assert!(growth[0].normalized_nondecreasing);
}

#[test]
fn gaussian_cdf_needs_gaussian_model() {
    let mut config = with_trials(load("gaussian_cdf.toml"), 200);
    config.model = nevrand::RandomModel::Steinhaus;
    assert!(matches!(experiments::run_gaussian_pointwise_cdf(&config), Err(Error::InvalidInput(_))));
}

#[test]
fn degenerate_bases_rejected() {
    let mut config = small_verify();
    config.base = nevrand::CoefficientSequence::explicit([0.0, 1.0]);
    assert!(matches!(run_verify(&config, 1), Err(Error::InvalidInput(_))));
    let mut nns = with_trials(load("nns.toml"), 4);
    nns.base = nevrand::CoefficientSequence::explicit([0.0, 0.0, 1.0]);
    assert!(matches!(run_verify(&nns, 1), Err(Error::InvalidInput(_))));
}

#[test]
fn statistical_floor_enforced() {
    let config = with_trials(load("tails_gaussian.toml"), 10);
    assert!(matches!(run_tails(&config, 1), Err(Error::StatisticalFloor { .. })));
}
