use std::ffi::{c_char, CStr, CString};
use std::ptr;

use nevrand_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        nr_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn sequence(spec: &str) -> *mut NrSequence {
    let spec = CString::new(spec).unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { nr_sequence_parse(spec.as_ptr(), &mut seq) }, NrStatus::Ok);
    seq
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(nr_version()) };
    assert_eq!(v.to_str().unwrap(), nevrand::VERSION);
}

#[test]
fn sigma_of_exponential() {
    let seq = sequence("exponential");
    let (mut ls, mut degree, mut log_m) = (0.0, 0usize, 0.0);
    unsafe {
        assert_eq!(nr_log_sigma(seq, 1.0, &mut ls), NrStatus::Ok);
        assert_eq!(nr_truncation_degree(seq, 1.0, &mut degree), NrStatus::Ok);
        assert_eq!(nr_log_max_modulus(seq, 3.0, &mut log_m), NrStatus::Ok);
        nr_sequence_free(seq);
    }
    assert!((ls.exp() - 1.509829560690897).abs() < 1e-12);
    assert!(degree > 5);
    assert!((log_m - 3.0).abs() < 1e-9);
}

#[test]
fn sample_functionals() {
    let seq = sequence("exponential");
    let mut sample = ptr::null_mut();
    let (mut n, mut big_n, mut t, mut res, mut x, mut ls) = (0usize, 0.0, 0.0, 1.0, 0.0, 0.0);
    unsafe {
        assert_eq!(nr_sample_new(seq, NrModel::Gaussian, 40, 7, 3, &mut sample), NrStatus::Ok);
        assert_eq!(nr_sample_degree(sample), 40);
        assert_eq!(nr_count_zeros(sample, 6.0, 0.0, 0.0, &mut n), NrStatus::Ok);
        assert_eq!(nr_counting_n(sample, 6.0, 0.0, 0.0, &mut big_n), NrStatus::Ok);
        assert_eq!(nr_characteristic_t(sample, 6.0, &mut t), NrStatus::Ok);
        assert_eq!(nr_jensen_residual(sample, 6.0, &mut res), NrStatus::Ok);
        assert_eq!(nr_log_sigma(seq, 6.0, &mut ls), NrStatus::Ok);
        assert_eq!(nr_x_r(sample, ls, 6.0, &mut x), NrStatus::Ok);
        let mut re = vec![0.0; 41];
        let mut im = vec![0.0; 41];
        assert_eq!(nr_sample_coefficients(sample, re.as_mut_ptr(), im.as_mut_ptr(), 41), NrStatus::Ok);
        let direct = nevrand::random::sample_function(&nevrand::CoefficientSequence::exponential(), nevrand::RandomModel::Gaussian, 40, 7, 3);
        assert_eq!(re[17], direct.coefficients[17].re);
        assert_eq!(im[17], direct.coefficients[17].im);
        nr_sample_free(sample);
        nr_sequence_free(seq);
    }
    assert!(big_n >= 0.0 && t.is_finite() && x > 0.0);
    assert!(res <= 1e-7);
    assert!(n > 0);
}

#[test]
fn root_on_circle_reports_status_and_message() {
    // p(z) = z - 2 has its root on |z| = 2.
    let (re, im) = ([-2.0, 1.0], [0.0, 0.0]);
    let mut sample = ptr::null_mut();
    let mut n = 0usize;
    unsafe {
        assert_eq!(nr_sample_from_coefficients(re.as_ptr(), im.as_ptr(), 2, &mut sample), NrStatus::Ok);
        assert_eq!(nr_count_zeros(sample, 2.0, 0.0, 0.0, &mut n), NrStatus::CircleRootProximity);
        nr_sample_free(sample);
    }
    assert!(last_error().contains("CircleRootProximity"));
}

#[test]
fn null_and_invalid_inputs() {
    let mut out = 0.0;
    let mut seq = ptr::null_mut();
    let bad = CString::new("no-such-base").unwrap();
    unsafe {
        assert_eq!(nr_log_sigma(ptr::null(), 1.0, &mut out), NrStatus::NullPointer);
        assert_eq!(nr_sequence_parse(bad.as_ptr(), &mut seq), NrStatus::InvalidInput);
        assert!(seq.is_null());
        assert_eq!(nr_sequence_explicit(ptr::null(), ptr::null(), 0, &mut seq), NrStatus::InvalidInput);
        nr_sequence_free(ptr::null_mut());
    }
    assert!(last_error().contains("empty"));
    let ok = sequence("exponential");
    assert_eq!(last_error(), "");
    unsafe { nr_sequence_free(ok) };
}

#[test]
fn config_validation_and_run() {
    let text = CString::new(
        "seed = 1\ntrials = 2\nradii = [5.0]\nmodel = \"gaussian\"\n[base]\nkind = \"exponential\"\n\
         [constants]\nA = 1.8181818181818181\nB = 1.0\nC = 1.2\n",
    )
    .unwrap();
    let bad = CString::new("seed = 1\ntrials = 2\nradii = [5.0]\nmodel = \"gaussian\"\n[base]\nkind = \"exponential\"\n[constants]\nA = 1.0\nB = 1.0\nC = 0.5\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut config = ptr::null_mut();
    let mut passed = -1;
    unsafe {
        assert_eq!(nr_config_parse(bad.as_ptr(), &mut config), NrStatus::InvalidInput);
        assert!(last_error().contains("C > 1 required"));
        assert_eq!(nr_config_parse(text.as_ptr(), &mut config), NrStatus::Ok);
        assert_eq!(nr_config_set_trials(config, 0), NrStatus::InvalidInput);
        assert_eq!(nr_config_set_seed(config, 5), NrStatus::Ok);
        assert_eq!(nr_run(config, 0, 1, out_dir.as_ptr(), NrFormat::Csv, &mut passed), NrStatus::Ok);
        assert_eq!(nr_run(config, 1, 1, out_dir.as_ptr(), NrFormat::Csv, &mut passed), NrStatus::StatisticalFloor);
        nr_config_free(config);
    }
    assert_eq!(passed, 1);
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let report: String = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 5"));
}
