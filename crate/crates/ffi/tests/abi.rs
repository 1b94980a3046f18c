use std::ffi::{CStr, CString};
use std::ptr;

use forest_importance_ffi::*;

fn last_error() -> String {
    let p = fi_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(problem: &str) -> *mut FiDistribution {
    let name = CString::new(problem).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { fi_distribution_generate(name.as_ptr(), &mut d) }, FiStatus::Ok);
    d
}

#[test]
fn oracle_digit_table() {
    let d = generate("digit");
    assert_eq!(unsafe { fi_distribution_n_inputs(d) }, 7);
    let mut imp = ptr::null_mut();
    assert_eq!(unsafe { fi_importance_oracle(d, 7, &mut imp) }, FiStatus::Ok);
    assert!(fi_last_error_message().is_null());
    let n = unsafe { fi_importance_len(imp) };
    let mut scores = vec![0.0; n];
    assert_eq!(unsafe { fi_importance_scores(imp, scores.as_mut_ptr(), n) }, FiStatus::Ok);
    assert!((scores.iter().sum::<f64>() - 10f64.log2()).abs() < 1e-9);
    assert_eq!(unsafe { CStr::from_ptr(fi_importance_name(imp, 0)) }.to_str().unwrap(), "X1");
    assert!(unsafe { fi_importance_name(imp, 7) }.is_null());
    let mut k0 = 0.0;
    assert_eq!(unsafe { fi_importance_per_degree(imp, 0, 0, &mut k0) }, FiStatus::Ok);
    assert!((k0 - 0.103).abs() < 1e-3);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { fi_importance_render(imp, FiFormat::Csv, 3, &mut text) }, FiStatus::Ok);
    let csv = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    assert!(csv.starts_with("variable,score,k0"));
    unsafe {
        fi_string_free(text);
        fi_importance_free(imp);
        fi_distribution_free(d);
    }
}

#[test]
fn forest_on_exact_data() {
    let d = generate("binary_split");
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { fi_dataset_exact(d, &mut ds) }, FiStatus::Ok);
    assert_eq!(unsafe { fi_dataset_n_rows(ds) }, 3);
    let mut config = fi_forest_config_default();
    config.n_trees = 200;
    config.seed = 5;
    let mut forest = ptr::null_mut();
    assert_eq!(unsafe { fi_forest_build(ds, &config, &mut forest) }, FiStatus::Ok);
    let mut imp = ptr::null_mut();
    assert_eq!(unsafe { fi_importance_mdi(forest, ds, &mut imp) }, FiStatus::Ok);
    let mut s = [0.0; 2];
    assert_eq!(unsafe { fi_importance_scores(imp, s.as_mut_ptr(), 1) }, FiStatus::OutOfRange);
    assert_eq!(unsafe { fi_importance_scores(imp, s.as_mut_ptr(), 2) }, FiStatus::Ok);
    // Both inputs determine Y; every tree spends H(Y) on them.
    let h = -(1.0 / 3.0f64) * (1.0 / 3.0f64).log2() - (2.0 / 3.0) * (2.0 / 3.0f64).log2();
    assert!((s[0] + s[1] - h).abs() < 1e-9);
    unsafe {
        fi_importance_free(imp);
        fi_forest_free(forest);
        fi_dataset_free(ds);
        fi_distribution_free(d);
    }
}

#[test]
fn context_oracle_values() {
    let d = generate("problem1_context");
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { fi_context_oracle(d, &mut ctx) }, FiStatus::Ok);
    assert_eq!(unsafe { fi_context_n_values(ctx) }, 2);
    let mut v = 0.0;
    assert_eq!(
        unsafe { fi_context_get(ctx, FiContextMeasure::Signed, 1, 0, &mut v) },
        FiStatus::Ok
    );
    assert!((v + 0.375).abs() < 1e-9);
    assert_eq!(
        unsafe { fi_context_get(ctx, FiContextMeasure::Abs, 1, 2, &mut v) },
        FiStatus::OutOfRange
    );
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { fi_context_render(ctx, FiFormat::Markdown, 4, &mut text) }, FiStatus::Ok);
    assert!(unsafe { CStr::from_ptr(text) }.to_str().unwrap().starts_with("| measure |"));
    unsafe {
        fi_string_free(text);
        fi_context_free(ctx);
        fi_distribution_free(d);
    }
}

#[test]
fn srs_theory_values() {
    let mut t = 0.0;
    let st = unsafe { fi_srs_expected_time(FiScenario::Clique, FiSubspaceMethod::Srs, 10_000, 100, 2, 2, &mut t) };
    assert_eq!(st, FiStatus::Ok);
    assert!((t - 10302.0).abs() < 1.0);
    let st = unsafe { fi_srs_markov_expected_time(FiScenario::MarginalOnly, FiSubspaceMethod::Rs, 10_000, 100, 10, &mut t) };
    assert_eq!(st, FiStatus::Ok);
    assert!((t - 291.0).abs() < 1.0);
    let st = unsafe { fi_srs_expected_time(FiScenario::Chaining, FiSubspaceMethod::Rs, 10, 20, 2, 2, &mut t) };
    assert_eq!(st, FiStatus::InvalidParameter);
    assert!(last_error().contains("q"));
}

#[test]
fn network_scores_and_evaluation() {
    // X1 -> X2 -> X3 with small independent noise.
    let steps = 400;
    let mut values = Vec::with_capacity(steps * 3);
    let mut state = 12345u64;
    let mut noise = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for _ in 0..steps {
        let x1 = noise();
        let x2 = x1 + 0.3 * noise();
        let x3 = x2 + 0.3 * noise();
        values.extend([x1, x2, x3]);
    }
    let mut series = ptr::null_mut();
    assert_eq!(
        unsafe { fi_series_from_values(values.as_ptr(), steps, 3, &mut series) },
        FiStatus::Ok
    );
    let mut scores = ptr::null_mut();
    assert_eq!(unsafe { fi_partial_correlation(series, 0, &mut scores) }, FiStatus::Ok);
    assert_eq!(unsafe { fi_scores_n_nodes(scores) }, 3);
    let (mut s12, mut s13) = (0.0, 0.0);
    unsafe {
        assert_eq!(fi_scores_get(scores, 0, 1, &mut s12), FiStatus::Ok);
        assert_eq!(fi_scores_get(scores, 0, 2, &mut s13), FiStatus::Ok);
        assert_eq!(fi_scores_get(scores, 0, 3, &mut s13), FiStatus::OutOfRange);
    }
    assert!(s12 > 0.5);
    let (src, dst) = ([0usize, 1], [1usize, 2]);
    let (mut auroc, mut auprc) = (0.0, 0.0);
    let st = unsafe { fi_evaluate(scores, src.as_ptr(), dst.as_ptr(), 2, false, &mut auroc, &mut auprc) };
    assert_eq!(st, FiStatus::Ok);
    assert_eq!((auroc, auprc), (1.0, 1.0));
    unsafe {
        fi_scores_free(scores);
        fi_series_free(series);
    }
}

#[test]
fn errors_are_reported() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { fi_distribution_generate(ptr::null(), &mut d) }, FiStatus::NullPointer);
    assert!(last_error().contains("problem"));
    let name = CString::new("no_such_problem").unwrap();
    assert_eq!(unsafe { fi_distribution_generate(name.as_ptr(), &mut d) }, FiStatus::InvalidParameter);
    let path = CString::new("/nonexistent/dist.json").unwrap();
    assert_eq!(unsafe { fi_distribution_load(path.as_ptr(), &mut d) }, FiStatus::Io);
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { fi_distribution_generate(bad.as_ptr().cast(), &mut d) },
        FiStatus::InvalidUtf8
    );
    let digit = CString::new("digit").unwrap();
    assert_eq!(unsafe { fi_distribution_generate(digit.as_ptr(), ptr::null_mut()) }, FiStatus::NullPointer);
    unsafe {
        fi_distribution_free(ptr::null_mut());
        fi_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { fi_dataset_n_rows(ptr::null()) }, 0);
    assert!(!unsafe { CStr::from_ptr(fi_version()) }.to_bytes().is_empty());
}

#[test]
fn round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("fi-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = CString::new(dir.join("d.json").to_str().unwrap()).unwrap();
    let d = generate("xor_strongweak:0.8");
    assert_eq!(unsafe { fi_distribution_save(d, path.as_ptr()) }, FiStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { fi_distribution_load(path.as_ptr(), &mut back) }, FiStatus::Ok);
    assert_eq!(unsafe { fi_distribution_n_inputs(back) }, 3);
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { fi_dataset_sample(back, 50, 1, &mut ds) }, FiStatus::Ok);
    assert_eq!(unsafe { fi_dataset_n_inputs(ds) }, 3);
    unsafe {
        fi_dataset_free(ds);
        fi_distribution_free(back);
        fi_distribution_free(d);
    }
    std::fs::remove_dir_all(dir).unwrap();
}
