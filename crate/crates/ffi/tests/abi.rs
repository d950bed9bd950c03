use std::ffi::{CStr, CString};
use std::ptr;

use selrisk::linalg::Matrix;
use selrisk::probes::{train_probe, ProbeTarget};
use selrisk_ffi::*;

fn last_error() -> Option<String> {
    let p = selrisk_last_error_message();
    if p.is_null() {
        None
    } else {
        Some(unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }
}

#[test]
fn metrics_match_core() {
    let scores = [0.1, 0.4, 0.35, 0.8, 0.8, 0.2];
    let labels = [false, true, false, true, false, true];
    let mut v = 0.0;
    unsafe {
        assert_eq!(selrisk_auroc(scores.as_ptr(), labels.as_ptr(), 6, &mut v), SelriskStatus::Ok);
        assert_eq!(v, selrisk::metrics::auroc(&scores, &labels).unwrap());
        assert_eq!(selrisk_auprc(scores.as_ptr(), labels.as_ptr(), 6, &mut v), SelriskStatus::Ok);
        assert_eq!(v, selrisk::metrics::auprc(&scores, &labels).unwrap());
        let (mut aurc, mut e) = (0.0, 0.0);
        assert_eq!(selrisk_rc_area(scores.as_ptr(), labels.as_ptr(), 6, &mut aurc, &mut e), SelriskStatus::Ok);
        let curve = selrisk::metrics::rc_curve(&scores, &labels).unwrap();
        assert_eq!((aurc, e), (curve.aurc, curve.e_aurc));
        let other = [3.0, 1.0, 2.0, 6.0, 5.0, 4.0];
        assert_eq!(selrisk_spearman(scores.as_ptr(), other.as_ptr(), 6, &mut v), SelriskStatus::Ok);
        assert_eq!(v, selrisk::metrics::spearman(&scores, &other).unwrap());
    }
    assert_eq!(last_error(), None);
}

#[test]
fn error_codes_and_messages() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(selrisk_auroc(ptr::null(), ptr::null(), 3, &mut v), SelriskStatus::NullPointer);
        assert!(last_error().unwrap().contains("scores"));
        let s = [0.1, 0.2];
        assert_eq!(selrisk_auroc(s.as_ptr(), [true, true].as_ptr(), 2, &mut v), SelriskStatus::SingleClass);
        assert_eq!(selrisk_auroc(s.as_ptr(), [true, false].as_ptr(), 2, ptr::null_mut()), SelriskStatus::NullPointer);
        let flat = [1.0, 1.0];
        assert_eq!(selrisk_spearman(flat.as_ptr(), s.as_ptr(), 2, &mut v), SelriskStatus::InvalidInput);
        assert!(last_error().is_some());
        assert_eq!(selrisk_sequence_nll([-0.5, -1.5].as_ptr(), 2, &mut v), SelriskStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(last_error(), None);
        assert_eq!(selrisk_sequence_nll([0.5].as_ptr(), 1, &mut v), SelriskStatus::InvalidInput);
    }
}

#[test]
fn entropy_functions() {
    let k = 4;
    // Samples {0, 1} and {2, 3} mutually entail.
    let pairs: Vec<bool> = (0..k * k).map(|i| (i / k < 2) == (i % k < 2)).collect();
    let mut clusters = [9usize; 4];
    let mut c = 0;
    let mut se = 0.0;
    unsafe {
        assert_eq!(selrisk_cluster_by_entailment(pairs.as_ptr(), k, clusters.as_mut_ptr(), &mut c), SelriskStatus::Ok);
        assert_eq!((clusters, c), ([0, 0, 1, 1], 2));
        assert_eq!(selrisk_semantic_entropy(clusters.as_ptr(), k, &mut se), SelriskStatus::Ok);
        assert!((se - 2f64.ln()).abs() < 1e-15);
        assert_eq!(selrisk_semantic_entropy([0usize, 2].as_ptr(), 2, &mut se), SelriskStatus::InvalidInput);
        let mut bad = pairs.clone();
        bad[0] = false;
        assert_eq!(
            selrisk_cluster_by_entailment(bad.as_ptr(), k, clusters.as_mut_ptr(), &mut c),
            SelriskStatus::InvalidInput
        );
    }
}

#[test]
fn tce_degenerate_fallback() {
    let cal = [0.1, 0.2, 0.3];
    let test_r = [0.1, 0.2, 0.3, 0.4];
    let test_l = [true, false, false, false];
    let mut v = 0.0;
    unsafe {
        let status = selrisk_tce(
            cal.as_ptr(),
            [true; 3].as_ptr(),
            3,
            test_r.as_ptr(),
            test_l.as_ptr(),
            4,
            0.05,
            0.30,
            0.01,
            SelriskFallback::PerAlpha,
            &mut v,
        );
        assert_eq!(status, SelriskStatus::Ok);
    }
    let grid: Vec<f64> = (0..26).map(|i| 0.05 + i as f64 * 0.01).collect();
    let expect = grid.iter().map(|a| (0.25 - a).abs()).sum::<f64>() / 26.0;
    assert!((v - expect).abs() < 1e-12);
}

#[test]
fn policy_handle_lifecycle() {
    let risks = [0.1, 0.2, 0.3, 0.9];
    let hall = [false, false, false, true];
    let mut policy: *mut SelriskPolicy = ptr::null_mut();
    let mut tau = 0.0;
    let mut answers = [false; 4];
    unsafe {
        assert_eq!(selrisk_policy_calibrate(risks.as_ptr(), hall.as_ptr(), 4, 0.05, &mut policy), SelriskStatus::Ok);
        assert!(!policy.is_null());
        assert_eq!(selrisk_policy_tau(policy, &mut tau), SelriskStatus::Ok);
        assert_eq!(tau, 0.3);
        assert_eq!(selrisk_policy_apply(policy, risks.as_ptr(), 4, answers.as_mut_ptr()), SelriskStatus::Ok);
        assert_eq!(answers, [true, true, true, false]);
        selrisk_policy_free(policy);
        selrisk_policy_free(ptr::null_mut());

        assert_eq!(selrisk_policy_calibrate(risks.as_ptr(), [true; 4].as_ptr(), 4, 0.1, &mut policy), SelriskStatus::Ok);
        assert_eq!(selrisk_policy_tau(policy, &mut tau), SelriskStatus::Ok);
        assert_eq!(tau, f64::NEG_INFINITY);
        selrisk_policy_free(policy);

        let json = CString::new(
            r#"{"score_name":"pc+se","tau":"-inf","target_alpha":0.1,"calibration_stats":{"coverage":0.0,"selective_risk":0.0}}"#,
        )
        .unwrap();
        assert_eq!(selrisk_policy_from_json(json.as_ptr(), &mut policy), SelriskStatus::Ok);
        assert_eq!(selrisk_policy_apply(policy, risks.as_ptr(), 4, answers.as_mut_ptr()), SelriskStatus::Ok);
        assert_eq!(answers, [false; 4]);
        selrisk_policy_free(policy);

        let broken = CString::new("{").unwrap();
        assert_eq!(selrisk_policy_from_json(broken.as_ptr(), &mut policy), SelriskStatus::Parse);
        assert_eq!(selrisk_policy_tau(ptr::null(), &mut tau), SelriskStatus::NullPointer);
        assert_eq!(selrisk_policy_calibrate(risks.as_ptr(), hall.as_ptr(), 4, 0.0, &mut policy), SelriskStatus::InvalidInput);
    }
}

#[test]
fn probe_handle_matches_core() {
    let rows: Vec<[f64; 3]> = (0..40)
        .map(|i| {
            let t = i as f64;
            [(t * 0.7).sin(), (t * 1.3).cos(), t / 40.0]
        })
        .collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[2] > 0.1).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let probe = train_probe(&x, &labels, 0.1, 7, ProbeTarget::Correctness).unwrap();
    let expected = probe.predict(&x).unwrap();
    let json = CString::new(probe.to_json().unwrap()).unwrap();

    let mut handle: *mut SelriskProbe = ptr::null_mut();
    let (mut dim, mut layer) = (0, 0);
    let mut out = vec![0.0; rows.len()];
    unsafe {
        assert_eq!(selrisk_probe_from_json(json.as_ptr(), &mut handle), SelriskStatus::Ok);
        assert_eq!(selrisk_probe_shape(handle, &mut dim, &mut layer), SelriskStatus::Ok);
        assert_eq!((dim, layer), (3, 7));
        let status = selrisk_probe_predict(handle, x.as_slice().as_ptr(), rows.len(), 3, out.as_mut_ptr());
        assert_eq!(status, SelriskStatus::Ok);
        assert_eq!(out, expected);
        let status = selrisk_probe_predict(handle, x.as_slice().as_ptr(), rows.len(), 2, out.as_mut_ptr());
        assert_eq!(status, SelriskStatus::DimensionMismatch);
        selrisk_probe_free(handle);
    }
}

#[test]
fn header_declares_every_export() {
    let root = env!("CARGO_MANIFEST_DIR");
    let source = std::fs::read_to_string(format!("{root}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{root}/include/selrisk.h")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15, "{exports:?}");
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SelriskPolicy SelriskPolicy;"));
}
