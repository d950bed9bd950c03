mod common;

use common::*;
use proptest::prelude::*;
use selrisk::linalg::Matrix;
use selrisk::metrics::{auprc, auroc, rc_curve, spearman};
use selrisk::probes::{cross_validated_predictions, fit_logistic, stratified_folds, train_probe, ProbeTarget, Standardizer};

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (any::<u64>(), 2usize..=200).prop_map(|(seed, n)| scored_instance(&mut rng(seed), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ranking_metrics_match_brute_force((scores, labels) in instance()) {
        prop_assert!((auroc(&scores, &labels).unwrap() - brute_auroc(&scores, &labels)).abs() <= 1e-12);
        prop_assert!((auprc(&scores, &labels).unwrap() - brute_auprc(&scores, &labels)).abs() <= 1e-12);
        let labels_as_f64: Vec<f64> = labels.iter().map(|l| *l as u8 as f64).collect();
        let rho = spearman(&scores, &labels_as_f64);
        if scores.iter().any(|s| *s != scores[0]) {
            prop_assert!((rho.unwrap() - brute_spearman(&scores, &labels_as_f64)).abs() <= 1e-12);
        } else {
            prop_assert!(rho.is_err());
        }
    }

    #[test]
    fn aurc_matches_threshold_scan((scores, labels) in instance()) {
        let c = rc_curve(&scores, &labels).unwrap();
        prop_assert!((c.aurc - brute_aurc(&scores, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn oracle_aurc_is_permutation_minimum(labels in prop::collection::vec(any::<bool>(), 1..=7)) {
        let risks = vec![0.0; labels.len()];
        let c = rc_curve(&risks, &labels).unwrap();
        prop_assert!((c.oracle_aurc - permutation_min_aurc(&labels)).abs() <= 1e-12);
    }
}

#[test]
fn probe_matches_dense_newton_on_standardized_features() {
    let mut r = rng(21);
    for case in 0..20 {
        let (raw, y) = logistic_instance(&mut r, 40 + case * 3, 1 + case % 3);
        let x: Vec<Vec<f64>> = raw.iter().map(|row| row.iter().map(|v| 5.0 * v - 2.0).collect()).collect();
        let m = Matrix::from_rows(&x).unwrap();
        let probe = train_probe(&m, &y, 0.1, 0, ProbeTarget::Correctness).unwrap();
        let z = Standardizer::fit(&m).unwrap().transform(&m).unwrap();
        let z_rows: Vec<Vec<f64>> = z.iter_rows().map(|row| row.to_vec()).collect();
        let (reference, _) = dense_newton_minimize(&z_rows, &y, 0.1);
        let d = probe.weights.len();
        for j in 0..d {
            assert!((probe.weights[j] - reference[j]).abs() < 1e-6, "case {case} weight {j}");
        }
        assert!((probe.bias - reference[d]).abs() < 1e-6, "case {case} bias");
    }
}

#[test]
fn regularization_path() {
    let mut r = rng(22);
    let (x, y) = logistic_instance(&mut r, 120, 3);
    let m = Matrix::from_rows(&x).unwrap();
    let tiny = fit_logistic(&m, &y, 1e-7).unwrap();
    assert!(tiny.weights.iter().all(|w| w.abs() < 1e-5));

    let mut prev = f64::INFINITY;
    for c in [0.001, 0.01, 0.1, 1.0, 10.0, 100.0] {
        let fit = fit_logistic(&m, &y, c).unwrap();
        let mut p = fit.weights.clone();
        p.push(fit.bias);
        let w2: f64 = fit.weights.iter().map(|w| w * w).sum();
        let loss = (logistic_objective(&x, &y, c, &p) - w2 / 2.0) / c;
        assert!(loss <= prev + 1e-9, "training loss rose at c = {c}");
        prev = loss;
    }
}

#[test]
fn cross_validation_does_not_leak() {
    let mut r = rng(23);
    let (x, y) = logistic_instance(&mut r, 90, 4);
    let m = Matrix::from_rows(&x).unwrap();
    let (fold_of, k) = stratified_folds(&y, 5, 9).unwrap();
    let preds = cross_validated_predictions(&m, &y, &fold_of, k, 0.1).unwrap();
    for f in 0..k {
        let (val, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| fold_of[i] == f);
        let labels: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let probe = train_probe(&m.select_rows(&train), &labels, 0.1, 0, ProbeTarget::Correctness).unwrap();
        let own = probe.predict(&m.select_rows(&val)).unwrap();
        for (i, p) in val.iter().zip(own) {
            assert_eq!(preds[*i].to_bits(), p.to_bits(), "fold {f} row {i}");
        }
    }
}
