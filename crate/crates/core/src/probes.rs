//! Linear probes on hidden-state features.
//!
//! A probe is a per-feature standardizer followed by L2-regularized logistic
//! regression with objective
//!
//! ```text
//! J(w, b) = ½‖w‖² + c · Σᵢ ln(1 + exp(−yᵢ (w·xᵢ + b))),   yᵢ ∈ {−1, +1}
//! ```
//!
//! (bias unpenalized). `J` is strictly convex in `w`, so a gradient with
//! ∞-norm ≤ [`GRADIENT_TOLERANCE`] certifies the global optimum. It is
//! minimized with a line-searched Newton-CG method that only needs
//! Hessian-vector products, so cost per iteration is O(n·d).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GenerationRecord;
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, softplus, Matrix};
use crate::metrics;
use crate::rng;

pub const DEFAULT_C: f64 = 0.1;
pub const DEFAULT_FOLDS: usize = 5;
pub const SCALE_FLOOR: f64 = 1e-12;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 10_000;

/// Per-feature standardization to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at [`SCALE_FLOOR`].
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &Matrix) -> Result<Self> {
        let n = features.rows();
        if n < 2 {
            return Err(Error::TooFewRecords { required: 2, got: n });
        }
        let d = features.cols();
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        for j in 0..d {
            let col = || features.iter_rows().map(move |r| r[j]);
            let first = features.row(0)[j];
            if col().all(|v| v == first) {
                // Exact mean so the transformed column is exactly zero.
                mean[j] = first;
                scale[j] = SCALE_FLOOR;
                continue;
            }
            let m = col().sum::<f64>() / n as f64;
            let var = col().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean[j] = m;
            scale[j] = var.sqrt().max(SCALE_FLOOR);
        }
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (x - m) / s;
        }
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        self.check_dim(features.cols())?;
        let mut out = features.clone();
        for i in 0..features.rows() {
            self.transform_row(features.row(i), out.row_mut(i));
        }
        Ok(out)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// The regularized logistic objective over `(w, b)`, packed as `[w.., b]`.
pub struct LogisticObjective<'a> {
    features: &'a Matrix,
    signs: Vec<f64>,
    c: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(features: &'a Matrix, labels: &[bool], c: f64) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("regularization c must be positive, got {c}")));
        }
        let signs = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        Ok(Self { features, signs, c })
    }

    pub fn num_params(&self) -> usize {
        self.features.cols() + 1
    }

    fn margins(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = params.split_at(self.features.cols());
        self.features
            .iter_rows()
            .zip(&self.signs)
            .map(|(x, y)| y * (dot(w, x) + b[0]))
            .collect()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let w = &params[..self.features.cols()];
        let loss: f64 = self.margins(params).iter().map(|m| softplus(-m)).sum();
        0.5 * dot(w, w) + self.c * loss
    }

    /// Per-example derivative weights `c·yᵢ·σ(−mᵢ)` (negated gradient coefficients)
    /// and curvatures `c·σ(mᵢ)σ(−mᵢ)` at `params`.
    fn coefficients(&self, params: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let margins = self.margins(params);
        let grad = margins
            .iter()
            .zip(&self.signs)
            .map(|(m, y)| self.c * y * sigmoid(-m))
            .collect();
        let curv = margins
            .iter()
            .map(|m| self.c * sigmoid(*m) * sigmoid(-m))
            .collect();
        (grad, curv)
    }

    fn gradient_from(&self, params: &[f64], coef: &[f64]) -> Vec<f64> {
        let d = self.features.cols();
        let mut g = params.to_vec();
        g[d] = 0.0;
        for (x, a) in self.features.iter_rows().zip(coef) {
            for (gj, xj) in g[..d].iter_mut().zip(x) {
                *gj -= a * xj;
            }
            g[d] -= a;
        }
        g
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let (coef, _) = self.coefficients(params);
        self.gradient_from(params, &coef)
    }

    fn hessian_vector(&self, curv: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.features.cols();
        let mut out = v.to_vec();
        out[d] = 0.0;
        for (x, s) in self.features.iter_rows().zip(curv) {
            let t = s * (dot(&v[..d], x) + v[d]);
            for (oj, xj) in out[..d].iter_mut().zip(x) {
                *oj += t * xj;
            }
            out[d] += t;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub gradient_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Conjugate gradient for `H p = −g`, stopping at relative residual `tol`.
fn solve_newton_direction(obj: &LogisticObjective<'_>, curv: &[f64], g: &[f64], tol: f64) -> Vec<f64> {
    let n = g.len();
    let mut p = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut dir = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * rr.sqrt();
    for _ in 0..(2 * n).max(20) {
        if rr.sqrt() <= stop {
            break;
        }
        let hd = obj.hessian_vector(curv, &dir);
        let dhd = dot(&dir, &hd);
        if dhd <= 0.0 {
            break;
        }
        let step = rr / dhd;
        for i in 0..n {
            p[i] += step * dir[i];
            r[i] -= step * hd[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            dir[i] = r[i] + beta * dir[i];
        }
    }
    if p.iter().all(|x| *x == 0.0) {
        // CG made no progress; fall back to steepest descent.
        return g.iter().map(|x| -x).collect();
    }
    p
}

/// Minimizes the regularized logistic objective from `(w, b) = 0`.
///
/// Requires both classes. Non-convergence within [`MAX_ITERATIONS`] is logged
/// as a warning and the last iterate is returned with `converged = false`.
pub fn fit_logistic(features: &Matrix, labels: &[bool], c: f64) -> Result<LogisticFit> {
    if labels.iter().all(|l| *l) || labels.iter().all(|l| !*l) {
        return Err(Error::SingleClass);
    }
    let obj = LogisticObjective::new(features, labels, c)?;
    let mut params = vec![0.0; obj.num_params()];
    let mut value = obj.value(&params);
    let mut iterations = 0;
    let mut stalled = false;
    let (coef, mut curv) = obj.coefficients(&params);
    let mut grad = obj.gradient_from(&params, &coef);

    while inf_norm(&grad) > GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let gnorm = dot(&grad, &grad).sqrt();
        let tol = gnorm.sqrt().min(0.5);
        let dir = solve_newton_direction(&obj, &curv, &grad, tol);
        let slope = dot(&grad, &dir);
        let dir = if slope < 0.0 { dir } else { grad.iter().map(|x| -x).collect() };
        let slope = dot(&grad, &dir);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let v = obj.value(&trial);
            if v < value + 1e-4 * step * slope {
                accepted = Some((trial, v));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v)) = accepted else {
            // At the floating-point floor the Armijo test can no longer be met;
            // keep the full Newton step only if it still shrinks the gradient.
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + d).collect();
            let (c2, s2) = obj.coefficients(&trial);
            let g2 = obj.gradient_from(&trial, &c2);
            if inf_norm(&g2) < inf_norm(&grad) {
                value = obj.value(&trial);
                params = trial;
                curv = s2;
                grad = g2;
                continue;
            }
            stalled = true;
            break;
        };
        params = trial;
        value = v;
        let (c2, s2) = obj.coefficients(&params);
        curv = s2;
        grad = obj.gradient_from(&params, &c2);
    }

    let gradient_inf_norm = inf_norm(&grad);
    let converged = gradient_inf_norm <= GRADIENT_TOLERANCE;
    if !converged {
        log::warn!(
            "logistic fit did not reach gradient tolerance: |g|∞ = {gradient_inf_norm:e} after {iterations} iterations{}",
            if stalled { " (line search stalled)" } else { "" }
        );
    }
    let bias = params.pop().unwrap_or(0.0);
    Ok(LogisticFit {
        weights: params,
        bias,
        objective: value,
        gradient_inf_norm,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTarget {
    /// Positive class: the answer was judged correct.
    Correctness,
    /// Positive class: semantic entropy strictly above the training median.
    BinarizedSe,
}

impl ProbeTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeTarget::Correctness => "correctness",
            ProbeTarget::BinarizedSe => "binarized_se",
        }
    }
}

/// Standardizer plus logistic weights; persisted as
/// `{target, layer, c, mean, scale, weights, bias}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub target: ProbeTarget,
    pub layer: usize,
    pub c: f64,
    #[serde(flatten)]
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearProbe {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Logit `w·standardize(x) + b` for one row.
    pub fn logit_row(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for (((x, m), s), w) in row
            .iter()
            .zip(&self.standardizer.mean)
            .zip(&self.standardizer.scale)
            .zip(&self.weights)
        {
            z += w * ((x - m) / s);
        }
        z
    }

    pub fn logits(&self, features: &Matrix) -> Result<Vec<f64>> {
        self.standardizer.check_dim(features.cols())?;
        Ok(features.iter_rows().map(|r| self.logit_row(r)).collect())
    }

    /// Predicted probability of the positive class.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        Ok(self.logits(features)?.into_iter().map(sigmoid).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.standardizer.mean.len() != p.weights.len() || p.standardizer.scale.len() != p.weights.len() {
            return Err(Error::invalid("probe mean/scale/weights lengths differ"));
        }
        if p.standardizer.scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("probe scale entries must be positive"));
        }
        if !(p.c > 0.0) {
            return Err(Error::invalid("probe c must be positive"));
        }
        Ok(p)
    }
}

/// Fits the standardizer on `features`, then the logistic model on the
/// standardized features.
pub fn train_probe(features: &Matrix, labels: &[bool], c: f64, layer: usize, target: ProbeTarget) -> Result<LinearProbe> {
    let standardizer = Standardizer::fit(features)?;
    let z = standardizer.transform(features)?;
    let fit = fit_logistic(&z, labels, c)?;
    Ok(LinearProbe {
        target,
        layer,
        c,
        standardizer,
        weights: fit.weights,
        bias: fit.bias,
    })
}

/// Converts a probability of correctness into a risk: `1 − p`.
pub fn pc_risk(p_correct: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_correct) {
        return Err(Error::invalid(format!("probability {p_correct} outside [0, 1]")));
    }
    Ok(1.0 - p_correct)
}

/// Stratified fold index per example.
///
/// Within each class, indices are shuffled with `rng::seeded(seed, CV_FOLDS)`
/// (negatives first, then positives, from one generator) and dealt out
/// round-robin. If the rarer class has fewer than `folds` members the fold
/// count shrinks to that size; fewer than two is an error.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<(Vec<usize>, usize)> {
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let k = folds.min(positives.len()).min(negatives.len());
    if k < 2 {
        return Err(Error::invalid(format!(
            "cannot build stratified folds: {} positives, {} negatives",
            positives.len(),
            negatives.len()
        )));
    }
    if k < folds {
        log::warn!("reducing cross-validation folds from {folds} to {k}: rarer class too small");
    }
    let mut r = rng::seeded(seed, rng::streams::CV_FOLDS);
    let mut assignment = vec![0; labels.len()];
    for mut class in [negatives, positives] {
        rng::shuffle(&mut r, &mut class);
        for (pos, i) in class.into_iter().enumerate() {
            assignment[i] = pos % k;
        }
    }
    Ok((assignment, k))
}

/// Out-of-fold predicted probabilities: each fold is scored by a probe fitted
/// (standardizer included) on the remaining folds only.
pub fn cross_validated_predictions(features: &Matrix, labels: &[bool], fold_of: &[usize], folds: usize, c: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; labels.len()];
    for f in 0..folds {
        let (val, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
        let train_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let probe = train_probe(&features.select_rows(&train), &train_labels, c, 0, ProbeTarget::Correctness)?;
        let preds = probe.predict(&features.select_rows(&val))?;
        for (i, p) in val.into_iter().zip(preds) {
            out[i] = p;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSelection {
    pub chosen_layer: usize,
    /// Mean validation AUROC per layer.
    pub cv_scores: BTreeMap<usize, f64>,
}

/// Picks the layer with the best mean validation AUROC under stratified
/// k-fold CV (ties → lowest layer index), then refits on all rows at that layer.
pub fn select_layer(
    layers: &BTreeMap<usize, Matrix>,
    labels: &[bool],
    target: ProbeTarget,
    folds: usize,
    c: f64,
    seed: u64,
) -> Result<(LayerSelection, LinearProbe)> {
    if layers.is_empty() {
        return Err(Error::invalid("no hidden-state layers to select from"));
    }
    let (fold_of, k) = stratified_folds(labels, folds, seed)?;
    let scored: Vec<(usize, f64)> = layers
        .par_iter()
        .map(|(&layer, x)| {
            let mut total = 0.0;
            for f in 0..k {
                let (val, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
                let tl: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
                let vl: Vec<bool> = val.iter().map(|&i| labels[i]).collect();
                let probe = train_probe(&x.select_rows(&train), &tl, c, layer, target)?;
                let preds = probe.predict(&x.select_rows(&val))?;
                total += metrics::auroc(&preds, &vl)?;
            }
            Ok((layer, total / k as f64))
        })
        .collect::<Result<_>>()?;
    let cv_scores: BTreeMap<usize, f64> = scored.into_iter().collect();
    let mut chosen_layer = *cv_scores.keys().next().unwrap_or(&0);
    let mut best = f64::NEG_INFINITY;
    for (&layer, &score) in &cv_scores {
        if score > best {
            best = score;
            chosen_layer = layer;
        }
    }
    let probe = train_probe(&layers[&chosen_layer], labels, c, chosen_layer, target)?;
    Ok((LayerSelection { chosen_layer, cv_scores }, probe))
}

/// Per-layer feature matrices for `indices` into `records`.
pub fn layer_matrices(records: &[GenerationRecord], indices: &[usize]) -> Result<BTreeMap<usize, Matrix>> {
    let Some(first) = indices.first() else {
        return Ok(BTreeMap::new());
    };
    records[*first]
        .hidden_states
        .keys()
        .map(|&layer| {
            let rows: Vec<&[f64]> = indices
                .iter()
                .map(|&i| {
                    records[i]
                        .hidden_states
                        .get(&layer)
                        .map(Vec::as_slice)
                        .ok_or_else(|| Error::invalid(format!("record {:?} lacks layer {layer}", records[i].id)))
                })
                .collect::<Result<_>>()?;
            Ok((layer, Matrix::from_rows(&rows)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed, 99);
        let data = (0..n * d).map(|_| rng::unit(&mut r) * 4.0 - 1.0 + (r.next_u32() % 3) as f64).collect();
        Matrix::from_row_major(n, d, data).unwrap()
    }

    #[test]
    fn standardizer_hand_example() {
        let s = Standardizer::fit(&m(&[&[0.0, 2.0], &[2.0, 4.0]])).unwrap();
        assert_eq!(s.mean, vec![1.0, 3.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert!(Standardizer::fit(&m(&[&[1.0]])).is_err());
    }

    #[test]
    fn constant_column_is_inert() {
        let x = m(&[&[0.1, 1.0], &[0.1, 2.0], &[0.1, 5.0]]);
        let s = Standardizer::fit(&x).unwrap();
        assert_eq!(s.scale[0], SCALE_FLOOR);
        let z = s.transform(&x).unwrap();
        assert!(z.iter_rows().all(|r| r[0] == 0.0));
    }

    #[test]
    fn standardized_moments() {
        let x = random_matrix(100, 8, 4);
        let z = Standardizer::fit(&x).unwrap().transform(&x).unwrap();
        for j in 0..8 {
            let mean = z.iter_rows().map(|r| r[j]).sum::<f64>() / 100.0;
            let var = z.iter_rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 100.0;
            assert!(mean.abs() <= 1e-10);
            assert!((var - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn separable_symmetric_data() {
        let x = m(&[&[-1.0], &[1.0]]);
        let fit = fit_logistic(&x, &[false, true], 0.1).unwrap();
        assert!(fit.converged);
        assert!(fit.weights[0] > 0.0);
        assert!(fit.bias.abs() < 1e-9);
    }

    #[test]
    fn uninformative_features() {
        // Every feature value appears equally often in both classes.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for v in [-1.0, 0.0, 2.0] {
            for l in [true, true, true, false] {
                rows.push(vec![v]);
                labels.push(l);
            }
        }
        let fit = fit_logistic(&Matrix::from_rows(&rows).unwrap(), &labels, 0.1).unwrap();
        assert!(fit.weights[0].abs() < 1e-9);
        assert!((sigmoid(fit.bias) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn single_class_rejected() {
        let x = m(&[&[1.0], &[2.0]]);
        assert!(matches!(fit_logistic(&x, &[true, true], 0.1), Err(Error::SingleClass)));
        assert!(LogisticObjective::new(&x, &[true, false], 0.0).is_err());
    }

    #[test]
    fn predict_examples() {
        let probe = LinearProbe {
            target: ProbeTarget::Correctness,
            layer: 0,
            c: 0.1,
            standardizer: Standardizer { mean: vec![0.0, 0.0], scale: vec![1.0, 1.0] },
            weights: vec![0.0, 0.0],
            bias: 0.0,
        };
        let x = m(&[&[3.0, -2.0], &[0.0, 9.0]]);
        assert_eq!(probe.predict(&x).unwrap(), vec![0.5, 0.5]);
        let probe = LinearProbe { weights: vec![1.0, 0.0], bias: 3f64.ln() - 2.0, ..probe };
        let p = probe.predict(&m(&[&[2.0, 7.0]])).unwrap()[0];
        assert!((p - 0.75).abs() < 1e-15);
        assert!(matches!(probe.predict(&m(&[&[1.0]])), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn pc_risk_examples() {
        assert_eq!(pc_risk(1.0).unwrap(), 0.0);
        assert_eq!(pc_risk(0.25).unwrap(), 0.75);
        assert_eq!(pc_risk(pc_risk(0.3).unwrap()).unwrap(), 1.0 - (1.0 - 0.3));
        assert!(pc_risk(1.5).is_err());
        assert!(pc_risk(f64::NAN).is_err());
    }

    #[test]
    fn folds_are_stratified_and_shrink() {
        let labels: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let (folds, k) = stratified_folds(&labels, 5, 1).unwrap();
        assert_eq!(k, 5);
        for f in 0..5 {
            assert_eq!((0..50).filter(|&i| folds[i] == f && labels[i]).count(), 2);
        }
        let rare: Vec<bool> = (0..20).map(|i| i < 3).collect();
        assert_eq!(stratified_folds(&rare, 5, 1).unwrap().1, 3);
        let one: Vec<bool> = (0..20).map(|i| i < 1).collect();
        assert!(stratified_folds(&one, 5, 1).is_err());
    }

    #[test]
    fn out_of_fold_predictions_do_not_see_their_fold() {
        let x = random_matrix(60, 3, 8);
        let labels: Vec<bool> = x.iter_rows().map(|r| r[0] + 0.3 * r[1] > 1.0).collect();
        let (folds, k) = stratified_folds(&labels, 5, 2).unwrap();
        let oof = cross_validated_predictions(&x, &labels, &folds, k, 0.1).unwrap();
        for f in 0..k {
            let keep: Vec<usize> = (0..60).filter(|&i| folds[i] != f).collect();
            let held: Vec<usize> = (0..60).filter(|&i| folds[i] == f).collect();
            let kl: Vec<bool> = keep.iter().map(|&i| labels[i]).collect();
            let probe = train_probe(&x.select_rows(&keep), &kl, 0.1, 0, ProbeTarget::Correctness).unwrap();
            let p = probe.predict(&x.select_rows(&held)).unwrap();
            for (i, pi) in held.iter().zip(p) {
                assert_eq!(oof[*i].to_bits(), pi.to_bits());
            }
        }
    }

    #[test]
    fn identical_layers_pick_lowest() {
        let x = random_matrix(80, 4, 3);
        let labels: Vec<bool> = x.iter_rows().map(|r| r[1] > 1.0).collect();
        let layers = BTreeMap::from([(7, x.clone()), (2, x.clone()), (5, x)]);
        let (sel, probe) = select_layer(&layers, &labels, ProbeTarget::Correctness, 5, 0.1, 0).unwrap();
        assert_eq!(sel.chosen_layer, 2);
        assert_eq!(probe.layer, 2);
        let (again, _) = select_layer(&layers, &labels, ProbeTarget::Correctness, 5, 0.1, 0).unwrap();
        assert_eq!(sel, again);
    }

    #[test]
    fn probe_json_rejects_bad_shapes() {
        let text = r#"{"target":"correctness","layer":1,"c":0.1,"mean":[0.0],"scale":[1.0,1.0],"weights":[1.0],"bias":0.0}"#;
        assert!(LinearProbe::from_json(text).is_err());
        let text = r#"{"target":"binarized_se","layer":1,"c":0.1,"mean":[0.0],"scale":[1.0],"weights":[1.0],"bias":0.0}"#;
        assert_eq!(LinearProbe::from_json(text).unwrap().target, ProbeTarget::BinarizedSe);
    }
}
