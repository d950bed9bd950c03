//! Detection and selective-prediction metrics.
//!
//! Throughout, `labels[i] == true` marks the positive class. For risk scores
//! that is a hallucination, so higher risk should rank positives first.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{self, calibrate_threshold, cumulative_by_threshold, selective_risk, SelectivePolicy};
use crate::rng;

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|l| **l).count();
    (pos, labels.len() - pos)
}

/// 1-based mid-ranks: tied values share the average of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end, averaged.
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Probability that a random positive outranks a random negative, ties ½
/// (Mann–Whitney U over mid-ranks).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    policy::check_scores(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, l)| **l).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Average precision `Σ (R_k − R_{k−1}) · P_k` over descending score
/// thresholds, tied scores entering together.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    policy::check_scores(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::invalid("average precision needs at least one positive"));
    }
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    let mut ap = 0.0;
    let mut prev_tp = 0;
    for (_, m, tp) in cumulative_by_threshold(&negated, labels) {
        if tp > prev_tp {
            ap += (tp - prev_tp) as f64 / pos as f64 * (tp as f64 / m as f64);
        }
        prev_tp = tp;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcPoint {
    pub coverage: f64,
    pub selective_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcCurve {
    /// One point per distinct risk value, coverage strictly increasing.
    pub points: Vec<RcPoint>,
    pub aurc: f64,
    pub oracle_aurc: f64,
    pub e_aurc: f64,
}

/// Step integral `Σ risk_k · Δcoverage_k` over cumulative `(answered, hallucinated)` counts.
fn step_aurc(cumulative: impl Iterator<Item = (usize, usize)>, n: usize) -> f64 {
    let mut area = 0.0;
    let mut prev = 0;
    for (m, h) in cumulative {
        area += selective_risk(h, m) * ((m - prev) as f64 / n as f64);
        prev = m;
    }
    area
}

/// AURC of the ranking that admits every correct example before any hallucination.
pub fn oracle_aurc(labels: &[bool]) -> f64 {
    let n = labels.len();
    let (pos, neg) = class_counts(labels);
    let steps = (1..=n).map(|m| (m, m.saturating_sub(neg).min(pos)));
    step_aurc(steps, n)
}

/// Risk-coverage curve from an ascending sweep over distinct risk values.
pub fn rc_curve(risks: &[f64], hallucinated: &[bool]) -> Result<RcCurve> {
    if risks.is_empty() {
        return Err(Error::invalid("risk-coverage curve of zero examples"));
    }
    policy::check_scores(risks, hallucinated)?;
    let n = risks.len();
    let cum = cumulative_by_threshold(risks, hallucinated);
    let points = cum
        .iter()
        .map(|&(_, m, h)| RcPoint {
            coverage: m as f64 / n as f64,
            selective_risk: selective_risk(h, m),
        })
        .collect();
    let aurc = step_aurc(cum.iter().map(|&(_, m, h)| (m, h)), n);
    let oracle = oracle_aurc(hallucinated);
    Ok(RcCurve {
        points,
        aurc,
        oracle_aurc: oracle,
        e_aurc: (aurc - oracle).max(0.0),
    })
}

/// Rule for alphas where the calibrated policy answers nothing on the test split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCoverageFallback {
    /// Every zero-coverage alpha uses the test base hallucination rate.
    #[default]
    PerAlpha,
    /// Only when coverage is zero at every alpha does the base rate replace the
    /// realized risk; otherwise an empty answered set counts as risk 0.
    WholeRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcePoint {
    pub alpha: f64,
    #[serde(with = "crate::policy::extended_f64")]
    pub tau: f64,
    pub test_coverage: f64,
    pub realized_risk: f64,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TceOutcome {
    pub tce: f64,
    pub points: Vec<TcePoint>,
}

/// Evenly spaced target risks `min, min+step, …, max` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 0.30,
            step: 0.01,
        }
    }
}

impl AlphaGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max < 1.0 && self.min <= self.max && self.step > 0.0) {
            return Err(Error::invalid(format!("invalid alpha grid {self:?}")));
        }
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        Ok((0..=count)
            .map(|i| ((self.min + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

/// One calibrated policy per alpha, fitted on the calibration split.
pub fn calibrate_grid(name: &str, cal_risks: &[f64], cal_hallucinated: &[bool], alphas: &[f64]) -> Result<Vec<SelectivePolicy>> {
    if alphas.is_empty() {
        return Err(Error::invalid("empty alpha grid"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::invalid(format!("alpha {a} outside (0, 1)")));
    }
    alphas
        .iter()
        .map(|&a| calibrate_threshold(name, cal_risks, cal_hallucinated, a))
        .collect()
}

/// TCE of already-calibrated policies on a test split.
pub fn tce_with_policies(
    policies: &[SelectivePolicy],
    test_risks: &[f64],
    test_hallucinated: &[bool],
    fallback: ZeroCoverageFallback,
) -> Result<TceOutcome> {
    if test_risks.is_empty() {
        return Err(Error::invalid("TCE needs a non-empty test split"));
    }
    if policies.is_empty() {
        return Err(Error::invalid("empty alpha grid"));
    }
    policy::check_scores(test_risks, test_hallucinated)?;
    let base_rate = class_counts(test_hallucinated).0 as f64 / test_risks.len() as f64;
    let evaluated: Vec<(f64, f64)> = policies
        .iter()
        .map(|p| p.evaluate(test_risks, test_hallucinated))
        .collect();
    let all_empty = evaluated.iter().all(|(cov, _)| *cov == 0.0);
    let mut points = Vec::with_capacity(policies.len());
    let mut total = 0.0;
    for (p, (coverage, risk)) in policies.iter().zip(evaluated) {
        let fell_back = coverage == 0.0
            && match fallback {
                ZeroCoverageFallback::PerAlpha => true,
                ZeroCoverageFallback::WholeRange => all_empty,
            };
        let realized = if fell_back { base_rate } else { risk };
        total += (realized - p.target_alpha).abs();
        points.push(TcePoint {
            alpha: p.target_alpha,
            tau: p.tau,
            test_coverage: coverage,
            realized_risk: realized,
            fell_back,
        });
    }
    Ok(TceOutcome {
        tce: total / policies.len() as f64,
        points,
    })
}

/// Target calibration error: mean over `alphas` of `|R_test(α) − α|`, where
/// the threshold for each α is calibrated on the calibration split.
pub fn tce(
    cal_risks: &[f64],
    cal_hallucinated: &[bool],
    test_risks: &[f64],
    test_hallucinated: &[bool],
    alphas: &[f64],
    fallback: ZeroCoverageFallback,
) -> Result<TceOutcome> {
    let policies = calibrate_grid("score", cal_risks, cal_hallucinated, alphas)?;
    tce_with_policies(&policies, test_risks, test_hallucinated, fallback)
}

/// Spearman rank correlation: Pearson correlation of mid-ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewRecords { required: 2, got: a.len() });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in rank correlation input"));
    }
    pearson(&midranks(a), &midranks(b))
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("rank correlation undefined for a constant input"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
}

pub const BOOTSTRAP_MAX_REDRAWS: usize = 1000;

/// Resample indices for bootstrap iteration `iteration`.
///
/// Drawn from `rng::seeded(seed, BOOTSTRAP_BASE + iteration)`, so every
/// iteration is reproducible on its own. With `labels`, resamples lacking
/// either class are redrawn from the same generator.
pub fn resample_indices(n: usize, iteration: usize, seed: u64, labels: Option<&[bool]>) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("bootstrap over zero examples"));
    }
    let mut r = rng::seeded(seed, rng::streams::BOOTSTRAP_BASE + iteration as u64);
    for _ in 0..BOOTSTRAP_MAX_REDRAWS {
        let idx: Vec<usize> = (0..n).map(|_| rng::index(&mut r, n)).collect();
        match labels {
            Some(l) => {
                let pos = idx.iter().filter(|&&i| l[i]).count();
                if pos > 0 && pos < n {
                    return Ok(idx);
                }
            }
            None => return Ok(idx),
        }
    }
    Err(Error::invalid(format!(
        "bootstrap iteration {iteration}: no two-class resample in {BOOTSTRAP_MAX_REDRAWS} draws"
    )))
}

/// Metric value per bootstrap iteration, in iteration order.
pub fn bootstrap_samples<F>(n: usize, iterations: usize, seed: u64, labels: Option<&[bool]>, metric: F) -> Result<Vec<f64>>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: l.len() });
        }
    }
    (0..iterations)
        .into_par_iter()
        .map(|i| metric(&resample_indices(n, i, seed, labels)?))
        .collect()
}

/// Mean and population standard deviation of a resampled metric.
///
/// Iterations run in parallel but are reduced in index order, so the result
/// is bit-identical under any schedule. Pass `labels` for metrics that need
/// both classes present.
pub fn bootstrap<F>(n: usize, iterations: usize, seed: u64, labels: Option<&[bool]>, metric: F) -> Result<Estimate>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if iterations == 0 {
        return Err(Error::invalid("bootstrap needs at least one iteration"));
    }
    Ok(summarize(&bootstrap_samples(n, iterations, seed, labels, metric)?))
}

pub fn summarize(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Estimate { mean, std: var.sqrt() }
}

/// Settings a [`MetricReport`] was computed under; reports are only
/// comparable when these match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub alpha: AlphaGrid,
    pub bootstrap_iters: usize,
    pub fallback: ZeroCoverageFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub dataset: String,
    pub method: String,
    pub auroc: Estimate,
    pub auprc: Estimate,
    pub e_aurc: Estimate,
    pub tce: Estimate,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub spearman_vs: BTreeMap<String, f64>,
    pub base_accuracy: f64,
    pub grid: MetricGrid,
}

impl MetricReport {
    pub const METRICS: [&'static str; 4] = ["auroc", "auprc", "e_aurc", "tce"];

    pub fn metric(&self, name: &str) -> Option<Estimate> {
        match name {
            "auroc" => Some(self.auroc),
            "auprc" => Some(self.auprc),
            "e_aurc" => Some(self.e_aurc),
            "tce" => Some(self.tce),
            _ => None,
        }
    }

    /// Whether larger values are better for `name`.
    pub fn higher_is_better(name: &str) -> bool {
        matches!(name, "auroc" | "auprc")
    }
}
