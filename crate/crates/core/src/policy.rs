//! Answer/abstain policies calibrated to a target hallucination rate.
//!
//! A policy answers iff `risk ≤ tau`. Calibration picks the largest observed
//! risk value whose answered set on the calibration split has a
//! hallucination rate at most `alpha`, or `tau = −∞` when none does. The rate
//! of an empty answered set is taken as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStats {
    pub coverage: f64,
    pub selective_risk: f64,
}

/// Persisted as `{score_name, tau, target_alpha, calibration_stats}`.
/// Infinite thresholds are written as the strings `"-inf"` / `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectivePolicy {
    pub score_name: String,
    #[serde(with = "extended_f64")]
    pub tau: f64,
    pub target_alpha: f64,
    pub calibration_stats: CalibrationStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Answer,
    Abstain,
}

pub(crate) mod extended_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else if *v > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else if *v < 0.0 {
            Repr::Text("-inf".into()).serialize(s)
        } else {
            Err(serde::ser::Error::custom("NaN threshold"))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(D::Error::custom(format!("invalid threshold {t:?}"))),
        }
    }
}

/// Hallucination rate among `answered` examples, 0 for an empty set.
pub fn selective_risk(hallucinated: usize, answered: usize) -> f64 {
    if answered == 0 {
        0.0
    } else {
        hallucinated as f64 / answered as f64
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("target alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

pub(crate) fn check_scores(risks: &[f64], labels: &[bool]) -> Result<()> {
    if risks.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: risks.len(),
            got: labels.len(),
        });
    }
    if let Some(r) = risks.iter().find(|r| r.is_nan()) {
        return Err(Error::invalid(format!("risk score {r} is not a number")));
    }
    Ok(())
}

/// Risk values sorted ascending with cumulative `(answered, hallucinated)`
/// counts after each group of ties.
pub(crate) fn cumulative_by_threshold(risks: &[f64], hallucinated: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..risks.len()).collect();
    order.sort_by(|&a, &b| risks[a].total_cmp(&risks[b]));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut m, mut h) = (0, 0);
    for (pos, &i) in order.iter().enumerate() {
        m += 1;
        h += hallucinated[i] as usize;
        let last_of_group = order.get(pos + 1).is_none_or(|&j| risks[j] != risks[i]);
        if last_of_group {
            out.push((risks[i], m, h));
        }
    }
    out
}

/// Largest threshold meeting `alpha` on the calibration data.
///
/// `hallucinated[i]` is true when example `i`'s answer was wrong.
pub fn calibrate_threshold(score_name: &str, risks: &[f64], hallucinated: &[bool], alpha: f64) -> Result<SelectivePolicy> {
    if risks.is_empty() {
        return Err(Error::invalid("cannot calibrate on an empty calibration set"));
    }
    check_scores(risks, hallucinated)?;
    check_alpha(alpha)?;
    let n = risks.len();
    let (tau, m, h) = cumulative_by_threshold(risks, hallucinated)
        .into_iter()
        .rev()
        .find(|&(_, m, h)| selective_risk(h, m) <= alpha)
        .unwrap_or((f64::NEG_INFINITY, 0, 0));
    Ok(SelectivePolicy {
        score_name: score_name.to_string(),
        tau,
        target_alpha: alpha,
        calibration_stats: CalibrationStats {
            coverage: m as f64 / n as f64,
            selective_risk: selective_risk(h, m),
        },
    })
}

impl SelectivePolicy {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.tau.is_nan() {
            return Err(Error::invalid("policy threshold is NaN"));
        }
        Ok(p)
    }

    pub fn answers(&self, risk: f64) -> bool {
        risk <= self.tau
    }

    pub fn decide(&self, risk: f64) -> Decision {
        if self.answers(risk) {
            Decision::Answer
        } else {
            Decision::Abstain
        }
    }

    /// `(coverage, selective_risk)` of this policy on labelled data.
    pub fn evaluate(&self, risks: &[f64], hallucinated: &[bool]) -> (f64, f64) {
        let (mut m, mut h) = (0, 0);
        for (r, l) in risks.iter().zip(hallucinated) {
            if self.answers(*r) {
                m += 1;
                h += *l as usize;
            }
        }
        let coverage = if risks.is_empty() { 0.0 } else { m as f64 / risks.len() as f64 };
        (coverage, selective_risk(h, m))
    }
}

pub fn apply_policy(policy: &SelectivePolicy, risks: &[f64]) -> Vec<Decision> {
    risks.iter().map(|r| policy.decide(*r)).collect()
}
