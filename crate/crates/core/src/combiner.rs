//! Fusion of an entropy risk `u_ent` with the correctness-probe risk `u_pc`.
//!
//! Inputs are always the two features `[u_ent, u_pc]`, standardized with
//! statistics from the training rows. The output is the predicted
//! probability of hallucination and is used directly as the risk score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, softplus, Matrix};
use crate::probes::{fit_logistic, Standardizer};
use crate::rng;

pub const COMBINER_C: f64 = 0.1;
pub const MLP_WIDTH: usize = 8;
pub const MLP_EPOCHS: usize = 2000;
pub const MLP_LEARNING_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    Nll,
    SemanticEntropy,
    SeProbe,
}

impl EntropySource {
    pub const ALL: [EntropySource; 3] = [EntropySource::Nll, EntropySource::SemanticEntropy, EntropySource::SeProbe];

    /// Short method-name suffix: `nll`, `se`, `se_probe`.
    pub fn short_name(self) -> &'static str {
        match self {
            EntropySource::Nll => "nll",
            EntropySource::SemanticEntropy => "se",
            EntropySource::SeProbe => "se_probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CombinerModel {
    Logistic {
        weights: Vec<f64>,
        bias: f64,
    },
    Mlp {
        /// `hidden_weights[j]` holds the two input weights of unit `j`.
        hidden_weights: Vec<[f64; 2]>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    },
}

/// Persisted as `{kind, entropy_source, mean, scale, …parameters}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedScorer {
    pub entropy_source: EntropySource,
    #[serde(flatten)]
    pub standardizer: Standardizer,
    #[serde(flatten)]
    pub model: CombinerModel,
}

impl CombinedScorer {
    pub fn kind(&self) -> CombinerKind {
        match self.model {
            CombinerModel::Logistic { .. } => CombinerKind::Logistic,
            CombinerModel::Mlp { .. } => CombinerKind::Mlp,
        }
    }

    fn standardize(&self, u_ent: f64, u_pc: f64) -> [f64; 2] {
        let mut z = [0.0; 2];
        self.standardizer.transform_row(&[u_ent, u_pc], &mut z);
        z
    }

    pub fn logit(&self, u_ent: f64, u_pc: f64) -> f64 {
        let z = self.standardize(u_ent, u_pc);
        match &self.model {
            CombinerModel::Logistic { weights, bias } => dot(weights, &z) + bias,
            CombinerModel::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            } => {
                let mut out = *output_bias;
                for ((w, b), v) in hidden_weights.iter().zip(hidden_bias).zip(output_weights) {
                    out += v * (w[0] * z[0] + w[1] * z[1] + b).tanh();
                }
                out
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.standardizer.dim() != 2 || s.standardizer.scale.len() != 2 {
            return Err(Error::invalid("combiner standardizer must have exactly two features"));
        }
        let ok = match &s.model {
            CombinerModel::Logistic { weights, .. } => weights.len() == 2,
            CombinerModel::Mlp {
                hidden_weights,
                hidden_bias,
                output_weights,
                ..
            } => hidden_weights.len() == hidden_bias.len() && hidden_bias.len() == output_weights.len(),
        };
        if !ok {
            return Err(Error::invalid("combiner parameter shapes are inconsistent"));
        }
        Ok(s)
    }
}

/// Predicted hallucination probability for one example, in (0, 1).
pub fn combined_risk(scorer: &CombinedScorer, u_ent: f64, u_pc: f64) -> f64 {
    sigmoid(scorer.logit(u_ent, u_pc))
}

/// Fits a combiner on training rows. `hallucinated` is the target.
///
/// The logistic variant is the probe solver with `c = 0.1`; the MLP is one
/// tanh hidden layer trained by full-batch gradient descent on the mean
/// log-loss from a seeded Glorot-uniform initialization.
pub fn train_combiner(
    u_ent: &[f64],
    u_pc: &[f64],
    hallucinated: &[bool],
    kind: CombinerKind,
    entropy_source: EntropySource,
    seed: u64,
) -> Result<CombinedScorer> {
    if u_ent.len() != u_pc.len() || u_ent.len() != hallucinated.len() {
        return Err(Error::DimensionMismatch {
            expected: u_ent.len(),
            got: u_pc.len().min(hallucinated.len()),
        });
    }
    if hallucinated.iter().all(|l| *l) || hallucinated.iter().all(|l| !*l) {
        return Err(Error::SingleClass);
    }
    if u_ent.iter().chain(u_pc).any(|v| !v.is_finite()) {
        return Err(Error::invalid("combiner inputs must be finite"));
    }
    let data: Vec<f64> = u_ent.iter().zip(u_pc).flat_map(|(a, b)| [*a, *b]).collect();
    let x = Matrix::from_row_major(u_ent.len(), 2, data)?;
    let standardizer = Standardizer::fit(&x)?;
    let z = standardizer.transform(&x)?;
    let model = match kind {
        CombinerKind::Logistic => {
            let fit = fit_logistic(&z, hallucinated, COMBINER_C)?;
            CombinerModel::Logistic {
                weights: fit.weights,
                bias: fit.bias,
            }
        }
        CombinerKind::Mlp => train_mlp(&z, hallucinated, seed),
    };
    Ok(CombinedScorer {
        entropy_source,
        standardizer,
        model,
    })
}

fn train_mlp(z: &Matrix, labels: &[bool], seed: u64) -> CombinerModel {
    let h = MLP_WIDTH;
    let mut r = rng::seeded(seed, rng::streams::MLP_INIT);
    let mut uniform = |limit: f64| (2.0 * rng::unit(&mut r) - 1.0) * limit;
    let hidden_limit = (6.0 / (2 + h) as f64).sqrt();
    let output_limit = (6.0 / (h + 1) as f64).sqrt();
    let mut w1: Vec<[f64; 2]> = (0..h).map(|_| [uniform(hidden_limit), uniform(hidden_limit)]).collect();
    let mut b1 = vec![0.0; h];
    let mut w2: Vec<f64> = (0..h).map(|_| uniform(output_limit)).collect();
    let mut b2 = 0.0;

    let n = z.rows() as f64;
    let targets: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
    let mut act = vec![0.0; h];
    for _ in 0..MLP_EPOCHS {
        let mut g_w1 = vec![[0.0; 2]; h];
        let mut g_b1 = vec![0.0; h];
        let mut g_w2 = vec![0.0; h];
        let mut g_b2 = 0.0;
        for (x, t) in z.iter_rows().zip(&targets) {
            let mut out = b2;
            for j in 0..h {
                act[j] = (w1[j][0] * x[0] + w1[j][1] * x[1] + b1[j]).tanh();
                out += w2[j] * act[j];
            }
            let delta = sigmoid(out) - t;
            g_b2 += delta;
            for j in 0..h {
                g_w2[j] += delta * act[j];
                let back = delta * w2[j] * (1.0 - act[j] * act[j]);
                g_w1[j][0] += back * x[0];
                g_w1[j][1] += back * x[1];
                g_b1[j] += back;
            }
        }
        let step = MLP_LEARNING_RATE / n;
        for j in 0..h {
            w1[j][0] -= step * g_w1[j][0];
            w1[j][1] -= step * g_w1[j][1];
            b1[j] -= step * g_b1[j];
            w2[j] -= step * g_w2[j];
        }
        b2 -= step * g_b2;
    }
    CombinerModel::Mlp {
        hidden_weights: w1,
        hidden_bias: b1,
        output_weights: w2,
        output_bias: b2,
    }
}

/// Mean log-loss of a scorer on labelled rows.
pub fn mean_log_loss(scorer: &CombinedScorer, u_ent: &[f64], u_pc: &[f64], hallucinated: &[bool]) -> f64 {
    let total: f64 = u_ent
        .iter()
        .zip(u_pc)
        .zip(hallucinated)
        .map(|((a, b), l)| {
            let z = scorer.logit(*a, *b);
            if *l {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    total / u_ent.len() as f64
}
