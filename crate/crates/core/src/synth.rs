//! Seeded synthetic record sets with planted structure.
//!
//! A fraction of examples are "confidently wrong" candidates: all `K`
//! samples mutually entail, so semantic entropy is exactly zero regardless of
//! correctness. Correctness is linearly readable from the hidden features of
//! one designated layer; every other layer is pure noise.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{GenerationRecord, MIN_SPLIT_RECORDS};
use crate::entropy::{semantic_entropy, ClusterAssignment};
use crate::error::{Error, Result};
use crate::rng::{self, streams, ChaCha8Rng};

/// Mean per-token negative log-probability for correct answers.
pub const NLL_SCALE_CORRECT: f64 = 0.30;
/// Same for hallucinated answers; the gap sets the weak NLL signal.
pub const NLL_SCALE_HALLUCINATED: f64 = 0.36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub base_accuracy: f64,
    /// Fraction of examples whose samples all mutually entail.
    pub zero_entropy_fraction: f64,
    pub zero_entropy_hallucination_rate: f64,
    /// Distance between class means along the planted direction.
    pub pc_signal_strength: f64,
    pub feature_dim: usize,
    pub num_layers: usize,
    /// Defaults to `num_layers / 2`.
    pub informative_layer: Option<usize>,
    /// Shift along a second direction proportional to normalized SE, so
    /// that SE is predictable from the informative layer.
    pub se_signal_strength: f64,
    pub num_samples: usize,
    pub seed: u64,
    pub model: String,
    pub dataset: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            base_accuracy: 0.6,
            zero_entropy_fraction: 0.4,
            zero_entropy_hallucination_rate: 0.25,
            pc_signal_strength: 2.0,
            feature_dim: 16,
            num_layers: 4,
            informative_layer: None,
            se_signal_strength: 1.0,
            num_samples: 10,
            seed: 0,
            model: "synthetic-model".into(),
            dataset: "synthetic".into(),
        }
    }
}

impl SynthConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn informative_layer(&self) -> usize {
        self.informative_layer.unwrap_or(self.num_layers / 2)
    }

    /// Accuracy outside the zero-entropy subset that keeps the overall
    /// expected accuracy at `base_accuracy`, clamped to `[0, 1]`.
    pub fn nonzero_entropy_accuracy(&self) -> f64 {
        let f = self.zero_entropy_fraction;
        if f >= 1.0 {
            return self.base_accuracy;
        }
        ((self.base_accuracy - f * (1.0 - self.zero_entropy_hallucination_rate)) / (1.0 - f)).clamp(0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("base_accuracy", self.base_accuracy),
            ("zero_entropy_fraction", self.zero_entropy_fraction),
            ("zero_entropy_hallucination_rate", self.zero_entropy_hallucination_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.n < MIN_SPLIT_RECORDS {
            return Err(Error::TooFewRecords {
                required: MIN_SPLIT_RECORDS,
                got: self.n,
            });
        }
        for (name, v) in [
            ("pc_signal_strength", self.pc_signal_strength),
            ("se_signal_strength", self.se_signal_strength),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite value ≥ 0, got {v}")));
            }
        }
        if self.feature_dim < 2 {
            return Err(Error::invalid("feature_dim must be at least 2"));
        }
        if self.num_layers == 0 {
            return Err(Error::invalid("num_layers must be at least 1"));
        }
        if self.informative_layer() >= self.num_layers {
            return Err(Error::invalid(format!(
                "informative_layer {} is out of range for {} layers",
                self.informative_layer(),
                self.num_layers
            )));
        }
        if self.num_samples < 2 {
            return Err(Error::invalid("num_samples must be at least 2"));
        }
        Ok(())
    }
}

fn normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Two orthonormal directions: correctness, then semantic entropy.
fn planted_directions(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = normal_vector(rng, dim);
    normalize(&mut u);
    let mut v = normal_vector(rng, dim);
    let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(b, a)| *b -= proj * a);
    normalize(&mut v);
    (u, v)
}

/// Random partition of `k` samples into exactly `c` non-empty clusters,
/// labelled in order of first appearance.
fn random_partition(rng: &mut ChaCha8Rng, k: usize, c: usize) -> Vec<usize> {
    let mut raw: Vec<usize> = (0..k).map(|i| if i < c { i } else { rng::index(rng, c) }).collect();
    rng::shuffle(rng, &mut raw);
    let mut relabel = vec![usize::MAX; c];
    let mut next = 0;
    for x in raw.iter_mut() {
        if relabel[*x] == usize::MAX {
            relabel[*x] = next;
            next += 1;
        }
        *x = relabel[*x];
    }
    raw
}

pub fn generate(config: &SynthConfig) -> Result<Vec<GenerationRecord>> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed, streams::SYNTH);
    let k = config.num_samples;
    let ln_k = (k as f64).ln();
    let informative = config.informative_layer();
    let (pc_dir, se_dir) = planted_directions(&mut rng, config.feature_dim);
    let nonzero_accuracy = config.nonzero_entropy_accuracy();
    // Cluster-count ranges by correctness outside the zero-entropy subset.
    let correct_clusters = (2, (k / 2).max(2));
    let hallucinated_clusters = (3.min(k), k.saturating_sub(2).max(3.min(k)));

    let mut records = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let zero_entropy = rng::bernoulli(&mut rng, config.zero_entropy_fraction);
        let correct = if zero_entropy {
            !rng::bernoulli(&mut rng, config.zero_entropy_hallucination_rate)
        } else {
            rng::bernoulli(&mut rng, nonzero_accuracy)
        };

        let cluster_of = if zero_entropy {
            vec![0; k]
        } else {
            let (lo, hi) = if correct { correct_clusters } else { hallucinated_clusters };
            let c = lo + rng::index(&mut rng, hi - lo + 1);
            random_partition(&mut rng, k, c)
        };
        let se = semantic_entropy(&ClusterAssignment::new(cluster_of.clone())?).value;
        let entailment_pairs: Vec<Vec<bool>> = cluster_of
            .iter()
            .map(|a| cluster_of.iter().map(|b| a == b).collect())
            .collect();

        let num_tokens = 2 + rng::index(&mut rng, 7);
        let scale = if correct { NLL_SCALE_CORRECT } else { NLL_SCALE_HALLUCINATED };
        let answer_token_logprobs: Vec<f64> = (0..num_tokens)
            .map(|_| -scale * rng.sample::<f64, _>(Exp1) + 0.0)
            .collect();

        let pc_shift = if correct { 0.5 } else { -0.5 } * config.pc_signal_strength;
        let se_shift = config.se_signal_strength * (2.0 * se / ln_k - 1.0);
        let mut hidden_states = BTreeMap::new();
        for layer in 0..config.num_layers {
            let mut h = normal_vector(&mut rng, config.feature_dim);
            if layer == informative {
                for ((x, a), b) in h.iter_mut().zip(&pc_dir).zip(&se_dir) {
                    *x += pc_shift * a + se_shift * b;
                }
            }
            hidden_states.insert(layer, h);
        }

        let samples = cluster_of
            .iter()
            .enumerate()
            .map(|(j, c)| format!("sample {j} (meaning {c}) for question {i}"))
            .collect();
        records.push(GenerationRecord {
            id: format!("synth-{i:06}"),
            dataset: config.dataset.clone(),
            model: config.model.clone(),
            question: format!("synthetic question {i}"),
            answer: format!("synthetic answer {i}"),
            answer_token_logprobs,
            samples,
            cluster_ids: None,
            entailment_pairs: Some(entailment_pairs),
            hidden_states,
            correct,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::record_semantic_entropy;

    fn small(n: usize) -> SynthConfig {
        SynthConfig { n, ..SynthConfig::default() }
    }

    #[test]
    fn records_are_valid_and_deterministic() {
        let a = generate(&small(200)).unwrap();
        let b = generate(&small(200)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.violations().is_empty()));
        let c = generate(&SynthConfig { seed: 1, ..small(200) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_rates_near_config() {
        // Each seed is a binomial draw; allow one 3-sigma miss in ten.
        let mut within = 0;
        for seed in 0..10 {
            let cfg = SynthConfig { seed, ..small(1000) };
            let recs = generate(&cfg).unwrap();
            let n = recs.len() as f64;
            let acc = recs.iter().filter(|r| r.correct).count() as f64 / n;
            let zero = recs.iter().filter(|r| record_semantic_entropy(r).unwrap() == 0.0).count() as f64 / n;
            let sd = |p: f64| (p * (1.0 - p) / n).sqrt();
            let ok_acc = (acc - cfg.base_accuracy).abs() < 3.0 * sd(cfg.base_accuracy);
            let ok_zero = (zero - cfg.zero_entropy_fraction).abs() < 3.0 * sd(cfg.zero_entropy_fraction);
            within += (ok_acc && ok_zero) as usize;
        }
        assert!(within >= 9, "{within}/10 seeds within 3 sd");
    }

    #[test]
    fn all_zero_entropy() {
        let cfg = SynthConfig {
            zero_entropy_fraction: 1.0,
            ..small(50)
        };
        let recs = generate(&cfg).unwrap();
        for r in &recs {
            assert_eq!(record_semantic_entropy(r).unwrap(), 0.0);
            assert!(r.entailment_pairs.as_ref().unwrap().iter().flatten().all(|e| *e));
        }
    }

    #[test]
    fn partition_uses_every_cluster() {
        let mut rng = rng::seeded(3, 0);
        for c in 1..=10 {
            let p = random_partition(&mut rng, 10, c);
            assert_eq!(ClusterAssignment::new(p).unwrap().num_clusters(), c);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(generate(&SynthConfig { base_accuracy: 1.5, ..small(50) }).is_err());
        assert!(generate(&small(19)).is_err());
        assert!(generate(&SynthConfig { informative_layer: Some(4), ..small(50) }).is_err());
        assert!(generate(&SynthConfig { pc_signal_strength: -1.0, ..small(50) }).is_err());
    }
}
