//! Entropy-based risk scores.
//!
//! All logarithms are natural, so semantic entropy over `K` samples is
//! bounded by `ln K`.

use serde::{Deserialize, Serialize};

use crate::data::GenerationRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyKind {
    Nll,
    SemanticEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyScore {
    pub kind: EntropyKind,
    pub value: f64,
}

/// Partition of `K` samples into `C` non-empty semantic clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    cluster_of: Vec<usize>,
    num_clusters: usize,
}

impl ClusterAssignment {
    /// Validates that labels cover exactly `0..C` with every cluster used.
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        if cluster_of.is_empty() {
            return Err(Error::invalid("cluster assignment over zero samples"));
        }
        let num_clusters = cluster_of.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; num_clusters];
        for &c in &cluster_of {
            used[c] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::invalid("cluster labels must form a contiguous range 0..C-1"));
        }
        Ok(Self {
            cluster_of,
            num_clusters,
        })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn num_samples(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &c in &self.cluster_of {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Mean negative log-likelihood of the answer tokens.
pub fn sequence_nll(answer_token_logprobs: &[f64]) -> Result<EntropyScore> {
    if answer_token_logprobs.is_empty() {
        return Err(Error::invalid("sequence NLL of an empty token list"));
    }
    if let Some(lp) = answer_token_logprobs.iter().find(|lp| !(**lp <= 0.0)) {
        return Err(Error::invalid(format!("logprob {lp} must be ≤ 0")));
    }
    let sum: f64 = answer_token_logprobs.iter().sum();
    // `+ 0.0` folds a negative zero into positive zero.
    let value = -sum / answer_token_logprobs.len() as f64 + 0.0;
    Ok(EntropyScore {
        kind: EntropyKind::Nll,
        value,
    })
}

/// Greedy clustering by mutual entailment.
///
/// Samples are visited in order. Each joins the first existing cluster whose
/// representative (its first member) it mutually entails, or opens a new
/// cluster. When mutual entailment is not transitive the result depends on
/// sample order.
pub fn cluster_by_entailment(pairs: &[Vec<bool>]) -> Result<ClusterAssignment> {
    let k = pairs.len();
    if k == 0 {
        return Err(Error::invalid("empty entailment matrix"));
    }
    if let Some(row) = pairs.iter().find(|row| row.len() != k) {
        return Err(Error::invalid(format!(
            "entailment matrix is not square: {k} rows but a row of length {}",
            row.len()
        )));
    }
    if (0..k).any(|i| !pairs[i][i]) {
        return Err(Error::invalid("entailment matrix diagonal must be all true"));
    }
    let mut representatives: Vec<usize> = Vec::new();
    let mut cluster_of = Vec::with_capacity(k);
    for i in 0..k {
        let found = representatives
            .iter()
            .position(|&r| pairs[i][r] && pairs[r][i]);
        match found {
            Some(c) => cluster_of.push(c),
            None => {
                cluster_of.push(representatives.len());
                representatives.push(i);
            }
        }
    }
    ClusterAssignment::new(cluster_of)
}

/// Entropy of the cluster-assignment distribution `p_c = |c| / K`.
///
/// Evaluated as `ln K − (1/K) Σ n_c ln n_c`, which is exactly `ln K` for all
/// singletons, and clamped to `[0, ln K]` against rounding. Sizes are summed
/// in sorted order so the value depends only on the partition's shape.
pub fn semantic_entropy(assignment: &ClusterAssignment) -> EntropyScore {
    let k = assignment.num_samples() as f64;
    let ln_k = k.ln();
    let mut sizes = assignment.sizes();
    sizes.sort_unstable();
    let weighted: f64 = sizes
        .into_iter()
        .map(|n| {
            let n = n as f64;
            n * n.ln()
        })
        .sum();
    let value = (ln_k - weighted / k).clamp(0.0, ln_k);
    EntropyScore {
        kind: EntropyKind::SemanticEntropy,
        value,
    }
}

/// Cluster assignment for a record: stored `cluster_ids` win over entailment pairs.
pub fn record_clusters(record: &GenerationRecord) -> Result<ClusterAssignment> {
    match (&record.cluster_ids, &record.entailment_pairs) {
        (Some(ids), _) => ClusterAssignment::new(ids.clone()),
        (None, Some(pairs)) => cluster_by_entailment(pairs),
        (None, None) => Err(Error::invalid(format!(
            "record {:?} has neither cluster_ids nor entailment_pairs",
            record.id
        ))),
    }
}

pub fn record_semantic_entropy(record: &GenerationRecord) -> Result<f64> {
    record_clusters(record).map(|a| semantic_entropy(&a).value)
}

pub fn record_nll(record: &GenerationRecord) -> Result<f64> {
    sequence_nll(&record.answer_token_logprobs).map(|s| s.value)
}

/// Median of `values` (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("median of an empty list"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        (sorted[m - 1] + sorted[m]) / 2.0
    })
}

/// Binarizes semantic entropy around its median: label 1 iff strictly above.
pub fn binarize_se_targets(values: &[f64]) -> Result<(Vec<bool>, f64)> {
    let threshold = median(values)?;
    Ok((values.iter().map(|v| *v > threshold).collect(), threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(ids: &[usize]) -> ClusterAssignment {
        ClusterAssignment::new(ids.to_vec()).unwrap()
    }

    #[test]
    fn nll_examples() {
        assert_eq!(sequence_nll(&[-0.0]).unwrap().value.to_bits(), 0f64.to_bits());
        let half = 0.5f64.ln();
        assert!((sequence_nll(&[half, half]).unwrap().value - 2f64.ln()).abs() < 1e-15);
        assert!(sequence_nll(&[]).is_err());
        assert!(sequence_nll(&[-1.0, 0.2]).is_err());
    }

    #[test]
    fn clustering_examples() {
        let all = vec![vec![true; 10]; 10];
        assert_eq!(cluster_by_entailment(&all).unwrap().num_clusters(), 1);

        let ident: Vec<Vec<bool>> = (0..10).map(|i| (0..10).map(|j| i == j).collect()).collect();
        assert_eq!(cluster_by_entailment(&ident).unwrap().num_clusters(), 10);

        let blocks: Vec<Vec<bool>> = (0..10).map(|i| (0..10).map(|j| (i < 5) == (j < 5)).collect()).collect();
        let a = cluster_by_entailment(&blocks).unwrap();
        assert_eq!(a.cluster_of(), &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

        let ragged = vec![vec![true, true], vec![true]];
        assert!(cluster_by_entailment(&ragged).is_err());
    }

    #[test]
    fn one_way_entailment_does_not_merge() {
        // 0 entails 1 but not the reverse.
        let m = vec![vec![true, true], vec![false, true]];
        assert_eq!(cluster_by_entailment(&m).unwrap().num_clusters(), 2);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(semantic_entropy(&assign(&[0; 10])).value, 0.0);
        let two = assign(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert!((semantic_entropy(&two).value - 2f64.ln()).abs() < 1e-15);
        let uneven = assign(&[0, 0, 0, 0, 0, 0, 0, 1, 1, 2]);
        let expect = -(0.7f64 * 0.7f64.ln() + 0.2 * 0.2f64.ln() + 0.1 * 0.1f64.ln());
        assert!((semantic_entropy(&uneven).value - expect).abs() < 1e-14);
        assert!((expect - 0.8018).abs() < 1e-4);
        let singles = assign(&(0..10).collect::<Vec<_>>());
        assert_eq!(semantic_entropy(&singles).value, 10f64.ln());
    }

    #[test]
    fn invalid_assignments() {
        assert!(ClusterAssignment::new(vec![]).is_err());
        assert!(ClusterAssignment::new(vec![0, 2]).is_err());
    }

    #[test]
    fn binarize_examples() {
        let (labels, t) = binarize_se_targets(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(t, 0.5);
        assert_eq!(labels, vec![false, false, true, true]);

        let (labels, _) = binarize_se_targets(&[0.3; 7]).unwrap();
        assert!(labels.iter().all(|l| !l));

        let vals: Vec<f64> = (0..101).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let (labels, _) = binarize_se_targets(&vals).unwrap();
        assert_eq!(labels.iter().filter(|l| **l).count(), 50);

        assert!(binarize_se_targets(&[]).is_err());
    }

    #[test]
    fn record_clusters_prefers_ids() {
        let mut r = crate::data::tests::record("x", true);
        r.entailment_pairs = Some(vec![vec![true; 3]; 3]);
        assert_eq!(record_clusters(&r).unwrap().num_clusters(), 2);
        r.cluster_ids = None;
        assert_eq!(record_clusters(&r).unwrap().num_clusters(), 1);
    }
}
