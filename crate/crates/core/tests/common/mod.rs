//! Brute-force reference implementations and random instance builders shared
//! by the integration tests. Nothing here calls into the library's metric code.

#![allow(dead_code)]

use rand::Rng;
use selrisk::rng::{seeded, ChaCha8Rng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    // Stream id far away from anything the library uses.
    seeded(seed, 0xBEEF)
}

/// Scores drawn from a small grid so ties are common, plus labels with both classes.
pub fn scored_instance(r: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    let levels = r.random_range(2..=n.max(3));
    loop {
        let labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        if labels.iter().any(|l| *l) && labels.iter().any(|l| !*l) {
            let scores = (0..n)
                .map(|i| {
                    let bump = if labels[i] { 0.5 } else { 0.0 };
                    (r.random_range(0..levels) as f64 + bump * r.random::<f64>()) / levels as f64
                })
                .collect();
            return (scores, labels);
        }
    }
}

/// Pairwise Mann–Whitney count.
pub fn brute_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Precision/recall at every distinct threshold, highest first.
pub fn brute_auprc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let pos = labels.iter().filter(|l| **l).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let flagged: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = flagged.iter().filter(|&&i| labels[i]).count() as f64;
        let recall = tp / pos;
        ap += (recall - prev_recall) * tp / flagged.len() as f64;
        prev_recall = recall;
    }
    ap
}

/// Average rank by counting smaller and equal values.
fn counted_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(a: &[f64], b: &[f64]) -> f64 {
    let (x, y) = (counted_ranks(a), counted_ranks(b));
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let sxx: f64 = x.iter().map(|p| p * p).sum();
    let syy: f64 = y.iter().map(|q| q * q).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Step-integral AURC by scanning every distinct threshold.
pub fn brute_aurc(risks: &[f64], hallucinated: &[bool]) -> f64 {
    let n = risks.len() as f64;
    let mut thresholds = risks.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev_cov = 0.0;
    for t in thresholds {
        let answered: Vec<usize> = (0..risks.len()).filter(|&i| risks[i] <= t).collect();
        let h = answered.iter().filter(|&&i| hallucinated[i]).count() as f64;
        let cov = answered.len() as f64 / n;
        area += h / answered.len() as f64 * (cov - prev_cov);
        prev_cov = cov;
    }
    area
}

/// Smallest AURC over every strict ordering of the examples.
pub fn permutation_min_aurc(hallucinated: &[bool]) -> f64 {
    let n = hallucinated.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        let mut ranks = vec![0.0; n];
        for (pos, &i) in order.iter().enumerate() {
            ranks[i] = pos as f64;
        }
        best = best.min(brute_aurc(&ranks, hallucinated));
        if !next_permutation(&mut order) {
            return best;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `½‖w‖² + c Σ ln(1 + exp(−yᵢ(w·xᵢ + b)))`, written out directly.
pub fn logistic_objective(x: &[Vec<f64>], y: &[bool], c: f64, params: &[f64]) -> f64 {
    let d = params.len() - 1;
    let reg: f64 = params[..d].iter().map(|w| w * w).sum::<f64>() / 2.0;
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &l)| {
            let z: f64 = row.iter().zip(params).map(|(a, w)| a * w).sum::<f64>() + params[d];
            let m = if l { z } else { -z };
            if m > 0.0 {
                (-m).exp().ln_1p()
            } else {
                -m + m.exp().ln_1p()
            }
        })
        .sum();
    reg + c * loss
}

/// Damped Newton with a dense Hessian and Gaussian elimination.
pub fn dense_newton_minimize(x: &[Vec<f64>], y: &[bool], c: f64) -> (Vec<f64>, f64) {
    let d = x[0].len();
    let p = d + 1;
    let mut params = vec![0.0; p];
    for _ in 0..200 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for j in 0..d {
            g[j] = params[j];
            h[j][j] = 1.0;
        }
        for (row, &l) in x.iter().zip(y) {
            let ext: Vec<f64> = row.iter().copied().chain([1.0]).collect();
            let z: f64 = ext.iter().zip(&params).map(|(a, w)| a * w).sum();
            let prob = 1.0 / (1.0 + (-z).exp());
            let target = if l { 1.0 } else { 0.0 };
            for a in 0..p {
                g[a] += c * (prob - target) * ext[a];
                for b in 0..p {
                    h[a][b] += c * prob * (1.0 - prob) * ext[a] * ext[b];
                }
            }
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-12 {
            break;
        }
        let step = solve(h, g.iter().map(|v| -v).collect());
        let f0 = logistic_objective(x, y, c, &params);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = params.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if logistic_objective(x, y, c, &trial) <= f0 || t < 1e-12 {
                params = trial;
                break;
            }
            t /= 2.0;
        }
    }
    let f = logistic_objective(x, y, c, &params);
    (params, f)
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * out[k]).sum();
        out[row] = (b[row] - s) / a[row][row];
    }
    out
}

/// Random features with a linear signal so the optimum is non-trivial.
pub fn logistic_instance(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let truth: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    loop {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-1.5..1.5)).collect()).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|row| {
                let z: f64 = row.iter().zip(&truth).map(|(a, w)| a * w).sum();
                r.random::<f64>() < 1.0 / (1.0 + (-z).exp())
            })
            .collect();
        if y.iter().any(|l| *l) && y.iter().any(|l| !*l) {
            return (x, y);
        }
    }
}

/// Random partition of `k` samples, labels relabelled by first appearance.
pub fn random_partition(r: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
    let classes = r.random_range(1..=k);
    let raw: Vec<usize> = (0..k).map(|_| r.random_range(0..classes)).collect();
    let mut seen: Vec<usize> = Vec::new();
    raw.iter()
        .map(|c| match seen.iter().position(|s| s == c) {
            Some(p) => p,
            None => {
                seen.push(*c);
                seen.len() - 1
            }
        })
        .collect()
}

/// Entailment matrix whose mutual-entailment relation is exactly `classes`;
/// some one-way entailments across classes are sprinkled in.
pub fn entailment_for(r: &mut ChaCha8Rng, classes: &[usize]) -> Vec<Vec<bool>> {
    let k = classes.len();
    let mut m: Vec<Vec<bool>> = (0..k).map(|i| (0..k).map(|j| classes[i] == classes[j]).collect()).collect();
    for i in 0..k {
        for j in 0..i {
            if classes[i] != classes[j] && r.random_bool(0.3) {
                if r.random_bool(0.5) {
                    m[i][j] = true;
                } else {
                    m[j][i] = true;
                }
            }
        }
    }
    m
}

/// `−Σ p ln p` over class frequencies.
pub fn plain_entropy(classes: &[usize]) -> f64 {
    let k = classes.len() as f64;
    let c = classes.iter().max().map_or(0, |m| m + 1);
    (0..c)
        .map(|label| classes.iter().filter(|x| **x == label).count() as f64 / k)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
