//! End-to-end evaluation: scores, probes, combiners, policies and metrics
//! for the seven-method matrix, plus the artifact files that carry them
//! between subcommands.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combiner::{combined_risk, train_combiner, CombinedScorer, CombinerKind, EntropySource};
use crate::config::Config;
use crate::data::{read_splits, GenerationRecord, SplitIndices};
use crate::entropy::{binarize_se_targets, record_nll, record_semantic_entropy};
use crate::error::{Error, Result};
use crate::linalg::sigmoid;
use crate::metrics::{
    auprc, auroc, bootstrap, calibrate_grid, rc_curve, spearman, tce_with_policies, Estimate, MetricReport, RcCurve,
    TceOutcome,
};
use crate::probes::{layer_matrices, pc_risk, select_layer, LayerSelection, LinearProbe, ProbeTarget};

/// The seven scored methods: four baselines and three PC combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Nll,
    Se,
    SeProbe,
    PcProbe,
    PcNll,
    PcSe,
    PcSeProbe,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Nll,
        Method::Se,
        Method::SeProbe,
        Method::PcProbe,
        Method::PcNll,
        Method::PcSe,
        Method::PcSeProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nll => "nll",
            Method::Se => "se",
            Method::SeProbe => "se_probe",
            Method::PcProbe => "pc_probe",
            Method::PcNll => "pc+nll",
            Method::PcSe => "pc+se",
            Method::PcSeProbe => "pc+se_probe",
        }
    }

    /// File-name form of [`Method::name`] (`+` becomes `-`).
    pub fn slug(self) -> String {
        self.name().replace('+', "-")
    }

    /// Entropy input of a combined method.
    pub fn combined_source(self) -> Option<EntropySource> {
        match self {
            Method::PcNll => Some(EntropySource::Nll),
            Method::PcSe => Some(EntropySource::SemanticEntropy),
            Method::PcSeProbe => Some(EntropySource::SeProbe),
            _ => None,
        }
    }

    pub fn needs_probes(self) -> bool {
        !matches!(self, Method::Nll | Method::Se)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || m.slug() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::invalid(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Artifact file names inside an output directory.
pub mod files {
    pub const RECORDS: &str = "records.jsonl";
    pub const SPLITS: &str = "splits.csv";
    pub const SCORES: &str = "scores.csv";
    pub const VALIDATION: &str = "validation.json";
    pub const PROBE_PC: &str = "probe_correctness.json";
    pub const PROBE_SEP: &str = "probe_binarized_se.json";
    pub const LAYER_SELECTION: &str = "layer_selection.json";
    pub const METRICS: &str = "metrics.csv";
    pub const REPORTS: &str = "reports.json";
    pub const CALIBRATION: &str = "calibration.csv";
    pub const SCATTER: &str = "scatter.csv";
    pub const TEST_SCORES: &str = "test_scores.csv";
    pub const ABLATION: &str = "combiner_ablation.csv";

    pub fn combiner(source: crate::combiner::EntropySource) -> String {
        format!("combiner_{}.json", source.short_name())
    }

    pub fn rc_curve(method: super::Method) -> String {
        format!("rc_{}.csv", method.slug())
    }

    pub fn policy(method: super::Method) -> String {
        format!("policy_{}.json", method.slug())
    }
}

/// Path to an artifact that an earlier subcommand must have written.
pub fn require(dir: &Path, file: &str, subcommand: &'static str) -> Result<PathBuf> {
    let path = dir.join(file);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingPrerequisite {
            artifact: path.display().to_string(),
            subcommand,
        })
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads split assignments from an explicit path, or `dir/splits.csv`.
pub fn load_split_indices(records: &[GenerationRecord], dir: &Path, explicit: Option<&Path>) -> Result<SplitIndices> {
    let path = match explicit {
        Some(p) if p.is_file() => p.to_path_buf(),
        Some(p) => {
            return Err(Error::MissingPrerequisite {
                artifact: p.display().to_string(),
                subcommand: "split",
            })
        }
        None => require(dir, files::SPLITS, "split")?,
    };
    SplitIndices::resolve(records, &read_splits(&path)?)
}

/// Checks that all records share one model and one dataset.
pub fn single_group(records: &[GenerationRecord]) -> Result<(String, String)> {
    let first = records.first().ok_or_else(|| Error::invalid("no records"))?;
    if let Some(r) = records.iter().find(|r| r.model != first.model || r.dataset != first.dataset) {
        return Err(Error::invalid(format!(
            "records mix ({}, {}) with ({}, {}); evaluate one model and dataset at a time",
            first.model, first.dataset, r.model, r.dataset
        )));
    }
    Ok((first.model.clone(), first.dataset.clone()))
}

/// Unsupervised per-record scores.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseScores {
    pub nll: Vec<f64>,
    pub se: Vec<f64>,
}

pub fn base_scores(records: &[GenerationRecord]) -> Result<BaseScores> {
    let pairs: Vec<(f64, f64)> = records
        .par_iter()
        .map(|r| Ok((record_nll(r)?, record_semantic_entropy(r)?)))
        .collect::<Result<_>>()?;
    let (nll, se) = pairs.into_iter().unzip();
    Ok(BaseScores { nll, se })
}

pub fn write_scores(path: &Path, records: &[GenerationRecord], scores: &BaseScores) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "nll", "se"])?;
    for ((r, nll), se) in records.iter().zip(&scores.nll).zip(&scores.se) {
        w.write_record([r.id.clone(), fmt_f64(*nll), fmt_f64(*se)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Shortest round-trip text for a float; infinities as `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Layer selections of both probes plus the SE binarization threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSelections {
    pub correctness: LayerSelection,
    pub binarized_se: LayerSelection,
    /// Training-split median SE; labels are `se > threshold`.
    pub se_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedProbes {
    pub pc: LinearProbe,
    pub sep: LinearProbe,
    pub selections: ProbeSelections,
}

/// Selects a layer and fits the PC and SE probes on the training split.
pub fn fit_probes(
    records: &[GenerationRecord],
    scores: &BaseScores,
    splits: &SplitIndices,
    config: &Config,
    seed: u64,
) -> Result<FittedProbes> {
    let train = &splits.train;
    let layers = layer_matrices(records, train)?;
    let correct: Vec<bool> = train.iter().map(|&i| records[i].correct).collect();
    let (pc_sel, pc) = select_layer(&layers, &correct, ProbeTarget::Correctness, config.folds, config.probe_c, seed)?;
    let train_se: Vec<f64> = train.iter().map(|&i| scores.se[i]).collect();
    let (high_se, se_threshold) = binarize_se_targets(&train_se)?;
    let (sep_sel, sep) = select_layer(&layers, &high_se, ProbeTarget::BinarizedSe, config.folds, config.probe_c, seed)
        .map_err(|e| match e {
            Error::InvalidInput(msg) => Error::invalid(format!("SE probe: {msg}")),
            other => other,
        })?;
    Ok(FittedProbes {
        pc,
        sep,
        selections: ProbeSelections {
            correctness: pc_sel,
            binarized_se: sep_sel,
            se_threshold,
        },
    })
}

fn probe_logits(records: &[GenerationRecord], probe: &LinearProbe) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            let h = r.hidden_states.get(&probe.layer).ok_or_else(|| {
                Error::invalid(format!("record {:?} lacks layer {} used by the probe", r.id, probe.layer))
            })?;
            if h.len() != probe.dim() {
                return Err(Error::DimensionMismatch {
                    expected: probe.dim(),
                    got: h.len(),
                });
            }
            Ok(probe.logit_row(h))
        })
        .collect()
}

/// Per-record inputs to every method; all oriented so that higher means riskier.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub nll: Vec<f64>,
    pub se: Vec<f64>,
    /// SE probe probability of high semantic entropy.
    pub sep: Vec<f64>,
    /// PC probe risk `1 − p(correct)`.
    pub pc: Vec<f64>,
    /// Raw PC probe logit of correctness.
    pub pc_logit: Vec<f64>,
}

impl Features {
    pub fn new(records: &[GenerationRecord], scores: &BaseScores, pc: &LinearProbe, sep: &LinearProbe) -> Result<Self> {
        let pc_logit = probe_logits(records, pc)?;
        let pc_risks = pc_logit.iter().map(|z| pc_risk(sigmoid(*z))).collect::<Result<_>>()?;
        let sep = probe_logits(records, sep)?.into_iter().map(sigmoid).collect();
        Ok(Self {
            nll: scores.nll.clone(),
            se: scores.se.clone(),
            sep,
            pc: pc_risks,
            pc_logit,
        })
    }

    pub fn entropy(&self, source: EntropySource) -> &[f64] {
        match source {
            EntropySource::Nll => &self.nll,
            EntropySource::SemanticEntropy => &self.se,
            EntropySource::SeProbe => &self.sep,
        }
    }
}

fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

fn hallucination_labels(records: &[GenerationRecord], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| records[i].hallucinated()).collect()
}

/// Fits one combiner per entropy source on the training split, with in-sample PC risks.
pub fn fit_combiners(
    records: &[GenerationRecord],
    features: &Features,
    splits: &SplitIndices,
    kind: CombinerKind,
    seed: u64,
) -> Result<BTreeMap<EntropySource, CombinedScorer>> {
    let train = &splits.train;
    let labels = hallucination_labels(records, train);
    let u_pc = pick(&features.pc, train);
    EntropySource::ALL
        .par_iter()
        .map(|&src| {
            let u_ent = pick(features.entropy(src), train);
            Ok((src, train_combiner(&u_ent, &u_pc, &labels, kind, src, seed)?))
        })
        .collect()
}

/// Risk of `method` for every record.
pub fn method_risks(
    method: Method,
    features: &Features,
    combiners: &BTreeMap<EntropySource, CombinedScorer>,
) -> Result<Vec<f64>> {
    Ok(match method {
        Method::Nll => features.nll.clone(),
        Method::Se => features.se.clone(),
        Method::SeProbe => features.sep.clone(),
        Method::PcProbe => features.pc.clone(),
        combined => {
            let src = combined.combined_source().expect("combined method");
            let scorer = combiners
                .get(&src)
                .ok_or_else(|| Error::invalid(format!("no combiner for {}", src.short_name())))?;
            features
                .entropy(src)
                .iter()
                .zip(&features.pc)
                .map(|(e, p)| combined_risk(scorer, *e, *p))
                .collect()
        }
    })
}

/// Risks of `method` for every record, loading probes and combiners from
/// `dir` only when the method needs them.
pub fn method_risks_from_dir(records: &[GenerationRecord], dir: &Path, method: Method) -> Result<Vec<f64>> {
    let scores = base_scores(records)?;
    match method {
        Method::Nll => return Ok(scores.nll),
        Method::Se => return Ok(scores.se),
        _ => {}
    }
    let probes = read_probe_artifacts(dir)?;
    let features = Features::new(records, &scores, &probes.pc, &probes.sep)?;
    let combiners = if method.combined_source().is_some() {
        read_combiners(dir)?
    } else {
        BTreeMap::new()
    };
    method_risks(method, &features, &combiners)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodEvaluation {
    pub method: Method,
    pub report: MetricReport,
    /// Point estimates on the full test split.
    pub curve: RcCurve,
    pub calibration: TceOutcome,
    pub test_risks: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub entropy_source: EntropySource,
    pub logistic_auroc: Estimate,
    pub mlp_auroc: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub se: f64,
    pub pc_logit: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub model: String,
    pub dataset: String,
    pub config: Config,
    pub probes: FittedProbes,
    pub combiners: BTreeMap<EntropySource, CombinedScorer>,
    pub methods: Vec<MethodEvaluation>,
    pub test_ids: Vec<String>,
    pub test_hallucinated: Vec<bool>,
    pub scatter: Vec<ScatterRow>,
    pub ablation: Vec<AblationRow>,
}

impl Evaluation {
    pub fn method(&self, method: Method) -> &MethodEvaluation {
        self.methods.iter().find(|m| m.method == method).expect("all methods evaluated")
    }

    pub fn reports(&self) -> Vec<MetricReport> {
        self.methods.iter().map(|m| m.report.clone()).collect()
    }
}

/// Test-split metrics for one risk vector with bootstrap uncertainty.
///
/// Thresholds for TCE are calibrated once on the calibration split and held
/// fixed while the test split is resampled.
fn score_method(
    method: Method,
    risks: &[f64],
    records: &[GenerationRecord],
    splits: &SplitIndices,
    config: &Config,
    seed: u64,
) -> Result<(MetricReport, RcCurve, TceOutcome, Vec<f64>)> {
    let test_r = pick(risks, &splits.test);
    let test_l = hallucination_labels(records, &splits.test);
    let cal_r = pick(risks, &splits.calibration);
    let cal_l = hallucination_labels(records, &splits.calibration);
    let grid = config.metric_grid();
    let alphas = grid.alpha.points()?;
    let policies = calibrate_grid(method.name(), &cal_r, &cal_l, &alphas)?;

    let curve = rc_curve(&test_r, &test_l)?;
    let calibration = tce_with_policies(&policies, &test_r, &test_l, grid.fallback)?;

    let n = test_r.len();
    let iters = grid.bootstrap_iters;
    let sub = |idx: &[usize]| -> (Vec<f64>, Vec<bool>) { (pick(&test_r, idx), idx.iter().map(|&i| test_l[i]).collect()) };
    let labels = Some(test_l.as_slice());
    let auroc_est = bootstrap(n, iters, seed, labels, |idx| {
        let (r, l) = sub(idx);
        auroc(&r, &l)
    })?;
    let auprc_est = bootstrap(n, iters, seed, labels, |idx| {
        let (r, l) = sub(idx);
        auprc(&r, &l)
    })?;
    let e_aurc_est = bootstrap(n, iters, seed, labels, |idx| {
        let (r, l) = sub(idx);
        Ok(rc_curve(&r, &l)?.e_aurc)
    })?;
    let tce_est = bootstrap(n, iters, seed, labels, |idx| {
        let (r, l) = sub(idx);
        Ok(tce_with_policies(&policies, &r, &l, grid.fallback)?.tce)
    })?;

    let accuracy = test_l.iter().filter(|h| !**h).count() as f64 / n as f64;
    let report = MetricReport {
        model: records[0].model.clone(),
        dataset: records[0].dataset.clone(),
        method: method.name().to_string(),
        auroc: auroc_est,
        auprc: auprc_est,
        e_aurc: e_aurc_est,
        tce: tce_est,
        spearman_vs: BTreeMap::new(),
        base_accuracy: accuracy,
        grid,
    };
    Ok((report, curve, calibration, test_r))
}

/// Runs the full seven-method evaluation on one (model, dataset) record set.
pub fn evaluate(records: &[GenerationRecord], splits: &SplitIndices, config: &Config, seed: u64) -> Result<Evaluation> {
    config.validate()?;
    let (model, dataset) = single_group(records)?;
    for (name, idx) in [("train", &splits.train), ("calibration", &splits.calibration), ("test", &splits.test)] {
        if idx.is_empty() {
            return Err(Error::invalid(format!("the {name} split is empty")));
        }
    }
    let scores = base_scores(records)?;
    let probes = fit_probes(records, &scores, splits, config, seed)?;
    let features = Features::new(records, &scores, &probes.pc, &probes.sep)?;
    let combiners = fit_combiners(records, &features, splits, CombinerKind::Logistic, seed)?;

    let mut methods = Vec::with_capacity(Method::ALL.len());
    for method in Method::ALL {
        let risks = method_risks(method, &features, &combiners)?;
        let (report, curve, calibration, test_risks) = score_method(method, &risks, records, splits, config, seed)?;
        log::info!("{method}: auroc {:.4}, e_aurc {:.4}", report.auroc.mean, report.e_aurc.mean);
        methods.push(MethodEvaluation {
            method,
            report,
            curve,
            calibration,
            test_risks,
        });
    }
    for i in 0..methods.len() {
        for j in 0..methods.len() {
            if i == j {
                continue;
            }
            match spearman(&methods[i].test_risks, &methods[j].test_risks) {
                Ok(rho) => {
                    let other = methods[j].method.name().to_string();
                    methods[i].report.spearman_vs.insert(other, rho);
                }
                Err(e) => log::warn!("spearman {} vs {}: {e}", methods[i].method, methods[j].method),
            }
        }
    }

    let test_hallucinated = hallucination_labels(records, &splits.test);
    let ablation = if config.combiner_ablation {
        ablation(records, &features, splits, &combiners, &test_hallucinated, config, seed)?
    } else {
        Vec::new()
    };
    let scatter = splits
        .test
        .iter()
        .map(|&i| ScatterRow {
            id: records[i].id.clone(),
            se: features.se[i],
            pc_logit: features.pc_logit[i],
            correct: records[i].correct,
        })
        .collect();
    Ok(Evaluation {
        model,
        dataset,
        config: config.clone(),
        probes,
        combiners,
        methods,
        test_ids: splits.test.iter().map(|&i| records[i].id.clone()).collect(),
        test_hallucinated,
        scatter,
        ablation,
    })
}

/// Test AUROC of logistic vs MLP combiners for each entropy source.
fn ablation(
    records: &[GenerationRecord],
    features: &Features,
    splits: &SplitIndices,
    logistic: &BTreeMap<EntropySource, CombinedScorer>,
    test_l: &[bool],
    config: &Config,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    let mlp = fit_combiners(records, features, splits, CombinerKind::Mlp, seed)?;
    let n = test_l.len();
    let estimate = |scorer: &CombinedScorer| -> Result<Estimate> {
        let ent = pick(features.entropy(scorer.entropy_source), &splits.test);
        let pc = pick(&features.pc, &splits.test);
        let risks: Vec<f64> = ent.iter().zip(&pc).map(|(e, p)| combined_risk(scorer, *e, *p)).collect();
        bootstrap(n, config.bootstrap_iters, seed, Some(test_l), |idx| {
            let r: Vec<f64> = idx.iter().map(|&i| risks[i]).collect();
            let l: Vec<bool> = idx.iter().map(|&i| test_l[i]).collect();
            auroc(&r, &l)
        })
    };
    EntropySource::ALL
        .iter()
        .map(|src| {
            Ok(AblationRow {
                entropy_source: *src,
                logistic_auroc: estimate(&logistic[src])?,
                mlp_auroc: estimate(&mlp[src])?,
            })
        })
        .collect()
}

pub fn write_probe_artifacts(dir: &Path, probes: &FittedProbes) -> Result<()> {
    write_text(&dir.join(files::PROBE_PC), &probes.pc.to_json()?)?;
    write_text(&dir.join(files::PROBE_SEP), &probes.sep.to_json()?)?;
    write_text(
        &dir.join(files::LAYER_SELECTION),
        &serde_json::to_string_pretty(&probes.selections)?,
    )
}

pub fn read_probe_artifacts(dir: &Path) -> Result<FittedProbes> {
    let pc = LinearProbe::from_json(&read_text(&require(dir, files::PROBE_PC, "train-probe")?)?)?;
    let sep = LinearProbe::from_json(&read_text(&require(dir, files::PROBE_SEP, "train-probe")?)?)?;
    let selections = serde_json::from_str(&read_text(&require(dir, files::LAYER_SELECTION, "train-probe")?)?)?;
    Ok(FittedProbes { pc, sep, selections })
}

pub fn write_combiners(dir: &Path, combiners: &BTreeMap<EntropySource, CombinedScorer>) -> Result<()> {
    for (src, scorer) in combiners {
        write_text(&dir.join(files::combiner(*src)), &scorer.to_json()?)?;
    }
    Ok(())
}

pub fn read_combiners(dir: &Path) -> Result<BTreeMap<EntropySource, CombinedScorer>> {
    EntropySource::ALL
        .iter()
        .map(|src| {
            let path = require(dir, &files::combiner(*src), "train-combiner")?;
            Ok((*src, CombinedScorer::from_json(&read_text(&path)?)?))
        })
        .collect()
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Long-form `method,metric,mean,std` rows.
pub fn write_metrics_csv(path: &Path, reports: &[MetricReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        MetricReport::METRICS.iter().map(move |m| {
            let e = r.metric(m).expect("known metric");
            [r.method.clone(), m.to_string(), fmt_f64(e.mean), fmt_f64(e.std)]
        })
    });
    write_csv(path, ["method", "metric", "mean", "std"], rows)
}

pub fn write_rc_csv(path: &Path, curve: &RcCurve) -> Result<()> {
    let rows = curve
        .points
        .iter()
        .map(|p| [fmt_f64(p.coverage), fmt_f64(p.selective_risk)]);
    write_csv(path, ["coverage", "selective_risk"], rows)
}

/// Writes every evaluation artifact into `dir`.
pub fn write_evaluation(dir: &Path, eval: &Evaluation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let reports = eval.reports();
    write_metrics_csv(&dir.join(files::METRICS), &reports)?;
    write_text(&dir.join(files::REPORTS), &serde_json::to_string_pretty(&reports)?)?;
    for m in &eval.methods {
        write_rc_csv(&dir.join(files::rc_curve(m.method)), &m.curve)?;
    }
    let cal_rows = eval.methods.iter().flat_map(|m| {
        m.calibration.points.iter().map(move |p| {
            [
                m.method.name().to_string(),
                fmt_f64(p.alpha),
                fmt_f64(p.tau),
                fmt_f64(p.test_coverage),
                fmt_f64(p.realized_risk),
                p.fell_back.to_string(),
            ]
        })
    });
    write_csv(
        &dir.join(files::CALIBRATION),
        ["method", "alpha", "tau", "test_coverage", "realized_risk", "fell_back"],
        cal_rows,
    )?;
    let scatter_rows = eval
        .scatter
        .iter()
        .map(|s| [s.id.clone(), fmt_f64(s.se), fmt_f64(s.pc_logit), s.correct.to_string()]);
    write_csv(&dir.join(files::SCATTER), ["id", "se", "pc_logit", "correct"], scatter_rows)?;

    let mut header = vec!["id".to_string(), "hallucinated".to_string()];
    header.extend(eval.methods.iter().map(|m| m.method.name().to_string()));
    let mut w = csv::Writer::from_path(dir.join(files::TEST_SCORES))?;
    w.write_record(&header)?;
    for (i, id) in eval.test_ids.iter().enumerate() {
        let mut row = vec![id.clone(), eval.test_hallucinated[i].to_string()];
        row.extend(eval.methods.iter().map(|m| fmt_f64(m.test_risks[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir.join(files::TEST_SCORES), e))?;

    if !eval.ablation.is_empty() {
        let rows = eval.ablation.iter().map(|a| {
            [
                a.entropy_source.short_name().to_string(),
                fmt_f64(a.logistic_auroc.mean),
                fmt_f64(a.logistic_auroc.std),
                fmt_f64(a.mlp_auroc.mean),
                fmt_f64(a.mlp_auroc.std),
            ]
        });
        write_csv(
            &dir.join(files::ABLATION),
            ["entropy_source", "lr_auroc_mean", "lr_auroc_std", "mlp_auroc_mean", "mlp_auroc_std"],
            rows,
        )?;
    }
    write_probe_artifacts(dir, &eval.probes)?;
    write_combiners(dir, &eval.combiners)
}
