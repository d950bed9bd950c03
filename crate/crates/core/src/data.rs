//! Record schema, validation and stratified splitting.
//!
//! Record files are JSONL: one [`GenerationRecord`] object per line, UTF-8.
//! Hidden-state layers are keyed `"layer_<i>"` in the file and parsed to
//! integer layer indices.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One question's evidence for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub dataset: String,
    pub model: String,
    pub question: String,
    /// Low-temperature answer that is judged for correctness.
    pub answer: String,
    /// Natural-log probabilities of the answer tokens.
    pub answer_token_logprobs: Vec<f64>,
    /// High-temperature completions.
    pub samples: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_ids: Option<Vec<usize>>,
    /// `entailment_pairs[i][j]` is true iff sample `i` entails sample `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entailment_pairs: Option<Vec<Vec<bool>>>,
    /// Features at the last prompt token, by layer index.
    #[serde(with = "layer_keys")]
    pub hidden_states: BTreeMap<usize, Vec<f64>>,
    pub correct: bool,
}

impl GenerationRecord {
    /// Hallucination indicator: 1 when the answer was judged incorrect.
    pub fn hallucinated(&self) -> bool {
        !self.correct
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    /// Per-record invariant violations. Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let k = self.samples.len();
        if self.id.is_empty() {
            out.push("id must be non-empty".to_string());
        }
        if self.answer_token_logprobs.is_empty() {
            out.push("answer_token_logprobs must be non-empty".to_string());
        }
        for (i, lp) in self.answer_token_logprobs.iter().enumerate() {
            if !(*lp <= 0.0) {
                out.push(format!("answer_token_logprobs[{i}] = {lp}: logprob must be ≤ 0"));
            }
        }
        if k == 0 {
            out.push("samples must be non-empty".to_string());
        }
        match (&self.cluster_ids, &self.entailment_pairs) {
            (None, None) => out.push("one of cluster_ids / entailment_pairs is required".to_string()),
            (clusters, pairs) => {
                if let Some(ids) = clusters {
                    if ids.len() != k {
                        out.push(format!("cluster_ids length ≠ K ({} vs {k})", ids.len()));
                    } else if !is_contiguous_labelling(ids) {
                        out.push("cluster_ids must cover a contiguous range 0..C-1".to_string());
                    }
                }
                if let Some(m) = pairs {
                    if m.len() != k || m.iter().any(|row| row.len() != k) {
                        out.push(format!("entailment_pairs must be a {k}×{k} matrix (K = number of samples)"));
                    } else if (0..k).any(|i| !m[i][i]) {
                        out.push("entailment_pairs diagonal must be all true".to_string());
                    }
                }
            }
        }
        if self.hidden_states.is_empty() {
            out.push("hidden_states must contain at least one layer".to_string());
        } else {
            let dims: BTreeSet<usize> = self.hidden_states.values().map(Vec::len).collect();
            if dims.len() > 1 {
                out.push(format!("hidden_states layers differ in dimension: {dims:?}"));
            }
            if dims.contains(&0) {
                out.push("hidden_states vectors must be non-empty".to_string());
            }
            if self.hidden_states.values().flatten().any(|v| !v.is_finite()) {
                out.push("hidden_states must be finite".to_string());
            }
        }
        out
    }

    fn layout(&self) -> (Vec<usize>, usize) {
        let layers = self.hidden_states.keys().copied().collect();
        let dim = self.hidden_states.values().next().map_or(0, Vec::len);
        (layers, dim)
    }
}

fn is_contiguous_labelling(ids: &[usize]) -> bool {
    let seen: BTreeSet<usize> = ids.iter().copied().collect();
    seen.iter().copied().eq(0..seen.len())
}

mod layer_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    const PREFIX: &str = "layer_";

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (format!("{PREFIX}{k}"), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, Vec<f64>>, D::Error> {
        let raw = BTreeMap::<String, Vec<f64>>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (key, v) in raw {
            let idx = key
                .strip_prefix(PREFIX)
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|i| format!("{PREFIX}{i}") == key)
                .ok_or_else(|| D::Error::custom(format!("hidden_states key {key:?} is not of the form layer_<i>")))?;
            out.insert(idx, v);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number in the record file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Number of valid records.
    pub count: usize,
    pub errors: Vec<LineError>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses and validates a JSONL stream. Returns the valid records alongside
/// the report; invalid lines are reported, never dropped silently.
pub fn parse_records(reader: impl BufRead) -> std::io::Result<(Vec<GenerationRecord>, ValidationReport)> {
    let mut report = ValidationReport::default();
    let mut valid: Vec<(usize, GenerationRecord)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<GenerationRecord>(&line) {
            Err(e) => report.errors.push(LineError {
                line: line_no,
                message: format!("malformed record: {e}"),
            }),
            Ok(rec) => {
                let v = rec.violations();
                if v.is_empty() {
                    valid.push((line_no, rec));
                } else {
                    report
                        .errors
                        .extend(v.into_iter().map(|message| LineError { line: line_no, message }));
                }
            }
        }
    }

    // File-level invariants: unique ids and one hidden-state layout.
    let reference = valid.first().map(|(_, r)| r.layout());
    let mut ids = HashSet::new();
    let mut records = Vec::with_capacity(valid.len());
    for (line_no, rec) in valid {
        let mut problems = Vec::new();
        if !ids.insert(rec.id.clone()) {
            problems.push(format!("duplicate id {:?}", rec.id));
        }
        if let Some((layers, dim)) = &reference {
            let (l, d) = rec.layout();
            if &l != layers {
                problems.push(format!("layer set {l:?} differs from file layer set {layers:?}"));
            }
            if d != *dim {
                problems.push(format!("feature dimension {d} differs from file dimension {dim}"));
            }
        }
        if problems.is_empty() {
            records.push(rec);
        } else {
            report
                .errors
                .extend(problems.into_iter().map(|message| LineError { line: line_no, message }));
        }
    }
    report.errors.sort_by_key(|e| e.line);
    report.count = records.len();
    Ok((records, report))
}

pub fn read_records(path: &Path) -> Result<(Vec<GenerationRecord>, ValidationReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(BufReader::new(file)).map_err(|e| Error::io(path, e))
}

pub fn validate_records(path: &Path) -> Result<ValidationReport> {
    read_records(path).map(|(_, report)| report)
}

/// Loads a record file, failing if any line is invalid.
pub fn load_records(path: &Path) -> Result<Vec<GenerationRecord>> {
    let (records, report) = read_records(path)?;
    if let Some(first) = report.errors.first() {
        return Err(Error::invalid(format!(
            "{}: {} invalid line(s); first at line {}: {}",
            path.display(),
            report.errors.len(),
            first.line,
            first.message
        )));
    }
    Ok(records)
}

pub fn write_records_to(writer: impl Write, records: &[GenerationRecord]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<record stream>", e))?;
    }
    w.flush().map_err(|e| Error::io("<record stream>", e))
}

pub fn write_records(path: &Path, records: &[GenerationRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records_to(file, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Calibration,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Calibration, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Calibration => "calibration",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub id: String,
    pub split: Split,
}

pub const MIN_SPLIT_RECORDS: usize = 20;
const CALIBRATION_FRACTION: f64 = 0.15;
const TEST_FRACTION: f64 = 0.15;

/// Deterministic 70:15:15 split stratified on correctness.
///
/// Records are sorted by id and partitioned into the hallucinated and correct
/// strata. Each stratum is shuffled with its own stream of
/// [`rng::seeded`]`(seed, ..)`; the first slots go to calibration, the next to
/// test, the rest to train. Per-stratum quotas are rounded so that split
/// sizes and per-split hallucination counts are both within one record of
/// exact proportions. Output is sorted by id.
pub fn split_records(records: &[GenerationRecord], seed: u64) -> Result<Vec<SplitAssignment>> {
    let n = records.len();
    if n < MIN_SPLIT_RECORDS {
        return Err(Error::TooFewRecords {
            required: MIN_SPLIT_RECORDS,
            got: n,
        });
    }
    let mut keyed: Vec<(&str, bool)> = records.iter().map(|r| (r.id.as_str(), r.correct)).collect();
    keyed.sort_unstable_by(|a, b| a.0.cmp(b.0));
    if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("duplicate record id {:?}", w[0].0)));
    }

    let n_cal = (n as f64 * CALIBRATION_FRACTION).round() as usize;
    let n_test = (n as f64 * TEST_FRACTION).round() as usize;

    let correct: Vec<&str> = keyed.iter().filter(|k| k.1).map(|k| k.0).collect();
    let hallucinated: Vec<&str> = keyed.iter().filter(|k| !k.1).map(|k| k.0).collect();
    let quota = |count: usize, split_size: usize| (count as f64 * split_size as f64 / n as f64).round() as usize;
    let correct_cal = quota(correct.len(), n_cal);
    let correct_test = quota(correct.len(), n_test);
    let strata = [
        (hallucinated, rng::streams::SPLIT_HALLUCINATED, n_cal - correct_cal, n_test - correct_test),
        (correct, rng::streams::SPLIT_CORRECT, correct_cal, correct_test),
    ];

    let mut out = Vec::with_capacity(n);
    for (mut ids, stream, cal, test) in strata {
        debug_assert!(cal + test <= ids.len());
        let mut r = rng::seeded(seed, stream);
        rng::shuffle(&mut r, &mut ids);
        for (pos, id) in ids.into_iter().enumerate() {
            let split = if pos < cal {
                Split::Calibration
            } else if pos < cal + test {
                Split::Test
            } else {
                Split::Train
            };
            out.push(SplitAssignment {
                id: id.to_string(),
                split,
            });
        }
    }
    out.sort_unstable_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn write_splits(path: &Path, assignments: &[SplitAssignment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "split"])?;
    for a in assignments {
        w.write_record([a.id.as_str(), a.split.as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_splits(path: &Path) -> Result<BTreeMap<String, Split>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in r.deserialize() {
        let a: SplitAssignment = row?;
        if out.insert(a.id.clone(), a.split).is_some() {
            return Err(Error::invalid(format!("{}: id {:?} assigned twice", path.display(), a.id)));
        }
    }
    Ok(out)
}

/// Record indices per split, in record order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn resolve(records: &[GenerationRecord], splits: &BTreeMap<String, Split>) -> Result<Self> {
        if splits.len() != records.len() {
            return Err(Error::invalid(format!(
                "split file covers {} ids but the record file has {} records",
                splits.len(),
                records.len()
            )));
        }
        let mut out = Self::default();
        for (i, r) in records.iter().enumerate() {
            match splits.get(&r.id) {
                Some(Split::Train) => out.train.push(i),
                Some(Split::Calibration) => out.calibration.push(i),
                Some(Split::Test) => out.test.push(i),
                None => return Err(Error::invalid(format!("record {:?} has no split assignment", r.id))),
            }
        }
        Ok(out)
    }

    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Calibration => &self.calibration,
            Split::Test => &self.test,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(id: &str, correct: bool) -> GenerationRecord {
        GenerationRecord {
            id: id.to_string(),
            dataset: "d".into(),
            model: "m".into(),
            question: "q".into(),
            answer: "a".into(),
            answer_token_logprobs: vec![-0.1, -0.2],
            samples: vec!["s".into(); 3],
            cluster_ids: Some(vec![0, 0, 1]),
            entailment_pairs: None,
            hidden_states: BTreeMap::from([(0, vec![0.5, 1.0]), (3, vec![0.0, -1.0])]),
            correct,
        }
    }

    fn jsonl(records: &[GenerationRecord]) -> String {
        let mut buf = Vec::new();
        write_records_to(&mut buf, records).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn ten_valid_records_validate_clean() {
        let recs: Vec<_> = (0..10).map(|i| record(&format!("r{i}"), i % 2 == 0)).collect();
        let (parsed, report) = parse_records(jsonl(&recs).as_bytes()).unwrap();
        assert_eq!(report, ValidationReport { count: 10, errors: vec![] });
        assert_eq!(parsed, recs);
    }

    #[test]
    fn layer_keys_use_string_form() {
        let text = jsonl(&[record("a", true)]);
        assert!(text.contains("\"layer_0\":[0.5,1.0]"));
        assert!(text.contains("\"layer_3\""));
        let bad = text.replace("layer_3", "layer_03");
        let (_, report) = parse_records(bad.as_bytes()).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].message.contains("layer_<i>"));
    }

    #[test]
    fn positive_logprob_is_reported() {
        let mut r = record("a", true);
        r.answer_token_logprobs[1] = 0.3;
        let (_, report) = parse_records(jsonl(&[r]).as_bytes()).unwrap();
        assert_eq!(report.count, 0);
        assert!(report.errors[0].message.contains("logprob must be ≤ 0"));
        assert_eq!(report.errors[0].line, 1);
    }

    #[test]
    fn short_cluster_ids_are_reported() {
        let mut r = record("a", true);
        r.samples = vec!["s".into(); 10];
        r.cluster_ids = Some(vec![0; 9]);
        let (_, report) = parse_records(jsonl(&[record("ok", true), r]).as_bytes()).unwrap();
        assert_eq!(report.count, 1);
        assert_eq!(report.errors[0].line, 2);
        assert!(report.errors[0].message.contains("cluster_ids length ≠ K"));
    }

    #[test]
    fn other_invariants() {
        let mut gap = record("a", true);
        gap.cluster_ids = Some(vec![0, 2, 2]);
        let mut neither = record("b", true);
        neither.cluster_ids = None;
        let mut diag = record("c", true);
        diag.cluster_ids = None;
        diag.entailment_pairs = Some(vec![vec![true, false, false], vec![false, false, false], vec![false, false, true]]);
        let mut layers = record("d", true);
        layers.hidden_states.remove(&3);
        let dup = record("e", true);
        let text = jsonl(&[gap, neither, diag, record("e", false), layers, dup]) + "{not json\n\n";
        let (_, report) = parse_records(text.as_bytes()).unwrap();
        assert_eq!(report.count, 1);
        let msgs: Vec<_> = report.errors.iter().map(|e| (e.line, e.message.as_str())).collect();
        assert!(msgs[0].1.contains("contiguous"));
        assert!(msgs[1].1.contains("one of cluster_ids"));
        assert!(msgs[2].1.contains("diagonal"));
        assert_eq!(msgs[3].0, 5);
        assert!(msgs[3].1.contains("layer set"));
        assert!(msgs[4].1.contains("duplicate id"));
        assert!(msgs[5].1.contains("malformed"));
        assert_eq!(msgs.len(), 6);
    }

    #[test]
    fn both_cluster_sources_allowed() {
        let mut r = record("a", true);
        r.entailment_pairs = Some(vec![vec![true; 3]; 3]);
        assert!(r.violations().is_empty());
    }

    fn labelled(n: usize, n_correct: usize) -> Vec<GenerationRecord> {
        (0..n).map(|i| record(&format!("q{i:05}"), i < n_correct)).collect()
    }

    fn tally(assign: &[SplitAssignment], recs: &[GenerationRecord]) -> BTreeMap<Split, (usize, usize)> {
        let correct: BTreeMap<_, _> = recs.iter().map(|r| (r.id.clone(), r.correct)).collect();
        let mut t = BTreeMap::new();
        for a in assign {
            let e = t.entry(a.split).or_insert((0, 0));
            e.0 += 1;
            if correct[&a.id] {
                e.1 += 1;
            }
        }
        t
    }

    #[test]
    fn thousand_half_correct() {
        let recs = labelled(1000, 500);
        let t = tally(&split_records(&recs, 0).unwrap(), &recs);
        assert_eq!(t[&Split::Train], (700, 350));
        assert_eq!(t[&Split::Calibration], (150, 75));
        assert_eq!(t[&Split::Test], (150, 75));
    }

    #[test]
    fn twenty_all_correct() {
        let recs = labelled(20, 20);
        for seed in 0..5 {
            let t = tally(&split_records(&recs, seed).unwrap(), &recs);
            assert_eq!(t[&Split::Train].0, 14);
            assert_eq!(t[&Split::Calibration].0, 3);
            assert_eq!(t[&Split::Test].0, 3);
        }
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let recs = labelled(200, 120);
        let a = split_records(&recs, 1).unwrap();
        assert_eq!(a, split_records(&recs, 1).unwrap());
        assert_ne!(a, split_records(&recs, 2).unwrap());
    }

    #[test]
    fn too_few_records() {
        assert!(matches!(
            split_records(&labelled(19, 10), 0),
            Err(Error::TooFewRecords { required: 20, got: 19 })
        ));
    }

    #[test]
    fn splits_csv_roundtrip() {
        let recs = labelled(40, 25);
        let a = split_records(&recs, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("splits.csv");
        write_splits(&p, &a).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("id,split\n"));
        let back = read_splits(&p).unwrap();
        assert_eq!(back.len(), 40);
        let idx = SplitIndices::resolve(&recs, &back).unwrap();
        assert_eq!(idx.train.len() + idx.calibration.len() + idx.test.len(), 40);
    }
}
