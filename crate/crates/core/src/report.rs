//! Tables and SVG figures built from evaluation artifacts.
//!
//! Every figure is a pure function of the CSV files written by
//! `evaluate`, and carries its input rows in a leading comment block so a
//! plot can be audited without the pipeline. Output files are named
//! `{model}_{dataset}_{artifact}.{ext}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{Estimate, MetricReport, RcCurve, RcPoint};
use crate::pipeline::{files, fmt_f64, read_text, write_text, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// `method → metric → estimate`.
pub type MetricTable = BTreeMap<String, BTreeMap<String, Estimate>>;

pub fn metric_table(reports: &[MetricReport]) -> MetricTable {
    reports
        .iter()
        .map(|r| {
            let row = MetricReport::METRICS
                .iter()
                .map(|m| (m.to_string(), r.metric(m).expect("known metric")))
                .collect();
            (r.method.clone(), row)
        })
        .collect()
}

pub fn read_metrics_csv(path: &Path) -> Result<MetricTable> {
    let mut out = MetricTable::new();
    let mut r = csv::Reader::from_path(path)?;
    for row in r.records() {
        let row = row?;
        let field = |i: usize| row.get(i).ok_or_else(|| Error::invalid(format!("{}: short row", path.display())));
        let parse = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .map_err(|_| Error::invalid(format!("{}: bad number {:?}", path.display(), row.get(i))))
        };
        out.entry(field(0)?.to_string())
            .or_default()
            .insert(field(1)?.to_string(), Estimate { mean: parse(2)?, std: parse(3)? });
    }
    Ok(out)
}

/// File-name-safe form of a model or dataset name.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.') { c } else { '_' })
        .collect()
}

pub fn artifact_name(model: &str, dataset: &str, artifact: &str, ext: &str) -> String {
    format!("{}_{}_{}.{}", sanitize(model), sanitize(dataset), artifact, ext)
}

fn check_grids(reports: &[MetricReport]) -> Result<()> {
    let first = reports.first().ok_or_else(|| Error::invalid("no metric reports to tabulate"))?;
    if let Some(r) = reports.iter().find(|r| r.grid != first.grid) {
        return Err(Error::invalid(format!(
            "mixed metric grids: {:?} and {:?} ({}) are not comparable",
            first.grid, r.grid, r.method
        )));
    }
    Ok(())
}

/// Per report and metric: whether its mean is the best within its
/// (model, dataset) group. Equal best values are all flagged.
pub fn best_flags(reports: &[MetricReport]) -> Vec<[bool; 4]> {
    let mut best: BTreeMap<(&str, &str, usize), f64> = BTreeMap::new();
    for r in reports {
        for (k, m) in MetricReport::METRICS.iter().enumerate() {
            let v = r.metric(m).expect("known metric").mean;
            let higher = MetricReport::higher_is_better(m);
            best.entry((&r.model, &r.dataset, k))
                .and_modify(|b| {
                    if (higher && v > *b) || (!higher && v < *b) {
                        *b = v;
                    }
                })
                .or_insert(v);
        }
    }
    reports
        .iter()
        .map(|r| {
            std::array::from_fn(|k| r.metric(MetricReport::METRICS[k]).expect("known metric").mean == best[&(r.model.as_str(), r.dataset.as_str(), k)])
        })
        .collect()
}

/// One row per report: mean and std per metric, with best-per-column flags.
pub fn render_table(reports: &[MetricReport], format: TableFormat) -> Result<String> {
    check_grids(reports)?;
    let flags = best_flags(reports);
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["model".to_string(), "dataset".into(), "method".into(), "base_accuracy".into()];
            for m in MetricReport::METRICS {
                header.extend([format!("{m}_mean"), format!("{m}_std"), format!("{m}_best")]);
            }
            w.write_record(&header)?;
            for (r, f) in reports.iter().zip(&flags) {
                let mut row = vec![r.model.clone(), r.dataset.clone(), r.method.clone(), fmt_f64(r.base_accuracy)];
                for (k, m) in MetricReport::METRICS.iter().enumerate() {
                    let e = r.metric(m).expect("known metric");
                    row.extend([fmt_f64(e.mean), fmt_f64(e.std), f[k].to_string()]);
                }
                w.write_record(&row)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let mut group: Option<(&str, &str)> = None;
            for (r, f) in reports.iter().zip(&flags) {
                if group != Some((&r.model, &r.dataset)) {
                    if group.is_some() {
                        out.push('\n');
                    }
                    group = Some((&r.model, &r.dataset));
                    let _ = writeln!(out, "### {} / {} (Acc = {:.3})\n", r.model, r.dataset, r.base_accuracy);
                    out.push_str("| Method | AUROC ↑ | AUPRC ↑ | E-AURC ↓ | TCE ↓ |\n");
                    out.push_str("|---|---|---|---|---|\n");
                }
                let _ = write!(out, "| {} ", r.method);
                for (k, m) in MetricReport::METRICS.iter().enumerate() {
                    let e = r.metric(m).expect("known metric");
                    let cell = format!("{:.3} ± {:.3}", e.mean, e.std);
                    if f[k] {
                        let _ = write!(out, "| **{cell}** ");
                    } else {
                        let _ = write!(out, "| {cell} ");
                    }
                }
                out.push_str("|\n");
            }
            Ok(out)
        }
    }
}

/// Writes the CSV and Markdown tables into `dir`.
pub fn emit_tables(reports: &[MetricReport], dir: &Path) -> Result<Vec<PathBuf>> {
    check_grids(reports)?;
    let (model, dataset) = group_name(reports);
    let mut written = Vec::new();
    for (format, ext) in [(TableFormat::Csv, "csv"), (TableFormat::Markdown, "md")] {
        let path = dir.join(artifact_name(&model, &dataset, "table", ext));
        write_text(&path, &render_table(reports, format)?)?;
        written.push(path);
    }
    Ok(written)
}

fn group_name(reports: &[MetricReport]) -> (String, String) {
    let first = &reports[0];
    let model = if reports.iter().all(|r| r.model == first.model) { first.model.clone() } else { "multi".into() };
    let dataset = if reports.iter().all(|r| r.dataset == first.dataset) { first.dataset.clone() } else { "multi".into() };
    (model, dataset)
}

/// Signed improvement of `challenger` over `baseline` on one metric:
/// positive means higher AUROC/AUPRC or lower E-AURC/TCE.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub challenger: String,
    pub metric: String,
    pub delta: f64,
}

pub fn relative_improvements(baseline: &str, challengers: &[&str], table: &MetricTable) -> Result<Vec<Improvement>> {
    let lookup = |method: &str| {
        table
            .get(method)
            .ok_or_else(|| Error::invalid(format!("no metrics for method {method:?}")))
    };
    let base = lookup(baseline)?;
    let mut out = Vec::new();
    for &c in challengers {
        let row = lookup(c)?;
        for m in MetricReport::METRICS {
            let (Some(b), Some(v)) = (base.get(m), row.get(m)) else {
                return Err(Error::invalid(format!("metric {m} missing for {baseline} or {c}")));
            };
            let diff = v.mean - b.mean;
            let delta = if MetricReport::higher_is_better(m) { diff } else { -diff };
            out.push(Improvement {
                challenger: c.to_string(),
                metric: m.to_string(),
                delta: delta + 0.0,
            });
        }
    }
    Ok(out)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plot area with a linear data-to-pixel mapping.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            x,
            y,
            left: 70.0,
            right: WIDTH - 170.0,
            top: 40.0,
            bottom: HEIGHT - 55.0,
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.left + (v - self.x.0) / (self.x.1 - self.x.0) * (self.right - self.left)
    }

    fn py(&self, v: f64) -> f64 {
        self.bottom - (v - self.y.0) / (self.y.1 - self.y.0) * (self.bottom - self.top)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str, data_header: &str, data_rows: &[String]) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        body.push_str("<!-- data\n");
        body.push_str(data_header);
        body.push('\n');
        for row in data_rows {
            // A comment may not contain "--".
            body.push_str(&row.replace("--", "- -"));
            body.push('\n');
        }
        body.push_str("-->\n");
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn axes(&mut self, f: &Frame, x_label: &str, y_label: &str) {
        let b = &mut self.body;
        let _ = writeln!(
            b,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            f.left,
            f.top,
            f.right - f.left,
            f.bottom - f.top
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let xv = f.x.0 + t * (f.x.1 - f.x.0);
            let yv = f.y.0 + t * (f.y.1 - f.y.0);
            let (x, y) = (f.px(xv), f.py(yv));
            let _ = writeln!(
                b,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                f.bottom,
                f.bottom + 5.0,
                f.bottom + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                b,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                f.left - 5.0,
                f.left,
                f.left - 8.0,
                y + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            b,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (f.left + f.right) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let cy = (f.top + f.bottom) / 2.0;
        let _ = writeln!(
            b,
            r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
            escape(y_label)
        );
    }

    fn polyline(&mut self, f: &Frame, points: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn legend(&mut self, f: &Frame, entries: &[(String, &str)]) {
        for (i, (name, color)) in entries.iter().enumerate() {
            let y = f.top + 10.0 + 18.0 * i as f64;
            let x = f.right + 15.0;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 10.0,
                x + 18.0,
                y,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Upper axis limit: `max` rounded up to a multiple of 0.05, at least 0.05.
fn ceil_to_step(max: f64) -> f64 {
    ((max / 0.05).ceil() * 0.05).max(0.05)
}

/// Range padded so that a degenerate (constant) axis still has extent.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Risk-coverage curves with the high-trust band `risk ≤ high_trust_alpha` shaded.
pub fn plot_rc(curves: &[(String, RcCurve)], high_trust_alpha: f64) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::invalid("risk-coverage plot needs at least one curve"));
    }
    let mut rows = Vec::new();
    let mut max_risk: f64 = high_trust_alpha;
    for (name, c) in curves {
        for p in &c.points {
            rows.push(format!("{name},{},{}", fmt_f64(p.coverage), fmt_f64(p.selective_risk)));
            max_risk = max_risk.max(p.selective_risk);
        }
    }
    let mut svg = Svg::new("Risk-coverage", "method,coverage,selective_risk", &rows);
    let f = Frame::new((0.0, 1.0), (0.0, ceil_to_step(max_risk)));
    if high_trust_alpha > 0.0 {
        let top = f.py(high_trust_alpha);
        let _ = writeln!(
            svg.body,
            r##"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#2ca02c" fill-opacity="0.15"/>"##,
            f.left,
            f.right - f.left,
            f.bottom - top
        );
    }
    svg.axes(&f, "coverage", "selective risk");
    let mut legend = Vec::new();
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.coverage, p.selective_risk)).collect();
        svg.polyline(&f, &pts, color, false);
        legend.push((name.clone(), color));
    }
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

/// Realized test risk against target alpha, with the identity diagonal.
pub fn plot_calibration(alphas: &[f64], realized: &[(String, Vec<f64>)]) -> Result<String> {
    if alphas.is_empty() || realized.is_empty() {
        return Err(Error::invalid("calibration plot needs an alpha grid and at least one method"));
    }
    if let Some((name, _)) = realized.iter().find(|(_, r)| r.len() != alphas.len()) {
        return Err(Error::invalid(format!("{name}: realized risks do not match the alpha grid")));
    }
    let mut rows = Vec::new();
    for (name, r) in realized {
        for (a, v) in alphas.iter().zip(r) {
            rows.push(format!("{name},{},{}", fmt_f64(*a), fmt_f64(*v)));
        }
    }
    let max_alpha = alphas.iter().cloned().fold(0.0, f64::max);
    let max_risk = realized.iter().flat_map(|(_, r)| r.iter().cloned()).fold(max_alpha, f64::max);
    let mut svg = Svg::new("Target calibration", "method,alpha,realized_risk", &rows);
    let f = Frame::new((0.0, ceil_to_step(max_alpha)), (0.0, ceil_to_step(max_risk)));
    svg.axes(&f, "target risk alpha", "realized test risk");
    let diag_end = f.x.1.min(f.y.1);
    svg.polyline(&f, &[(0.0, 0.0), (diag_end, diag_end)], "#000000", true);
    let mut legend = vec![("ideal".to_string(), "#000000")];
    for (i, (name, r)) in realized.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = alphas.iter().cloned().zip(r.iter().cloned()).collect();
        svg.polyline(&f, &pts, color, false);
        legend.push((name.clone(), color));
    }
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

/// Semantic entropy against PC probe logit, coloured by correctness.
pub fn plot_scatter(se: &[f64], pc_logits: &[f64], correct: &[bool]) -> Result<String> {
    if se.len() != pc_logits.len() || se.len() != correct.len() {
        return Err(Error::DimensionMismatch {
            expected: se.len(),
            got: pc_logits.len().min(correct.len()),
        });
    }
    let rows: Vec<String> = se
        .iter()
        .zip(pc_logits)
        .zip(correct)
        .map(|((s, z), c)| format!("{},{},{c}", fmt_f64(*s), fmt_f64(*z)))
        .collect();
    let mut svg = Svg::new("Semantic entropy vs PC probe logit", "se,pc_logit,correct", &rows);
    let f = Frame::new(padded_range(se.iter().cloned()), padded_range(pc_logits.iter().cloned()));
    svg.axes(&f, "semantic entropy", "PC probe logit");
    let (correct_color, wrong_color) = (PALETTE[0], PALETTE[3]);
    for ((s, z), c) in se.iter().zip(pc_logits).zip(correct) {
        let color = if *c { correct_color } else { wrong_color };
        let _ = writeln!(
            svg.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.6"/>"#,
            f.px(*s),
            f.py(*z)
        );
    }
    svg.legend(&f, &[("correct".into(), correct_color), ("hallucinated".into(), wrong_color)]);
    Ok(svg.finish())
}

/// Grouped bars of signed improvement over `baseline`, one group per metric.
pub fn emit_relative_bars(baseline: &str, challengers: &[&str], table: &MetricTable) -> Result<String> {
    let values = relative_improvements(baseline, challengers, table)?;
    let rows: Vec<String> = values
        .iter()
        .map(|v| format!("{},{},{}", v.challenger, v.metric, fmt_f64(v.delta)))
        .collect();
    let mut svg = Svg::new(&format!("Improvement over {baseline}"), "challenger,metric,improvement", &rows);
    let extent = values.iter().map(|v| v.delta.abs()).fold(0.0, f64::max);
    let extent = if extent > 0.0 { extent * 1.1 } else { 1.0 };
    let groups = MetricReport::METRICS.len() as f64;
    let f = Frame::new((0.0, groups), (-extent, extent));
    svg.axes(&f, "metric", "improvement (positive is better)");
    let zero = f.py(0.0);
    let _ = writeln!(
        svg.body,
        r#"<line x1="{:.2}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#,
        f.left, f.right
    );
    let slot = 0.8 / challengers.len().max(1) as f64;
    for (g, metric) in MetricReport::METRICS.iter().enumerate() {
        let _ = writeln!(
            svg.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{metric}</text>"#,
            f.px(g as f64 + 0.5),
            f.top - 6.0
        );
        for (c, name) in challengers.iter().enumerate() {
            let delta = values
                .iter()
                .find(|v| v.challenger == *name && v.metric == *metric)
                .map_or(0.0, |v| v.delta);
            let x0 = f.px(g as f64 + 0.1 + c as f64 * slot);
            let x1 = f.px(g as f64 + 0.1 + (c + 1) as f64 * slot);
            let y = f.py(delta);
            let _ = writeln!(
                svg.body,
                r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                y.min(zero),
                x1 - x0,
                (y - zero).abs(),
                PALETTE[c % PALETTE.len()]
            );
        }
    }
    let legend: Vec<(String, &str)> = challengers
        .iter()
        .enumerate()
        .map(|(c, n)| (n.to_string(), PALETTE[c % PALETTE.len()]))
        .collect();
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

pub fn read_rc_csv(path: &Path) -> Result<Vec<RcPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct CalibrationRow {
    pub method: String,
    pub alpha: f64,
    pub tau: f64,
    pub test_coverage: f64,
    pub realized_risk: f64,
    pub fell_back: bool,
}

pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
struct ScatterCsvRow {
    se: f64,
    pc_logit: f64,
    correct: bool,
}

/// Renders tables and all figures from an `evaluate` output directory.
pub fn render_report(eval_dir: &Path, out_dir: &Path, high_trust_alpha: f64) -> Result<Vec<PathBuf>> {
    let reports_path = crate::pipeline::require(eval_dir, files::REPORTS, "evaluate")?;
    let reports: Vec<MetricReport> = serde_json::from_str(&read_text(&reports_path)?)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = emit_tables(&reports, out_dir)?;
    let (model, dataset) = group_name(&reports);
    let mut put = |artifact: &str, svg: String| -> Result<()> {
        let path = out_dir.join(artifact_name(&model, &dataset, artifact, "svg"));
        write_text(&path, &svg)?;
        written.push(path);
        Ok(())
    };

    let methods: Vec<Method> = reports.iter().map(|r| r.method.parse()).collect::<Result<_>>()?;
    let mut curves = Vec::new();
    for m in &methods {
        let points = read_rc_csv(&crate::pipeline::require(eval_dir, &files::rc_curve(*m), "evaluate")?)?;
        // Only the points are drawn; the areas are not needed for the view.
        curves.push((m.name().to_string(), RcCurve { points, aurc: 0.0, oracle_aurc: 0.0, e_aurc: 0.0 }));
    }
    put("rc", plot_rc(&curves, high_trust_alpha)?)?;

    let cal = read_calibration_csv(&crate::pipeline::require(eval_dir, files::CALIBRATION, "evaluate")?)?;
    let mut alphas: Vec<f64> = Vec::new();
    let mut realized: Vec<(String, Vec<f64>)> = Vec::new();
    for row in &cal {
        if realized.last().is_none_or(|(name, _)| *name != row.method) {
            realized.push((row.method.clone(), Vec::new()));
        }
        if realized.len() == 1 {
            alphas.push(row.alpha);
        }
        realized.last_mut().expect("pushed above").1.push(row.realized_risk);
    }
    put("calibration", plot_calibration(&alphas, &realized)?)?;

    let mut r = csv::Reader::from_path(crate::pipeline::require(eval_dir, files::SCATTER, "evaluate")?)?;
    let scatter: Vec<ScatterCsvRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    let se: Vec<f64> = scatter.iter().map(|s| s.se).collect();
    let z: Vec<f64> = scatter.iter().map(|s| s.pc_logit).collect();
    let c: Vec<bool> = scatter.iter().map(|s| s.correct).collect();
    put("scatter", plot_scatter(&se, &z, &c)?)?;

    let table = read_metrics_csv(&crate::pipeline::require(eval_dir, files::METRICS, "evaluate")?)?;
    for (baseline, combined) in [("nll", "pc+nll"), ("se", "pc+se"), ("se_probe", "pc+se_probe")] {
        if table.contains_key(baseline) && table.contains_key("pc_probe") && table.contains_key(combined) {
            let svg = emit_relative_bars(baseline, &["pc_probe", combined], &table)?;
            put(&format!("relative_{baseline}"), svg)?;
        }
    }
    Ok(written)
}
