use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::InputSource;
use super::PipelineError;
use crate::eval::SplitAssignment;
use crate::features::{feature_catalog, Complexity};
use crate::instances::ProblemKind;
use crate::pooling::PoolingStrategy;
use crate::render::Representation;
use crate::util::fmt_opt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DirectQuerying,
    FeatureProbing,
    AlgorithmSelection,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::DirectQuerying => "direct_querying",
            ExperimentKind::FeatureProbing => "feature_probing",
            ExperimentKind::AlgorithmSelection => "algorithm_selection",
        }
    }
}

/// One long-form measurement. Fields that do not apply to an experiment
/// stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: ExperimentKind,
    pub problem: ProblemKind,
    pub representation: Option<Representation>,
    pub pooling: Option<PoolingStrategy>,
    pub model: Option<String>,
    pub source: Option<InputSource>,
    pub feature: Option<String>,
    pub tier: Option<Complexity>,
    pub replicate: usize,
    pub fold: Option<usize>,
    pub metric: String,
    pub value: Option<f64>,
}

impl Record {
    pub(crate) fn new(
        experiment: ExperimentKind,
        problem: ProblemKind,
        metric: &str,
        value: Option<f64>,
    ) -> Self {
        Record {
            experiment,
            problem,
            representation: None,
            pooling: None,
            model: None,
            source: None,
            feature: None,
            tier: None,
            replicate: 0,
            fold: None,
            metric: metric.to_owned(),
            value: value.filter(|v| v.is_finite()),
        }
    }
}

/// A configured cell that produced no result at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFailure {
    pub experiment: ExperimentKind,
    pub problem: ProblemKind,
    pub cell: String,
    pub reason: String,
}

/// Fold assignments shared by every classifier and input source of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSplits {
    pub problem: ProblemKind,
    pub replicate: usize,
    pub folds: Vec<SplitAssignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub records: Vec<Record>,
    pub failures: Vec<CellFailure>,
    pub splits: Vec<ProblemSplits>,
}

impl MetricsReport {
    pub fn merge(&mut self, other: MetricsReport) {
        self.records.extend(other.records);
        self.failures.extend(other.failures);
        self.splits.extend(other.splits);
    }

    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn select<'a>(
        &'a self,
        experiment: ExperimentKind,
    ) -> impl Iterator<Item = &'a Record> + 'a {
        self.records
            .iter()
            .filter(move |r| r.experiment == experiment)
    }
}

const LONG_HEADER: &str = "experiment,problem,representation,pooling,model,source,feature,tier,replicate,fold,metric,value";

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn long_csv(report: &MetricsReport) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment.as_str(),
            r.problem.code(),
            opt(r.representation, |x| x.as_str().to_owned()),
            opt(r.pooling, |x| x.as_str().to_owned()),
            opt(r.model.as_deref(), str::to_owned),
            opt(r.source, |x| x.as_str().to_owned()),
            opt(r.feature.as_deref(), str::to_owned),
            opt(r.tier, |x| x.as_str().to_owned()),
            r.replicate,
            opt(r.fold, |x| x.to_string()),
            r.metric,
            fmt_opt(r.value),
        );
    }
    out
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "NA".to_owned(),
    }
}

fn has_tier(problem: ProblemKind, tier: Complexity) -> bool {
    feature_catalog(problem)
        .iter()
        .any(|s| s.complexity == tier)
}

const TABLE3_METRICS: [(&str, &str); 4] = [
    ("mae", "MAE"),
    ("equals", "Equals"),
    ("within_1pct", "Within 1%"),
    ("within_5pct", "Within 5%"),
];

fn dq_tier_value(
    report: &MetricsReport,
    problem: ProblemKind,
    rep: Representation,
    tier: Complexity,
    metric: &str,
) -> Option<Option<f64>> {
    report
        .select(ExperimentKind::DirectQuerying)
        .find(|r| {
            r.problem == problem
                && r.representation == Some(rep)
                && r.tier == Some(tier)
                && r.feature.is_none()
                && r.metric == metric
        })
        .map(|r| r.value)
}

/// Direct-querying pivot: one row per (problem, representation), and
/// MAE / Equals / Within 1% / Within 5% for each complexity tier. Tiers a
/// problem does not have are shown as `---`.
pub fn table3_csv(report: &MetricsReport) -> String {
    let mut out = String::from("problem,representation");
    for (_, label) in TABLE3_METRICS {
        for tier in Complexity::ALL {
            let _ = write!(out, ",{label} {}", tier.as_str());
        }
    }
    out.push('\n');
    let cells: BTreeSet<(ProblemKind, Representation)> = report
        .select(ExperimentKind::DirectQuerying)
        .filter_map(|r| Some((r.problem, r.representation?)))
        .collect();
    for (problem, rep) in cells {
        let _ = write!(out, "{},{}", problem.code(), rep.as_str());
        for (metric, _) in TABLE3_METRICS {
            for tier in Complexity::ALL {
                let v = if has_tier(problem, tier) {
                    dq_tier_value(report, problem, rep, tier, metric).map_or("NA".into(), cell)
                } else {
                    "---".into()
                };
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// Probing pivot for one problem: per representation, one row per
/// (regressor, pooling) with the tier MAEs, then a `Direct Querying` row.
pub fn probing_csv(report: &MetricsReport, problem: ProblemKind) -> String {
    let mut out = String::from("representation,regressor,pooling,direct,low_effort,high_effort\n");
    let probe_rows: Vec<&Record> = report
        .select(ExperimentKind::FeatureProbing)
        .filter(|r| r.problem == problem && r.feature.is_none() && r.metric == "mae")
        .collect();
    let reps: BTreeSet<Representation> =
        probe_rows.iter().filter_map(|r| r.representation).collect();
    for rep in reps {
        let mut keys: Vec<(String, PoolingStrategy)> = Vec::new();
        for r in probe_rows.iter().filter(|r| r.representation == Some(rep)) {
            let key = (
                r.model.clone().unwrap_or_default(),
                r.pooling.unwrap_or(PoolingStrategy::Mean),
            );
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for (model, pooling) in keys {
            let _ = write!(out, "{},{},{}", rep.as_str(), model, pooling.as_str());
            for tier in Complexity::ALL {
                let vals: Vec<f64> = probe_rows
                    .iter()
                    .filter(|r| {
                        r.representation == Some(rep)
                            && r.model.as_deref() == Some(&model)
                            && r.pooling == Some(pooling)
                            && r.tier == Some(tier)
                    })
                    .filter_map(|r| r.value)
                    .collect();
                let v = if !has_tier(problem, tier) {
                    "---".to_owned()
                } else if vals.is_empty() {
                    "NA".to_owned()
                } else {
                    cell(Some(vals.iter().sum::<f64>() / vals.len() as f64))
                };
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{},Direct Querying,", rep.as_str());
        for tier in Complexity::ALL {
            let v = if has_tier(problem, tier) {
                dq_tier_value(report, problem, rep, tier, "mae").map_or("---".into(), cell)
            } else {
                "---".into()
            };
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

type SelectionKey = (
    ProblemKind,
    Option<InputSource>,
    Option<Representation>,
    Option<PoolingStrategy>,
    Option<String>,
);

/// Selection pivot: mean set-aware accuracy per cell plus every fold.
pub fn selection_csv(report: &MetricsReport) -> String {
    let mut cells: BTreeMap<(usize, SelectionKey), (Option<f64>, BTreeMap<usize, Option<f64>>)> =
        BTreeMap::new();
    let mut max_fold = 0;
    for r in report
        .select(ExperimentKind::AlgorithmSelection)
        .filter(|r| r.metric == "accuracy")
    {
        let key = (
            r.replicate,
            (
                r.problem,
                r.source,
                r.representation,
                r.pooling,
                r.model.clone(),
            ),
        );
        let entry = cells.entry(key).or_default();
        match r.fold {
            None => entry.0 = r.value,
            Some(f) => {
                max_fold = max_fold.max(f + 1);
                entry.1.insert(f, r.value);
            }
        }
    }
    let mut out =
        String::from("replicate,problem,source,representation,pooling,classifier,accuracy");
    for f in 0..max_fold {
        let _ = write!(out, ",fold_{}", f + 1);
    }
    out.push('\n');
    for ((rep_i, (problem, source, rep, pooling, model)), (mean, folds)) in cells {
        let _ = write!(
            out,
            "{rep_i},{},{},{},{},{},{}",
            problem.code(),
            opt(source, |x| x.as_str().to_owned()),
            opt(rep, |x| x.as_str().to_owned()),
            opt(pooling, |x| x.as_str().to_owned()),
            model.unwrap_or_default(),
            cell(mean)
        );
        for f in 0..max_fold {
            let _ = write!(out, ",{}", folds.get(&f).map_or("NA".into(), |v| cell(*v)));
        }
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Minimal horizontal bar chart.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let row = 18.0;
    let label_w = 420.0;
    let bar_w = 360.0;
    let height = 40.0 + row * bars.len() as f64;
    let max = bars
        .iter()
        .map(|b| b.1)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="monospace" font-size="11">"#,
        label_w + bar_w + 80.0
    );
    let _ = writeln!(
        s,
        r#"<text x="4" y="16" font-size="13">{}</text>"#,
        escape(title)
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = 28.0 + row * i as f64;
        let w = (v / max * bar_w).max(0.0);
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.1}">{}</text>"#,
            y + 12.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{label_w}" y="{y:.1}" width="{w:.2}" height="{:.1}" fill="#4c72b0"/>"##,
            row - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}">{v:.4}</text>"#,
            label_w + w + 4.0,
            y + 12.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, content: &str, written: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    fs::write(&path, content).map_err(|e| PipelineError::Io(path.clone(), e))?;
    written.push(path);
    Ok(())
}

/// Writes every artifact derivable from `report` into `dir` and returns
/// the paths written:
///
/// * `records.csv`: long form, one row per record;
/// * `failures.csv`;
/// * `direct_querying.csv`: the tiered direct-querying pivot;
/// * `probing_<PROBLEM>.csv`: per-problem probing pivots;
/// * `selection.csv`: accuracy per cell with fold columns;
/// * `report.json`: records, failures and fold assignments;
/// * `probing_mae.svg`, `selection_accuracy.svg`.
pub fn emit_report(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::Io(dir.to_owned(), e))?;
    let mut written = Vec::new();
    write(dir.join("records.csv"), &long_csv(report), &mut written)?;
    let mut failures = String::from("experiment,problem,cell,reason\n");
    for f in &report.failures {
        let _ = writeln!(
            failures,
            "{},{},{},\"{}\"",
            f.experiment.as_str(),
            f.problem.code(),
            f.cell,
            f.reason.replace('"', "'")
        );
    }
    write(dir.join("failures.csv"), &failures, &mut written)?;

    if report
        .select(ExperimentKind::DirectQuerying)
        .next()
        .is_some()
    {
        write(
            dir.join("direct_querying.csv"),
            &table3_csv(report),
            &mut written,
        )?;
    }
    let probed: BTreeSet<ProblemKind> = report
        .select(ExperimentKind::FeatureProbing)
        .map(|r| r.problem)
        .collect();
    for problem in &probed {
        write(
            dir.join(format!("probing_{}.csv", problem.code())),
            &probing_csv(report, *problem),
            &mut written,
        )?;
    }
    if !probed.is_empty() {
        let bars: Vec<(String, f64)> = report
            .select(ExperimentKind::FeatureProbing)
            .filter(|r| r.feature.is_none() && r.metric == "mae" && r.replicate == 0)
            .filter_map(|r| {
                let label = format!(
                    "{} {} {} {} {}",
                    r.problem.code(),
                    opt(r.representation, |x| x.as_str().to_owned()),
                    r.model.as_deref().unwrap_or(""),
                    opt(r.pooling, |x| x.as_str().to_owned()),
                    opt(r.tier, |x| x.as_str().to_owned())
                );
                Some((label, r.value?))
            })
            .collect();
        write(
            dir.join("probing_mae.svg"),
            &bar_chart_svg("Probing MAE per cell", &bars),
            &mut written,
        )?;
    }
    if report
        .select(ExperimentKind::AlgorithmSelection)
        .next()
        .is_some()
    {
        write(
            dir.join("selection.csv"),
            &selection_csv(report),
            &mut written,
        )?;
        let bars: Vec<(String, f64)> = report
            .select(ExperimentKind::AlgorithmSelection)
            .filter(|r| r.fold.is_none() && r.metric == "accuracy" && r.replicate == 0)
            .filter_map(|r| {
                let label = format!(
                    "{} {} {} {} {}",
                    r.problem.code(),
                    opt(r.source, |x| x.as_str().to_owned()),
                    opt(r.representation, |x| x.as_str().to_owned()),
                    opt(r.pooling, |x| x.as_str().to_owned()),
                    r.model.as_deref().unwrap_or("")
                );
                Some((label, r.value?))
            })
            .collect();
        write(
            dir.join("selection_accuracy.svg"),
            &bar_chart_svg("Set-aware accuracy per cell", &bars),
            &mut written,
        )?;
    }
    let json =
        serde_json::to_string_pretty(report).map_err(|e| PipelineError::Config(e.to_string()))?;
    write(dir.join("report.json"), &json, &mut written)?;
    Ok(written)
}
