use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::PipelineError;
use crate::features::{extract_features, FeatureVector};
use crate::instances::{
    load_performance_table, parse_instance, Instance, ObjectiveSense, PerformanceTable, ProblemKind,
};
use crate::matrix::Matrix;

/// Opaque per-instance descriptors read from CSV (`instance,<name>,...`).
#[derive(Debug, Clone, PartialEq)]
pub struct IsaTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl IsaTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| e.to_string())?.clone();
        if header.get(0) != Some("instance") {
            return Err("first column must be `instance`".into());
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut rows = BTreeMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let values = rec
                .iter()
                .skip(1)
                .map(|c| {
                    if c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>().map_err(|_| format!("bad ISA value `{c}`"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if rows.insert(rec[0].to_owned(), values).is_some() {
                return Err(format!("duplicate ISA row `{}`", &rec[0]));
            }
        }
        Ok(IsaTable { names, rows })
    }
}

/// Instances of one problem with their ground truth and optional
/// selection inputs, ordered by instance name.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: ProblemKind,
    pub instances: Vec<Instance>,
    pub features: Vec<FeatureVector>,
    pub performance: Option<PerformanceTable>,
    pub isa: Option<IsaTable>,
}

impl Dataset {
    pub fn new(
        kind: ProblemKind,
        mut instances: Vec<Instance>,
        performance: Option<PerformanceTable>,
        isa: Option<IsaTable>,
    ) -> Self {
        instances.sort_by(|a, b| a.name().cmp(b.name()));
        let features = instances.iter().map(extract_features).collect();
        Dataset {
            kind,
            instances,
            features,
            performance,
            isa,
        }
    }

    /// Loads `<dir>/<PROBLEM>/instances/*` plus the optional
    /// `performance.csv` and `isa.csv`. Instance names are file stems.
    pub fn load(
        dir: &Path,
        kind: ProblemKind,
        sense: ObjectiveSense,
    ) -> Result<Self, PipelineError> {
        let root = dir.join(kind.code());
        let inst_dir = root.join("instances");
        let mut paths: Vec<_> = fs::read_dir(&inst_dir)
            .map_err(|e| PipelineError::Io(inst_dir.clone(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let mut instances = Vec::with_capacity(paths.len());
        for p in &paths {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::Io(p.clone(), e))?;
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            instances.push(
                parse_instance(kind, name, &text)
                    .map_err(|e| PipelineError::Parse(p.clone(), e))?,
            );
        }
        let perf_path = root.join("performance.csv");
        let performance = if perf_path.exists() {
            let text = fs::read_to_string(&perf_path)
                .map_err(|e| PipelineError::Io(perf_path.clone(), e))?;
            Some(
                load_performance_table(kind, sense, &text)
                    .map_err(|e| PipelineError::Table(perf_path.clone(), e))?,
            )
        } else {
            None
        };
        let isa_path = root.join("isa.csv");
        let isa = if isa_path.exists() {
            let text = fs::read_to_string(&isa_path)
                .map_err(|e| PipelineError::Io(isa_path.clone(), e))?;
            Some(
                IsaTable::parse(&text)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", isa_path.display())))?,
            )
        } else {
            None
        };
        Ok(Dataset::new(kind, instances, performance, isa))
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Handcrafted feature matrix; undefined values become NaN and are
    /// imputed by the probe preprocessing.
    pub fn handcrafted_matrix(&self) -> Matrix {
        let cols = self.features.first().map_or(0, |f| f.values.len());
        Matrix::from_rows(
            cols,
            self.features.iter().map(|f| {
                f.values
                    .iter()
                    .map(|v| v.unwrap_or(f64::NAN))
                    .collect::<Vec<_>>()
            }),
        )
    }

    /// ISA matrix aligned with `instances`, or the first instance lacking a row.
    pub fn isa_matrix(&self) -> Option<Result<Matrix, String>> {
        let isa = self.isa.as_ref()?;
        let mut rows = Vec::with_capacity(self.len());
        for inst in &self.instances {
            match isa.rows.get(inst.name()) {
                Some(r) if r.len() == isa.names.len() => rows.push(r.clone()),
                _ => return Some(Err(inst.name().to_owned())),
            }
        }
        Some(Ok(Matrix::from_rows(isa.names.len(), rows)))
    }
}
