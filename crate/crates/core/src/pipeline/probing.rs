use rayon::prelude::*;

use super::report::{CellFailure, ExperimentKind, MetricsReport, Record};
use super::{Embeddings, Experiment};
use crate::eval::{mae, match_rates, shuffle_split};
use crate::features::{feature_catalog, Complexity};
use crate::pooling::PoolingStrategy;
use crate::probes::{predict_regressor, train_regressor, RegressorKind, TrainConfig};
use crate::render::Representation;
use crate::util::stable_hash;

struct Cell {
    ds: usize,
    replicate: usize,
    rep: Representation,
    pooling: PoolingStrategy,
    regressor: RegressorKind,
    feature: usize,
}

struct Outcome {
    metrics: Vec<(&'static str, Option<f64>)>,
    error: Option<String>,
}

/// Trains one regressor per (representation, pooling, probe, feature) on a
/// shared train/validation split and scores it on the validation rows.
pub(super) fn run(exp: &Experiment<'_>, embeddings: &Embeddings) -> MetricsReport {
    let cfg = exp.cfg;
    let mut cells = Vec::new();
    let mut splits = Vec::new();
    for replicate in 0..cfg.replicates {
        for (d, ds) in exp.datasets.iter().enumerate() {
            let seed = stable_hash(&[
                &cfg.replicate_seed(replicate).to_le_bytes(),
                ds.kind.code().as_bytes(),
            ]);
            splits.push((
                (replicate, d),
                shuffle_split(ds.len(), cfg.split_ratio, seed),
            ));
            for &rep in &cfg.representations {
                for &pooling in &cfg.pooling {
                    for &regressor in &cfg.regressors {
                        for feature in 0..feature_catalog(ds.kind).len() {
                            cells.push(Cell {
                                ds: d,
                                replicate,
                                rep,
                                pooling,
                                regressor,
                                feature,
                            });
                        }
                    }
                }
            }
        }
    }
    let split_of = |replicate: usize, d: usize| {
        &splits
            .iter()
            .find(|(k, _)| *k == (replicate, d))
            .expect("split exists")
            .1
    };

    let outcomes: Vec<Outcome> = cells
        .par_iter()
        .map(|c| {
            let ds = &exp.datasets[c.ds];
            let Some(x) = embeddings.matrices.get(&(ds.kind, c.rep, c.pooling)) else {
                return Outcome {
                    metrics: Vec::new(),
                    error: Some("no embeddings".into()),
                };
            };
            let (train, test) = split_of(c.replicate, c.ds);
            let truth = |i: usize| ds.features[i].values[c.feature];
            let train: Vec<usize> = train
                .iter()
                .copied()
                .filter(|&i| truth(i).is_some())
                .collect();
            let test: Vec<usize> = test
                .iter()
                .copied()
                .filter(|&i| truth(i).is_some())
                .collect();
            let y: Vec<f64> = train.iter().map(|&i| truth(i).unwrap()).collect();
            let tc = TrainConfig {
                seed: cfg.replicate_seed(c.replicate),
                ..cfg.train
            };
            let fitted = train_regressor(c.regressor, &x.select_rows(&train), &y, &tc)
                .and_then(|m| predict_regressor(&m, &x.select_rows(&test)));
            match fitted {
                Err(e) => Outcome {
                    metrics: Vec::new(),
                    error: Some(e.to_string()),
                },
                Ok(pred) => {
                    let pred: Vec<Option<f64>> = pred.into_iter().map(Some).collect();
                    let t: Vec<Option<f64>> = test.iter().map(|&i| truth(i)).collect();
                    let mean = y.iter().sum::<f64>() / y.len() as f64;
                    let rates =
                        match_rates(&pred, &t, feature_catalog(ds.kind)[c.feature].value_type).ok();
                    Outcome {
                        metrics: vec![
                            ("mae", mae(&pred, &t).ok()),
                            ("equals", rates.map(|r| r.equals)),
                            ("within_1pct", rates.map(|r| r.within_1pct)),
                            ("within_5pct", rates.map(|r| r.within_5pct)),
                            (
                                "mean_baseline_mae",
                                mae(&vec![Some(mean); t.len()], &t).ok(),
                            ),
                        ],
                        error: None,
                    }
                }
            }
        })
        .collect();

    let mut report = MetricsReport::default();
    let mut i = 0;
    while i < cells.len() {
        // Cells of one (replicate, problem, representation, pooling, probe) are contiguous.
        let head = &cells[i];
        let group_end = i + feature_catalog(exp.datasets[head.ds].kind).len();
        let ds = &exp.datasets[head.ds];
        let catalog = feature_catalog(ds.kind);
        let base = |metric: &str, value: Option<f64>| {
            let mut r = Record::new(ExperimentKind::FeatureProbing, ds.kind, metric, value);
            r.representation = Some(head.rep);
            r.pooling = Some(head.pooling);
            r.model = Some(head.regressor.as_str().to_owned());
            r.replicate = head.replicate;
            r
        };
        let mut failed = 0;
        for (c, o) in cells[i..group_end].iter().zip(&outcomes[i..group_end]) {
            if o.error.is_some() {
                failed += 1;
            }
            let names = [
                "mae",
                "equals",
                "within_1pct",
                "within_5pct",
                "mean_baseline_mae",
            ];
            for name in names {
                let value = o
                    .metrics
                    .iter()
                    .find(|(n, _)| *n == name)
                    .and_then(|(_, v)| *v);
                let mut r = base(name, value);
                r.feature = Some(catalog[c.feature].name.to_owned());
                r.tier = Some(catalog[c.feature].complexity);
                report.records.push(r);
            }
        }
        if failed == group_end - i {
            report.failures.push(CellFailure {
                experiment: ExperimentKind::FeatureProbing,
                problem: ds.kind,
                cell: format!(
                    "{}/{}/{}",
                    head.rep.as_str(),
                    head.pooling.as_str(),
                    head.regressor.as_str()
                ),
                reason: outcomes[i].error.clone().unwrap_or_default(),
            });
        }
        for tier in Complexity::ALL {
            let maes: Vec<f64> = (i..group_end)
                .filter(|&k| catalog[cells[k].feature].complexity == tier)
                .filter_map(|k| outcomes[k].metrics.first().and_then(|m| m.1))
                .collect();
            if !catalog.iter().any(|s| s.complexity == tier) {
                continue;
            }
            let mean = (!maes.is_empty()).then(|| maes.iter().sum::<f64>() / maes.len() as f64);
            let mut r = base("mae", mean);
            r.tier = Some(tier);
            report.records.push(r);
        }
        i = group_end;
    }
    report
}
