use std::collections::BTreeSet;

use rayon::prelude::*;

use super::config::InputSource;
use super::report::{CellFailure, ExperimentKind, MetricsReport, ProblemSplits, Record};
use super::{Embeddings, Experiment};
use crate::eval::{set_aware_accuracy, stratified_kfold, winning_set, WinnerSet};
use crate::matrix::Matrix;
use crate::pooling::PoolingStrategy;
use crate::probes::{predict_classifier, train_classifier, ClassifierKind, TrainConfig};
use crate::render::Representation;
use crate::util::stable_hash;

struct Input {
    source: InputSource,
    rep: Option<Representation>,
    pooling: Option<PoolingStrategy>,
    x: Matrix,
}

/// k-fold set-aware accuracy for every (input, classifier). The folds of a
/// problem are computed once and reused by every cell.
pub(super) fn run(exp: &Experiment<'_>, embeddings: Option<&Embeddings>) -> MetricsReport {
    let cfg = exp.cfg;
    let mut report = MetricsReport::default();
    for ds in exp.datasets {
        let fail = |report: &mut MetricsReport, cell: String, reason: String| {
            report.failures.push(CellFailure {
                experiment: ExperimentKind::AlgorithmSelection,
                problem: ds.kind,
                cell,
                reason,
            })
        };
        let Some(table) = &ds.performance else {
            fail(
                &mut report,
                "performance".into(),
                "no performance table".into(),
            );
            continue;
        };
        // Only instances with a performance row take part.
        let rows: Vec<usize> = (0..ds.len())
            .filter(|&i| table.row(ds.instances[i].name()).is_some())
            .collect();
        if rows.len() < ds.len() {
            log::warn!(
                "{}: {} instances lack performance rows",
                ds.kind.code(),
                ds.len() - rows.len()
            );
        }
        let sets: Result<Vec<WinnerSet>, _> = rows
            .iter()
            .map(|&i| {
                let name = ds.instances[i].name();
                winning_set(
                    name,
                    table.algorithms(),
                    table.row(name).unwrap(),
                    table.sense(),
                    cfg.tie_tolerance,
                )
            })
            .collect();
        let sets = match sets {
            Ok(s) => s,
            Err(e) => {
                fail(&mut report, "winner_sets".into(), e.to_string());
                continue;
            }
        };

        let mut inputs = Vec::new();
        for &source in &cfg.selection_sources {
            match source {
                InputSource::Embeddings => {
                    for &rep in &cfg.representations {
                        for &pooling in &cfg.pooling {
                            match embeddings.and_then(|e| e.matrices.get(&(ds.kind, rep, pooling)))
                            {
                                Some(m) => inputs.push(Input {
                                    source,
                                    rep: Some(rep),
                                    pooling: Some(pooling),
                                    x: m.select_rows(&rows),
                                }),
                                None => fail(
                                    &mut report,
                                    format!("embeddings/{}/{}", rep.as_str(), pooling.as_str()),
                                    "embeddings unavailable".into(),
                                ),
                            }
                        }
                    }
                }
                InputSource::Isa => match ds.isa_matrix() {
                    Some(Ok(m)) => inputs.push(Input {
                        source,
                        rep: None,
                        pooling: None,
                        x: m.select_rows(&rows),
                    }),
                    Some(Err(name)) => fail(
                        &mut report,
                        "isa".into(),
                        format!("no ISA row for `{name}`"),
                    ),
                    None => fail(&mut report, "isa".into(), "no ISA table".into()),
                },
                InputSource::Handcrafted => {
                    inputs.push(Input {
                        source,
                        rep: None,
                        pooling: None,
                        x: ds.handcrafted_matrix().select_rows(&rows),
                    });
                }
            }
        }

        for replicate in 0..cfg.replicates {
            let seed = stable_hash(&[
                &cfg.replicate_seed(replicate).to_le_bytes(),
                ds.kind.code().as_bytes(),
            ]);
            let folds = match stratified_kfold(&sets, cfg.folds, seed) {
                Ok(f) => f,
                Err(e) => {
                    fail(&mut report, "folds".into(), e.to_string());
                    continue;
                }
            };
            let winner_sets: Vec<BTreeSet<String>> = sets.iter().map(|s| s.set.clone()).collect();
            let k = folds.len();
            let cells: Vec<(usize, ClassifierKind, usize)> = (0..inputs.len())
                .flat_map(|i| {
                    cfg.classifiers
                        .iter()
                        .flat_map(move |&c| (0..k).map(move |f| (i, c, f)))
                })
                .collect();
            let scores: Vec<Result<f64, String>> = cells
                .par_iter()
                .map(|&(i, classifier, f)| {
                    let fold = &folds[f];
                    let (train, test) = (fold.train_indices(), fold.test_indices());
                    let labels: Vec<&str> =
                        train.iter().map(|&k| fold.labels[k].as_str()).collect();
                    let tc = TrainConfig {
                        seed: cfg.replicate_seed(replicate),
                        ..cfg.train
                    };
                    let x = &inputs[i].x;
                    let model = train_classifier(classifier, &x.select_rows(&train), &labels, &tc)
                        .map_err(|e| e.to_string())?;
                    let pred = predict_classifier(&model, &x.select_rows(&test))
                        .map_err(|e| e.to_string())?;
                    let truth: Vec<BTreeSet<String>> =
                        test.iter().map(|&k| winner_sets[k].clone()).collect();
                    set_aware_accuracy(&pred, &truth).map_err(|e| e.to_string())
                })
                .collect();

            for (i, input) in inputs.iter().enumerate() {
                for &classifier in &cfg.classifiers {
                    let base = |fold: Option<usize>, value: Option<f64>| {
                        let mut r = Record::new(
                            ExperimentKind::AlgorithmSelection,
                            ds.kind,
                            "accuracy",
                            value,
                        );
                        r.source = Some(input.source);
                        r.representation = input.rep;
                        r.pooling = input.pooling;
                        r.model = Some(classifier.as_str().to_owned());
                        r.replicate = replicate;
                        r.fold = fold;
                        r
                    };
                    let mut accs = Vec::new();
                    let mut last_err = None;
                    for (cell, score) in cells
                        .iter()
                        .zip(&scores)
                        .filter(|(c, _)| c.0 == i && c.1 == classifier)
                    {
                        match score {
                            Ok(a) => {
                                accs.push(*a);
                                report.records.push(base(Some(cell.2), Some(*a)));
                            }
                            Err(e) => {
                                last_err = Some(e.clone());
                                report.records.push(base(Some(cell.2), None));
                            }
                        }
                    }
                    let mean =
                        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);
                    report.records.push(base(None, mean));
                    if accs.is_empty() {
                        let name = [
                            Some(input.source.as_str()),
                            input.rep.map(|r| r.as_str()),
                            input.pooling.map(|p| p.as_str()),
                            Some(classifier.as_str()),
                        ]
                        .into_iter()
                        .flatten()
                        .collect::<Vec<_>>()
                        .join("/");
                        fail(&mut report, name, last_err.unwrap_or_default());
                    }
                }
            }
            report.splits.push(ProblemSplits {
                problem: ds.kind,
                replicate,
                folds,
            });
        }
    }
    report
}
