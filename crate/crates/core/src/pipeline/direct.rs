use super::report::{CellFailure, ExperimentKind, MetricsReport, Record};
use super::{Experiment, PipelineError};
use crate::eval::{is_equal, is_within, mae};
use crate::features::{feature_catalog, Complexity};
use crate::llmio::{
    build_feature_prompt, query_feature, run_bounded, value_schema_json, QueryJournal, QueryKey,
    QueryOutcome, QueryResult,
};
use crate::render::{render, Representation};

struct Task {
    ds: usize,
    rep: Representation,
    feature: usize,
    inst: usize,
}

pub(super) fn run(exp: &Experiment<'_>) -> Result<MetricsReport, PipelineError> {
    let provider = exp
        .provider()
        .ok_or(PipelineError::NoProvider("direct querying"))?;
    let cfg = exp.cfg;
    let journal = match &cfg.journal {
        Some(p) => Some(QueryJournal::open(p).map_err(|e| PipelineError::Io(p.clone(), e))?),
        None => None,
    };
    let mut report = MetricsReport::default();
    for (d, ds) in exp.datasets.iter().enumerate() {
        let catalog = feature_catalog(ds.kind);
        for &rep in &cfg.representations {
            let renderings: Vec<_> = ds.instances.iter().map(|i| render(i, rep)).collect();
            let tasks: Vec<Task> = (0..catalog.len())
                .flat_map(|f| {
                    (0..ds.len()).map(move |i| Task {
                        ds: d,
                        rep,
                        feature: f,
                        inst: i,
                    })
                })
                .collect();
            let results: Vec<QueryResult> = run_bounded(&tasks, cfg.query.max_in_flight, |t| {
                let ds = &exp.datasets[t.ds];
                let spec = &catalog[t.feature];
                let key = QueryKey {
                    problem: ds.kind,
                    representation: t.rep,
                    instance: ds.instances[t.inst].name().to_owned(),
                    feature: spec.name.to_owned(),
                };
                if let Some(done) = journal.as_ref().and_then(|j| j.get(&key)) {
                    return done.clone();
                }
                let prompt = build_feature_prompt(ds.kind, spec, &renderings[t.inst]);
                let result = query_feature(
                    provider,
                    &prompt,
                    &value_schema_json(spec.value_type),
                    &cfg.query,
                );
                if let Some(j) = &journal {
                    if let Err(e) = j.append(&key, &result) {
                        log::warn!("journal write failed: {e}");
                    }
                }
                result
            });

            for tier in Complexity::ALL {
                let in_tier: Vec<usize> = (0..catalog.len())
                    .filter(|&f| catalog[f].complexity == tier)
                    .collect();
                if in_tier.is_empty() {
                    continue;
                }
                let (mut preds, mut truths) = (Vec::new(), Vec::new());
                let (
                    mut scored,
                    mut eq,
                    mut w1,
                    mut w5,
                    mut nulls,
                    mut parse_fail,
                    mut transport_fail,
                ) = (0usize, 0, 0, 0, 0, 0, 0);
                for (t, r) in tasks
                    .iter()
                    .zip(&results)
                    .filter(|(t, _)| in_tier.contains(&t.feature))
                {
                    match r.outcome {
                        QueryOutcome::ParseFailure(_) => parse_fail += 1,
                        QueryOutcome::TransportFailure(_) => transport_fail += 1,
                        _ => {}
                    }
                    let Some(truth) = ds.features[t.inst].values[t.feature] else {
                        continue;
                    };
                    let pred = r.value.map(|v| v.as_f64());
                    preds.push(pred);
                    truths.push(Some(truth));
                    scored += 1;
                    match pred {
                        None => nulls += usize::from(r.outcome == QueryOutcome::Null),
                        Some(p) => {
                            eq += usize::from(is_equal(p, truth, catalog[t.feature].value_type));
                            w1 += usize::from(is_within(p, truth, 0.01));
                            w5 += usize::from(is_within(p, truth, 0.05));
                        }
                    }
                }
                let total = tasks
                    .iter()
                    .filter(|t| in_tier.contains(&t.feature))
                    .count();
                if total > 0 && transport_fail == total {
                    report.failures.push(CellFailure {
                        experiment: ExperimentKind::DirectQuerying,
                        problem: ds.kind,
                        cell: format!("{}/{}", rep.as_str(), tier.as_str()),
                        reason: "every query failed in transport".into(),
                    });
                }
                let rate = |c: usize| (scored > 0).then(|| c as f64 / scored as f64);
                let metrics = [
                    ("mae", mae(&preds, &truths).ok()),
                    ("equals", rate(eq)),
                    ("within_1pct", rate(w1)),
                    ("within_5pct", rate(w5)),
                    ("null_rate", rate(nulls)),
                    (
                        "parse_failure_rate",
                        (total > 0).then(|| parse_fail as f64 / total as f64),
                    ),
                    (
                        "transport_failure_rate",
                        (total > 0).then(|| transport_fail as f64 / total as f64),
                    ),
                    ("queries", Some(total as f64)),
                ];
                for (metric, value) in metrics {
                    let mut r = Record::new(ExperimentKind::DirectQuerying, ds.kind, metric, value);
                    r.representation = Some(rep);
                    r.tier = Some(tier);
                    report.records.push(r);
                }
            }
        }
    }
    Ok(report)
}
