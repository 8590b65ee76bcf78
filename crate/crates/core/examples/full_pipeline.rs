//! All three experiments end to end on a synthetic corpus with the mock provider.

use copa::pipeline::{emit_report, run_stages, RunConfig, Stage};

fn main() {
    let root = std::env::temp_dir().join("copa-full-pipeline");
    let data = root.join("data");
    copa::synth::write_synthetic_corpus(&data, 60, 42).expect("corpus written");

    let mut cfg = RunConfig::from_toml(include_str!("run.toml")).expect("valid config");
    cfg.data_dir = data;
    cfg.output_dir = root.join("out");
    cfg.activations_dir = Some(root.join("activations"));
    cfg.journal = Some(root.join("queries.jsonl"));

    let report = run_stages(
        &cfg,
        &[
            Stage::DirectQuerying,
            Stage::FeatureProbing,
            Stage::AlgorithmSelection,
        ],
    )
    .expect("run");
    for path in emit_report(&report, &cfg.output_dir).expect("report written") {
        println!("{}", path.display());
    }
    println!(
        "{} records, {} failed cells",
        report.records.len(),
        report.failures.len()
    );
    print!(
        "{}",
        std::fs::read_to_string(cfg.output_dir.join("direct_querying.csv")).unwrap()
    );
}
