//! Ask the mock model for every feature of one instance and score the answers.

use copa::features::{extract_features, feature_catalog};
use copa::instances::{parse_instance, ProblemKind};
use copa::llmio::{
    build_feature_prompt, query_feature, value_schema_json, MockActivationConfig, MockAnswers,
    MockProvider, QueryLimits,
};
use copa::render::{render, Representation};

fn main() {
    let inst = parse_instance(ProblemKind::Bpp, "bpp5", "5 100\n20\n35\n50\n65\n80\n").unwrap();
    let truth = extract_features(&inst);
    let mock = MockProvider::new(
        MockAnswers::Regex,
        MockActivationConfig::default(),
        std::slice::from_ref(&inst),
    );
    let limits = QueryLimits::default();

    for rep in Representation::ALL {
        let rendering = render(&inst, rep);
        println!("{}:", rep.as_str());
        for (spec, want) in feature_catalog(ProblemKind::Bpp).iter().zip(&truth.values) {
            let prompt = build_feature_prompt(ProblemKind::Bpp, spec, &rendering);
            let res = query_feature(&mock, &prompt, &value_schema_json(spec.value_type), &limits);
            let got = res.value.map(|v| v.as_f64());
            println!(
                "  {:<20} truth {:>8} answer {:>8}  {:?}",
                spec.name,
                fmt(*want),
                fmt(got),
                res.outcome
            );
        }
    }
    println!("{} completions", mock.completion_calls());
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("null".into(), |x| format!("{x:.3}"))
}
