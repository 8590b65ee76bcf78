//! Fetch activations through an on-disk cache and pool them three ways.

use copa::instances::{parse_instance, ProblemKind};
use copa::llmio::{ActivationStore, MockActivationConfig, MockAnswers, MockProvider};
use copa::pooling::{pool, PoolingStrategy};
use copa::render::{render, Representation};

fn main() {
    let inst = parse_instance(ProblemKind::Jssp, "js2x2", "2 2\n0 5 1 3\n1 4 0 6\n").unwrap();
    let cfg = MockActivationConfig {
        dim: 8,
        ..MockActivationConfig::default()
    };
    let mock = MockProvider::new(MockAnswers::Regex, cfg, std::slice::from_ref(&inst));
    let cache = std::env::temp_dir().join("copa-activation-example");
    let store = ActivationStore::new(Some(cache.clone()), Some(&mock), Some(8));

    let rendering = render(&inst, Representation::NaturalLanguage);
    let m = store
        .fetch_activations(ProblemKind::Jssp, &rendering)
        .expect("activations");
    // The second fetch is served from disk.
    store
        .fetch_activations(ProblemKind::Jssp, &rendering)
        .expect("cached activations");
    println!(
        "{} tokens x {} dims, provider calls: {}, cache: {}",
        m.tokens(),
        m.dim(),
        mock.hidden_state_calls(),
        cache.display()
    );

    for strategy in PoolingStrategy::ALL {
        let v = pool(&m, strategy).unwrap().vector;
        let head: Vec<String> = v
            .iter()
            .skip(4)
            .take(4)
            .map(|x| format!("{x:+.3}"))
            .collect();
        println!("{:<5} [... {} ...]", strategy.as_str(), head.join(", "));
    }
}
