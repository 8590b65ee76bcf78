//! Deterministic stand-in for a model service.
//!
//! Direct queries are answered from the prompt alone: the mock reads the
//! problem, feature and fenced instance text back out of the prompt and then
//! either extracts the value with regular expressions (`Regex`), looks up the
//! ground truth (`Oracle`) or declines (`Null`).
//!
//! Hidden states carry each instance's feature vector, scaled by a per-feature
//! power of two so integers stay exact in `f32`, in the first `F` columns of
//! every token row. The remaining columns are seeded Gaussian noise. With
//! `plant = false` every column is noise.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::activations::ActivationMatrix;
use super::client::{Provider, ProviderError};
use crate::features::{extract_features, feature_catalog, find_feature, FeatureVector, ValueType};
use crate::instances::{Instance, ProblemKind};
use crate::render::{render, Rendering, Representation};
use crate::util::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockAnswers {
    Regex,
    Oracle,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockActivationConfig {
    pub dim: usize,
    pub seed: u64,
    pub plant: bool,
    /// Cap on rows per matrix, end-of-sequence row included.
    pub max_tokens: usize,
}

impl Default for MockActivationConfig {
    fn default() -> Self {
        MockActivationConfig {
            dim: 32,
            seed: 0,
            plant: true,
            max_tokens: 48,
        }
    }
}

pub struct MockProvider {
    answers: MockAnswers,
    activations: MockActivationConfig,
    instances: Vec<Instance>,
    features: Vec<FeatureVector>,
    by_text: HashMap<String, usize>,
    scales: BTreeMap<ProblemKind, Vec<f64>>,
    completions: AtomicUsize,
    hidden: AtomicUsize,
}

impl MockProvider {
    /// `instances` are the ones the mock can recognise for oracle answers and
    /// planted activations.
    pub fn new(
        answers: MockAnswers,
        activations: MockActivationConfig,
        instances: &[Instance],
    ) -> Self {
        let features: Vec<FeatureVector> = instances.iter().map(extract_features).collect();
        let mut by_text = HashMap::new();
        for (i, inst) in instances.iter().enumerate() {
            for rep in Representation::ALL {
                by_text.insert(render(inst, rep).text, i);
            }
        }
        let mut scales = BTreeMap::new();
        for kind in ProblemKind::ALL {
            let n = feature_catalog(kind).len();
            let mut max_abs = vec![0.0f64; n];
            for fv in features.iter().filter(|f| f.kind == kind) {
                for (m, v) in max_abs.iter_mut().zip(&fv.values) {
                    *m = m.max(v.map_or(0.0, f64::abs));
                }
            }
            scales.insert(
                kind,
                max_abs.into_iter().map(power_of_two_at_least).collect(),
            );
        }
        MockProvider {
            answers,
            activations,
            instances: instances.to_vec(),
            features,
            by_text,
            scales,
            completions: AtomicUsize::new(0),
            hidden: AtomicUsize::new(0),
        }
    }

    pub fn completion_calls(&self) -> usize {
        self.completions.load(Ordering::SeqCst)
    }

    pub fn hidden_state_calls(&self) -> usize {
        self.hidden.load(Ordering::SeqCst)
    }

    /// Column index of `feature` in planted activations, if it is planted.
    pub fn planted_column(&self, kind: ProblemKind, feature: &str) -> Option<usize> {
        let idx = feature_catalog(kind)
            .iter()
            .position(|s| s.name == feature)?;
        (self.activations.plant && idx < self.activations.dim).then_some(idx)
    }

    fn lookup(&self, text: &str) -> Option<usize> {
        self.by_text.get(text).copied()
    }

    fn answer(&self, prompt: &str) -> Result<String, ProviderError> {
        let parsed = ParsedPrompt::from_text(prompt)
            .ok_or_else(|| ProviderError::BadReply("unrecognised prompt".into()))?;
        let spec = find_feature(parsed.problem, &parsed.feature).ok_or_else(|| {
            ProviderError::BadReply(format!("unknown feature {}", parsed.feature))
        })?;
        let value = match self.answers {
            MockAnswers::Null => None,
            MockAnswers::Oracle => {
                let mut text = parsed.instance.clone();
                text.push('\n');
                let idx = self
                    .lookup(&text)
                    .ok_or_else(|| ProviderError::BadReply("unknown instance".into()))?;
                self.features[idx].get(spec.name)
            }
            MockAnswers::Regex => regex_answer(parsed.problem, spec.name, &parsed.instance),
        };
        Ok(format_answer(value, spec.value_type))
    }
}

fn power_of_two_at_least(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        2f64.powi(x.log2().ceil() as i32)
    }
}

fn format_answer(value: Option<f64>, ty: ValueType) -> String {
    match (value, ty) {
        (None, _) => r#"{"value": null}"#.to_owned(),
        (Some(v), ValueType::Integer) => format!(r#"{{"value": {}}}"#, v.round() as i64),
        (Some(v), ValueType::Real) => serde_json::json!({ "value": v }).to_string(),
    }
}

struct ParsedPrompt {
    problem: ProblemKind,
    feature: String,
    instance: String,
}

impl ParsedPrompt {
    fn from_text(text: &str) -> Option<Self> {
        static RE: OnceLock<(Regex, Regex)> = OnceLock::new();
        let (problem_re, feature_re) = RE.get_or_init(|| {
            (
                Regex::new(r"combinatorial optimization problem: ([^\n]+)\.\n").unwrap(),
                Regex::new(r"(?m)^- Feature name: (\S+)$").unwrap(),
            )
        });
        let problem = ProblemKind::from_full_name(problem_re.captures(text)?.get(1)?.as_str())?;
        let feature = feature_re.captures(text)?.get(1)?.as_str().to_owned();
        let start = text.find("\"\"\"\n")? + 4;
        let end = start + text[start..].rfind("\n\"\"\"")?;
        Some(ParsedPrompt {
            problem,
            feature,
            instance: text[start..end].to_owned(),
        })
    }
}

fn direct_patterns(problem: ProblemKind, feature: &str) -> &'static [&'static str] {
    match (problem, feature) {
        (ProblemKind::Gcp, "feat_nodes") => &[
            r"(?m)^p\s+\S+\s+(\d+)",
            r"The graph has (\d+) nodes",
            r"int: n = (\d+);",
        ],
        (ProblemKind::Gcp, "feat_edges") => &[
            r"(?m)^p\s+\S+\s+\d+\s+(\d+)",
            r"nodes and (\d+) edges",
            r"int: num_edges = (\d+);",
        ],
        (ProblemKind::Bpp, "feat_capacity") => &[
            r"\A\s*\d+[ \t]+(\d+)",
            r"The bin capacity is (\d+)\.",
            r"int: capacity = (\d+);",
        ],
        (ProblemKind::Bpp, "feat_items") => &[
            r"\A\s*(\d+)[ \t]+\d+",
            r"There are (\d+) items\.",
            r"int: n_items = (\d+);",
        ],
        (ProblemKind::Jssp, "feat_jobs") => &[
            r"\A\s*(\d+)[ \t]+\d+",
            r"There are (\d+) jobs",
            r"int: n_jobs = (\d+);",
        ],
        (ProblemKind::Jssp, "feat_machines") => &[
            r"\A\s*\d+[ \t]+(\d+)",
            r"jobs and (\d+) machines",
            r"int: n_machines = (\d+);",
        ],
        (ProblemKind::Kp, "feat_capacity") => &[
            r"\A\s*\d+[ \t]+(\d+)",
            r"The knapsack capacity is (\d+)\.",
            r"int: capacity = (\d+);",
        ],
        _ => &[],
    }
}

/// Directly printed values are read back exactly; anything else gets the
/// naive guess of the first number in the text.
fn regex_answer(problem: ProblemKind, feature: &str, instance: &str) -> Option<f64> {
    static CACHE: OnceLock<std::sync::Mutex<HashMap<&'static str, Regex>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut cache = cache.lock().expect("regex cache poisoned");
    let mut compiled = |pat: &'static str| {
        cache
            .entry(pat)
            .or_insert_with(|| Regex::new(pat).unwrap())
            .clone()
    };
    for pat in direct_patterns(problem, feature) {
        if let Some(c) = compiled(pat).captures(instance) {
            return c[1].parse().ok();
        }
    }
    if !direct_patterns(problem, feature).is_empty() {
        return None;
    }
    compiled(r"\d+")
        .find(instance)
        .and_then(|m| m.as_str().parse().ok())
}

impl Provider for MockProvider {
    fn complete(&self, prompt: &str, _schema: &serde_json::Value) -> Result<String, ProviderError> {
        self.completions.fetch_add(1, Ordering::SeqCst);
        self.answer(prompt)
    }

    fn hidden_states(&self, rendering: &Rendering) -> Result<ActivationMatrix, ProviderError> {
        self.hidden.fetch_add(1, Ordering::SeqCst);
        let cfg = &self.activations;
        let planted: Vec<f32> = if cfg.plant {
            let idx = self.lookup(&rendering.text).ok_or_else(|| {
                ProviderError::BadReply(format!("unknown instance `{}`", rendering.instance_name))
            })?;
            let fv = &self.features[idx];
            let scales = &self.scales[&self.instances[idx].kind()];
            fv.values
                .iter()
                .zip(scales)
                .take(cfg.dim)
                .map(|(v, s)| (v.unwrap_or(0.0) / s) as f32)
                .collect()
        } else {
            Vec::new()
        };
        let words = rendering.text.split_whitespace().count();
        let tokens = words.min(cfg.max_tokens.max(1) - 1) + 1;
        let mut rng = rng_for(
            cfg.seed,
            &[
                rendering.representation.as_str().as_bytes(),
                rendering.text.as_bytes(),
            ],
        );
        let mut data = Vec::with_capacity(tokens * cfg.dim);
        for _ in 0..tokens {
            data.extend_from_slice(&planted);
            for _ in planted.len()..cfg.dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(z as f32);
            }
        }
        ActivationMatrix::new(
            rendering.instance_name.clone(),
            rendering.representation,
            tokens,
            cfg.dim,
            data,
        )
        .map_err(|e| ProviderError::BadReply(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{GraphInstance, KnapsackInstance, KnapsackItem};
    use crate::llmio::prompt::{build_feature_prompt, value_schema_json};

    fn graph() -> Instance {
        GraphInstance::new("g1", 4, [(1, 2), (2, 3), (1, 4)])
            .unwrap()
            .into()
    }

    fn ask(provider: &MockProvider, inst: &Instance, feature: &str, rep: Representation) -> String {
        let spec = find_feature(inst.kind(), feature).unwrap();
        let p = build_feature_prompt(inst.kind(), spec, &render(inst, rep));
        provider
            .complete(&p.text, &value_schema_json(spec.value_type))
            .unwrap()
    }

    #[test]
    fn regex_reads_direct_features_in_every_representation() {
        let g = graph();
        let mock = MockProvider::new(MockAnswers::Regex, MockActivationConfig::default(), &[]);
        for rep in Representation::ALL {
            assert_eq!(
                ask(&mock, &g, "feat_nodes", rep),
                r#"{"value": 4}"#,
                "{rep}"
            );
            assert_eq!(
                ask(&mock, &g, "feat_edges", rep),
                r#"{"value": 3}"#,
                "{rep}"
            );
        }
        let k: Instance = KnapsackInstance::new(
            "k",
            50,
            vec![KnapsackItem {
                weight: 7,
                profit: 9,
            }],
        )
        .unwrap()
        .into();
        for rep in Representation::ALL {
            assert_eq!(
                ask(&mock, &k, "feat_capacity", rep),
                r#"{"value": 50}"#,
                "{rep}"
            );
        }
        assert_eq!(mock.completion_calls(), 9);
    }

    #[test]
    fn oracle_and_null_modes() {
        let g = graph();
        let oracle = MockProvider::new(
            MockAnswers::Oracle,
            MockActivationConfig::default(),
            std::slice::from_ref(&g),
        );
        assert_eq!(
            ask(&oracle, &g, "feat_density", Representation::CodeLike),
            r#"{"value":0.5}"#
        );
        let null = MockProvider::new(MockAnswers::Null, MockActivationConfig::default(), &[]);
        assert_eq!(
            ask(&null, &g, "feat_nodes", Representation::Standard),
            r#"{"value": null}"#
        );
    }

    #[test]
    fn planted_activations_are_reproducible() {
        let g = graph();
        let cfg = MockActivationConfig {
            dim: 16,
            seed: 3,
            ..Default::default()
        };
        let mock = MockProvider::new(MockAnswers::Regex, cfg, std::slice::from_ref(&g));
        let r = render(&g, Representation::Standard);
        let a = mock.hidden_states(&r).unwrap();
        let b = mock.hidden_states(&r).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 16);
        // 4 nodes, scale 4 -> 1.0 in column 0 of every row.
        assert!(a.iter_rows().all(|row| row[0] == 1.0));
        let other = MockProvider::new(
            MockAnswers::Regex,
            MockActivationConfig { seed: 4, ..cfg },
            std::slice::from_ref(&g),
        );
        assert_ne!(other.hidden_states(&r).unwrap(), a);
    }

    #[test]
    fn scales_are_powers_of_two() {
        assert_eq!(power_of_two_at_least(0.0), 1.0);
        assert_eq!(power_of_two_at_least(4.0), 4.0);
        assert_eq!(power_of_two_at_least(5.0), 8.0);
        assert_eq!(power_of_two_at_least(0.3), 0.5);
    }
}
