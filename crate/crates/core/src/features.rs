//! Handcrafted ground-truth features, tiered by how hard they are to read
//! off the instance text.
//!
//! Tier rule: a value printed verbatim in the file is `direct`; a count or
//! extremum is `low_effort`; anything aggregated or derived (means, ratios,
//! densities, per-node degrees) is `high_effort`.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::instances::{
    BinPackingInstance, GraphInstance, Instance, JobShopInstance, KnapsackInstance, ProblemKind,
};
use crate::util::fmt_opt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Integer,
    Real,
}

impl ValueType {
    /// Type name shown to the model in prompts.
    pub fn prompt_name(self) -> &'static str {
        match self {
            ValueType::Integer => "int",
            ValueType::Real => "float",
        }
    }

    /// JSON-schema type token.
    pub fn schema_name(self) -> &'static str {
        match self {
            ValueType::Integer => "integer",
            ValueType::Real => "number",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    Direct,
    LowEffort,
    HighEffort,
}

impl Complexity {
    pub const ALL: [Complexity; 3] = [
        Complexity::Direct,
        Complexity::LowEffort,
        Complexity::HighEffort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Complexity::Direct => "direct",
            Complexity::LowEffort => "low_effort",
            Complexity::HighEffort => "high_effort",
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub value_type: ValueType,
    pub complexity: Complexity,
}

const fn spec(
    name: &'static str,
    description: &'static str,
    value_type: ValueType,
    complexity: Complexity,
) -> FeatureSpec {
    FeatureSpec {
        name,
        description,
        value_type,
        complexity,
    }
}

use Complexity::{Direct, HighEffort, LowEffort};
use ValueType::{Integer, Real};

const BPP: &[FeatureSpec] = &[
    spec(
        "feat_capacity",
        "The capacity of each bin.",
        Integer,
        Direct,
    ),
    spec(
        "feat_items",
        "The total number of items to be packed.",
        Integer,
        Direct,
    ),
    spec(
        "feat_weight_max",
        "The maximum weight among all items.",
        Integer,
        LowEffort,
    ),
    spec(
        "feat_weight_min",
        "The minimum weight among all items.",
        Integer,
        LowEffort,
    ),
    spec(
        "feat_weight_mean",
        "The average weight of the items.",
        Real,
        HighEffort,
    ),
];

const GCP: &[FeatureSpec] = &[
    spec("feat_nodes", "The total number of nodes in the graph.", Integer, Direct),
    spec("feat_edges", "The total number of edges in the graph.", Integer, Direct),
    spec(
        "feat_degree_1",
        "The degree of node 1 in the graph, representing the number of connections per node.",
        Integer,
        HighEffort,
    ),
    spec(
        "feat_density",
        "The density of the graph, calculated as the ratio of 2 times the number of edges to the number of nodes times the number of nodes minus 1.",
        Real,
        HighEffort,
    ),
    spec("feat_ratio_1", "The ratio of the number of nodes to the number of edges in the graph.", Real, HighEffort),
    spec("feat_ratio_2", "The ratio of the number of edges to the number of nodes in the graph.", Real, HighEffort),
    spec(
        "feat_degree_mean",
        "The average degree of the nodes in the graph, representing the mean number of connections per node.",
        Real,
        HighEffort,
    ),
    spec(
        "feat_degree_max",
        "The maximum degree of the nodes in the graph, indicating the highest number of connections any node has.",
        Integer,
        HighEffort,
    ),
    spec(
        "feat_degree_min",
        "The minimum degree of the nodes in the graph, indicating the lowest number of connections any node has.",
        Integer,
        HighEffort,
    ),
];

const JSSP: &[FeatureSpec] = &[
    spec("feat_jobs", "The total number of jobs.", Integer, Direct),
    spec(
        "feat_machines",
        "The total number of machines.",
        Integer,
        Direct,
    ),
    spec(
        "feat_operations",
        "The total number of operations over all jobs.",
        Integer,
        LowEffort,
    ),
    spec(
        "feat_duration_max",
        "The maximum processing time among all operations.",
        Integer,
        LowEffort,
    ),
    spec(
        "feat_duration_min",
        "The minimum processing time among all operations.",
        Integer,
        LowEffort,
    ),
    spec(
        "feat_duration_mean",
        "The average processing time of the operations.",
        Real,
        HighEffort,
    ),
];

const KP: &[FeatureSpec] = &[
    spec("feat_capacity", "The capacity of the knapsack.", Integer, Direct),
    spec("feat_weight_max", "The maximum weight among all items.", Integer, LowEffort),
    spec("feat_weight_min", "The minimum weight among all items.", Integer, LowEffort),
    spec("feat_profit_max", "The maximum profit among all items.", Integer, LowEffort),
    spec("feat_profit_min", "The minimum profit among all items.", Integer, LowEffort),
    spec("feat_weight_1", "The weight of the first item.", Integer, LowEffort),
    spec("feat_profit_1", "The profit of the first item.", Integer, LowEffort),
    spec(
        "feat_efficiency_1",
        "The efficiency of the first item, calculated as its profit divided by its weight.",
        Real,
        LowEffort,
    ),
    spec("feat_weight_mean", "The average weight of the items.", Real, HighEffort),
    spec("feat_profit_mean", "The average profit of the items.", Real, HighEffort),
    spec(
        "feat_efficiency_mean",
        "The average efficiency of the items, where the efficiency of an item is its profit divided by its weight.",
        Real,
        HighEffort,
    ),
];

pub fn feature_catalog(kind: ProblemKind) -> &'static [FeatureSpec] {
    match kind {
        ProblemKind::Bpp => BPP,
        ProblemKind::Gcp => GCP,
        ProblemKind::Jssp => JSSP,
        ProblemKind::Kp => KP,
    }
}

pub fn find_feature(kind: ProblemKind, name: &str) -> Option<&'static FeatureSpec> {
    feature_catalog(kind).iter().find(|s| s.name == name)
}

/// Ground-truth values aligned with [`feature_catalog`]; `None` marks a value
/// that is undefined for this instance (e.g. nodes/edges on an edgeless graph).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub instance_name: String,
    pub kind: ProblemKind,
    pub values: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = feature_catalog(self.kind)
            .iter()
            .position(|s| s.name == name)?;
        self.values[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static FeatureSpec, Option<f64>)> + '_ {
        feature_catalog(self.kind)
            .iter()
            .zip(self.values.iter().copied())
    }
}

pub fn extract_features(instance: &Instance) -> FeatureVector {
    let values = match instance {
        Instance::BinPacking(b) => bin_packing(b),
        Instance::Graph(g) => graph(g),
        Instance::JobShop(j) => job_shop(j),
        Instance::Knapsack(k) => knapsack(k),
    };
    debug_assert_eq!(values.len(), feature_catalog(instance.kind()).len());
    FeatureVector {
        instance_name: instance.name().to_owned(),
        kind: instance.kind(),
        values,
    }
}

fn mean_u64(values: impl Iterator<Item = u64>) -> f64 {
    let (sum, n) = values.fold((0u128, 0u64), |(s, n), v| (s + u128::from(v), n + 1));
    sum as f64 / n as f64
}

fn bin_packing(b: &BinPackingInstance) -> Vec<Option<f64>> {
    let w = b.weights();
    vec![
        Some(b.capacity() as f64),
        Some(w.len() as f64),
        w.iter().max().map(|&x| x as f64),
        w.iter().min().map(|&x| x as f64),
        Some(mean_u64(w.iter().copied())),
    ]
}

fn graph(g: &GraphInstance) -> Vec<Option<f64>> {
    let n = g.num_nodes();
    let m = g.num_edges();
    let mut degree = vec![0usize; n + 1];
    for &(u, v) in g.edges() {
        degree[u] += 1;
        degree[v] += 1;
    }
    let degrees = &degree[1..];
    let nf = n as f64;
    let mf = m as f64;
    let pairs = nf * (nf - 1.0);
    vec![
        Some(nf),
        Some(mf),
        Some(degree[1] as f64),
        (n > 1).then(|| 2.0 * mf / pairs),
        (m > 0).then(|| nf / mf),
        Some(mf / nf),
        Some(degrees.iter().sum::<usize>() as f64 / nf),
        degrees.iter().max().map(|&d| d as f64),
        degrees.iter().min().map(|&d| d as f64),
    ]
}

fn job_shop(j: &JobShopInstance) -> Vec<Option<f64>> {
    let durations = || j.jobs().iter().flatten().map(|op| op.duration);
    vec![
        Some(j.num_jobs() as f64),
        Some(j.num_machines() as f64),
        Some(durations().count() as f64),
        durations().max().map(|d| d as f64),
        durations().min().map(|d| d as f64),
        Some(mean_u64(durations())),
    ]
}

fn knapsack(k: &KnapsackInstance) -> Vec<Option<f64>> {
    let items = k.items();
    let first = items[0];
    let efficiency = |i: &crate::instances::KnapsackItem| i.profit as f64 / i.weight as f64;
    vec![
        Some(k.capacity() as f64),
        items.iter().map(|i| i.weight).max().map(|x| x as f64),
        items.iter().map(|i| i.weight).min().map(|x| x as f64),
        items.iter().map(|i| i.profit).max().map(|x| x as f64),
        items.iter().map(|i| i.profit).min().map(|x| x as f64),
        Some(first.weight as f64),
        Some(first.profit as f64),
        Some(efficiency(&first)),
        Some(mean_u64(items.iter().map(|i| i.weight))),
        Some(mean_u64(items.iter().map(|i| i.profit))),
        Some(items.iter().map(efficiency).sum::<f64>() / items.len() as f64),
    ]
}

/// Writes the `instance × feature` ground-truth matrix as CSV. Undefined
/// values are empty cells.
pub fn write_ground_truth<W: Write>(
    out: W,
    kind: ProblemKind,
    vectors: &[FeatureVector],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance"];
    header.extend(feature_catalog(kind).iter().map(|s| s.name));
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.instance_name.clone()];
        row.extend(v.values.iter().map(|x| fmt_opt(*x)));
        w.write_record(&row)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::KnapsackItem;

    fn counts(kind: ProblemKind) -> ([usize; 2], [usize; 3]) {
        let cat = feature_catalog(kind);
        let ty = [
            cat.iter().filter(|s| s.value_type == Integer).count(),
            cat.iter().filter(|s| s.value_type == Real).count(),
        ];
        let tiers = Complexity::ALL.map(|c| cat.iter().filter(|s| s.complexity == c).count());
        (ty, tiers)
    }

    #[test]
    fn catalog_shapes_match_problem_summary() {
        assert_eq!(counts(ProblemKind::Bpp), ([4, 1], [2, 2, 1]));
        assert_eq!(counts(ProblemKind::Gcp), ([5, 4], [2, 0, 7]));
        assert_eq!(counts(ProblemKind::Jssp), ([5, 1], [2, 3, 1]));
        assert_eq!(counts(ProblemKind::Kp), ([7, 4], [1, 7, 3]));
    }

    #[test]
    fn catalog_names_unique() {
        for kind in ProblemKind::ALL {
            let cat = feature_catalog(kind);
            let mut names: Vec<_> = cat.iter().map(|s| s.name).collect();
            names.sort_unstable();
            names.dedup();
            assert_eq!(names.len(), cat.len());
        }
    }

    #[test]
    fn gcp_density_description() {
        let d = find_feature(ProblemKind::Gcp, "feat_density").unwrap();
        assert!(d.description.contains("ratio of 2 times the number of edges to the number of nodes times the number of nodes minus 1"));
    }

    #[test]
    fn complete_k2() {
        let g: Instance = GraphInstance::new("k2", 2, [(1, 2)]).unwrap().into();
        let f = extract_features(&g);
        for name in [
            "feat_degree_min",
            "feat_degree_max",
            "feat_degree_mean",
            "feat_density",
        ] {
            assert_eq!(f.get(name), Some(1.0), "{name}");
        }
    }

    #[test]
    fn edgeless_graph_ratio_undefined() {
        let g: Instance = GraphInstance::new("e", 3, []).unwrap().into();
        let f = extract_features(&g);
        assert_eq!(f.get("feat_ratio_1"), None);
        assert_eq!(f.get("feat_ratio_2"), Some(0.0));
        assert_eq!(f.get("feat_density"), Some(0.0));
        let single: Instance = GraphInstance::new("s", 1, []).unwrap().into();
        assert_eq!(extract_features(&single).get("feat_density"), None);
    }

    #[test]
    fn single_item_knapsack() {
        let k: Instance = KnapsackInstance::new(
            "k",
            5,
            vec![KnapsackItem {
                weight: 2,
                profit: 6,
            }],
        )
        .unwrap()
        .into();
        let f = extract_features(&k);
        assert_eq!(f.get("feat_efficiency_1"), Some(3.0));
        assert_eq!(f.get("feat_efficiency_mean"), Some(3.0));
    }

    #[test]
    fn ground_truth_csv_empty_cells() {
        let g: Instance = GraphInstance::new("e", 3, []).unwrap().into();
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, ProblemKind::Gcp, &[extract_features(&g)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "e,3,0,0,0,,0,0,0,0");
    }
}
