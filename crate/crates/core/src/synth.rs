//! Seeded synthetic data: random instances, performance tables with a
//! planted winner rule, and opaque ISA-style descriptor tables.
//!
//! Used by the examples, the test suites and the mock pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::features::extract_features;
use crate::instances::{
    BinPackingInstance, GraphInstance, Instance, JobShopInstance, KnapsackInstance, KnapsackItem,
    ObjectiveSense, Operation, PerformanceTable, ProblemKind,
};
use crate::render::render_standard;
use crate::util::{fmt_num, rng_for};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Upper bound on nodes, items, or jobs x machines.
    pub max_elements: usize,
    /// Permit edgeless graphs and single-element instances.
    pub degenerate: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_elements: 30,
            degenerate: false,
        }
    }
}

pub fn random_instance(
    kind: ProblemKind,
    name: &str,
    rng: &mut ChaCha8Rng,
    opts: SynthOptions,
) -> Instance {
    let max = opts.max_elements.max(4);
    let lo = if opts.degenerate { 1 } else { 4 };
    match kind {
        ProblemKind::Gcp => {
            let n = rng.random_range(lo..=max);
            let p: f64 = if opts.degenerate {
                rng.random_range(0.0..1.0)
            } else {
                rng.random_range(0.1..0.6)
            };
            let mut edges = Vec::new();
            for u in 1..=n {
                for v in u + 1..=n {
                    // A Hamiltonian path keeps every degree positive.
                    if (!opts.degenerate && v == u + 1) || rng.random_bool(p) {
                        edges.push(if rng.random_bool(0.5) { (u, v) } else { (v, u) });
                    }
                }
            }
            edges.shuffle(rng);
            GraphInstance::new(name, n, edges)
                .expect("generated graph is valid")
                .into()
        }
        ProblemKind::Bpp => {
            let n = rng.random_range(lo.min(2)..=max);
            let weights: Vec<u64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
            let wmax = *weights.iter().max().unwrap();
            let capacity = wmax + rng.random_range(0..=100);
            BinPackingInstance::new(name, capacity, weights)
                .expect("generated bin packing is valid")
                .into()
        }
        ProblemKind::Jssp => {
            let least = if opts.degenerate { 1 } else { 2 };
            let machines = rng.random_range(least..=5usize.min(max));
            let jobs = rng.random_range(least..=(max / machines).max(least));
            let job_list = (0..jobs)
                .map(|_| {
                    let mut order: Vec<usize> = (0..machines).collect();
                    order.shuffle(rng);
                    order
                        .into_iter()
                        .map(|machine| Operation {
                            machine,
                            duration: rng.random_range(1..=99),
                        })
                        .collect()
                })
                .collect();
            JobShopInstance::new(name, machines, job_list)
                .expect("generated job shop is valid")
                .into()
        }
        ProblemKind::Kp => {
            let n = rng.random_range(lo.min(2)..=max);
            let items: Vec<KnapsackItem> = (0..n)
                .map(|_| KnapsackItem {
                    weight: rng.random_range(1..=100),
                    profit: rng.random_range(1..=100),
                })
                .collect();
            let total: u64 = items.iter().map(|i| i.weight).sum();
            let capacity = (total / 2).max(1);
            KnapsackInstance::new(name, capacity, items)
                .expect("generated knapsack is valid")
                .into()
        }
    }
}

/// `count` instances named `<code>_<index>` (zero-padded), reproducible from `seed`.
pub fn instances(kind: ProblemKind, count: usize, seed: u64, opts: SynthOptions) -> Vec<Instance> {
    let width = count.saturating_sub(1).to_string().len().max(3);
    (0..count)
        .map(|i| {
            let name = format!("{}_{i:0width$}", kind.code().to_lowercase());
            let mut rng = rng_for(seed, &[kind.code().as_bytes(), name.as_bytes()]);
            random_instance(kind, &name, &mut rng, opts)
        })
        .collect()
}

/// Portfolio sizes follow the benchmark collections: 2, 2, 12 and 3 algorithms.
pub fn portfolio(kind: ProblemKind) -> Vec<String> {
    match kind {
        ProblemKind::Gcp => vec!["DSATUR".into(), "MAXIS".into()],
        ProblemKind::Bpp => vec!["BPP_A".into(), "BPP_B".into()],
        ProblemKind::Jssp => (1..=12).map(|i| format!("JSSP_{i:02}")).collect(),
        ProblemKind::Kp => vec!["KP_A".into(), "KP_B".into(), "KP_C".into()],
    }
}

pub fn default_sense(kind: ProblemKind) -> ObjectiveSense {
    match kind {
        ProblemKind::Kp => ObjectiveSense::Maximize,
        _ => ObjectiveSense::Minimize,
    }
}

/// The feature whose median splits the planted winner rule.
pub fn selection_feature(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Bpp => "feat_weight_mean",
        ProblemKind::Gcp => "feat_density",
        ProblemKind::Jssp => "feat_duration_mean",
        ProblemKind::Kp => "feat_efficiency_mean",
    }
}

/// Objective values where the first algorithm wins below the median of
/// [`selection_feature`] and the second wins above it. A `tie_fraction`
/// share of instances has every algorithm tied.
pub fn planted_performance(
    kind: ProblemKind,
    instances: &[Instance],
    seed: u64,
    tie_fraction: f64,
) -> PerformanceTable {
    let algorithms = portfolio(kind);
    let sense = default_sense(kind);
    let feature = selection_feature(kind);
    let values: Vec<f64> = instances
        .iter()
        .map(|i| extract_features(i).get(feature).unwrap_or(0.0))
        .collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let sign = match sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };
    let mut rows = BTreeMap::new();
    for (inst, &v) in instances.iter().zip(&values) {
        let mut rng = rng_for(seed, &[b"performance", inst.name().as_bytes()]);
        let base = f64::from(rng.random_range(10..=1000u32));
        let tied = rng.random_bool(tie_fraction.clamp(0.0, 1.0));
        let winner = usize::from(v >= median);
        let row = (0..algorithms.len())
            .map(|a| {
                if tied || a == winner {
                    base
                } else {
                    base + sign * f64::from(rng.random_range(1..=50u32))
                }
            })
            .collect();
        rows.insert(inst.name().to_owned(), row);
    }
    PerformanceTable::new(kind, algorithms, rows, sense).expect("planted table is valid")
}

/// Every algorithm gets the same value on every instance.
pub fn tied_performance(kind: ProblemKind, instances: &[Instance]) -> PerformanceTable {
    let algorithms = portfolio(kind);
    let rows = instances
        .iter()
        .map(|i| (i.name().to_owned(), vec![42.0; algorithms.len()]))
        .collect();
    PerformanceTable::new(kind, algorithms, rows, default_sense(kind)).expect("tied table is valid")
}

/// Opaque descriptor table: a noisy copy of the selection feature plus
/// `extra` pure-noise columns. Returns the column names and one row per instance.
pub fn isa_features(
    kind: ProblemKind,
    instances: &[Instance],
    extra: usize,
    seed: u64,
) -> (Vec<String>, BTreeMap<String, Vec<f64>>) {
    let names: Vec<String> = (0..=extra).map(|i| format!("isa_{i}")).collect();
    let feature = selection_feature(kind);
    let rows = instances
        .iter()
        .map(|inst| {
            let mut rng = rng_for(seed, &[b"isa", inst.name().as_bytes()]);
            let v = extract_features(inst).get(feature).unwrap_or(0.0);
            let mut row = vec![v * (1.0 + rng.random_range(-0.01..0.01))];
            row.extend((0..extra).map(|_| rng.random_range(-1.0..1.0)));
            (inst.name().to_owned(), row)
        })
        .collect();
    (names, rows)
}

pub fn isa_csv(names: &[String], rows: &BTreeMap<String, Vec<f64>>) -> String {
    let mut out = String::from("instance");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (inst, row) in rows {
        out.push_str(inst);
        for v in row {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

/// Writes a problem directory in the layout the pipeline loads:
///
/// ```text
/// <dir>/<PROBLEM>/instances/<name>.txt   canonical grammar
/// <dir>/<PROBLEM>/performance.csv
/// <dir>/<PROBLEM>/isa.csv
/// ```
pub fn write_dataset(
    dir: &Path,
    kind: ProblemKind,
    instances: &[Instance],
    table: &PerformanceTable,
    isa: &(Vec<String>, BTreeMap<String, Vec<f64>>),
) -> io::Result<()> {
    let root = dir.join(kind.code());
    let inst_dir = root.join("instances");
    fs::create_dir_all(&inst_dir)?;
    for inst in instances {
        fs::write(
            inst_dir.join(format!("{}.txt", inst.name())),
            render_standard(inst).text,
        )?;
    }
    fs::write(root.join("performance.csv"), table.to_csv())?;
    fs::write(root.join("isa.csv"), isa_csv(&isa.0, &isa.1))?;
    Ok(())
}

/// Convenience: a full synthetic dataset for every problem under `dir`.
pub fn write_synthetic_corpus(dir: &Path, per_problem: usize, seed: u64) -> io::Result<()> {
    for kind in ProblemKind::ALL {
        let inst = instances(kind, per_problem, seed, SynthOptions::default());
        let table = planted_performance(kind, &inst, seed, 0.1);
        let isa = isa_features(kind, &inst, 3, seed);
        write_dataset(dir, kind, &inst, &table, &isa)?;
    }
    Ok(())
}
