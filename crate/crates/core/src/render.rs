//! The three textual representations of an instance.
//!
//! `standard` is the canonical grammar of [`crate::instances`]. The other two
//! are fixed templates; see `docs/FORMATS.md` for every sentence and
//! declaration they emit.

use std::fmt::{self, Write as _};
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instances::{
    BinPackingInstance, GraphInstance, Instance, JobShopInstance, KnapsackInstance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Standard,
    NaturalLanguage,
    CodeLike,
}

impl Representation {
    pub const ALL: [Representation; 3] = [
        Representation::Standard,
        Representation::NaturalLanguage,
        Representation::CodeLike,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Standard => "standard",
            Representation::NaturalLanguage => "natural_language",
            Representation::CodeLike => "code_like",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', ' '], "_")
            .as_str()
        {
            "standard" => Ok(Representation::Standard),
            "natural_language" | "nl" => Ok(Representation::NaturalLanguage),
            "code_like" | "code" => Ok(Representation::CodeLike),
            other => Err(format!("unknown representation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendering {
    pub instance_name: String,
    pub representation: Representation,
    pub text: String,
    /// Whitespace-token count times 1.3, rounded up. Only used for context
    /// budget warnings.
    pub token_hint: Option<u64>,
}

impl Rendering {
    fn new(instance: &Instance, representation: Representation, text: String) -> Self {
        let words = text.split_whitespace().count() as u64;
        Rendering {
            instance_name: instance.name().to_owned(),
            representation,
            token_hint: Some((words * 13).div_ceil(10)),
            text,
        }
    }

    /// `<instance>.<representation>.txt`
    pub fn file_name(&self) -> String {
        format!("{}.{}.txt", self.instance_name, self.representation)
    }
}

pub fn render(instance: &Instance, representation: Representation) -> Rendering {
    match representation {
        Representation::Standard => render_standard(instance),
        Representation::NaturalLanguage => render_natural_language(instance),
        Representation::CodeLike => render_code_like(instance),
    }
}

pub fn render_standard(instance: &Instance) -> Rendering {
    let mut s = String::new();
    match instance {
        Instance::Graph(g) => {
            let _ = writeln!(s, "p edge {} {}", g.num_nodes(), g.num_edges());
            for (u, v) in g.edges() {
                let _ = writeln!(s, "e {u} {v}");
            }
        }
        Instance::BinPacking(b) => {
            let _ = writeln!(s, "{} {}", b.weights().len(), b.capacity());
            for w in b.weights() {
                let _ = writeln!(s, "{w}");
            }
        }
        Instance::JobShop(j) => {
            let _ = writeln!(s, "{} {}", j.num_jobs(), j.num_machines());
            for ops in j.jobs() {
                let line: Vec<String> = ops
                    .iter()
                    .map(|op| format!("{} {}", op.machine, op.duration))
                    .collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        Instance::Knapsack(k) => {
            let _ = writeln!(s, "{} {}", k.items().len(), k.capacity());
            for item in k.items() {
                let _ = writeln!(s, "{} {}", item.profit, item.weight);
            }
        }
    }
    Rendering::new(instance, Representation::Standard, s)
}

pub fn render_natural_language(instance: &Instance) -> Rendering {
    let mut sentences = vec![format!("The instance is named {}.", instance.name())];
    match instance {
        Instance::Graph(g) => nl_graph(g, &mut sentences),
        Instance::BinPacking(b) => nl_bin_packing(b, &mut sentences),
        Instance::JobShop(j) => nl_job_shop(j, &mut sentences),
        Instance::Knapsack(k) => nl_knapsack(k, &mut sentences),
    }
    let mut text = sentences.join(" ");
    text.push('\n');
    Rendering::new(instance, Representation::NaturalLanguage, text)
}

fn nl_graph(g: &GraphInstance, out: &mut Vec<String>) {
    out.push(format!(
        "The graph has {} nodes and {} edges.",
        g.num_nodes(),
        g.num_edges()
    ));
    out.extend(
        g.edges()
            .iter()
            .map(|(u, v)| format!("There is an edge between node {u} and node {v}.")),
    );
}

fn nl_bin_packing(b: &BinPackingInstance, out: &mut Vec<String>) {
    out.push(format!("The bin capacity is {}.", b.capacity()));
    out.push(format!("There are {} items.", b.weights().len()));
    out.extend(
        b.weights()
            .iter()
            .enumerate()
            .map(|(i, w)| format!("Item {} has weight {w}.", i + 1)),
    );
}

fn nl_job_shop(j: &JobShopInstance, out: &mut Vec<String>) {
    out.push(format!(
        "There are {} jobs and {} machines.",
        j.num_jobs(),
        j.num_machines()
    ));
    for (ji, ops) in j.jobs().iter().enumerate() {
        for (oi, op) in ops.iter().enumerate() {
            out.push(format!(
                "Operation {} of job {} runs on machine {} for {} time units.",
                oi + 1,
                ji + 1,
                op.machine,
                op.duration
            ));
        }
    }
}

fn nl_knapsack(k: &KnapsackInstance, out: &mut Vec<String>) {
    out.push(format!("The knapsack capacity is {}.", k.capacity()));
    out.push(format!("There are {} items.", k.items().len()));
    out.extend(k.items().iter().enumerate().map(|(i, it)| {
        format!(
            "Item {} has weight {} and profit {}.",
            i + 1,
            it.weight,
            it.profit
        )
    }));
}

fn dzn_list<T: fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn dzn_2d<T: fmt::Display>(rows: impl IntoIterator<Item = Vec<T>>) -> String {
    let rows: Vec<String> = rows
        .into_iter()
        .map(|r| {
            r.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect();
    if rows.is_empty() {
        "[| |]".to_owned()
    } else {
        format!("[| {} |]", rows.join(" | "))
    }
}

pub fn render_code_like(instance: &Instance) -> Rendering {
    let mut s = String::new();
    match instance {
        Instance::Graph(g) => {
            let _ = writeln!(s, "int: n = {};", g.num_nodes());
            let _ = writeln!(s, "set of int: V = 1..n;");
            let _ = writeln!(s, "int: num_edges = {};", g.num_edges());
            let _ = writeln!(
                s,
                "array[1..num_edges, 1..2] of V: E = {};",
                dzn_2d(g.edges().iter().map(|&(u, v)| vec![u, v]))
            );
        }
        Instance::BinPacking(b) => {
            let _ = writeln!(s, "int: n_items = {};", b.weights().len());
            let _ = writeln!(s, "int: capacity = {};", b.capacity());
            let _ = writeln!(
                s,
                "array[1..n_items] of int: weight = {};",
                dzn_list(b.weights())
            );
        }
        Instance::JobShop(j) => {
            let _ = writeln!(s, "int: n_jobs = {};", j.num_jobs());
            let _ = writeln!(s, "int: n_machines = {};", j.num_machines());
            let _ = writeln!(
                s,
                "array[1..n_jobs, 1..n_machines] of int: machine = {};",
                dzn_2d(
                    j.jobs()
                        .iter()
                        .map(|ops| ops.iter().map(|o| o.machine).collect::<Vec<_>>())
                )
            );
            let _ = writeln!(
                s,
                "array[1..n_jobs, 1..n_machines] of int: duration = {};",
                dzn_2d(
                    j.jobs()
                        .iter()
                        .map(|ops| ops.iter().map(|o| o.duration).collect::<Vec<_>>())
                )
            );
        }
        Instance::Knapsack(k) => {
            let _ = writeln!(s, "int: n = {};", k.items().len());
            let _ = writeln!(s, "int: capacity = {};", k.capacity());
            let _ = writeln!(
                s,
                "array[1..n] of int: weight = {};",
                dzn_list(k.items().iter().map(|i| i.weight))
            );
            let _ = writeln!(
                s,
                "array[1..n] of int: profit = {};",
                dzn_list(k.items().iter().map(|i| i.profit))
            );
        }
    }
    Rendering::new(instance, Representation::CodeLike, s)
}

/// Writes each rendering to `<dir>/<instance>.<representation>.txt`.
pub fn export_renderings(dir: &Path, renderings: &[Rendering]) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    renderings
        .iter()
        .map(|r| {
            let path = dir.join(r.file_name());
            std::fs::write(&path, &r.text)?;
            Ok(path)
        })
        .collect()
}
