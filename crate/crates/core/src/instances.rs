//! Benchmark instance types, their canonical text grammars, and algorithm
//! performance tables.
//!
//! Grammars (`standard` representation):
//!
//! * GCP: DIMACS. `c ...` comment lines anywhere, one `p <FORMAT> <nodes> <edges>`
//!   problem line, then one `e <u> <v>` line per edge (1-based nodes).
//! * BPP: `<num_items> <capacity>`, then one item weight per line.
//! * JSSP: `<jobs> <machines>`, then one line per job holding `machine duration`
//!   pairs in processing order (machines 0-based).
//! * KP: `<num_items> <capacity>`, then one `<profit> <weight>` line per item.
//!
//! Tokens are separated by any run of blanks or tabs, blank lines are
//! skipped, and both LF and CRLF line endings are accepted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "BPP")]
    Bpp,
    #[serde(rename = "GCP")]
    Gcp,
    #[serde(rename = "JSSP")]
    Jssp,
    #[serde(rename = "KP")]
    Kp,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Bpp,
        ProblemKind::Gcp,
        ProblemKind::Jssp,
        ProblemKind::Kp,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ProblemKind::Bpp => "BPP",
            ProblemKind::Gcp => "GCP",
            ProblemKind::Jssp => "JSSP",
            ProblemKind::Kp => "KP",
        }
    }

    /// Name used when talking to the model.
    pub fn full_name(self) -> &'static str {
        match self {
            ProblemKind::Bpp => "Bin Packing Problem",
            ProblemKind::Gcp => "Graph Coloring Problem",
            ProblemKind::Jssp => "Job Shop Scheduling Problem",
            ProblemKind::Kp => "Knapsack Problem",
        }
    }

    pub fn from_full_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.full_name() == name)
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BPP" | "BP" => Ok(ProblemKind::Bpp),
            "GCP" => Ok(ProblemKind::Gcp),
            "JSSP" | "JSP" => Ok(ProblemKind::Jssp),
            "KP" => Ok(ProblemKind::Kp),
            other => Err(format!("unknown problem kind `{other}`")),
        }
    }
}

/// Violations of an instance type's invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("node index {index} outside [1, {num_nodes}]")]
    NodeOutOfRange { index: usize, num_nodes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("item weight {weight} exceeds capacity {capacity}")]
    WeightExceedsCapacity { weight: u64, capacity: u64 },
    #[error("job {job} has {found} operations, expected {expected}")]
    OperationCount {
        job: usize,
        found: usize,
        expected: usize,
    },
    #[error("machine index {machine} outside [0, {num_machines})")]
    MachineOutOfRange { machine: usize, num_machines: usize },
    #[error("instance has no items")]
    Empty,
}

/// Undirected simple graph with 1-based nodes. Edges are stored as sorted
/// `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInstance {
    name: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphInstance {
    pub fn new(
        name: impl Into<String>,
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, InstanceError> {
        if num_nodes == 0 {
            return Err(InstanceError::NonPositive("number of nodes"));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            check_edge(u, v, num_nodes)?;
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(InstanceError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(GraphInstance {
            name: name.into(),
            num_nodes,
            edges: set.into_iter().collect(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

fn check_edge(u: usize, v: usize, num_nodes: usize) -> Result<(), InstanceError> {
    for index in [u, v] {
        if index == 0 || index > num_nodes {
            return Err(InstanceError::NodeOutOfRange { index, num_nodes });
        }
    }
    if u == v {
        return Err(InstanceError::SelfLoop(u));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPackingInstance {
    name: String,
    capacity: u64,
    weights: Vec<u64>,
}

impl BinPackingInstance {
    pub fn new(
        name: impl Into<String>,
        capacity: u64,
        weights: Vec<u64>,
    ) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::NonPositive("capacity"));
        }
        if weights.is_empty() {
            return Err(InstanceError::Empty);
        }
        for &w in &weights {
            if w == 0 {
                return Err(InstanceError::NonPositive("item weight"));
            }
            if w > capacity {
                return Err(InstanceError::WeightExceedsCapacity {
                    weight: w,
                    capacity,
                });
            }
        }
        Ok(BinPackingInstance {
            name: name.into(),
            capacity,
            weights,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

/// One job-shop operation: the machine it runs on and its duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub machine: usize,
    pub duration: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobShopInstance {
    name: String,
    num_machines: usize,
    jobs: Vec<Vec<Operation>>,
}

impl JobShopInstance {
    pub fn new(
        name: impl Into<String>,
        num_machines: usize,
        jobs: Vec<Vec<Operation>>,
    ) -> Result<Self, InstanceError> {
        if num_machines == 0 {
            return Err(InstanceError::NonPositive("number of machines"));
        }
        if jobs.is_empty() {
            return Err(InstanceError::NonPositive("number of jobs"));
        }
        for (job, ops) in jobs.iter().enumerate() {
            if ops.len() != num_machines {
                return Err(InstanceError::OperationCount {
                    job,
                    found: ops.len(),
                    expected: num_machines,
                });
            }
            for op in ops {
                if op.machine >= num_machines {
                    return Err(InstanceError::MachineOutOfRange {
                        machine: op.machine,
                        num_machines,
                    });
                }
                if op.duration == 0 {
                    return Err(InstanceError::NonPositive("operation duration"));
                }
            }
        }
        Ok(JobShopInstance {
            name: name.into(),
            num_machines,
            jobs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn jobs(&self) -> &[Vec<Operation>] {
        &self.jobs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackItem {
    pub weight: u64,
    pub profit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    name: String,
    capacity: u64,
    items: Vec<KnapsackItem>,
}

impl KnapsackInstance {
    pub fn new(
        name: impl Into<String>,
        capacity: u64,
        items: Vec<KnapsackItem>,
    ) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::NonPositive("capacity"));
        }
        if items.is_empty() {
            return Err(InstanceError::Empty);
        }
        for item in &items {
            if item.weight == 0 {
                return Err(InstanceError::NonPositive("item weight"));
            }
            if item.profit == 0 {
                return Err(InstanceError::NonPositive("item profit"));
            }
        }
        Ok(KnapsackInstance {
            name: name.into(),
            capacity,
            items,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn items(&self) -> &[KnapsackItem] {
        &self.items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instance {
    BinPacking(BinPackingInstance),
    Graph(GraphInstance),
    JobShop(JobShopInstance),
    Knapsack(KnapsackInstance),
}

impl Instance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::BinPacking(_) => ProblemKind::Bpp,
            Instance::Graph(_) => ProblemKind::Gcp,
            Instance::JobShop(_) => ProblemKind::Jssp,
            Instance::Knapsack(_) => ProblemKind::Kp,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Instance::BinPacking(i) => i.name(),
            Instance::Graph(i) => i.name(),
            Instance::JobShop(i) => i.name(),
            Instance::Knapsack(i) => i.name(),
        }
    }
}

impl From<GraphInstance> for Instance {
    fn from(g: GraphInstance) -> Self {
        Instance::Graph(g)
    }
}

impl From<BinPackingInstance> for Instance {
    fn from(b: BinPackingInstance) -> Self {
        Instance::BinPacking(b)
    }
}

impl From<JobShopInstance> for Instance {
    fn from(j: JobShopInstance) -> Self {
        Instance::JobShop(j)
    }
}

impl From<KnapsackInstance> for Instance {
    fn from(k: KnapsackInstance) -> Self {
        Instance::Knapsack(k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("index {value} out of range (allowed {min}..={max})")]
    IndexOutOfRange { value: u64, min: u64, max: u64 },
    #[error("{what}: declared {declared}, found {found}")]
    CountMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("{0}")]
    Invalid(InstanceError),
}

/// A parse failure, tagged with the 1-based line it was detected on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, kind }
    }
}

/// Non-blank lines with their 1-based line numbers, split into tokens.
fn token_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
}

fn number(tok: &str, line: usize, what: &str) -> Result<u64, ParseError> {
    tok.parse::<u64>().map_err(|_| {
        ParseError::new(
            line,
            ParseErrorKind::MalformedLine(format!("{what} `{tok}` is not a non-negative integer")),
        )
    })
}

fn positive(tok: &str, line: usize, what: &str) -> Result<u64, ParseError> {
    let v = number(tok, line, what)?;
    if v == 0 {
        return Err(ParseError::new(
            line,
            ParseErrorKind::MalformedLine(format!("{what} must be positive")),
        ));
    }
    Ok(v)
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    arity: usize,
    shape: &str,
) -> Result<(usize, Vec<&'a str>), ParseError> {
    let (line, toks) = lines
        .next()
        .ok_or(ParseError::new(1, ParseErrorKind::Empty))?;
    if toks.len() != arity {
        return Err(ParseError::new(
            line,
            ParseErrorKind::MalformedHeader(format!("expected `{shape}`")),
        ));
    }
    Ok((line, toks))
}

/// Parses a `standard` file of the given kind. `name` becomes the instance
/// identifier (benchmark files usually carry it only in the file name).
pub fn parse_instance(kind: ProblemKind, name: &str, text: &str) -> Result<Instance, ParseError> {
    match kind {
        ProblemKind::Gcp => parse_dimacs(name, text).map(Instance::Graph),
        ProblemKind::Bpp => parse_bin_packing(name, text).map(Instance::BinPacking),
        ProblemKind::Jssp => parse_job_shop(name, text).map(Instance::JobShop),
        ProblemKind::Kp => parse_knapsack(name, text).map(Instance::Knapsack),
    }
}

pub fn parse_dimacs(name: &str, text: &str) -> Result<GraphInstance, ParseError> {
    let mut declared: Option<(usize, usize, usize)> = None;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut any_line = false;
    for (line, toks) in token_lines(text) {
        any_line = true;
        if toks[0].starts_with('c') {
            continue;
        }
        match toks[0] {
            "p" => {
                if declared.is_some() {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::MalformedHeader("second problem line".into()),
                    ));
                }
                if toks.len() != 4 {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::MalformedHeader("expected `p FORMAT NODES EDGES`".into()),
                    ));
                }
                let n = positive(toks[2], line, "node count")? as usize;
                let m = number(toks[3], line, "edge count")? as usize;
                declared = Some((n, m, line));
            }
            "e" => {
                let Some((n, m, _)) = declared else {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::MalformedHeader("edge line before problem line".into()),
                    ));
                };
                if toks.len() != 3 {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::MalformedLine("expected `e u v`".into()),
                    ));
                }
                let u = number(toks[1], line, "endpoint")?;
                let v = number(toks[2], line, "endpoint")?;
                for x in [u, v] {
                    if x == 0 || x > n as u64 {
                        return Err(ParseError::new(
                            line,
                            ParseErrorKind::IndexOutOfRange {
                                value: x,
                                min: 1,
                                max: n as u64,
                            },
                        ));
                    }
                }
                let (u, v) = (u as usize, v as usize);
                if u == v {
                    return Err(ParseError::new(line, ParseErrorKind::SelfLoop(u)));
                }
                let e = (u.min(v), u.max(v));
                if !seen.insert(e) {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::DuplicateEdge(e.0, e.1),
                    ));
                }
                if edges.len() == m {
                    return Err(ParseError::new(
                        line,
                        ParseErrorKind::CountMismatch {
                            what: "edges",
                            declared: m,
                            found: m + 1,
                        },
                    ));
                }
                edges.push(e);
            }
            other => {
                return Err(ParseError::new(
                    line,
                    ParseErrorKind::MalformedLine(format!("unknown descriptor `{other}`")),
                ));
            }
        }
    }
    let Some((n, m, header_line)) = declared else {
        return Err(if any_line {
            ParseError::new(
                1,
                ParseErrorKind::MalformedHeader("missing problem line".into()),
            )
        } else {
            ParseError::new(1, ParseErrorKind::Empty)
        });
    };
    if edges.len() != m {
        return Err(ParseError::new(
            header_line,
            ParseErrorKind::CountMismatch {
                what: "edges",
                declared: m,
                found: edges.len(),
            },
        ));
    }
    GraphInstance::new(name, n, edges)
        .map_err(|e| ParseError::new(header_line, ParseErrorKind::Invalid(e)))
}

pub fn parse_bin_packing(name: &str, text: &str) -> Result<BinPackingInstance, ParseError> {
    let mut lines = token_lines(text);
    let (header_line, toks) = header(&mut lines, 2, "<num_items> <capacity>")?;
    let n = positive(toks[0], header_line, "item count")? as usize;
    let capacity = positive(toks[1], header_line, "capacity")?;
    let mut weights = Vec::with_capacity(n);
    for (line, toks) in lines {
        if toks.len() != 1 {
            return Err(ParseError::new(
                line,
                ParseErrorKind::MalformedLine("expected one weight per line".into()),
            ));
        }
        if weights.len() == n {
            return Err(ParseError::new(
                line,
                ParseErrorKind::CountMismatch {
                    what: "items",
                    declared: n,
                    found: n + 1,
                },
            ));
        }
        let w = positive(toks[0], line, "weight")?;
        if w > capacity {
            return Err(ParseError::new(
                line,
                ParseErrorKind::Invalid(InstanceError::WeightExceedsCapacity {
                    weight: w,
                    capacity,
                }),
            ));
        }
        weights.push(w);
    }
    if weights.len() != n {
        return Err(ParseError::new(
            header_line,
            ParseErrorKind::CountMismatch {
                what: "items",
                declared: n,
                found: weights.len(),
            },
        ));
    }
    BinPackingInstance::new(name, capacity, weights)
        .map_err(|e| ParseError::new(header_line, ParseErrorKind::Invalid(e)))
}

pub fn parse_job_shop(name: &str, text: &str) -> Result<JobShopInstance, ParseError> {
    let mut lines = token_lines(text);
    let (header_line, toks) = header(&mut lines, 2, "<jobs> <machines>")?;
    let num_jobs = positive(toks[0], header_line, "job count")? as usize;
    let num_machines = positive(toks[1], header_line, "machine count")? as usize;
    let mut jobs = Vec::with_capacity(num_jobs);
    for (line, toks) in lines {
        if jobs.len() == num_jobs {
            return Err(ParseError::new(
                line,
                ParseErrorKind::CountMismatch {
                    what: "jobs",
                    declared: num_jobs,
                    found: num_jobs + 1,
                },
            ));
        }
        if toks.len() != 2 * num_machines {
            return Err(ParseError::new(
                line,
                ParseErrorKind::CountMismatch {
                    what: "operation tokens",
                    declared: 2 * num_machines,
                    found: toks.len(),
                },
            ));
        }
        let mut ops = Vec::with_capacity(num_machines);
        for pair in toks.chunks(2) {
            let machine = number(pair[0], line, "machine")?;
            if machine >= num_machines as u64 {
                return Err(ParseError::new(
                    line,
                    ParseErrorKind::IndexOutOfRange {
                        value: machine,
                        min: 0,
                        max: num_machines as u64 - 1,
                    },
                ));
            }
            let duration = positive(pair[1], line, "duration")?;
            ops.push(Operation {
                machine: machine as usize,
                duration,
            });
        }
        jobs.push(ops);
    }
    if jobs.len() != num_jobs {
        return Err(ParseError::new(
            header_line,
            ParseErrorKind::CountMismatch {
                what: "jobs",
                declared: num_jobs,
                found: jobs.len(),
            },
        ));
    }
    JobShopInstance::new(name, num_machines, jobs)
        .map_err(|e| ParseError::new(header_line, ParseErrorKind::Invalid(e)))
}

pub fn parse_knapsack(name: &str, text: &str) -> Result<KnapsackInstance, ParseError> {
    let mut lines = token_lines(text);
    let (header_line, toks) = header(&mut lines, 2, "<num_items> <capacity>")?;
    let n = positive(toks[0], header_line, "item count")? as usize;
    let capacity = positive(toks[1], header_line, "capacity")?;
    let mut items = Vec::with_capacity(n);
    for (line, toks) in lines {
        if toks.len() != 2 {
            return Err(ParseError::new(
                line,
                ParseErrorKind::MalformedLine("expected `<profit> <weight>`".into()),
            ));
        }
        if items.len() == n {
            return Err(ParseError::new(
                line,
                ParseErrorKind::CountMismatch {
                    what: "items",
                    declared: n,
                    found: n + 1,
                },
            ));
        }
        let profit = positive(toks[0], line, "profit")?;
        let weight = positive(toks[1], line, "weight")?;
        items.push(KnapsackItem { weight, profit });
    }
    if items.len() != n {
        return Err(ParseError::new(
            header_line,
            ParseErrorKind::CountMismatch {
                what: "items",
                declared: n,
                found: items.len(),
            },
        ));
    }
    KnapsackInstance::new(name, capacity, items)
        .map_err(|e| ParseError::new(header_line, ParseErrorKind::Invalid(e)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

impl FromStr for ObjectiveSense {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(ObjectiveSense::Minimize),
            "max" | "maximize" => Ok(ObjectiveSense::Maximize),
            other => Err(format!("unknown objective sense `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("empty table")]
    Empty,
    #[error("line {line}: first header column must be `instance`")]
    BadHeader { line: usize },
    #[error("need at least 2 algorithms, found {0}")]
    TooFewAlgorithms(usize),
    #[error("duplicate algorithm `{0}`")]
    DuplicateAlgorithm(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate instance `{name}`")]
    DuplicateInstance { line: usize, name: String },
    #[error("line {line}: `{cell}` is not a finite number")]
    NonNumeric { line: usize, cell: String },
    #[error("csv: {0}")]
    Csv(String),
}

/// Per-instance objective values of every portfolio algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceTable {
    problem: ProblemKind,
    algorithms: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
    sense: ObjectiveSense,
}

impl PerformanceTable {
    pub fn new(
        problem: ProblemKind,
        algorithms: Vec<String>,
        rows: BTreeMap<String, Vec<f64>>,
        sense: ObjectiveSense,
    ) -> Result<Self, TableError> {
        if algorithms.len() < 2 {
            return Err(TableError::TooFewAlgorithms(algorithms.len()));
        }
        let mut names = HashSet::new();
        for a in &algorithms {
            if !names.insert(a) {
                return Err(TableError::DuplicateAlgorithm(a.clone()));
            }
        }
        for values in rows.values() {
            if values.len() != algorithms.len() {
                return Err(TableError::RaggedRow {
                    line: 0,
                    expected: algorithms.len(),
                    found: values.len(),
                });
            }
        }
        Ok(PerformanceTable {
            problem,
            algorithms,
            rows,
            sense,
        })
    }

    pub fn problem(&self) -> ProblemKind {
        self.problem
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn sense(&self) -> ObjectiveSense {
        self.sense
    }

    pub fn rows(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.rows
    }

    pub fn row(&self, instance: &str) -> Option<&[f64]> {
        self.rows.get(instance).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance");
        for a in &self.algorithms {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (name, values) in &self.rows {
            out.push_str(name);
            for v in values {
                out.push(',');
                out.push_str(&crate::util::fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Reads a comma-delimited table whose header is `instance,<alg1>,<alg2>,...`.
pub fn load_performance_table(
    problem: ProblemKind,
    sense: ObjectiveSense,
    text: &str,
) -> Result<PerformanceTable, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| TableError::Csv(e.to_string()))?,
        None => return Err(TableError::Empty),
    };
    if header.get(0) != Some("instance") {
        return Err(TableError::BadHeader { line: 1 });
    }
    let algorithms: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut rows = BTreeMap::new();
    for record in records {
        let record = record.map_err(|e| TableError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let found = record.len().saturating_sub(1);
        if found != algorithms.len() {
            return Err(TableError::RaggedRow {
                line,
                expected: algorithms.len(),
                found,
            });
        }
        let name = record[0].to_owned();
        let mut values = Vec::with_capacity(found);
        for cell in record.iter().skip(1) {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(TableError::NonNumeric {
                        line,
                        cell: cell.to_owned(),
                    })
                }
            }
        }
        if rows.contains_key(&name) {
            return Err(TableError::DuplicateInstance { line, name });
        }
        rows.insert(name, values);
    }
    PerformanceTable::new(problem, algorithms, rows, sense)
}
