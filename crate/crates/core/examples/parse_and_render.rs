//! Parse a DIMACS graph and print it in all three representations.

use copa::instances::{parse_instance, ProblemKind};
use copa::render::{render, Representation};

const GRAPH: &str = "c a small triangle with a tail\np edge 4 4\ne 1 2\ne 2 3\ne 1 3\ne 3 4\n";

fn main() {
    let inst = parse_instance(ProblemKind::Gcp, "triangle", GRAPH).expect("valid DIMACS");
    for rep in Representation::ALL {
        let r = render(&inst, rep);
        println!(
            "--- {} (~{} tokens)\n{}",
            rep.as_str(),
            r.token_hint.unwrap_or(0),
            r.text
        );
    }

    // Count mismatches are rejected with the offending line.
    let err = parse_instance(ProblemKind::Gcp, "broken", "p edge 3 2\ne 1 2\n").unwrap_err();
    println!("rejected: {err}");
}
