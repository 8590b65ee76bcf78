//! Write a synthetic corpus (instances, performance tables, ISA features) for the CLI.
//!
//! `cargo run --example make_corpus -- data 60`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let per_problem = args.next().map_or(60, |n| n.parse().expect("count"));
    copa::synth::write_synthetic_corpus(&dir, per_problem, 42).expect("corpus written");
    println!(
        "{per_problem} instances per problem under {}",
        dir.display()
    );
}
