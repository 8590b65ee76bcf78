//! Ground-truth features of a knapsack instance, grouped by complexity tier.

use copa::features::{extract_features, Complexity};
use copa::instances::{parse_instance, ProblemKind};

fn main() {
    let text = "4 10\n10 5\n40 4\n30 6\n50 3\n";
    let inst = parse_instance(ProblemKind::Kp, "kp4", text).expect("valid knapsack");
    let fv = extract_features(&inst);
    for tier in Complexity::ALL {
        println!("[{}]", tier.as_str());
        for (spec, value) in fv.iter().filter(|(s, _)| s.complexity == tier) {
            println!(
                "  {:<24} {:>10}",
                spec.name,
                value.map_or("null".to_owned(), |v| format!("{v:.4}"))
            );
        }
    }
}
