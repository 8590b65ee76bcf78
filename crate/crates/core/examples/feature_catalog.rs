//! Print the feature catalog of every problem as a markdown table.

use copa::features::feature_catalog;
use copa::instances::ProblemKind;

fn main() {
    println!("| problem | feature | type | tier |\n|---|---|---|---|");
    for kind in ProblemKind::ALL {
        for spec in feature_catalog(kind) {
            println!(
                "| {} | `{}` | {} | {} |",
                kind.code(),
                spec.name,
                spec.value_type.prompt_name(),
                spec.complexity.as_str()
            );
        }
    }
}
