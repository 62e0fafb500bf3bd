//! Randomized check of the pointwise inequalities behind the a priori bounds.

use facetflow::diagnostics::inequality_fuzz;
use facetflow::ModelParams;

fn main() {
    let summary = inequality_fuzz(&ModelParams::default(), 20_000, 7);
    for c in &summary.checks {
        println!(
            "{:<40} samples {:>6}  failures {}  worst violation {:.1e}",
            c.name, c.samples, c.failures, c.max_violation
        );
    }
    println!("all passed: {}", summary.passed());
}
