//! The recursion `Y_{n+1} <= C b^n Y_n^(1 + alpha)` on either side of its threshold.

use facetflow::diagnostics::{degiorgi_iterate, DeGiorgiParams};

fn main() -> facetflow::Result<()> {
    let mut dg = DeGiorgiParams {
        c: 2.0,
        b: 3.0,
        alpha: 0.5,
        y0: 0.0,
        n_max: 200,
    };
    let threshold = dg.threshold();
    println!("threshold {threshold:.6e}");
    for s in [0.5, 0.99, 1.01, 2.0] {
        dg.y0 = s * threshold;
        let out = degiorgi_iterate(&dg)?;
        let tail: Vec<String> = out.sequence.iter().take(6).map(|y| format!("{y:.2e}")).collect();
        println!(
            "y0 = {s:>4} x threshold: converged {:<5} diverged {:<5} {}",
            out.converged,
            out.diverged,
            tail.join(" ")
        );
    }
    Ok(())
}
