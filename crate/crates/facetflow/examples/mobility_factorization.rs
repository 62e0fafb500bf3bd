//! The mobility `D = S Lambda S^T` rebuilt from its rotation and eigenvalues.

use facetflow::model::{mobility_d, s_lambda_factor};
use facetflow::Vec2;

fn main() -> facetflow::Result<()> {
    let q = 1.5;
    for xi in [Vec2::new(1.0, 0.0), Vec2::new(0.3, -2.0), Vec2::new(1e-6, 1e-6)] {
        let (s, lambda) = s_lambda_factor(xi, q)?;
        let rebuilt = s * lambda * s.transpose();
        let d = mobility_d(xi, q);
        println!(
            "xi = ({:>8.1e}, {:>8.1e})  eigenvalues ({:.6}, {:.6})  |D - S L S^T| = {:.1e}",
            xi.x,
            xi.y,
            lambda.xx,
            lambda.yy,
            (d - rebuilt).max_abs_entry()
        );
    }
    // No direction to rotate into at a flat point.
    println!("xi = 0: {}", s_lambda_factor(Vec2::new(0.0, 0.0), q).unwrap_err());
    Ok(())
}
