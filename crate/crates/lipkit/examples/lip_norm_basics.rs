//! Lipschitz norm and attainment certificate of a functional on a small
//! finite pointed metric space.
//!
//! ```bash
//! cargo run --example lip_norm_basics
//! ```

use std::sync::Arc;

use lipkit::lipfunc::{lip_norm, strongly_attains, LipFunctional};
use lipkit::metric::FinitePointedMetricSpace;

fn main() {
    // 41 evenly spaced points of [0, 1], base at t = 0
    let space = FinitePointedMetricSpace::unit_segment(41).unwrap();
    let n = space.len();

    // f(t) = t (1 - t): steepest near the endpoints
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            t * (1.0 - t)
        })
        .collect();
    let f = LipFunctional::new(Arc::clone(&space), values).unwrap();

    let (norm, (x, y)) = lip_norm(&f);
    println!("||f||_Lip = {norm:.6}");
    println!(
        "attained between {} and {} (rho = {:.4})",
        space.points[x].label,
        space.points[y].label,
        space.rho(x, y)
    );

    let cert = strongly_attains(&f, 1e-9).unwrap();
    println!("attainment mode: {:?}", cert.mode);
    println!("argmax pairs within 1e-9 of the norm: {}", cert.pairs.len());
    for (a, b, q) in cert.pairs.iter().take(4) {
        println!(
            "  ({}, {})  quotient {q:.6}",
            space.points[*a].label, space.points[*b].label
        );
    }
}
