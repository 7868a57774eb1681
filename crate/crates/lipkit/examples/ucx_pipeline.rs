//! Full correction pipeline on a grid sampled from a uniformly convex plane:
//! pick a nearly-collinear pair inside the almost-attaining segment, build
//! the bump + supporting-functional blend, run the directional corrector,
//! and audit the conclusions.
//!
//! ```bash
//! cargo run --example ucx_pipeline
//! ```

use lipkit::model::NormedSpaceModel;
use lipkit::scenario::ucx_fixture;
use lipkit::ucx::{delta_for_eps, lipbpb_uniformly_convex};

fn main() {
    let model = NormedSpaceModel::lp(2, 2.0).unwrap();
    let (space, f, (x, y)) = ucx_fixture(&model, 16, 0).unwrap();
    println!(
        "grid: {} points; input pair ({}, {}), quotient {:.9}",
        space.len(),
        space.points[x].label,
        space.points[y].label,
        f.quotient(x, y)
    );

    let eps = 0.4;
    println!("eps = {eps}, delta(eps) = {:.6e}", delta_for_eps(&model, eps).unwrap());

    let report = lipbpb_uniformly_convex(&model, &f, x, y, eps).unwrap();
    println!(
        "tilde pair: ({}, {}), separation {:.4}",
        space.points[report.tilde.0].label,
        space.points[report.tilde.1].label,
        space.rho(report.tilde.0, report.tilde.1)
    );
    println!("h rescale factor: {:.12}", report.rescale);

    println!("\n{:<22} {:>12} {:>12}  ok", "audit", "measured", "bound");
    for a in &report.audits {
        println!("{:<22} {:>12.3e} {:>12.3e}  {}", a.name, a.measured, a.bound, a.ok);
    }
    println!("\npipeline passed: {}", report.passed);

    println!("directional walk ({} levels):", report.trace.entries.len());
    for e in report.trace.entries.iter().take(5) {
        println!(
            "  n = {:>2}  h-quotient {:.6}  g-quotient {:.6}",
            e.n, e.h_quotient, e.g_quotient
        );
    }
}
