//! Correcting an almost-attaining pair: a functional whose pairing with a
//! molecule exceeds 1 - delta is replaced by a nearby functional and a nearby
//! unit free vector that pair to exactly 1, both moves within sqrt(2 delta).
//!
//! ```bash
//! cargo run --example bpb_correction
//! ```

use std::sync::Arc;

use lipkit::bpb::bpb_correct;
use lipkit::freespace::{free_norm, pairing, FreeVector};
use lipkit::lipfunc::{lip_norm, LipFunctional};
use lipkit::metric::FinitePointedMetricSpace;

fn main() {
    let space = FinitePointedMetricSpace::unit_segment(15).unwrap();
    let n = space.len();

    // identity slightly flattened in the middle: close to attaining at the
    // endpoints, but no pair reaches quotient 1 across the flat part
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            t - 0.02 * (std::f64::consts::PI * t).sin()
        })
        .collect();
    let f0 = LipFunctional::from_unnormalized(Arc::clone(&space), values).unwrap();
    let f = f0.scale(1.0 / lip_norm(&f0).0);

    let w = FreeVector::molecule(Arc::clone(&space), n - 1, 0).unwrap();
    let delta = 0.08;
    println!("<f, w> = {:.6}  (1 - delta = {:.6})", pairing(&f, &w.vector), 1.0 - delta);

    let res = bpb_correct(&f, &w, delta).unwrap();
    println!("\ncorrected pair:");
    println!("  <g, z>            = {:.12}", res.pairing);
    println!("  ||f - g||         = {:.6}", res.dist_f);
    println!("  ||w - z||_F       = {:.6}", res.dist_w);
    println!("  sqrt(2 delta)     = {:.6}", res.bound);
    println!("  within the bound  = {}", res.achieved);

    let (zn, _) = free_norm(&res.z).unwrap();
    println!("  ||z||_F           = {zn:.12}");

    println!("z as a convex combination of molecules:");
    for (x, y, weight) in &res.z_support {
        println!(
            "  ({} -> {})  weight {weight:.4}",
            space.points[*x].label, space.points[*y].label
        );
    }
}
