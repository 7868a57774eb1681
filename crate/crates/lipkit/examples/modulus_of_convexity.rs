//! Modulus of convexity of l_p planes by seeded penalized minimization,
//! checked against the euclidean closed form, plus the slice-diameter bound
//! that makes the modulus useful: deep slices of a uniformly convex ball
//! have small diameter.
//!
//! ```bash
//! cargo run --example modulus_of_convexity
//! ```

use lipkit::model::NormedSpaceModel;
use lipkit::ucx::{modulus_convexity, slice_diameter_check, MODULUS_SEED};

fn main() {
    let l2 = NormedSpaceModel::lp(2, 2.0).unwrap();
    println!("l_2 plane: modulus against the closed form 1 - sqrt(1 - eps^2/4)");
    for eps in [0.25, 0.5, 1.0, 1.5] {
        let measured = modulus_convexity(&l2, eps).unwrap();
        let exact = 1.0 - (1.0 - eps * eps / 4.0).sqrt();
        println!("  eps = {eps:<5} measured {measured:.8}  exact {exact:.8}  |diff| {:.1e}", (measured - exact).abs());
    }

    let l4 = NormedSpaceModel::lp(2, 4.0).unwrap();
    println!("\nl_4 plane:");
    for eps in [0.5, 1.0] {
        println!("  eps = {eps:<5} modulus {:.8}", modulus_convexity(&l4, eps).unwrap());
    }

    // slice S(B, f*, delta) with delta = modulus(eps) has diameter < eps
    let eps = 0.5;
    let delta = modulus_convexity(&l2, eps).unwrap();
    let fstar = [0.6, 0.8];
    let (diameter, ok) = slice_diameter_check(&l2, &fstar, delta, eps, 10_000, MODULUS_SEED).unwrap();
    println!(
        "\nslice at depth delta_X({eps}) = {delta:.6}: diameter {diameter:.6} < {eps} -> {ok}"
    );
}
