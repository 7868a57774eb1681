//! Norm-preserving extension of a Lipschitz functional from a subspace:
//! the inf and sup extensions bracket every other extension, the midpoint
//! blend sits between them, and all three keep the subspace norm.
//!
//! ```bash
//! cargo run --example mcshane_extension
//! ```

use lipkit::lipfunc::{lip_norm, mcshane_extend, ExtendVariant, LipFunctional};
use lipkit::metric::FinitePointedMetricSpace;

fn main() {
    let space = FinitePointedMetricSpace::unit_segment(21).unwrap();

    // prescribe values on five points only (the base must be among them)
    let indices = [0usize, 4, 9, 14, 20];
    let sub = space.subspace(&indices).unwrap();
    let f_sub = LipFunctional::new(sub, vec![0.0, 0.2, -0.1, 0.3, 0.1]).unwrap();
    let (sub_norm, _) = lip_norm(&f_sub);
    println!("subspace norm: {sub_norm:.6}");

    let inf = mcshane_extend(&f_sub, &space, ExtendVariant::Inf).unwrap();
    let sup = mcshane_extend(&f_sub, &space, ExtendVariant::Sup).unwrap();
    let mid = mcshane_extend(&f_sub, &space, ExtendVariant::Midpoint).unwrap();

    for (name, ext) in [("inf", &inf), ("sup", &sup), ("midpoint", &mid)] {
        let (norm, _) = lip_norm(ext);
        println!("{name:>8} extension norm: {norm:.9}");
    }

    println!("\n   t      sup      mid      inf");
    for i in (0..space.len()).step_by(2) {
        let t = i as f64 / (space.len() - 1) as f64;
        let marker = if indices.contains(&i) { " <- prescribed" } else { "" };
        println!(
            "{t:.2}  {:+.4}  {:+.4}  {:+.4}{marker}",
            sup.value(i),
            mid.value(i),
            inf.value(i)
        );
    }

    // pointwise ordering sup <= mid <= inf holds everywhere
    let ordered = (0..space.len())
        .all(|i| sup.value(i) <= mid.value(i) + 1e-12 && mid.value(i) <= inf.value(i) + 1e-12);
    println!("\npointwise sup <= midpoint <= inf: {ordered}");
}
