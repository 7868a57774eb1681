//! A Lipschitz functional that stays at distance >= 1/2 from every strongly
//! attaining candidate in a fixed family, in exact rational arithmetic: the
//! primitive of the fat Cantor indicator has a gap of depth <= 5 inside any
//! window of length 1/32, so no candidate with a long extreme piece can track
//! it.
//!
//! ```bash
//! cargo run --example fat_cantor
//! ```

use lipkit::cantor::{
    cantor_primitive, rat, rational_to_f64, sa_distance_lower_bound, svc_set, PiecewiseLinearFn,
    SaCandidateFamily,
};

fn main() {
    for depth in [1u32, 2, 3, 6] {
        let set = svc_set(depth).unwrap();
        println!(
            "depth {depth}: {} intervals, measure {} ~ {:.6}",
            set.kept_intervals.len(),
            set.measure,
            rational_to_f64(&set.measure)
        );
    }

    let depth = 6;
    let g = cantor_primitive(depth).unwrap();
    println!(
        "\nprimitive at depth {depth}: {} pieces, ||g||_Lip = {}",
        g.slopes.len(),
        g.lip_norm()
    );

    let family = SaCandidateFamily::default();
    println!(
        "candidate family: <= {} pieces, extreme piece >= {}",
        family.max_pieces, family.min_extreme_len
    );

    // a few candidates, including the best linear approximations
    let candidates = [
        ("f(t) = t", PiecewiseLinearFn::new(vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1)]).unwrap()),
        ("f(t) = -t", PiecewiseLinearFn::new(vec![rat(0, 1), rat(1, 1)], vec![rat(-1, 1)]).unwrap()),
        (
            "two pieces",
            PiecewiseLinearFn::new(
                vec![rat(0, 1), rat(1, 2), rat(1, 1)],
                vec![rat(1, 1), rat(-1, 1)],
            )
            .unwrap(),
        ),
    ];
    println!("\nexact distance lower bounds:");
    for (name, f) in &candidates {
        let d = sa_distance_lower_bound(&g, f).unwrap();
        println!(
            "  {name:<12} bound {} ~ {:.4}  (witness piece around t = {})",
            d.bound,
            rational_to_f64(&d.bound),
            d.witness_piece.0
        );
        assert!(d.bound >= rat(1, 2));
    }
    println!("\nevery bound is >= 1/2, exactly.");
}
