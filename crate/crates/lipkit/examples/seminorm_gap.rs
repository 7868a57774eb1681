//! Seminorms: the two natural norms agree, uniform convergence of seminorms
//! does not imply Lipschitz convergence, and a nearly-attaining seminorm can
//! be corrected to an attaining one with explicit distances.
//!
//! ```bash
//! cargo run --example seminorm_gap
//! ```

use lipkit::model::NormedSpaceModel;
use lipkit::seminorm::{
    jn_truncated_seminorm, seminorm_bpb_construct, seminorm_norms, sup_norm, uniform_vs_lip_gap,
    SeminormModel,
};

fn main() {
    // sup norm over the sphere and Lipschitz norm coincide
    let p = SeminormModel::max_abs(2, vec![vec![0.6, 0.8], vec![0.3, 0.0]]).unwrap();
    let ambient = NormedSpaceModel::lp(2, 2.0).unwrap();
    let norms = seminorm_norms(&p, &ambient).unwrap();
    println!(
        "sup norm {:.9} = lip norm {:.9} (deviation {:.1e})",
        norms.sup_norm, norms.lip_norm, norms.deviation
    );

    // p_n -> p_0 uniformly at rate 1/n, but at Lipschitz distance 1 forever
    println!("\nuniform vs Lipschitz convergence:");
    for n in [1, 2, 5, 10, 20] {
        let gap = uniform_vs_lip_gap(n).unwrap();
        println!(
            "  n = {n:>2}: uniform distance {:>7.4}, Lipschitz distance >= {}",
            gap.uniform_dist, gap.lip_lower_bound
        );
    }

    // truncated coordinate seminorms approach but never reach norm 1
    println!("\ntruncated seminorm sup norms:");
    for n in [1usize, 3, 9] {
        let p = jn_truncated_seminorm(n, 9).unwrap();
        let (sup, _) = sup_norm(&p, &NormedSpaceModel::lp(9, 2.0).unwrap()).unwrap();
        println!("  N = {n}: {sup:.6} = {n}/{}", n + 1);
    }

    // correction on l_inf^3
    let p0 = SeminormModel::max_abs(3, vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 0.9]]).unwrap();
    let delta = 0.0025;
    let x0 = [1.0 - delta, 1.0, 0.2];
    let r = seminorm_bpb_construct(&p0, &x0, delta, 0.2).unwrap();
    println!("\nseminorm correction (delta = {delta}):");
    println!("  p(x) = {:.12} (attained: {})", r.p_at_x, r.attained);
    println!("  ||x - x0||_inf       = {:.6}", r.dist_x);
    println!("  sup |p - p0| sampled = {:.6}", r.dist_p_sampled);
    println!("  bound sqrt(2 delta)  = {:.6}", r.bound);
}
