//! Obstructions to strong-attainment density and the weak-density surgery.
//!
//! The fat-Cantor primitive transported onto a metrically convex grid gives a
//! functional whose distance to every short piecewise-affine candidate stays
//! near 1/2; the ball surgery produces nearby strongly attaining functionals
//! with slightly inflated norm; the c0-style estimate checks that separated
//! supports make norms of combinations behave like a max.

use std::sync::Arc;

use num_rational::BigRational;

use crate::cantor::{
    cantor_primitive, rat, rational_to_f64, sa_distance_lower_bound, PiecewiseLinearFn,
    SaCandidateFamily,
};
use crate::error::{LipkitError, Result};
use crate::lipfunc::{
    compose_with_retraction, lip_norm, locality_witness, mcshane_extend, ExtendVariant,
    LipFunctional,
};
use crate::metric::FinitePointedMetricSpace;
use crate::model::NormedSpaceModel;

/// Grid indices on the metric segment from the base point to `x0`, ordered by
/// distance from the base.
fn base_segment(space: &FinitePointedMetricSpace, x0: usize) -> Vec<usize> {
    let rho = space.rho(space.base, x0);
    let mut pts: Vec<usize> = (0..space.len())
        .filter(|&p| (space.rho(space.base, p) + space.rho(p, x0) - rho).abs() <= 1e-9)
        .collect();
    pts.sort_by(|&a, &b| space.rho(space.base, a).total_cmp(&space.rho(space.base, b)));
    pts
}

/// Evaluates a piecewise-linear function of `[0, 1]` on a 1-D parameter grid,
/// returning a functional on a fresh segment space built from those
/// parameters.
fn eval_at(f: &PiecewiseLinearFn, ts: &[f64]) -> Vec<f64> {
    ts.iter()
        .map(|&t| {
            let r = BigRational::from_float(t.clamp(0.0, 1.0)).unwrap();
            rational_to_f64(&f.eval(&r))
        })
        .collect()
}

fn on_parameter_grid(f: &PiecewiseLinearFn, ts: &[f64]) -> Result<LipFunctional> {
    let model = NormedSpaceModel::lp(1, 2.0)?;
    let labeled: Vec<(String, Vec<f64>)> = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| (format!("t{i}"), vec![t]))
        .collect();
    let space = FinitePointedMetricSpace::from_coords(&model, labeled, 0)?;
    LipFunctional::new(space, eval_at(f, ts))
}

#[derive(Debug, Clone)]
pub struct MconvAudit {
    /// Mesh of the segment sample: the largest gap between consecutive
    /// parameters.
    pub mesh: f64,
    /// Distance threshold `1/2 - slack` with `slack = 2 * mesh`, for the
    /// sampled distances. Only meaningful when the mesh resolves the removed
    /// intervals of the primitive.
    pub threshold: f64,
    /// Per-candidate distance over the segment sample (a lower bound for the
    /// distance on the whole grid, limited by the mesh).
    pub per_candidate_grid: Vec<f64>,
    /// Per-candidate certified slope-gap bounds, computed in exact arithmetic
    /// before discretization.
    pub per_candidate_exact: Vec<f64>,
    pub min_exact: f64,
    /// Whether every exact bound reaches 1/2 (compared as rationals).
    pub ok: bool,
    /// Whether the transported primitive itself qualifies as a
    /// strong-attainment candidate (it should not at fine depth).
    pub g_in_family: bool,
}

/// Transports the fat-Cantor primitive onto a grid through the segment
/// retraction and measures its distance to each candidate in the
/// strong-attainment family.
pub fn mconv_obstruction(
    space: &Arc<FinitePointedMetricSpace>,
    x0: usize,
    g_depth: u32,
    candidates: &[PiecewiseLinearFn],
) -> Result<(LipFunctional, MconvAudit)> {
    if (space.rho(space.base, x0) - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(
            "x0 must sit at unit distance from the base point".into(),
        ));
    }
    let seg = base_segment(space, x0);
    if seg.len() < 3 || seg[0] != space.base || *seg.last().unwrap() != x0 {
        return Err(LipkitError::Precondition(
            "grid has no sampled metric segment from the base to x0".into(),
        ));
    }
    let ts: Vec<f64> = seg.iter().map(|&p| space.rho(space.base, p)).collect();
    let mesh = ts.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);

    // the retraction: McShane extension of the segment parameter, clamped
    let sub = space.subspace(&seg)?;
    let ident = LipFunctional::new(
        Arc::clone(&sub),
        (0..sub.len()).map(|i| sub.rho(sub.base, i)).collect(),
    )?;
    let u0 = mcshane_extend(&ident, space, ExtendVariant::Inf)?;
    let u = LipFunctional::new(
        Arc::clone(space),
        u0.values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )?;

    let g = cantor_primitive(g_depth)?;
    let g_grid = on_parameter_grid(&g, &ts)?;
    let comp = compose_with_retraction(&g_grid, &u)?;
    let h = comp.h;

    let family = SaCandidateFamily::default();
    let threshold = 0.5 - 2.0 * mesh;
    let half = rat(1, 2);
    // On the segment the metric is additive, so the restricted Lipschitz
    // norm is attained on an adjacent pair.
    let h_seg: Vec<f64> = seg.iter().map(|&p| h.value(p)).collect();
    let mut per_candidate_grid = Vec::with_capacity(candidates.len());
    let mut per_candidate_exact = Vec::with_capacity(candidates.len());
    let mut ok = true;
    for f in candidates {
        if !family.contains(f) {
            return Err(LipkitError::Precondition(
                "candidate outside the strong-attainment family".into(),
            ));
        }
        let fv = eval_at(f, &ts);
        let dist = (0..ts.len() - 1)
            .map(|i| {
                let dh = h_seg[i + 1] - h_seg[i];
                let df = fv[i + 1] - fv[i];
                ((dh - df) / (ts[i + 1] - ts[i])).abs()
            })
            .fold(0.0f64, f64::max);
        per_candidate_grid.push(dist);
        let exact = sa_distance_lower_bound(&g, f)?;
        ok &= exact.bound >= half;
        per_candidate_exact.push(rational_to_f64(&exact.bound));
    }
    let min_exact = per_candidate_exact.iter().copied().fold(f64::INFINITY, f64::min);
    let audit = MconvAudit {
        mesh,
        threshold,
        per_candidate_grid,
        per_candidate_exact,
        min_exact,
        ok,
        g_in_family: family.contains(&g),
    };
    Ok((h, audit))
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BallSpec {
    pub center: usize,
    pub radius: f64,
    /// Inflation parameter in `(0, 1/2)`.
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct WeakDensityCertificate {
    pub x: usize,
    pub y: usize,
    pub norm: f64,
    /// Target norm `1 + 2 eps`.
    pub target_norm: f64,
    /// Quotient of the perturbed functional at `(x, y)`.
    pub quotient: f64,
    /// Largest deviation from `g` outside the ball (should be zero).
    pub outside_deviation: f64,
    /// Largest pointwise deviation from `g` anywhere.
    pub max_deviation: f64,
    pub strongly_attains: bool,
}

/// Ball surgery: for each ball, pin a witness at distance `eps * radius`
/// from the center, overwrite the center value so the pair carries quotient
/// `1 + 2 eps`, and extend back over the ball interior. The result agrees
/// with `g` outside the ball and strongly attains its inflated norm.
pub fn sa_weak_density_construct(
    g: &LipFunctional,
    balls: &[BallSpec],
) -> Result<Vec<(LipFunctional, WeakDensityCertificate)>> {
    let space = &g.space;
    let (gnorm, _) = lip_norm(g);
    if (gnorm - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!(
            "g must have unit norm, got {gnorm}"
        )));
    }
    for b in balls {
        if !(b.eps > 0.0 && b.eps < 0.5) {
            return Err(LipkitError::Range(format!("eps must lie in (0, 1/2), got {}", b.eps)));
        }
        if space.rho(space.base, b.center) < b.radius {
            return Err(LipkitError::Precondition(
                "ball contains the base point".into(),
            ));
        }
    }
    for (i, a) in balls.iter().enumerate() {
        for b in &balls[i + 1..] {
            if space.rho(a.center, b.center) <= a.radius + b.radius {
                return Err(LipkitError::Precondition("balls overlap".into()));
            }
        }
    }

    let mut out = Vec::with_capacity(balls.len());
    for b in balls {
        let want = b.eps * b.radius;
        let y = (0..space.len())
            .find(|&p| (space.rho(b.center, p) - want).abs() <= 1e-9)
            .ok_or_else(|| {
                let mut feasible: Vec<f64> = (0..space.len())
                    .map(|p| space.rho(b.center, p))
                    .filter(|&d| d > 0.0 && d < b.radius)
                    .collect();
                feasible.sort_by(f64::total_cmp);
                feasible.dedup_by(|a, c| (*a - *c).abs() < 1e-12);
                LipkitError::Precondition(format!(
                    "no grid point at distance {want} from the center; feasible radii after \
                     dividing by eps: {:?}",
                    feasible.iter().map(|d| d / b.eps).collect::<Vec<_>>()
                ))
            })?;

        let keep: Vec<usize> = (0..space.len())
            .filter(|&p| p == b.center || p == y || space.rho(b.center, p) >= b.radius)
            .collect();
        let sub = space.subspace(&keep)?;
        let s = {
            let d = g.value(y) - g.value(b.center);
            if d >= 0.0 {
                1.0
            } else {
                -1.0
            }
        };
        let pinned = g.value(y) - s * (1.0 + 2.0 * b.eps) * space.rho(b.center, y);
        let values: Vec<f64> = keep
            .iter()
            .map(|&p| if p == b.center { pinned } else { g.value(p) })
            .collect();
        let h = LipFunctional::new(Arc::clone(&sub), values)?;
        let gn = mcshane_extend(&h, space, ExtendVariant::Inf)?;

        let (norm, _) = lip_norm(&gn);
        let quotient = gn.quotient(b.center, y);
        let outside_deviation = (0..space.len())
            .filter(|&p| space.rho(b.center, p) >= b.radius)
            .map(|p| (gn.value(p) - g.value(p)).abs())
            .fold(0.0f64, f64::max);
        let max_deviation = (0..space.len())
            .map(|p| (gn.value(p) - g.value(p)).abs())
            .fold(0.0f64, f64::max);
        let target_norm = 1.0 + 2.0 * b.eps;
        let strongly_attains =
            (norm - target_norm).abs() <= 1e-9 && (quotient.abs() - norm).abs() <= 1e-9;
        let cert = WeakDensityCertificate {
            x: b.center,
            y,
            norm,
            target_norm,
            quotient,
            outside_deviation,
            max_deviation,
            strongly_attains,
        };
        out.push((gn, cert));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct C0Report {
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    pub tolerance: f64,
    /// Smallest distance between two distinct supports.
    pub separation: f64,
    pub ok: bool,
}

fn support(f: &LipFunctional) -> Vec<usize> {
    (0..f.space.len()).filter(|&p| f.value(p).abs() > 1e-12).collect()
}

/// Checks that a combination of unit functionals with separated supports has
/// norm within a mesh tolerance of the largest coefficient magnitude.
pub fn c0_estimate_check(
    functionals: &[LipFunctional],
    coefficients: &[f64],
    locality_eps: f64,
) -> Result<C0Report> {
    if functionals.is_empty() || functionals.len() != coefficients.len() {
        return Err(LipkitError::Structural(
            "need one coefficient per functional".into(),
        ));
    }
    if !(locality_eps > 0.0 && locality_eps < 1.0) {
        return Err(LipkitError::Range(format!(
            "locality_eps must lie in (0, 1), got {locality_eps}"
        )));
    }
    let space = &functionals[0].space;
    let supports: Vec<Vec<usize>> = functionals.iter().map(support).collect();
    let mut separation = f64::INFINITY;
    for (i, si) in supports.iter().enumerate() {
        let (ni, _) = lip_norm(&functionals[i]);
        if (ni - 1.0).abs() > 1e-9 {
            return Err(LipkitError::Precondition(format!(
                "functional {i} has norm {ni}, expected 1"
            )));
        }
        if locality_witness(&functionals[i], locality_eps)?.is_none() {
            return Err(LipkitError::GridTooCoarse(format!(
                "functional {i} has no locality witness at scale {locality_eps}"
            )));
        }
        for sj in &supports[i + 1..] {
            let mut d = f64::INFINITY;
            for &p in si {
                for &q in sj {
                    d = d.min(space.rho(p, q));
                }
            }
            if d <= 0.0 {
                return Err(LipkitError::Precondition(
                    "supports are not separated".into(),
                ));
            }
            separation = separation.min(d);
        }
    }

    let mut sum = LipFunctional::zero(Arc::clone(space));
    for (f, &a) in functionals.iter().zip(coefficients) {
        sum = sum.add(&f.scale(a));
    }
    let (lhs, _) = lip_norm(&sum);
    let rhs = coefficients.iter().map(|a| a.abs()).fold(0.0f64, f64::max);
    let deviation = (lhs - rhs).abs();
    let tolerance = rhs * locality_eps / (1.0 - locality_eps) + locality_eps;
    Ok(C0Report {
        lhs,
        rhs,
        deviation,
        tolerance,
        separation,
        ok: deviation <= tolerance,
    })
}

/// Unit-norm tent functional centered at a grid point: `radius - rho(c, .)`,
/// cut off at zero. Support stays in the closed ball around the center.
pub fn tent_functional(
    space: &Arc<FinitePointedMetricSpace>,
    center: usize,
    radius: f64,
) -> Result<LipFunctional> {
    if space.rho(space.base, center) < radius {
        return Err(LipkitError::Precondition("tent support reaches the base point".into()));
    }
    let values: Vec<f64> = (0..space.len())
        .map(|p| (radius - space.rho(center, p)).max(0.0))
        .collect();
    let f = LipFunctional::new(Arc::clone(space), values)?;
    let (n, _) = lip_norm(&f);
    if (n - 1.0).abs() > 1e-9 {
        return Err(LipkitError::GridTooCoarse(format!(
            "grid too coarse inside the tent: norm came out as {n}"
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_grid_space, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn segment_space(n: usize) -> Arc<FinitePointedMetricSpace> {
        FinitePointedMetricSpace::unit_segment(n).unwrap()
    }

    fn linear_pl(slope: BigRational) -> PiecewiseLinearFn {
        PiecewiseLinearFn::new(vec![rat(0, 1), rat(1, 1)], vec![slope]).unwrap()
    }

    #[test]
    fn obstruction_on_plain_segment() {
        let space = segment_space(257);
        let x0 = space.len() - 1;
        let cands = vec![
            linear_pl(rat(1, 1)),
            linear_pl(rat(0, 1)),
            linear_pl(rat(-1, 2)),
            PiecewiseLinearFn::new(
                vec![rat(0, 1), rat(1, 2), rat(1, 1)],
                vec![rat(1, 1), rat(0, 1)],
            )
            .unwrap(),
        ];
        // depth 6: the mesh still resolves both kept intervals and the
        // coarser removed intervals
        let (h, audit) = mconv_obstruction(&space, x0, 6, &cands).unwrap();
        assert!(audit.mesh < 0.005);
        assert!(audit.threshold > 0.49);
        assert!(audit.ok, "exact bounds {:?}", audit.per_candidate_exact);
        assert!(audit.min_exact >= 0.5);
        assert!(!audit.g_in_family);
        for (i, &d) in audit.per_candidate_grid.iter().enumerate() {
            assert!(d >= audit.threshold, "candidate {i}: grid distance {d}");
        }
        // zero candidate sits at grid distance at most the norm of h
        assert!(audit.per_candidate_grid[1] <= lip_norm(&h).0 + 1e-9);
        assert!(lip_norm(&h).0 <= 1.0 + 1e-9);
    }

    #[test]
    fn obstruction_random_family_2d() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let spec = GridSpec::segments_to_anchors(
            vec![vec![1.0, 0.0], vec![0.0, 0.8]],
            100,
            5,
        );
        let space = build_grid_space(&model, &spec).unwrap();
        let x0 = space.index_of_label("a0").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let family = SaCandidateFamily::default();
        let mut cands = Vec::new();
        while cands.len() < 30 {
            let k = rng.gen_range(1..=4usize);
            let mut cuts: Vec<BigRational> = vec![rat(0, 1), rat(1, 1)];
            for _ in 0..k - 1 {
                cuts.push(rat(rng.gen_range(1..32), 32));
            }
            cuts.sort();
            cuts.dedup();
            let slopes: Vec<BigRational> = (0..cuts.len() - 1)
                .map(|_| rat(rng.gen_range(-8..=8), 8))
                .collect();
            let f = PiecewiseLinearFn::new(cuts, slopes).unwrap();
            if family.contains(&f) {
                cands.push(f);
            }
        }
        let (_, audit) = mconv_obstruction(&space, x0, 7, &cands).unwrap();
        assert!(audit.ok, "exact bounds {:?}", audit.per_candidate_exact);
        assert!(audit.min_exact >= 0.5);
    }

    #[test]
    fn obstruction_rejects_bad_inputs() {
        let space = segment_space(65);
        let x0 = space.len() - 1;
        // midpoint is not at unit distance
        assert!(matches!(
            mconv_obstruction(&space, 32, 8, &[]),
            Err(LipkitError::Precondition(_))
        ));
        // a candidate with a tiny extreme piece is outside the family
        let f = PiecewiseLinearFn::new(
            vec![rat(0, 1), rat(1, 64), rat(1, 1)],
            vec![rat(2, 1), rat(0, 1)],
        )
        .unwrap();
        assert!(matches!(
            mconv_obstruction(&space, x0, 8, &[f]),
            Err(LipkitError::Precondition(_))
        ));
    }

    #[test]
    fn weak_density_single_ball() {
        let space = segment_space(201);
        // g(t) = t has unit norm
        let g = LipFunctional::new(
            Arc::clone(&space),
            (0..space.len()).map(|i| space.rho(0, i)).collect(),
        )
        .unwrap();
        let center = 100; // t = 0.5
        let eps = 0.25;
        let radius = 0.08; // witness distance 0.02 = 4 grid steps
        let out = sa_weak_density_construct(&g, &[BallSpec { center, radius, eps }]).unwrap();
        assert_eq!(out.len(), 1);
        let (gn, cert) = &out[0];
        assert!((cert.norm - 1.5).abs() < 1e-9);
        assert!((cert.quotient.abs() - 1.5).abs() < 1e-9);
        assert!(cert.strongly_attains);
        assert_eq!(cert.outside_deviation, 0.0);
        assert!(cert.max_deviation > 0.0);
        for p in 0..space.len() {
            if space.rho(center, p) >= radius {
                assert_eq!(gn.value(p), g.value(p));
            }
        }
    }

    #[test]
    fn weak_density_schedule_converges() {
        let space = segment_space(401);
        let g = LipFunctional::new(
            Arc::clone(&space),
            (0..space.len()).map(|i| space.rho(0, i)).collect(),
        )
        .unwrap();
        let mut prev_norm = f64::INFINITY;
        let mut prev_dev = f64::INFINITY;
        for (eps, radius) in [(0.4, 0.1), (0.2, 0.05), (0.1, 0.025)] {
            let out = sa_weak_density_construct(
                &g,
                &[BallSpec { center: 200, radius, eps }],
            )
            .unwrap();
            let cert = &out[0].1;
            assert!(cert.strongly_attains);
            assert!(cert.norm < prev_norm);
            assert!(cert.max_deviation < prev_dev);
            prev_norm = cert.norm;
            prev_dev = cert.max_deviation;
        }
        assert!(prev_norm < 1.21);
        assert!(prev_dev < 0.02);
    }

    #[test]
    fn weak_density_rejects_bad_balls() {
        let space = segment_space(201);
        let g = LipFunctional::new(
            Arc::clone(&space),
            (0..space.len()).map(|i| space.rho(0, i)).collect(),
        )
        .unwrap();
        // overlapping balls
        let overlap = [
            BallSpec { center: 100, radius: 0.08, eps: 0.25 },
            BallSpec { center: 110, radius: 0.08, eps: 0.25 },
        ];
        assert!(sa_weak_density_construct(&g, &overlap).is_err());
        // ball swallowing the base point
        let at_base = [BallSpec { center: 10, radius: 0.2, eps: 0.25 }];
        assert!(sa_weak_density_construct(&g, &at_base).is_err());
        // witness distance falls between grid points
        let off_grid = [BallSpec { center: 100, radius: 0.0801, eps: 0.25 }];
        assert!(matches!(
            sa_weak_density_construct(&g, &off_grid),
            Err(LipkitError::Precondition(_))
        ));
    }

    #[test]
    fn c0_single_and_pairs() {
        let space = segment_space(201);
        let f1 = tent_functional(&space, 50, 0.1).unwrap();
        let f2 = tent_functional(&space, 150, 0.1).unwrap();
        let eps = 0.02;
        let r = c0_estimate_check(std::slice::from_ref(&f1), &[1.0], eps).unwrap();
        assert!(r.ok);
        assert!(r.deviation < 1e-9);
        let r = c0_estimate_check(&[f1.clone(), f2.clone()], &[1.0, 1.0], eps).unwrap();
        assert!(r.ok, "lhs {} rhs {} tol {}", r.lhs, r.rhs, r.tolerance);
        assert!(r.lhs >= 1.0 - 1e-9);
        let r = c0_estimate_check(&[f1.clone(), f2.clone()], &[1.0, -0.5], eps).unwrap();
        assert!(r.ok);
        assert!((r.rhs - 1.0).abs() < 1e-12);
        // overlapping supports rejected
        let f3 = tent_functional(&space, 60, 0.1).unwrap();
        assert!(matches!(
            c0_estimate_check(&[f1, f3], &[1.0, 1.0], eps),
            Err(LipkitError::Precondition(_))
        ));
    }

    #[test]
    fn c0_random_families() {
        let space = segment_space(401);
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        for _ in 0..50 {
            let k = rng.gen_range(2..=4usize);
            // disjoint centers on a coarse lattice keep supports separated
            let mut slots: Vec<usize> = (1..=7).collect();
            let mut fs = Vec::new();
            let mut coeffs = Vec::new();
            for _ in 0..k {
                let si = rng.gen_range(0..slots.len());
                let slot = slots.swap_remove(si);
                let center = slot * 50; // t = slot / 8
                fs.push(tent_functional(&space, center, 0.05).unwrap());
                coeffs.push(rng.gen_range(-2.0f64..2.0));
            }
            if coeffs.iter().all(|a| a.abs() < 1e-3) {
                coeffs[0] = 1.0;
            }
            let r = c0_estimate_check(&fs, &coeffs, 0.02).unwrap();
            assert!(r.ok, "lhs {} rhs {} tol {}", r.lhs, r.rhs, r.tolerance);
        }
    }

}
