//! Uniformly convex models and the constructive local-directional pipeline.
//!
//! The pipeline discretizes the ambient space into a grid (origin, endpoints,
//! a segment sample and optional neighborhoods), selects a short aligned pair
//! on the segment, builds the bump-plus-supporting-functional blend `h`, runs
//! the preliminary directional corrector against it, and audits every
//! conclusion with the measured value next to its bound.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bpb::{dist_to_segment, lip_bpb_preliminary, LipBpbTrace};
use crate::error::{LipkitError, Result};
use crate::lipfunc::{lip_norm, LipFunctional};
use crate::metric::FinitePointedMetricSpace;
use crate::model::{dot, NormedSpaceModel};

pub const MODULUS_SEED: u64 = 0x5EED_0001;

/// Nelder-Mead on `f`, starting from a simplex of size `scale` around `x0`.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += scale;
        let v = f(&p);
        simplex.push((p, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        let size: f64 = (0..d)
            .map(|i| (simplex[d].0[i] - simplex[0].0[i]).abs())
            .fold(0.0, f64::max);
        if spread < 1e-14 && size < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|(p, _)| p[i]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let at = |t: f64| -> Vec<f64> {
            (0..d)
                .map(|i| centroid[i] + t * (centroid[i] - worst.0[i]))
                .collect()
        };
        let refl = at(1.0);
        let frefl = f(&refl);
        if frefl < simplex[0].1 {
            let exp = at(2.0);
            let fexp = f(&exp);
            simplex[d] = if fexp < frefl { (exp, fexp) } else { (refl, frefl) };
        } else if frefl < simplex[d - 1].1 {
            simplex[d] = (refl, frefl);
        } else {
            let contr = if frefl < worst.1 { at(0.5) } else { at(-0.5) };
            let fcontr = f(&contr);
            if fcontr < worst.1.min(frefl) {
                simplex[d] = (contr, fcontr);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..d {
                        v.0[i] = best[i] + 0.5 * (v.0[i] - best[i]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].clone()
}

fn project_ball(model: &NormedSpaceModel, v: &[f64]) -> Vec<f64> {
    let n = model.norm(v);
    if n <= 1.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Modulus of convexity with an explicit restart seed.
pub fn modulus_convexity_seeded(model: &NormedSpaceModel, eps: f64, seed: u64) -> Result<f64> {
    if !model.is_uniformly_convex() {
        return Err(LipkitError::NotUniformlyConvex(
            "modulus of convexity needs an l_p model with p > 1".into(),
        ));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(LipkitError::Range(format!("eps must lie in (0, 2], got {eps}")));
    }
    let d = model.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_mid: f64 = f64::NEG_INFINITY;

    for _restart in 0..20 {
        // random pair on the sphere, pushed to separation eps
        let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let nx = model.norm(&x).max(1e-9);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let nu = model.norm(&u).max(1e-9);
        u.iter_mut().for_each(|v| *v *= eps / nu);
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - b).collect();
        let mut start: Vec<f64> = x.iter().chain(y.iter()).copied().collect();

        let mut scale = 0.3;
        for &lam in &[1e3f64, 1e6, 1e9, 1e12] {
            let mut obj = |v: &[f64]| -> f64 {
                let px = project_ball(model, &v[..d]);
                let py = project_ball(model, &v[d..]);
                let mid: Vec<f64> = px.iter().zip(&py).map(|(a, b)| 0.5 * (a + b)).collect();
                let sep = model.dist(&px, &py);
                let gap = (eps - sep).max(0.0);
                let overshoot = (model.norm(&v[..d]) - 1.0).max(0.0)
                    + (model.norm(&v[d..]) - 1.0).max(0.0);
                -model.norm(&mid) + lam * gap * gap + 0.1 * overshoot * overshoot
            };
            let (pt, _) = nelder_mead(&mut obj, &start, scale, 2000);
            start = pt;
            scale *= 0.1;
        }
        let px = project_ball(model, &start[..d]);
        let py = project_ball(model, &start[d..]);
        if model.dist(&px, &py) >= eps - 1e-7 {
            let mid: Vec<f64> = px.iter().zip(&py).map(|(a, b)| 0.5 * (a + b)).collect();
            best_mid = best_mid.max(model.norm(&mid));
        }
    }

    if best_mid.is_finite() {
        return Ok(1.0 - best_mid);
    }
    // fallback: dense sphere-pair sampling as a lower-bound certificate
    Ok(modulus_sampling_bound(model, eps, seed ^ 0x9E37, 1_000_000)?)
}

/// Modulus of convexity of the model at separation `eps`, by penalized
/// minimization with 20 random restarts.
pub fn modulus_convexity(model: &NormedSpaceModel, eps: f64) -> Result<f64> {
    modulus_convexity_seeded(model, eps, MODULUS_SEED)
}

/// Sampling bound on the modulus: the minimum of `1 - ||(x+y)/2||` over
/// sampled sphere pairs at separation at least `eps`. Always an upper bound
/// for the infimum defining the modulus.
pub fn modulus_sampling_bound(
    model: &NormedSpaceModel,
    eps: f64,
    seed: u64,
    pairs: usize,
) -> Result<f64> {
    if !model.is_uniformly_convex() {
        return Err(LipkitError::NotUniformlyConvex("sampling bound needs l_p, p > 1".into()));
    }
    let d = model.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 1.0f64;
    let mut found = 0usize;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let (nx, ny) = (model.norm(&x).max(1e-12), model.norm(&y).max(1e-12));
        let x: Vec<f64> = x.iter().map(|v| v / nx).collect();
        let y: Vec<f64> = y.iter().map(|v| v / ny).collect();
        if model.dist(&x, &y) < eps {
            continue;
        }
        found += 1;
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        best = best.min(1.0 - model.norm(&mid));
    }
    if found == 0 {
        return Err(LipkitError::SamplerExhausted(
            "no sphere pair at the requested separation".into(),
        ));
    }
    Ok(best)
}

/// Samples the slice `{x in B : f*(x) > 1 - delta}` and reports the maximum
/// pairwise distance among accepted points, together with whether it stays
/// below `eps`.
pub fn slice_diameter_check(
    model: &NormedSpaceModel,
    fstar: &[f64],
    delta: f64,
    eps: f64,
    sample_count: usize,
    seed: u64,
) -> Result<(f64, bool)> {
    let dn = model.dual_norm(fstar)?;
    if (dn - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!(
            "f* must have unit dual norm, got {dn}"
        )));
    }
    let d = model.dim;
    // the supported point: f*(u) = 1 on the sphere
    let u = match &model.kind {
        crate::model::NormKind::Lp { p } if *p > 1.0 => {
            let q = p / (p - 1.0);
            NormedSpaceModel::lp(d, q)?.duality_map(fstar)?
        }
        _ => {
            return Err(LipkitError::NotUniformlyConvex(
                "slice sampling needs an l_p model with p > 1".into(),
            ))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmas = [0.01, 0.05, 0.15, 0.4];
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    for k in 0..sample_count {
        let sigma = sigmas[k % sigmas.len()];
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let t: f64 = rng.gen_range(0.95f64..1.0);
        let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + sigma * b).collect();
        let n = model.norm(&v);
        if n < 1e-9 {
            continue;
        }
        let x: Vec<f64> = v.iter().map(|a| t * a / n).collect();
        if dot(fstar, &x) > 1.0 - delta {
            accepted.push(x);
        }
    }
    if accepted.is_empty() {
        return Err(LipkitError::SamplerExhausted(format!(
            "no sample landed in the slice at delta = {delta}"
        )));
    }

    // diameter via extreme points along a fixed direction fan, exact pairwise
    // distance on the reduced candidate set
    let mut candidates: Vec<usize> = Vec::new();
    let mut drng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1AE);
    for _ in 0..64 {
        let dir: Vec<f64> = (0..d).map(|_| drng.gen_range(-1.0f64..1.0)).collect();
        let mut best_i = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (i, x) in accepted.iter().enumerate() {
            let v = dot(&dir, x);
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        candidates.push(best_i);
    }
    candidates.sort_unstable();
    candidates.dedup();
    let mut max_dist = 0.0f64;
    for (ai, &i) in candidates.iter().enumerate() {
        for &j in &candidates[ai + 1..] {
            max_dist = max_dist.max(model.dist(&accepted[i], &accepted[j]));
        }
    }
    Ok((max_dist, max_dist < eps))
}

/// Grid points lying on the metric segment between `x` and `y`, ordered from
/// `x` to `y` (both endpoints included).
pub fn segment_points(space: &FinitePointedMetricSpace, x: usize, y: usize) -> Vec<usize> {
    let rho = space.rho(x, y);
    let mut pts: Vec<usize> = (0..space.len())
        .filter(|&p| (space.rho(x, p) + space.rho(p, y) - rho).abs() <= 1e-9)
        .collect();
    pts.sort_by(|&a, &b| space.rho(x, a).total_cmp(&space.rho(x, b)));
    pts
}

/// Selects a short pair on the grid segment of `(x, y)`, aligned with its
/// direction, whose separation is below a quarter of `eps` and of both
/// distances to the origin, and whose quotient still exceeds `1 - delta`.
/// Among qualifying pairs the one with the largest separation wins.
pub fn select_tilde_pair(
    model: &NormedSpaceModel,
    f: &LipFunctional,
    x: usize,
    y: usize,
    delta: f64,
    eps: f64,
) -> Result<(usize, usize)> {
    let space = &f.space;
    let q0 = f.quotient(x, y);
    if q0 <= 1.0 - delta {
        return Err(LipkitError::Precondition(format!(
            "quotient at the pair is {q0}, needs to exceed {}",
            1.0 - delta
        )));
    }
    let seg = segment_points(space, x, y);
    let cx = space
        .coord(x)
        .ok_or_else(|| LipkitError::Structural("tilde selection needs coordinates".into()))?;
    let cy = space.coord(y).unwrap();
    let dxy: Vec<f64> = cx.iter().zip(cy).map(|(a, b)| a - b).collect();
    let nxy = model.norm(&dxy);
    let dir0: Vec<f64> = dxy.iter().map(|v| v / nxy).collect();

    let mut best: Option<(f64, usize, usize)> = None;
    for (ia, &a) in seg.iter().enumerate() {
        for &b in &seg[ia + 1..] {
            let ca = space.coord(a).unwrap();
            let cb = space.coord(b).unwrap();
            let sep = space.rho(a, b);
            if sep <= 0.0 {
                continue;
            }
            let na = model.norm(ca);
            let nb = model.norm(cb);
            if sep >= 0.25 * eps.min(na).min(nb) {
                continue;
            }
            let diff: Vec<f64> = ca.iter().zip(cb).map(|(p, q)| p - q).collect();
            let nd = model.norm(&diff);
            let drift: f64 = diff
                .iter()
                .zip(&dir0)
                .map(|(v, d0)| (v / nd - d0).abs())
                .fold(0.0, f64::max);
            if drift > 1e-9 {
                continue;
            }
            if f.quotient(a, b) <= 1.0 - delta {
                continue;
            }
            if best.as_ref().map_or(true, |&(bs, _, _)| sep > bs) {
                best = Some((sep, a, b));
            }
        }
    }
    match best {
        Some((_, a, b)) => Ok((a, b)),
        None => Err(LipkitError::GridTooCoarse(format!(
            "no aligned segment pair with separation below {}; refine the segment sample \
             beyond {} points",
            0.25 * eps,
            seg.len()
        ))),
    }
}

/// The peak functional `F(z) = max(rho(xt, yt) - rho(xt, z), 0)`: unit norm,
/// quotient 1 at the pair, supported in the ball around `xt` of radius
/// `rho(xt, yt)`.
pub fn bump_functional(
    space: &Arc<FinitePointedMetricSpace>,
    xt: usize,
    yt: usize,
) -> Result<LipFunctional> {
    let r = space.rho(xt, yt);
    if r <= 0.0 {
        return Err(LipkitError::Precondition("bump needs distinct points".into()));
    }
    if space.rho(xt, space.base) < r {
        return Err(LipkitError::Precondition(
            "bump support would contain the base point".into(),
        ));
    }
    let values: Vec<f64> = (0..space.len())
        .map(|z| (r - space.rho(xt, z)).max(0.0))
        .collect();
    let f = LipFunctional::new(Arc::clone(space), values)?;
    let (norm, _) = lip_norm(&f);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Numerical(format!("bump norm came out as {norm}")));
    }
    Ok(f)
}

fn delta_from_modulus(eps: f64, delta_x: f64) -> f64 {
    (0.5 * eps * eps).min(0.5 * (0.5 * delta_x) * (0.5 * delta_x)) * (1.0 - 1e-6)
}

/// The largest admissible attainment defect for the pipeline at scale `eps`:
/// both `delta < eps^2 / 2` and `sqrt(2 delta) < delta_X(eps) / 2` hold with
/// a relative safety factor.
pub fn delta_for_eps(model: &NormedSpaceModel, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(LipkitError::Range(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let dx = modulus_convexity(model, eps)?;
    Ok(delta_from_modulus(eps, dx))
}

#[derive(Debug, Clone)]
pub struct AuditEntry {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    /// True when `measured` is on the good side of `bound`.
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub eps: f64,
    pub delta: f64,
    pub delta_x: f64,
    pub tilde: (usize, usize),
    /// Factor applied to `(F + x*) / 2` to restore unit grid norm.
    pub rescale: f64,
    pub trace: LipBpbTrace,
    pub audits: Vec<AuditEntry>,
    pub passed: bool,
}

/// The full constructive pipeline on a grid-sampled uniformly convex model:
/// tilde-pair selection, bump, supporting functional, blended `h`, the
/// preliminary corrector, and the five conclusion audits.
pub fn lipbpb_uniformly_convex(
    model: &NormedSpaceModel,
    f: &LipFunctional,
    x: usize,
    y: usize,
    eps: f64,
) -> Result<PipelineReport> {
    let space = &f.space;
    let (fnorm, _) = lip_norm(f);
    if (fnorm - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!("f must have unit norm, got {fnorm}")));
    }
    let delta_x = modulus_convexity(model, eps)?;
    let delta = delta_from_modulus(eps, delta_x);
    let q0 = f.quotient(x, y);
    if q0 <= 1.0 - delta {
        return Err(LipkitError::Precondition(format!(
            "quotient {q0} at the input pair does not exceed 1 - delta = {}",
            1.0 - delta
        )));
    }

    let (xt, yt) = select_tilde_pair(model, f, x, y, delta, eps)?;
    let bump = bump_functional(space, xt, yt)?;
    let cxt = space.coord(xt).unwrap().to_vec();
    let cyt = space.coord(yt).unwrap().to_vec();
    let dtilde: Vec<f64> = cxt.iter().zip(&cyt).map(|(a, b)| a - b).collect();
    let ntilde = model.norm(&dtilde);
    let dir: Vec<f64> = dtilde.iter().map(|v| v / ntilde).collect();
    let xstar = model.duality_map(&dir)?;
    let xstar_f = LipFunctional::new(
        Arc::clone(space),
        (0..space.len())
            .map(|p| dot(&xstar, space.coord(p).unwrap()))
            .collect(),
    )?;
    let h0 = bump.add(&xstar_f).scale(0.5);
    let (h0n, _) = lip_norm(&h0);
    let rescale = 1.0 / h0n;
    let h = h0.scale(rescale);

    let trace = lip_bpb_preliminary(f, (xt, yt), &h, delta, 20)?;

    let dir0 = {
        let cx = space.coord(x).unwrap();
        let cy = space.coord(y).unwrap();
        let d: Vec<f64> = cx.iter().zip(cy).map(|(a, b)| a - b).collect();
        let n = model.norm(&d);
        d.iter().map(|v| v / n).collect::<Vec<f64>>()
    };
    let cx = space.coord(x).unwrap().to_vec();
    let cy = space.coord(y).unwrap().to_vec();

    let mut drift_max = 0.0f64;
    let mut slice_min = f64::INFINITY;
    let mut sep_max = 0.0f64;
    let mut loc_max = 0.0f64;
    let mut supp_max = 0.0f64;
    let mut hq_min = f64::INFINITY;
    for e in &trace.entries {
        let cv = space.coord(e.v).unwrap();
        let cw = space.coord(e.w).unwrap();
        let d: Vec<f64> = cv.iter().zip(cw).map(|(a, b)| a - b).collect();
        let n = model.norm(&d);
        let dirn: Vec<f64> = d.iter().map(|v| v / n).collect();
        let dd: Vec<f64> = dirn.iter().zip(&dir0).map(|(a, b)| a - b).collect();
        drift_max = drift_max.max(model.norm(&dd));
        slice_min = slice_min.min(dot(&xstar, &dirn));
        sep_max = sep_max.max(space.rho(e.v, e.w));
        loc_max = loc_max.max(dist_to_segment(model, cv, &cx, &cy));
        supp_max = supp_max.max(space.rho(e.v, xt));
        hq_min = hq_min.min(e.h_quotient);
    }
    let (dist_f, _) = lip_norm(&f.sub(&trace.g));
    let rtilde = space.rho(xt, yt);

    let audits = vec![
        AuditEntry { name: "functional_distance", measured: dist_f, bound: eps, ok: dist_f < eps },
        AuditEntry {
            name: "direction_drift",
            measured: drift_max,
            bound: eps,
            ok: drift_max < eps,
        },
        AuditEntry {
            name: "slice_membership",
            measured: slice_min,
            bound: 1.0 - delta_x,
            ok: slice_min > 1.0 - delta_x,
        },
        AuditEntry { name: "pair_separation", measured: sep_max, bound: eps, ok: sep_max < eps },
        AuditEntry {
            name: "localization",
            measured: loc_max,
            bound: eps,
            ok: loc_max < eps,
        },
        AuditEntry {
            name: "bump_support",
            measured: supp_max,
            bound: rtilde,
            ok: supp_max < rtilde + 1e-12,
        },
        AuditEntry {
            name: "h_quotient",
            measured: hq_min,
            bound: 1.0 - trace.bound,
            ok: hq_min > 1.0 - trace.bound,
        },
    ];
    let passed = audits.iter().all(|a| a.ok);
    Ok(PipelineReport {
        eps,
        delta,
        delta_x,
        tilde: (xt, yt),
        rescale,
        trace,
        audits,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_grid_space, GridNode, GridSpec, NeighborhoodSpec};

    fn l2_modulus(eps: f64) -> f64 {
        1.0 - (1.0 - eps * eps / 4.0).sqrt()
    }

    #[test]
    fn modulus_l2_matches_closed_form() {
        let m = NormedSpaceModel::lp(2, 2.0).unwrap();
        for eps in [0.25, 0.5, 1.0, 1.5] {
            let d = modulus_convexity(&m, eps).unwrap();
            assert!(
                (d - l2_modulus(eps)).abs() < 1e-6,
                "eps {eps}: {d} vs {}",
                l2_modulus(eps)
            );
        }
    }

    #[test]
    fn modulus_vanishes_with_eps() {
        let m = NormedSpaceModel::lp(2, 2.0).unwrap();
        let d = modulus_convexity(&m, 1e-3).unwrap();
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn modulus_l4_restarts_agree() {
        let m = NormedSpaceModel::lp(2, 4.0).unwrap();
        let d1 = modulus_convexity_seeded(&m, 1.0, MODULUS_SEED).unwrap();
        let d2 = modulus_convexity_seeded(&m, 1.0, 987_654).unwrap();
        assert!((d1 - d2).abs() < 1e-6, "{d1} vs {d2}");
        // sampling can only overestimate the infimum
        let ds = modulus_sampling_bound(&m, 1.0, 3, 200_000).unwrap();
        assert!(ds >= d1 - 1e-6, "{ds} vs {d1}");
        assert!(ds - d1 < 1e-2);
    }

    #[test]
    fn modulus_rejects_polyhedral() {
        let m = NormedSpaceModel::polyhedral(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            modulus_convexity(&m, 1.0),
            Err(LipkitError::NotUniformlyConvex(_))
        ));
        let m1 = NormedSpaceModel::lp(2, 1.0).unwrap();
        assert!(modulus_convexity(&m1, 1.0).is_err());
    }

    #[test]
    fn slice_diameter_l2() {
        let m = NormedSpaceModel::lp(2, 2.0).unwrap();
        let fstar = [1.0, 0.0];
        let dx = l2_modulus(0.5);
        let (max_d, ok) = slice_diameter_check(&m, &fstar, dx, 0.5, 10_000, 9).unwrap();
        assert!(ok, "max pair distance {max_d}");
        assert!(max_d < 0.5);
        // a half-ball slice stays within the ball diameter
        let (wide, _) = slice_diameter_check(&m, &fstar, 1.0, 2.0, 10_000, 9).unwrap();
        assert!(wide <= 2.0);
        // nested slices on a fixed seed
        let (small, _) = slice_diameter_check(&m, &fstar, dx / 2.0, 0.5, 10_000, 9).unwrap();
        assert!(small <= max_d + 1e-12);
        // far too thin a slice for the sampler
        assert!(matches!(
            slice_diameter_check(&m, &fstar, 1e-12, 0.5, 1000, 9),
            Err(LipkitError::SamplerExhausted(_))
        ));
    }

    fn pipeline_grid_at(
        model: &NormedSpaceModel,
        resolution: usize,
    ) -> Arc<FinitePointedMetricSpace> {
        let anchors = vec![vec![1.0, 0.2], vec![0.3, -0.6]];
        let spec = GridSpec {
            anchors,
            segments: vec![
                (GridNode::Origin, GridNode::Anchor(0)),
                (GridNode::Origin, GridNode::Anchor(1)),
                (GridNode::Anchor(0), GridNode::Anchor(1)),
            ],
            segment_resolution: resolution,
            neighborhoods: vec![NeighborhoodSpec { anchor: 0, radius: 0.15, count: 6 }],
            seed: 31,
        };
        build_grid_space(model, &spec).unwrap()
    }

    fn pipeline_grid(model: &NormedSpaceModel) -> Arc<FinitePointedMetricSpace> {
        pipeline_grid_at(model, 16)
    }

    fn linear_functional(
        space: &Arc<FinitePointedMetricSpace>,
        a: &[f64],
    ) -> LipFunctional {
        let values: Vec<f64> = (0..space.len())
            .map(|p| dot(a, space.coord(p).unwrap()))
            .collect();
        LipFunctional::new(Arc::clone(space), values).unwrap()
    }

    #[test]
    fn tilde_pair_on_linear_functional() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let space = pipeline_grid(&model);
        let x = space.index_of_label("a0").unwrap();
        let y = space.index_of_label("a1").unwrap();
        let cx = space.coord(x).unwrap().to_vec();
        let cy = space.coord(y).unwrap().to_vec();
        let d: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| p - q).collect();
        let nd = model.norm(&d);
        let dir: Vec<f64> = d.iter().map(|v| v / nd).collect();
        let a = model.duality_map(&dir).unwrap();
        let f0 = linear_functional(&space, &a);
        let f = f0.scale(1.0 / lip_norm(&f0).0);
        let eps = 0.4;
        let (xt, yt) = select_tilde_pair(&model, &f, x, y, 1e-6, eps).unwrap();
        let sep = space.rho(xt, yt);
        let nxt = model.norm(space.coord(xt).unwrap());
        let nyt = model.norm(space.coord(yt).unwrap());
        assert!(sep < 0.25 * eps.min(nxt).min(nyt));
        assert!(f.quotient(xt, yt) > 1.0 - 1e-6);
        // alignment with the segment direction
        let ct: Vec<f64> = space
            .coord(xt)
            .unwrap()
            .iter()
            .zip(space.coord(yt).unwrap())
            .map(|(p, q)| p - q)
            .collect();
        let nt = model.norm(&ct);
        for (u, v) in ct.iter().zip(&dir) {
            assert!((u / nt - v).abs() < 1e-9);
        }
    }

    #[test]
    fn tilde_pair_grid_too_coarse() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let spec = GridSpec::segments_to_anchors(vec![vec![1.0, 0.0]], 2, 1);
        let space = build_grid_space(&model, &spec).unwrap();
        let x = space.index_of_label("a0").unwrap();
        let f = linear_functional(&space, &[1.0, 0.0]);
        assert!(matches!(
            select_tilde_pair(&model, &f, x, 0, 1e-6, 0.1),
            Err(LipkitError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn bump_values_and_norm() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let space = pipeline_grid_at(&model, 34);
        assert!(space.len() > 100);
        // pick two nearby points on the first segment, away from the origin
        let xt = space.index_of_label("s0_30").unwrap();
        let yt = space.index_of_label("s0_28").unwrap();
        let bump = bump_functional(&space, xt, yt).unwrap();
        let r = space.rho(xt, yt);
        assert!((bump.value(xt) - r).abs() < 1e-12);
        assert_eq!(bump.value(yt), 0.0);
        assert!((lip_norm(&bump).0 - 1.0).abs() < 1e-9);
        assert!((bump.quotient(xt, yt) - 1.0).abs() < 1e-12);
        // any point outside the ball carries zero
        for p in 0..space.len() {
            if space.rho(xt, p) >= r {
                assert_eq!(bump.value(p), 0.0);
            }
        }
    }

    #[test]
    fn delta_for_eps_l2() {
        let m = NormedSpaceModel::lp(2, 2.0).unwrap();
        let d = delta_for_eps(&m, 0.5).unwrap();
        let dx = l2_modulus(0.5);
        let expect = (0.5 * (dx / 2.0) * (dx / 2.0)).min(0.125) * (1.0 - 1e-6);
        // the computed modulus carries the minimizer's 1e-6-level error
        assert!((d - expect).abs() < 1e-7, "{d} vs {expect}");
        assert!(d < 0.5 * 0.5 * 0.5);
        assert!((2.0 * d).sqrt() < 0.5 * dx);
        assert!(delta_for_eps(&m, 0.7).is_err());
    }

    #[test]
    fn pipeline_linear_functional_passes() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let space = pipeline_grid(&model);
        let x = space.index_of_label("a0").unwrap();
        let y = space.index_of_label("a1").unwrap();
        let cx = space.coord(x).unwrap().to_vec();
        let cy = space.coord(y).unwrap().to_vec();
        let d: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| p - q).collect();
        let nd = model.norm(&d);
        let dir: Vec<f64> = d.iter().map(|v| v / nd).collect();
        let a = model.duality_map(&dir).unwrap();
        let f0 = linear_functional(&space, &a);
        let f = f0.scale(1.0 / lip_norm(&f0).0);
        let report = lipbpb_uniformly_convex(&model, &f, x, y, 0.4).unwrap();
        assert!(report.passed, "audits: {:?}", report.audits);
        let dist = report
            .audits
            .iter()
            .find(|e| e.name == "functional_distance")
            .unwrap();
        assert!(dist.measured < 1e-9, "{}", dist.measured);
        assert!(report.rescale >= 1.0 - 1e-9);
    }

    #[test]
    fn pipeline_perturbed_functional_passes() {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        let space = pipeline_grid_at(&model, 12);
        let x = space.index_of_label("a0").unwrap();
        let y = space.index_of_label("a1").unwrap();
        let cx = space.coord(x).unwrap().to_vec();
        let cy = space.coord(y).unwrap().to_vec();
        let d: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| p - q).collect();
        let nd = model.norm(&d);
        let dir: Vec<f64> = d.iter().map(|v| v / nd).collect();
        let a = model.duality_map(&dir).unwrap();
        let f0 = linear_functional(&space, &a);
        // a tiny off-pair perturbation keeps the quotient above 1 - delta
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = f0
            .values
            .iter()
            .map(|v| v + 1e-7 * rng.gen_range(-1.0..1.0))
            .collect();
        let g0 = LipFunctional::from_unnormalized(Arc::clone(&space), values).unwrap();
        let f = g0.scale(1.0 / lip_norm(&g0).0);
        let report = lipbpb_uniformly_convex(&model, &f, x, y, 0.4).unwrap();
        assert!(report.passed, "audits: {:?}", report.audits);
        for e in &report.audits {
            assert!(e.ok, "{}: measured {} bound {}", e.name, e.measured, e.bound);
        }
    }
}
