//! Seminorms on finite-dimensional normed models: norm computations,
//! attainment audits, the uniform-versus-Lipschitz convergence gap, and a
//! constructive nearly-attaining-to-attaining correction on `l_inf` ambient
//! spaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LipkitError, Result};
use crate::model::{dot, NormKind, NormedSpaceModel};

#[derive(Debug, Clone)]
pub enum TargetNorm {
    L2,
    LInf,
}

#[derive(Debug, Clone)]
pub enum SeminormRep {
    /// `p(x) = max_i |row_i . x|`.
    MaxAbs(Vec<Vec<f64>>),
    /// `p(x) = ||T x||` in the target norm.
    OpNorm { matrix: Vec<Vec<f64>>, target: TargetNorm },
}

#[derive(Debug, Clone)]
pub struct SeminormModel {
    pub dim: usize,
    pub rep: SeminormRep,
}

impl SeminormModel {
    pub fn max_abs(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != dim) {
            return Err(LipkitError::Structural(
                "each functional must have one coordinate per dimension".into(),
            ));
        }
        Ok(Self { dim, rep: SeminormRep::MaxAbs(rows) })
    }

    pub fn op_norm(dim: usize, matrix: Vec<Vec<f64>>, target: TargetNorm) -> Result<Self> {
        if matrix.is_empty() || matrix.iter().any(|r| r.len() != dim) {
            return Err(LipkitError::Structural(
                "each matrix row must have one coordinate per dimension".into(),
            ));
        }
        Ok(Self { dim, rep: SeminormRep::OpNorm { matrix, target } })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.rep {
            SeminormRep::MaxAbs(rows) => {
                rows.iter().map(|r| dot(r, x).abs()).fold(0.0, f64::max)
            }
            SeminormRep::OpNorm { matrix, target } => {
                let tx: Vec<f64> = matrix.iter().map(|r| dot(r, x)).collect();
                match target {
                    TargetNorm::L2 => tx.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    TargetNorm::LInf => tx.iter().map(|v| v.abs()).fold(0.0, f64::max),
                }
            }
        }
    }

    /// Rows of a MAXABS view: for OPNORM into `l_inf` the matrix rows serve
    /// directly; an `l_2` target has no exact finite view.
    fn max_abs_rows(&self) -> Option<&[Vec<f64>]> {
        match &self.rep {
            SeminormRep::MaxAbs(rows) => Some(rows),
            SeminormRep::OpNorm { matrix, target: TargetNorm::LInf } => Some(matrix),
            _ => None,
        }
    }
}

/// Sup of the seminorm over the unit sphere of the ambient model, with a
/// point witnessing it.
///
/// For MAXABS-representable seminorms the value is `max_i ||row_i||_*`,
/// exact via the ambient dual norm. The remaining case (`l_2` target) is
/// solved by seeded multi-start ascent over the sphere.
pub fn sup_norm(p: &SeminormModel, ambient: &NormedSpaceModel) -> Result<(f64, Vec<f64>)> {
    if p.dim != ambient.dim {
        return Err(LipkitError::Structural("dimension mismatch".into()));
    }
    if let Some(rows) = p.max_abs_rows() {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, r) in rows.iter().enumerate() {
            let dn = ambient.dual_norm(r)?;
            if dn > best.0 {
                best = (dn, i);
            }
        }
        let witness = dual_witness(ambient, &rows[best.1], best.0)?;
        return Ok((best.0, witness));
    }
    // l_2 target: seeded multi-start projected ascent
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..20 {
        let mut x: Vec<f64> = (0..p.dim).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let n = ambient.norm(&x).max(1e-12);
        x.iter_mut().for_each(|v| *v /= n);
        let mut step = 0.3;
        let mut val = p.eval(&x);
        for _ in 0..400 {
            let mut improved = false;
            for i in 0..p.dim {
                for sgn in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] += sgn * step;
                    let n = ambient.norm(&y).max(1e-12);
                    y.iter_mut().for_each(|v| *v /= n);
                    let v = p.eval(&y);
                    if v > val + 1e-14 {
                        x = y;
                        val = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
                if step < 1e-10 {
                    break;
                }
            }
        }
        if best.as_ref().map_or(true, |(bv, _)| val > *bv) {
            best = Some((val, x));
        }
    }
    Ok(best.unwrap())
}

/// A unit-sphere point where the functional attains its dual norm.
fn dual_witness(ambient: &NormedSpaceModel, row: &[f64], dn: f64) -> Result<Vec<f64>> {
    if dn < 1e-12 {
        // zero functional: any sphere point works
        let mut w = vec![0.0; ambient.dim];
        w[0] = 1.0;
        let n = ambient.norm(&w);
        return Ok(w.iter().map(|v| v / n).collect());
    }
    match &ambient.kind {
        NormKind::LInf => Ok(row.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()),
        NormKind::Lp { p } if *p > 1.0 => {
            // witness = inverse duality map: apply the map in the dual model
            let q = p / (p - 1.0);
            let dual = NormedSpaceModel::lp(ambient.dim, q)?;
            let unit: Vec<f64> = row.iter().map(|v| v / dn).collect();
            dual.duality_map(&unit)
        }
        NormKind::Lp { .. } => {
            // l_1 ambient: a signed coordinate vector at the largest entry
            let (i, &v) = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            let mut w = vec![0.0; ambient.dim];
            w[i] = v.signum();
            Ok(w)
        }
        NormKind::Polyhedral { .. } => Err(LipkitError::Structural(
            "no dual witness for polyhedral ambient models".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct SeminormNorms {
    pub sup_norm: f64,
    pub sup_witness: Vec<f64>,
    /// Lipschitz norm of the seminorm over a documented grid: the sphere
    /// witness, seeded random sphere points, and the origin.
    pub lip_norm: f64,
    pub lip_pair: (Vec<f64>, Vec<f64>),
    /// |sup - lip| (theory: the two norms are equal; the grid contains the
    /// sup witness, so this is pure floating slack).
    pub deviation: f64,
}

/// Computes both norms of a seminorm and checks them against each other.
/// The pair `(witness, 0)` realizes the sup norm as a difference quotient,
/// so the grid Lipschitz norm matches the sphere sup exactly.
pub fn seminorm_norms(p: &SeminormModel, ambient: &NormedSpaceModel) -> Result<SeminormNorms> {
    let (sup, witness) = sup_norm(p, ambient)?;
    let mut grid: Vec<Vec<f64>> = vec![vec![0.0; p.dim], witness.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0003);
    for _ in 0..60 {
        let mut x: Vec<f64> = (0..p.dim).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let n = ambient.norm(&x).max(1e-12);
        let scale = rng.gen_range(0.2f64..1.0) / n;
        x.iter_mut().for_each(|v| *v *= scale);
        grid.push(x);
    }
    let mut lip = 0.0f64;
    let mut pair = (grid[0].clone(), grid[1].clone());
    for (i, a) in grid.iter().enumerate() {
        for b in &grid[i + 1..] {
            let d = ambient.dist(a, b);
            if d < 1e-12 {
                continue;
            }
            let q = (p.eval(a) - p.eval(b)).abs() / d;
            if q > lip {
                lip = q;
                pair = (a.clone(), b.clone());
            }
        }
    }
    Ok(SeminormNorms {
        sup_norm: sup,
        sup_witness: witness,
        lip_norm: lip,
        lip_pair: pair,
        deviation: (sup - lip).abs(),
    })
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Sphere point attaining the sup norm.
    pub z: Vec<f64>,
    pub p_at_z: f64,
    pub sup: f64,
    /// Difference quotient of `p` at the pair `(z, 0)`.
    pub pair_quotient: f64,
    /// Value of the factoring operator at `z` (the target norm of `Tz`).
    pub operator_value: f64,
    /// All three witnesses agree within 1e-9.
    pub all_agree: bool,
}

/// Audits the attainment equivalences: the sup witness, the pair `(z, 0)`,
/// and the factoring operator all attain at the same point.
pub fn attainment_equivalences(
    p: &SeminormModel,
    ambient: &NormedSpaceModel,
) -> Result<EquivalenceReport> {
    let (sup, z) = sup_norm(p, ambient)?;
    let p_at_z = p.eval(&z);
    let nz = ambient.norm(&z);
    let pair_quotient = (p_at_z - p.eval(&vec![0.0; p.dim])) / nz;
    // the factoring operator: for MAXABS, T x = (row_i . x)_i into l_inf
    let operator_value = match &p.rep {
        SeminormRep::MaxAbs(rows) => rows.iter().map(|r| dot(r, &z).abs()).fold(0.0, f64::max),
        SeminormRep::OpNorm { .. } => p_at_z,
    };
    let all_agree = (p_at_z - sup).abs() <= 1e-9
        && (pair_quotient - sup).abs() <= 1e-9
        && (operator_value - sup).abs() <= 1e-9;
    Ok(EquivalenceReport { z, p_at_z, sup, pair_quotient, operator_value, all_agree })
}

/// Truncated coordinate seminorm `p(x) = max_{n <= N} n |x_n| / (n + 1)` on
/// an ambient of dimension `d`: the sup norm is `N / (N + 1)`, always below
/// 1, with the gap closing as the truncation grows.
pub fn jn_truncated_seminorm(n_trunc: usize, dim: usize) -> Result<SeminormModel> {
    if n_trunc == 0 {
        return Err(LipkitError::Range("truncation level must be at least 1".into()));
    }
    if dim < n_trunc {
        return Err(LipkitError::Precondition(format!(
            "ambient dimension {dim} is below the truncation level {n_trunc}"
        )));
    }
    let rows: Vec<Vec<f64>> = (1..=n_trunc)
        .map(|n| {
            let mut r = vec![0.0; dim];
            r[n - 1] = n as f64 / (n as f64 + 1.0);
            r
        })
        .collect();
    SeminormModel::max_abs(dim, rows)
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub n: u32,
    /// `sup_{S} |p_n - p_0| = 1/n`, attained at `(0, +-1)`.
    pub uniform_dist: f64,
    pub uniform_witness: Vec<f64>,
    /// Lower bound for the Lipschitz distance, always 1.
    pub lip_lower_bound: f64,
    /// The pair `((0, n), (1, n))` realizing the Lipschitz quotient 1.
    pub lip_pair: (Vec<f64>, Vec<f64>),
}

/// The gap between uniform and Lipschitz convergence of seminorms on
/// `l_inf^2`: `p_0(x) = |x_1|` against `p_n(x) = max(|x_1|, |x_2|/n)`.
pub fn uniform_vs_lip_gap(n: u32) -> Result<GapReport> {
    if n == 0 {
        return Err(LipkitError::Range("n must be at least 1".into()));
    }
    let nf = n as f64;
    let p0 = |x: &[f64]| x[0].abs();
    let pn = |x: &[f64]| x[0].abs().max(x[1].abs() / nf);

    let witness = vec![0.0, 1.0];
    let uniform_dist = (pn(&witness) - p0(&witness)).abs();

    let a = vec![0.0, nf];
    let b = vec![1.0, nf];
    // sup-distance of the pair is 1
    let lip_lower_bound = ((pn(&a) - p0(&a)) - (pn(&b) - p0(&b))).abs();
    Ok(GapReport {
        n,
        uniform_dist,
        uniform_witness: witness,
        lip_lower_bound,
        lip_pair: (a, b),
    })
}

#[derive(Debug, Clone)]
pub struct SeminormBpb {
    pub p: SeminormModel,
    pub x: Vec<f64>,
    /// `max_j |x_j - x0_j|`.
    pub dist_x: f64,
    /// Measured sup of `|p - p0|` over sampled sphere points (a lower
    /// estimate of the uniform distance).
    pub dist_p_sampled: f64,
    /// The provable bound `sqrt(2 delta)` for both distances.
    pub bound: f64,
    pub p_at_x: f64,
    pub attained: bool,
}

/// Constructive correction on `l_inf^d`: from a unit MAXABS seminorm nearly
/// attained at `x0`, produce a unit seminorm attaining at a nearby sphere
/// point, both moves within `sqrt(2 delta) < eps`.
pub fn seminorm_bpb_construct(
    p0: &SeminormModel,
    x0: &[f64],
    delta: f64,
    eps: f64,
) -> Result<SeminormBpb> {
    let d = p0.dim;
    let ambient = NormedSpaceModel::linf(d);
    let Some(rows) = p0.max_abs_rows() else {
        return Err(LipkitError::Structural(
            "the construction needs a MAXABS representation".into(),
        ));
    };
    if !(delta > 0.0 && eps > 0.0 && delta <= eps * eps / 4.0) {
        return Err(LipkitError::Range(format!(
            "need 0 < delta <= eps^2/4, got delta = {delta}, eps = {eps}"
        )));
    }
    let norm0 = rows
        .iter()
        .map(|r| ambient.dual_norm(r).unwrap())
        .fold(0.0f64, f64::max);
    if (norm0 - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!("p0 must have norm 1, got {norm0}")));
    }
    let nx0 = x0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if (nx0 - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition("x0 must lie on the unit sphere".into()));
    }
    let p0x = p0.eval(x0);
    if p0x <= 1.0 - delta {
        return Err(LipkitError::Precondition(format!(
            "p0(x0) = {p0x} does not exceed 1 - delta = {}",
            1.0 - delta
        )));
    }
    let bound = (2.0 * delta).sqrt();

    if p0x >= 1.0 - 1e-12 {
        return Ok(SeminormBpb {
            p: p0.clone(),
            x: x0.to_vec(),
            dist_x: 0.0,
            dist_p_sampled: 0.0,
            bound,
            p_at_x: p0x,
            attained: true,
        });
    }

    // the row nearly attained at x0, signed so that u*(x0) = p0(x0)
    let (istar, _) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| dot(a.1, x0).abs().total_cmp(&dot(b.1, x0).abs()))
        .unwrap();
    let sgn = dot(&rows[istar], x0).signum();
    let ustar: Vec<f64> = rows[istar].iter().map(|v| sgn * v).collect();

    // face projection at threshold sqrt(2 delta)
    let on_face: Vec<bool> = ustar
        .iter()
        .zip(x0)
        .map(|(&u, &xv)| u != 0.0 && u.signum() * xv > 1.0 - bound)
        .collect();
    let mass: f64 = ustar
        .iter()
        .zip(&on_face)
        .filter(|(_, &keep)| keep)
        .map(|(u, _)| u.abs())
        .sum();
    if mass < 1e-12 {
        return Err(LipkitError::Numerical(
            "the near-attainment face carries no mass".into(),
        ));
    }
    let ystar: Vec<f64> = ustar
        .iter()
        .zip(&on_face)
        .map(|(&u, &keep)| if keep { u / mass } else { 0.0 })
        .collect();
    let x: Vec<f64> = x0
        .iter()
        .zip(&ustar)
        .zip(&on_face)
        .map(|((&xv, &u), &keep)| if keep { u.signum() } else { xv })
        .collect();

    // p = max((1 - sqrt(2 delta)) p0, |y*|), unit norm by construction
    let mut new_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * (1.0 - bound)).collect())
        .collect();
    new_rows.push(ystar);
    let p = SeminormModel::max_abs(d, new_rows)?;

    let dist_x = x
        .iter()
        .zip(x0)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0004);
    let mut dist_p_sampled = 0.0f64;
    for k in 0..2000 {
        let v: Vec<f64> = if k < (1 << d.min(10)) {
            // sphere vertices first
            (0..d).map(|i| if k >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
        } else {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
            let n = v.iter().map(|t| t.abs()).fold(0.0, f64::max).max(1e-12);
            v.iter_mut().for_each(|t| *t /= n);
            v
        };
        dist_p_sampled = dist_p_sampled.max((p.eval(&v) - p0.eval(&v)).abs());
    }
    let p_at_x = p.eval(&x);
    let attained = (p_at_x - 1.0).abs() <= 1e-9;
    Ok(SeminormBpb { p, x, dist_x, dist_p_sampled, bound, p_at_x, attained })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_coord(dim: usize) -> SeminormModel {
        let mut r = vec![0.0; dim];
        r[0] = 1.0;
        SeminormModel::max_abs(dim, vec![r]).unwrap()
    }

    #[test]
    fn seminorm_axioms_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0f64..1.0)).collect())
                .collect();
            let p = SeminormModel::max_abs(3, rows).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0f64..2.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0f64..2.0)).collect();
            let lam: f64 = rng.gen_range(-3.0f64..3.0);
            let lx: Vec<f64> = x.iter().map(|v| lam * v).collect();
            assert!((p.eval(&lx) - lam.abs() * p.eval(&x)).abs() < 1e-9);
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            assert!(p.eval(&s) <= p.eval(&x) + p.eval(&y) + 1e-9);
        }
    }

    #[test]
    fn norms_of_first_coordinate() {
        let p = first_coord(2);
        let ambient = NormedSpaceModel::linf(2);
        let r = seminorm_norms(&p, &ambient).unwrap();
        assert!((r.sup_norm - 1.0).abs() < 1e-12);
        assert!((r.lip_norm - 1.0).abs() < 1e-12);
        assert!(r.deviation < 1e-12);
        assert!((p.eval(&r.sup_witness) - 1.0).abs() < 1e-12);
        assert!((r.sup_witness[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_itself_as_seminorm() {
        // p = l_inf norm as MAXABS over coordinate functionals
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = SeminormModel::max_abs(2, rows).unwrap();
        let ambient = NormedSpaceModel::linf(2);
        let r = seminorm_norms(&p, &ambient).unwrap();
        assert!((r.sup_norm - 1.0).abs() < 1e-12);
        assert!((r.lip_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn remark_gap_family_sup_norm() {
        // p_n(x) = max(|x_1|, |x_2|/n) has sup norm 1 on l_inf^2
        for n in [1.0f64, 3.0, 10.0] {
            let p = SeminormModel::max_abs(2, vec![vec![1.0, 0.0], vec![0.0, 1.0 / n]]).unwrap();
            let (sup, _) = sup_norm(&p, &NormedSpaceModel::linf(2)).unwrap();
            assert!((sup - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_on_l2_ambient() {
        // MAXABS over l_2: sup norm is the largest euclidean row norm
        let p = SeminormModel::max_abs(2, vec![vec![0.6, 0.8], vec![0.3, 0.0]]).unwrap();
        let ambient = NormedSpaceModel::lp(2, 2.0).unwrap();
        let r = seminorm_norms(&p, &ambient).unwrap();
        assert!((r.sup_norm - 1.0).abs() < 1e-9);
        assert!(r.deviation < 1e-9);
        // OPNORM into l_2 from l_2, diagonal matrix: largest singular value
        let t = SeminormModel::op_norm(2, vec![vec![0.5, 0.0], vec![0.0, 0.25]], TargetNorm::L2)
            .unwrap();
        let (sup, w) = sup_norm(&t, &ambient).unwrap();
        assert!((sup - 0.5).abs() < 1e-6, "{sup}");
        assert!((w[0].abs() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn equivalences_agree() {
        let ambient = NormedSpaceModel::linf(2);
        let r = attainment_equivalences(&first_coord(2), &ambient).unwrap();
        assert!(r.all_agree);
        assert!((r.sup - 1.0).abs() < 1e-12);

        let id = SeminormModel::op_norm(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            TargetNorm::LInf,
        )
        .unwrap();
        let r = attainment_equivalences(&id, &ambient).unwrap();
        assert!(r.all_agree);

        let p = jn_truncated_seminorm(5, 6).unwrap();
        let r = attainment_equivalences(&p, &NormedSpaceModel::lp(6, 2.0).unwrap()).unwrap();
        assert!(r.all_agree);
        assert!((r.sup - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_seminorm_values() {
        let p = jn_truncated_seminorm(1, 2).unwrap();
        let (sup, _) = sup_norm(&p, &NormedSpaceModel::lp(2, 2.0).unwrap()).unwrap();
        assert!((sup - 0.5).abs() < 1e-12);

        let p = jn_truncated_seminorm(9, 9).unwrap();
        let amb = NormedSpaceModel::lp(9, 2.0).unwrap();
        let (sup, w) = sup_norm(&p, &amb).unwrap();
        assert!((sup - 0.9).abs() < 1e-12);
        // attained at the ninth coordinate vector
        assert!((w[8].abs() - 1.0).abs() < 1e-9);

        let mut prev = 0.0;
        for n in 1..=12 {
            let p = jn_truncated_seminorm(n, 12).unwrap();
            let (sup, _) = sup_norm(&p, &NormedSpaceModel::lp(12, 2.0).unwrap()).unwrap();
            assert!(sup > prev);
            assert!(sup < 1.0);
            prev = sup;
        }
        assert!(jn_truncated_seminorm(5, 4).is_err());
    }

    #[test]
    fn gap_exact_for_small_n() {
        for n in 1..=20u32 {
            let r = uniform_vs_lip_gap(n).unwrap();
            assert_eq!(r.uniform_dist * n as f64, 1.0);
            assert_eq!(r.lip_lower_bound, 1.0);
        }
        let r = uniform_vs_lip_gap(10).unwrap();
        assert!((r.uniform_dist - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bpb_trivial_when_attaining() {
        let p0 = first_coord(2);
        let r = seminorm_bpb_construct(&p0, &[1.0, 0.3], 0.0025, 0.2).unwrap();
        assert!(r.attained);
        assert_eq!(r.dist_x, 0.0);
        assert_eq!(r.dist_p_sampled, 0.0);
    }

    #[test]
    fn bpb_small_instance_bounds() {
        // p0 nearly attained at a vertex pushed slightly off the face
        let p0 = SeminormModel::max_abs(3, vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 0.9]])
            .unwrap();
        let delta = 0.0025;
        let x0 = [1.0 - delta, 1.0, 0.2];
        let r = seminorm_bpb_construct(&p0, &x0, delta, 0.2).unwrap();
        assert!((r.bound - (2.0f64 * delta).sqrt()).abs() < 1e-15);
        assert!(r.attained, "p(x) = {}", r.p_at_x);
        assert!(r.dist_x <= r.bound + 1e-12, "{} vs {}", r.dist_x, r.bound);
        assert!(r.dist_p_sampled <= r.bound + 1e-12);
        assert!(r.dist_x < 0.2 && r.dist_p_sampled < 0.2);
    }

    #[test]
    fn bpb_random_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
        let mut done = 0;
        while done < 50 {
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0f64..1.0)).collect())
                .collect();
            let ambient = NormedSpaceModel::linf(3);
            let norm = rows
                .iter()
                .map(|r| ambient.dual_norm(r).unwrap())
                .fold(0.0f64, f64::max);
            if norm < 1e-6 {
                continue;
            }
            let rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().map(|v| v / norm).collect())
                .collect();
            let p0 = SeminormModel::max_abs(3, rows).unwrap();
            // start at a witness and pull it slightly inside the face
            let delta = 0.0025;
            let (_, w) = sup_norm(&p0, &ambient).unwrap();
            let mut x0: Vec<f64> = w
                .iter()
                .map(|&v| v * (1.0 - rng.gen_range(0.0..delta * 0.3)))
                .collect();
            let nx0 = x0.iter().map(|v| v.abs()).fold(0.0, f64::max);
            x0.iter_mut().for_each(|v| *v /= nx0);
            if p0.eval(&x0) <= 1.0 - delta {
                continue;
            }
            let r = seminorm_bpb_construct(&p0, &x0, delta, 0.2).unwrap();
            assert!(r.attained);
            assert!(r.dist_x <= r.bound + 1e-9);
            assert!(r.dist_p_sampled <= r.bound + 1e-9);
            done += 1;
        }
    }

    #[test]
    fn bpb_rejects_bad_inputs() {
        let p0 = first_coord(2);
        // delta above eps^2/4
        assert!(matches!(
            seminorm_bpb_construct(&p0, &[1.0, 0.0], 0.5, 0.2),
            Err(LipkitError::Range(_))
        ));
        // x0 off the sphere
        assert!(seminorm_bpb_construct(&p0, &[0.5, 0.0], 0.0025, 0.2).is_err());
        // not nearly attaining
        assert!(seminorm_bpb_construct(&p0, &[0.1, 1.0], 0.0025, 0.2).is_err());
    }
}
