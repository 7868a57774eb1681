//! Fat Cantor sets and piecewise-linear functions in exact rational
//! arithmetic.
//!
//! Everything in this module is exact: interval endpoints, measures, slopes
//! and norms are `BigRational`s, so the certified 1/2 lower bound on the
//! distance from the Cantor primitive to any strongly attaining candidate is
//! a rational comparison, not a floating-point one.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LipkitError, Result};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A finite-depth Smith-Volterra-Cantor set: what remains of `[0, 1]` after
/// removing, at step `i`, the open middle interval of length `4^{-i}` from
/// each current interval.
#[derive(Debug, Clone)]
pub struct FatCantorSet {
    pub depth: u32,
    /// Sorted, pairwise disjoint closed intervals.
    pub kept_intervals: Vec<(BigRational, BigRational)>,
    pub measure: BigRational,
}

pub fn svc_set(depth: u32) -> Result<FatCantorSet> {
    if depth < 1 {
        return Err(LipkitError::Precondition("depth must be at least 1".into()));
    }
    if depth > 20 {
        return Err(LipkitError::SizeGuard(format!(
            "depth {depth} would produce {} intervals",
            2u64.saturating_pow(depth)
        )));
    }
    let mut kept = vec![(BigRational::zero(), BigRational::one())];
    for i in 1..=depth {
        let gap = BigRational::new(BigInt::one(), BigInt::from(4).pow(i));
        let half_gap = &gap / BigRational::from_integer(BigInt::from(2));
        let mut next = Vec::with_capacity(kept.len() * 2);
        for (a, b) in kept {
            let mid = (&a + &b) / BigRational::from_integer(BigInt::from(2));
            next.push((a, &mid - &half_gap));
            next.push((&mid + &half_gap, b));
        }
        kept = next;
    }
    let measure: BigRational = kept.iter().map(|(a, b)| b - a).sum();
    Ok(FatCantorSet { depth, kept_intervals: kept, measure })
}

impl FatCantorSet {
    /// Closed-form measure `1 - sum_{i=1..k} 2^{i-1} / 4^i`.
    pub fn closed_form_measure(depth: u32) -> BigRational {
        let mut m = BigRational::one();
        for i in 1..=depth {
            m -= BigRational::new(BigInt::from(2).pow(i - 1), BigInt::from(4).pow(i));
        }
        m
    }
}

/// A piecewise-linear function on `[0, 1]` with `f(0) = 0`, held as exact
/// rational breakpoints and per-piece slopes. The Lipschitz norm equals the
/// largest absolute slope, exactly.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearFn {
    /// Strictly increasing, starting at 0 and ending at 1.
    pub breakpoints: Vec<BigRational>,
    /// One slope per piece (`breakpoints.len() - 1`).
    pub slopes: Vec<BigRational>,
}

impl PiecewiseLinearFn {
    pub fn new(breakpoints: Vec<BigRational>, slopes: Vec<BigRational>) -> Result<Self> {
        if breakpoints.len() < 2 || slopes.len() + 1 != breakpoints.len() {
            return Err(LipkitError::Structural("need k+1 breakpoints for k pieces".into()));
        }
        if !breakpoints[0].is_zero() || breakpoints.last().unwrap() != &BigRational::one() {
            return Err(LipkitError::Structural("breakpoints must span [0, 1]".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LipkitError::Structural("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, slopes })
    }

    /// Exact evaluation.
    pub fn eval(&self, t: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (w, slope) in self.breakpoints.windows(2).zip(&self.slopes) {
            if t <= &w[0] {
                break;
            }
            let upper = if t < &w[1] { t } else { &w[1] };
            acc += slope * (upper - &w[0]);
        }
        acc
    }

    /// Values at the breakpoints, cumulatively.
    pub fn breakpoint_values(&self) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero()];
        for (w, slope) in self.breakpoints.windows(2).zip(&self.slopes) {
            let prev = out.last().unwrap().clone();
            out.push(prev + slope * (&w[1] - &w[0]));
        }
        out
    }

    /// Exact Lipschitz norm: the largest absolute slope.
    pub fn lip_norm(&self) -> BigRational {
        self.slopes.iter().map(|s| s.abs()).max().unwrap_or_else(BigRational::zero)
    }

    /// Length of the longest piece where the absolute slope equals the norm.
    pub fn longest_extreme_piece(&self) -> (BigRational, (BigRational, BigRational)) {
        let norm = self.lip_norm();
        let mut best_len = BigRational::zero();
        let mut best = (BigRational::zero(), BigRational::zero());
        for (w, slope) in self.breakpoints.windows(2).zip(&self.slopes) {
            if slope.abs() == norm {
                let len = &w[1] - &w[0];
                if len > best_len {
                    best_len = len;
                    best = (w[0].clone(), w[1].clone());
                }
            }
        }
        (best_len, best)
    }

    /// Signed difference quotient between two breakpoint parameters, exact.
    pub fn quotient(&self, s: &BigRational, t: &BigRational) -> BigRational {
        (self.eval(s) - self.eval(t)) / (s - t)
    }

    pub fn breakpoints_f64(&self) -> Vec<f64> {
        self.breakpoints.iter().map(rational_to_f64).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.breakpoint_values().iter().map(rational_to_f64).collect()
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // exact for the dyadic rationals produced here
    let n: f64 = numer.to_string().parse().unwrap();
    let d: f64 = denom.to_string().parse().unwrap();
    n / d
}

/// The primitive of the indicator of a fat Cantor set: slope 1 on kept
/// intervals, 0 on removed gaps. Unit Lipschitz norm, exactly.
pub fn cantor_primitive(depth: u32) -> Result<PiecewiseLinearFn> {
    let set = svc_set(depth)?;
    let mut breakpoints = Vec::with_capacity(2 * set.kept_intervals.len());
    let mut slopes = Vec::new();
    let mut cursor = BigRational::zero();
    for (a, b) in &set.kept_intervals {
        if *a > cursor {
            breakpoints.push(cursor.clone());
            slopes.push(BigRational::zero());
        }
        breakpoints.push(a.clone());
        slopes.push(BigRational::one());
        cursor = b.clone();
    }
    breakpoints.push(cursor);
    if breakpoints.last().unwrap() != &BigRational::one() {
        breakpoints.push(BigRational::one());
        slopes.push(BigRational::zero());
    }
    // first kept interval starts at 0, so dedup a possible leading 0-length gap
    PiecewiseLinearFn::new(breakpoints, slopes)
}

/// Strong-attainment candidate family used in audits: at most `max_pieces`
/// pieces and an extreme-slope piece of length at least `min_extreme_len`.
#[derive(Debug, Clone)]
pub struct SaCandidateFamily {
    pub max_pieces: usize,
    pub min_extreme_len: BigRational,
}

impl Default for SaCandidateFamily {
    fn default() -> Self {
        Self { max_pieces: 16, min_extreme_len: rat(1, 32) }
    }
}

impl SaCandidateFamily {
    pub fn contains(&self, f: &PiecewiseLinearFn) -> bool {
        if f.slopes.len() > self.max_pieces {
            return false;
        }
        let (len, _) = f.longest_extreme_piece();
        len >= self.min_extreme_len
    }
}

/// Certified lower bound on the Lipschitz distance `||g - f||` between two
/// piecewise-linear functions, computed as the exact supremum of the slope
/// difference over merged pieces, with the witnessing piece.
#[derive(Debug, Clone)]
pub struct SaDistance {
    pub bound: BigRational,
    pub witness_piece: (BigRational, BigRational),
}

pub fn sa_distance_lower_bound(g: &PiecewiseLinearFn, f: &PiecewiseLinearFn) -> Result<SaDistance> {
    let (extreme_len, _) = f.longest_extreme_piece();
    if extreme_len.is_zero() {
        return Err(LipkitError::Precondition(
            "candidate has no extreme-slope piece".into(),
        ));
    }
    // merge breakpoints; both derivatives are piecewise constant, so the
    // essential sup of |g' - f'| is attained on a merged piece
    let mut cuts: Vec<BigRational> = g
        .breakpoints
        .iter()
        .chain(f.breakpoints.iter())
        .cloned()
        .collect();
    cuts.sort();
    cuts.dedup();
    let slope_at = |pl: &PiecewiseLinearFn, left: &BigRational| -> BigRational {
        for (w, s) in pl.breakpoints.windows(2).zip(&pl.slopes) {
            if left >= &w[0] && left < &w[1] {
                return s.clone();
            }
        }
        BigRational::zero()
    };
    let mut best: Option<SaDistance> = None;
    for w in cuts.windows(2) {
        let d = (slope_at(g, &w[0]) - slope_at(f, &w[0])).abs();
        if best.as_ref().map_or(true, |b| d > b.bound) {
            best = Some(SaDistance { bound: d, witness_piece: (w[0].clone(), w[1].clone()) });
        }
    }
    best.ok_or_else(|| LipkitError::Structural("no pieces".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svc_depth_one() {
        let s = svc_set(1).unwrap();
        assert_eq!(s.kept_intervals.len(), 2);
        assert_eq!(s.kept_intervals[0], (rat(0, 1), rat(3, 8)));
        assert_eq!(s.kept_intervals[1], (rat(5, 8), rat(1, 1)));
        assert_eq!(s.measure, rat(3, 4));
    }

    #[test]
    fn svc_depth_two_measure() {
        let s = svc_set(2).unwrap();
        assert_eq!(s.measure, rat(5, 8));
    }

    #[test]
    fn svc_measures_match_closed_form() {
        for depth in 1..=12 {
            let s = svc_set(depth).unwrap();
            assert_eq!(s.measure, FatCantorSet::closed_form_measure(depth), "depth {depth}");
        }
    }

    #[test]
    fn svc_depth_ten_measure_value() {
        let s = svc_set(10).unwrap();
        assert_eq!(s.measure, rat(1, 2) + rat(1, 2048));
    }

    #[test]
    fn svc_depth_guard() {
        assert!(svc_set(0).is_err());
        assert!(svc_set(21).is_err());
    }

    #[test]
    fn svc_intervals_disjoint_sorted() {
        let s = svc_set(6).unwrap();
        for w in s.kept_intervals.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        let total: BigRational = s.kept_intervals.iter().map(|(a, b)| b - a).sum();
        assert_eq!(total, s.measure);
    }

    #[test]
    fn primitive_endpoint_value_is_measure() {
        for depth in [1u32, 2, 4] {
            let g = cantor_primitive(depth).unwrap();
            let s = svc_set(depth).unwrap();
            assert_eq!(g.eval(&rat(1, 1)), s.measure, "depth {depth}");
        }
    }

    #[test]
    fn primitive_constant_on_gaps_and_unit_norm() {
        let g = cantor_primitive(3).unwrap();
        assert_eq!(g.lip_norm(), rat(1, 1));
        let s = svc_set(3).unwrap();
        // pick the first gap: between kept[0].1 and kept[1].0
        let (ref a, ref b) = (s.kept_intervals[0].1.clone(), s.kept_intervals[1].0.clone());
        let mid = (a + b) / rat(2, 1);
        assert_eq!(g.eval(a), g.eval(&mid));
        assert_eq!(g.eval(a), g.eval(b));
    }

    #[test]
    fn primitive_attaining_pairs_inside_kept_intervals() {
        let g = cantor_primitive(4).unwrap();
        let s = svc_set(4).unwrap();
        let bps = g.breakpoints.clone();
        for i in 0..bps.len() {
            for j in 0..i {
                let q = g.quotient(&bps[i], &bps[j]).abs();
                let inside_kept = s
                    .kept_intervals
                    .iter()
                    .any(|(a, b)| &bps[j] >= a && &bps[i] <= b);
                if q == rat(1, 1) {
                    assert!(inside_kept, "attaining pair not inside a kept interval");
                } else {
                    assert!(q < rat(1, 1));
                }
            }
        }
    }

    #[test]
    fn distance_to_zero_candidate() {
        let g = cantor_primitive(3).unwrap();
        let f = PiecewiseLinearFn::new(vec![rat(0, 1), rat(1, 1)], vec![rat(0, 1)]).unwrap();
        let d = sa_distance_lower_bound(&g, &f).unwrap();
        assert_eq!(d.bound, rat(1, 1));
    }

    #[test]
    fn distance_extreme_slope_meets_gap() {
        // slope 3/4 on [2/5, 3/5]: at depth 6 that piece meets a removed gap
        let g = cantor_primitive(6).unwrap();
        let f = PiecewiseLinearFn::new(
            vec![rat(0, 1), rat(2, 5), rat(3, 5), rat(1, 1)],
            vec![rat(0, 1), rat(3, 4), rat(0, 1)],
        )
        .unwrap();
        let d = sa_distance_lower_bound(&g, &f).unwrap();
        assert!(d.bound >= rat(3, 4));
        // the witness piece carries slope difference |0 - 3/4| or |1 - 0|
        assert!(d.bound >= rat(1, 2));
    }

    #[test]
    fn family_membership() {
        let fam = SaCandidateFamily::default();
        let ok = PiecewiseLinearFn::new(
            vec![rat(0, 1), rat(1, 2), rat(1, 1)],
            vec![rat(1, 1), rat(-1, 2)],
        )
        .unwrap();
        assert!(fam.contains(&ok));
        // the depth-6 primitive's extreme pieces are shorter than 1/32
        let g = cantor_primitive(6).unwrap();
        assert!(!fam.contains(&g));
    }

    #[test]
    fn eval_exactness() {
        let g = cantor_primitive(2).unwrap();
        // kept intervals at depth 1: [0,3/8], [5/8,1]; depth 2 subdivides
        assert_eq!(g.eval(&rat(0, 1)), rat(0, 1));
        assert!(g.eval(&rat(1, 1)) == rat(5, 8));
    }
}
