//! Sharp Bishop-Phelps-Bollobas correction for Lipschitz functionals.
//!
//! Given a unit functional `f` that almost attains its norm against a
//! molecule `w` (pairing above `1 - delta`), [`bpb_correct`] searches for a
//! corrected pair `(g, z)` with `<g, z> = 1` and both correction distances
//! within `sqrt(2 delta)`. The search is staged: exact molecule-anchored
//! linear programs first, then alternating minimization over the two
//! coordinates with multi-start. A brute-force oracle over all anchors ships
//! for spaces with at most 5 points.

use std::sync::Arc;

use crate::error::{LipkitError, Result};
use crate::freespace::{self, molecules, pairing, FreeVector, Molecule};
use crate::lipfunc::{lip_norm, LipFunctional};
use crate::lp::{LpBuilder, Relation};
use crate::metric::FinitePointedMetricSpace;
use crate::model::NormedSpaceModel;

/// Slack added on top of `sqrt(2 delta)` when classifying a result as
/// achieved, absorbing solver tolerances.
pub const ACHIEVE_TOL: f64 = 1e-9;

/// Pair-separation floor at which the refinement loop stops.
pub const PAIR_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct BpbResult {
    /// Corrected functional, unit Lipschitz norm.
    pub g: LipFunctional,
    /// Corrected free-space element, unit free norm.
    pub z: FreeVector,
    /// `<g, z>`, equal to 1 within 1e-9.
    pub pairing: f64,
    /// `||f - g||` in the Lipschitz norm.
    pub dist_f: f64,
    /// `free_norm(w - z)`.
    pub dist_w: f64,
    /// `sqrt(2 delta)`.
    pub bound: f64,
    /// Both distances within the bound.
    pub achieved: bool,
    /// Convex decomposition of `z` over molecules, as `(x, y, weight)`.
    pub z_support: Vec<(usize, usize, f64)>,
}

impl BpbResult {
    pub fn score(&self) -> f64 {
        self.dist_f.max(self.dist_w)
    }
}

/// Minimal `||f - g||` over `{g : <g, pin> = 1, ||g|| <= 1}`, by linear
/// programming with lazily generated pair constraints. Returns the optimum
/// distance (recomputed exhaustively) and the minimizer.
fn nearest_unit_g(f: &LipFunctional, pin: &FreeVector) -> Result<(f64, LipFunctional)> {
    let space = &f.space;
    let n = space.len();
    let base = space.base;

    let mut active_ball: Vec<(usize, usize)> = Vec::new();
    let mut active_prox: Vec<(usize, usize)> = Vec::new();
    let mut in_ball = vec![vec![false; n]; n];
    let mut in_prox = vec![vec![false; n]; n];
    for p in 0..n {
        if p != base {
            let (a, b) = (p.min(base), p.max(base));
            active_ball.push((a, b));
            in_ball[a][b] = true;
            active_prox.push((a, b));
            in_prox[a][b] = true;
        }
    }

    for round in 0..300 {
        let mut lp = LpBuilder::new();
        let s = lp.add_var(1.0);
        let gvar: Vec<Option<usize>> = (0..n)
            .map(|p| (p != base).then(|| lp.add_free_var(0.0)))
            .collect();

        let mut pin_terms = Vec::new();
        for (k, &c) in pin.coeffs.iter().enumerate() {
            if c != 0.0 {
                let p = pin.point_of_slot(k);
                pin_terms.push((gvar[p].unwrap(), c));
            }
        }
        lp.constraint(&pin_terms, Relation::Eq, 1.0);

        let pair_terms = |a: usize, b: usize| -> Vec<(usize, f64)> {
            let mut t = Vec::with_capacity(2);
            if let Some(v) = gvar[a] {
                t.push((v, 1.0));
            }
            if let Some(v) = gvar[b] {
                t.push((v, -1.0));
            }
            t
        };
        for &(a, b) in &active_ball {
            let rho = space.rho(a, b);
            let t = pair_terms(a, b);
            lp.constraint(&t, Relation::Le, rho);
            let neg: Vec<_> = t.iter().map(|&(v, c)| (v, -c)).collect();
            lp.constraint(&neg, Relation::Le, rho);
        }
        for &(a, b) in &active_prox {
            let rho = space.rho(a, b);
            let df = f.values[a] - f.values[b];
            // |(f - g)(a) - (f - g)(b)| <= s * rho
            let mut t = pair_terms(a, b);
            t.push((s, -rho));
            lp.constraint(&t, Relation::Le, df);
            let mut t2 = pair_terms(a, b);
            t2.push((s, rho));
            lp.constraint(&t2, Relation::Ge, df);
        }

        let sol = lp.solve()?;
        let mut values = vec![0.0; n];
        for p in 0..n {
            if let Some(v) = gvar[p] {
                values[p] = sol.x[v];
            }
        }
        let sval = sol.x[s];

        // Drop generated constraints that went slack; the base-pair seed
        // stays to keep the program bounded. Pruning stops after the early
        // rounds so the generation loop is monotone and must terminate.
        if round < 20 {
            active_ball.retain(|&(a, b)| {
                let keep = a == base
                    || b == base
                    || space.rho(a, b) - (values[a] - values[b]).abs() < 1e-6;
                if !keep {
                    in_ball[a][b] = false;
                }
                keep
            });
            active_prox.retain(|&(a, b)| {
                let dd = ((f.values[a] - values[a]) - (f.values[b] - values[b])).abs();
                let keep = a == base || b == base || sval * space.rho(a, b) - dd < 1e-6;
                if !keep {
                    in_prox[a][b] = false;
                }
                keep
            });
        }

        let mut new_ball: Vec<(f64, usize, usize)> = Vec::new();
        let mut new_prox: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let rho = space.rho(a, b);
                let gd = (values[a] - values[b]).abs();
                if !in_ball[a][b] && gd - rho > 1e-10 {
                    new_ball.push((gd - rho, a, b));
                }
                let dd = ((f.values[a] - values[a]) - (f.values[b] - values[b])).abs();
                if !in_prox[a][b] && dd - sval * rho > 1e-10 {
                    new_prox.push((dd - sval * rho, a, b));
                }
            }
        }
        if new_ball.is_empty() && new_prox.is_empty() {
            let g = LipFunctional::new(Arc::clone(space), values)?;
            let (dist, _) = lip_norm(&f.sub(&g));
            return Ok((dist, g));
        }
        new_ball.sort_by(|u, v| v.0.total_cmp(&u.0));
        new_prox.sort_by(|u, v| v.0.total_cmp(&u.0));
        for &(_, a, b) in new_ball.iter().take(100) {
            active_ball.push((a, b));
            in_ball[a][b] = true;
        }
        for &(_, a, b) in new_prox.iter().take(100) {
            active_prox.push((a, b));
            in_prox[a][b] = true;
        }
    }
    Err(LipkitError::Numerical(
        "corrector LP constraint generation did not converge".into(),
    ))
}

/// Free-space norm of a vector, computed on the subspace spanned by its
/// support and the base point (an isometric copy), so that sparse vectors in
/// large spaces stay cheap.
pub fn free_norm_sparse(v: &FreeVector) -> Result<f64> {
    let mut idx = v.support(1e-14);
    idx.push(v.space.base);
    idx.sort_unstable();
    idx.dedup();
    if idx.len() <= 1 {
        return Ok(0.0);
    }
    let sub = v.space.subspace(&idx)?;
    let mut coeffs = vec![0.0; sub.len() - 1];
    for (si, &gi) in idx.iter().enumerate() {
        if let Some(k) = FreeVector::slot_of_point(&sub, si) {
            let gk = FreeVector::slot_of_point(&v.space, gi).unwrap();
            coeffs[k] = v.coeffs[gk];
        }
    }
    let vz = FreeVector::new(sub, coeffs)?;
    Ok(freespace::free_norm(&vz)?.0)
}

/// One alternating-minimization half-step: with `g` fixed, minimize
/// `free_norm(w - z)` over `{z in conv W restricted to `universe` :
/// <g, z> = 1}`, jointly with the transport certificate of the distance.
fn z_step(
    g: &LipFunctional,
    w: &FreeVector,
    universe: &[usize],
) -> Result<(FreeVector, Vec<(usize, usize, f64)>, f64)> {
    let space = &g.space;
    let base = space.base;
    let m = universe.len();

    let mut lp = LpBuilder::new();
    // molecule weights over ordered pairs of the universe
    let mut mol_vars: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                mol_vars.push((universe[i], universe[j], lp.add_var(0.0)));
            }
        }
    }
    // transport arcs carrying w - z
    let mut arc = vec![vec![usize::MAX; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                arc[i][j] = lp.add_var(space.rho(universe[i], universe[j]));
            }
        }
    }

    let sum_terms: Vec<(usize, f64)> = mol_vars.iter().map(|&(_, _, v)| (v, 1.0)).collect();
    lp.constraint(&sum_terms, Relation::Le, 1.0);

    let pair_terms: Vec<(usize, f64)> = mol_vars
        .iter()
        .map(|&(a, b, v)| (v, g.quotient(a, b)))
        .collect();
    lp.constraint(&pair_terms, Relation::Eq, 1.0);

    for (i, &p) in universe.iter().enumerate() {
        if p == base {
            continue;
        }
        let k = FreeVector::slot_of_point(space, p).unwrap();
        let mut terms = Vec::new();
        for &(a, b, v) in &mol_vars {
            let rho = space.rho(a, b);
            if a == p {
                terms.push((v, 1.0 / rho));
            } else if b == p {
                terms.push((v, -1.0 / rho));
            }
        }
        for j in 0..m {
            if j != i {
                terms.push((arc[i][j], 1.0));
                terms.push((arc[j][i], -1.0));
            }
        }
        lp.constraint(&terms, Relation::Eq, w.coeffs[k]);
    }

    let sol = lp.solve()?;
    let mut z = FreeVector::zero(Arc::clone(space));
    let mut support = Vec::new();
    for &(a, b, v) in &mol_vars {
        let lam = sol.x[v];
        if lam > 1e-9 {
            let rho = space.rho(a, b);
            if let Some(k) = FreeVector::slot_of_point(space, a) {
                z.coeffs[k] += lam / rho;
            }
            if let Some(k) = FreeVector::slot_of_point(space, b) {
                z.coeffs[k] -= lam / rho;
            }
            support.push((a, b, lam));
        }
    }
    Ok((z, support, sol.objective))
}

fn universe_for(
    f: &LipFunctional,
    g: &LipFunctional,
    w: &FreeVector,
    z: &FreeVector,
) -> Vec<usize> {
    let space = &f.space;
    let n = space.len();
    if n <= 14 {
        return (0..n).collect();
    }
    let mut u = vec![space.base];
    u.extend(w.support(1e-14));
    u.extend(z.support(1e-12));
    let (_, gp) = lip_norm(g);
    u.push(gp.0);
    u.push(gp.1);
    // endpoints of the best molecules against f
    let mut quots: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                quots.push((f.quotient(a, b), a, b));
            }
        }
    }
    quots.sort_by(|x, y| y.0.total_cmp(&x.0));
    for &(_, a, b) in quots.iter().take(10) {
        u.push(a);
        u.push(b);
    }
    u.sort_unstable();
    u.dedup();
    u
}

fn assemble(
    f: &LipFunctional,
    w: &FreeVector,
    bound: f64,
    g: LipFunctional,
    z: FreeVector,
    z_support: Vec<(usize, usize, f64)>,
) -> Result<BpbResult> {
    let (dist_f, _) = lip_norm(&f.sub(&g));
    let dist_w = free_norm_sparse(&w.sub(&z))?;
    let pv = pairing(&g, &z);
    let achieved = dist_f <= bound + ACHIEVE_TOL && dist_w <= bound + ACHIEVE_TOL;
    Ok(BpbResult { g, z, pairing: pv, dist_f, dist_w, bound, achieved, z_support })
}

fn candidate_molecules(f: &LipFunctional, w: &Molecule) -> Vec<(usize, usize)> {
    let space = &f.space;
    let n = space.len();
    let mut cands: Vec<(usize, usize)> = Vec::new();
    if n <= 12 {
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    cands.push((a, b));
                }
            }
        }
    } else {
        let mut quots: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    quots.push((f.quotient(a, b), a, b));
                }
            }
        }
        quots.sort_by(|x, y| y.0.total_cmp(&x.0));
        cands.extend(quots.iter().take(40).map(|&(_, a, b)| (a, b)));
        if !cands.contains(&(w.x, w.y)) {
            cands.push((w.x, w.y));
        }
    }
    // put the original molecule first so ties resolve toward it
    if let Some(pos) = cands.iter().position(|&p| p == (w.x, w.y)) {
        cands.swap(0, pos);
    }
    cands
}

fn check_inputs(f: &LipFunctional, w: &Molecule, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(LipkitError::Range(format!("delta must lie in (0, 2), got {delta}")));
    }
    let (fnorm, _) = lip_norm(f);
    if (fnorm - 1.0).abs() > 1e-6 {
        return Err(LipkitError::Precondition(format!(
            "f must have unit Lipschitz norm, got {fnorm}"
        )));
    }
    let p0 = pairing(f, &w.vector);
    if p0 <= 1.0 - delta {
        return Err(LipkitError::Precondition(format!(
            "pairing <f, w> = {p0} is not above 1 - delta = {}",
            1.0 - delta
        )));
    }
    Ok(p0)
}

/// Staged corrector search.
pub fn bpb_correct(f: &LipFunctional, w: &Molecule, delta: f64) -> Result<BpbResult> {
    let p0 = check_inputs(f, w, delta)?;
    let bound = (2.0 * delta).sqrt();
    let space = &f.space;

    if p0 >= 1.0 - 1e-12 {
        return Ok(BpbResult {
            g: f.clone(),
            z: w.vector.clone(),
            pairing: p0,
            dist_f: 0.0,
            dist_w: 0.0,
            bound,
            achieved: true,
            z_support: vec![(w.x, w.y, 1.0)],
        });
    }

    // stage 1: molecule-anchored exact LPs
    let mut best: Option<BpbResult> = None;
    let mut starts: Vec<BpbResult> = Vec::new();
    for (a, b) in candidate_molecules(f, w) {
        let cand = FreeVector::molecule(Arc::clone(space), a, b)?;
        let Ok(dist_w0) = free_norm_sparse(&w.vector.sub(&cand.vector)) else {
            continue;
        };
        if dist_w0 > bound + ACHIEVE_TOL {
            continue;
        }
        // a numerically ill-conditioned anchor is dropped, not fatal
        let Ok((_, g)) = nearest_unit_g(f, &cand.vector) else {
            continue;
        };
        let res = assemble(f, &w.vector, bound, g, cand.vector, vec![(a, b, 1.0)])?;
        if best.as_ref().map_or(true, |x| res.score() < x.score()) {
            best = Some(res.clone());
        }
        starts.push(res);
        starts.sort_by(|x, y| x.score().total_cmp(&y.score()));
        starts.truncate(3);
    }
    if let Some(res) = &best {
        if res.achieved {
            return Ok(res.clone());
        }
    }

    // stage 2: alternating minimization from the best starts
    if starts.is_empty() {
        // no molecule within the bound; start from the original anchor
        let (_, g) = nearest_unit_g(f, &w.vector)?;
        starts.push(assemble(f, &w.vector, bound, g, w.vector.clone(), vec![(w.x, w.y, 1.0)])?);
    }
    for start in starts {
        let mut g = start.g.clone();
        let mut z = start.z.clone();
        let mut prev = start.score();
        for _ in 0..50 {
            let universe = universe_for(f, &g, &w.vector, &z);
            let Ok((z2, support, dist_w)) = z_step(&g, &w.vector, &universe) else {
                break;
            };
            let Ok((_, g2)) = nearest_unit_g(f, &z2) else {
                break;
            };
            let res = assemble(f, &w.vector, bound, g2.clone(), z2.clone(), support)?;
            let score = res.score().max(dist_w.min(res.score()));
            if best.as_ref().map_or(true, |x| res.score() < x.score()) {
                best = Some(res);
            }
            if prev - score < 1e-10 {
                break;
            }
            prev = score;
            g = g2;
            z = z2;
        }
    }
    best.ok_or_else(|| LipkitError::Numerical("corrector search produced no candidate".into()))
}

/// Dense oracle: every molecule anchor, each followed by alternating
/// refinement to a fixed point. Restricted to small spaces.
pub fn bpb_correct_oracle(f: &LipFunctional, w: &Molecule, delta: f64) -> Result<BpbResult> {
    let space = &f.space;
    if space.len() > 5 {
        return Err(LipkitError::SizeGuard(format!(
            "oracle is limited to 5 points, space has {}",
            space.len()
        )));
    }
    let p0 = check_inputs(f, w, delta)?;
    let bound = (2.0 * delta).sqrt();
    if p0 >= 1.0 - 1e-12 {
        return bpb_correct(f, w, delta);
    }
    let mut best: Option<BpbResult> = None;
    for mol in molecules(space) {
        let (_, g0) = nearest_unit_g(f, &mol.vector)?;
        let anchored = assemble(
            f,
            &w.vector,
            bound,
            g0,
            mol.vector.clone(),
            vec![(mol.x, mol.y, 1.0)],
        )?;
        let mut g = anchored.g.clone();
        let mut prev = anchored.score();
        if best.as_ref().map_or(true, |x| anchored.score() < x.score()) {
            best = Some(anchored);
        }
        let universe: Vec<usize> = (0..space.len()).collect();
        for _ in 0..50 {
            let (z2, support, _) = z_step(&g, &w.vector, &universe)?;
            let (_, g2) = nearest_unit_g(f, &z2)?;
            let res = assemble(f, &w.vector, bound, g2.clone(), z2, support)?;
            let score = res.score();
            if best.as_ref().map_or(true, |x| score < x.score()) {
                best = Some(res);
            }
            if prev - score < 1e-10 {
                break;
            }
            prev = score;
            g = g2;
        }
    }
    best.ok_or_else(|| LipkitError::Numerical("oracle produced no candidate".into()))
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub n: usize,
    pub alpha: f64,
    pub delta_n: f64,
    /// Endpoints of the selected molecule `u_n`.
    pub v: usize,
    pub w: usize,
    pub h_quotient: f64,
    pub g_quotient: f64,
}

#[derive(Debug, Clone)]
pub struct LipBpbTrace {
    pub g: LipFunctional,
    pub nu: f64,
    pub bound: f64,
    pub entries: Vec<TraceEntry>,
}

/// Preliminary directional algorithm: correct `f` against the molecule of
/// `(x, y)`, then walk the support of the corrected `z` with the blended
/// selection rule, recording both quotients per level.
///
/// Guarantees, auditable from the trace: every `h`-quotient exceeds
/// `1 - sqrt(2 delta)`, and the `g`-quotients approach 1 at rate `1/n`.
pub fn lip_bpb_preliminary(
    f: &LipFunctional,
    pair: (usize, usize),
    h: &LipFunctional,
    delta: f64,
    n_max: usize,
) -> Result<LipBpbTrace> {
    let space = &f.space;
    let (x, y) = pair;
    let hq = h.quotient(x, y);
    if (hq - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!(
            "h must have quotient 1 at the pair, got {hq}"
        )));
    }
    let (hn, _) = lip_norm(h);
    if (hn - 1.0).abs() > 1e-9 {
        return Err(LipkitError::Precondition(format!("h must have unit norm, got {hn}")));
    }
    let w = FreeVector::molecule(Arc::clone(space), x, y)?;
    let res = bpb_correct(f, &w, delta)?;
    if !res.achieved {
        return Err(LipkitError::Numerical(format!(
            "corrector missed the bound: dist_f = {}, dist_w = {}, bound = {}",
            res.dist_f, res.dist_w, res.bound
        )));
    }
    let nu = res.dist_w + 1e-9;
    let support: Vec<(usize, usize, f64)> = res
        .z_support
        .iter()
        .copied()
        .filter(|&(_, _, lam)| lam > 1e-9)
        .collect();
    if support.is_empty() {
        return Err(LipkitError::Numerical("corrected z has empty support".into()));
    }

    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let alpha = 1.0 / (n as f64 + 1.0);
        let delta_n = 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0));
        let mut pick = support[0];
        let mut pick_val = f64::NEG_INFINITY;
        for &(a, b, lam) in &support {
            let val = alpha * h.quotient(a, b) + (1.0 - alpha) * res.g.quotient(a, b);
            if val > pick_val {
                pick_val = val;
                pick = (a, b, lam);
            }
        }
        entries.push(TraceEntry {
            n,
            alpha,
            delta_n,
            v: pick.0,
            w: pick.1,
            h_quotient: h.quotient(pick.0, pick.1),
            g_quotient: res.g.quotient(pick.0, pick.1),
        });
    }
    Ok(LipBpbTrace { g: res.g, nu, bound: res.bound, entries })
}

/// One-step corrector used by [`refine_to_local_attainment`]: maps
/// `(f_n, (x_n, y_n))` to `(f_{n+1}, (x_{n+1}, y_{n+1}))` subject to the
/// per-iteration contract audited by the loop.
pub trait CorrectorStep {
    /// Attainment-defect threshold associated with a scale.
    fn delta(&self, eps: f64) -> f64;
    fn apply(
        &mut self,
        f: &LipFunctional,
        pair: (usize, usize),
        eps_n: f64,
    ) -> Result<(LipFunctional, (usize, usize))>;
}

/// A step that never moves; valid exactly when the quotient is already 1.
pub struct IdentityStep;

impl CorrectorStep for IdentityStep {
    fn delta(&self, _eps: f64) -> f64 {
        1e-9
    }
    fn apply(
        &mut self,
        f: &LipFunctional,
        pair: (usize, usize),
        _eps_n: f64,
    ) -> Result<(LipFunctional, (usize, usize))> {
        Ok((f.clone(), pair))
    }
}

#[derive(Debug, Clone)]
pub struct RefineAudit {
    pub n: usize,
    pub eps_n: f64,
    /// (a) `||f_n - f_{n+1}||`
    pub step_distance: f64,
    /// (b) drift of the normalized pair direction
    pub direction_drift: f64,
    /// (c) quotient of the new functional at the new pair
    pub quotient: f64,
    pub delta_next: f64,
    /// (d) distance from the new left endpoint to the previous segment
    pub localization: f64,
    /// (e) separation of the new pair
    pub separation: f64,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub g: LipFunctional,
    pub pair: (usize, usize),
    /// Coordinates of the limiting point.
    pub v: Vec<f64>,
    /// Normalized limiting direction.
    pub u: Vec<f64>,
    pub converged: bool,
    pub audits: Vec<RefineAudit>,
}

fn coord_of(space: &FinitePointedMetricSpace, i: usize) -> Result<Vec<f64>> {
    space
        .coord(i)
        .map(|c| c.to_vec())
        .ok_or_else(|| LipkitError::Structural("refinement needs ambient coordinates".into()))
}

fn direction(model: &NormedSpaceModel, a: &[f64], b: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = model.norm(&d);
    d.iter().map(|x| x / n).collect()
}

/// Distance from `p` to the segment `[a, b]`, by ternary search on the
/// (convex) parametrized distance.
pub fn dist_to_segment(model: &NormedSpaceModel, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let at = |t: f64| -> f64 {
        let q: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| (1.0 - t) * x + t * y)
            .collect();
        model.dist(p, &q)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    at(0.5 * (lo + hi)).min(at(0.0)).min(at(1.0))
}

/// Iterative refinement toward local directional attainment: applies the
/// step with the halving scale schedule, audits the five per-iteration
/// properties, and stops at a fixed point or the separation floor.
pub fn refine_to_local_attainment(
    model: &NormedSpaceModel,
    f: &LipFunctional,
    pair: (usize, usize),
    eps: f64,
    step: &mut dyn CorrectorStep,
    max_iters: usize,
) -> Result<RefineOutcome> {
    let space = Arc::clone(&f.space);
    let d0 = step.delta(eps);
    let q0 = f.quotient(pair.0, pair.1);
    if q0 <= 1.0 - d0 {
        return Err(LipkitError::Precondition(format!(
            "initial quotient {q0} does not exceed 1 - delta(eps) = {}",
            1.0 - d0
        )));
    }

    let mut cur_f = f.clone();
    let mut cur_pair = pair;
    let mut audits = Vec::new();
    let mut converged = false;

    for n in 1..=max_iters {
        let eps_n = eps / 2f64.powi(n as i32 + 2);
        if space.rho(cur_pair.0, cur_pair.1) < PAIR_FLOOR {
            converged = true;
            break;
        }
        let (nf, np) = step.apply(&cur_f, cur_pair, eps_n)?;
        let moved = lip_norm(&cur_f.sub(&nf)).0;
        if np == cur_pair && moved == 0.0 {
            converged = true;
            break;
        }

        let (a0, b0) = (coord_of(&space, cur_pair.0)?, coord_of(&space, cur_pair.1)?);
        let (a1, b1) = (coord_of(&space, np.0)?, coord_of(&space, np.1)?);
        let drift = {
            let u0 = direction(model, &a0, &b0);
            let u1 = direction(model, &a1, &b1);
            let d: Vec<f64> = u0.iter().zip(&u1).map(|(x, y)| x - y).collect();
            model.norm(&d)
        };
        let quotient = nf.quotient(np.0, np.1);
        let delta_next = step.delta(eps_n / 2.0);
        let localization = dist_to_segment(model, &a1, &a0, &b0);
        let separation = space.rho(np.0, np.1);

        let fail = |p: char, detail: String| LipkitError::ContractViolation { property: p, detail };
        if moved >= eps_n {
            return Err(fail('a', format!("step moved {moved}, allowed {eps_n}")));
        }
        if drift >= eps_n {
            return Err(fail('b', format!("direction drifted {drift}, allowed {eps_n}")));
        }
        if quotient <= 1.0 - delta_next - 1e-9 {
            return Err(fail('c', format!("quotient {quotient} below 1 - {delta_next}")));
        }
        if localization >= eps_n {
            return Err(fail('d', format!("localization {localization}, allowed {eps_n}")));
        }
        if separation >= eps_n {
            return Err(fail('e', format!("separation {separation}, allowed {eps_n}")));
        }
        audits.push(RefineAudit {
            n,
            eps_n,
            step_distance: moved,
            direction_drift: drift,
            quotient,
            delta_next,
            localization,
            separation,
        });
        cur_f = nf;
        cur_pair = np;
    }

    let v = coord_of(&space, cur_pair.0)?;
    let u = direction(model, &v, &coord_of(&space, cur_pair.1)?);
    Ok(RefineOutcome { g: cur_f, pair: cur_pair, v, u, converged, audits })
}

/// The shipped corrector step: selects a short grid pair near the current
/// segment with the same direction, then pins the corrected functional to it
/// by the anchored LP. Returns its input unchanged when the current pair
/// already attains and no shorter candidate exists.
pub struct PinnedPairStep {
    pub model: NormedSpaceModel,
}

impl CorrectorStep for PinnedPairStep {
    fn delta(&self, eps: f64) -> f64 {
        (0.5 * eps * eps).max(1e-7)
    }

    fn apply(
        &mut self,
        f: &LipFunctional,
        pair: (usize, usize),
        eps_n: f64,
    ) -> Result<(LipFunctional, (usize, usize))> {
        let space = &f.space;
        let n = space.len();
        let (x, y) = pair;
        let a0 = coord_of(space, x)?;
        let b0 = coord_of(space, y)?;
        let dir0 = direction(&self.model, &a0, &b0);

        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let sep = space.rho(a, b);
                if sep <= 0.0 || sep >= 0.9 * eps_n {
                    continue;
                }
                let ca = coord_of(space, a)?;
                let cb = coord_of(space, b)?;
                if dist_to_segment(&self.model, &ca, &a0, &b0) >= 0.5 * eps_n
                    || dist_to_segment(&self.model, &cb, &a0, &b0) >= 0.5 * eps_n
                {
                    continue;
                }
                let dir1 = direction(&self.model, &ca, &cb);
                let drift: Vec<f64> = dir0.iter().zip(&dir1).map(|(u, v)| u - v).collect();
                if self.model.norm(&drift) >= 0.5 * eps_n {
                    continue;
                }
                cands.push((f.quotient(a, b), a, b));
            }
        }
        if cands.is_empty() {
            if f.quotient(x, y) >= 1.0 - 1e-9 {
                // grid exhausted below this scale; report a fixed point
                return Ok((f.clone(), pair));
            }
            return Err(LipkitError::GridTooCoarse(format!(
                "no pair with separation below {} near the segment",
                0.9 * eps_n
            )));
        }
        cands.sort_by(|u, v| v.0.total_cmp(&u.0));
        for &(q, a, b) in cands.iter().take(5) {
            if q >= 1.0 - 1e-9 {
                return Ok((f.clone(), (a, b)));
            }
            let mol = FreeVector::molecule(Arc::clone(space), a, b)?;
            let (dist, g) = nearest_unit_g(f, &mol.vector)?;
            if dist < eps_n {
                return Ok((g, (a, b)));
            }
        }
        Err(LipkitError::Numerical(format!(
            "no candidate pair admits a correction smaller than {eps_n}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freespace::supporting_functional;
    use crate::metric::FinitePointedMetricSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_space(rng: &mut ChaCha8Rng, n: usize) -> Arc<FinitePointedMetricSpace> {
        let model = NormedSpaceModel::lp(2, 2.0).unwrap();
        loop {
            let labeled: Vec<(String, Vec<f64>)> = (0..n)
                .map(|i| {
                    (
                        format!("p{i}"),
                        vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    )
                })
                .collect();
            if let Ok(s) = FinitePointedMetricSpace::from_coords(&model, labeled, 0) {
                if min_rho(&s) > 0.2 {
                    return s;
                }
            }
        }
    }

    fn min_rho(space: &FinitePointedMetricSpace) -> f64 {
        let n = space.len();
        let mut m = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    m = m.min(space.rho(a, b));
                }
            }
        }
        m
    }

    /// A unit functional perturbed from one attaining at the molecule, with
    /// the perturbation sized so the pairing stays above `1 - delta` and an
    /// in-bound witness exists.
    fn perturbed_fixture(
        rng: &mut ChaCha8Rng,
        space: &Arc<FinitePointedMetricSpace>,
        w: &Molecule,
        delta: f64,
    ) -> LipFunctional {
        let g0 = supporting_functional(&w.vector).unwrap();
        let amp = 0.1 * delta * min_rho(space);
        let values: Vec<f64> = g0
            .values
            .iter()
            .map(|v| v + amp * rng.gen_range(-1.0..1.0))
            .collect();
        let f = LipFunctional::from_unnormalized(Arc::clone(space), values).unwrap();
        let (norm, _) = lip_norm(&f);
        f.scale(1.0 / norm)
    }

    #[test]
    fn trivial_identity_case() {
        let space = FinitePointedMetricSpace::unit_segment(5).unwrap();
        let values: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let f = LipFunctional::new(Arc::clone(&space), values).unwrap();
        let w = FreeVector::molecule(Arc::clone(&space), 4, 0).unwrap();
        let res = bpb_correct(&f, &w, 0.1).unwrap();
        assert_eq!(res.dist_f, 0.0);
        assert_eq!(res.dist_w, 0.0);
        assert!(res.achieved);
        assert!((res.pairing - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bound_value() {
        let space = FinitePointedMetricSpace::unit_segment(3).unwrap();
        let values = vec![0.0, 0.5, 1.0];
        let f = LipFunctional::new(Arc::clone(&space), values).unwrap();
        let w = FreeVector::molecule(Arc::clone(&space), 2, 0).unwrap();
        let res = bpb_correct(&f, &w, 0.02).unwrap();
        assert!((res.bound - 0.2).abs() < 1e-12);
    }

    #[test]
    fn precondition_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let space = random_space(&mut rng, 5);
        let w = FreeVector::molecule(Arc::clone(&space), 1, 2).unwrap();
        // a functional attaining on some other pair pairs weakly with w
        let other = FreeVector::molecule(Arc::clone(&space), 3, 4).unwrap();
        let f = supporting_functional(&other.vector).unwrap();
        if pairing(&f, &w.vector) <= 1.0 - 0.01 {
            assert!(matches!(
                bpb_correct(&f, &w, 0.01),
                Err(LipkitError::Precondition(_))
            ));
        }
        assert!(matches!(
            bpb_correct(&f, &w, -0.5),
            Err(LipkitError::Range(_))
        ));
    }

    #[test]
    fn random_instances_achieve_and_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2025);
        let deltas = [0.005, 0.02, 0.08];
        for trial in 0..9 {
            let delta = deltas[trial % 3];
            let space = random_space(&mut rng, 5);
            let w = FreeVector::molecule(Arc::clone(&space), 1, 3).unwrap();
            let f = perturbed_fixture(&mut rng, &space, &w, delta);
            if pairing(&f, &w.vector) <= 1.0 - delta {
                continue;
            }
            let staged = bpb_correct(&f, &w, delta).unwrap();
            assert!(staged.achieved, "trial {trial}: score {}", staged.score());
            assert!((staged.pairing - 1.0).abs() < 1e-9);
            assert!((lip_norm(&staged.g).0 - 1.0).abs() < 1e-9);
            assert!((free_norm_sparse(&staged.z).unwrap() - 1.0).abs() < 1e-9);
            let oracle = bpb_correct_oracle(&f, &w, delta).unwrap();
            assert!(
                staged.score() <= oracle.score() + 1e-7,
                "trial {trial}: staged {} vs oracle {}",
                staged.score(),
                oracle.score()
            );
        }
    }

    #[test]
    fn sign_flip_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let space = random_space(&mut rng, 5);
        let w = FreeVector::molecule(Arc::clone(&space), 2, 4).unwrap();
        let f = perturbed_fixture(&mut rng, &space, &w, 0.05);
        let res = bpb_correct(&f, &w, 0.05).unwrap();
        let w_flip = FreeVector::molecule(Arc::clone(&space), 4, 2).unwrap();
        let res_flip = bpb_correct(&f.scale(-1.0), &w_flip, 0.05).unwrap();
        assert!((res.dist_f - res_flip.dist_f).abs() < 1e-6);
        assert!((res.dist_w - res_flip.dist_w).abs() < 1e-6);
        assert!((res_flip.pairing - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bound_monotone_in_delta() {
        assert!((2.0 * 0.01f64).sqrt() <= (2.0 * 0.05f64).sqrt());
    }

    #[test]
    fn preliminary_trivial_attaining() {
        let space = FinitePointedMetricSpace::unit_segment(5).unwrap();
        let values: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let f = LipFunctional::new(Arc::clone(&space), values).unwrap();
        let trace = lip_bpb_preliminary(&f, (4, 0), &f.clone(), 0.05, 10).unwrap();
        assert_eq!(trace.entries.len(), 10);
        for e in &trace.entries {
            assert!((e.h_quotient - 1.0).abs() < 1e-9);
            assert!((e.g_quotient - 1.0).abs() < 1e-9);
            assert_eq!((e.v, e.w), (4, 0));
        }
    }

    #[test]
    fn preliminary_h_quotient_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let delta = 0.02;
        let space = random_space(&mut rng, 5);
        let w = FreeVector::molecule(Arc::clone(&space), 1, 3).unwrap();
        let f = perturbed_fixture(&mut rng, &space, &w, delta);
        // h: unit norm with quotient exactly 1 at the pair
        let h = supporting_functional(&w.vector).unwrap();
        let trace = lip_bpb_preliminary(&f, (1, 3), &h, delta, 20).unwrap();
        for e in &trace.entries {
            assert!(e.h_quotient > 1.0 - trace.bound, "h-quotient {}", e.h_quotient);
            assert!(e.h_quotient > 0.8);
        }
    }

    #[test]
    fn preliminary_g_quotient_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let delta = 0.02;
        let space = random_space(&mut rng, 5);
        let w = FreeVector::molecule(Arc::clone(&space), 2, 3).unwrap();
        let f = perturbed_fixture(&mut rng, &space, &w, delta);
        let h = supporting_functional(&w.vector).unwrap();
        let trace = lip_bpb_preliminary(&f, (2, 3), &h, delta, 20).unwrap();
        let last = trace.entries.last().unwrap();
        assert_eq!(last.n, 20);
        let alpha = last.alpha;
        let lower = 1.0 - last.delta_n - (alpha / (1.0 - alpha)) * trace.bound;
        assert!(last.g_quotient >= lower - 1e-3, "{} < {}", last.g_quotient, lower);
        assert!(last.g_quotient >= 0.9);
    }

    #[test]
    fn refine_identity_single_iteration() {
        let model = NormedSpaceModel::lp(1, 2.0).unwrap();
        let space = FinitePointedMetricSpace::unit_segment(9).unwrap();
        let values: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let f = LipFunctional::new(Arc::clone(&space), values).unwrap();
        let mut step = IdentityStep;
        let out = refine_to_local_attainment(&model, &f, (8, 0), 0.3, &mut step, 30).unwrap();
        assert!(out.converged);
        assert!(out.audits.is_empty());
        assert_eq!(out.pair, (8, 0));
        assert!((out.v[0] - 1.0).abs() < 1e-12);
        assert!((out.u[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refine_pinned_step_on_segment() {
        let model = NormedSpaceModel::lp(1, 2.0).unwrap();
        let space = FinitePointedMetricSpace::unit_segment(129).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 0.4;
        let values: Vec<f64> = (0..129)
            .map(|i| i as f64 / 128.0 + 2e-5 * rng.gen_range(-1.0..1.0))
            .collect();
        let f0 = LipFunctional::from_unnormalized(Arc::clone(&space), values).unwrap();
        let f = f0.scale(1.0 / lip_norm(&f0).0);
        let mut step = PinnedPairStep { model: model.clone() };
        assert!(f.quotient(128, 0) > 1.0 - step.delta(eps));
        let out = refine_to_local_attainment(&model, &f, (128, 0), eps, &mut step, 30).unwrap();
        assert!(out.converged);
        assert!(!out.audits.is_empty());
        // the total functional move stays below eps / 4
        let total: f64 = out.audits.iter().map(|a| a.step_distance).sum();
        assert!(total < eps / 4.0, "total move {total}");
        assert!(lip_norm(&f.sub(&out.g)).0 < eps / 4.0);
        // limit pair attains and sits on the original segment
        assert!(out.g.quotient(out.pair.0, out.pair.1) > 1.0 - 1e-6);
        assert!((out.u[0] - 1.0).abs() < 1e-9);
        // separations dominated by the schedule
        for a in &out.audits {
            assert!(a.separation < a.eps_n);
        }
    }
}

