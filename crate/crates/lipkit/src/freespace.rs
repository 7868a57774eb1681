//! The Lipschitz-free space of a finite pointed metric space.
//!
//! Elements are coefficient vectors over the non-base points (the base
//! evaluation functional is eliminated by the vanishing-at-0 normalization).
//! The norm is computed two independent ways: a dual linear program over the
//! unit ball of the Lipschitz functionals, and a primal transport program over
//! molecule representations. Agreement of the two is a checkable duality
//! certificate.

use std::sync::Arc;

use crate::error::{LipkitError, Result};
use crate::lipfunc::{lip_norm, LipFunctional};
use crate::lp::{LpBuilder, Relation};
use crate::metric::FinitePointedMetricSpace;

/// Duality tolerance between the dual and primal norm computations.
pub const DUALITY_TOL: f64 = 1e-7;

/// An element of the free space, as a coefficient per non-base point.
#[derive(Debug, Clone)]
pub struct FreeVector {
    pub space: Arc<FinitePointedMetricSpace>,
    /// One coefficient per point index except the base point, in increasing
    /// point-index order.
    pub coeffs: Vec<f64>,
}

/// A normalized elementary difference `(x^ - y^) / rho(x, y)`.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub x: usize,
    pub y: usize,
    pub vector: FreeVector,
}

impl FreeVector {
    pub fn zero(space: Arc<FinitePointedMetricSpace>) -> Self {
        let n = space.len() - 1;
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn new(space: Arc<FinitePointedMetricSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.len() - 1 {
            return Err(LipkitError::Structural("coefficient vector must have dimension |E| - 1".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LipkitError::Structural("non-finite coefficient".into()));
        }
        Ok(Self { space, coeffs })
    }

    /// Point index of slot `k` (slots skip the base point).
    pub fn point_of_slot(&self, k: usize) -> usize {
        if k < self.space.base {
            k
        } else {
            k + 1
        }
    }

    pub fn slot_of_point(space: &FinitePointedMetricSpace, p: usize) -> Option<usize> {
        if p == space.base {
            None
        } else if p < space.base {
            Some(p)
        } else {
            Some(p - 1)
        }
    }

    /// The evaluation functional `x^` of a point.
    pub fn evaluation(space: Arc<FinitePointedMetricSpace>, x: usize) -> Self {
        let mut v = Self::zero(space);
        if let Some(k) = Self::slot_of_point(&v.space, x) {
            v.coeffs[k] = 1.0;
        }
        v
    }

    pub fn molecule(space: Arc<FinitePointedMetricSpace>, x: usize, y: usize) -> Result<Molecule> {
        if x == y {
            return Err(LipkitError::Structural("molecule endpoints must differ".into()));
        }
        let rho = space.rho(x, y);
        let mut v = Self::zero(Arc::clone(&space));
        if let Some(k) = Self::slot_of_point(&space, x) {
            v.coeffs[k] += 1.0 / rho;
        }
        if let Some(k) = Self::slot_of_point(&space, y) {
            v.coeffs[k] -= 1.0 / rho;
        }
        Ok(Molecule { x, y, vector: v })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.abs() <= tol)
    }

    /// Point indices with nonzero coefficient.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&k| self.coeffs[k].abs() > tol)
            .map(|k| self.point_of_slot(k))
            .collect()
    }
}

/// The dual pairing `<f, z> = sum_p z_p f(p)`.
pub fn pairing(f: &LipFunctional, z: &FreeVector) -> f64 {
    z.coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * f.values[z.point_of_slot(k)])
        .sum()
}

/// All `|E| (|E| - 1)` ordered molecules, lexicographic by `(x, y)`.
pub fn molecules(space: &Arc<FinitePointedMetricSpace>) -> Vec<Molecule> {
    let n = space.len();
    let mut out = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        for y in 0..n {
            if x != y {
                out.push(FreeVector::molecule(Arc::clone(space), x, y).unwrap());
            }
        }
    }
    out
}

/// Free-space norm by the dual linear program: maximize `<g, z>` over the
/// unit ball of the Lipschitz functionals. Returns the norm and an optimal
/// dual functional with Lipschitz norm at most 1.
///
/// Pair constraints are generated lazily so that large grids stay tractable;
/// the returned functional is feasible for every pair, generated or not.
pub fn free_norm(z: &FreeVector) -> Result<(f64, LipFunctional)> {
    let space = &z.space;
    let n = space.len();
    if z.is_zero(0.0) {
        return Ok((0.0, LipFunctional::zero(Arc::clone(space))));
    }

    // Working constraint set, as unordered pairs; pairs against the base
    // bound every variable, so the initial LP is bounded.
    let mut active: Vec<(usize, usize)> = (0..n).filter(|&p| p != space.base).map(|p| (p.min(space.base), p.max(space.base))).collect();
    let mut in_active = vec![vec![false; n]; n];
    for &(a, b) in &active {
        in_active[a][b] = true;
    }

    for _round in 0..200 {
        let mut lp = LpBuilder::new();
        let vars: Vec<Option<usize>> = (0..n)
            .map(|p| {
                if p == space.base {
                    None
                } else {
                    let k = FreeVector::slot_of_point(space, p).unwrap();
                    Some(lp.add_free_var(-z.coeffs[k]))
                }
            })
            .collect();
        for &(a, b) in &active {
            let rho = space.rho(a, b);
            let mut terms = Vec::new();
            if let Some(va) = vars[a] {
                terms.push((va, 1.0));
            }
            if let Some(vb) = vars[b] {
                terms.push((vb, -1.0));
            }
            lp.constraint(&terms, Relation::Le, rho);
            let neg: Vec<(usize, f64)> = terms.iter().map(|&(v, c)| (v, -c)).collect();
            lp.constraint(&neg, Relation::Le, rho);
        }
        let sol = lp.solve()?;
        let mut values = vec![0.0; n];
        for p in 0..n {
            if let Some(v) = vars[p] {
                values[p] = sol.x[v];
            }
        }
        let g = LipFunctional::new(Arc::clone(space), values)?;

        // Collect the worst violated pair constraints.
        let mut violated: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if in_active[a][b] {
                    continue;
                }
                let excess = (g.values[a] - g.values[b]).abs() - space.rho(a, b);
                if excess > 1e-10 {
                    violated.push((excess, a, b));
                }
            }
        }
        if violated.is_empty() {
            return Ok((-sol.objective, g));
        }
        violated.sort_by(|u, v| v.0.total_cmp(&u.0));
        for &(_, a, b) in violated.iter().take(100) {
            active.push((a, b));
            in_active[a][b] = true;
        }
    }
    Err(LipkitError::Numerical("free_norm constraint generation did not converge".into()))
}

/// Independent primal oracle: minimal transport cost over molecule
/// representations of `z`. Returns the cost and the transport arcs
/// `(x, y, weight)` with positive weight.
pub fn free_norm_primal(z: &FreeVector) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let space = &z.space;
    let n = space.len();
    let mut lp = LpBuilder::new();
    // one nonnegative flow variable per ordered arc
    let mut arc_var = vec![vec![usize::MAX; n]; n];
    let mut arcs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                arc_var[x][y] = lp.add_var(space.rho(x, y));
                arcs.push((x, y));
            }
        }
    }
    for p in 0..n {
        if p == space.base {
            continue;
        }
        let k = FreeVector::slot_of_point(space, p).unwrap();
        let mut terms = Vec::with_capacity(2 * (n - 1));
        for q in 0..n {
            if q == p {
                continue;
            }
            terms.push((arc_var[p][q], 1.0));
            terms.push((arc_var[q][p], -1.0));
        }
        lp.constraint(&terms, Relation::Eq, z.coeffs[k]);
    }
    let sol = lp.solve()?;
    let transport: Vec<(usize, usize, f64)> = arcs
        .iter()
        .filter_map(|&(x, y)| {
            let w = sol.x[arc_var[x][y]];
            (w > 1e-12).then_some((x, y, w))
        })
        .collect();
    Ok((sol.objective, transport))
}

/// Convex decomposition of a unit-ball element over molecules: weights
/// `lambda >= 0` with `sum lambda <= 1` and `sum lambda_w w = z`, aligned with
/// the ordering of [`molecules`].
pub fn decompose_in_conv_w(z: &FreeVector) -> Result<Vec<f64>> {
    let (norm, _) = free_norm(z)?;
    if norm > 1.0 + 1e-9 {
        return Err(LipkitError::Precondition(format!(
            "decomposition needs free_norm(z) <= 1, got {norm}"
        )));
    }
    // Tiny overshoot within tolerance is rescaled onto the ball.
    let z = if norm > 1.0 { z.scale(1.0 / norm) } else { z.clone() };

    let space = &z.space;
    let n = space.len();
    let mols = molecules(space);
    let mut lp = LpBuilder::new();
    let lambda: Vec<usize> = mols.iter().map(|_| lp.add_var(1.0)).collect();
    for p in 0..n {
        if p == space.base {
            continue;
        }
        let k = FreeVector::slot_of_point(space, p).unwrap();
        let terms: Vec<(usize, f64)> = mols
            .iter()
            .enumerate()
            .filter_map(|(mi, m)| {
                let c = m.vector.coeffs[k];
                (c != 0.0).then_some((lambda[mi], c))
            })
            .collect();
        lp.constraint(&terms, Relation::Eq, z.coeffs[k]);
    }
    let sum_terms: Vec<(usize, f64)> = lambda.iter().map(|&v| (v, 1.0)).collect();
    lp.constraint(&sum_terms, Relation::Le, 1.0);
    let sol = lp.solve()?;
    Ok(lambda.iter().map(|&v| sol.x[v]).collect())
}

/// Hahn-Banach witness: a functional of unit Lipschitz norm whose pairing
/// with `z` equals `free_norm(z)`.
pub fn supporting_functional(z: &FreeVector) -> Result<LipFunctional> {
    let (norm, g) = free_norm(z)?;
    if norm <= 0.0 {
        return Err(LipkitError::Precondition("supporting functional of the zero vector".into()));
    }
    let (gl, _) = lip_norm(&g);
    if gl <= 0.0 {
        return Err(LipkitError::Numerical("dual optimum is degenerate".into()));
    }
    Ok(g.scale(1.0 / gl))
}
