//! Dense two-phase simplex with Bland's rule.
//!
//! Every linear program in this crate is small (at most a few hundred
//! variables and constraints), so a dense tableau method is enough.
//! Bland's rule keeps the pivot sequence deterministic and cycle-free,
//! which is what makes LP-produced certificates reproducible.

use crate::error::{LipkitError, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy)]
enum VarKind {
    NonNeg,
    Free,
}

/// Builder for `minimize c.x` subject to linear constraints.
///
/// Variables are nonnegative unless added with [`LpBuilder::add_free_var`];
/// free variables are split into positive and negative parts internally.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    kinds: Vec<VarKind>,
    objective: Vec<f64>,
    constraints: Vec<(Vec<(usize, f64)>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, obj: f64) -> usize {
        self.kinds.push(VarKind::NonNeg);
        self.objective.push(obj);
        self.kinds.len() - 1
    }

    pub fn add_free_var(&mut self, obj: f64) -> usize {
        self.kinds.push(VarKind::Free);
        self.objective.push(obj);
        self.kinds.len() - 1
    }

    pub fn constraint(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) {
        self.constraints.push((terms.to_vec(), rel, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    /// Solve the program. Returns the optimal objective and a value per
    /// user-visible variable.
    pub fn solve(&self) -> Result<LpSolution> {
        // Map user vars to standard-form columns.
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.kinds.len());
        let mut ncols = 0usize;
        for kind in &self.kinds {
            match kind {
                VarKind::NonNeg => {
                    col_of.push((ncols, None));
                    ncols += 1;
                }
                VarKind::Free => {
                    col_of.push((ncols, Some(ncols + 1)));
                    ncols += 2;
                }
            }
        }

        let m = self.constraints.len();
        // slack/surplus columns
        let slack_base = ncols;
        let nslack = self
            .constraints
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Eq)
            .count();
        let total = ncols + nslack;

        let mut a = vec![vec![0.0f64; total]; m];
        let mut b = vec![0.0f64; m];
        let mut c = vec![0.0f64; total];
        for (u, &obj) in self.objective.iter().enumerate() {
            let (p, n) = col_of[u];
            c[p] = obj;
            if let Some(n) = n {
                c[n] = -obj;
            }
        }

        let mut slack_idx = slack_base;
        let mut slack_col: Vec<Option<(usize, f64)>> = vec![None; m];
        for (i, (terms, rel, rhs)) in self.constraints.iter().enumerate() {
            for &(u, coef) in terms {
                let (p, n) = col_of[u];
                a[i][p] += coef;
                if let Some(n) = n {
                    a[i][n] -= coef;
                }
            }
            b[i] = *rhs;
            match rel {
                Relation::Le => {
                    a[i][slack_idx] = 1.0;
                    slack_col[i] = Some((slack_idx, 1.0));
                    slack_idx += 1;
                }
                Relation::Ge => {
                    a[i][slack_idx] = -1.0;
                    slack_col[i] = Some((slack_idx, -1.0));
                    slack_idx += 1;
                }
                Relation::Eq => {}
            }
        }

        // Normalize rhs signs.
        for i in 0..m {
            if b[i] < 0.0 {
                b[i] = -b[i];
                for j in 0..total {
                    a[i][j] = -a[i][j];
                }
                if let Some((j, s)) = slack_col[i] {
                    slack_col[i] = Some((j, -s));
                }
            }
        }

        // Phase 1: artificial variable per row unless the slack can serve as
        // the initial basic variable (coefficient +1 after normalization).
        let mut tab: Vec<Vec<f64>> = a;
        let mut basis = vec![usize::MAX; m];
        let mut art_cols: Vec<usize> = Vec::new();
        let mut width = total;
        for i in 0..m {
            if let Some((j, s)) = slack_col[i] {
                if s > 0.0 {
                    basis[i] = j;
                    continue;
                }
            }
            art_cols.push(width);
            basis[i] = width;
            width += 1;
        }
        for (i, row) in tab.iter_mut().enumerate() {
            row.resize(width, 0.0);
            if basis[i] >= total {
                row[basis[i]] = 1.0;
            }
        }

        // Canonicalize: each basic column must be an identity column.
        for i in 0..m {
            let j = basis[i];
            let piv = tab[i][j];
            if (piv - 1.0).abs() > EPS {
                let inv = 1.0 / piv;
                for v in tab[i].iter_mut() {
                    *v *= inv;
                }
                b[i] *= inv;
            }
        }

        if !art_cols.is_empty() {
            let mut c1 = vec![0.0f64; width];
            for &j in &art_cols {
                c1[j] = 1.0;
            }
            let obj = simplex(&mut tab, &mut b, &mut basis, &c1, width)?;
            if obj > 1e-7 {
                return Err(LipkitError::Numerical(format!(
                    "LP infeasible (phase-1 objective {obj:.3e})"
                )));
            }
            // Drive remaining artificials out of the basis; rows where that is
            // impossible are redundant and get dropped.
            let mut keep = vec![true; tab.len()];
            for i in 0..tab.len() {
                if basis[i] >= total {
                    if let Some(j) = (0..total).find(|&j| tab[i][j].abs() > 1e-7) {
                        pivot(&mut tab, &mut b, &mut basis, i, j);
                    } else {
                        keep[i] = false;
                    }
                }
            }
            let mut i = 0;
            tab.retain(|_| {
                i += 1;
                keep[i - 1]
            });
            i = 0;
            b.retain(|_| {
                i += 1;
                keep[i - 1]
            });
            i = 0;
            basis.retain(|_| {
                i += 1;
                keep[i - 1]
            });
        }

        // Phase 2 on the original objective; artificial columns can no longer
        // be basic and are excluded from entering (`active = total`).
        let mut c2 = vec![0.0f64; width];
        c2[..total].copy_from_slice(&c[..total]);
        let objective = simplex(&mut tab, &mut b, &mut basis, &c2, total)?;

        let mut xs = vec![0.0f64; width];
        for (i, &bi) in basis.iter().enumerate() {
            xs[bi] = b[i];
        }
        let x = col_of
            .iter()
            .map(|&(p, n)| xs[p] - n.map_or(0.0, |n| xs[n]))
            .collect();
        Ok(LpSolution { objective, x })
    }
}

/// Run Bland-rule simplex iterations in place. Only columns `< active` may
/// enter the basis. Returns the optimal objective value.
fn simplex(
    tab: &mut [Vec<f64>],
    b: &mut [f64],
    basis: &mut [usize],
    c: &[f64],
    active: usize,
) -> Result<f64> {
    let m = tab.len();
    let iter_cap = 50_000 + 200 * (m + active);
    // Columns set aside because their tiny negative reduced cost is noise
    // (no ratio row exists); cleared after every genuine pivot.
    let mut parked = vec![false; active];
    // Dantzig's rule for speed; after a degenerate stall, fall back to
    // Bland's rule, which cannot cycle.
    let mut stall = 0usize;
    const STALL_LIMIT: usize = 60;
    let mut in_basis = vec![false; active];
    for &bi in basis.iter() {
        if bi < active {
            in_basis[bi] = true;
        }
    }
    for _ in 0..iter_cap {
        // Reduced costs from scratch; the problems are small enough.
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..active {
            if parked[j] || in_basis[j] {
                continue;
            }
            let mut r = c[j];
            for i in 0..m {
                let cb = c[basis[i]];
                if cb != 0.0 && cb.is_finite() {
                    r -= cb * tab[i][j];
                }
            }
            if r < -EPS {
                if stall >= STALL_LIMIT {
                    entering = Some((j, r));
                    break; // Bland: smallest eligible index
                }
                if entering.map_or(true, |(_, er)| r < er) {
                    entering = Some((j, r));
                }
            }
        }
        let Some((j, rj)) = entering else {
            let mut obj = 0.0;
            for i in 0..m {
                let cb = c[basis[i]];
                if cb != 0.0 && cb.is_finite() {
                    obj += cb * b[i];
                }
            }
            return Ok(obj);
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][j] > EPS {
                let ratio = b[i] / tab[i][j];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS
                            || (ratio < lr + EPS && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, ratio)) = leaving else {
            if rj > -1e-6 {
                // Split free variables produce zero-cost rays whose reduced
                // cost drifts slightly negative; not a real unbounded ray.
                parked[j] = true;
                continue;
            }
            return Err(LipkitError::Numerical(
                "LP unbounded below".to_string(),
            ));
        };
        let old = basis[i];
        if old < active {
            in_basis[old] = false;
        }
        pivot(tab, b, basis, i, j);
        in_basis[j] = true;
        parked.iter_mut().for_each(|p| *p = false);
        if ratio > EPS {
            stall = 0;
        } else {
            stall += 1;
        }
    }
    Err(LipkitError::Numerical(
        "simplex iteration cap exceeded".to_string(),
    ))
}

fn pivot(tab: &mut [Vec<f64>], b: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let piv = tab[row][col];
    let inv = 1.0 / piv;
    for v in tab[row].iter_mut() {
        *v *= inv;
    }
    b[row] *= inv;
    let prow = tab[row].clone();
    let pb = b[row];
    for i in 0..tab.len() {
        if i == row {
            continue;
        }
        let factor = tab[i][col];
        if factor.abs() > 0.0 {
            for (v, pv) in tab[i].iter_mut().zip(prow.iter()) {
                *v -= factor * pv;
            }
            b[i] -= factor * pb;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_max_as_min() {
        // maximize x + y s.t. x + 2y <= 4, 3x + y <= 6  =>  min -(x+y)
        let mut lp = LpBuilder::new();
        let x = lp.add_var(-1.0);
        let y = lp.add_var(-1.0);
        lp.constraint(&[(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        lp.constraint(&[(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - (-2.8)).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.x[x] - 1.6).abs() < 1e-9);
        assert!((sol.x[y] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn equality_and_free_vars() {
        // min |t| style: min s s.t. s >= t, s >= -t, t = -3
        let mut lp = LpBuilder::new();
        let s = lp.add_var(1.0);
        let t = lp.add_free_var(0.0);
        lp.constraint(&[(s, 1.0), (t, -1.0)], Relation::Ge, 0.0);
        lp.constraint(&[(s, 1.0), (t, 1.0)], Relation::Ge, 0.0);
        lp.constraint(&[(t, 1.0)], Relation::Eq, -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.x[t] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LpBuilder::new();
        let x = lp.add_var(1.0);
        lp.constraint(&[(x, 1.0)], Relation::Ge, 2.0);
        lp.constraint(&[(x, 1.0)], Relation::Le, 1.0);
        assert!(lp.solve().is_err());
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LpBuilder::new();
        let x = lp.add_free_var(-1.0);
        lp.constraint(&[(x, 1.0)], Relation::Ge, 0.0);
        assert!(lp.solve().is_err());
    }

    #[test]
    fn degenerate_runs_to_optimum() {
        // degenerate vertex at origin; Bland must not cycle
        let mut lp = LpBuilder::new();
        let x = lp.add_var(-0.75);
        let y = lp.add_var(150.0);
        let z = lp.add_var(-0.02);
        let w = lp.add_var(6.0);
        lp.constraint(&[(x, 0.25), (y, -60.0), (z, -0.04), (w, 9.0)], Relation::Le, 0.0);
        lp.constraint(&[(x, 0.5), (y, -90.0), (z, -0.02), (w, 3.0)], Relation::Le, 0.0);
        lp.constraint(&[(z, 1.0)], Relation::Le, 1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - (-0.05)).abs() < 1e-9, "{}", sol.objective);
    }
}
