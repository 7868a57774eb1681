//! Finite-dimensional normed-space models.
//!
//! A model supplies the ambient norm used by grid builders and, for smooth
//! `l_p` norms, the duality map onto the unit dual sphere.

use serde::{Deserialize, Serialize};

use crate::error::{LipkitError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    /// `l_p` norm with `p >= 1`; uniformly convex iff `p` is in `(1, inf)`.
    Lp { p: f64 },
    /// max-norm
    LInf,
    /// `p(x) = max_i |<a_i, x>|` for a finite generating set; modulus 0.
    Polyhedral { generators: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormedSpaceModel {
    pub dim: usize,
    pub kind: NormKind,
}

impl NormedSpaceModel {
    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(LipkitError::Range(format!("l_p exponent must be >= 1, got {p}")));
        }
        Ok(Self { dim, kind: NormKind::Lp { p } })
    }

    pub fn linf(dim: usize) -> Self {
        Self { dim, kind: NormKind::LInf }
    }

    pub fn polyhedral(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        if generators.is_empty() || generators.iter().any(|g| g.len() != dim) {
            return Err(LipkitError::Structural(
                "polyhedral norm needs at least one generator of matching dimension".into(),
            ));
        }
        Ok(Self { dim, kind: NormKind::Polyhedral { generators } })
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        match &self.kind {
            NormKind::Lp { p } => {
                if *p == 1.0 {
                    v.iter().map(|x| x.abs()).sum()
                } else if *p == 2.0 {
                    v.iter().map(|x| x * x).sum::<f64>().sqrt()
                } else {
                    // scale out the largest entry for stability
                    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    if m == 0.0 {
                        return 0.0;
                    }
                    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(*p)).sum();
                    m * s.powf(1.0 / *p)
                }
            }
            NormKind::LInf => v.iter().fold(0.0f64, |a, x| a.max(x.abs())),
            NormKind::Polyhedral { generators } => generators
                .iter()
                .map(|g| dot(g, v).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }

    pub fn is_uniformly_convex(&self) -> bool {
        matches!(&self.kind, NormKind::Lp { p } if *p > 1.0)
    }

    /// Supporting functional at a unit vector `u` for an `l_p` norm with
    /// `p` in `(1, inf)`: coordinates `sign(u_i) |u_i|^{p-1}` rescaled to unit
    /// dual (`l_q`) norm, so that `x*(u) = 1`.
    pub fn duality_map(&self, u: &[f64]) -> Result<Vec<f64>> {
        let NormKind::Lp { p } = &self.kind else {
            return Err(LipkitError::NotUniformlyConvex(
                "duality map is only defined for l_p models with p in (1, inf)".into(),
            ));
        };
        let p = *p;
        if p <= 1.0 {
            return Err(LipkitError::NotUniformlyConvex(
                "duality map needs p > 1".into(),
            ));
        }
        let n = self.norm(u);
        if n < 1e-12 {
            return Err(LipkitError::Precondition("duality map of the zero vector".into()));
        }
        if (n - 1.0).abs() > 1e-9 {
            return Err(LipkitError::Precondition(format!(
                "duality map input must be a unit vector, norm = {n}"
            )));
        }
        let raw: Vec<f64> = u
            .iter()
            .map(|x| x.signum() * x.abs().powf(p - 1.0))
            .collect();
        let q = p / (p - 1.0);
        let dual = NormedSpaceModel::lp(self.dim, q)?;
        let qn = dual.norm(&raw);
        Ok(raw.iter().map(|x| x / qn).collect())
    }

    /// Dual-norm value of a linear functional given by coordinates.
    pub fn dual_norm(&self, a: &[f64]) -> Result<f64> {
        match &self.kind {
            NormKind::Lp { p } => {
                let q = if *p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
                if q.is_infinite() {
                    Ok(a.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                } else {
                    Ok(NormedSpaceModel::lp(self.dim, q)?.norm(a))
                }
            }
            NormKind::LInf => Ok(a.iter().map(|x| x.abs()).sum()),
            NormKind::Polyhedral { .. } => Err(LipkitError::Structural(
                "dual norm of a polyhedral model is not provided".into(),
            )),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_norms() {
        let m2 = NormedSpaceModel::lp(2, 2.0).unwrap();
        assert!((m2.norm(&[3.0, 4.0]) - 5.0).abs() < 1e-12);
        let minf = NormedSpaceModel::linf(2);
        assert!((minf.norm(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
        let m4 = NormedSpaceModel::lp(2, 4.0).unwrap();
        assert!((m4.norm(&[1.0, 1.0]) - 2f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn norm_axioms_spot_check() {
        let m = NormedSpaceModel::lp(3, 4.0).unwrap();
        let x = [0.3, -1.2, 0.7];
        let y = [-0.5, 0.1, 2.0];
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        assert!(m.norm(&s) <= m.norm(&x) + m.norm(&y) + 1e-9);
        let scaled: Vec<f64> = x.iter().map(|a| -2.5 * a).collect();
        assert!((m.norm(&scaled) - 2.5 * m.norm(&x)).abs() < 1e-9);
    }

    #[test]
    fn duality_map_self_dual_l2() {
        let m = NormedSpaceModel::lp(2, 2.0).unwrap();
        let u = [0.6, 0.8];
        let xs = m.duality_map(&u).unwrap();
        assert!((xs[0] - 0.6).abs() < 1e-12);
        assert!((xs[1] - 0.8).abs() < 1e-12);
        assert!((dot(&xs, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duality_map_l4_diagonal() {
        let m = NormedSpaceModel::lp(2, 4.0).unwrap();
        let c = 2f64.powf(-0.25);
        let u = [c, c];
        let xs = m.duality_map(&u).unwrap();
        assert!((dot(&xs, &u) - 1.0).abs() < 1e-9);
        // Hoelder equality: unit dual norm
        assert!((m.dual_norm(&xs).unwrap() - 1.0).abs() < 1e-9);
        assert!((xs[0] - xs[1]).abs() < 1e-12);
    }

    #[test]
    fn duality_map_coordinate_vector() {
        let m = NormedSpaceModel::lp(3, 4.0).unwrap();
        let xs = m.duality_map(&[1.0, 0.0, 0.0]).unwrap();
        assert!((xs[0] - 1.0).abs() < 1e-12);
        assert!(xs[1].abs() < 1e-12 && xs[2].abs() < 1e-12);
    }
}
