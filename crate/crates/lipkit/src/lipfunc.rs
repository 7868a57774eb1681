//! Lipschitz functionals on finite pointed metric spaces: norm, strong
//! attainment certificates, McShane extension and composition.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LipkitError, Result};
use crate::metric::FinitePointedMetricSpace;

/// A real function on a finite pointed metric space vanishing at the base
/// point, identified with its value vector.
#[derive(Debug, Clone)]
pub struct LipFunctional {
    pub space: Arc<FinitePointedMetricSpace>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttainmentMode {
    Strong,
    Directional,
    LocalDirectional,
}

/// Witness data for norm attainment. For [`AttainmentMode::Strong`] the pairs
/// are all pairs whose quotient reaches the norm within the stated tolerance;
/// for the directional modes the pairs are indexed by refinement level with
/// quotients nondecreasing toward the norm.
#[derive(Debug, Clone, Serialize)]
pub struct AttainmentCertificate {
    pub mode: AttainmentMode,
    /// `(x, y, quotient)` with `quotient = (f(x) - f(y)) / rho(x, y)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub direction: Option<Vec<f64>>,
    pub localization: Option<Vec<f64>>,
    pub norm_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtendVariant {
    Inf,
    Sup,
    Midpoint,
}

impl LipFunctional {
    pub fn new(space: Arc<FinitePointedMetricSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(LipkitError::Structural("value vector length does not match the space".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LipkitError::Structural("non-finite value".into()));
        }
        if values[space.base].abs() > 0.0 {
            return Err(LipkitError::Structural("value at the base point must be 0".into()));
        }
        Ok(Self { space, values })
    }

    /// Builds the functional from arbitrary values by subtracting the base
    /// value, restoring the vanishing-at-0 normalization.
    pub fn from_unnormalized(space: Arc<FinitePointedMetricSpace>, values: Vec<f64>) -> Result<Self> {
        let b = values[space.base];
        let shifted = values.into_iter().map(|v| v - b).collect();
        Self::new(space, shifted)
    }

    pub fn zero(space: Arc<FinitePointedMetricSpace>) -> Self {
        let n = space.len();
        Self { space, values: vec![0.0; n] }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Signed difference quotient `(f(x) - f(y)) / rho(x, y)`.
    pub fn quotient(&self, x: usize, y: usize) -> f64 {
        (self.values[x] - self.values[y]) / self.space.rho(x, y)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Linear blend `(1 - t) * self + t * other`.
    pub fn blend(&self, other: &Self, t: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        }
    }
}

/// The Lipschitz norm as the maximum signed difference quotient over ordered
/// pairs, with the attaining pair (lexicographic tie-break).
pub fn lip_norm(f: &LipFunctional) -> (f64, (usize, usize)) {
    let n = f.space.len();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let q = f.quotient(x, y);
            if q > best {
                best = q;
                arg = (x, y);
            }
        }
    }
    (best.max(0.0), arg)
}

/// Strong-attainment certificate: all pairs whose signed quotient reaches
/// `lip_norm(f) - tol`.
pub fn strongly_attains(f: &LipFunctional, tol: f64) -> Result<AttainmentCertificate> {
    let (norm, _) = lip_norm(f);
    if norm <= 0.0 {
        return Err(LipkitError::DegenerateFunctional);
    }
    let n = f.space.len();
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let q = f.quotient(x, y);
            if q >= norm - tol {
                pairs.push((x, y, q));
            }
        }
    }
    Ok(AttainmentCertificate {
        mode: AttainmentMode::Strong,
        pairs,
        direction: None,
        localization: None,
        norm_value: norm,
    })
}

/// McShane extension of `f_sub` (given on a subspace, matched by label) to the
/// whole of `target`, preserving the Lipschitz constant.
///
/// Points of the subspace keep their exact values in every variant.
pub fn mcshane_extend(
    f_sub: &LipFunctional,
    target: &Arc<FinitePointedMetricSpace>,
    variant: ExtendVariant,
) -> Result<LipFunctional> {
    let sub = &f_sub.space;
    let mapping: Vec<usize> = sub
        .points
        .iter()
        .map(|p| {
            target.index_of_label(&p.label).ok_or_else(|| {
                LipkitError::Structural(format!("subspace point {} not found in target", p.label))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if mapping[sub.base] != target.base {
        return Err(LipkitError::Structural("subspace base point must map to the target base point".into()));
    }
    for a in 0..sub.len() {
        for b in 0..sub.len() {
            if (sub.rho(a, b) - target.rho(mapping[a], mapping[b])).abs() > 1e-9 {
                return Err(LipkitError::Structural("subspace distances disagree with the target".into()));
            }
        }
    }

    let (lip, _) = lip_norm(f_sub);
    let mut values = vec![0.0f64; target.len()];
    let mut fixed = vec![false; target.len()];
    for (si, &ti) in mapping.iter().enumerate() {
        values[ti] = f_sub.values[si];
        fixed[ti] = true;
    }
    for t in 0..target.len() {
        if fixed[t] {
            continue;
        }
        let inf_env = mapping
            .iter()
            .enumerate()
            .map(|(si, &ti)| f_sub.values[si] + lip * target.rho(t, ti))
            .fold(f64::INFINITY, f64::min);
        let sup_env = mapping
            .iter()
            .enumerate()
            .map(|(si, &ti)| f_sub.values[si] - lip * target.rho(t, ti))
            .fold(f64::NEG_INFINITY, f64::max);
        values[t] = match variant {
            ExtendVariant::Inf => inf_env,
            ExtendVariant::Sup => sup_env,
            ExtendVariant::Midpoint => 0.5 * (inf_env + sup_env),
        };
    }
    LipFunctional::new(Arc::clone(target), values)
}

/// Residual of the betweenness interpolation identity
/// `f(z) = (rho(z,y) f(x) + rho(x,z) f(y)) / rho(x,y)`.
pub fn interpolation_residual(
    f: &LipFunctional,
    triple: &crate::metric::BetweennessTriple,
    tol: f64,
) -> Result<f64> {
    if triple.defect > tol {
        return Err(LipkitError::Precondition(format!(
            "betweenness defect {} above tolerance {}",
            triple.defect, tol
        )));
    }
    let (x, z, y) = (triple.x, triple.z, triple.y);
    let s = &f.space;
    let expected = (s.rho(z, y) * f.values[x] + s.rho(x, z) * f.values[y]) / s.rho(x, y);
    Ok((f.values[z] - expected).abs())
}

/// Result of composing a `[0,1]`-grid functional with a retraction `u`.
#[derive(Debug, Clone)]
pub struct Composition {
    pub h: LipFunctional,
    /// Largest distance by which a value of `u` had to be snapped to the grid.
    pub max_snap: f64,
    /// Whether `lip_norm(h) <= lip_norm(g) * lip_norm(u)` held (within 1e-9).
    pub norm_bound_ok: bool,
}

/// `h = g o u` where `g` lives on a 1-D grid of `[0, 1]` and `u` maps the
/// space into `[0, 1]`; values of `u` are snapped to the nearest grid point.
pub fn compose_with_retraction(g: &LipFunctional, u: &LipFunctional) -> Result<Composition> {
    let grid = &g.space;
    let grid_ts: Vec<f64> = (0..grid.len())
        .map(|i| {
            grid.coord(i)
                .and_then(|c| c.first().copied())
                .ok_or_else(|| LipkitError::Structural("g must live on a coordinate grid of [0, 1]".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_snap = 0.0f64;
    let mut values = Vec::with_capacity(u.space.len());
    for &t in &u.values {
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(LipkitError::Range(format!("retraction value {t} outside [0, 1]")));
        }
        let (gi, snap) = grid_ts
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, (s - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        max_snap = max_snap.max(snap);
        values.push(g.values[gi]);
    }
    let h = LipFunctional::from_unnormalized(Arc::clone(&u.space), values)?;
    let bound = lip_norm(g).0 * lip_norm(u).0;
    let norm_bound_ok = lip_norm(&h).0 <= bound + 1e-9;
    Ok(Composition { h, max_snap, norm_bound_ok })
}

/// Searches for a pair witnessing locality at scale `eps`: `rho(t1, t2) < eps`
/// with difference quotient above `lip_norm(f) - eps`. Absence signals that
/// the discretization is too coarse at this scale.
pub fn locality_witness(f: &LipFunctional, eps: f64) -> Result<Option<(usize, usize)>> {
    let (norm, _) = lip_norm(f);
    if norm <= 0.0 {
        return Err(LipkitError::DegenerateFunctional);
    }
    let n = f.space.len();
    for t1 in 0..n {
        for t2 in 0..n {
            if t1 == t2 {
                continue;
            }
            if f.space.rho(t1, t2) < eps && (f.values[t2] - f.values[t1]) / f.space.rho(t1, t2) > norm - eps {
                return Ok(Some((t1, t2)));
            }
        }
    }
    Ok(None)
}

/// JSON wire format: `{ "space": <inline>, "values": [...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalFile {
    pub space: crate::metric::SpaceFile,
    pub values: Vec<f64>,
}

impl FunctionalFile {
    pub fn into_functional(self, model: Option<&crate::model::NormedSpaceModel>) -> Result<LipFunctional> {
        let space = self.space.into_space(model)?;
        LipFunctional::new(space, self.values)
    }
}
