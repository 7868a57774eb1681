//! Finite pointed metric spaces: validation, betweenness structure, and grid
//! builders that sample normed spaces.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LipkitError, Result};
use crate::model::NormedSpaceModel;

/// Coordinate dedup threshold for grid builders (sup-norm on coordinates).
pub const DEDUP_TOL: f64 = 1e-12;
/// Metric-axiom tolerance for computed grids.
pub const METRIC_TOL: f64 = 1e-12;
/// Default betweenness tolerance.
pub const BETWEENNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    pub coord: Option<Vec<f64>>,
}

/// A finite metric space with a distinguished base point `0`.
///
/// Immutable after construction; distances are stored as a full symmetric
/// matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinitePointedMetricSpace {
    pub points: Vec<Point>,
    pub base: usize,
    pub dist: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetricViolation {
    NonzeroDiagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    NonPositive { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize, defect: f64 },
}

/// Checks the metric axioms; an empty report means the matrix is a metric
/// within `tol`.
pub fn validate_metric(dist: &[Vec<f64>], tol: f64) -> Result<Vec<MetricViolation>> {
    let n = dist.len();
    if dist.iter().any(|row| row.len() != n) {
        return Err(LipkitError::Structural("distance matrix is not square".into()));
    }
    let mut report = Vec::new();
    for i in 0..n {
        if dist[i][i].abs() > tol {
            report.push(MetricViolation::NonzeroDiagonal { i });
        }
        for j in (i + 1)..n {
            if (dist[i][j] - dist[j][i]).abs() > tol {
                report.push(MetricViolation::Asymmetric { i, j });
            }
            if dist[i][j] <= tol {
                report.push(MetricViolation::NonPositive { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let defect = dist[i][k] - dist[i][j] - dist[j][k];
                if defect > tol {
                    report.push(MetricViolation::Triangle { i, j, k, defect });
                }
            }
        }
    }
    Ok(report)
}

impl FinitePointedMetricSpace {
    pub fn new(points: Vec<Point>, base: usize, dist: Vec<Vec<f64>>, tol: f64) -> Result<Arc<Self>> {
        if points.len() < 2 {
            return Err(LipkitError::Structural("a pointed metric space needs at least two points".into()));
        }
        if base >= points.len() || dist.len() != points.len() {
            return Err(LipkitError::Structural("base index or matrix size out of range".into()));
        }
        let report = validate_metric(&dist, tol)?;
        if !report.is_empty() {
            return Err(LipkitError::Structural(format!(
                "metric axioms violated: {:?} (and {} more)",
                report[0],
                report.len() - 1
            )));
        }
        Ok(Arc::new(Self { points, base, dist }))
    }

    /// Builds the space from labeled ambient coordinates under a model norm.
    pub fn from_coords(
        model: &NormedSpaceModel,
        labeled: Vec<(String, Vec<f64>)>,
        base: usize,
    ) -> Result<Arc<Self>> {
        let n = labeled.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = model.dist(&labeled[i].1, &labeled[j].1);
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        let points = labeled
            .into_iter()
            .map(|(label, coord)| Point { label, coord: Some(coord) })
            .collect();
        Self::new(points, base, dist, METRIC_TOL)
    }

    /// Equally spaced points of `[0, 1]` as a 1-D space with base `0`.
    pub fn unit_segment(n_points: usize) -> Result<Arc<Self>> {
        let model = NormedSpaceModel::lp(1, 2.0)?;
        let labeled = (0..n_points)
            .map(|i| {
                let t = i as f64 / (n_points - 1) as f64;
                (format!("t{i}"), vec![t])
            })
            .collect();
        Self::from_coords(&model, labeled, 0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn coord(&self, i: usize) -> Option<&[f64]> {
        self.points[i].coord.as_deref()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p.label == label)
    }

    /// Restriction to a subset of point indices (must contain the base point).
    pub fn subspace(self: &Arc<Self>, indices: &[usize]) -> Result<Arc<Self>> {
        if !indices.contains(&self.base) {
            return Err(LipkitError::Structural("subspace must contain the base point".into()));
        }
        let points: Vec<Point> = indices.iter().map(|&i| self.points[i].clone()).collect();
        let base = indices.iter().position(|&i| i == self.base).unwrap();
        let n = indices.len();
        let mut dist = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                dist[a][b] = self.dist[indices[a]][indices[b]];
            }
        }
        Self::new(points, base, dist, METRIC_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetweennessTriple {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    pub defect: f64,
}

/// All triples `(x, z, y)` with `x < y`, `z` distinct from both, whose
/// betweenness defect `|rho(x,y) - rho(x,z) - rho(z,y)|` is at most `tol`.
/// Sorted by `(x, y, z)`.
pub fn betweenness_triples(space: &FinitePointedMetricSpace, tol: f64) -> Vec<BetweennessTriple> {
    let n = space.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let defect = (space.rho(x, y) - space.rho(x, z) - space.rho(z, y)).abs();
                if defect <= tol {
                    out.push(BetweennessTriple { x, z, y, defect });
                }
            }
        }
    }
    out.sort_by_key(|t| (t.x, t.y, t.z));
    out
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum GridNode {
    Origin,
    Anchor(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub anchor: usize,
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub anchors: Vec<Vec<f64>>,
    /// Segments to sample; when empty, one segment from the origin to each
    /// anchor is used.
    pub segments: Vec<(GridNode, GridNode)>,
    pub segment_resolution: usize,
    pub neighborhoods: Vec<NeighborhoodSpec>,
    pub seed: u64,
}

impl GridSpec {
    pub fn segments_to_anchors(anchors: Vec<Vec<f64>>, resolution: usize, seed: u64) -> Self {
        Self { anchors, segments: Vec::new(), segment_resolution: resolution, neighborhoods: Vec::new(), seed }
    }
}

/// Samples a normed space into a finite pointed metric space containing the
/// origin, the anchors, equally spaced segment points and deterministic
/// pseudo-random neighborhood points. Duplicates within [`DEDUP_TOL`] are
/// merged; distances come from the model norm.
pub fn build_grid_space(model: &NormedSpaceModel, spec: &GridSpec) -> Result<Arc<FinitePointedMetricSpace>> {
    let dim = model.dim;
    if spec.anchors.iter().any(|a| a.len() != dim) {
        return Err(LipkitError::Structural("anchor dimension does not match the model".into()));
    }
    for nb in &spec.neighborhoods {
        if nb.anchor >= spec.anchors.len() {
            return Err(LipkitError::Structural("neighborhood refers to a missing anchor".into()));
        }
    }
    let node_coord = |node: &GridNode| -> Vec<f64> {
        match node {
            GridNode::Origin => vec![0.0; dim],
            GridNode::Anchor(i) => spec.anchors[*i].clone(),
        }
    };

    let mut labeled: Vec<(String, Vec<f64>)> = vec![("0".into(), vec![0.0; dim])];
    for (i, a) in spec.anchors.iter().enumerate() {
        labeled.push((format!("a{i}"), a.clone()));
    }
    let segments: Vec<(GridNode, GridNode)> = if spec.segments.is_empty() {
        (0..spec.anchors.len()).map(|i| (GridNode::Origin, GridNode::Anchor(i))).collect()
    } else {
        spec.segments.clone()
    };
    for (si, (from, to)) in segments.iter().enumerate() {
        let a = node_coord(from);
        let b = node_coord(to);
        for k in 0..=spec.segment_resolution {
            let t = k as f64 / spec.segment_resolution as f64;
            let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect();
            labeled.push((format!("s{si}_{k}"), p));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for (ni, nb) in spec.neighborhoods.iter().enumerate() {
        let center = &spec.anchors[nb.anchor];
        let mut produced = 0usize;
        let mut attempts = 0usize;
        while produced < nb.count {
            attempts += 1;
            if attempts > 1000 * nb.count.max(1) {
                return Err(LipkitError::SamplerExhausted("neighborhood sampler".into()));
            }
            let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = model.norm(&dir);
            if n < 1e-6 {
                continue;
            }
            let r: f64 = nb.radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
            let p: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + d * r / n).collect();
            labeled.push((format!("n{ni}_{produced}"), p));
            produced += 1;
        }
    }

    // Deduplicate (sup-norm threshold on coordinates); earlier entries win.
    let mut kept: Vec<(String, Vec<f64>)> = Vec::new();
    'outer: for (label, p) in labeled {
        for (_, q) in &kept {
            if p.iter().zip(q.iter()).all(|(a, b)| (a - b).abs() <= DEDUP_TOL) {
                continue 'outer;
            }
        }
        kept.push((label, p));
    }
    FinitePointedMetricSpace::from_coords(model, kept, 0)
}

/// JSON wire format for spaces: `dist` may be omitted when coordinates plus a
/// model are supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub points: Vec<Point>,
    pub base: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
}

impl SpaceFile {
    pub fn into_space(self, model: Option<&NormedSpaceModel>) -> Result<Arc<FinitePointedMetricSpace>> {
        match (self.dist, model) {
            (Some(dist), _) => FinitePointedMetricSpace::new(self.points, self.base, dist, 1e-9),
            (None, Some(model)) => {
                let labeled = self
                    .points
                    .into_iter()
                    .map(|p| {
                        let coord = p.coord.ok_or_else(|| {
                            LipkitError::Structural(format!("point {} lacks coordinates and no dist matrix given", p.label))
                        })?;
                        Ok((p.label, coord))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FinitePointedMetricSpace::from_coords(model, labeled, self.base)
            }
            (None, None) => Err(LipkitError::Structural(
                "space file has no dist matrix and no model was supplied".into(),
            )),
        }
    }

    pub fn from_space(space: &FinitePointedMetricSpace) -> Self {
        Self {
            points: space.points.clone(),
            base: space.base,
            dist: Some(space.dist.clone()),
        }
    }
}
