//! Scenario configs and the deterministic run harness behind `lipkit run`.
//!
//! Scenarios are JSON fixtures; reports are JSON (stable across reruns with
//! fixed seeds) plus a flat CSV summary. Exact rationals are serialized as
//! `"p/q"` strings.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bpb::bpb_correct;
use crate::cantor::{rational_to_f64, svc_set, FatCantorSet};
use crate::density::{c0_estimate_check, sa_weak_density_construct, tent_functional, BallSpec};
use crate::error::{LipkitError, Result};
use crate::freespace::{free_norm, free_norm_primal, FreeVector};
use crate::lipfunc::{lip_norm, mcshane_extend, ExtendVariant, FunctionalFile, LipFunctional};
use crate::metric::{
    build_grid_space, FinitePointedMetricSpace, GridSpec, NeighborhoodSpec, SpaceFile,
};
use crate::model::{dot, NormedSpaceModel};
use crate::seminorm::{seminorm_bpb_construct, uniform_vs_lip_gap, SeminormModel};
use crate::ucx::lipbpb_uniformly_convex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Norm,
    Extend,
    Freenorm,
    Bpb,
    Ucx,
    Cantor,
    SaDensity,
    Seminorm,
    C0check,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Norm => "norm",
            ScenarioKind::Extend => "extend",
            ScenarioKind::Freenorm => "freenorm",
            ScenarioKind::Bpb => "bpb",
            ScenarioKind::Ucx => "ucx",
            ScenarioKind::Cantor => "cantor",
            ScenarioKind::SaDensity => "sa-density",
            ScenarioKind::Seminorm => "seminorm",
            ScenarioKind::C0check => "c0check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub inputs: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub kind: ScenarioKind,
    pub status: Status,
    /// Headline measured value; rationals appear as `"p/q"`.
    pub key_value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// How far `key_value` sits on the good side of `bound`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// On failure, names the violated inequality with both sides' values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub measures: BTreeMap<String, Value>,
    /// Excluded from JSON so reports are bit-identical across reruns; the
    /// CSV summary carries it instead.
    #[serde(skip)]
    pub wall_ms: u128,
}

pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn get<'a>(inputs: &'a Value, key: &str) -> Result<&'a Value> {
    inputs
        .get(key)
        .ok_or_else(|| LipkitError::Structural(format!("scenario inputs lack the field `{key}`")))
}

fn get_f64(inputs: &Value, key: &str) -> Result<f64> {
    get(inputs, key)?
        .as_f64()
        .ok_or_else(|| LipkitError::Structural(format!("field `{key}` must be a number")))
}

fn get_u64(inputs: &Value, key: &str) -> Result<u64> {
    get(inputs, key)?
        .as_u64()
        .ok_or_else(|| LipkitError::Structural(format!("field `{key}` must be a nonnegative integer")))
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| LipkitError::Structural(format!("cannot parse {what}: {e}")))
}

fn model_from_inputs(inputs: &Value) -> Result<Option<NormedSpaceModel>> {
    match (inputs.get("p"), inputs.get("dim")) {
        (Some(p), Some(dim)) => {
            let p = p.as_f64().ok_or_else(|| LipkitError::Structural("`p` must be a number".into()))?;
            let dim = dim
                .as_u64()
                .ok_or_else(|| LipkitError::Structural("`dim` must be an integer".into()))?
                as usize;
            Ok(Some(if p.is_infinite() {
                NormedSpaceModel::linf(dim)
            } else {
                NormedSpaceModel::lp(dim, p)?
            }))
        }
        _ => Ok(None),
    }
}

/// When a space file has coordinates but no distance matrix and no model was
/// requested, fall back to the euclidean model of the coordinate dimension.
fn default_model(file: &SpaceFile, model: Option<NormedSpaceModel>) -> Result<Option<NormedSpaceModel>> {
    if model.is_some() || file.dist.is_some() {
        return Ok(model);
    }
    match file.points.first().and_then(|p| p.coord.as_ref()) {
        Some(c) => Ok(Some(NormedSpaceModel::lp(c.len(), 2.0)?)),
        None => Ok(None),
    }
}

fn space_from_inputs(inputs: &Value, key: &str) -> Result<Arc<FinitePointedMetricSpace>> {
    let file: SpaceFile = parse(get(inputs, key)?, "space file")?;
    let model = default_model(&file, model_from_inputs(inputs)?)?;
    file.into_space(model.as_ref())
}

fn functional_from_inputs(inputs: &Value, key: &str) -> Result<LipFunctional> {
    let file: FunctionalFile = parse(get(inputs, key)?, "functional file")?;
    let model = default_model(&file.space, model_from_inputs(inputs)?)?;
    file.into_functional(model.as_ref())
}

/// Grid fixture used by the `ucx` scenario and the examples: two anchors in
/// general position, all three connecting segments, a small neighborhood
/// cloud, and a linear functional normalized to unit grid Lipschitz norm.
/// Returns the space, the functional, and the argmax pair.
pub fn ucx_fixture(
    model: &NormedSpaceModel,
    resolution: usize,
    seed: u64,
) -> Result<(Arc<FinitePointedMetricSpace>, LipFunctional, (usize, usize))> {
    let dim = model.dim;
    let pad = |mut v: Vec<f64>| {
        v.resize(dim, 0.0);
        v
    };
    let anchors = vec![pad(vec![1.0, 0.2]), pad(vec![0.3, -0.6])];
    let mut spec = GridSpec::segments_to_anchors(anchors, resolution, seed);
    spec.segments = vec![
        (crate::metric::GridNode::Origin, crate::metric::GridNode::Anchor(0)),
        (crate::metric::GridNode::Origin, crate::metric::GridNode::Anchor(1)),
        (crate::metric::GridNode::Anchor(0), crate::metric::GridNode::Anchor(1)),
    ];
    spec.neighborhoods = vec![NeighborhoodSpec { anchor: 0, radius: 0.15, count: 6 }];
    let space = build_grid_space(model, &spec)?;
    let x = space.index_of_label("a0").unwrap();
    let y = space.index_of_label("a1").unwrap();
    // linear functional attaining exactly along the anchor-anchor segment
    let cx = space.coord(x).unwrap().to_vec();
    let cy = space.coord(y).unwrap().to_vec();
    let d: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| p - q).collect();
    let nd = model.norm(&d);
    let a = model.duality_map(&d.iter().map(|v| v / nd).collect::<Vec<_>>())?;
    let raw: Vec<f64> = (0..space.len())
        .map(|i| dot(space.coord(i).unwrap(), &a))
        .collect();
    let f0 = LipFunctional::from_unnormalized(Arc::clone(&space), raw)?;
    let f = f0.scale(1.0 / lip_norm(&f0).0);
    Ok((space, f, (x, y)))
}

fn pass_fail(ok: bool, detail: String) -> (Status, Option<String>) {
    if ok {
        (Status::Pass, None)
    } else {
        (Status::Fail, Some(detail))
    }
}

struct Outcome {
    status: Status,
    key_value: Value,
    bound: Option<f64>,
    slack: Option<f64>,
    detail: Option<String>,
    measures: BTreeMap<String, Value>,
}

fn run_norm(inputs: &Value) -> Result<Outcome> {
    let f = functional_from_inputs(inputs, "functional")?;
    let (norm, (x, y)) = lip_norm(&f);
    let cert = crate::lipfunc::strongly_attains(&f, 1e-9)?;
    let mut measures = BTreeMap::new();
    measures.insert("norm".into(), json!(norm));
    measures.insert(
        "argmax_pair".into(),
        json!([f.space.points[x].label, f.space.points[y].label]),
    );
    measures.insert("certificate".into(), json!(cert));
    Ok(Outcome {
        status: Status::Pass,
        key_value: json!(norm),
        bound: None,
        slack: None,
        detail: None,
        measures,
    })
}

fn run_extend(inputs: &Value) -> Result<Outcome> {
    let space = space_from_inputs(inputs, "space")?;
    let indices: Vec<usize> = parse(get(inputs, "subspace_indices")?, "subspace indices")?;
    let values: Vec<f64> = parse(get(inputs, "values")?, "subspace values")?;
    let sub = space.subspace(&indices)?;
    let f_sub = LipFunctional::new(sub, values)?;
    let (sub_norm, _) = lip_norm(&f_sub);

    let mut measures = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for (variant, name) in [
        (ExtendVariant::Inf, "inf"),
        (ExtendVariant::Sup, "sup"),
        (ExtendVariant::Midpoint, "midpoint"),
    ] {
        let ext = mcshane_extend(&f_sub, &space, variant)?;
        let (norm, _) = lip_norm(&ext);
        worst = worst.max((norm - sub_norm).abs());
        measures.insert(format!("norm_{name}"), json!(norm));
    }
    measures.insert("subspace_norm".into(), json!(sub_norm));
    let (status, detail) = pass_fail(
        worst <= 1e-9,
        format!("extension norm drift {worst} exceeds 1e-9"),
    );
    Ok(Outcome {
        status,
        key_value: json!(worst),
        bound: Some(1e-9),
        slack: Some(1e-9 - worst),
        detail,
        measures,
    })
}

fn run_freenorm(inputs: &Value, tolerances: &BTreeMap<String, f64>) -> Result<Outcome> {
    let space = space_from_inputs(inputs, "space")?;
    let coeffs: Vec<f64> = parse(get(inputs, "coeffs")?, "coefficients")?;
    let z = FreeVector::new(space, coeffs)?;
    let (dual, g) = free_norm(&z)?;
    let (primal, transport) = free_norm_primal(&z)?;
    let gap = (dual - primal).abs();
    let tol = tolerances.get("duality_gap").copied().unwrap_or(crate::freespace::DUALITY_TOL);
    let mut measures = BTreeMap::new();
    measures.insert("norm".into(), json!(dual));
    measures.insert("dual_values".into(), json!(g.values));
    measures.insert(
        "primal_transport".into(),
        json!(transport
            .iter()
            .map(|(x, y, w)| json!([z.space.points[*x].label, z.space.points[*y].label, w]))
            .collect::<Vec<_>>()),
    );
    measures.insert("gap".into(), json!(gap));
    let (status, detail) = pass_fail(gap <= tol, format!("duality gap {gap} exceeds {tol}"));
    Ok(Outcome {
        status,
        key_value: json!(dual),
        bound: Some(tol),
        slack: Some(tol - gap),
        detail,
        measures,
    })
}

fn run_bpb(inputs: &Value) -> Result<Outcome> {
    let f = functional_from_inputs(inputs, "functional")?;
    let pair: (usize, usize) = parse(get(inputs, "pair")?, "molecule pair")?;
    let delta = get_f64(inputs, "delta")?;
    let w = FreeVector::molecule(Arc::clone(&f.space), pair.0, pair.1)?;
    let res = bpb_correct(&f, &w, delta)?;
    let mut measures = BTreeMap::new();
    measures.insert("pairing".into(), json!(res.pairing));
    measures.insert("dist_f".into(), json!(res.dist_f));
    measures.insert("dist_w".into(), json!(res.dist_w));
    measures.insert("bound".into(), json!(res.bound));
    measures.insert("g_values".into(), json!(res.g.values));
    measures.insert(
        "z_support".into(),
        json!(res
            .z_support
            .iter()
            .map(|(x, y, w)| json!([f.space.points[*x].label, f.space.points[*y].label, w]))
            .collect::<Vec<_>>()),
    );
    let score = res.score();
    let (status, detail) = pass_fail(
        res.achieved,
        format!("max(dist_f, dist_w) = {score} exceeds sqrt(2 delta) = {}", res.bound),
    );
    Ok(Outcome {
        status,
        key_value: json!(score),
        bound: Some(res.bound),
        slack: Some(res.bound - score),
        detail,
        measures,
    })
}

fn run_ucx(inputs: &Value, seed: u64) -> Result<Outcome> {
    let p = get_f64(inputs, "p")?;
    let dim = get_u64(inputs, "dim")? as usize;
    let eps = get_f64(inputs, "eps")?;
    let resolution = inputs.get("resolution").and_then(Value::as_u64).unwrap_or(16) as usize;
    let model = NormedSpaceModel::lp(dim, p)?;
    let (_, f, pair) = ucx_fixture(&model, resolution, seed)?;
    let report = lipbpb_uniformly_convex(&model, &f, pair.0, pair.1, eps)?;
    let mut measures = BTreeMap::new();
    measures.insert("delta".into(), json!(report.delta));
    measures.insert("delta_x".into(), json!(report.delta_x));
    measures.insert("rescale".into(), json!(report.rescale));
    measures.insert(
        "audits".into(),
        json!(report
            .audits
            .iter()
            .map(|a| json!({"name": a.name, "measured": a.measured, "bound": a.bound, "ok": a.ok}))
            .collect::<Vec<_>>()),
    );
    let worst = report
        .audits
        .iter()
        .map(|a| a.bound - a.measured)
        .fold(f64::INFINITY, f64::min);
    let failed: Vec<&str> = report.audits.iter().filter(|a| !a.ok).map(|a| a.name).collect();
    let (status, detail) = pass_fail(
        report.passed,
        format!("audits failed: {failed:?}"),
    );
    Ok(Outcome {
        status,
        key_value: json!(report.delta),
        bound: None,
        slack: Some(worst),
        detail,
        measures,
    })
}

fn run_cantor(inputs: &Value) -> Result<Outcome> {
    let depth = get_u64(inputs, "depth")? as u32;
    let set = svc_set(depth)?;
    let closed = FatCantorSet::closed_form_measure(depth);
    let mut measures = BTreeMap::new();
    measures.insert("measure".into(), json!(rational_string(&set.measure)));
    measures.insert("measure_f64".into(), json!(rational_to_f64(&set.measure)));
    measures.insert(
        "intervals".into(),
        json!(set
            .kept_intervals
            .iter()
            .map(|(a, b)| json!([rational_string(a), rational_string(b)]))
            .collect::<Vec<_>>()),
    );
    let (status, detail) = pass_fail(
        set.measure == closed,
        format!(
            "constructed measure {} differs from the closed form {}",
            rational_string(&set.measure),
            rational_string(&closed)
        ),
    );
    Ok(Outcome {
        status,
        key_value: json!(rational_string(&set.measure)),
        bound: None,
        slack: None,
        detail,
        measures,
    })
}

fn run_sa_density(inputs: &Value) -> Result<Outcome> {
    let g = functional_from_inputs(inputs, "g")?;
    let balls: Vec<BallSpec> = parse(get(inputs, "balls")?, "ball specs")?;
    let certs = sa_weak_density_construct(&g, &balls)?;
    let mut measures = BTreeMap::new();
    let mut all_attain = true;
    measures.insert(
        "certificates".into(),
        json!(certs
            .iter()
            .map(|(_, c)| {
                all_attain &= c.strongly_attains;
                json!({
                    "x": g.space.points[c.x].label,
                    "y": g.space.points[c.y].label,
                    "norm": c.norm,
                    "target_norm": c.target_norm,
                    "quotient": c.quotient,
                    "outside_deviation": c.outside_deviation,
                    "max_deviation": c.max_deviation,
                    "strongly_attains": c.strongly_attains,
                })
            })
            .collect::<Vec<_>>()),
    );
    let max_norm = certs.iter().map(|(_, c)| c.norm).fold(0.0, f64::max);
    let (status, detail) = pass_fail(
        all_attain,
        "a certificate misses |norm - (1 + 2 eps)| <= 1e-9 or the quotient equality".into(),
    );
    Ok(Outcome {
        status,
        key_value: json!(max_norm),
        bound: None,
        slack: None,
        detail,
        measures,
    })
}

fn run_seminorm(inputs: &Value) -> Result<Outcome> {
    let op = get(inputs, "op")?
        .as_str()
        .ok_or_else(|| LipkitError::Structural("`op` must be \"gap\" or \"bpb\"".into()))?;
    match op {
        "gap" => {
            let n = get_u64(inputs, "n")? as u32;
            let r = uniform_vs_lip_gap(n)?;
            let mut measures = BTreeMap::new();
            measures.insert("uniform_dist".into(), json!(r.uniform_dist));
            measures.insert("lip_lower_bound".into(), json!(r.lip_lower_bound));
            measures.insert("lip_pair".into(), json!([r.lip_pair.0, r.lip_pair.1]));
            let ok = r.uniform_dist * n as f64 == 1.0 && r.lip_lower_bound == 1.0;
            let (status, detail) = pass_fail(
                ok,
                format!(
                    "expected (1/{n}, 1), got ({}, {})",
                    r.uniform_dist, r.lip_lower_bound
                ),
            );
            Ok(Outcome {
                status,
                key_value: json!(r.uniform_dist),
                bound: Some(r.lip_lower_bound),
                slack: None,
                detail,
                measures,
            })
        }
        "bpb" => {
            let rows: Vec<Vec<f64>> = parse(get(inputs, "rows")?, "seminorm rows")?;
            let x0: Vec<f64> = parse(get(inputs, "x0")?, "starting point")?;
            let delta = get_f64(inputs, "delta")?;
            let eps = get_f64(inputs, "eps")?;
            let dim = x0.len();
            let p0 = SeminormModel::max_abs(dim, rows)?;
            let r = seminorm_bpb_construct(&p0, &x0, delta, eps)?;
            let mut measures = BTreeMap::new();
            measures.insert("x".into(), json!(r.x));
            measures.insert("dist_x".into(), json!(r.dist_x));
            measures.insert("dist_p_sampled".into(), json!(r.dist_p_sampled));
            measures.insert("bound".into(), json!(r.bound));
            measures.insert("p_at_x".into(), json!(r.p_at_x));
            let score = r.dist_x.max(r.dist_p_sampled);
            let ok = r.attained && score <= r.bound + 1e-9;
            let (status, detail) = pass_fail(
                ok,
                format!(
                    "attained = {}, max distance {score} against bound {}",
                    r.attained, r.bound
                ),
            );
            Ok(Outcome {
                status,
                key_value: json!(score),
                bound: Some(r.bound),
                slack: Some(r.bound - score),
                detail,
                measures,
            })
        }
        other => Err(LipkitError::Structural(format!("unknown seminorm op `{other}`"))),
    }
}

fn run_c0check(inputs: &Value) -> Result<Outcome> {
    let space = space_from_inputs(inputs, "space")?;
    let centers: Vec<usize> = parse(get(inputs, "centers")?, "tent centers")?;
    let radius = get_f64(inputs, "radius")?;
    let coefficients: Vec<f64> = parse(get(inputs, "coefficients")?, "coefficients")?;
    let locality_eps = get_f64(inputs, "locality_eps")?;
    let functionals: Vec<LipFunctional> = centers
        .iter()
        .map(|&c| tent_functional(&space, c, radius))
        .collect::<Result<_>>()?;
    let report = c0_estimate_check(&functionals, &coefficients, locality_eps)?;
    let mut measures = BTreeMap::new();
    measures.insert("lhs".into(), json!(report.lhs));
    measures.insert("rhs".into(), json!(report.rhs));
    measures.insert("deviation".into(), json!(report.deviation));
    measures.insert("tolerance".into(), json!(report.tolerance));
    measures.insert("separation".into(), json!(report.separation));
    let (status, detail) = pass_fail(
        report.ok,
        format!(
            "|lhs - rhs| = {} exceeds the mesh tolerance {}",
            report.deviation, report.tolerance
        ),
    );
    Ok(Outcome {
        status,
        key_value: json!(report.lhs),
        bound: Some(report.tolerance),
        slack: Some(report.tolerance - report.deviation),
        detail,
        measures,
    })
}

pub fn run_scenario(scenario: &Scenario) -> RunReport {
    let started = Instant::now();
    let outcome = match scenario.kind {
        ScenarioKind::Norm => run_norm(&scenario.inputs),
        ScenarioKind::Extend => run_extend(&scenario.inputs),
        ScenarioKind::Freenorm => run_freenorm(&scenario.inputs, &scenario.tolerances),
        ScenarioKind::Bpb => run_bpb(&scenario.inputs),
        ScenarioKind::Ucx => run_ucx(&scenario.inputs, scenario.seed),
        ScenarioKind::Cantor => run_cantor(&scenario.inputs),
        ScenarioKind::SaDensity => run_sa_density(&scenario.inputs),
        ScenarioKind::Seminorm => run_seminorm(&scenario.inputs),
        ScenarioKind::C0check => run_c0check(&scenario.inputs),
    };
    let wall_ms = started.elapsed().as_millis();
    match outcome {
        Ok(o) => RunReport {
            scenario_id: scenario.id.clone(),
            kind: scenario.kind,
            status: o.status,
            key_value: o.key_value,
            bound: o.bound,
            slack: o.slack,
            detail: o.detail,
            measures: o.measures,
            wall_ms,
        },
        Err(e) => RunReport {
            scenario_id: scenario.id.clone(),
            kind: scenario.kind,
            status: Status::Inconclusive,
            key_value: Value::Null,
            bound: None,
            slack: None,
            detail: Some(e.to_string()),
            measures: BTreeMap::new(),
            wall_ms,
        },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenarios: Vec<Scenario>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)
            .map_err(|e| LipkitError::Structural(format!("malformed manifest: {e}")))?;
        let mut seen = std::collections::HashSet::new();
        for s in &m.scenarios {
            if !seen.insert(s.id.clone()) {
                return Err(LipkitError::Structural(format!(
                    "duplicate scenario id `{}`",
                    s.id
                )));
            }
        }
        Ok(m)
    }
}

/// Runs every scenario, up to `parallelism` at a time, preserving manifest
/// order in the output. With `seed_override` set, every scenario runs under
/// that seed instead of its own.
pub fn run_manifest(
    manifest: &Manifest,
    parallelism: usize,
    seed_override: Option<u64>,
) -> Vec<RunReport> {
    let jobs = parallelism.max(1);
    let scenarios: Vec<Scenario> = manifest
        .scenarios
        .iter()
        .cloned()
        .map(|mut s| {
            if let Some(seed) = seed_override {
                s.seed = seed;
            }
            s
        })
        .collect();
    let mut reports: Vec<Option<RunReport>> = (0..scenarios.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<RunReport>>> =
        reports.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(scenarios.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= scenarios.len() {
                    break;
                }
                let report = run_scenario(&scenarios[i]);
                **slots[i].lock().unwrap() = Some(report);
            });
        }
    });
    reports.into_iter().map(Option::unwrap).collect()
}

/// Fixed-column CSV summary: scenario_id, kind, status, key_value, bound,
/// slack, wall_ms.
pub fn reports_to_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("scenario_id,kind,status,key_value,bound,slack,wall_ms\n");
    for r in reports {
        let key = match &r.key_value {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            v => v.to_string(),
        };
        let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
        let slack = r.slack.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario_id,
            r.kind.as_str(),
            r.status.as_str(),
            key,
            bound,
            slack,
            r.wall_ms
        ));
    }
    out
}

pub fn any_failed(reports: &[RunReport]) -> bool {
    reports.iter().any(|r| r.status == Status::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment_functional_json(n: usize) -> Value {
        let space = FinitePointedMetricSpace::unit_segment(n).unwrap();
        let values: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let file = SpaceFile::from_space(&space);
        json!({"functional": {"space": file, "values": values}})
    }

    #[test]
    fn empty_manifest_passes() {
        let m = Manifest::parse(r#"{"scenarios": []}"#).unwrap();
        let reports = run_manifest(&m, 4, None);
        assert!(reports.is_empty());
        assert!(!any_failed(&reports));
    }

    #[test]
    fn cantor_depth_two_measure() {
        let s = Scenario {
            id: "c2".into(),
            kind: ScenarioKind::Cantor,
            inputs: json!({"depth": 2}),
            seed: 0,
            tolerances: BTreeMap::new(),
        };
        let r = run_scenario(&s);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.key_value, json!("5/8"));
    }

    #[test]
    fn norm_scenario_on_segment() {
        let s = Scenario {
            id: "n".into(),
            kind: ScenarioKind::Norm,
            inputs: segment_functional_json(11),
            seed: 0,
            tolerances: BTreeMap::new(),
        };
        let r = run_scenario(&s);
        assert_eq!(r.status, Status::Pass);
        assert!((r.key_value.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn violated_bound_fixture_fails_and_names_inequality() {
        // a freenorm scenario with an impossible tolerance override
        let space = FinitePointedMetricSpace::unit_segment(5).unwrap();
        let file = SpaceFile::from_space(&space);
        let s = Scenario {
            id: "bad".into(),
            kind: ScenarioKind::Freenorm,
            inputs: json!({"space": file, "coeffs": [1.0, 0.0, 0.0, -1.0]}),
            seed: 0,
            tolerances: [("duality_gap".to_string(), -1.0)].into_iter().collect(),
        };
        let r = run_scenario(&s);
        assert_eq!(r.status, Status::Fail);
        let detail = r.detail.unwrap();
        assert!(detail.contains("exceeds"), "{detail}");
        let m = Manifest { scenarios: vec![s] };
        assert!(any_failed(&run_manifest(&m, 1, None)));
    }

    #[test]
    fn reports_bit_identical_across_runs() {
        let space = FinitePointedMetricSpace::unit_segment(9).unwrap();
        let file = SpaceFile::from_space(&space);
        let m = Manifest {
            scenarios: vec![
                Scenario {
                    id: "a".into(),
                    kind: ScenarioKind::Cantor,
                    inputs: json!({"depth": 3}),
                    seed: 7,
                    tolerances: BTreeMap::new(),
                },
                Scenario {
                    id: "b".into(),
                    kind: ScenarioKind::Freenorm,
                    inputs: json!({"space": file, "coeffs": [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.5]}),
                    seed: 7,
                    tolerances: BTreeMap::new(),
                },
                Scenario {
                    id: "g".into(),
                    kind: ScenarioKind::Seminorm,
                    inputs: json!({"op": "gap", "n": 10}),
                    seed: 7,
                    tolerances: BTreeMap::new(),
                },
            ],
        };
        let a = serde_json::to_string(&run_manifest(&m, 2, None)).unwrap();
        let b = serde_json::to_string(&run_manifest(&m, 1, None)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_scenarios_rejected() {
        assert!(Manifest::parse("{").is_err());
        assert!(Manifest::parse(r#"{"scenarios": [{"id": "x", "kind": "frobnicate"}]}"#).is_err());
        let dup = r#"{"scenarios": [
            {"id": "x", "kind": "cantor", "inputs": {"depth": 1}},
            {"id": "x", "kind": "cantor", "inputs": {"depth": 2}}
        ]}"#;
        assert!(Manifest::parse(dup).is_err());
    }

    #[test]
    fn solver_failure_is_inconclusive() {
        let s = Scenario {
            id: "deep".into(),
            kind: ScenarioKind::Cantor,
            inputs: json!({"depth": 64}),
            seed: 0,
            tolerances: BTreeMap::new(),
        };
        let r = run_scenario(&s);
        assert_eq!(r.status, Status::Inconclusive);
        assert!(r.detail.is_some());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let m = Manifest {
            scenarios: vec![Scenario {
                id: "c".into(),
                kind: ScenarioKind::Cantor,
                inputs: json!({"depth": 2}),
                seed: 0,
                tolerances: BTreeMap::new(),
            }],
        };
        let csv = reports_to_csv(&run_manifest(&m, 1, None));
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario_id,kind,status,key_value,bound,slack,wall_ms"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("c,cantor,pass,5/8,"));
    }
}
