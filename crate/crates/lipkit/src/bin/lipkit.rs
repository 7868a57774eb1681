use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lipkit::bpb::lip_bpb_preliminary;
use lipkit::error::Result;
use lipkit::lipfunc::{FunctionalFile, LipFunctional};
use lipkit::scenario::{
    any_failed, reports_to_csv, run_manifest, run_scenario, Manifest, RunReport, Scenario,
    ScenarioKind, Status,
};

#[derive(Parser)]
#[command(name = "lipkit", about = "Lipschitz functionals on finite pointed metric spaces", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Exponent of an ambient l_p model (coordinates required in the space file).
    #[arg(long)]
    p: Option<f64>,
    /// Dimension of the ambient model.
    #[arg(long)]
    dim: Option<usize>,
}

impl ModelArgs {
    fn inject(&self, inputs: &mut Value) {
        if let (Some(p), Some(dim)) = (self.p, self.dim) {
            inputs["p"] = json!(p);
            inputs["dim"] = json!(dim);
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lipschitz norm, argmax pair, and attainment certificate of a functional.
    Norm {
        /// JSON file: { "space": {...}, "values": [...] }
        file: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Free-space norm of a coefficient vector: dual value, optimal
    /// functional, primal transport plan, duality gap.
    Freenorm {
        space: PathBuf,
        coeffs: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Correct an almost-attaining (functional, molecule) pair to an exactly
    /// attaining one within sqrt(2 delta).
    Bpb {
        /// JSON file: { "space": {...}, "values": [...] }
        file: PathBuf,
        /// Molecule endpoints as point indices, e.g. 3,7
        #[arg(long, value_delimiter = ',', num_args = 2)]
        pair: Vec<usize>,
        #[arg(long)]
        delta: f64,
        /// Also run the directional walk and print its per-level trace.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Full pipeline on a grid-sampled uniformly convex l_p model.
    Ucx {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 16)]
        resolution: usize,
        /// Print the audit table as CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Fat Cantor set: kept intervals and exact measure at the given depth.
    Cantor {
        #[arg(long)]
        depth: u32,
    },
    /// Weak-density surgery: perturb a unit functional inside disjoint balls
    /// so each perturbation strongly attains its inflated norm.
    SaDensity {
        /// JSON file: { "space": {...}, "values": [...] }
        g: PathBuf,
        /// JSON file: [ { "center": i, "radius": r, "eps": e }, ... ]
        balls: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Seminorm experiments.
    Seminorm {
        #[command(subcommand)]
        op: SeminormOp,
    },
    /// Finite c_0-type estimate for a separated family of functionals.
    C0check {
        /// JSON file with the scenario inputs: space, centers, radius,
        /// coefficients, locality_eps.
        config: PathBuf,
    },
    /// Run a scenario manifest.
    Run {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write the summary CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SeminormOp {
    /// Uniform vs Lipschitz distance of the two-row family at level n.
    Gap {
        #[arg(long)]
        n: u32,
    },
    /// Correct a nearly-attaining seminorm on l_inf to an attaining one.
    Bpb {
        /// JSON file: { "rows": [[...], ...], "x0": [...] }
        file: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps: f64,
    },
}

fn read_json(path: &PathBuf) -> std::io::Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}: {e}", path.display()),
        )
    })
}

fn env_seed() -> Option<u64> {
    std::env::var("LIPKIT_SEED").ok().and_then(|s| s.parse().ok())
}

fn scenario(kind: ScenarioKind, inputs: Value) -> Scenario {
    Scenario {
        id: kind.as_str().to_string(),
        kind,
        inputs,
        seed: env_seed().unwrap_or(0),
        tolerances: BTreeMap::new(),
    }
}

fn print_report(report: &RunReport) -> ExitCode {
    println!("{}", serde_json::to_string_pretty(report).unwrap());
    match report.status {
        Status::Pass => ExitCode::SUCCESS,
        _ => ExitCode::FAILURE,
    }
}

/// Unit-norm functional with quotient exactly 1 at the pair: the midpoint
/// potential of the two endpoints, shifted to vanish at the base point.
fn midpoint_potential(f: &LipFunctional, x: usize, y: usize) -> Result<LipFunctional> {
    let space = Arc::clone(&f.space);
    let raw: Vec<f64> = (0..space.len())
        .map(|p| (space.rho(p, y) - space.rho(p, x)) / 2.0)
        .collect();
    let shift = raw[space.base];
    LipFunctional::new(space, raw.iter().map(|v| v - shift).collect())
}

fn run_bpb_trace(file: &PathBuf, pair: (usize, usize), delta: f64, model: &ModelArgs) -> Result<Value> {
    let parsed: FunctionalFile = serde_json::from_value(read_json(file).map_err(|e| {
        lipkit::error::LipkitError::Structural(e.to_string())
    })?)
    .map_err(|e| lipkit::error::LipkitError::Structural(e.to_string()))?;
    let m = match (model.p, model.dim) {
        (Some(p), Some(dim)) => Some(lipkit::model::NormedSpaceModel::lp(dim, p)?),
        // same fallback as the scenario runner: euclidean in the coordinate
        // dimension when only coordinates are given
        _ => match (&parsed.space.dist, parsed.space.points.first().and_then(|pt| pt.coord.as_ref())) {
            (None, Some(c)) => Some(lipkit::model::NormedSpaceModel::lp(c.len(), 2.0)?),
            _ => None,
        },
    };
    let f = parsed.into_functional(m.as_ref())?;
    let h = midpoint_potential(&f, pair.0, pair.1)?;
    let trace = lip_bpb_preliminary(&f, pair, &h, delta, 20)?;
    Ok(json!({
        "nu": trace.nu,
        "bound": trace.bound,
        "g_values": trace.g.values,
        "entries": trace.entries.iter().map(|e| json!({
            "n": e.n,
            "alpha": e.alpha,
            "delta_n": e.delta_n,
            "pair": [e.v, e.w],
            "h_quotient": e.h_quotient,
            "g_quotient": e.g_quotient,
        })).collect::<Vec<_>>(),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Norm { file, model } => {
            let Ok(functional) = read_json(&file) else {
                eprintln!("cannot read {}", file.display());
                return ExitCode::FAILURE;
            };
            let mut inputs = json!({ "functional": functional });
            model.inject(&mut inputs);
            print_report(&run_scenario(&scenario(ScenarioKind::Norm, inputs)))
        }
        Command::Freenorm { space, coeffs, model } => {
            let (Ok(space), Ok(coeffs)) = (read_json(&space), read_json(&coeffs)) else {
                eprintln!("cannot read the space or coefficient file");
                return ExitCode::FAILURE;
            };
            let mut inputs = json!({ "space": space, "coeffs": coeffs });
            model.inject(&mut inputs);
            print_report(&run_scenario(&scenario(ScenarioKind::Freenorm, inputs)))
        }
        Command::Bpb { file, pair, delta, trace, model } => {
            let Ok(functional) = read_json(&file) else {
                eprintln!("cannot read {}", file.display());
                return ExitCode::FAILURE;
            };
            let pair = (pair[0], pair[1]);
            let mut inputs = json!({ "functional": functional, "pair": [pair.0, pair.1], "delta": delta });
            model.inject(&mut inputs);
            let report = run_scenario(&scenario(ScenarioKind::Bpb, inputs));
            if trace {
                match run_bpb_trace(&file, pair, delta, &model) {
                    Ok(t) => println!("{}", serde_json::to_string_pretty(&t).unwrap()),
                    Err(e) => {
                        eprintln!("trace failed: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            }
            print_report(&report)
        }
        Command::Ucx { p, dim, eps, resolution, csv } => {
            let inputs = json!({ "p": p, "dim": dim, "eps": eps, "resolution": resolution });
            let report = run_scenario(&scenario(ScenarioKind::Ucx, inputs));
            if csv {
                println!("name,measured,bound,ok");
                if let Some(audits) = report.measures.get("audits").and_then(Value::as_array) {
                    for a in audits {
                        println!(
                            "{},{},{},{}",
                            a["name"].as_str().unwrap_or(""),
                            a["measured"],
                            a["bound"],
                            a["ok"]
                        );
                    }
                }
                match report.status {
                    Status::Pass => ExitCode::SUCCESS,
                    _ => ExitCode::FAILURE,
                }
            } else {
                print_report(&report)
            }
        }
        Command::Cantor { depth } => {
            print_report(&run_scenario(&scenario(ScenarioKind::Cantor, json!({ "depth": depth }))))
        }
        Command::SaDensity { g, balls, model } => {
            let (Ok(g), Ok(balls)) = (read_json(&g), read_json(&balls)) else {
                eprintln!("cannot read the functional or ball file");
                return ExitCode::FAILURE;
            };
            let mut inputs = json!({ "g": g, "balls": balls });
            model.inject(&mut inputs);
            print_report(&run_scenario(&scenario(ScenarioKind::SaDensity, inputs)))
        }
        Command::Seminorm { op } => {
            let inputs = match op {
                SeminormOp::Gap { n } => json!({ "op": "gap", "n": n }),
                SeminormOp::Bpb { file, delta, eps } => {
                    let Ok(v) = read_json(&file) else {
                        eprintln!("cannot read {}", file.display());
                        return ExitCode::FAILURE;
                    };
                    json!({ "op": "bpb", "rows": v["rows"], "x0": v["x0"], "delta": delta, "eps": eps })
                }
            };
            print_report(&run_scenario(&scenario(ScenarioKind::Seminorm, inputs)))
        }
        Command::C0check { config } => {
            let Ok(inputs) = read_json(&config) else {
                eprintln!("cannot read {}", config.display());
                return ExitCode::FAILURE;
            };
            print_report(&run_scenario(&scenario(ScenarioKind::C0check, inputs)))
        }
        Command::Run { manifest, jobs, csv } => {
            let text = match std::fs::read_to_string(&manifest) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", manifest.display());
                    return ExitCode::FAILURE;
                }
            };
            let parsed = match Manifest::parse(&text) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("{}: {e}", manifest.display());
                    return ExitCode::FAILURE;
                }
            };
            let reports = run_manifest(&parsed, jobs, env_seed());
            println!("{}", serde_json::to_string_pretty(&reports).unwrap());
            if let Some(path) = csv {
                if let Err(e) = std::fs::write(&path, reports_to_csv(&reports)) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            if any_failed(&reports) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
