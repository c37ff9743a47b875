//! Command implementations. Each writes its artifacts and returns the lines
//! to print; failures map onto exit codes through [`CliError`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use mintime::extremal::shoot_extremal;
use mintime::geometry::{
    certify_attainable_inner_ball, certify_hypograph_exterior_sphere, discretization_slack, local_lipschitz,
    sample_indices, target_boundary_points, test_semiconcavity, AttainableOptions, HypoOptions, InnerBallRecord,
    TransportCheck,
};
use mintime::io::{g12, json_number, write_json};
use mintime::linalg::{neg, normalize};
use mintime::model::Constants;
use mintime::solver::restrict_continuity_region;
use mintime::{attainable_set, solve_min_time, Grid, ScalarField};

use crate::config::{missing, FieldSource, RunConfig};
use crate::error::{CliError, CliResult, EXIT_BELOW_THRESHOLD, EXIT_NOT_CONVERGED};

/// Lines for stdout plus the exit status of a command that ran to the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub code: i32,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Self { lines, code: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Hypo,
    Attainable,
    Petrov,
    Semiconcavity,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Hypo => "hypo",
            Check::Attainable => "attainable",
            Check::Petrov => "petrov",
            Check::Semiconcavity => "semiconcavity",
        }
    }
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn grid(cfg: &RunConfig) -> CliResult<Grid> {
    Ok(Grid::with_spacing(cfg.lower.clone(), cfg.upper.clone(), cfg.h()?)?)
}

#[derive(Serialize)]
struct GridMeta {
    #[serde(serialize_with = "mintime::io::serialize_g12_vec")]
    lower: Vec<f64>,
    #[serde(serialize_with = "mintime::io::serialize_g12_vec")]
    upper: Vec<f64>,
    counts: Vec<usize>,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    h: f64,
}

#[derive(Serialize)]
struct SolverMeta {
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    cap: f64,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    tol: f64,
    max_sweeps: usize,
    velocity_samples: usize,
    refine: bool,
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: Option<&'a str>,
    model: &'a str,
    grid: GridMeta,
    solver: SolverMeta,
    sweeps: usize,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    residual: f64,
    converged: bool,
    constants: &'a Constants,
}

/// `solve`: `T.csv` and `meta.json`.
pub fn cmd_solve(cfg: &RunConfig) -> CliResult<Outcome> {
    let g = grid(cfg)?;
    let sol = solve_min_time(&cfg.model, &cfg.target, &g, &cfg.solver)?;
    let dir = out_dir(cfg)?;
    sol.field.write_csv(dir.join("T.csv"))?;
    let meta = Meta {
        tool: "mintime",
        version: env!("CARGO_PKG_VERSION"),
        scenario: cfg.scenario.as_deref(),
        model: cfg.model.name(),
        grid: GridMeta { lower: g.lower().to_vec(), upper: g.upper().to_vec(), counts: g.counts().to_vec(), h: g.h() },
        solver: SolverMeta {
            cap: cfg.solver.cap,
            tol: cfg.solver.tol,
            max_sweeps: cfg.solver.max_sweeps,
            velocity_samples: cfg.solver.velocity_samples,
            refine: cfg.solver.refine,
        },
        sweeps: sol.sweeps,
        residual: sol.residual,
        converged: sol.converged,
        constants: cfg.model.constants(),
    };
    write_json(dir.join("meta.json"), &meta)?;
    let line = format!("solved {} nodes in {} sweeps, residual {}", g.len(), sol.sweeps, g12(sol.residual));
    if !sol.converged {
        return Ok(Outcome { lines: vec![line, "warning: not converged".into()], code: EXIT_NOT_CONVERGED });
    }
    Ok(Outcome::ok(vec![line]))
}

/// `shoot`: `arc.csv` for the extremal from a target point.
pub fn cmd_shoot(cfg: &RunConfig, point: &[f64], normal: &[f64], r: f64) -> CliResult<Outcome> {
    let n = cfg.model.dim();
    if point.len() != n || normal.len() != n {
        return Err(CliError::Config(format!("point and normal need {n} components")));
    }
    let nu = normalize(normal).ok_or_else(|| CliError::Config("normal must be nonzero".into()))?;
    let arc = shoot_extremal(&cfg.model, point, &nu, r, cfg.dt)?;
    let dir = out_dir(cfg)?;
    arc.write_csv(dir.join("arc.csv"))?;
    let end: Vec<String> = arc.end_state().iter().map(|v| g12(*v)).collect();
    Ok(Outcome::ok(vec![format!(
        "arc with {} samples ends at ({}), lambda {}",
        arc.len(),
        end.join(", "),
        g12(arc.lambda)
    )]))
}

fn field_for(cfg: &RunConfig, reversed: bool) -> CliResult<ScalarField> {
    match &cfg.verify.field {
        FieldSource::Csv(p) => Ok(ScalarField::read_csv(p, cfg.solver.cap)?),
        FieldSource::Oracle => {
            let oracle = cfg
                .oracle
                .ok_or_else(|| CliError::Config("verify.field = oracle needs a scenario with a closed form".into()))?;
            Ok(ScalarField::from_fn(grid(cfg)?, cfg.solver.cap, oracle)?)
        }
        FieldSource::Solve => {
            let g = grid(cfg)?;
            let sol = if reversed {
                attainable_set(&cfg.model, &cfg.target, &g, &cfg.solver)?
            } else {
                solve_min_time(&cfg.model, &cfg.target, &g, &cfg.solver)?
            };
            if !sol.converged {
                eprintln!("warning: solver stopped after {} sweeps, residual {}", sol.sweeps, g12(sol.residual));
            }
            Ok(sol.field)
        }
    }
}

#[derive(Serialize)]
struct Summary {
    check: &'static str,
    passed: usize,
    total: usize,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    fraction: f64,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    threshold: f64,
    pass: bool,
    details: BTreeMap<&'static str, Box<RawValue>>,
}

#[derive(Serialize)]
struct PetrovRecord {
    #[serde(serialize_with = "mintime::io::serialize_g12_vec")]
    point: Vec<f64>,
    #[serde(serialize_with = "mintime::io::serialize_g12_vec")]
    normal: Vec<f64>,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    mu: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SemiconcavityRecord {
    #[serde(serialize_with = "mintime::io::serialize_g12_vec")]
    point: Vec<f64>,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    max_excess: f64,
    #[serde(serialize_with = "mintime::io::serialize_g12")]
    slack: f64,
    tested: usize,
    pass: bool,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum AttainableEntry<'a> {
    Ball(&'a InnerBallRecord),
    Transport(&'a TransportCheck),
}

fn number(x: f64) -> Box<RawValue> {
    json_number(x)
}

/// `verify <check>`: `certificates.json`, `verify-<check>.json` and a
/// `PASS k/m` line. Exit 5 when the pass fraction is below the threshold.
pub fn cmd_verify(cfg: &RunConfig, check: Check) -> CliResult<Outcome> {
    let mut details = BTreeMap::new();
    let mut extra = Vec::new();
    let dir = out_dir(cfg)?.to_path_buf();
    let certs = dir.join("certificates.json");
    let (passed, total) = match check {
        Check::Hypo => {
            let field = field_for(cfg, false)?;
            let rho0 = cfg.verify.rho0.ok_or_else(|| missing("verify.rho0"))?;
            let mask = restrict_continuity_region(&field, cfg.verify.kappa);
            let opts = HypoOptions {
                samples: cfg.verify.samples.unwrap_or(500),
                seed: cfg.seed,
                dt: cfg.dt,
                rungs: cfg.verify.rungs,
                ..Default::default()
            };
            let recs = certify_hypograph_exterior_sphere(
                &field,
                &mask,
                &cfg.model,
                &cfg.target,
                cfg.model.constants(),
                rho0,
                &opts,
            )?;
            let lam = recs.iter().filter_map(|r| r.lambda).fold(f64::INFINITY, f64::min);
            details.insert("mask_size", number(mask.count() as f64));
            details.insert("lambda_min", number(lam));
            details.insert("failures", number(recs.iter().filter(|r| r.failure.is_some()).count() as f64));
            let k = recs.iter().filter(|r| r.passed()).count();
            write_json(&certs, &recs)?;
            (k, recs.len())
        }
        Check::Attainable => {
            let field = field_for(cfg, true)?;
            let horizon = cfg.verify.horizon.ok_or_else(|| missing("verify.T"))?;
            let big_r = cfg.verify.big_r.ok_or_else(|| missing("verify.R"))?;
            let opts = AttainableOptions {
                samples: cfg.verify.samples.unwrap_or(200),
                theta_samples: cfg.verify.theta_samples,
                seed: cfg.seed,
                dt: cfg.dt,
                radius_scale: cfg.verify.radius_scale,
            };
            let rep = certify_attainable_inner_ball(&cfg.model, &field, horizon, cfg.model.constants(), big_r, &opts)?;
            details.insert("T", number(horizon));
            details.insert("r0", number(rep.r0));
            details.insert("ball_pass_fraction", number(rep.pass_fraction));
            details.insert("transport_pass_fraction", number(rep.transport_pass_fraction));
            let k = rep.balls.iter().filter(|b| b.pass).count() + rep.transports.iter().filter(|t| t.pass).count();
            let entries: Vec<AttainableEntry> = rep
                .balls
                .iter()
                .map(AttainableEntry::Ball)
                .chain(rep.transports.iter().map(AttainableEntry::Transport))
                .collect();
            write_json(&certs, &entries)?;
            (k, rep.balls.len() + rep.transports.len())
        }
        Check::Petrov => {
            let g = grid(cfg)?;
            let pts = target_boundary_points(&cfg.target, &g);
            let mut recs = Vec::new();
            for x in pts {
                let Some(nu) = cfg.target.normal(&x).and_then(|n| normalize(&n)) else { continue };
                let mu = cfg.model.h(&x, &neg(&nu));
                recs.push(PetrovRecord { pass: mu >= cfg.verify.mu, point: x, normal: nu, mu });
            }
            if recs.is_empty() {
                return Err(CliError::Config("target has no boundary points on the grid".into()));
            }
            let worst = recs.iter().min_by(|a, b| a.mu.total_cmp(&b.mu)).unwrap();
            let holds = worst.mu >= cfg.verify.mu;
            details.insert("mu_min", number(worst.mu));
            details.insert("mu_required", number(cfg.verify.mu));
            details.insert("worst_point", serde_json::value::to_raw_value(&worst.point.iter().map(|v| number(*v)).collect::<Vec<_>>()).unwrap());
            details.insert("petrov_holds", serde_json::value::to_raw_value(&holds).unwrap());
            extra.push(format!("mu_min {} at ({})", g12(worst.mu), worst.point.iter().map(|v| g12(*v)).collect::<Vec<_>>().join(", ")));
            if !holds {
                extra.push(format!("petrov condition fails: mu_min below {}", g12(cfg.verify.mu)));
            }
            let k = recs.iter().filter(|r| r.pass).count();
            write_json(&certs, &recs)?;
            (k, recs.len())
        }
        Check::Semiconcavity => {
            let field = field_for(cfg, false)?;
            let mask = restrict_continuity_region(&field, cfg.verify.kappa);
            let g = field.grid().clone();
            let h = g.h();
            let steps = semiconcavity_steps(g.dim(), h);
            let pool: Vec<usize> = mask.indices().collect();
            let picked = sample_indices(&pool, cfg.verify.samples.unwrap_or(500), cfg.seed);
            let f = |x: &[f64]| field.interpolate(x);
            let region = |x: &[f64]| g.contains(x) && mask.contains(g.nearest(x));
            let mut recs = Vec::new();
            for idx in picked {
                let x = g.point(idx);
                let slack = discretization_slack(h, local_lipschitz(&field, idx));
                let Ok(rep) = test_semiconcavity(&f, &[x.clone()], &region, cfg.verify.c, &steps, slack) else {
                    continue;
                };
                recs.push(SemiconcavityRecord { point: x, max_excess: rep.max_excess, slack, tested: rep.tested, pass: rep.pass });
            }
            details.insert("c", number(cfg.verify.c));
            let k = recs.iter().filter(|r| r.pass).count();
            write_json(&certs, &recs)?;
            (k, recs.len())
        }
    };
    let fraction = if total == 0 { 0.0 } else { passed as f64 / total as f64 };
    let pass = total > 0 && fraction >= cfg.verify.threshold;
    let summary = Summary { check: check.name(), passed, total, fraction, threshold: cfg.verify.threshold, pass, details };
    write_json(dir.join(format!("verify-{}.json", check.name())), &summary)?;
    let mut lines = vec![format!("PASS {passed}/{total}")];
    lines.extend(extra);
    Ok(Outcome { lines, code: if pass { 0 } else { EXIT_BELOW_THRESHOLD } })
}

/// Grid-aligned half-space of offsets `k·h·d`, `k = 1..=3`, `d ∈ {−1,0,1}ⁿ`.
fn semiconcavity_steps(dim: usize, h: f64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let d: Vec<f64> = (0..dim).map(|i| (code / 3usize.pow(i as u32) % 3) as f64 - 1.0).collect();
        // Keep one of each ±d pair.
        if let Some(first) = d.iter().rev().find(|v| **v != 0.0) {
            if *first > 0.0 {
                dirs.push(d);
            }
        }
    }
    let mut steps = Vec::new();
    for k in 1..=3 {
        for d in &dirs {
            steps.push(d.iter().map(|v| v * k as f64 * h).collect());
        }
    }
    steps
}

/// `report`: `report.md` from the artifacts already in the output directory.
pub fn cmd_report(dir: &Path) -> CliResult<Outcome> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("{}: no such output directory", dir.display())));
    }
    let mut rows: Vec<[String; 3]> = Vec::new();
    let read_json = |name: &str| -> CliResult<Option<serde_json::Value>> {
        let p = dir.join(name);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p)?;
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    let num = |v: &serde_json::Value| v.as_f64().map(g12).unwrap_or_else(|| v.to_string());
    if let Some(m) = read_json("meta.json")? {
        let counts: Vec<String> = m["grid"]["counts"].as_array().map(|a| a.iter().map(|c| c.to_string()).collect()).unwrap_or_default();
        let status = if m["converged"] == serde_json::Value::Bool(true) { "converged" } else { "not converged" };
        rows.push([
            "solve".into(),
            format!("{status} in {} sweeps", m["sweeps"]),
            format!("residual {}, grid {}, h {}", num(&m["residual"]), counts.join("x"), num(&m["grid"]["h"])),
        ]);
    }
    let arc = dir.join("arc.csv");
    if arc.exists() {
        let (header, data) = mintime::io::read_csv(&arc)?;
        let n = (header.len() - 1) / 2;
        let last = data.last().cloned().unwrap_or_default();
        let end: Vec<String> = last.iter().skip(1).take(n).map(|v| g12(*v)).collect();
        rows.push(["shoot".into(), format!("{} samples", data.len()), format!("end state ({})", end.join(", "))]);
    }
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.starts_with("verify-") && n.ends_with(".json"))
        .collect();
    names.sort();
    for name in names {
        let Some(s) = read_json(&name)? else { continue };
        let details = s["details"]
            .as_object()
            .map(|o| o.iter().map(|(k, v)| format!("{k} {}", num(v))).collect::<Vec<_>>().join(", "))
            .unwrap_or_default();
        let verdict = if s["pass"] == serde_json::Value::Bool(true) { "ok" } else { "below threshold" };
        rows.push([
            format!("verify {}", s["check"].as_str().unwrap_or("?")),
            format!("PASS {}/{} ({verdict})", s["passed"], s["total"]),
            format!("threshold {}; {details}", num(&s["threshold"])),
        ]);
    }
    let mut md = String::from("# mintime report\n\n| artifact | result | details |\n|---|---|---|\n");
    for r in &rows {
        md.push_str(&format!("| {} | {} | {} |\n", r[0], r[1], r[2]));
    }
    if rows.is_empty() {
        md.push_str("\nNo artifacts found.\n");
    }
    fs::write(dir.join("report.md"), md)?;
    Ok(Outcome::ok(vec![format!("report.md: {} rows", rows.len())]))
}
