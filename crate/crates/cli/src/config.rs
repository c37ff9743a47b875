//! Run configuration: flat `key = value` lines with dotted keys.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use mintime::model::{AffineField, BallForm, BoxForm, Gain, PolytopeForm};
use mintime::scenarios::{scenario, SCENARIO_NAMES};
use mintime::target::{Ball, BallComplement, HalfSpace};
use mintime::{Constants, InclusionModel, SolveOptions, TargetSet};

use crate::error::{CliError, CliResult};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "scenario",
    "seed",
    "grid.h",
    "grid.lower",
    "grid.upper",
    "solver.cap",
    "solver.tol",
    "solver.max_sweeps",
    "solver.velocity_samples",
    "solver.refine",
    "model.form",
    "model.dim",
    "model.center",
    "model.center_matrix",
    "model.radius",
    "model.radius_slope",
    "model.lower",
    "model.upper",
    "model.gains",
    "model.vertices",
    "constants.K",
    "constants.K1",
    "constants.K2",
    "constants.c0",
    "constants.R",
    "constants.estimate",
    "constants.samples",
    "target.kind",
    "target.center",
    "target.radius",
    "target.normal",
    "target.offset",
    "target.rho0",
    "extremal.dt",
    "verify.field",
    "verify.kappa",
    "verify.samples",
    "verify.theta_samples",
    "verify.rho0",
    "verify.R",
    "verify.T",
    "verify.threshold",
    "verify.radius_scale",
    "verify.rungs",
    "verify.c",
    "verify.mu",
    "output.dir",
];

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for {key}: {value:?} ({why})"))
}

pub fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing key: {key}"))
}

/// Unresolved key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected `key = value`", n + 1)));
            };
            let k = k.trim();
            if cfg.entries.contains_key(k) {
                return Err(CliError::Config(format!("line {}: duplicate key: {k}", n + 1)));
            }
            cfg.set(k, v.trim())?;
        }
        Ok(cfg)
    }

    /// Sets or replaces a key.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key: {key}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.str(key)
            .map(|v| {
                let x: f64 = v.parse().map_err(|e| bad(key, v, e))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(bad(key, v, "not finite"))
                }
            })
            .transpose()
    }

    pub fn positive(&self, key: &str) -> CliResult<Option<f64>> {
        match self.f64(key)? {
            Some(x) if x <= 0.0 => Err(bad(key, self.str(key).unwrap(), "must be positive")),
            v => Ok(v),
        }
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        self.str(key).map(|v| v.parse().map_err(|e| bad(key, v, e))).transpose()
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        self.str(key).map(|v| v.parse().map_err(|e| bad(key, v, e))).transpose()
    }

    pub fn bool(&self, key: &str) -> CliResult<Option<bool>> {
        self.str(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(bad(key, v, "expected true or false")),
            })
            .transpose()
    }

    /// Comma-separated numbers.
    pub fn vec(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.str(key).map(|v| parse_vec(key, v)).transpose()
    }
}

fn parse_vec(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',')
        .map(|s| {
            let x: f64 = s.trim().parse().map_err(|e| bad(key, v, e))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad(key, v, "not finite"))
            }
        })
        .collect()
}

/// Where a verification reads its field from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Solve,
    Oracle,
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub field: FieldSource,
    pub kappa: f64,
    pub samples: Option<usize>,
    pub theta_samples: usize,
    pub rho0: Option<f64>,
    pub big_r: Option<f64>,
    pub horizon: Option<f64>,
    pub threshold: f64,
    pub radius_scale: f64,
    pub rungs: usize,
    pub c: f64,
    pub mu: f64,
}

/// A resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub model: InclusionModel,
    pub target: TargetSet,
    pub oracle: Option<fn(&[f64]) -> Option<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    h: Option<f64>,
    pub solver: SolveOptions,
    pub seed: u64,
    pub dt: f64,
    pub verify: VerifyConfig,
    pub out: PathBuf,
}

impl RunConfig {
    /// Grid spacing; required by every command that builds a grid.
    pub fn h(&self) -> CliResult<f64> {
        self.h.ok_or_else(|| missing("grid.h"))
    }

    /// `out_override` (the `MINTIME_OUT` variable) wins over `output.dir`.
    pub fn resolve(raw: &RawConfig, out_override: Option<PathBuf>) -> CliResult<Self> {
        let name = raw.str("scenario").map(str::to_string);
        let spec = match &name {
            Some(n) => Some(scenario(n).map_err(|_| {
                CliError::Config(format!("invalid value for scenario: {n:?} (expected one of {})", SCENARIO_NAMES.join(", ")))
            })?),
            None => None,
        };
        let inline_model = raw.str("model.form").is_some();
        let mut model = match (&spec, inline_model) {
            (_, true) => build_model(raw)?,
            (Some(s), false) => s.model.clone(),
            (None, false) => return Err(missing("scenario")),
        };
        model = apply_constants(raw, model)?;
        let target = match (&spec, raw.str("target.kind").is_some()) {
            (_, true) => build_target(raw, model.dim())?,
            (Some(s), false) => s.target.clone(),
            (None, false) => return Err(missing("target.kind")),
        };
        if target.dim() != model.dim() {
            return Err(CliError::Config("target and model dimensions differ".into()));
        }
        let lower = match (raw.vec("grid.lower")?, &spec) {
            (Some(v), _) => v,
            (None, Some(s)) => s.lower.clone(),
            (None, None) => return Err(missing("grid.lower")),
        };
        let upper = match (raw.vec("grid.upper")?, &spec) {
            (Some(v), _) => v,
            (None, Some(s)) => s.upper.clone(),
            (None, None) => return Err(missing("grid.upper")),
        };
        if lower.len() != model.dim() || upper.len() != model.dim() {
            return Err(CliError::Config("grid.lower and grid.upper must match the model dimension".into()));
        }
        let d = SolveOptions::default();
        let solver = SolveOptions {
            cap: raw.positive("solver.cap")?.unwrap_or(d.cap),
            tol: raw.positive("solver.tol")?.unwrap_or(d.tol),
            max_sweeps: raw.usize("solver.max_sweeps")?.unwrap_or(d.max_sweeps),
            velocity_samples: raw.usize("solver.velocity_samples")?.unwrap_or(d.velocity_samples),
            refine: raw.bool("solver.refine")?.unwrap_or(d.refine),
        };
        let field = match raw.str("verify.field") {
            None | Some("solve") => FieldSource::Solve,
            Some("oracle") => FieldSource::Oracle,
            Some(p) => FieldSource::Csv(PathBuf::from(p)),
        };
        let verify = VerifyConfig {
            field,
            kappa: raw.positive("verify.kappa")?.unwrap_or(10.0),
            samples: raw.usize("verify.samples")?,
            theta_samples: raw.usize("verify.theta_samples")?.unwrap_or(100),
            rho0: raw.positive("verify.rho0")?.or_else(|| target.rho0()),
            big_r: raw.positive("verify.R")?.or_else(|| model.constants().r()),
            horizon: raw.positive("verify.T")?,
            threshold: raw.f64("verify.threshold")?.unwrap_or(0.95),
            radius_scale: raw.positive("verify.radius_scale")?.unwrap_or(1.0),
            rungs: raw.usize("verify.rungs")?.unwrap_or(5),
            c: raw.f64("verify.c")?.unwrap_or(0.0),
            mu: raw.f64("verify.mu")?.unwrap_or(0.1),
        };
        let out = output_dir(raw, out_override);
        Ok(Self {
            oracle: if inline_model { None } else { spec.as_ref().and_then(|s| s.oracle) },
            scenario: name,
            model,
            target,
            lower,
            upper,
            h: raw.positive("grid.h")?,
            solver,
            seed: raw.u64("seed")?.unwrap_or(0),
            dt: raw.positive("extremal.dt")?.unwrap_or(1e-3),
            verify,
            out,
        })
    }
}

/// `out_override` (the `MINTIME_OUT` variable), else `output.dir`, else `out`.
pub fn output_dir(raw: &RawConfig, out_override: Option<PathBuf>) -> PathBuf {
    out_override.unwrap_or_else(|| PathBuf::from(raw.str("output.dir").unwrap_or("out")))
}

fn req_vec(raw: &RawConfig, key: &str) -> CliResult<Vec<f64>> {
    raw.vec(key)?.ok_or_else(|| missing(key))
}

fn parse_gain(key: &str, s: &str) -> CliResult<Gain> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("hinge:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(key, s, "expected hinge:axis:knot:slope"));
        }
        let axis = parts[0].parse().map_err(|e| bad(key, s, e))?;
        let knot = parts[1].parse().map_err(|e| bad(key, s, e))?;
        let slope = parts[2].parse().map_err(|e| bad(key, s, e))?;
        Ok(Gain::Hinge { axis, knot, slope })
    } else {
        Ok(Gain::Constant(s.parse().map_err(|e| bad(key, s, e))?))
    }
}

fn build_model(raw: &RawConfig) -> CliResult<InclusionModel> {
    let form = raw.str("model.form").unwrap();
    let placeholder = Constants::to_estimate();
    let dynamics: Arc<dyn mintime::model::Dynamics> = match form {
        "ball" => {
            let center = req_vec(raw, "model.center")?;
            let field = match raw.vec("model.center_matrix")? {
                Some(m) => AffineField::new(center, m)?,
                None => AffineField::constant(center),
            };
            let radius = raw.f64("model.radius")?.ok_or_else(|| missing("model.radius"))?;
            Arc::new(BallForm::new(field, radius, raw.f64("model.radius_slope")?.unwrap_or(0.0))?)
        }
        "box" => {
            let lower = req_vec(raw, "model.lower")?;
            let upper = req_vec(raw, "model.upper")?;
            let gains = match raw.str("model.gains") {
                Some(g) => g.split(',').map(|s| parse_gain("model.gains", s)).collect::<CliResult<Vec<_>>>()?,
                None => vec![Gain::Constant(1.0); lower.len()],
            };
            Arc::new(BoxForm::new(lower, upper, gains)?)
        }
        "polytope" => {
            let text = raw.str("model.vertices").ok_or_else(|| missing("model.vertices"))?;
            let vertices = text
                .split(';')
                .map(|v| parse_vec("model.vertices", v).map(AffineField::constant))
                .collect::<CliResult<Vec<_>>>()?;
            Arc::new(PolytopeForm::new(vertices)?)
        }
        other => return Err(bad("model.form", other, "expected ball, box or polytope")),
    };
    if let Some(n) = raw.usize("model.dim")? {
        if n != dynamics.dim() {
            return Err(bad("model.dim", &n.to_string(), "disagrees with the form parameters"));
        }
    }
    Ok(InclusionModel::new(format!("inline-{form}"), dynamics, placeholder)?)
}

/// Provided constants override the model's; `constants.estimate = true`
/// fills the rest by sampling the grid box.
fn apply_constants(raw: &RawConfig, model: InclusionModel) -> CliResult<InclusionModel> {
    use mintime::model::Constant;
    let mut c = *model.constants();
    let inline = model.name().starts_with("inline-");
    for (key, slot) in [
        ("constants.K", &mut c.lipschitz),
        ("constants.K1", &mut c.argmax_lipschitz),
        ("constants.K2", &mut c.growth),
        ("constants.c0", &mut c.semiconvexity),
    ] {
        match raw.f64(key)? {
            Some(v) => *slot = Constant::provided(v),
            None if inline && raw.bool("constants.estimate")? != Some(true) => return Err(missing(key)),
            None => {}
        }
    }
    if let Some(r) = raw.f64("constants.R")? {
        c.inner_radius = Some(Constant::provided(r));
    }
    let model = model.with_constants(c)?;
    if raw.bool("constants.estimate")? == Some(true) {
        let lower = req_vec(raw, "grid.lower").or_else(|e| {
            raw.str("scenario").and_then(|n| scenario(n).ok()).map(|s| s.lower).ok_or(e)
        })?;
        let upper = req_vec(raw, "grid.upper").or_else(|e| {
            raw.str("scenario").and_then(|n| scenario(n).ok()).map(|s| s.upper).ok_or(e)
        })?;
        let samples = raw.usize("constants.samples")?.unwrap_or(2000);
        let seed = raw.u64("seed")?.unwrap_or(0);
        let est = mintime::model::estimate_constants(&model, &lower, &upper, samples, seed)?;
        return Ok(model.with_constants(est)?);
    }
    Ok(model)
}

fn build_target(raw: &RawConfig, dim: usize) -> CliResult<TargetSet> {
    let kind = raw.str("target.kind").unwrap();
    let rho0 = raw.positive("target.rho0")?;
    let shape: Arc<dyn mintime::target::TargetShape> = match kind {
        "ball-complement" | "ball" => {
            let center = raw.vec("target.center")?.unwrap_or_else(|| vec![0.0; dim]);
            let radius = raw.f64("target.radius")?.ok_or_else(|| missing("target.radius"))?;
            if radius < 0.0 {
                return Err(bad("target.radius", raw.str("target.radius").unwrap(), "must be nonnegative"));
            }
            if kind == "ball" {
                Arc::new(Ball { center, radius })
            } else {
                Arc::new(BallComplement { center, radius })
            }
        }
        "halfspace" => {
            let normal = req_vec(raw, "target.normal")?;
            Arc::new(HalfSpace::new(&normal, raw.f64("target.offset")?.unwrap_or(0.0))?)
        }
        other => return Err(bad("target.kind", other, "expected ball, ball-complement or halfspace")),
    };
    Ok(TargetSet::new(shape, rho0)?)
}
