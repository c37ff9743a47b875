use rayon::prelude::*;
use serde::Serialize;

use super::certificate::{within_reach, BallScan, SphereCertificate};
use super::formulas::rho_T_of;
use super::regularity::{discretization_slack, local_lipschitz};
use crate::error::{Error, Result};
use crate::extremal::shoot_extremal;
use crate::linalg::{axpy, neg, norm, normalize};
use crate::model::{eval_hamiltonian, Constants, InclusionModel};
use crate::rng::SplitMix64;
use crate::solver::{GridMask, ScalarField};
use crate::target::TargetSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypoOptions {
    pub samples: usize,
    pub seed: u64,
    pub dt: f64,
    /// Ladder rungs below each graph point.
    pub rungs: usize,
    /// Rung spacing in cells.
    pub rung_cells: f64,
    pub velocity_samples: usize,
    /// Backtracking step limit; `None` scales with the grid.
    pub max_steps: Option<usize>,
}

impl Default for HypoOptions {
    fn default() -> Self {
        Self { samples: 500, seed: 0, dt: 1e-3, rungs: 5, rung_cells: 5.0, velocity_samples: 32, max_steps: None }
    }
}

/// Outcome at one sampled node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypoRecord {
    pub index: usize,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub point: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub r: f64,
    #[serde(serialize_with = "crate::io::serialize_g12_opt")]
    pub lambda: Option<f64>,
    /// Where the backtracked trajectory met the target.
    #[serde(skip)]
    pub terminal: Option<Vec<f64>>,
    pub certificate: Option<SphereCertificate>,
    pub failure: Option<String>,
}

impl HypoRecord {
    pub fn passed(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.pass)
    }
}

/// Follows the steepest discrete descent of `field` under the dynamics
/// until the target is reached; returns the crossing point.
pub fn backtrack_to_target(
    field: &ScalarField,
    model: &InclusionModel,
    target: &TargetSet,
    x0: &[f64],
    velocity_samples: usize,
    max_steps: usize,
) -> Result<Vec<f64>> {
    let h = field.grid().h();
    let mut x = x0.to_vec();
    if target.contains(&x) {
        return Ok(x);
    }
    for _ in 0..max_steps {
        let tx = field.interpolate(&x);
        // (descent rate, foot, crossed)
        let mut best: Option<(f64, Vec<f64>, bool)> = None;
        for v in model.sample(&x, velocity_samples) {
            let speed = norm(&v);
            if speed < 1e-12 {
                continue;
            }
            let tau = h / speed;
            let y = axpy(&x, tau, &v);
            let (rate, foot, crossed) = if target.contains(&y) {
                let c = target.bisect_boundary(&y, &x, 40);
                let t = norm(&crate::linalg::sub(&c, &x)) / speed;
                (tx / t.max(1e-300), c, true)
            } else {
                ((tx - field.interpolate(&y)) / tau, y, false)
            };
            if best.as_ref().map_or(true, |b| rate > b.0) {
                best = Some((rate, foot, crossed));
            }
        }
        let Some((rate, foot, crossed)) = best else {
            return Err(Error::Integration("no nonzero velocity".into()));
        };
        if crossed {
            return Ok(foot);
        }
        if !(rate > 0.0) {
            return Err(Error::Integration(format!("no descent direction at {x:?}")));
        }
        if !field.grid().contains(&foot) {
            return Err(Error::Integration(format!("backtracking left the grid at {foot:?}")));
        }
        x = foot;
    }
    Err(Error::Integration(format!("target not reached within {max_steps} steps")))
}

fn default_steps(field: &ScalarField) -> usize {
    let g = field.grid();
    let extent: f64 = (0..g.dim()).map(|i| g.upper()[i] - g.lower()[i]).sum();
    (20.0 * extent / g.h()) as usize + 100
}

fn certify_one(
    field: &ScalarField,
    mask: &GridMask,
    model: &InclusionModel,
    target: &TargetSet,
    constants: &Constants,
    rho0: f64,
    opts: &HypoOptions,
    idx: usize,
) -> HypoRecord {
    let grid = field.grid();
    let point = grid.point(idx);
    let r = field.get(idx);
    let mut rec = HypoRecord { index: idx, point, r, lambda: None, terminal: None, certificate: None, failure: None };
    let steps = opts.max_steps.unwrap_or_else(|| default_steps(field));
    let res = (|| -> Result<(Vec<f64>, f64, SphereCertificate)> {
        let terminal = backtrack_to_target(field, model, target, &rec.point, opts.velocity_samples, steps)?;
        let nu = target
            .normal(&terminal)
            .and_then(|n| normalize(&n))
            .ok_or_else(|| Error::DegenerateCovector(format!("no target normal at {terminal:?}")))?;
        let arc = shoot_extremal(model, &terminal, &nu, r, opts.dt)?;
        let p = arc.end_adjoint();
        let lambda = eval_hamiltonian(model, &rec.point, &neg(p))?;
        let mut n = neg(p);
        n.push(lambda);
        let normal = normalize(&n).ok_or_else(|| Error::DegenerateCovector("zero hypograph normal".into()))?;
        let radius = rho_T_of(&rec.point, r, constants, rho0)?;
        let slack = discretization_slack(grid.h(), local_lipschitz(field, idx));
        Ok((terminal, lambda, hypograph_scan(field, mask, idx, &normal, radius, slack, opts)))
    })();
    match res {
        Ok((terminal, lambda, cert)) => {
            rec.terminal = Some(terminal);
            rec.lambda = Some(lambda);
            rec.certificate = Some(cert);
        }
        Err(e) => rec.failure = Some(e.to_string()),
    }
    rec
}

/// Scans `(y, T(y) − k·δ)` for masked nodes `y` near the base, `k = 0..=rungs`.
fn hypograph_scan(
    field: &ScalarField,
    mask: &GridMask,
    idx: usize,
    normal: &[f64],
    radius: f64,
    slack: f64,
    opts: &HypoOptions,
) -> SphereCertificate {
    let grid = field.grid();
    let mut base = grid.point(idx);
    base.push(field.get(idx));
    let delta = opts.rung_cells * grid.h();
    let reach = (2.0 * radius / grid.h()).ceil() as usize + 1;
    let mut scan = BallScan::new(&base, normal, radius);
    let mut y = Vec::with_capacity(base.len());
    for j in grid.neighborhood(idx, reach) {
        if j != idx && !mask.contains(j) {
            continue;
        }
        y.clear();
        y.extend(grid.point(j));
        y.push(field.get(j));
        let top = y[y.len() - 1];
        for k in 0..=opts.rungs {
            let last = y.len() - 1;
            y[last] = top - k as f64 * delta;
            if j == idx || within_reach(&y, &base, radius) {
                scan.push(&y);
            }
        }
    }
    scan.finish(radius, slack)
}

fn check_inputs(field: &ScalarField, mask: &GridMask, model: &InclusionModel, target: &TargetSet, rho0: f64) -> Result<()> {
    if mask.grid() != field.grid() {
        return Err(Error::Input("mask and field live on different grids".into()));
    }
    if model.dim() != field.grid().dim() || target.dim() != model.dim() {
        return Err(Error::Input("model, target and field dimensions differ".into()));
    }
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::Input(format!("rho0 must be positive, got {rho0}")));
    }
    Ok(())
}

/// Exterior-sphere certificates of the hypograph of `field` at given nodes.
#[allow(clippy::too_many_arguments)]
pub fn certify_hypograph_at(
    field: &ScalarField,
    mask: &GridMask,
    model: &InclusionModel,
    target: &TargetSet,
    constants: &Constants,
    rho0: f64,
    opts: &HypoOptions,
    indices: &[usize],
) -> Result<Vec<HypoRecord>> {
    check_inputs(field, mask, model, target, rho0)?;
    constants.validate()?;
    Ok(indices
        .par_iter()
        .map(|&i| certify_one(field, mask, model, target, constants, rho0, opts, i))
        .collect())
}

/// Certificates at `opts.samples` seeded masked nodes (all of them if fewer),
/// in increasing index order.
pub fn certify_hypograph_exterior_sphere(
    field: &ScalarField,
    mask: &GridMask,
    model: &InclusionModel,
    target: &TargetSet,
    constants: &Constants,
    rho0: f64,
    opts: &HypoOptions,
) -> Result<Vec<HypoRecord>> {
    let pool: Vec<usize> = mask.indices().collect();
    if pool.is_empty() {
        return Err(Error::EmptyBoundary("continuity mask is empty".into()));
    }
    let picked = sample_indices(&pool, opts.samples, opts.seed);
    certify_hypograph_at(field, mask, model, target, constants, rho0, opts, &picked)
}

/// `k` distinct entries of `pool` by a seeded partial Fisher–Yates shuffle,
/// returned sorted.
pub fn sample_indices(pool: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut v = pool.to_vec();
    if k < v.len() {
        let mut rng = SplitMix64::new(seed);
        for i in 0..k {
            let j = i + rng.below(v.len() - i);
            v.swap(i, j);
        }
        v.truncate(k);
    }
    v.sort_unstable();
    v
}
