use serde::Serialize;

use super::formulas::R_of_T;
use super::hypo::sample_indices;
use super::regularity::{discretization_slack, local_lipschitz};
use super::sets::clearance;
use crate::error::{Error, Result};
use crate::extremal::{extremal_ending_at, transport_adjoint, ExtremalArc};
use crate::linalg::{axpy, dot, neg, norm, normalize};
use crate::model::{Constants, InclusionModel};
use crate::rng::SplitMix64;
use crate::solver::{GridMask, ScalarField};

/// Tolerance on the per-step transport inequality.
pub const KEY_INEQUALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttainableOptions {
    pub samples: usize,
    pub theta_samples: usize,
    pub seed: u64,
    pub dt: f64,
    /// Multiplies the ball radius `r0·T`; values above 1 probe tightness.
    pub radius_scale: f64,
}

impl Default for AttainableOptions {
    fn default() -> Self {
        Self { samples: 200, theta_samples: 100, seed: 0, dt: 1e-3, radius_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerBallRecord {
    pub index: usize,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub point: Vec<f64>,
    /// Unit `p̄(T)`.
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub adjoint: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub center: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub radius: f64,
    /// Distance from the center to the nearest grid node outside the set.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub clearance: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub slack: f64,
    pub pass: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportCheck {
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub theta: Vec<f64>,
    /// Boundary node whose arc carries the transport.
    pub index: usize,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub endpoint: Vec<f64>,
    /// Smallest `lhs − rhs` of the transport inequality over the steps.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub min_margin: f64,
    pub steps: usize,
    pub member: bool,
    pub pass: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttainableReport {
    #[serde(rename = "T", serialize_with = "crate::io::serialize_g12")]
    pub horizon: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub r0: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub pass_fraction: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub transport_pass_fraction: f64,
    pub balls: Vec<InnerBallRecord>,
    pub transports: Vec<TransportCheck>,
}

/// Outward unit normal of `{T ≤ t}` at a node and the extremal ending there.
fn boundary_arc(model: &InclusionModel, field: &ScalarField, x: &[f64], horizon: f64, dt: f64) -> Result<(Vec<f64>, ExtremalArc)> {
    let p = normalize(&field.gradient(x))
        .ok_or_else(|| Error::DegenerateCovector(format!("flat field at {x:?}")))?;
    let arc = extremal_ending_at(model, x, &p, horizon, dt)?;
    Ok((p, arc))
}

fn transport_check(
    model: &InclusionModel,
    field: &ScalarField,
    arc: &ExtremalArc,
    theta: &[f64],
    r0: f64,
    inner_radius: f64,
    horizon: f64,
    slack: f64,
    dt: f64,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    let tr = transport_adjoint(model, arc, theta, dt)?;
    let ys = tr.y_theta(r0);
    let mut margin = f64::INFINITY;
    for (k, y) in ys.iter().enumerate() {
        let p = &tr.adjoints[k];
        let mut w = tr.y_theta_dot(model, r0, k)?;
        let f = model.fp(y, &neg(p));
        for i in 0..w.len() {
            w[i] += f[i];
        }
        let lhs = -dot(p, &w) / norm(p);
        let rhs = dot(&w, &w) / (2.0 * inner_radius);
        margin = margin.min(lhs - rhs);
    }
    let end = ys.last().unwrap().clone();
    let member = field.interpolate(&end) <= horizon + slack;
    Ok((end, margin, ys.len(), member))
}

/// Inner balls of radius `r0·T` at boundary nodes of `{T_rev ≤ T}`, with
/// `r0 = R(T)`, plus the transported-curve construction of their points.
pub fn certify_attainable_inner_ball(
    model: &InclusionModel,
    field_rev: &ScalarField,
    horizon: f64,
    constants: &Constants,
    inner_radius: f64,
    opts: &AttainableOptions,
) -> Result<AttainableReport> {
    if model.dim() != field_rev.grid().dim() {
        return Err(Error::Input("model and field dimensions differ".into()));
    }
    if !(opts.radius_scale > 0.0 && opts.dt > 0.0) {
        return Err(Error::Input("radius_scale and dt must be positive".into()));
    }
    let r0 = R_of_T(constants, inner_radius, horizon)?
        .ok_or_else(|| Error::OutOfRange(format!("R(T) is undefined at T = {horizon}: exp(-3KT) <= 2c0RT^2")))?;
    let grid = field_rev.grid();
    let h = grid.h();
    let inside = (0..grid.len()).map(|i| field_rev.get(i) <= horizon).collect();
    let set = GridMask::new(grid.clone(), inside)?;
    let boundary = set.boundary();
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary(format!("{{T <= {horizon}}} has no boundary nodes on the grid")));
    }
    let picked = sample_indices(&boundary, opts.samples, opts.seed);
    let r0t = r0 * horizon;
    let radius = opts.radius_scale * r0t;

    let mut arcs = Vec::with_capacity(picked.len());
    let mut balls = Vec::with_capacity(picked.len());
    for &idx in &picked {
        let x = grid.point(idx);
        let slack = discretization_slack(h, local_lipschitz(field_rev, idx));
        let mut rec = InnerBallRecord {
            index: idx,
            point: x.clone(),
            adjoint: Vec::new(),
            center: Vec::new(),
            radius,
            clearance: 0.0,
            slack,
            pass: false,
            failure: None,
        };
        match boundary_arc(model, field_rev, &x, horizon, opts.dt) {
            Ok((p, arc)) => {
                rec.center = axpy(&x, -r0t, &p);
                rec.clearance = clearance(&set, &rec.center, radius + h);
                rec.pass = rec.clearance >= radius - slack;
                rec.adjoint = p;
                arcs.push(Some((arc, slack)));
            }
            Err(e) => {
                rec.failure = Some(e.to_string());
                arcs.push(None);
            }
        }
        balls.push(rec);
    }

    let mut rng = SplitMix64::new(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut transports = Vec::with_capacity(opts.theta_samples);
    for k in 0..opts.theta_samples {
        let theta = rng.point_in_unit_ball(model.dim());
        let slot = k % picked.len();
        let mut chk = TransportCheck {
            theta: theta.clone(),
            index: picked[slot],
            endpoint: Vec::new(),
            min_margin: f64::NEG_INFINITY,
            steps: 0,
            member: false,
            pass: false,
            failure: None,
        };
        let res = match &arcs[slot] {
            Some((arc, slack)) => {
                transport_check(model, field_rev, arc, &theta, r0, inner_radius, horizon, *slack, opts.dt)
            }
            None => Err(Error::Integration("no extremal at this boundary node".into())),
        };
        match res {
            Ok((end, margin, steps, member)) => {
                chk.endpoint = end;
                chk.min_margin = margin;
                chk.steps = steps;
                chk.member = member;
                chk.pass = member && margin >= -KEY_INEQUALITY_TOL;
            }
            Err(e) => chk.failure = Some(e.to_string()),
        }
        transports.push(chk);
    }

    let frac = |n: usize, m: usize| if m == 0 { 1.0 } else { n as f64 / m as f64 };
    Ok(AttainableReport {
        horizon,
        r0,
        pass_fraction: frac(balls.iter().filter(|b| b.pass).count(), balls.len()),
        transport_pass_fraction: frac(transports.iter().filter(|t| t.pass).count(), transports.len()),
        balls,
        transports,
    })
}
