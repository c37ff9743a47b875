//! Pontryagin extremals: the coupled state–adjoint system
//! `ẋ = −F_{−p}(x)`, `ṗ = −∂_x H(x,−p)`, frozen-adjoint flows and the
//! transported adjoint `z̄`.

use std::path::Path;

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::io::write_csv;
use crate::linalg::{dist, dot, neg, norm};
use crate::model::{fd_step, Constants, InclusionModel};

/// Relative tolerance of the adjoint norm and constancy diagnostics.
pub const DIAGNOSTIC_RTOL: f64 = 1e-6;

/// Sampled state path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when the path left the supplied domain box; integration stops
    /// at the first sample outside.
    pub escaped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalArc {
    /// Increasing sample times on `[0, r]`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub adjoints: Vec<Vec<f64>>,
    /// `λ = H(x̄(r), −p̄(r))`.
    pub lambda: f64,
    /// Sample indices whose step starts at a point where the one-sided
    /// `∂_x H` quotients disagree strongly.
    pub kinks: Vec<usize>,
}

/// Splits `[0, span]` into steps of `dt`, shortening the last one.
fn step_times(span: f64, dt: f64) -> Vec<f64> {
    let mut t = vec![0.0];
    let full = (span / dt).floor() as usize;
    for k in 1..=full {
        t.push(k as f64 * dt);
    }
    if span - *t.last().unwrap() > 1e-12 * dt.max(span) {
        t.push(span);
    } else if let Some(last) = t.last_mut() {
        *last = span;
    }
    t
}

fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("step must be positive, got {dt}")))
    }
}

/// `(ẋ, ṗ) = (−F_{−p}(x), −∂_x H(x,−p))`.
fn extremal_rhs(model: &InclusionModel, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.iter().all(|&c| c == 0.0) || !p.iter().all(|c| c.is_finite()) {
        return Err(Error::Integration(format!("adjoint degenerated to {p:?}")));
    }
    let mp = neg(p);
    let xdot = neg(&model.fp(x, &mp));
    let pdot = neg(&model.grad_x(x, &mp));
    Ok((xdot, pdot))
}

fn lin(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

fn rk4_combine(a: &[f64], h: f64, k: [&[f64]; 4]) -> Vec<f64> {
    (0..a.len())
        .map(|i| a[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect()
}

/// One RK4 step of the extremal system with signed step `h`.
fn extremal_step(model: &InclusionModel, x: &[f64], p: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (kx1, kp1) = extremal_rhs(model, x, p)?;
    let (kx2, kp2) = extremal_rhs(model, &lin(x, h / 2.0, &kx1), &lin(p, h / 2.0, &kp1))?;
    let (kx3, kp3) = extremal_rhs(model, &lin(x, h / 2.0, &kx2), &lin(p, h / 2.0, &kp2))?;
    let (kx4, kp4) = extremal_rhs(model, &lin(x, h, &kx3), &lin(p, h, &kp3))?;
    Ok((rk4_combine(x, h, [&kx1, &kx2, &kx3, &kx4]), rk4_combine(p, h, [&kp1, &kp2, &kp3, &kp4])))
}

fn is_kink(model: &InclusionModel, x: &[f64], p: &[f64]) -> bool {
    let mp = neg(p);
    let (back, fwd) = model.one_sided_grad_x(x, &mp, fd_step(x));
    let central = model.grad_x(x, &mp);
    let floor = 1e-9 * norm(p);
    (0..x.len()).any(|i| {
        let gap = (fwd[i] - back[i]).abs();
        gap > floor && gap > 10.0 * central[i].abs()
    })
}

/// Integrates the extremal system from `(x0, p0)` at time `t0` to `t1`
/// (either direction). Returns samples in integration order.
fn integrate_extremal(
    model: &InclusionModel,
    x0: &[f64],
    p0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<usize>)> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let offsets = step_times((t1 - t0).abs(), dt);
    let mut times = vec![t0];
    let mut xs = vec![x0.to_vec()];
    let mut ps = vec![p0.to_vec()];
    let mut kinks = Vec::new();
    for k in 1..offsets.len() {
        let h = dir * (offsets[k] - offsets[k - 1]);
        let (x, p) = (&xs[k - 1], &ps[k - 1]);
        if is_kink(model, x, p) {
            kinks.push(k - 1);
        }
        let (nx, np) = extremal_step(model, x, p, h)?;
        times.push(t0 + dir * offsets[k]);
        xs.push(nx);
        ps.push(np);
    }
    Ok((times, xs, ps, kinks))
}

fn gronwall_guard(times: &[f64], ps: &[Vec<f64>], k: f64) -> Result<()> {
    let p0 = norm(&ps[0]);
    for (t, p) in times.iter().zip(ps) {
        let s = (t - times[0]).abs();
        let ratio = norm(p) / p0;
        let (lo, hi) = ((-k * s).exp(), (k * s).exp());
        if ratio < lo * (1.0 - DIAGNOSTIC_RTOL) || ratio > hi * (1.0 + DIAGNOSTIC_RTOL) {
            return Err(Error::Integration(format!(
                "adjoint norm ratio {ratio} at s={s} outside [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// Shoots the reversed extremal from a target point `x̄1` with initial
/// adjoint `p̄(0) = ν`, the outward unit normal of the target there.
pub fn shoot_extremal(model: &InclusionModel, x_terminal: &[f64], nu: &[f64], r: f64, dt: f64) -> Result<ExtremalArc> {
    let n = model.dim();
    if x_terminal.len() != n || nu.len() != n {
        return Err(Error::Input(format!("expected vectors of length {n}")));
    }
    ensure_finite("terminal point", x_terminal)?;
    ensure_finite("normal", nu)?;
    if (norm(nu) - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("normal must be a unit vector, |nu| = {}", norm(nu))));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("horizon must be nonnegative, got {r}")));
    }
    check_step(dt)?;
    let (times, states, adjoints, kinks) = integrate_extremal(model, x_terminal, nu, 0.0, r, dt)?;
    gronwall_guard(&times, &adjoints, model.constants().k())?;
    let lambda = model.h(states.last().unwrap(), &neg(adjoints.last().unwrap()));
    Ok(ExtremalArc { times, states, adjoints, lambda, kinks })
}

/// Reconstructs the extremal on `[0, horizon]` that ends at `x̄` with
/// adjoint `p̄(horizon)`, integrating backward in time.
pub fn extremal_ending_at(model: &InclusionModel, x_end: &[f64], p_end: &[f64], horizon: f64, dt: f64) -> Result<ExtremalArc> {
    ensure_finite("end point", x_end)?;
    ensure_finite("end adjoint", p_end)?;
    check_step(dt)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Input(format!("horizon must be nonnegative, got {horizon}")));
    }
    let (mut times, mut states, mut adjoints, kinks) = integrate_extremal(model, x_end, p_end, horizon, 0.0, dt)?;
    gronwall_guard(&times, &adjoints, model.constants().k())?;
    times.reverse();
    states.reverse();
    adjoints.reverse();
    let m = times.len();
    let kinks = kinks.into_iter().rev().map(|k| m - 1 - k).collect();
    // Clamp roundoff at the reversed start.
    times[0] = 0.0;
    let lambda = model.h(x_end, &neg(p_end));
    Ok(ExtremalArc { times, states, adjoints, lambda, kinks })
}

/// `ρ(s) = ρ0/(1 + 2c0ρ0 s)·e^{−(K+2K1)s}`.
pub fn rho_of_s(constants: &Constants, rho0: f64, s: f64) -> Result<f64> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::Input(format!("rho0 must be positive, got {rho0}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Input(format!("s must be nonnegative, got {s}")));
    }
    let (k, k1, c0) = (constants.k(), constants.k1(), constants.c0());
    Ok(rho0 / (1.0 + 2.0 * c0 * rho0 * s) * (-(k + 2.0 * k1) * s).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallReport {
    /// Largest relative violation of the two-sided norm sandwich.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub sandwich_excess: f64,
    /// Largest violation of `|p(t2)−p(t1)| ≤ K e^{KΔ}Δ|p(t2)|`, relative
    /// to `|p(t2)|`.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub increment_excess: f64,
}

impl GronwallReport {
    pub fn holds(&self, rtol: f64) -> bool {
        self.sandwich_excess <= rtol && self.increment_excess <= rtol
    }
}

/// Checks the adjoint bounds over all sample pairs of a path.
pub fn gronwall_report(times: &[f64], vectors: &[Vec<f64>], k: f64) -> GronwallReport {
    let norms: Vec<f64> = vectors.iter().map(|v| norm(v)).collect();
    let mut sandwich: f64 = f64::NEG_INFINITY;
    let mut increment: f64 = f64::NEG_INFINITY;
    for j in 0..times.len() {
        for i in 0..=j {
            let d = times[j] - times[i];
            let (n1, n2) = (norms[i], norms[j]);
            let grow = (k * d).exp();
            sandwich = sandwich.max((n1 - grow * n2) / (grow * n2)).max((n2 / grow - n1) / n1);
            let bound = k * grow * d * n2;
            increment = increment.max((dist(&vectors[i], &vectors[j]) - bound) / n2);
        }
    }
    GronwallReport { sandwich_excess: sandwich, increment_excess: increment }
}

impl ExtremalArc {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn end_adjoint(&self) -> &[f64] {
        self.adjoints.last().unwrap()
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory { times: self.times.clone(), states: self.states.clone(), escaped: false }
    }

    pub fn gronwall(&self, k: f64) -> GronwallReport {
        gronwall_report(&self.times, &self.adjoints, k)
    }

    /// `ρ(s)` at every sample time.
    pub fn radius_profile(&self, constants: &Constants, rho0: f64) -> Result<Vec<f64>> {
        self.times.iter().map(|&s| rho_of_s(constants, rho0, s)).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut h = vec!["s".to_string()];
        h.extend((1..=n).map(|i| format!("x{i}")));
        h.extend((1..=n).map(|i| format!("p{i}")));
        h
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|k| {
                let mut r = vec![self.times[k]];
                r.extend(&self.states[k]);
                r.extend(&self.adjoints[k]);
                r
            })
            .collect();
        write_csv(path, &self.header(), &rows)
    }
}

/// Integrates `ẋ = F_{p(t)}(x)` by RK4. Stops early, flagging `escaped`,
/// if the state leaves `domain`.
pub fn integrate_frozen_flow(
    model: &InclusionModel,
    p_arc: &dyn Fn(f64) -> Vec<f64>,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    domain: Option<(&[f64], &[f64])>,
) -> Result<Trajectory> {
    ensure_finite("initial state", x0)?;
    check_step(dt)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Input(format!("horizon must be nonnegative, got {horizon}")));
    }
    let f = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let p = p_arc(t);
        if p.iter().all(|&c| c == 0.0) {
            return Err(Error::DegenerateCovector(format!("covector vanishes at t={t}")));
        }
        Ok(model.fp(x, &p))
    };
    let inside = |x: &[f64]| {
        domain.map_or(true, |(lo, hi)| x.iter().enumerate().all(|(i, &c)| c >= lo[i] && c <= hi[i]))
    };
    let times = step_times(horizon, dt);
    let mut states = vec![x0.to_vec()];
    for k in 1..times.len() {
        let (t, h) = (times[k - 1], times[k] - times[k - 1]);
        let x = &states[k - 1];
        let k1 = f(t, x)?;
        let k2 = f(t + h / 2.0, &lin(x, h / 2.0, &k1))?;
        let k3 = f(t + h / 2.0, &lin(x, h / 2.0, &k2))?;
        let k4 = f(t + h, &lin(x, h, &k3))?;
        let nx = rk4_combine(x, h, [&k1, &k2, &k3, &k4]);
        let ok = inside(&nx);
        states.push(nx);
        if !ok {
            let mut times = times;
            times.truncate(k + 1);
            return Ok(Trajectory { times, states, escaped: true });
        }
    }
    Ok(Trajectory { times, states, escaped: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Largest `|y(t)| − ((|x0|+1)e^{K2 t} − 1)`; nonpositive when the
    /// bound holds.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub norm_slack: f64,
    /// Largest `|y(t) − x0| − (|x0|+1)(e^{K2 t} − 1)`.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub displacement_slack: f64,
    pub pass: bool,
}

/// Checks the linear-growth bounds along a trajectory of `ẋ ∈ F(x)`.
pub fn verify_growth_bounds(model: &InclusionModel, traj: &Trajectory) -> GrowthReport {
    let k2 = model.constants().k2();
    let x0 = &traj.states[0];
    let r0 = norm(x0) + 1.0;
    let t0 = traj.times[0];
    let mut norm_slack = f64::NEG_INFINITY;
    let mut displacement_slack = f64::NEG_INFINITY;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let g = (k2 * (t - t0)).exp();
        norm_slack = norm_slack.max(norm(y) - (r0 * g - 1.0));
        displacement_slack = displacement_slack.max(dist(y, x0) - r0 * (g - 1.0));
    }
    let tol = 1e-8 * r0 * (k2 * (traj.times.last().unwrap() - t0)).exp();
    GrowthReport { norm_slack, displacement_slack, pass: norm_slack <= tol && displacement_slack <= tol }
}

/// Samples of the transported adjoint `z̄` solving
/// `ż = −⟨ṗ,z⟩/|p|²·p`, `z̄(T) = p̄(T)/|p̄(T)| − θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportArc {
    /// Increasing sample times on `[0, T]`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub adjoints: Vec<Vec<f64>>,
    pub z_values: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

type Aug = (Vec<f64>, Vec<f64>, Vec<f64>);

fn transport_rhs(model: &InclusionModel, x: &[f64], p: &[f64], z: &[f64]) -> Result<Aug> {
    let (xd, pd) = extremal_rhs(model, x, p)?;
    let c = -dot(&pd, z) / dot(p, p);
    let zd = p.iter().map(|v| c * v).collect();
    Ok((xd, pd, zd))
}

/// Transports `p̄(T)/|p̄(T)| − θ` backward along the arc, re-integrating the
/// arc jointly with `z̄`.
pub fn transport_adjoint(model: &InclusionModel, arc: &ExtremalArc, theta: &[f64], dt: f64) -> Result<TransportArc> {
    check_step(dt)?;
    let n = model.dim();
    if theta.len() != n {
        return Err(Error::Input(format!("theta must have length {n}")));
    }
    ensure_finite("theta", theta)?;
    if norm(theta) >= 1.0 {
        return Err(Error::Input(format!("theta must lie in the open unit ball, |theta| = {}", norm(theta))));
    }
    let t_end = arc.horizon();
    let p_end = arc.end_adjoint().to_vec();
    let pn = norm(&p_end);
    let z_end: Vec<f64> = (0..n).map(|i| p_end[i] / pn - theta[i]).collect();
    let offsets = step_times(t_end, dt);

    let mut times = vec![t_end];
    let mut xs = vec![arc.end_state().to_vec()];
    let mut ps = vec![p_end.clone()];
    let mut zs = vec![z_end.clone()];
    for k in 1..offsets.len() {
        let h = -(offsets[k] - offsets[k - 1]);
        let (x, p, z) = (&xs[k - 1], &ps[k - 1], &zs[k - 1]);
        let (a1, b1, c1) = transport_rhs(model, x, p, z)?;
        let (a2, b2, c2) = transport_rhs(model, &lin(x, h / 2.0, &a1), &lin(p, h / 2.0, &b1), &lin(z, h / 2.0, &c1))?;
        let (a3, b3, c3) = transport_rhs(model, &lin(x, h / 2.0, &a2), &lin(p, h / 2.0, &b2), &lin(z, h / 2.0, &c2))?;
        let (a4, b4, c4) = transport_rhs(model, &lin(x, h, &a3), &lin(p, h, &b3), &lin(z, h, &c3))?;
        xs.push(rk4_combine(x, h, [&a1, &a2, &a3, &a4]));
        ps.push(rk4_combine(p, h, [&b1, &b2, &b3, &b4]));
        zs.push(rk4_combine(z, h, [&c1, &c2, &c3, &c4]));
        times.push(t_end - offsets[k]);
    }
    let invariant = dot(&z_end, &p_end);
    let scale = norm(&z_end) * pn;
    for (z, p) in zs.iter().zip(&ps) {
        let drift = (dot(z, p) - invariant).abs();
        if drift > DIAGNOSTIC_RTOL * scale {
            return Err(Error::Integration(format!("<z,p> drifted by {drift} (scale {scale})")));
        }
    }
    times.reverse();
    xs.reverse();
    ps.reverse();
    zs.reverse();
    times[0] = 0.0;
    Ok(TransportArc { times, states: xs, adjoints: ps, z_values: zs, theta: theta.to_vec() })
}

impl TransportArc {
    /// `ȳ_θ(s) = x̄(s) − r0·s·z̄(s)`.
    pub fn y_theta(&self, r0: f64) -> Vec<Vec<f64>> {
        (0..self.times.len())
            .map(|k| lin(&self.states[k], -r0 * self.times[k], &self.z_values[k]))
            .collect()
    }

    /// `ẏ_θ(s) = −F_{−p̄}(x̄) − r0 z̄ − r0 s ż̄` at sample `k`.
    pub fn y_theta_dot(&self, model: &InclusionModel, r0: f64, k: usize) -> Result<Vec<f64>> {
        let (x, p, z, s) = (&self.states[k], &self.adjoints[k], &self.z_values[k], self.times[k]);
        let (xd, _, zd) = transport_rhs(model, x, p, z)?;
        Ok((0..x.len()).map(|i| xd[i] - r0 * z[i] - r0 * s * zd[i]).collect())
    }

    /// Largest relative drift of `⟨z̄,p̄⟩` from its terminal value.
    pub fn constancy_drift(&self) -> f64 {
        let (z, p) = (self.z_values.last().unwrap(), self.adjoints.last().unwrap());
        let inv = dot(z, p);
        let scale = (norm(z) * norm(p)).max(f64::MIN_POSITIVE);
        self.z_values
            .iter()
            .zip(&self.adjoints)
            .map(|(z, p)| (dot(z, p) - inv).abs() / scale)
            .fold(0.0, f64::max)
    }
}
