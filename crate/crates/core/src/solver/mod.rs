//! Minimum time functions on rectangular grids by semi-Lagrangian
//! Gauss–Seidel sweeping.

mod field;
mod grid;
mod mask;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{direction_fan, dist, norm};
use crate::model::{Dynamics, InclusionModel};
use crate::target::TargetSet;

pub use field::ScalarField;
pub use grid::{Grid, MAX_DIM};
pub use mask::{restrict_continuity_region, sublevel_set, GridMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub cap: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    /// Covector directions whose maximizers join the velocity sample.
    pub velocity_samples: usize,
    /// Golden-section refinement of the best direction (planar strictly
    /// convex dynamics only).
    pub refine: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { cap: 10.0, tol: 1e-9, max_sweeps: 10_000, velocity_samples: 32, refine: true }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return Err(Error::Config(format!("solver.cap must be positive, got {}", self.cap)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("solver.tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("solver.max_sweeps must be positive".into()));
        }
        if self.velocity_samples == 0 {
            return Err(Error::Config("solver.velocity_samples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ScalarField,
    pub sweeps: usize,
    /// Largest change during the final sweep.
    pub residual: f64,
    pub converged: bool,
}

/// Minimum time to reach `target` under `ẋ ∈ F(x)`:
/// `T(x) = min_v τ + T(x + τv)` over sampled `v ∈ F(x)`, `τ = h/|v|`.
pub fn solve_min_time(model: &InclusionModel, target: &TargetSet, grid: &Grid, opts: &SolveOptions) -> Result<Solution> {
    sweep(model, 1.0, target, grid, opts)
}

/// Time needed to reach each node from `target` along the reversed-time
/// inclusion, so that `A(S,T) = {T_rev ≤ T}`. Runs the sweep on `−F` with
/// foot points `x − τv`.
pub fn attainable_set(model: &InclusionModel, target: &TargetSet, grid: &Grid, opts: &SolveOptions) -> Result<Solution> {
    sweep(&model.reversed(), -1.0, target, grid, opts)
}

const GOLDEN_ITERS: usize = 24;

struct Sweeper<'a> {
    dynamics: &'a dyn Dynamics,
    sign: f64,
    target: &'a TargetSet,
    grid: &'a Grid,
    cap: f64,
    h: f64,
    fan: Vec<Vec<f64>>,
    refine_step: Option<f64>,
}

struct Scratch {
    x: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    verts: Vec<f64>,
}

impl<'a> Sweeper<'a> {
    fn new(model: &'a InclusionModel, sign: f64, target: &'a TargetSet, grid: &'a Grid, cap: f64, opts: &SolveOptions) -> Self {
        let n = grid.dim();
        // Polytope dynamics are covered exactly by their vertices.
        let planar_smooth = n == 2 && opts.refine && {
            let mut v = Vec::new();
            model.dynamics().vertices_into(grid.lower(), &mut v);
            v.is_empty()
        };
        Self {
            dynamics: model.dynamics().as_ref(),
            sign,
            target,
            grid,
            cap,
            h: grid.h(),
            fan: direction_fan(n, opts.velocity_samples),
            refine_step: planar_smooth.then(|| std::f64::consts::TAU / opts.velocity_samples as f64),
        }
    }

    /// Local fixed point `t = τ + w_self·t + Σ w_i T_i` for one velocity.
    fn candidate(&self, idx: usize, values: &[f64], s: &mut Scratch) -> f64 {
        let speed = norm(&s.v);
        let tau = self.h / speed.max(1e-9);
        if tau >= self.cap {
            return self.cap;
        }
        let n = s.x.len();
        for i in 0..n {
            s.y[i] = s.x[i] + self.sign * tau * s.v[i];
        }
        if self.target.contains(&s.y) {
            // Straight segment enters the target: exact crossing time.
            let (mut a, mut b) = (0.0, 1.0);
            let mut z = s.y.clone();
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                for i in 0..n {
                    z[i] = s.x[i] + self.sign * m * tau * s.v[i];
                }
                if self.target.contains(&z) {
                    b = m;
                } else {
                    a = m;
                }
            }
            return b * tau;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        if !field::locate(self.grid, &s.y, &mut base[..n], &mut frac[..n]) {
            return self.cap;
        }
        let strides = self.grid.strides();
        let mut rest = 0.0;
        let mut w_self = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut k = 0;
            for i in 0..n {
                if corner >> i & 1 == 1 {
                    w *= frac[i];
                    k += (base[i] + 1) * strides[i];
                } else {
                    w *= 1.0 - frac[i];
                    k += base[i] * strides[i];
                }
            }
            if k == idx {
                w_self += w;
            } else if w != 0.0 {
                rest += w * values[k];
            }
        }
        if w_self >= 1.0 - 1e-12 {
            return self.cap;
        }
        ((tau + rest) / (1.0 - w_self)).min(self.cap)
    }

    fn along(&self, idx: usize, values: &[f64], s: &mut Scratch, dir: &[f64]) -> f64 {
        self.dynamics.argmax_into(&s.x, dir, &mut s.v);
        self.candidate(idx, values, s)
    }

    fn update(&self, idx: usize, values: &[f64], s: &mut Scratch) -> f64 {
        self.grid.point_into(idx, &mut s.x);
        let mut best = self.cap;
        s.verts.clear();
        self.dynamics.vertices_into(&s.x, &mut s.verts);
        let n = s.x.len();
        let verts = std::mem::take(&mut s.verts);
        for v in verts.chunks(n) {
            s.v.copy_from_slice(v);
            best = best.min(self.candidate(idx, values, s));
        }
        s.verts = verts;

        let mut best_dir = None;
        for (k, d) in self.fan.iter().enumerate() {
            let t = self.along(idx, values, s, d);
            if t < best {
                best = t;
                best_dir = Some(k);
            }
        }
        if let (Some(step), Some(k)) = (self.refine_step, best_dir) {
            let theta = step * k as f64;
            best = best.min(self.golden(idx, values, s, theta - step, theta + step));
        }
        best
    }

    fn golden(&self, idx: usize, values: &[f64], s: &mut Scratch, mut a: f64, mut b: f64) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |th: f64, s: &mut Scratch| self.along(idx, values, s, &[th.cos(), th.sin()]);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = f(c, s);
        let mut fd = f(d, s);
        let mut best = fc.min(fd);
        for _ in 0..GOLDEN_ITERS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c, s);
                best = best.min(fc);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d, s);
                best = best.min(fd);
            }
        }
        best
    }

    /// Largest speed along the unit direction `e`, from the support
    /// function: `min_{⟨e,p⟩>0} H(x,p)/⟨e,p⟩`.
    fn radial_speed(&self, x: &[f64], e: &[f64]) -> f64 {
        let mut best = self.dynamics.hamiltonian(x, e);
        for p in direction_fan(x.len(), 256) {
            let ep = crate::linalg::dot(e, &p);
            if ep > 1e-3 {
                best = best.min(self.dynamics.hamiltonian(x, &p) / ep);
            }
        }
        best.max(0.0)
    }
}

fn sweep(model: &InclusionModel, sign: f64, target: &TargetSet, grid: &Grid, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    let n = grid.dim();
    if model.dim() != n || target.dim() != n {
        return Err(Error::Config(format!(
            "dimension mismatch: grid {n}, model {}, target {}",
            model.dim(),
            target.dim()
        )));
    }
    let cap = opts.cap;
    let mut values = vec![cap; grid.len()];
    let mut fixed = vec![false; grid.len()];
    let mut x = vec![0.0; n];
    for i in 0..grid.len() {
        grid.point_into(i, &mut x);
        if target.contains(&x) {
            values[i] = 0.0;
            fixed[i] = true;
        }
    }

    let sw = Sweeper::new(model, sign, target, grid, cap, opts);

    // Isolated target points: straight-line arrival times on nearby nodes.
    let mut seeded = false;
    for c in target.seeds() {
        if !grid.contains(&c) {
            continue;
        }
        seeded = true;
        for i in grid.neighborhood(grid.nearest(&c), 2) {
            if fixed[i] {
                continue;
            }
            grid.point_into(i, &mut x);
            let d = dist(&x, &c);
            let e: Vec<f64> = x.iter().zip(&c).map(|(a, b)| sign * (b - a) / d).collect();
            let speed = sw.radial_speed(&x, &e);
            if speed > 0.0 {
                values[i] = values[i].min(d / speed).min(cap);
            }
        }
    }
    if !seeded && !fixed.iter().any(|&f| f) {
        return Err(Error::Config("target does not meet the grid".into()));
    }

    let mut s = Scratch { x: vec![0.0; n], v: vec![0.0; n], y: vec![0.0; n], verts: Vec::new() };
    let counts = grid.counts().to_vec();
    let mut multi = vec![0usize; n];
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        let order = sweeps % (1 << n);
        sweeps += 1;
        let mut change: f64 = 0.0;
        for m in multi.iter_mut() {
            *m = 0;
        }
        'nodes: loop {
            let flat: usize = (0..n)
                .map(|i| {
                    let k = if order >> i & 1 == 1 { counts[i] - 1 - multi[i] } else { multi[i] };
                    k * grid.strides()[i]
                })
                .sum();
            if !fixed[flat] {
                let cur = values[flat];
                let new = sw.update(flat, &values, &mut s);
                if new < cur {
                    change = change.max(cur - new);
                    values[flat] = new;
                }
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    break 'nodes;
                }
                axis -= 1;
                multi[axis] += 1;
                if multi[axis] < counts[axis] {
                    break;
                }
                multi[axis] = 0;
            }
        }
        residual = change;
        if change <= opts.tol {
            break;
        }
    }
    let converged = residual <= opts.tol;
    Ok(Solution { field: ScalarField::new(grid.clone(), values, cap)?, sweeps, residual, converged })
}

/// `T(x) − min_v [τ + I(T)(x + τv)]` at node `idx`, for residual checks.
pub fn dp_residual(model: &InclusionModel, target: &TargetSet, field: &ScalarField, idx: usize, opts: &SolveOptions) -> f64 {
    let grid = field.grid();
    let n = grid.dim();
    let sw = Sweeper::new(model, 1.0, target, grid, field.cap(), opts);
    let mut s = Scratch { x: vec![0.0; n], v: vec![0.0; n], y: vec![0.0; n], verts: Vec::new() };
    field.get(idx) - sw.update(idx, field.values(), &mut s)
}
