//! Closed targets `S ⊂ Rⁿ` described by a continuous indicator that is
//! negative inside `S`, positive outside and zero on `∂S`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dist, normalize, sub};
use crate::solver::ScalarField;

pub trait TargetShape: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn indicator(&self, x: &[f64]) -> f64;

    /// Outward unit normal of `S` at a boundary point (pointing away from
    /// `S`). The default differentiates the indicator.
    fn normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        let step = 1e-6 * (1.0 + crate::linalg::norm(x));
        let mut y = x.to_vec();
        let g: Vec<f64> = (0..x.len())
            .map(|i| {
                y[i] = x[i] + step;
                let a = self.indicator(&y);
                y[i] = x[i] - step;
                let b = self.indicator(&y);
                y[i] = x[i];
                (a - b) / (2.0 * step)
            })
            .collect();
        normalize(&g)
    }

    /// Points of `S` the solver must seed even when no grid node falls
    /// inside `S` (isolated points).
    fn seeds(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// `S = {x : |x − center| ≥ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallComplement {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TargetShape for BallComplement {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn indicator(&self, x: &[f64]) -> f64 {
        self.radius - dist(x, &self.center)
    }

    fn normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        normalize(&sub(&self.center, x))
    }
}

/// `S = B̄(center, radius)`; a single point when `radius = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TargetShape for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn indicator(&self, x: &[f64]) -> f64 {
        dist(x, &self.center) - self.radius
    }

    fn normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        normalize(&sub(x, &self.center))
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        vec![self.center.clone()]
    }
}

/// `S = {x : ⟨a, x⟩ ≤ b}` with `|a| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: &[f64], offset: f64) -> Result<Self> {
        let normal = normalize(normal).ok_or_else(|| Error::Input("half-space normal is zero".into()))?;
        Ok(Self { normal, offset })
    }
}

impl TargetShape for HalfSpace {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn indicator(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.normal, x) - self.offset
    }

    fn normal(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.normal.clone())
    }
}

/// `S = {x : f(x) ≤ level}` for a gridded function, e.g. a dilated target
/// `A(S,t) = {T_rev ≤ t}`.
#[derive(Debug, Clone)]
pub struct FieldSublevel {
    pub field: Arc<ScalarField>,
    pub level: f64,
}

impl TargetShape for FieldSublevel {
    fn dim(&self) -> usize {
        self.field.grid().dim()
    }

    fn indicator(&self, x: &[f64]) -> f64 {
        self.field.interpolate(x) - self.level
    }
}

/// A target together with its optional inner-ball radius `ρ0`.
#[derive(Debug, Clone)]
pub struct TargetSet {
    shape: Arc<dyn TargetShape>,
    rho0: Option<f64>,
}

impl TargetSet {
    pub fn new(shape: Arc<dyn TargetShape>, rho0: Option<f64>) -> Result<Self> {
        if let Some(r) = rho0 {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Input(format!("rho0 must be positive, got {r}")));
            }
        }
        Ok(Self { shape, rho0 })
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn rho0(&self) -> Option<f64> {
        self.rho0
    }

    pub fn shape(&self) -> &Arc<dyn TargetShape> {
        &self.shape
    }

    pub fn indicator(&self, x: &[f64]) -> f64 {
        self.shape.indicator(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape.indicator(x) <= 0.0
    }

    pub fn normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.shape.normal(x)
    }

    pub fn seeds(&self) -> Vec<Vec<f64>> {
        self.shape.seeds()
    }

    /// Finds a boundary point on the segment `[inside, outside]` by bisection
    /// on the indicator.
    pub fn bisect_boundary(&self, inside: &[f64], outside: &[f64], iters: usize) -> Vec<f64> {
        let mut a = inside.to_vec();
        let mut b = outside.to_vec();
        for _ in 0..iters {
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            if self.contains(&m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}
