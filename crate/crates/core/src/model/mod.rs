//! Differential inclusions described through their Hamiltonian
//! `H(x,p) = sup_{v ∈ F(x)} ⟨v,p⟩`, plus the hypothesis checks and constant
//! estimates that the certificates rely on.

mod checks;
mod estimate;
pub mod forms;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{direction_fan, norm};

pub use checks::{check_c1_criterion, check_petrov, C1Verdict, Interval, PetrovReport};
pub use estimate::{estimate_constants, EstimateReport};
pub use forms::{AffineField, BallForm, BoxForm, Gain, PolytopeForm, Reversed};

/// A convex-valued multifunction `F`, accessed only through its support
/// function and a maximizer selection.
///
/// Implementations must be pure: the solver calls them from many places and
/// may call them concurrently.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64;

    /// Writes a maximizer of `v ↦ ⟨v,p⟩` over `F(x)` into `out`. When the
    /// maximizer set is not a singleton the selection has minimal norm, ties
    /// broken lexicographically.
    fn argmax_into(&self, x: &[f64], p: &[f64], out: &mut [f64]);

    /// Appends the extreme points of `F(x)` (flattened) when `F(x)` is a
    /// polytope. Strictly convex sets append nothing.
    fn vertices_into(&self, _x: &[f64], _out: &mut Vec<f64>) {}

    /// Radius `R` of balls contained in every `F(x)` touching its boundary,
    /// when the form guarantees one.
    fn inner_ball_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Provided,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constant {
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub value: f64,
    pub source: Source,
}

impl Constant {
    pub fn provided(value: f64) -> Self {
        Self { value, source: Source::Provided }
    }

    pub fn estimated(value: f64) -> Self {
        Self { value, source: Source::Estimated }
    }
}

/// Structural constants of the inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// `K`: `|H(y,p) − H(x,p)| ≤ K|p||y − x|`.
    pub lipschitz: Constant,
    /// `K1`: Lipschitz constant of `x ↦ F_p(x)`.
    pub argmax_lipschitz: Constant,
    /// `K2`: `max_{v ∈ F(x)} |v| ≤ K2(1 + |x|)`.
    pub growth: Constant,
    /// `c0`: `H(·,p)` is semiconvex with constant `c0|p|`.
    pub semiconvexity: Constant,
    /// `R`: every `F(x)` has the inner ball property with this radius.
    pub inner_radius: Option<Constant>,
}

impl Constants {
    pub fn provided(k: f64, k1: f64, k2: f64, c0: f64, r: Option<f64>) -> Result<Self> {
        let c = Self {
            lipschitz: Constant::provided(k),
            argmax_lipschitz: Constant::provided(k1),
            growth: Constant::provided(k2),
            semiconvexity: Constant::provided(c0),
            inner_radius: r.map(Constant::provided),
        };
        c.validate()?;
        Ok(c)
    }

    /// Placeholder for a model whose constants will come from
    /// [`estimate_constants`].
    pub fn to_estimate() -> Self {
        Self {
            lipschitz: Constant::estimated(0.0),
            argmax_lipschitz: Constant::estimated(0.0),
            growth: Constant::estimated(0.0),
            semiconvexity: Constant::estimated(0.0),
            inner_radius: None,
        }
    }

    pub fn k(&self) -> f64 {
        self.lipschitz.value
    }

    pub fn k1(&self) -> f64 {
        self.argmax_lipschitz.value
    }

    pub fn k2(&self) -> f64 {
        self.growth.value
    }

    pub fn c0(&self) -> f64 {
        self.semiconvexity.value
    }

    pub fn r(&self) -> Option<f64> {
        self.inner_radius.map(|c| c.value)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("K", self.k()),
            ("K1", self.k1()),
            ("K2", self.k2()),
            ("c0", self.c0()),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("constant {name} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(r) = self.r() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Input(format!("constant R must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// A differential inclusion together with its constants. Immutable and cheap
/// to clone; safe to share across threads.
#[derive(Clone)]
pub struct InclusionModel {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    constants: Constants,
}

impl fmt::Debug for InclusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InclusionModel")
            .field("name", &self.name)
            .field("dynamics", &self.dynamics)
            .field("constants", &self.constants)
            .finish()
    }
}

impl InclusionModel {
    pub fn new(name: impl Into<String>, dynamics: Arc<dyn Dynamics>, constants: Constants) -> Result<Self> {
        constants.validate()?;
        if dynamics.dim() == 0 {
            return Err(Error::Input("model dimension must be positive".into()));
        }
        Ok(Self { name: name.into(), dynamics, constants })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn with_constants(&self, constants: Constants) -> Result<Self> {
        Self::new(self.name.clone(), self.dynamics.clone(), constants)
    }

    /// The time-reversed inclusion `−F` with `H⁻(x,p) = H(x,−p)`.
    pub fn reversed(&self) -> Self {
        Self {
            name: format!("{}-reversed", self.name),
            dynamics: Arc::new(Reversed::new(self.dynamics.clone())),
            constants: self.constants,
        }
    }

    /// `H(x,p)` without input validation; for inner loops.
    #[inline]
    pub fn h(&self, x: &[f64], p: &[f64]) -> f64 {
        self.dynamics.hamiltonian(x, p)
    }

    /// `F_p(x)` without validation; `p` must be nonzero.
    #[inline]
    pub fn fp(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.dynamics.argmax_into(x, p, &mut out);
        out
    }

    /// `m` boundary points of `F(x)`: the vertices (if any) followed by the
    /// maximizers along `m` fixed unit directions.
    pub fn sample(&self, x: &[f64], m: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut flat = Vec::new();
        self.dynamics.vertices_into(x, &mut flat);
        let mut out: Vec<Vec<f64>> = flat.chunks(n).map(|c| c.to_vec()).collect();
        for d in direction_fan(n, m) {
            out.push(self.fp(x, &d));
        }
        out
    }

    /// Central finite-difference selection of `∂_x H(x,p)` with step
    /// `1e-5·(1 + |x|)`.
    pub fn grad_x(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let step = fd_step(x);
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + step;
                let hp = self.h(&y, p);
                y[i] = x[i] - step;
                let hm = self.h(&y, p);
                y[i] = x[i];
                (hp - hm) / (2.0 * step)
            })
            .collect()
    }

    /// One-sided (backward, forward) difference quotients of `H(·,p)` per axis.
    pub fn one_sided_grad_x(&self, x: &[f64], p: &[f64], step: f64) -> (Vec<f64>, Vec<f64>) {
        let h0 = self.h(x, p);
        let mut y = x.to_vec();
        let mut back = Vec::with_capacity(x.len());
        let mut fwd = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            y[i] = x[i] + step;
            fwd.push((self.h(&y, p) - h0) / step);
            y[i] = x[i] - step;
            back.push((h0 - self.h(&y, p)) / step);
            y[i] = x[i];
        }
        (back, fwd)
    }

    fn check_dims(&self, x: &[f64], p: &[f64]) -> Result<()> {
        if x.len() != self.dim() || p.len() != self.dim() {
            return Err(Error::Input(format!(
                "expected vectors of length {}, got {} and {}",
                self.dim(),
                x.len(),
                p.len()
            )));
        }
        ensure_finite("state", x)?;
        ensure_finite("covector", p)
    }
}

/// Finite-difference step used for `∂_x H` selections.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + norm(x))
}

/// `H(x,p)`.
pub fn eval_hamiltonian(model: &InclusionModel, x: &[f64], p: &[f64]) -> Result<f64> {
    model.check_dims(x, p)?;
    Ok(model.h(x, p))
}

/// `F_p(x)`, the (tie-broken) maximizer of `⟨v,p⟩` over `F(x)`.
pub fn eval_argmax(model: &InclusionModel, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    model.check_dims(x, p)?;
    if p.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateCovector("argmax needs p != 0".into()));
    }
    Ok(model.fp(x, p))
}
