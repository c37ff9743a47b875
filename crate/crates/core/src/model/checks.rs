use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{neg, normalize};
use crate::model::{fd_step, InclusionModel};
use crate::target::TargetSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PetrovReport {
    /// `min` over the samples of `H(x, −ν/|ν|)`.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub mu_min: f64,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

impl PetrovReport {
    pub fn holds(&self) -> bool {
        self.mu_min > 0.0
    }
}

/// Evaluates the inward controllability margin `H(x, −ν/|ν|)` at each
/// boundary sample, with `ν` the target's outward normal there. Samples
/// without a normal are skipped.
pub fn check_petrov(model: &InclusionModel, target: &TargetSet, boundary: &[Vec<f64>]) -> Result<PetrovReport> {
    let mut best: Option<(f64, &Vec<f64>)> = None;
    let mut count = 0;
    for x in boundary {
        let Some(nu) = target.normal(x).and_then(|v| normalize(&v)) else {
            continue;
        };
        count += 1;
        let mu = model.h(x, &neg(&nu));
        if best.map_or(true, |(m, _)| mu < m) {
            best = Some((mu, x));
        }
    }
    match best {
        Some((mu_min, x)) => Ok(PetrovReport { mu_min, worst_point: x.clone(), samples: count }),
        None => Err(Error::EmptyBoundary("no boundary samples with a normal".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub lo: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub hi: f64,
}

impl Interval {
    fn hull(a: f64, b: f64) -> Self {
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum C1Verdict {
    /// `H(x,p) ≠ −H(x,−p)`, so the criterion says nothing at `(x,p)`.
    NotApplicable {
        #[serde(serialize_with = "crate::io::serialize_g12")]
        h_plus: f64,
        #[serde(serialize_with = "crate::io::serialize_g12")]
        h_minus: f64,
    },
    Evaluated {
        holds: bool,
        /// Central selection of `∂_x H(x,−p)`.
        #[serde(serialize_with = "crate::io::serialize_g12_vec")]
        left: Vec<f64>,
        /// Central selection of `∂_x H(x,p)`.
        #[serde(serialize_with = "crate::io::serialize_g12_vec")]
        right: Vec<f64>,
        left_hull: Vec<Interval>,
        right_hull: Vec<Interval>,
    },
}

impl C1Verdict {
    /// `Some(holds)` when evaluated.
    pub fn holds(&self) -> Option<bool> {
        match self {
            Self::NotApplicable { .. } => None,
            Self::Evaluated { holds, .. } => Some(*holds),
        }
    }
}

/// Tests whether `∂_x H(x,p) = −∂_x H(x,−p)` can hold, comparing per-axis
/// hulls of one-sided difference quotients. Where `H(x,p) = −H(x,−p)`, a C¹
/// parameterization of the maximizers forces this identity.
pub fn check_c1_criterion(model: &InclusionModel, x: &[f64], p: &[f64], step: Option<f64>) -> Result<C1Verdict> {
    let h_plus = crate::model::eval_hamiltonian(model, x, p)?;
    let mp = neg(p);
    let h_minus = model.h(x, &mp);
    if (h_plus + h_minus).abs() > 1e-9 * (1.0 + h_plus.abs()) {
        return Ok(C1Verdict::NotApplicable { h_plus, h_minus });
    }
    let step = step.unwrap_or_else(|| fd_step(x));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Input(format!("finite-difference step must be positive, got {step}")));
    }
    let hulls = |q: &[f64]| -> Vec<Interval> {
        let (b, f) = model.one_sided_grad_x(x, q, step);
        b.iter().zip(&f).map(|(&b, &f)| Interval::hull(b, f)).collect()
    };
    let right_hull = hulls(p);
    let left_hull = hulls(&mp);
    let holds = right_hull.iter().zip(&left_hull).all(|(r, l)| {
        let tol = 1e-6 * (1.0 + r.lo.abs().max(r.hi.abs()).max(l.lo.abs()).max(l.hi.abs()));
        (r.lo + l.hi).abs() <= tol && (r.hi + l.lo).abs() <= tol
    });
    Ok(C1Verdict::Evaluated {
        holds,
        left: model.grad_x(x, &mp),
        right: model.grad_x(x, p),
        left_hull,
        right_hull,
    })
}
