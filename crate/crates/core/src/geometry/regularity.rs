use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::solver::ScalarField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiconcavityReport {
    /// `max f(x+z) + f(x−z) − 2f(x) − 2c|z|²` over the tested pairs.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub max_excess: f64,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_x: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_z: Vec<f64>,
    pub tested: usize,
    pub pass: bool,
}

/// Second-difference test of semiconcavity with constant `c` at every
/// `x ∈ centers` and `z ∈ steps` with `x`, `x ± z` in `region`.
pub fn test_semiconcavity(
    f: &dyn Fn(&[f64]) -> f64,
    centers: &[Vec<f64>],
    region: &dyn Fn(&[f64]) -> bool,
    c: f64,
    steps: &[Vec<f64>],
    slack: f64,
) -> Result<SemiconcavityReport> {
    let mut best: Option<(f64, &Vec<f64>, &Vec<f64>)> = None;
    let mut tested = 0;
    for x in centers {
        if !region(x) {
            continue;
        }
        let fx = f(x);
        for z in steps {
            let xp: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
            let xm: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
            if !region(&xp) || !region(&xm) {
                continue;
            }
            tested += 1;
            let zz = norm(z);
            let excess = f(&xp) + f(&xm) - 2.0 * fx - 2.0 * c * zz * zz;
            if best.map_or(true, |(e, _, _)| excess > e) {
                best = Some((excess, x, z));
            }
        }
    }
    let (max_excess, x, z) = best.ok_or_else(|| Error::Input("no admissible (x, z) pairs in the region".into()))?;
    Ok(SemiconcavityReport {
        max_excess,
        worst_x: x.clone(),
        worst_z: z.clone(),
        tested,
        pass: max_excess <= slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub max_ratio: f64,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_x: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_y: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub bound: f64,
    pub tested: usize,
    pub pass: bool,
}

/// `max |f(x) − f(y)|/|x − y|` over the pairs, compared with `bound`.
pub fn test_lipschitz_sampling(
    f: &dyn Fn(&[f64]) -> f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
    bound: f64,
) -> Result<LipschitzReport> {
    let mut best: Option<(f64, usize)> = None;
    let mut tested = 0;
    for (k, (x, y)) in pairs.iter().enumerate() {
        let d = dist(x, y);
        if d == 0.0 {
            continue;
        }
        tested += 1;
        let ratio = (f(x) - f(y)).abs() / d;
        if best.map_or(true, |(r, _)| ratio > r) {
            best = Some((ratio, k));
        }
    }
    let Some((max_ratio, k)) = best else {
        // Nothing to contradict the bound.
        return Ok(LipschitzReport {
            max_ratio: 0.0,
            worst_x: Vec::new(),
            worst_y: Vec::new(),
            bound,
            tested: 0,
            pass: true,
        });
    };
    Ok(LipschitzReport {
        max_ratio,
        worst_x: pairs[k].0.clone(),
        worst_y: pairs[k].1.clone(),
        bound,
        tested,
        pass: max_ratio <= bound,
    })
}

/// Largest difference quotient between a node and the reached nodes of its
/// `5ⁿ` block, clamped at `1/h`.
pub fn local_lipschitz(field: &ScalarField, idx: usize) -> f64 {
    let grid = field.grid();
    let h = grid.h();
    let x = grid.point(idx);
    let fx = field.get(idx);
    let mut l: f64 = 0.0;
    for j in grid.neighborhood(idx, 2) {
        if j == idx || field.is_capped(j) {
            continue;
        }
        l = l.max((field.get(j) - fx).abs() / dist(&grid.point(j), &x));
    }
    l.min(1.0 / h)
}

/// Discrete verification slack `ε(h) = 2h(1 + L̂)`.
pub fn discretization_slack(h: f64, local_slope: f64) -> f64 {
    2.0 * h * (1.0 + local_slope.min(1.0 / h))
}
