use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::model::{Constant, Constants, InclusionModel, Source};
use crate::rng::SplitMix64;

/// Raw sampled maxima behind [`estimate_constants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateReport {
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub lipschitz: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub argmax_lipschitz: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub growth: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub semiconvexity: f64,
    pub valid_pairs: usize,
}

const SAMPLER_DIRECTIONS: usize = 16;

impl EstimateReport {
    /// Samples the structural constants of `model` over the box
    /// `[lower, upper]`.
    ///
    /// Draws come from a single stream in a fixed order, so the maxima for
    /// `samples = m` are taken over a prefix of the draws for any larger
    /// `samples`.
    pub fn sample(model: &InclusionModel, lower: &[f64], upper: &[f64], samples: usize, seed: u64) -> Result<Self> {
        let n = model.dim();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Input(format!("box must have {n} coordinates")));
        }
        crate::error::ensure_finite("box", lower)?;
        crate::error::ensure_finite("box", upper)?;
        if lower.iter().zip(upper).any(|(a, b)| a > b) {
            return Err(Error::Input("box lower corner exceeds upper corner".into()));
        }
        if samples < 100 {
            return Err(Error::Input(format!("need at least 100 samples, got {samples}")));
        }
        let diam = dist(lower, upper);
        let min_sep = 1e-12 * (1.0 + diam);

        let mut rep = Self {
            lipschitz: 0.0,
            argmax_lipschitz: 0.0,
            growth: 0.0,
            semiconvexity: 0.0,
            valid_pairs: 0,
        };

        for x in probe_points(lower, upper) {
            rep.update_growth(model, &x);
        }

        let mut rng = SplitMix64::new(seed);
        for i in 0..samples {
            let x = rng.point_in_box(lower, upper);
            let y = if i % 2 == 0 {
                rng.point_in_box(lower, upper)
            } else {
                let scale = diam * 10f64.powf(-rng.uniform(1.0, 4.0));
                let u = rng.unit_vector(n);
                (0..n).map(|k| (x[k] + scale * u[k]).clamp(lower[k], upper[k])).collect()
            };
            let p = rng.unit_vector(n);
            let t = rng.next_f64();
            let zdir = rng.unit_vector(n);

            rep.update_growth(model, &x);

            let d = dist(&x, &y);
            if d > min_sep {
                rep.valid_pairs += 1;
                let dh = (model.h(&y, &p) - model.h(&x, &p)).abs();
                rep.lipschitz = rep.lipschitz.max(dh / d);
                let da = dist(&model.fp(&x, &p), &model.fp(&y, &p));
                rep.argmax_lipschitz = rep.argmax_lipschitz.max(da / d);
            }

            // Largest symmetric step keeping x ± z inside the box, scaled by t.
            let reach = (0..n)
                .map(|k| {
                    let room = (x[k] - lower[k]).min(upper[k] - x[k]);
                    if zdir[k] == 0.0 {
                        f64::INFINITY
                    } else {
                        room / zdir[k].abs()
                    }
                })
                .fold(f64::INFINITY, f64::min);
            let zlen = t * reach;
            if zlen.is_finite() && zlen > min_sep {
                let xp: Vec<f64> = (0..n).map(|k| x[k] + zlen * zdir[k]).collect();
                let xm: Vec<f64> = (0..n).map(|k| x[k] - zlen * zdir[k]).collect();
                let (hp, hm, h0) = (model.h(&xp, &p), model.h(&xm, &p), model.h(&x, &p));
                let second = hp + hm - 2.0 * h0;
                let noise = 64.0 * f64::EPSILON * (hp.abs() + hm.abs() + 2.0 * h0.abs());
                if -second > noise {
                    rep.semiconvexity = rep.semiconvexity.max(-second / (zlen * zlen));
                }
            }
        }

        if rep.valid_pairs == 0 {
            return Err(Error::Estimation("sampling produced no pair of distinct points".into()));
        }
        Ok(rep)
    }

    fn update_growth(&mut self, model: &InclusionModel, x: &[f64]) {
        let denom = 1.0 + norm(x);
        for v in model.sample(x, SAMPLER_DIRECTIONS) {
            self.growth = self.growth.max(norm(&v) / denom);
        }
    }
}

/// Box corners, its center and its point of least norm.
fn probe_points(lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    let mut pts = Vec::new();
    if n <= 10 {
        for mask in 0..(1usize << n) {
            pts.push((0..n).map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] }).collect());
        }
    }
    pts.push((0..n).map(|k| 0.5 * (lower[k] + upper[k])).collect());
    pts.push((0..n).map(|k| 0.0f64.clamp(lower[k], upper[k])).collect());
    pts
}

/// Estimates `K`, `K1`, `K2` and `c0` on a box. Constants the model marks
/// as provided are kept after checking that no estimate exceeds them by more
/// than 1%; the others are replaced by the estimates.
pub fn estimate_constants(
    model: &InclusionModel,
    lower: &[f64],
    upper: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Constants> {
    let rep = EstimateReport::sample(model, lower, upper, samples, seed)?;
    let c = model.constants();
    let pick = |name: &'static str, cur: Constant, est: f64| -> Result<Constant> {
        match cur.source {
            Source::Provided => {
                if est > cur.value * 1.01 + 1e-9 {
                    Err(Error::ConstantViolation { name, provided: cur.value, estimated: est })
                } else {
                    Ok(cur)
                }
            }
            Source::Estimated => Ok(Constant::estimated(est)),
        }
    };
    Ok(Constants {
        lipschitz: pick("K", c.lipschitz, rep.lipschitz)?,
        argmax_lipschitz: pick("K1", c.argmax_lipschitz, rep.argmax_lipschitz)?,
        growth: pick("K2", c.growth, rep.growth)?,
        semiconvexity: pick("c0", c.semiconvexity, rep.semiconvexity)?,
        inner_radius: c.inner_radius,
    })
}
