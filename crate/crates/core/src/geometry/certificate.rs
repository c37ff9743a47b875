use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{dist2, norm};

/// A proximal normal `normal` at `base` claimed to be realized by a ball of
/// `radius`, with the worst violation found by a discrete scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereCertificate {
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub base: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub normal: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub radius: f64,
    /// `max ⟨normal, y − base⟩ − |y − base|²/(2·radius)` over the scan.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub sigma_residual: f64,
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub slack: f64,
    pub pass: bool,
    pub tested_count: usize,
    #[serde(skip)]
    pub worst: Option<Vec<f64>>,
}

/// Accumulates the proximal inequality over scanned points.
#[derive(Debug, Clone)]
pub(crate) struct BallScan<'a> {
    base: &'a [f64],
    normal: &'a [f64],
    inv2r: f64,
    residual: f64,
    worst: Option<Vec<f64>>,
    count: usize,
}

impl<'a> BallScan<'a> {
    pub(crate) fn new(base: &'a [f64], normal: &'a [f64], radius: f64) -> Self {
        Self { base, normal, inv2r: 0.5 / radius, residual: f64::NEG_INFINITY, worst: None, count: 0 }
    }

    #[inline]
    pub(crate) fn push(&mut self, y: &[f64]) {
        self.count += 1;
        let mut ip = 0.0;
        let mut d2 = 0.0;
        for i in 0..y.len() {
            let d = y[i] - self.base[i];
            ip += self.normal[i] * d;
            d2 += d * d;
        }
        let v = ip - d2 * self.inv2r;
        if v > self.residual {
            self.residual = v;
            self.worst = Some(y.to_vec());
        }
    }

    pub(crate) fn finish(self, radius: f64, slack: f64) -> SphereCertificate {
        SphereCertificate {
            base: self.base.to_vec(),
            normal: self.normal.to_vec(),
            radius,
            sigma_residual: self.residual,
            slack,
            pass: self.residual <= slack,
            tested_count: self.count,
            worst: self.worst,
        }
    }
}

fn validate(base: &[f64], normal: &[f64], radius: f64, slack: f64) -> Result<()> {
    ensure_finite("base", base)?;
    ensure_finite("normal", normal)?;
    if base.len() != normal.len() {
        return Err(Error::Input("base and normal differ in length".into()));
    }
    if (norm(normal) - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("normal must be a unit vector, |normal| = {}", norm(normal))));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!("radius must be positive, got {radius}")));
    }
    if !(slack >= 0.0) {
        return Err(Error::Input(format!("slack must be nonnegative, got {slack}")));
    }
    Ok(())
}

/// Brute-force check of `⟨normal, y − base⟩ ≤ |y − base|²/(2·radius)` over
/// `points`, up to `slack`.
pub fn check_realized_by_ball(
    points: &[Vec<f64>],
    base: &[f64],
    normal: &[f64],
    radius: f64,
    slack: f64,
) -> Result<SphereCertificate> {
    validate(base, normal, radius, slack)?;
    if points.is_empty() {
        return Err(Error::Input("no points to scan".into()));
    }
    let mut scan = BallScan::new(base, normal, radius);
    for y in points {
        if y.len() != base.len() {
            return Err(Error::Input("point dimension differs from base".into()));
        }
        scan.push(y);
    }
    Ok(scan.finish(radius, slack))
}

/// Points farther than `2·radius` from the base never raise the residual
/// above zero, so a scan that includes the base may skip them.
pub(crate) fn within_reach(y: &[f64], base: &[f64], radius: f64) -> bool {
    dist2(y, base) < 4.0 * radius * radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_points(keep: impl Fn(f64, f64) -> bool) -> Vec<Vec<f64>> {
        let mut v = Vec::new();
        for i in 0..=80 {
            for j in 0..=80 {
                let (x, y) = (-2.0 + i as f64 * 0.05, -2.0 + j as f64 * 0.05);
                if keep(x, y) {
                    v.push(vec![x, y]);
                }
            }
        }
        v
    }

    #[test]
    fn half_plane_passes() {
        let pts = grid_points(|x, _| x <= 0.0);
        let c = check_realized_by_ball(&pts, &[0.0, 0.0], &[1.0, 0.0], 100.0, 0.0).unwrap();
        assert!(c.pass && c.sigma_residual <= 0.0);
        assert_eq!(c.tested_count, pts.len());
    }

    /// Brute-force oracle: the largest violation on the circle itself.
    #[test]
    fn outside_of_disk() {
        let pts = grid_points(|x, y| ((x - 1.0).powi(2) + y * y).sqrt() >= 1.0 - 1e-12);
        let one = check_realized_by_ball(&pts, &[0.0, 0.0], &[1.0, 0.0], 1.0, 1e-12).unwrap();
        assert!(one.pass, "{}", one.sigma_residual);
        let two = check_realized_by_ball(&pts, &[0.0, 0.0], &[1.0, 0.0], 2.0, 1e-12).unwrap();
        assert!(!two.pass && two.sigma_residual > 0.0);
        // On the circle y = (1 − cos a, sin a): residual = (1 − cos a)/2 with radius 2.
        let w = two.worst.unwrap();
        let expect = w[0] - (w[0] * w[0] + w[1] * w[1]) / 4.0;
        assert!((two.sigma_residual - expect).abs() < 1e-15);
    }

    #[test]
    fn lone_base_passes_any_radius() {
        for r in [1e-3, 1.0, 1e6] {
            let c = check_realized_by_ball(&[vec![0.3, 0.4]], &[0.3, 0.4], &[0.6, 0.8], r, 0.0).unwrap();
            assert!(c.pass && c.sigma_residual == 0.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(check_realized_by_ball(&[], &[0.0], &[1.0], 1.0, 0.0).is_err());
        assert!(check_realized_by_ball(&[vec![0.0]], &[0.0], &[2.0], 1.0, 0.0).is_err());
        assert!(check_realized_by_ball(&[vec![0.0]], &[0.0], &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn json_field_order() {
        let c = check_realized_by_ball(&[vec![0.0, 0.0]], &[0.0, 0.0], &[1.0, 0.0], 0.5, 0.01).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"base":[0,0],"normal":[1,0],"radius":0.5,"sigma_residual":0,"slack":0.01,"pass":true,"tested_count":1}"#
        );
    }
}
