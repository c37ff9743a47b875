use crate::error::{Error, Result};
use crate::extremal::rho_of_s;
use crate::linalg::norm;
use crate::model::Constants;

/// The three constants bounding the hypograph curvature at `(x, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
}

pub fn curvature_bounds(x_norm: f64, r: f64, constants: &Constants, rho0: f64) -> Result<CurvatureBounds> {
    if !(x_norm >= 0.0 && x_norm.is_finite()) {
        return Err(Error::Input(format!("|x| must be finite, got {x_norm}")));
    }
    let rho = rho_of_s(constants, rho0, r)?;
    let (k, k1, k2) = (constants.k(), constants.k1(), constants.k2());
    let a = x_norm + 1.0;
    let b = x_norm + 2.0;
    let l1 = (1.0 + k2 * k2 * a * a * (2.0 * k2 * r).exp()) / (2.0 * rho) * (k * r).exp()
        + k * k2 * a * ((k + k2) * r).exp()
        + 2.0 * k * (k * r).exp();
    let l2 = k * k2 * a * (2.0 * (k * r).exp() + 1.0) * (k2 * r).exp();
    let l4 = (k2 * k2 * b * b * (2.0 * k2).exp() + 1.0) / (2.0 * rho) + k1 * (1.0 + k2 * b * k2.exp()) + 1.0;
    Ok(CurvatureBounds { l1, l2, l4 })
}

/// `ρ_T = 1/max{2L1 + L2, 2L4}` at `(|x|, r)`.
#[allow(non_snake_case)]
pub fn rho_T_of(x: &[f64], r: f64, constants: &Constants, rho0: f64) -> Result<f64> {
    crate::error::ensure_finite("x", x)?;
    let b = curvature_bounds(norm(x), r, constants, rho0)?;
    Ok(1.0 / (2.0 * b.l1 + b.l2).max(2.0 * b.l4))
}

/// `R(T) = R(e^{−3KT} − 2c0RT²)/(1 + KT + K1T)²`, or `None` when
/// `e^{−3KT} ≤ 2c0RT²`.
#[allow(non_snake_case)]
pub fn R_of_T(constants: &Constants, r: f64, t: f64) -> Result<Option<f64>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("R must be positive, got {r}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Input(format!("T must be positive, got {t}")));
    }
    let (k, k1, c0) = (constants.k(), constants.k1(), constants.c0());
    let gate = (-3.0 * k * t).exp() - 2.0 * c0 * r * t * t;
    if gate <= 0.0 {
        return Ok(None);
    }
    let d = 1.0 + k * t + k1 * t;
    Ok(Some(r * gate / (d * d)))
}
