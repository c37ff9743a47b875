//! Built-in dynamics with closed-form support functions and maximizers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::model::Dynamics;

/// `x ↦ offset + matrix · x` with a row-major `n × n` matrix (absent = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub offset: Vec<f64>,
    pub matrix: Option<Vec<f64>>,
}

impl AffineField {
    pub fn constant(offset: Vec<f64>) -> Self {
        Self { offset, matrix: None }
    }

    pub fn new(offset: Vec<f64>, matrix: Vec<f64>) -> Result<Self> {
        let n = offset.len();
        if matrix.len() != n * n {
            return Err(Error::Input(format!(
                "affine field matrix has {} entries, expected {}",
                matrix.len(),
                n * n
            )));
        }
        Ok(Self { offset, matrix: Some(matrix) })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.offset.len();
        out[..n].copy_from_slice(&self.offset);
        if let Some(m) = &self.matrix {
            for i in 0..n {
                out[i] += dot(&m[i * n..(i + 1) * n], x);
            }
        }
    }

    #[inline]
    fn dot_at(&self, x: &[f64], p: &[f64]) -> f64 {
        let n = self.offset.len();
        let mut s = dot(&self.offset, p);
        if let Some(m) = &self.matrix {
            for i in 0..n {
                s += p[i] * dot(&m[i * n..(i + 1) * n], x);
            }
        }
        s
    }

    /// Operator 2-norm bound (Frobenius) of the linear part.
    pub fn lipschitz_bound(&self) -> f64 {
        self.matrix
            .as_ref()
            .map(|m| m.iter().map(|v| v * v).sum::<f64>().sqrt())
            .unwrap_or(0.0)
    }
}

/// `F(x) = c(x) + r(x)·B̄(0,1)` with affine center and `r(x) = r0 + r1·|x|`.
///
/// `r0 = r1 = 0` gives single-valued (ODE) dynamics.
#[derive(Debug, Clone)]
pub struct BallForm {
    center: AffineField,
    radius: f64,
    radius_slope: f64,
}

impl BallForm {
    pub fn new(center: AffineField, radius: f64, radius_slope: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius_slope >= 0.0) {
            return Err(Error::Input(format!(
                "ball form needs nonnegative radius terms, got {radius}, {radius_slope}"
            )));
        }
        Ok(Self { center, radius, radius_slope })
    }

    /// The unit ball `B̄(0,1)` in `dim` dimensions.
    pub fn unit(dim: usize) -> Self {
        Self {
            center: AffineField::constant(vec![0.0; dim]),
            radius: 1.0,
            radius_slope: 0.0,
        }
    }

    #[inline]
    fn radius_at(&self, x: &[f64]) -> f64 {
        if self.radius_slope == 0.0 {
            self.radius
        } else {
            self.radius + self.radius_slope * norm(x)
        }
    }
}

impl Dynamics for BallForm {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        self.center.dot_at(x, p) + self.radius_at(x) * norm(p)
    }

    fn argmax_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        self.center.eval_into(x, out);
        let r = self.radius_at(x);
        let pn = norm(p);
        if r > 0.0 && pn > 0.0 {
            for (o, pi) in out.iter_mut().zip(p) {
                *o += r * pi / pn;
            }
        }
    }

    fn inner_ball_radius(&self) -> Option<f64> {
        (self.radius_slope == 0.0 && self.radius > 0.0).then_some(self.radius)
    }
}

/// Nonnegative state-dependent gain of one box axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Gain {
    Constant(f64),
    /// `slope · max(x[axis] − knot, 0)`
    Hinge { axis: usize, knot: f64, slope: f64 },
}

impl Gain {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Gain::Constant(c) => c,
            Gain::Hinge { axis, knot, slope } => slope * (x[axis] - knot).max(0.0),
        }
    }
}

/// `F(x) = {(g_1(x)u_1, …, g_n(x)u_n) : u_i ∈ [lower_i, upper_i]}`.
#[derive(Debug, Clone)]
pub struct BoxForm {
    lower: Vec<f64>,
    upper: Vec<f64>,
    gains: Vec<Gain>,
}

impl BoxForm {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, gains: Vec<Gain>) -> Result<Self> {
        let n = lower.len();
        if upper.len() != n || gains.len() != n || n == 0 {
            return Err(Error::Input("box form: lower/upper/gains length mismatch".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a <= b)) {
            return Err(Error::Input("box form: lower bound above upper bound".into()));
        }
        for g in &gains {
            let ok = match *g {
                Gain::Constant(c) => c >= 0.0,
                Gain::Hinge { axis, slope, .. } => slope >= 0.0 && axis < n,
            };
            if !ok {
                return Err(Error::Input(format!("box form: invalid gain {g:?}")));
            }
        }
        Ok(Self { lower, upper, gains })
    }
}

impl Dynamics for BoxForm {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let mut h = 0.0;
        for i in 0..self.lower.len() {
            let g = self.gains[i].eval(x);
            h += g * (self.lower[i] * p[i]).max(self.upper[i] * p[i]);
        }
        h
    }

    fn argmax_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        // The maximizer set is a product of intervals; its minimal-norm point
        // is picked coordinate by coordinate.
        for i in 0..self.lower.len() {
            let g = self.gains[i].eval(x);
            let u = if p[i] > 0.0 {
                self.upper[i]
            } else if p[i] < 0.0 {
                self.lower[i]
            } else {
                0f64.clamp(self.lower[i], self.upper[i])
            };
            out[i] = g * u;
        }
    }

    fn vertices_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let n = self.lower.len();
        let g: Vec<f64> = self.gains.iter().map(|g| g.eval(x)).collect();
        for mask in 0..(1usize << n) {
            for i in 0..n {
                let u = if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] };
                out.push(g[i] * u);
            }
        }
    }
}

/// `F(x) = conv{v_k(x)}` with affine vertex fields.
#[derive(Debug, Clone)]
pub struct PolytopeForm {
    vertices: Vec<AffineField>,
}

impl PolytopeForm {
    pub fn new(vertices: Vec<AffineField>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::Input("polytope form needs at least one vertex".into()));
        };
        let n = first.dim();
        if n == 0 || vertices.iter().any(|v| v.dim() != n) {
            return Err(Error::Input("polytope form: vertex dimension mismatch".into()));
        }
        Ok(Self { vertices })
    }
}

impl Dynamics for PolytopeForm {
    fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot_at(x, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn argmax_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let h = self.hamiltonian(x, p);
        let tol = 1e-12 * (1.0 + h.abs());
        let mut best: Option<Vec<f64>> = None;
        let mut cand = vec![0.0; n];
        for v in &self.vertices {
            if v.dot_at(x, p) < h - tol {
                continue;
            }
            v.eval_into(x, &mut cand);
            let better = match &best {
                None => true,
                Some(b) => tie_break_less(&cand, b),
            };
            if better {
                best = Some(cand.clone());
            }
        }
        out[..n].copy_from_slice(best.as_deref().expect("at least one vertex attains the max"));
    }

    fn vertices_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let n = self.dim();
        let mut buf = vec![0.0; n];
        for v in &self.vertices {
            v.eval_into(x, &mut buf);
            out.extend_from_slice(&buf);
        }
    }
}

/// Minimal Euclidean norm first, then lexicographic order.
pub fn tie_break_less(a: &[f64], b: &[f64]) -> bool {
    let (na, nb) = (dot(a, a), dot(b, b));
    if na != nb {
        return na < nb;
    }
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

/// Time reversal `−F`, whose support function is `H(x, −p)`.
pub struct Reversed {
    inner: Arc<dyn Dynamics>,
}

impl Reversed {
    pub fn new(inner: Arc<dyn Dynamics>) -> Self {
        Self { inner }
    }
}

impl fmt::Debug for Reversed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Reversed").field(&self.inner).finish()
    }
}

impl Dynamics for Reversed {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let q: Vec<f64> = p.iter().map(|v| -v).collect();
        self.inner.hamiltonian(x, &q)
    }

    fn argmax_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        let q: Vec<f64> = p.iter().map(|v| -v).collect();
        self.inner.argmax_into(x, &q, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
    }

    fn vertices_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let start = out.len();
        self.inner.vertices_into(x, out);
        for o in &mut out[start..] {
            *o = -*o;
        }
    }

    fn inner_ball_radius(&self) -> Option<f64> {
        self.inner.inner_ball_radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_tie_break_picks_min_norm() {
        let b = BoxForm::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![Gain::Constant(1.0); 2]).unwrap();
        let mut out = [9.0; 2];
        b.argmax_into(&[0.0, 0.0], &[0.0, 1.0], &mut out);
        assert_eq!(out, [0.0, 1.0]);
        b.argmax_into(&[0.0, 0.0], &[-1.0, 1.0], &mut out);
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn box_vertices_enumerated() {
        let b = BoxForm::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![Gain::Constant(1.0); 2]).unwrap();
        let mut v = Vec::new();
        b.vertices_into(&[0.0, 0.0], &mut v);
        assert_eq!(v, vec![-1.0, 0.0, 1.0, 0.0, -1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn polytope_tie_breaks_on_edge() {
        // Square with vertices (±1, ±1); p = (0, 1) ties between (−1,1) and (1,1).
        let verts = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(a, b)| AffineField::constant(vec![a, b]))
            .collect();
        let poly = PolytopeForm::new(verts).unwrap();
        let mut out = [0.0; 2];
        poly.argmax_into(&[0.0, 0.0], &[0.0, 1.0], &mut out);
        assert_eq!(out, [-1.0, 1.0]);
        assert_eq!(poly.hamiltonian(&[0.0, 0.0], &[2.0, 3.0]), 5.0);
    }

    #[test]
    fn reversed_negates() {
        let b = Arc::new(BoxForm::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![Gain::Constant(1.0); 2]).unwrap());
        let r = Reversed::new(b);
        assert_eq!(r.hamiltonian(&[0.0, 0.0], &[-1.0, 0.0]), 1.0);
        let mut out = [0.0; 2];
        r.argmax_into(&[0.0, 0.0], &[-1.0, -1.0], &mut out);
        assert_eq!(out, [-1.0, -1.0]);
    }

    #[test]
    fn ball_form_with_growing_radius() {
        let b = BallForm::new(AffineField::constant(vec![0.0, 0.0]), 1.0, 1.0).unwrap();
        assert!((b.hamiltonian(&[3.0, 4.0], &[1.0, 0.0]) - 6.0).abs() < 1e-15);
        assert_eq!(b.inner_ball_radius(), None);
    }
}
