use crate::error::{Error, Result};

/// Axis-aligned rectangular grid, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

pub const MAX_DIM: usize = 3;

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Config(format!("grid dimension must be 1..={MAX_DIM}, got {n}")));
        }
        if upper.len() != n || counts.len() != n {
            return Err(Error::Config("grid corners and counts disagree in length".into()));
        }
        for i in 0..n {
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(Error::Config(format!("grid axis {i}: need lower < upper, got {} and {}", lower[i], upper[i])));
            }
            if counts[i] < 3 {
                return Err(Error::Config(format!("grid axis {i} needs at least 3 nodes, got {}", counts[i])));
            }
        }
        let spacing = (0..n).map(|i| (upper[i] - lower[i]) / (counts[i] - 1) as f64).collect();
        let mut strides = vec![1; n];
        for i in (0..n - 1).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        Ok(Self { lower, upper, counts, spacing, strides })
    }

    /// Grid whose spacing is `h` rounded so the nodes hit both corners.
    pub fn with_spacing(lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        let counts = lower
            .iter()
            .zip(&upper)
            .map(|(a, b)| ((b - a) / h).round().max(0.0) as usize + 1)
            .collect();
        Self::new(lower, upper, counts)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Smallest spacing over the axes.
    pub fn h(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Length of a cell diagonal.
    pub fn cell_diameter(&self) -> f64 {
        self.spacing.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_into(&self, mut idx: usize, out: &mut [usize]) {
        for i in 0..self.dim() {
            out[i] = idx / self.strides[i];
            idx %= self.strides[i];
        }
    }

    pub fn multi(&self, idx: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        self.multi_into(idx, &mut m);
        m
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn point_into(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for i in 0..self.dim() {
            let k = rem / self.strides[i];
            rem %= self.strides[i];
            out[i] = self.coord(i, k);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(idx, &mut x);
        x
    }

    /// Whether `x` lies in the closed box, up to roundoff.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| {
            let eps = 1e-9 * self.spacing[i];
            x[i] >= self.lower[i] - eps && x[i] <= self.upper[i] + eps
        })
    }

    /// Index of the node nearest to `x`, clamped into the grid.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|i| {
                let s = ((x[i] - self.lower[i]) / self.spacing[i]).round();
                s.clamp(0.0, (self.counts[i] - 1) as f64) as usize
            })
            .collect();
        self.flat(&multi)
    }

    /// Whether the node touches the grid boundary.
    pub fn on_edge(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        m.iter().zip(&self.counts).any(|(&i, &c)| i == 0 || i + 1 == c)
    }

    /// Flat indices of nodes with every coordinate offset in `-r..=r`,
    /// clipped to the grid. Includes `idx` itself.
    pub fn neighborhood(&self, idx: usize, r: usize) -> Vec<usize> {
        let m = self.multi(idx);
        let n = self.dim();
        let lo: Vec<usize> = (0..n).map(|i| m[i].saturating_sub(r)).collect();
        let hi: Vec<usize> = (0..n).map(|i| (m[i] + r).min(self.counts[i] - 1)).collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            out.push(self.flat(&cur));
            let mut axis = n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }

    /// Whether the full `(2r+1)ⁿ` block around the node lies in the grid.
    pub fn has_full_neighborhood(&self, idx: usize, r: usize) -> bool {
        let m = self.multi(idx);
        m.iter().zip(&self.counts).all(|(&i, &c)| i >= r && i + r < c)
    }

    /// Axis neighbours (±1 along each axis) present in the grid.
    pub fn axis_neighbors(&self, idx: usize) -> Vec<usize> {
        let m = self.multi(idx);
        let mut out = Vec::with_capacity(2 * self.dim());
        for i in 0..self.dim() {
            if m[i] > 0 {
                out.push(idx - self.strides[i]);
            }
            if m[i] + 1 < self.counts[i] {
                out.push(idx + self.strides[i]);
            }
        }
        out
    }
}
