use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv};
use crate::solver::Grid;

/// Grid samples of a time function. Nodes holding `cap` were not reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    cap: f64,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, cap: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::Input(format!("cap must be positive, got {cap}")));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= cap)) {
            return Err(Error::Input(format!("field value {v} outside [0, {cap}]")));
        }
        Ok(Self { grid, values, cap })
    }

    /// Samples `f` at every node, clamping into `[0, cap]`; `None` maps to
    /// `cap`.
    pub fn from_fn(grid: Grid, cap: f64, f: impl Fn(&[f64]) -> Option<f64>) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.point(i)).map_or(cap, |v| v.clamp(0.0, cap)))
            .collect();
        Self::new(grid, values, cap)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn is_capped(&self, idx: usize) -> bool {
        self.values[idx] >= self.cap
    }

    /// Multilinear interpolation; `cap` outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        interpolate(&self.grid, &self.values, self.cap, x)
    }

    /// Central difference gradient of the interpolant with one-cell steps.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                let s = self.grid.spacing()[i];
                y[i] = x[i] + s;
                let a = self.interpolate(&y);
                y[i] = x[i] - s;
                let b = self.interpolate(&y);
                y[i] = x[i];
                (a - b) / (2.0 * s)
            })
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.grid.dim()).map(|i| format!("x{i}")).collect();
        h.push("T".into());
        h
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.grid.len())
            .map(|i| {
                let mut r = self.grid.point(i);
                r.push(self.values[i]);
                r
            })
            .collect();
        write_csv(path, &self.header(), &rows)
    }

    /// Reads a field written by [`ScalarField::write_csv`]. The grid is
    /// recovered from the distinct coordinates per axis.
    pub fn read_csv<P: AsRef<Path>>(path: P, cap: f64) -> Result<Self> {
        let (header, rows) = read_csv(path)?;
        let n = header.len().saturating_sub(1);
        if n == 0 || header.last().map(String::as_str) != Some("T") {
            return Err(Error::Parse("field CSV header must be x1,..,xn,T".into()));
        }
        for (i, name) in header[..n].iter().enumerate() {
            if *name != format!("x{}", i + 1) {
                return Err(Error::Parse(format!("unexpected column {name:?}")));
            }
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for r in &rows {
            for i in 0..n {
                axes[i].push(r[i]);
            }
        }
        for a in &mut axes {
            a.sort_by(f64::total_cmp);
            a.dedup();
        }
        let lower = axes.iter().map(|a| a[0]).collect();
        let upper = axes.iter().map(|a| a[a.len() - 1]).collect();
        let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
        let grid = Grid::new(lower, upper, counts).map_err(|e| Error::Parse(e.to_string()))?;
        if grid.len() != rows.len() {
            return Err(Error::Parse(format!("{} rows do not form a full grid of {} nodes", rows.len(), grid.len())));
        }
        let mut values = vec![0.0; grid.len()];
        let mut multi = vec![0; n];
        for (k, r) in rows.iter().enumerate() {
            grid.multi_into(k, &mut multi);
            for i in 0..n {
                let expect = axes[i][multi[i]];
                if r[i] != expect {
                    return Err(Error::Parse(format!("row {} is out of row-major order", k + 2)));
                }
            }
            values[k] = r[n];
        }
        Self::new(grid, values, cap).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Locates the cell containing `x`: per-axis lower node index and fraction.
/// `None` outside the box.
#[inline]
pub(crate) fn locate(grid: &Grid, x: &[f64], base: &mut [usize], frac: &mut [f64]) -> bool {
    for i in 0..grid.dim() {
        let s = (x[i] - grid.lower()[i]) / grid.spacing()[i];
        let last = (grid.counts()[i] - 1) as f64;
        if !(s >= -1e-9 && s <= last + 1e-9) {
            return false;
        }
        let k = s.floor().clamp(0.0, last - 1.0);
        base[i] = k as usize;
        frac[i] = (s - k).clamp(0.0, 1.0);
    }
    true
}

#[inline]
pub(crate) fn interpolate(grid: &Grid, values: &[f64], cap: f64, x: &[f64]) -> f64 {
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    let n = grid.dim();
    if !locate(grid, x, &mut base[..n], &mut frac[..n]) {
        return cap;
    }
    let strides = grid.strides();
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut idx = 0;
        for i in 0..n {
            if corner >> i & 1 == 1 {
                w *= frac[i];
                idx += (base[i] + 1) * strides[i];
            } else {
                w *= 1.0 - frac[i];
                idx += base[i] * strides[i];
            }
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}
