use crate::error::{Error, Result};
use crate::solver::{Grid, ScalarField};

/// A subset of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    grid: Grid,
    inside: Vec<bool>,
}

impl GridMask {
    pub fn new(grid: Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::Input("mask length does not match grid".into()));
        }
        Ok(Self { grid, inside })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Nodes in the mask with an axis neighbour outside it.
    pub fn boundary(&self) -> Vec<usize> {
        self.indices()
            .filter(|&i| self.grid.axis_neighbors(i).iter().any(|&j| !self.inside[j]))
            .collect()
    }

    /// Whether a point lies in the mask, judged at its nearest node.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.grid.contains(x) && self.inside[self.grid.nearest(x)]
    }
}

/// Grid nodes of `S'(r) = {T ≥ r}`.
pub fn sublevel_set(field: &ScalarField, r: f64) -> Result<GridMask> {
    if !(r >= 0.0 && r < field.cap()) {
        return Err(Error::OutOfRange(format!("level {r} outside [0, {})", field.cap())));
    }
    let inside = field.values().iter().map(|&t| t >= r).collect();
    GridMask::new(field.grid().clone(), inside)
}

/// Nodes where the field looks continuous: interior nodes off the target
/// and away from unreached nodes whose 3ⁿ-block oscillation is at most
/// `κ·h·(1 + L̂)`. The slope estimate `L̂` is the growth of the oscillation
/// from the 3ⁿ block to the 5ⁿ block, per cell, so an isolated jump does
/// not excuse itself.
pub fn restrict_continuity_region(field: &ScalarField, kappa: f64) -> GridMask {
    let grid = field.grid();
    let h = grid.h();
    let inside = (0..grid.len())
        .map(|i| {
            if field.get(i) <= 0.0 || field.is_capped(i) || !grid.has_full_neighborhood(i, 1) {
                return false;
            }
            let (mut lo3, mut hi3) = (f64::INFINITY, f64::NEG_INFINITY);
            for j in grid.neighborhood(i, 1) {
                if field.is_capped(j) {
                    return false;
                }
                lo3 = lo3.min(field.get(j));
                hi3 = hi3.max(field.get(j));
            }
            let (mut lo5, mut hi5) = (lo3, hi3);
            for j in grid.neighborhood(i, 2) {
                if !field.is_capped(j) {
                    lo5 = lo5.min(field.get(j));
                    hi5 = hi5.max(field.get(j));
                }
            }
            let osc3 = hi3 - lo3;
            let slope = ((hi5 - lo5 - osc3) / h).max(0.0);
            osc3 <= kappa * h * (1.0 + slope)
        })
        .collect();
    GridMask { grid: grid.clone(), inside }
}
