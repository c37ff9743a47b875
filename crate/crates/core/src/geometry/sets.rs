use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{direction_fan, dist, normalize};
use crate::solver::{Grid, GridMask};
use crate::target::TargetSet;

const FAN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerBallReport {
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub pass_fraction: f64,
    pub certified: usize,
    pub boundary_count: usize,
    /// Boundary node with the smallest clearance ratio.
    #[serde(serialize_with = "crate::io::serialize_g12_vec")]
    pub worst_boundary_point: Vec<f64>,
    /// Best clearance over the candidate directions at the worst point,
    /// divided by `rho`.
    #[serde(serialize_with = "crate::io::serialize_g12")]
    pub worst_clearance: f64,
}

/// Distance from `c` to the nearest grid node outside `set`, searched up to
/// `reach`. Returns `reach` when none is closer.
pub(crate) fn clearance(set: &GridMask, c: &[f64], reach: f64) -> f64 {
    let grid = set.grid();
    let n = grid.dim();
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    for i in 0..n {
        let s = grid.spacing()[i];
        let a = ((c[i] - reach - grid.lower()[i]) / s).floor();
        let b = ((c[i] + reach - grid.lower()[i]) / s).ceil();
        let last = (grid.counts()[i] - 1) as f64;
        if b < 0.0 || a > last {
            return reach;
        }
        lo[i] = a.max(0.0) as usize;
        hi[i] = b.min(last) as usize;
    }
    let mut best = reach;
    let mut cur = lo.clone();
    let mut y = vec![0.0; n];
    loop {
        let idx = grid.flat(&cur);
        if !set.contains(idx) {
            for i in 0..n {
                y[i] = grid.coord(i, cur[i]);
            }
            best = best.min(dist(&y, c));
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return best;
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

/// Unit direction pointing away from the axis neighbours outside `set`.
pub(crate) fn discrete_inward_normal(set: &GridMask, idx: usize) -> Option<Vec<f64>> {
    let grid = set.grid();
    let x = grid.point(idx);
    let mut acc = vec![0.0; grid.dim()];
    for j in grid.axis_neighbors(idx) {
        if !set.contains(j) {
            let y = grid.point(j);
            for i in 0..acc.len() {
                acc[i] += x[i] - y[i];
            }
        }
    }
    normalize(&acc)
}

/// Best clearance ratio of `B(x + ρν, ρ)` over candidate `ν`, stopping at
/// the first direction that clears `ρ(1 − slack)`.
fn best_clearance(set: &GridMask, idx: usize, rho: f64, slack: f64) -> f64 {
    let grid = set.grid();
    let x = grid.point(idx);
    let need = rho * (1.0 - slack);
    let mut cands = Vec::with_capacity(FAN + 1);
    if let Some(v) = discrete_inward_normal(set, idx) {
        cands.push(v);
    }
    cands.extend(direction_fan(grid.dim(), FAN));
    let mut best = 0.0f64;
    for v in cands {
        let c: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + rho * b).collect();
        let cl = clearance(set, &c, rho);
        best = best.max(cl / rho);
        if cl >= need {
            break;
        }
    }
    best
}

/// For each boundary node of `set`, looks for a unit `ν` with
/// `B(x + ρν, ρ(1 − slack))` free of nodes outside `set`.
pub fn check_inner_ball(set: &GridMask, rho: f64, slack: f64) -> Result<InnerBallReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Input(format!("rho must be positive, got {rho}")));
    }
    if !(0.0..1.0).contains(&slack) {
        return Err(Error::Input(format!("slack must lie in [0,1), got {slack}")));
    }
    let boundary = set.boundary();
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary("set has no boundary nodes on the grid".into()));
    }
    let mut certified = 0;
    let mut worst = (f64::INFINITY, boundary[0]);
    for &idx in &boundary {
        let ratio = best_clearance(set, idx, rho, slack);
        if ratio >= 1.0 - slack {
            certified += 1;
        }
        if ratio < worst.0 {
            worst = (ratio, idx);
        }
    }
    Ok(InnerBallReport {
        pass_fraction: certified as f64 / boundary.len() as f64,
        certified,
        boundary_count: boundary.len(),
        worst_boundary_point: set.grid().point(worst.1),
        worst_clearance: worst.0,
    })
}

/// Grid nodes where `indicator ≤ 0`.
pub fn indicator_mask(grid: &Grid, indicator: impl Fn(&[f64]) -> f64) -> GridMask {
    let inside = (0..grid.len()).map(|i| indicator(&grid.point(i)) <= 0.0).collect();
    GridMask::new(grid.clone(), inside).expect("mask matches grid")
}

/// Points of `∂S` where grid edges cross it, located by bisection along
/// each axis edge whose endpoints straddle the target.
pub fn target_boundary_points(target: &TargetSet, grid: &Grid) -> Vec<Vec<f64>> {
    let mask = indicator_mask(grid, |x| target.indicator(x));
    let mut out = Vec::new();
    for idx in 0..grid.len() {
        if !mask.contains(idx) {
            continue;
        }
        let m = grid.multi(idx);
        for axis in 0..grid.dim() {
            for forward in [false, true] {
                let j = if forward {
                    if m[axis] + 1 >= grid.counts()[axis] {
                        continue;
                    }
                    idx + grid.strides()[axis]
                } else {
                    if m[axis] == 0 {
                        continue;
                    }
                    idx - grid.strides()[axis]
                };
                if !mask.contains(j) {
                    out.push(target.bisect_boundary(&grid.point(idx), &grid.point(j), 60));
                }
            }
        }
    }
    out
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("Hausdorff distance needs nonempty sets".into()));
    }
    let one_way = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| q.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_way(a, b).max(one_way(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn square_grid(h: f64) -> Grid {
        Grid::with_spacing(vec![-0.5, -0.5], vec![1.5, 1.5], h).unwrap()
    }

    #[test]
    fn disk_has_inner_balls() {
        let g = Grid::with_spacing(vec![-1.2, -1.2], vec![1.2, 1.2], 0.01).unwrap();
        let disk = indicator_mask(&g, |x| norm(x) - 1.0);
        let rep = check_inner_ball(&disk, 0.5, 0.02).unwrap();
        assert!(rep.pass_fraction >= 0.99, "{rep:?}");
    }

    /// Independent containment oracle: every grid node within
    /// `ρ(1 − slack)` of `x + ρν` lies in the square, for some `ν` on a fine
    /// fan.
    fn square_oracle(g: &Grid, x: &[f64], rho: f64, slack: f64) -> bool {
        (0..720).any(|k| {
            let a = k as f64 * std::f64::consts::PI / 360.0;
            let c = [x[0] + rho * a.cos(), x[1] + rho * a.sin()];
            (0..g.len()).all(|i| {
                let y = g.point(i);
                let inside = (0.0..=1.0).contains(&y[0]) && (0.0..=1.0).contains(&y[1]);
                inside || ((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)).sqrt() >= rho * (1.0 - slack)
            })
        })
    }

    #[test]
    fn square_edges_and_corners() {
        let g = square_grid(0.05);
        let sq = indicator_mask(&g, |x| (-x[0]).max(x[0] - 1.0).max(-x[1]).max(x[1] - 1.0));
        let rep = check_inner_ball(&sq, 0.1, 0.1).unwrap();
        for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let idx = g.nearest(&corner);
            let ours = best_clearance(&sq, idx, 0.1, 0.1) >= 0.9;
            assert_eq!(ours, square_oracle(&g, &corner, 0.1, 0.1));
        }
        assert_eq!(rep.pass_fraction, 1.0, "{rep:?}");

        // Away from the corners the fine grid certifies too.
        let g = square_grid(0.01);
        let sq = indicator_mask(&g, |x| (-x[0]).max(x[0] - 1.0).max(-x[1]).max(x[1] - 1.0));
        for edge in [[0.5, 0.0], [0.0, 0.3], [1.0, 0.7], [0.2, 1.0]] {
            assert!(best_clearance(&sq, g.nearest(&edge), 0.1, 0.01) >= 0.99);
        }
    }

    #[test]
    fn thin_strip_fails() {
        let g = Grid::with_spacing(vec![-0.5, -0.5], vec![1.5, 0.5], 0.01).unwrap();
        let strip = indicator_mask(&g, |x| (x[1].abs() - 0.025).max(-x[0]).max(x[0] - 1.0));
        let rep = check_inner_ball(&strip, 0.1, 0.02).unwrap();
        assert_eq!(rep.certified, 0);
    }

    #[test]
    fn empty_boundary() {
        let g = Grid::with_spacing(vec![0.0, 0.0], vec![1.0, 1.0], 0.1).unwrap();
        let none = indicator_mask(&g, |_| 1.0);
        assert!(matches!(check_inner_ball(&none, 0.1, 0.0), Err(Error::EmptyBoundary(_))));
    }

    #[test]
    fn boundary_points_lie_on_target() {
        let t = crate::scenarios::eikonal_scenario(1.0).target;
        let g = Grid::with_spacing(vec![-1.5, -1.5], vec![1.5, 1.5], 0.1).unwrap();
        let pts = target_boundary_points(&t, &g);
        assert!(!pts.is_empty());
        for p in &pts {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 0.5]];
        assert!((hausdorff_distance(&a, &b).unwrap() - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(hausdorff_distance(&a, &[]).is_err());
    }
}
