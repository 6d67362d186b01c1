//! Time-indexed probability laws on a grid.
//!
//! A law stores node masses (each slice sums to one), so integrals against it
//! are plain weighted sums. Densities are masses divided by the cell volume.
//! Slices are piecewise constant in time.

use serde::{Deserialize, Serialize};

use crate::error::{param, precondition, Error, Result};
use crate::grid::{Axis, Grid};

/// Mass tolerance for an already normalized slice.
pub const MASS_TOL: f64 = 1e-9;

/// How samples are turned into a law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Nearest-node histogram.
    #[default]
    Histogram,
    /// Gaussian kernel density, bandwidth two cell widths.
    Kde,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Law {
    grid: Grid,
    stamps: Vec<f64>,
    masses: Vec<Vec<f64>>,
}

impl Law {
    /// Builds a law from node masses; every slice must be nonnegative and
    /// sum to one within [`MASS_TOL`].
    pub fn new(grid: Grid, stamps: Vec<f64>, masses: Vec<Vec<f64>>) -> Result<Self> {
        if stamps.is_empty() || stamps.len() != masses.len() {
            return Err(param("stamps", "need one mass slice per stamp"));
        }
        if stamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(param("stamps", "must be strictly increasing"));
        }
        for (k, m) in masses.iter().enumerate() {
            if m.len() != grid.len() {
                return Err(Error::GridMismatch(format!("slice {k} length differs from node count")));
            }
            if m.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(precondition(format!("slice {k} has negative or non-finite mass")));
            }
            let total: f64 = m.iter().sum();
            if (total - 1.0).abs() > MASS_TOL {
                return Err(precondition(format!("slice {k} has mass {total}, expected 1")));
            }
        }
        Ok(Law { grid, stamps, masses })
    }

    /// Projects nonnegative unnormalized weights onto the grid and rescales
    /// each slice to unit mass.
    pub fn from_weights(grid: Grid, stamps: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let mut masses = Vec::with_capacity(weights.len());
        for (k, w) in weights.into_iter().enumerate() {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(precondition(format!("slice {k} has no mass")));
            }
            masses.push(w.into_iter().map(|v| v / total).collect());
        }
        Law::new(grid, stamps, masses)
    }

    /// Stationary law from a pointwise density, normalized on the grid.
    pub fn from_pdf<G: Fn(&[f64]) -> f64>(grid: Grid, pdf: G) -> Result<Self> {
        let w = (0..grid.len()).map(|i| pdf(&grid.point(i)[..grid.dim()])).collect();
        Law::from_weights(grid, vec![0.0], vec![w])
    }

    /// Uniform law on the nodes inside the box `[lo, hi]` (per axis).
    pub fn uniform(grid: Grid, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = grid.dim();
        let w = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let inside = (0..d).all(|k| p[k] >= lo[k] - 1e-12 && p[k] <= hi[k] + 1e-12);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Law::from_weights(grid, vec![0.0], vec![w])
    }

    /// Law from samples: `points[k]` holds the flattened `n × d` positions
    /// recorded at `stamps[k]`.
    pub fn from_samples(grid: Grid, stamps: Vec<f64>, points: &[Vec<f64>], estimator: Estimator) -> Result<Self> {
        let d = grid.dim();
        let mut weights = Vec::with_capacity(points.len());
        for pts in points {
            let mut w = vec![0.0; grid.len()];
            for x in pts.chunks_exact(d) {
                w[grid.nearest_index(x)] += 1.0;
            }
            weights.push(w);
        }
        let law = Law::from_weights(grid, stamps, weights)?;
        match estimator {
            Estimator::Histogram => Ok(law),
            Estimator::Kde => {
                let bw = 2.0 * law.grid.max_width();
                law.smooth_heat(bw)
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stamps(&self) -> &[f64] {
        &self.stamps
    }

    pub fn masses(&self, k: usize) -> &[f64] {
        &self.masses[k]
    }

    /// Density values (mass per cell volume) of slice `k`.
    pub fn density(&self, k: usize) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        self.masses[k].iter().map(|m| m / vol).collect()
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    /// Index of the slice in force at time `t`.
    pub fn slice_index(&self, t: f64) -> usize {
        self.stamps.partition_point(|s| *s <= t).saturating_sub(1)
    }

    /// A single-slice law holding slice `k`.
    pub fn slice(&self, k: usize) -> Law {
        Law {
            grid: self.grid.clone(),
            stamps: vec![0.0],
            masses: vec![self.masses[k].clone()],
        }
    }

    /// Duration each slice is in force within `[0, T]`. The first slice
    /// also covers any gap before its stamp.
    pub fn time_weights(&self, horizon: f64) -> Vec<f64> {
        let n = self.stamps.len();
        (0..n)
            .map(|k| {
                let start = if k == 0 { 0.0 } else { self.stamps[k].min(horizon) };
                let end = if k + 1 < n {
                    self.stamps[k + 1].min(horizon)
                } else {
                    horizon
                };
                (end - start).max(0.0)
            })
            .collect()
    }

    /// `∫₀^T ∫ g(t, x) u(t, dx) dt`, where `g(t_k)` returns node values at
    /// the stamp of slice `k`.
    pub fn time_integral<G>(&self, horizon: f64, mut g: G) -> Result<f64>
    where
        G: FnMut(f64) -> Result<Vec<f64>>,
    {
        let mut total = 0.0;
        for (k, w) in self.time_weights(horizon).into_iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let vals = g(self.stamps[k])?;
            if vals.len() != self.grid.len() {
                return Err(Error::GridMismatch("integrand length differs from node count".into()));
            }
            total += w * dot(&vals, &self.masses[k]);
        }
        Ok(total)
    }

    /// Convolves every slice with a discrete Gaussian of standard deviation
    /// `s` (per axis), renormalizing the result.
    pub fn smooth_heat(&self, s: f64) -> Result<Law> {
        if !(s > 0.0) {
            return Err(param("s", "smoothing scale must be positive"));
        }
        let taps = gaussian_taps(&self.grid, s);
        let weights = self
            .masses
            .iter()
            .map(|m| crate::fields::convolve(&self.grid, m, &taps))
            .collect();
        Law::from_weights(self.grid.clone(), self.stamps.clone(), weights)
    }

    /// One-dimensional law moved to a grid with `factor` times fewer cells;
    /// each fine node's mass goes to the nearest coarse node.
    pub fn coarsen(&self, factor: usize) -> Result<Law> {
        if self.grid.dim() != 1 {
            return Err(precondition("coarsening is implemented for one-dimensional laws"));
        }
        let ax = self.grid.axis(0);
        if factor == 0 || !ax.cells.is_multiple_of(factor) {
            return Err(param("factor", "must divide the cell count"));
        }
        let coarse = Grid::new(vec![Axis::new(ax.lower, ax.upper, ax.cells / factor, ax.periodic)?])?;
        let masses = self
            .masses
            .iter()
            .map(|m| {
                let mut out = vec![0.0; coarse.len()];
                let n = coarse.len();
                for (i, v) in m.iter().enumerate() {
                    let (q, r) = (i / factor, i % factor);
                    // ties split evenly so the mean is not biased
                    if 2 * r < factor {
                        out[q % n] += v;
                    } else if 2 * r == factor {
                        out[q % n] += 0.5 * v;
                        out[(q + 1) % n] += 0.5 * v;
                    } else {
                        out[(q + 1) % n] += v;
                    }
                }
                out
            })
            .collect();
        Ok(Law {
            grid: coarse,
            stamps: self.stamps.clone(),
            masses,
        })
    }

    /// Mean of axis-0 coordinate under slice `k`.
    pub fn mean(&self, k: usize) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.point(i)[0] * self.masses[k][i])
            .sum()
    }

    /// Variance of the axis-0 coordinate under slice `k`.
    pub fn variance(&self, k: usize) -> f64 {
        let m = self.mean(k);
        (0..self.grid.len())
            .map(|i| {
                let x = self.grid.point(i)[0] - m;
                x * x * self.masses[k][i]
            })
            .sum()
    }
}

/// Ordered dot product.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete Gaussian stencil (standard deviation `s`, cut at 5s), unit sum.
pub(crate) fn gaussian_taps(grid: &Grid, s: f64) -> Vec<([isize; 2], f64)> {
    let d = grid.dim();
    let reach: Vec<isize> = (0..2)
        .map(|k| {
            if k < d {
                (5.0 * s / grid.axis(k).width()).ceil() as isize
            } else {
                0
            }
        })
        .collect();
    let mut taps = Vec::new();
    for i in -reach[0]..=reach[0] {
        for j in -reach[1]..=reach[1] {
            let x = i as f64 * grid.axis(0).width();
            let y = if d > 1 { j as f64 * grid.axis(1).width() } else { 0.0 };
            taps.push(([i, j], (-(x * x + y * y) / (2.0 * s * s)).exp()));
        }
    }
    let total: f64 = taps.iter().map(|t| t.1).sum();
    taps.iter_mut().for_each(|t| t.1 /= total);
    taps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Grid {
        Grid::line(-4.0, 4.0, 256, false).unwrap()
    }

    #[test]
    fn rejects_unnormalized_slices() {
        let g = line();
        let m = vec![1.0; g.len()];
        assert!(Law::new(g, vec![0.0], vec![m]).is_err());
    }

    #[test]
    fn uniform_mean_and_time_integral() {
        let g = Grid::line(-1.0, 2.0, 96, false).unwrap();
        let u = Law::uniform(g, &[0.0], &[1.0]).unwrap();
        assert!((u.mean(0) - 0.5).abs() < 1e-12);
        let v = u.time_integral(2.0, |_| Ok(vec![3.0; 97])).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn time_weights_cover_horizon() {
        let g = line();
        let m = vec![1.0 / g.len() as f64; g.len()];
        let u = Law::new(g, vec![0.0, 0.5, 2.0], vec![m.clone(), m.clone(), m]).unwrap();
        assert_eq!(u.time_weights(1.0), vec![0.5, 0.5, 0.0]);
        assert_eq!(u.slice_index(0.7), 1);
    }

    #[test]
    fn gaussian_law_moments_and_smoothing() {
        let g = Grid::line(-8.0, 8.0, 512, false).unwrap();
        let u = Law::from_pdf(g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
        assert!(u.mean(0).abs() < 1e-12);
        assert!((u.variance(0) - 1.0).abs() < 1e-9);
        let s = u.smooth_heat(0.5).unwrap();
        assert!((s.variance(0) - 1.25).abs() < 1e-5, "{}", s.variance(0));
    }

    #[test]
    fn coarsening_keeps_mass_and_mean() {
        let u = Law::from_pdf(line(), |x| (-(x[0] - 0.3).powi(2)).exp()).unwrap();
        let c = u.coarsen(4).unwrap();
        assert_eq!(c.grid().len(), 65);
        assert!((c.masses(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((c.mean(0) - u.mean(0)).abs() < 1e-3);
    }

    #[test]
    fn histogram_from_samples() {
        let g = Grid::line(0.0, 1.0, 8, false).unwrap();
        let u = Law::from_samples(g, vec![0.0], &[vec![0.0, 0.0, 1.0, 0.5]], Estimator::Histogram).unwrap();
        assert_eq!(u.masses(0)[0], 0.5);
        assert_eq!(u.masses(0)[4], 0.25);
        assert_eq!(u.masses(0)[8], 0.25);
    }
}
