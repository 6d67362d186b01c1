//! Uniform tensor grids in one or two dimensions.
//!
//! Nodes sit at `lower + i * h` with `h = (upper - lower) / cells`. A periodic
//! axis has `cells` nodes (the upper bound is identified with the lower one);
//! a bounded axis has `cells + 1` nodes, both endpoints included. Outside a
//! bounded axis values are extended by the nearest boundary value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted cell count per axis.
pub const MIN_CELLS: usize = 8;

/// `⌊s⌋` without a libm call; exact for `|s| < 2^63`.
#[inline]
fn floor_i64(s: f64) -> i64 {
    let t = s as i64;
    if (t as f64) > s {
        t - 1
    } else {
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, cells: usize, periodic: bool) -> Result<Self> {
        let axis = Axis {
            lower,
            upper,
            cells,
            periodic,
        };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.lower >= self.upper {
            return Err(Error::InvalidGrid(format!(
                "lower bound {} must be below upper bound {}",
                self.lower, self.upper
            )));
        }
        if self.cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "cell count {} is below the minimum of {MIN_CELLS}",
                self.cells
            )));
        }
        Ok(())
    }

    /// Cell width.
    #[inline]
    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        if self.periodic {
            self.cells
        } else {
            self.cells + 1
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.width()
    }

    /// Maps a possibly out-of-range node index onto the axis using the
    /// extension rule (wrap or clamp).
    #[inline]
    pub fn resolve(&self, i: isize) -> usize {
        let n = self.nodes() as isize;
        if self.periodic {
            i.rem_euclid(n) as usize
        } else {
            i.clamp(0, n - 1) as usize
        }
    }

    /// Neighbouring nodes and the weight of the right one for linear
    /// interpolation at `x`.
    #[inline]
    pub fn bracket(&self, x: f64) -> (usize, usize, f64) {
        let n = self.nodes();
        let s = (x - self.lower) * (self.cells as f64 / self.length());
        if self.periodic {
            let fl = floor_i64(s);
            let i0 = fl.rem_euclid(n as i64) as usize;
            (i0, (i0 + 1) % n, s - fl as f64)
        } else {
            // truncation is floor on the clamped, nonnegative range
            let s = s.clamp(0.0, self.cells as f64);
            let i0 = (s as usize).min(n - 2);
            (i0, i0 + 1, s - i0 as f64)
        }
    }

    #[inline]
    pub fn nearest(&self, x: f64) -> usize {
        let h = self.width();
        if self.periodic {
            let s = ((x - self.lower).rem_euclid(self.length()) / h).round() as usize;
            s % self.nodes()
        } else {
            let s = ((x - self.lower) / h).round();
            s.clamp(0.0, self.cells as f64) as usize
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.periodic || (x >= self.lower && x <= self.upper)
    }

    /// Distance between two coordinates, minimum image on periodic axes.
    #[inline]
    pub fn separation(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.periodic {
            let l = self.length();
            let d = d.rem_euclid(l);
            d.min(l - d)
        } else {
            d
        }
    }
}

/// Interpolation nodes and weights at one point; see [`Grid::stencil`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub nodes: [usize; 4],
    pub weights: [f64; 4],
    pub len: usize,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len {
            acc += self.weights[k] * values[self.nodes[k]];
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        for axis in &axes {
            axis.validate()?;
        }
        Ok(Grid { axes })
    }

    /// Builds a grid from per-axis bounds, cell counts and periodic flags.
    pub fn make(d: usize, bounds: &[(f64, f64)], counts: &[usize], periodic: &[bool]) -> Result<Self> {
        if bounds.len() != d || counts.len() != d || periodic.len() != d {
            return Err(Error::InvalidGrid(format!(
                "expected {d} entries for bounds, counts and periodic flags"
            )));
        }
        let axes = (0..d)
            .map(|k| Axis {
                lower: bounds[k].0,
                upper: bounds[k].1,
                cells: counts[k],
                periodic: periodic[k],
            })
            .collect();
        Grid::new(axes)
    }

    pub fn line(lower: f64, upper: f64, cells: usize, periodic: bool) -> Result<Self> {
        Grid::new(vec![Axis::new(lower, upper, cells, periodic)?])
    }

    pub fn plane(x: Axis, y: Axis) -> Result<Self> {
        Grid::new(vec![x, y])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Node counts per axis, padded with 1 for one-dimensional grids.
    #[inline]
    pub fn shape(&self) -> [usize; 2] {
        match self.axes.len() {
            1 => [self.axes[0].nodes(), 1],
            _ => [self.axes[0].nodes(), self.axes[1].nodes()],
        }
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        let [a, b] = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    pub fn max_width(&self) -> f64 {
        self.axes.iter().map(Axis::width).fold(0.0, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        self.axes.iter().map(Axis::width).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.axes.iter().map(|a| a.length() * a.length()).sum::<f64>().sqrt()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape()[1] + j
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        let n1 = self.shape()[1];
        (idx / n1, idx % n1)
    }

    /// Coordinates of node `idx`; the second entry is zero in one dimension.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.unravel(idx);
        match self.axes.len() {
            1 => [self.axes[0].coord(i), 0.0],
            _ => [self.axes[0].coord(i), self.axes[1].coord(j)],
        }
    }

    /// Coordinates of every node along axis 0 (one-dimensional grids).
    pub fn coords(&self, k: usize) -> Vec<f64> {
        let a = &self.axes[k];
        (0..a.nodes()).map(|i| a.coord(i)).collect()
    }

    /// Nodes and weights of multilinear interpolation at `x` (two entries
    /// in one dimension, four in two), with the grid's extension rule
    /// outside the box.
    #[inline]
    pub fn stencil(&self, x: &[f64]) -> Stencil {
        match self.axes.len() {
            1 => {
                let (i0, i1, w) = self.axes[0].bracket(x[0]);
                Stencil {
                    nodes: [i0, i1, 0, 0],
                    weights: [1.0 - w, w, 0.0, 0.0],
                    len: 2,
                }
            }
            _ => {
                let (i0, i1, wx) = self.axes[0].bracket(x[0]);
                let (j0, j1, wy) = self.axes[1].bracket(x[1]);
                let n1 = self.axes[1].nodes();
                Stencil {
                    nodes: [i0 * n1 + j0, i0 * n1 + j1, i1 * n1 + j0, i1 * n1 + j1],
                    weights: [(1.0 - wx) * (1.0 - wy), (1.0 - wx) * wy, wx * (1.0 - wy), wx * wy],
                    len: 4,
                }
            }
        }
    }

    /// Multilinear interpolation of nodal values at `x`, with the grid's
    /// extension rule outside the box.
    #[inline]
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.stencil(x).apply(values)
    }

    pub fn nearest_index(&self, x: &[f64]) -> usize {
        match self.axes.len() {
            1 => self.axes[0].nearest(x[0]),
            _ => self.index(self.axes[0].nearest(x[0]), self.axes[1].nearest(x[1])),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &xi)| a.contains(xi))
    }

    /// Euclidean distance between two nodes (minimum image on periodic axes).
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let pa = self.point(a);
        let pb = self.point(b);
        self.axes
            .iter()
            .enumerate()
            .map(|(k, ax)| {
                let s = ax.separation(pa[k], pb[k]);
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{what}: grids differ")));
        }
        Ok(())
    }
}
