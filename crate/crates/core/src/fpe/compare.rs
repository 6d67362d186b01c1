//! Distances between laws on a shared grid, and between empirical samples.

use serde::{Deserialize, Serialize};

use crate::error::{param, precondition, Result};
use crate::law::Law;

/// Largest tolerated mass mismatch between the two inputs.
pub const MASS_MISMATCH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawDistances {
    pub l1: f64,
    /// One-dimensional Wasserstein-1; `None` on two-dimensional grids.
    pub w1: Option<f64>,
}

/// Distances between slice `ka` of `a` and slice `kb` of `b`.
pub fn law_compare_at(a: &Law, ka: usize, b: &Law, kb: usize) -> Result<LawDistances> {
    a.grid().ensure_same(b.grid(), "law comparison")?;
    let (ma, mb) = (a.masses(ka), b.masses(kb));
    masses_compare(a.grid().dim(), a.grid().axis(0).width(), ma, mb)
}

/// Distances between the final slices of `a` and `b`.
pub fn law_compare(a: &Law, b: &Law) -> Result<LawDistances> {
    law_compare_at(a, a.len() - 1, b, b.len() - 1)
}

/// L¹ of node masses; W1 as `h Σ |CDF_a − CDF_b|` in one dimension.
pub fn masses_compare(dim: usize, h: f64, ma: &[f64], mb: &[f64]) -> Result<LawDistances> {
    if ma.len() != mb.len() {
        return Err(param("laws", "mass vectors differ in length"));
    }
    let (sa, sb): (f64, f64) = (ma.iter().sum(), mb.iter().sum());
    if (sa - sb).abs() > MASS_MISMATCH_TOL {
        return Err(precondition(format!("mass mismatch {sa} vs {sb}")));
    }
    let l1 = ma.iter().zip(mb).map(|(x, y)| (x - y).abs()).sum();
    let w1 = (dim == 1).then(|| {
        let mut ca = 0.0;
        let mut cb = 0.0;
        let mut acc = 0.0;
        for (x, y) in ma.iter().zip(mb) {
            ca += x;
            cb += y;
            acc += (ca - cb).abs();
        }
        // the last node's CDF gap is the (tolerated) mass mismatch, not a transport cost
        (acc - (ca - cb).abs()) * h
    });
    Ok(LawDistances { l1, w1 })
}

/// W1 between two equally weighted empirical samples of equal size, via
/// sorted order statistics.
pub fn w1_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(param("samples", "need two nonempty samples of equal size"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
