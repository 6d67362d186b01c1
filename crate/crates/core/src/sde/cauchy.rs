//! Cauchy tables over a coupled family of regularized ensembles.

use serde::{Deserialize, Serialize};

use super::ensemble::PathEnsemble;
use super::functionals::sup_moment;
use crate::error::{param, Result};
use crate::fields::CoefficientField;
use crate::law::Estimator;
use crate::report::{Report, Table};

/// How ε, K and L follow from the coefficient distance η(n, m):
/// `ε = η^{eps_power}`, `K = |log ε|^{k_exponent}`,
/// `L = |log ε|^{l_exponent / p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRules {
    pub eps_power: f64,
    pub k_exponent: f64,
    pub l_exponent: f64,
}

impl Default for SelectionRules {
    fn default() -> Self {
        SelectionRules {
            eps_power: 0.5,
            k_exponent: 0.125,
            l_exponent: 0.125,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyMatrix {
    pub p: f64,
    /// Mollification scale of each family member.
    pub deltas: Vec<f64>,
    /// `E sup_t |X^n − X^m|^p`, symmetric, zero diagonal.
    pub moment: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    /// `∫∫ (|σ_n − σ_m| + |F_n − F_m|) du_n dt`.
    pub eta: Vec<Vec<f64>>,
}

impl CauchyMatrix {
    /// Entry with the two largest indices.
    pub fn finest(&self) -> (f64, f64) {
        let n = self.deltas.len();
        (self.moment[n - 2][n - 1], self.stderr[n - 2][n - 1])
    }

    /// Along each column `m`, entries `(n, m)` with `n < m` must not grow
    /// with `n` beyond `z` combined standard errors. Returns the offending
    /// `(n1, n2, m)` triples.
    pub fn monotonicity_breaches(&self, z: f64) -> Vec<(usize, usize, usize)> {
        let n = self.deltas.len();
        let mut out = Vec::new();
        for m in 0..n {
            for n1 in 0..m {
                for n2 in n1 + 1..m {
                    let (e1, s1) = (self.moment[n1][m], self.stderr[n1][m]);
                    let (e2, s2) = (self.moment[n2][m], self.stderr[n2][m]);
                    if e2 > e1 + z * (s1 * s1 + s2 * s2).sqrt() {
                        out.push((n1, n2, m));
                    }
                }
            }
        }
        out
    }
}

/// η(n, m) against the empirical law of ensemble `n` on its field grid.
pub fn coefficient_distance(
    fn_: &CoefficientField,
    fm: &CoefficientField,
    ens_n: &PathEnsemble,
    horizon: f64,
) -> Result<f64> {
    fn_.grid().ensure_same(fm.grid(), "coefficient distance")?;
    let law = ens_n.law(fn_.grid(), Estimator::Histogram)?;
    let len = fn_.grid().len();
    law.time_integral(horizon, |t| {
        let (a, b) = (fn_.slice_at(t), fm.slice_at(t));
        Ok((0..len)
            .map(|i| {
                let ds: f64 = a
                    .diffusion
                    .iter()
                    .zip(&b.diffusion)
                    .map(|(x, y)| (x[i] - y[i]).powi(2))
                    .sum();
                let df: f64 = a.drift.iter().zip(&b.drift).map(|(x, y)| (x[i] - y[i]).powi(2)).sum();
                ds.sqrt() + df.sqrt()
            })
            .collect())
    })
}

/// Builds the Cauchy matrix for a coupled family (fields paired with their
/// ensembles, ordered by decreasing mollification scale) and checks
/// monotonicity within `z` standard errors.
pub fn cauchy_diagnostic(
    family: &[(CoefficientField, PathEnsemble)],
    p: f64,
    horizon: f64,
    rules: &SelectionRules,
    z: f64,
) -> Result<(CauchyMatrix, Report)> {
    if family.len() < 4 {
        return Err(param(
            "family",
            format!("need at least 4 members, got {}", family.len()),
        ));
    }
    if !(p > 1.0) {
        return Err(param("p", format!("must exceed 1, got {p}")));
    }
    for (_, e) in &family[1..] {
        family[0].1.ensure_coupled(e)?;
    }
    let n = family.len();
    let mut moment = vec![vec![0.0; n]; n];
    let mut stderr = vec![vec![0.0; n]; n];
    let mut eta = vec![vec![0.0; n]; n];
    let mut table = Table::new(&[
        "n", "m", "delta_n", "delta_m", "moment", "stderr", "eta", "epsilon", "K", "L",
    ]);
    for i in 0..n {
        for j in i + 1..n {
            let (mean, se) = sup_moment(&family[i].1, &family[j].1, p)?;
            moment[i][j] = mean;
            moment[j][i] = mean;
            stderr[i][j] = se;
            stderr[j][i] = se;
            eta[i][j] = coefficient_distance(&family[i].0, &family[j].0, &family[i].1, horizon)?;
            eta[j][i] = coefficient_distance(&family[j].0, &family[i].0, &family[j].1, horizon)?;
            let eps = eta[i][j].powf(rules.eps_power);
            let log = eps.ln().abs();
            table.push(vec![
                i as f64,
                j as f64,
                family[i].0.provenance().delta,
                family[j].0.provenance().delta,
                mean,
                se,
                eta[i][j],
                eps,
                log.powf(rules.k_exponent),
                log.powf(rules.l_exponent / p),
            ]);
        }
    }
    let matrix = CauchyMatrix {
        p,
        deltas: family.iter().map(|(f, _)| f.provenance().delta).collect(),
        moment,
        stderr,
        eta,
    };
    let mut report = Report::new("cauchy_monotonicity");
    let breaches = matrix.monotonicity_breaches(z);
    for (n1, n2, m) in &breaches {
        report.record_violation(
            vec![*n1 as f64, *n2 as f64, *m as f64],
            matrix.moment[*n2][*m],
            matrix.moment[*n1][*m],
        );
    }
    let (fin, fin_se) = matrix.finest();
    report.constant("p", p);
    report.constant("z", z);
    report.constant("finest_moment", fin);
    report.constant("finest_stderr", fin_se);
    report.tables.insert("cauchy".into(), table);
    Ok((matrix, report))
}
