//! Expectation-maximisation for linear-Gaussian networks with tied CPDs.
//!
//! Missing entries are NaN. Complete rows contribute fixed sufficient statistics;
//! incomplete rows are imputed from the conditional Gaussian of the current joint.

use super::net::{normal_logpdf, Cpd, Dag, LinearGaussianNet, SIGMA_FLOOR};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain drops below this.
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmReport {
    /// Log-likelihood of the parameters entering each iteration.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub ridge: bool,
    pub rows: usize,
}

/// Free parameters: intercept, weights and sigma of every group.
pub fn param_count(dag: &Dag, groups: &[Vec<usize>]) -> usize {
    groups.iter().map(|g| dag.parents(g[0]).len() + 2).sum()
}

struct Stats {
    rows: f64,
    sx: DVector<f64>,
    sxx: DMatrix<f64>,
}

impl Stats {
    fn zeros(n: usize) -> Self {
        Self { rows: 0.0, sx: DVector::zeros(n), sxx: DMatrix::zeros(n, n) }
    }

    fn add(&mut self, o: &Stats) {
        self.rows += o.rows;
        self.sx += &o.sx;
        self.sxx += &o.sxx;
    }
}

fn check_groups(dag: &Dag, groups: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; dag.len()];
    for g in groups {
        let first = *g.first().ok_or_else(|| Error::Model("empty parameter group".into()))?;
        for &i in g {
            if i >= dag.len() || seen[i] {
                return Err(Error::Model(format!("node {i} is missing from or repeated in the tying")));
            }
            seen[i] = true;
            if dag.parents(i).len() != dag.parents(first).len() {
                return Err(Error::Model(format!("tied nodes {first} and {i} have different parent counts")));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Model(format!("node {i} belongs to no parameter group")));
    }
    Ok(())
}

fn initial_cpds(dag: &Dag, groups: &[Vec<usize>], data: &[&Vec<f64>]) -> Vec<Cpd> {
    groups
        .iter()
        .map(|g| {
            let vals: Vec<f64> = data.iter().flat_map(|r| g.iter().map(move |&i| r[i])).filter(|x| !x.is_nan()).collect();
            let n = vals.len().max(1) as f64;
            let m = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
            Cpd { intercept: m, weights: vec![0.0; dag.parents(g[0]).len()], sigma: sd.max(1e-3) }
        })
        .collect()
}

pub fn expand(dag: &Dag, groups: &[Vec<usize>], group_cpds: &[Cpd]) -> Result<LinearGaussianNet> {
    let mut cpds = vec![Cpd::root(0.0, 1.0); dag.len()];
    for (g, c) in groups.iter().zip(group_cpds) {
        for &i in g {
            cpds[i] = c.clone();
        }
    }
    LinearGaussianNet::new(dag.clone(), cpds)
}

/// Fit tied CPDs by EM. Each inner vector of `groups` shares one CPD; parents are tied positionally.
pub fn fit(dag: &Dag, groups: &[Vec<usize>], data: &[Vec<f64>], opts: &EmOptions) -> Result<(Vec<Cpd>, EmReport)> {
    check_groups(dag, groups)?;
    let n = dag.len();
    if let Some(r) = data.iter().find(|r| r.len() != n) {
        return Err(Error::Model(format!("data row has {} values for {n} nodes", r.len())));
    }
    if data.iter().flatten().any(|x| x.is_infinite()) {
        return Err(Error::Model("training data contains infinities".into()));
    }
    let rows: Vec<&Vec<f64>> = data.iter().filter(|r| r.iter().any(|x| !x.is_nan())).collect();
    let need = 10 * param_count(dag, groups);
    if rows.len() < need {
        return Err(Error::InsufficientData { have: rows.len(), need });
    }

    let mut complete = Stats::zeros(n);
    let full: Vec<&Vec<f64>> = rows.iter().copied().filter(|r| r.iter().all(|x| !x.is_nan())).collect();
    if !full.is_empty() {
        let x = DMatrix::from_fn(full.len(), n, |i, j| full[i][j]);
        complete.rows = full.len() as f64;
        complete.sx = x.row_sum().transpose();
        complete.sxx = x.transpose() * &x;
    }
    let mut patterns: BTreeMap<Vec<bool>, Vec<&Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.iter().any(|x| x.is_nan())) {
        patterns.entry(r.iter().map(|x| x.is_nan()).collect()).or_default().push(r);
    }

    let mut group_cpds = initial_cpds(dag, groups, &rows);
    let mut report = EmReport { log_likelihood: Vec::new(), converged: false, ridge: false, rows: rows.len() };
    for _ in 0..opts.max_iter.max(1) {
        let net = expand(dag, groups, &group_cpds)?;
        let mut stats = Stats::zeros(n);
        stats.add(&complete);
        let mut ll: f64 = full.iter().map(|r| net.log_likelihood(r)).sum();
        if !patterns.is_empty() {
            ll += impute(&net, &patterns, &mut stats)?;
        }
        if let Some(&prev) = report.log_likelihood.last() {
            if ll - prev <= opts.tol * prev.abs().max(1.0) {
                report.log_likelihood.push(ll);
                report.converged = true;
                break;
            }
        }
        report.log_likelihood.push(ll);
        let (next, ridge) = m_step(dag, groups, &stats)?;
        report.ridge |= ridge;
        group_cpds = next;
    }
    Ok((group_cpds, report))
}

/// E-step for incomplete rows; returns their observed-data log-likelihood.
fn impute(net: &LinearGaussianNet, patterns: &BTreeMap<Vec<bool>, Vec<&Vec<f64>>>, stats: &mut Stats) -> Result<f64> {
    let n = net.len();
    let (mu, cov) = net.joint();
    let mut ll = 0.0;
    for (mask, rows) in patterns {
        let obs: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
        let mis: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let soo = cov.select_rows(&obs).select_columns(&obs);
        let smo = cov.select_rows(&mis).select_columns(&obs);
        let smm = cov.select_rows(&mis).select_columns(&mis);
        let chol = soo.cholesky().ok_or_else(|| Error::Model("observed covariance is not positive definite".into()))?;
        let k = chol.solve(&smo.transpose()).transpose();
        let cond = smm - &k * smo.transpose();
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let c0 = obs.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet;
        let l = chol.l();
        let mut x = DVector::zeros(n);
        for r in rows {
            let res = DVector::from_iterator(obs.len(), obs.iter().map(|&i| r[i] - mu[i]));
            let y = l.solve_lower_triangular(&res).expect("cholesky factor is invertible");
            ll -= 0.5 * (y.norm_squared() + c0);
            let xm = DVector::from_iterator(mis.len(), mis.iter().map(|&i| mu[i])) + &k * &res;
            for &i in &obs {
                x[i] = r[i];
            }
            for (j, &i) in mis.iter().enumerate() {
                x[i] = xm[j];
            }
            stats.sx += &x;
            stats.sxx.ger(1.0, &x, &x, 1.0);
        }
        let cnt = rows.len() as f64;
        for (a, &i) in mis.iter().enumerate() {
            for (b, &j) in mis.iter().enumerate() {
                stats.sxx[(i, j)] += cnt * cond[(a, b)];
            }
        }
        stats.rows += cnt;
    }
    Ok(ll)
}

fn m_step(dag: &Dag, groups: &[Vec<usize>], s: &Stats) -> Result<(Vec<Cpd>, bool)> {
    let mut ridge_used = false;
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let p = dag.parents(g[0]).len();
        let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut b = DVector::<f64>::zeros(p + 1);
        let mut c = 0.0;
        for &i in g {
            let ps = dag.parents(i);
            let idx = |j: usize| if j == 0 { None } else { Some(ps[j - 1]) };
            for u in 0..=p {
                for v in 0..=p {
                    a[(u, v)] += match (idx(u), idx(v)) {
                        (None, None) => s.rows,
                        (Some(x), None) | (None, Some(x)) => s.sx[x],
                        (Some(x), Some(y)) => s.sxx[(x, y)],
                    };
                }
                b[u] += match idx(u) {
                    None => s.sx[i],
                    Some(x) => s.sxx[(x, i)],
                };
            }
            c += s.sxx[(i, i)];
        }
        let cnt = s.rows * g.len() as f64;
        a /= cnt;
        b /= cnt;
        c /= cnt;
        let (beta, ridged) = solve_normal(&a, &b, g[0])?;
        ridge_used |= ridged;
        let var = c - 2.0 * beta.dot(&b) + (beta.transpose() * &a * &beta)[(0, 0)];
        let sigma = var.max(0.0).sqrt().max(SIGMA_FLOOR);
        out.push(Cpd { intercept: beta[0], weights: beta.iter().skip(1).copied().collect(), sigma });
    }
    Ok((out, ridge_used))
}

fn solve_normal(a: &DMatrix<f64>, b: &DVector<f64>, node: usize) -> Result<(DVector<f64>, bool)> {
    if let Some(chol) = a.clone().cholesky() {
        let d = chol.l().diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x * x), hi.max(x * x)));
        if lo > 1e-13 * hi {
            return Ok((chol.solve(b), false));
        }
    }
    let mut lambda = RIDGE;
    while lambda < 1.0 {
        let mut r = a.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += lambda;
        }
        if let Some(chol) = r.cholesky() {
            log::warn!("singular design for node {node}; ridge lambda = {lambda:e}");
            return Ok((chol.solve(b), true));
        }
        lambda *= 10.0;
    }
    Err(Error::Model(format!("cannot regularise design for node {node}")))
}

/// Log-likelihood of a fully observed data set.
pub fn log_likelihood(net: &LinearGaussianNet, data: &[Vec<f64>]) -> f64 {
    data.iter().map(|r| (0..net.len()).map(|i| normal_logpdf(r[i], net.conditional_mean(i, r), net.cpd(i).sigma)).sum::<f64>()).sum()
}
