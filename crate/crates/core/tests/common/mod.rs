#![allow(dead_code)]

use deltafi::bayes::{Cpd, Dag, LinearGaussianNet};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random linear-Gaussian net over `n` nodes in index order, at most three parents each.
pub fn random_net<R: Rng>(rng: &mut R, n: usize) -> LinearGaussianNet {
    let mut parents = Vec::with_capacity(n);
    let mut cpds = Vec::with_capacity(n);
    for i in 0..n {
        let mut ps: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.35)).collect();
        while ps.len() > 3 {
            ps.remove(rng.random_range(0..ps.len()));
        }
        let weights = ps
            .iter()
            .map(|_| rng.random_range(0.3..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        cpds.push(Cpd { intercept: rng.random_range(-2.0..2.0), weights, sigma: rng.random_range(0.4..1.5) });
        parents.push(ps);
    }
    LinearGaussianNet::new(Dag::new(parents).unwrap(), cpds).unwrap()
}

/// Joint mean and covariance from `x = c + Bx + e`, i.e. `x = (I - B)^-1 (c + e)`.
pub fn joint_by_inversion(net: &LinearGaussianNet) -> (DVector<f64>, DMatrix<f64>) {
    let n = net.len();
    let mut b = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let cpd = net.cpd(i);
        c[i] = cpd.intercept;
        d[(i, i)] = cpd.sigma * cpd.sigma;
        for (&p, &w) in net.dag().parents(i).iter().zip(&cpd.weights) {
            b[(i, p)] = w;
        }
    }
    let a = (DMatrix::identity(n, n) - b).try_inverse().unwrap();
    (&a * c, &a * d * a.transpose())
}

/// Posterior mean and standard deviation of every node given point evidence.
pub fn condition(net: &LinearGaussianNet, evidence: &[(usize, f64)]) -> (Vec<f64>, Vec<f64>) {
    let (mu, s) = joint_by_inversion(net);
    let n = net.len();
    if evidence.is_empty() {
        return (mu.iter().copied().collect(), (0..n).map(|i| s[(i, i)].sqrt()).collect());
    }
    let e: Vec<usize> = evidence.iter().map(|p| p.0).collect();
    let see = s.select_rows(&e).select_columns(&e);
    let sxe = s.select_columns(&e);
    let k = &sxe * see.try_inverse().unwrap();
    let r = DVector::from_iterator(e.len(), evidence.iter().map(|&(i, v)| v - mu[i]));
    let mean = &mu + &k * r;
    let cov = &s - &k * sxe.transpose();
    (mean.iter().copied().collect(), (0..n).map(|i| cov[(i, i)].max(0.0).sqrt()).collect())
}
