//! Directed acyclic graphs with linear-Gaussian conditional distributions.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl Dag {
    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        let mut children = vec![Vec::new(); n];
        for (i, ps) in parents.iter().enumerate() {
            for &p in ps {
                if p >= n {
                    return Err(Error::Model(format!("node {i} has out-of-range parent {p}")));
                }
                if p == i || children[p].contains(&i) {
                    return Err(Error::Model(format!("bad edge {p} -> {i}")));
                }
                children[p].push(i);
            }
        }
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(i);
            for &c in children[i].iter().rev() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Cycle(format!("{} of {n} nodes lie on a cycle", n - order.len())));
        }
        Ok(Self { parents, children, order })
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// A topological order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn closure<'a>(&'a self, seeds: &[usize], next: impl Fn(usize) -> &'a [usize]) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(i) = stack.pop() {
            if !mark[i] {
                mark[i] = true;
                stack.extend_from_slice(next(i));
            }
        }
        mark
    }

    /// Seeds and all their ancestors.
    pub fn ancestors(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, |i| &self.parents[i])
    }

    /// Seeds and all their descendants.
    pub fn descendants(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, |i| &self.children[i])
    }

    /// Nodes that are neither in `seeds` nor below them, in index order.
    pub fn non_descendants(&self, seeds: &[usize]) -> Vec<usize> {
        let below = self.descendants(seeds);
        (0..self.len()).filter(|&i| !below[i]).collect()
    }

    /// Same graph with every edge into `targets` removed.
    pub fn mutilated(&self, targets: &[usize]) -> Dag {
        let mut parents = self.parents.clone();
        for &t in targets {
            parents[t].clear();
        }
        Dag::new(parents).expect("removing edges keeps a DAG acyclic")
    }
}

/// `x = intercept + weights · parents + N(0, sigma²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub sigma: f64,
}

impl Cpd {
    pub fn root(mean: f64, sigma: f64) -> Self {
        Self { intercept: mean, weights: Vec::new(), sigma }
    }

    pub fn point_mass(value: f64) -> Self {
        Self { intercept: value, weights: Vec::new(), sigma: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct LinearGaussianNet {
    dag: Dag,
    cpds: Vec<Cpd>,
}

impl LinearGaussianNet {
    pub fn new(dag: Dag, cpds: Vec<Cpd>) -> Result<Self> {
        if cpds.len() != dag.len() {
            return Err(Error::Model(format!("{} CPDs for {} nodes", cpds.len(), dag.len())));
        }
        for (i, c) in cpds.iter().enumerate() {
            if c.weights.len() != dag.parents(i).len() {
                return Err(Error::Model(format!("node {i}: {} weights for {} parents", c.weights.len(), dag.parents(i).len())));
            }
            if !(c.sigma >= 0.0 && c.sigma.is_finite() && c.intercept.is_finite() && c.weights.iter().all(|w| w.is_finite())) {
                return Err(Error::Model(format!("node {i}: non-finite or negative parameters")));
            }
        }
        Ok(Self { dag, cpds })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpd(&self, i: usize) -> &Cpd {
        &self.cpds[i]
    }

    pub fn cpds(&self) -> &[Cpd] {
        &self.cpds
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    /// Mean of node `i` given the parent values found in `values`.
    pub fn conditional_mean(&self, i: usize, values: &[f64]) -> f64 {
        let c = &self.cpds[i];
        c.intercept + self.dag.parents(i).iter().zip(&c.weights).map(|(&p, w)| w * values[p]).sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for &i in self.dag.order() {
            let z: f64 = rng.sample(StandardNormal);
            x[i] = self.conditional_mean(i, &x) + self.cpds[i].sigma * z;
        }
        x
    }

    /// Replace each target's CPD by a point mass and drop the edges into it.
    pub fn intervene(&self, interventions: &[(usize, f64)]) -> LinearGaussianNet {
        let targets: Vec<usize> = interventions.iter().map(|&(t, _)| t).collect();
        let mut cpds = self.cpds.clone();
        for &(t, v) in interventions {
            cpds[t] = Cpd::point_mass(v);
        }
        LinearGaussianNet { dag: self.dag.mutilated(&targets), cpds }
    }

    /// Mean vector and covariance matrix of the joint Gaussian.
    pub fn joint(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.len();
        let mut mu = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        let mut done: Vec<usize> = Vec::with_capacity(n);
        for &i in self.dag.order() {
            let ps = self.dag.parents(i);
            let w = &self.cpds[i].weights;
            mu[i] = self.cpds[i].intercept + ps.iter().zip(w).map(|(&p, w)| w * mu[p]).sum::<f64>();
            for &j in &done {
                let c: f64 = ps.iter().zip(w).map(|(&p, w)| w * cov[(p, j)]).sum();
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
            let own: f64 = ps.iter().zip(w).map(|(&p, w)| w * cov[(p, i)]).sum();
            cov[(i, i)] = self.cpds[i].sigma.powi(2) + own;
            done.push(i);
        }
        (mu, cov)
    }

    /// Log-density of a fully observed assignment.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        (0..self.len()).map(|i| normal_logpdf(x[i], self.conditional_mean(i, x), self.cpds[i].sigma)).sum()
    }
}

pub fn normal_logpdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}
