//! Gibbs sampling in linear-Gaussian networks under evidence and interventions.

use super::net::{LinearGaussianNet, SIGMA_FLOOR};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub chains: usize,
    pub seed: u64,
    pub rhat_threshold: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in: 200, samples: 2000, chains: 4, seed: 0, rhat_threshold: 1.05 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 4 || self.chains == 0 {
            return Err(Error::Config("gibbs needs at least 4 samples and one chain".into()));
        }
        if self.rhat_threshold.is_nan() || self.rhat_threshold < 1.0 {
            return Err(Error::Config("rhat_threshold must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub rhat: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct Term {
    node: usize,
    intercept: f64,
    /// Weight on the node being resampled.
    weight: f64,
    others: Vec<(usize, f64)>,
    precision: f64,
}

#[derive(Debug, Clone)]
struct Site {
    node: usize,
    intercept: f64,
    parents: Vec<(usize, f64)>,
    sigma: f64,
    children: Vec<Term>,
}

/// Sampling schedule for one combination of intervened, observed and queried nodes.
/// Only nodes that are ancestors of the query or the evidence in the mutilated graph are sampled.
#[derive(Debug, Clone)]
pub struct GibbsPlan {
    n: usize,
    sites: Vec<Site>,
    query: Vec<usize>,
    fixed: Vec<bool>,
}

impl GibbsPlan {
    pub fn compile(net: &LinearGaussianNet, intervened: &[usize], observed: &[usize], query: &[usize]) -> Result<Self> {
        let n = net.len();
        if let Some(&bad) = intervened.iter().chain(observed).chain(query).find(|&&i| i >= n) {
            return Err(Error::Model(format!("node {bad} out of range")));
        }
        let dag = net.dag().mutilated(intervened);
        let mut fixed = vec![false; n];
        for &i in intervened.iter().chain(observed) {
            fixed[i] = true;
        }
        let seeds: Vec<usize> = query.iter().chain(observed).copied().collect();
        let relevant = dag.ancestors(&seeds);
        let mut sites = Vec::new();
        for &i in dag.order() {
            if !relevant[i] || fixed[i] {
                continue;
            }
            let cpd = net.cpd(i);
            let children = dag
                .children(i)
                .iter()
                .filter(|&&c| relevant[c])
                .map(|&c| {
                    let cc = net.cpd(c);
                    let mut weight = 0.0;
                    let mut others = Vec::new();
                    for (&p, &w) in dag.parents(c).iter().zip(&cc.weights) {
                        if p == i {
                            weight += w;
                        } else {
                            others.push((p, w));
                        }
                    }
                    Term { node: c, intercept: cc.intercept, weight, others, precision: cc.sigma.max(SIGMA_FLOOR).powi(-2) }
                })
                .collect();
            sites.push(Site {
                node: i,
                intercept: cpd.intercept,
                parents: dag.parents(i).iter().copied().zip(cpd.weights.iter().copied()).collect(),
                sigma: cpd.sigma.max(SIGMA_FLOOR),
                children,
            });
        }
        Ok(Self { n, sites, query: query.to_vec(), fixed })
    }

    /// Number of nodes that are actually sampled.
    pub fn sampled(&self) -> usize {
        self.sites.len()
    }

    /// `values` holds observed and intervened values at their node index; other entries are ignored.
    pub fn run(&self, values: &[f64], cfg: &GibbsConfig) -> Result<Posterior> {
        cfg.validate()?;
        if values.len() != self.n {
            return Err(Error::Model(format!("{} values for {} nodes", values.len(), self.n)));
        }
        if let Some(i) = (0..self.n).find(|&i| self.fixed[i] && !values[i].is_finite()) {
            return Err(Error::Model(format!("non-finite evidence at node {i}")));
        }
        let q = self.query.len();
        if self.sites.is_empty() {
            return Ok(Posterior { mean: self.query.iter().map(|&i| values[i]).collect(), std: vec![0.0; q], rhat: vec![1.0; q], converged: true });
        }
        let mut draws = vec![vec![Vec::with_capacity(cfg.samples); cfg.chains]; q];
        for chain in 0..cfg.chains {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chain as u64);
            let mut x = values.to_vec();
            for s in &self.sites {
                let z: f64 = rng.sample(StandardNormal);
                x[s.node] = prior_mean(s, &x) + s.sigma * z;
            }
            for it in 0..cfg.burn_in + cfg.samples {
                for s in &self.sites {
                    let tau = s.sigma.powi(-2);
                    let mut prec = tau;
                    let mut num = prior_mean(s, &x) * tau;
                    for c in &s.children {
                        let rest = c.intercept + c.others.iter().map(|&(p, w)| w * x[p]).sum::<f64>();
                        prec += c.weight * c.weight * c.precision;
                        num += c.weight * (x[c.node] - rest) * c.precision;
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    x[s.node] = num / prec + z / prec.sqrt();
                }
                if it >= cfg.burn_in {
                    for (d, &qi) in draws.iter_mut().zip(&self.query) {
                        d[chain].push(x[qi]);
                    }
                }
            }
        }
        let mut mean = Vec::with_capacity(q);
        let mut std = Vec::with_capacity(q);
        let mut rhat = Vec::with_capacity(q);
        for (j, &qi) in self.query.iter().enumerate() {
            if self.fixed[qi] {
                mean.push(values[qi]);
                std.push(0.0);
                rhat.push(1.0);
                continue;
            }
            let all: Vec<f64> = draws[j].iter().flatten().copied().collect();
            let (m, v) = mean_var(&all);
            mean.push(m);
            std.push(v.sqrt());
            rhat.push(split_rhat(&draws[j]));
        }
        let converged = rhat.iter().all(|&r| r <= cfg.rhat_threshold);
        Ok(Posterior { mean, std, rhat, converged })
    }
}

fn prior_mean(s: &Site, x: &[f64]) -> f64 {
    s.intercept + s.parents.iter().map(|&(p, w)| w * x[p]).sum::<f64>()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// Split-R̂ over chains cut in half. Returns 1 when the within-chain spread is negligible.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[h..2 * h]]
        })
        .filter(|s| s.len() >= 2)
        .collect();
    if halves.len() < 2 {
        return 1.0;
    }
    let h = halves[0].len() as f64;
    let stats: Vec<(f64, f64)> = halves.iter().map(|s| mean_var(s)).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let (grand, bvar) = mean_var(&means);
    if w <= 1e-20 * (1.0 + grand * grand) {
        return 1.0;
    }
    let b = h * bvar;
    (((h - 1.0) / h * w + b / h) / w).sqrt()
}

/// One-shot inference: `interventions` as (node, value), `evidence` as (node, value).
pub fn infer(
    net: &LinearGaussianNet,
    interventions: &[(usize, f64)],
    evidence: &[(usize, f64)],
    query: &[usize],
    cfg: &GibbsConfig,
) -> Result<Posterior> {
    let targets: Vec<usize> = interventions.iter().map(|&(t, _)| t).collect();
    let observed: Vec<usize> = evidence.iter().map(|&(t, _)| t).filter(|t| !targets.contains(t)).collect();
    let plan = GibbsPlan::compile(net, &targets, &observed, query)?;
    let mut values = vec![0.0; net.len()];
    for &(i, v) in evidence.iter().filter(|(i, _)| !targets.contains(i)).chain(interventions) {
        values[i] = v;
    }
    plan.run(&values, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::net::{Cpd, Dag};

    fn chain() -> LinearGaussianNet {
        let dag = Dag::new(vec![vec![], vec![0], vec![1]]).unwrap();
        LinearGaussianNet::new(
            dag,
            vec![Cpd::root(1.0, 1.0), Cpd { intercept: 0.5, weights: vec![2.0], sigma: 0.5 }, Cpd { intercept: 0.0, weights: vec![-1.0], sigma: 0.1 }],
        )
        .unwrap()
    }

    #[test]
    fn observed_parent_gives_cpd_mean() {
        let p = infer(&chain(), &[], &[(0, 3.0)], &[1], &GibbsConfig::default()).unwrap();
        assert!((p.mean[0] - 6.5).abs() < 0.02 * 6.5);
        assert!((p.std[0] - 0.5).abs() < 0.03);
        assert!(p.converged);
    }

    #[test]
    fn evidence_on_child_pulls_parent() {
        // x1 | x2 = -4: posterior mean from closed-form conditioning.
        let (mu, cov) = chain().joint();
        let expect = mu[1] + cov[(1, 2)] / cov[(2, 2)] * (-4.0 - mu[2]);
        let p = infer(&chain(), &[], &[(2, -4.0)], &[1], &GibbsConfig::default()).unwrap();
        assert!((p.mean[0] - expect).abs() < 0.02 * expect.abs());
    }

    #[test]
    fn intervention_is_a_point_mass() {
        let p = infer(&chain(), &[(1, 2.0)], &[(0, 100.0)], &[1, 2], &GibbsConfig::default()).unwrap();
        assert_eq!((p.mean[0], p.std[0]), (2.0, 0.0));
        assert!((p.mean[1] + 2.0).abs() < 0.02);
    }

    #[test]
    fn barren_nodes_are_pruned() {
        let plan = GibbsPlan::compile(&chain(), &[], &[0], &[1]).unwrap();
        assert_eq!(plan.sampled(), 1);
    }

    #[test]
    fn rhat_detects_disagreeing_chains() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 50.0).collect();
        assert!(split_rhat(&[a.clone(), b]) > 1.5);
        assert!(split_rhat(&[a.clone(), a]) < 1.05);
        assert_eq!(split_rhat(&[vec![1.0; 10], vec![1.0; 10]]), 1.0);
    }
}
