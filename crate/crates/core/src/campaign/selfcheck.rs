//! Fast numerical sanity checks of the simulator and the inference engine.

use crate::bayes::em::{fit, EmOptions};
use crate::bayes::gibbs::infer;
use crate::bayes::{Cpd, Dag, GibbsConfig, LinearGaussianNet};
use crate::kinematics::{emergency_stop, KinematicParams, VehicleState};
use crate::Result;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![stop_distance()?, gibbs_vs_exact()?, em_recovery()?])
}

fn stop_distance() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for v0 in [1.0, 10.0, 25.0, 40.0] {
        for a in [2.0, 5.0, 9.0] {
            let p = KinematicParams { a_max: a, ..KinematicParams::default() };
            let r = emergency_stop(&VehicleState::new(0.0, 0.0, v0, 0.3, 0.0), &p)?;
            let d = v0 * v0 / (2.0 * a);
            worst = worst.max(((r.d_stop_long - d) / d).abs()).max(((r.t_stop - v0 / a) / (v0 / a)).abs());
        }
    }
    Ok(Check { name: "stop_distance", passed: worst < 1e-6, detail: format!("max relative error {worst:.2e}") })
}

fn diamond() -> Result<LinearGaussianNet> {
    let dag = Dag::new(vec![vec![], vec![0], vec![0], vec![1, 2], vec![3]])?;
    LinearGaussianNet::new(
        dag,
        vec![
            Cpd::root(1.0, 1.0),
            Cpd { intercept: 0.5, weights: vec![0.8], sigma: 0.6 },
            Cpd { intercept: -0.2, weights: vec![-1.1], sigma: 0.4 },
            Cpd { intercept: 0.0, weights: vec![0.7, 0.9], sigma: 0.5 },
            Cpd { intercept: 1.0, weights: vec![1.5], sigma: 0.3 },
        ],
    )
}

/// Conditional mean of every node given `evidence`, from the joint Gaussian.
fn exact_mean(net: &LinearGaussianNet, evidence: &[(usize, f64)]) -> Vec<f64> {
    let (mu, cov) = net.joint();
    let n = net.len();
    let e: Vec<usize> = evidence.iter().map(|&(i, _)| i).collect();
    let see = cov.select_rows(&e).select_columns(&e);
    let diff = DVector::from_iterator(e.len(), evidence.iter().map(|&(i, v)| v - mu[i]));
    let w = see.lu().solve(&diff).expect("evidence covariance is invertible");
    (0..n).map(|i| mu[i] + (0..e.len()).map(|j| cov[(i, e[j])] * w[j]).sum::<f64>()).collect()
}

fn gibbs_vs_exact() -> Result<Check> {
    let net = diamond()?;
    let evidence = [(4, 3.0)];
    let exact = exact_mean(&net.intervene(&[(1, 2.0)]), &evidence);
    let cfg = GibbsConfig { burn_in: 200, samples: 4000, chains: 4, seed: 7, rhat_threshold: 1.05 };
    let post = infer(&net, &[(1, 2.0)], &evidence, &[0, 2, 3], &cfg)?;
    let worst = [0, 2, 3]
        .iter()
        .zip(&post.mean)
        .map(|(&i, m)| (m - exact[i]).abs() / exact[i].abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(Check { name: "gibbs_vs_exact", passed: post.converged && worst < 0.02, detail: format!("max relative error {worst:.4}") })
}

fn em_recovery() -> Result<Check> {
    let truth = diamond()?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<Vec<f64>> = (0..5000)
        .map(|r| {
            let mut x = truth.sample(&mut rng);
            if r % 5 == 0 {
                x[2] = f64::NAN;
            }
            x
        })
        .collect();
    let groups: Vec<Vec<usize>> = (0..truth.len()).map(|i| vec![i]).collect();
    let (cpds, report) = fit(truth.dag(), &groups, &data, &EmOptions::default())?;
    let worst = cpds
        .iter()
        .zip(truth.cpds())
        .flat_map(|(a, b)| a.weights.iter().zip(&b.weights).map(|(x, y)| ((x - y) / y).abs()))
        .fold(0.0, f64::max);
    let monotone = report.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-6 * w[0].abs());
    Ok(Check {
        name: "em_recovery",
        passed: worst < 0.05 && monotone,
        detail: format!("max weight error {:.2}%, {} iterations", 100.0 * worst, report.log_likelihood.len()),
    })
}
