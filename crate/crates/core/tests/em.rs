use deltafi::bayes::em::{fit, log_likelihood, EmOptions};
use deltafi::bayes::topology::{Binding, Slot};
use deltafi::bayes::{Cpd, Dag, TemporalNet, Topology};
use deltafi::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn slots(names: &[&str]) -> Vec<Slot> {
    names.iter().map(|n| Slot { name: n.to_string(), binding: Binding::Free }).collect()
}

/// a -> b -> c inside a slice, c also fed by a; a and b carry over from the previous slice.
fn small_topology() -> Topology {
    Topology::new(slots(&["a", "b", "c"]), vec![vec![], vec![0], vec![0, 1]], vec![vec![0], vec![1], vec![]]).unwrap()
}

fn truth(sigma: f64) -> TemporalNet {
    let initial = vec![
        Cpd::root(1.0, sigma),
        Cpd { intercept: 0.5, weights: vec![0.8], sigma },
        Cpd { intercept: -0.3, weights: vec![0.6, -1.2], sigma },
    ];
    // intra parents first, then temporal
    let transition = vec![
        Cpd { intercept: 0.2, weights: vec![0.9], sigma },
        Cpd { intercept: 0.1, weights: vec![0.7, 0.5], sigma },
        Cpd { intercept: 0.4, weights: vec![-0.9, 1.1], sigma },
    ];
    TemporalNet::from_parts(small_topology(), initial, transition).unwrap()
}

fn triples(net: &TemporalNet, n: usize, missing: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x = net.net().sample(&mut rng);
            if rng.random_bool(missing) {
                let i = rng.random_range(0..x.len());
                x[i] = f64::NAN;
            }
            x
        })
        .collect()
}

/// Largest relative error over every weight of both CPD sets.
fn worst_weight_error(a: &TemporalNet, b: &TemporalNet) -> f64 {
    a.initial()
        .iter()
        .chain(a.transition())
        .zip(b.initial().iter().chain(b.transition()))
        .flat_map(|(x, y)| x.weights.iter().zip(&y.weights).map(|(p, q)| ((p - q) / q).abs()))
        .fold(0.0, f64::max)
}

fn monotone(ll: &[f64]) -> bool {
    ll.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0))
}

#[test]
fn recovers_weights_from_complete_triples() {
    let t0 = Instant::now();
    let net = truth(0.1);
    let rows = triples(&net, 10_000, 0.0, 1);
    let (fitted, report) = TemporalNet::train(small_topology(), &rows, &EmOptions::default()).unwrap();
    let worst = worst_weight_error(&fitted, &net);
    assert!(worst < 0.05, "worst weight error {worst}");
    assert!(monotone(&report.log_likelihood), "{:?}", report.log_likelihood);
    assert!(report.converged);
    for (f, t) in fitted.transition().iter().zip(net.transition()) {
        assert!((f.sigma - t.sigma).abs() < 0.005);
    }
    assert!(t0.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn recovers_weights_with_missing_entries() {
    let net = truth(0.1);
    let rows = triples(&net, 10_000, 0.3, 2);
    let (fitted, report) = TemporalNet::train(small_topology(), &rows, &EmOptions::default()).unwrap();
    let worst = worst_weight_error(&fitted, &net);
    assert!(worst < 0.05, "worst weight error {worst}");
    assert!(report.log_likelihood.len() > 2);
    assert!(monotone(&report.log_likelihood), "{:?}", report.log_likelihood);
}

#[test]
fn final_fit_beats_the_generating_parameters_on_their_own_sample() {
    let net = truth(0.2);
    let rows = triples(&net, 3_000, 0.0, 3);
    let (fitted, _) = TemporalNet::train(small_topology(), &rows, &EmOptions::default()).unwrap();
    assert!(log_likelihood(fitted.net(), &rows) >= log_likelihood(net.net(), &rows));
}

#[test]
fn single_net_fit_with_untied_groups() {
    let dag = Dag::new(vec![vec![], vec![0], vec![0, 1]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data: Vec<Vec<f64>> = (0..4000)
        .map(|_| {
            let a: f64 = 2.0 + 0.5 * rng.random_range(-1.0..1.0);
            let b = 1.0 - 0.5 * a + 0.1 * rng.random_range(-1.0..1.0);
            let c = 0.3 * a + 2.0 * b + 0.1 * rng.random_range(-1.0..1.0);
            vec![a, b, c]
        })
        .collect();
    let (cpds, _) = fit(&dag, &[vec![0], vec![1], vec![2]], &data, &EmOptions::default()).unwrap();
    assert!((cpds[1].weights[0] + 0.5).abs() < 0.02);
    assert!((cpds[2].weights[0] - 0.3).abs() < 0.02 && (cpds[2].weights[1] - 2.0).abs() < 0.02);
}

#[test]
fn too_few_rows_is_an_error() {
    let rows = triples(&truth(0.1), 20, 0.0, 5);
    assert!(matches!(TemporalNet::train(small_topology(), &rows, &EmOptions::default()), Err(Error::InsufficientData { .. })));
}
