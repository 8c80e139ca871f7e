use bloc_core::diagnostics::batch_means_se;
use bloc_core::random::{self, stream_rng};
use bloc_core::{
    bd_process, log_complete_likelihood, log_marginal_mixture, posterior_k, run_chain, simulate_dataset, sweep,
    AugmentedCounts, Hyperparams, ModelState, RunConfig, SimSpec, SweepConfig, VoteCount, VoteTable,
};
use rand::Rng;

fn within_three_se(trace: &[f64], target: f64) -> (bool, f64) {
    let m = trace.iter().sum::<f64>() / trace.len() as f64;
    let z = (m - target) / batch_means_se(trace).unwrap();
    (z.abs() < 3.0, z)
}

/// Alternates drawing the data from the model given the state and sweeping
/// the state given the data; the state marginals must then match the prior.
#[test]
fn joint_data_state_chain_keeps_prior_marginals() {
    let hyper = Hyperparams::default();
    let (n, nq, k, voters) = (4usize, 2usize, 2usize, 5u32);
    let mut rng = stream_rng(21, 0);
    let mut state = ModelState {
        k,
        eta: vec![0.5, 0.5],
        z: vec![0, 1, 0, 1],
        alpha: vec![[10.0, 10.0]; k * nq],
    };
    let mut r = AugmentedCounts::zeros(n, nq);
    let config = SweepConfig::default();
    let iterations = 100_000;
    let mut eta0 = Vec::with_capacity(iterations);
    let mut total = Vec::with_capacity(iterations);
    for it in 0..iterations {
        let counts: Vec<VoteCount> = (0..n * nq)
            .map(|cell| {
                let a = state.alpha[state.z[cell / nq] * nq + cell % nq];
                let p = random::beta(&mut rng, a[0], a[1]);
                let yes = (0..voters).filter(|_| rng.random::<f64>() < p).count() as u32;
                VoteCount::new(yes, voters - yes)
            })
            .collect();
        let data = VoteTable::from_counts(n, nq, counts).unwrap();
        sweep(&data, &mut state, &mut r, &hyper, &config, it, &mut rng).unwrap();
        eta0.push(state.eta[0]);
        total.push(state.alpha[0][0] + state.alpha[0][1]);
    }
    let (eta_ok, eta_z) = within_three_se(&eta0, 0.5);
    let (tot_ok, tot_z) = within_three_se(&total, 2.0 * hyper.kappa * hyper.theta);
    let sq: Vec<f64> = total.iter().map(|t| t * t).collect();
    let (sq_ok, sq_z) = within_three_se(&sq, 600.0);
    assert!(eta_ok && tot_ok && sq_ok, "z-scores: η {eta_z:.2}, total {tot_z:.2}, total² {sq_z:.2}");
}

#[test]
fn birth_death_keeps_weights_on_the_simplex() {
    let spec = SimSpec {
        n: 30,
        q: 6,
        c: 200,
        seed: 2,
        ..SimSpec::default()
    };
    let (data, _) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
    let hyper = Hyperparams::default();
    let mut rng = stream_rng(2, 1);
    let mut state = bloc_core::bdmcmc::initial_state(&data, &hyper, None, &mut rng);
    let mut r = AugmentedCounts::zeros(30, 6);
    let mut events = 0;
    for it in 0..300 {
        events += bd_process(&data, &mut state, &hyper, 0.5, &mut rng).unwrap().events.len();
        state.validate(30, 6).unwrap();
        assert!((state.eta.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        sweep(&data, &mut state, &mut r, &hyper, &SweepConfig::default(), it, &mut rng).unwrap();
        assert!((state.eta.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        assert!(r.respects_bounds(&data));
    }
    assert!(events > 300);
}

#[test]
fn single_bloc_likelihoods_agree() {
    let spec = SimSpec {
        n: 25,
        q: 7,
        seed: 5,
        ..SimSpec::default()
    };
    let (data, _) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
    let mut rng = stream_rng(5, 0);
    let alpha: Vec<_> = (0..7)
        .map(|_| bloc_core::sample_alpha_prior(&Hyperparams::default(), &mut rng))
        .collect();
    let state = ModelState {
        k: 1,
        eta: vec![1.0],
        z: vec![0; 25],
        alpha: alpha.clone(),
    };
    let complete = log_complete_likelihood(&data, &state).unwrap();
    let marginal = log_marginal_mixture(&data, &alpha, &[1.0]).unwrap();
    assert!((complete - marginal).abs() <= 1e-12 * complete.abs().max(1.0));
}

#[test]
fn chain_posterior_is_normalized_and_replays() {
    let spec = SimSpec {
        n: 30,
        q: 5,
        c: 300,
        seed: 8,
        ..SimSpec::default()
    };
    let (data, _) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
    let run = RunConfig {
        iterations: 150,
        burn_in: 50,
        thin: 5,
        ..RunConfig::default()
    };
    let go = || {
        run_chain(&data, &Hyperparams::default(), &SweepConfig::default(), &run, &mut stream_rng(8, 0)).unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.samples.len(), run.retained());
    assert_eq!(a, b);
    for min_size in [0, 1, 5] {
        let dist = posterior_k(&a.samples, min_size).unwrap();
        assert!((dist.values().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
