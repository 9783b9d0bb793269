//! Properties of the variable-time algorithm, its two backends and the
//! amplification/estimation layer.

use qbai::amp_est::QpeConfig;
use qbai::sim::{gate_level_run, total_variation};
use qbai::stats::binomial_sigma;
use qbai::vta::{run_vta, VtaParams};
use qbai::vtaa::{amplify, cost_model, estimate, EstimateMode};
use qbai::BanditInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> BanditInstance {
    loop {
        let n = rng.gen_range(1..=max_n);
        let p: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        if let Ok(i) = BanditInstance::new(p) {
            return i;
        }
    }
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> VtaParams {
    let l1 = rng.gen_range(0.1..1.0);
    let l2 = rng.gen_range(0.0..l1 - 0.05);
    let alpha = 10f64.powf(rng.gen_range(-4.0..-1.0));
    VtaParams::new(l2, l1, alpha, n).unwrap()
}

#[test]
fn success_probability_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 16);
        let params = random_params(&mut rng, inst.num_arms());
        let run = run_vta(&inst, &params).unwrap();
        let gap = (run.profile.psucc - run.profile.psucc_prime).abs();
        assert!(gap <= 2.0 * params.alpha / params.n_arms as f64 + 1e-10);
    }
}

#[test]
fn cost_model_dominates_stopping_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 8).append_perfect_arm().unwrap();
        let params = random_params(&mut rng, inst.num_arms());
        let run = run_vta(&inst, &params).unwrap();
        let c = cost_model(&run.profile, 0.1, 0.1).unwrap();
        let t_max = run.profile.t_max() as f64;
        assert!(c.q >= run.profile.t_avg / run.profile.psucc.sqrt());
        assert!(c.q >= t_max);
        assert_eq!(run.ledger.oracle_calls, run.profile.t_max());
    }
}

#[test]
fn backends_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut configs = 0;
    while configs < 24 {
        let n = rng.gen_range(1..=4);
        let p: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let Ok(inst) = BanditInstance::new(p) else { continue };
        let l1 = rng.gen_range(0.3..0.95);
        let l2 = rng.gen_range(0.0..l1 - 0.25);
        let Ok(params) = VtaParams::new(l2, l1, 0.05, n) else { continue };
        let stages: Vec<QpeConfig> = (0..params.m)
            .map(|_| QpeConfig::new(1 << rng.gen_range(1..4), [1, 1, 3][rng.gen_range(0..3)]).unwrap())
            .collect();
        let phase_qubits: u32 = stages.iter().map(|c| c.reps() * c.bits()).sum();
        // keep the dense statevector small
        if phase_qubits + params.m > 14 {
            continue;
        }
        let params = params.with_stages(stages).unwrap();
        let gate = match gate_level_run(&inst, &params) {
            Ok(g) => g,
            Err(qbai::Error::QubitBudget { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let branch = run_vta(&inst, &params).unwrap();
        let tv = total_variation(&gate.joint_distribution(), &branch.state.joint_distribution());
        assert!(tv <= 1e-9, "tv = {tv} for {:?}", inst.biases());
        assert_eq!(gate.ledger.oracle_calls, branch.profile.t_max());
        configs += 1;
    }
}

#[test]
fn amplify_lands_in_upper_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let delta = 0.1;
    let mut tested = 0;
    while tested < 5 {
        let inst = random_instance(&mut rng, 6);
        let params = random_params(&mut rng, inst.num_arms());
        let run = run_vta(&inst, &params).unwrap();
        if run.sets.s_right.is_empty() {
            continue;
        }
        let s_mr = run.sets.s_mr();
        let trials = 1000;
        let hits = (0..trials)
            .filter(|_| s_mr.contains(&amplify(&run, delta, &mut rng).unwrap().0))
            .count();
        let rate = hits as f64 / trials as f64;
        assert!(rate >= 1.0 - delta - 3.0 * binomial_sigma(1.0 - delta, trials));
        tested += 1;
    }
}

#[test]
fn honest_estimate_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = BanditInstance::new(vec![0.7, 0.5, 0.2]).unwrap().append_perfect_arm().unwrap();
    let params = VtaParams::new(0.4, 0.6, 0.001, 4).unwrap();
    let run = run_vta(&inst, &params).unwrap();
    let (eps, delta, trials) = (0.1, 0.05, 2000);
    let p = run.profile.psucc;
    let inside = (0..trials)
        .filter(|_| {
            let (r, _) = estimate(&run, eps, delta, EstimateMode::Honest, &mut rng).unwrap();
            (1.0 - eps) * p <= r && r <= (1.0 + eps) * p
        })
        .count();
    let rate = inside as f64 / trials as f64;
    assert!(rate >= 1.0 - delta - 3.0 * binomial_sigma(1.0 - delta, trials));
}
