//! Property suites behind `qbai validate`.

use rand::Rng;
use serde::Serialize;

use qbai::amp_est::{choose_qpe_config, gae_with_config, QpeConfig, ThresholdRule};
use qbai::bai::{shrink, Interval};
use qbai::bounds::check_overlap_inequality;
use qbai::rng::{domain, stream, TrialRng};
use qbai::sim::{gate_level_run, total_variation};
use qbai::stats::binomial_sigma;
use qbai::vta::{run_vta, VtaParams};
use qbai::vtaa::EstimateMode;
use qbai::{BanditInstance, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::CliError;

    fn from_str(s: &str) -> Result<Self, crate::CliError> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(crate::CliError::Usage(format!("unknown level '{other}' (quick or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Faults {
    /// Swap the stop/continue outcomes of gapped estimation.
    pub flip_gae_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub checks: usize,
    pub failures: usize,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(suite: &'static str, checks: usize, failures: usize, detail: String) -> Self {
        SuiteResult {
            suite,
            checks,
            failures,
            passed: failures == 0,
            detail,
        }
    }
}

fn rule(faults: Faults) -> ThresholdRule {
    if faults.flip_gae_threshold {
        ThresholdRule::Flipped
    } else {
        ThresholdRule::Standard
    }
}

fn random_instance(rng: &mut TrialRng, max_n: usize) -> BanditInstance {
    loop {
        let n = rng.gen_range(1..=max_n);
        let p: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        if let Ok(i) = BanditInstance::new(p) {
            return i;
        }
    }
}

pub fn gae_suite(draws: usize, faults: Faults, seed: u64) -> SuiteResult {
    let mut rng = stream(seed, domain::VALIDATION, 1);
    let mut checks = 0;
    let mut failures = 0;
    let mut first = String::new();
    while checks < draws {
        let eps = rng.gen_range(0.005..0.5);
        let delta = rng.gen_range(1e-6..0.5);
        let l = rng.gen_range(0.01..0.99);
        let p: f64 = rng.gen();
        let bad = if p >= l - eps {
            let g = gae_with_config(p, eps, l, choose_qpe_config(eps / 4.0, delta), rule(faults));
            g.beta1 > delta
        } else if p < l - 2.0 * eps {
            let g = gae_with_config(p, eps, l, choose_qpe_config(eps / 4.0, delta), rule(faults));
            g.beta0 > delta
        } else {
            continue;
        };
        checks += 1;
        if bad {
            if failures == 0 {
                first = format!("first violation at p={p} eps={eps} delta={delta} l={l}");
            }
            failures += 1;
        }
    }
    SuiteResult::new("gae-guarantees", checks, failures, first)
}

pub fn sandwich_suite(instances: usize, faults: Faults, seed: u64) -> SuiteResult {
    let mut rng = stream(seed, domain::VALIDATION, 2);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let inst = random_instance(&mut rng, 16);
        let l1 = rng.gen_range(0.1..1.0);
        let l2 = rng.gen_range(0.0..l1 - 0.05);
        let alpha = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let params = VtaParams::new(l2, l1, alpha, inst.num_arms())
            .expect("drawn thresholds are valid")
            .with_rule(rule(faults));
        let run = run_vta(&inst, &params).expect("arm count matches");
        let slack = (run.profile.psucc - run.profile.psucc_prime).abs() / (2.0 * alpha / params.n_arms as f64);
        worst = worst.max(slack);
        if (run.profile.psucc - run.profile.psucc_prime).abs() > 2.0 * alpha / params.n_arms as f64 + 1e-10 {
            failures += 1;
        }
    }
    SuiteResult::new(
        "success-sandwich",
        instances,
        failures,
        format!("largest |psucc - psucc'| as a fraction of 2 alpha / n: {worst:.3e}"),
    )
}

pub fn backend_suite(configs: usize, seed: u64) -> SuiteResult {
    let mut rng = stream(seed, domain::VALIDATION, 3);
    let mut done = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    while done < configs {
        let n = rng.gen_range(1..=4);
        let p: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let Ok(inst) = BanditInstance::new(p) else { continue };
        let l1 = rng.gen_range(0.3..0.95);
        let l2 = rng.gen_range(0.0..l1 - 0.25);
        let Ok(params) = VtaParams::new(l2, l1, 0.05, n) else { continue };
        let stages: Vec<QpeConfig> = (0..params.m)
            .map(|_| QpeConfig::new(1 << rng.gen_range(1..4), [1, 1, 3][rng.gen_range(0..3)]).expect("valid"))
            .collect();
        let phase: u32 = stages.iter().map(|c| c.reps() * c.bits()).sum();
        if phase + params.m > 14 {
            continue;
        }
        let params = params.with_stages(stages).expect("one config per stage");
        let gate = match gate_level_run(&inst, &params) {
            Ok(g) => g,
            Err(Error::QubitBudget { .. }) => continue,
            Err(e) => panic!("gate-level run failed: {e}"),
        };
        let branch = run_vta(&inst, &params).expect("arm count matches");
        let tv = total_variation(&gate.joint_distribution(), &branch.state.joint_distribution());
        worst = worst.max(tv);
        if tv > 1e-9 || gate.ledger.oracle_calls != branch.profile.t_max() {
            failures += 1;
        }
        done += 1;
    }
    SuiteResult::new("backend-agreement", done, failures, format!("largest total variation {worst:.3e}"))
}

pub fn overlap_suite(draws: usize, seed: u64) -> SuiteResult {
    let mut rng = stream(seed, domain::VALIDATION, 4);
    let mut failures = 0;
    for _ in 0..draws {
        let floor = rng.gen_range(1e-6..=0.5);
        let p1 = rng.gen_range(floor..=1.0 - floor);
        let p2 = rng.gen_range(floor..=1.0 - floor);
        if !check_overlap_inequality(p1, p2, floor).expect("drawn inside the floor").holds {
            failures += 1;
        }
    }
    let eq = check_overlap_inequality(0.2, 0.2, 0.2).expect("valid");
    if (eq.lhs - eq.rhs).abs() > 1e-12 {
        failures += 1;
    }
    SuiteResult::new("overlap-inequality", draws + 1, failures, String::new())
}

pub fn shrink_suite(trials: usize, seed: u64) -> SuiteResult {
    let delta = 0.1;
    let cases = [
        (vec![0.72, 0.4, 0.3], 1, Interval { lo: 0.5, hi: 0.9 }),
        (vec![0.72, 0.4, 0.3], 2, Interval { lo: 0.2, hi: 0.6 }),
        (vec![0.55, 0.5, 0.45, 0.1], 2, Interval::UNIT),
    ];
    let mut failures = 0;
    let mut rates = Vec::new();
    for (c, (p, k, iv)) in cases.iter().enumerate() {
        let instance = BanditInstance::new(p.clone()).expect("fixed case");
        let target = instance.kth_largest(*k).expect("k <= n");
        let mut rng = stream(seed, domain::VALIDATION, 100 + c as u64);
        let kept = (0..trials)
            .filter(|_| {
                let (j, _, _) = shrink(&instance, *k, *iv, delta, EstimateMode::Honest, &mut rng).expect("valid shrink");
                j.contains(target)
            })
            .count();
        let rate = kept as f64 / trials as f64;
        rates.push(format!("{rate:.3}"));
        if rate < 1.0 - delta - 3.0 * binomial_sigma(1.0 - delta, trials) {
            failures += 1;
        }
    }
    SuiteResult::new(
        "shrink-containment",
        cases.len(),
        failures,
        format!("containment rates {}", rates.join(" ")),
    )
}

pub fn run_suites(level: Level, faults: Faults, seed: u64) -> Vec<SuiteResult> {
    match level {
        Level::Quick => vec![
            sandwich_suite(50, faults, seed),
            gae_suite(2_000, faults, seed),
            overlap_suite(10_000, seed),
            shrink_suite(300, seed),
        ],
        Level::Full => vec![
            sandwich_suite(200, faults, seed),
            gae_suite(10_000, faults, seed),
            backend_suite(24, seed),
            overlap_suite(100_000, seed),
            shrink_suite(1_000, seed),
        ],
    }
}
