//! Classical baselines: uniform sampling and successive elimination.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::oracle::BanditInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmpiricalArm {
    pub pulls: u64,
    pub successes: u64,
}

impl EmpiricalArm {
    pub fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.successes as f64 / self.pulls as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOutcome {
    pub arm: usize,
    pub pulls_total: u64,
    pub arms: Vec<EmpiricalArm>,
}

/// Samples per arm of the uniform baseline.
pub fn naive_pulls_per_arm(n: usize, delta2: f64, delta: f64) -> u64 {
    (8.0 / (delta2 * delta2) * (2.0 * n as f64 / delta).ln()).ceil() as u64
}

fn argmax(arms: &[EmpiricalArm], active: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (i, a) in arms.iter().enumerate() {
        if active(i) && (best == usize::MAX || a.mean() > arms[best].mean()) {
            best = i;
        }
    }
    best
}

/// Pulls every arm the same number of times and returns the empirical best.
pub fn naive<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta2_known: f64,
    delta: f64,
    rng: &mut R,
) -> Result<ClassicalOutcome> {
    if delta2_known <= 0.0 {
        return Err(invalid(format!("known gap {delta2_known} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} outside (0, 1)")));
    }
    let n = instance.n_real();
    let t = naive_pulls_per_arm(n, delta2_known, delta);
    let arms: Vec<EmpiricalArm> = instance
        .biases()
        .iter()
        .map(|&p| EmpiricalArm {
            pulls: t,
            successes: Binomial::new(t, p).expect("bias in [0, 1]").sample(rng),
        })
        .collect();
    Ok(ClassicalOutcome {
        arm: argmax(&arms, |_| true) + 1,
        pulls_total: n as u64 * t,
        arms,
    })
}

/// Confidence radius after `t` pulls of each of `n` arms.
pub fn se_radius(n: usize, t: u64, delta: f64) -> f64 {
    let t = t as f64;
    ((4.0 * n as f64 * t * t / delta).ln() / t).sqrt()
}

/// Successive elimination with radius `sqrt(ln(4 n t² / δ) / t)`.
pub fn successive_elimination<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    rng: &mut R,
) -> Result<ClassicalOutcome> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} outside (0, 1)")));
    }
    let p = instance.biases();
    let n = p.len();
    let mut arms = vec![EmpiricalArm::default(); n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut pulls_total = 0u64;
    let mut t = 0u64;
    while active.len() > 1 {
        t += 1;
        for &i in &active {
            arms[i].pulls += 1;
            arms[i].successes += rng.gen_bool(p[i]) as u64;
        }
        pulls_total += active.len() as u64;
        let radius = se_radius(n, t, delta);
        let top = active.iter().map(|&i| arms[i].mean()).fold(f64::NEG_INFINITY, f64::max);
        active.retain(|&i| top - arms[i].mean() < 2.0 * radius);
    }
    Ok(ClassicalOutcome {
        arm: active[0] + 1,
        pulls_total,
        arms,
    })
}

/// Round at which the radius first drops to `gap / 2`, i.e. when an arm with
/// true gap `gap` is eliminated if the empirical means sit at their true values.
pub fn se_elimination_round(n: usize, gap: f64, delta: f64) -> u64 {
    let mut hi = 1u64;
    while 2.0 * se_radius(n, hi, delta) > gap {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // radius is decreasing for t >= 1, so bisect
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if 2.0 * se_radius(n, mid, delta) > gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Pull count successive elimination makes when every empirical mean equals
/// its true bias.
pub fn se_predicted_pulls(instance: &BanditInstance, delta: f64) -> u64 {
    let n = instance.n_real();
    let g = instance.hardness();
    let rounds: Vec<u64> = g.delta.iter().map(|&d| se_elimination_round(n, d, delta)).collect();
    rounds.iter().sum::<u64>() + rounds.iter().copied().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn naive_sample_size_example() {
        // ⌈32 ln 40⌉ = ⌈118.04⌉
        assert_eq!(naive_pulls_per_arm(2, 0.5, 0.1), (32.0 * 40f64.ln()).ceil() as u64);
        assert_eq!(naive_pulls_per_arm(2, 0.5, 0.1), 119);
    }

    #[test]
    fn naive_pulls_scale_with_n() {
        let mut rng = stream(1, 0, 0);
        let a = naive(&BanditInstance::new(vec![0.9, 0.1]).unwrap(), 0.5, 0.1, &mut rng).unwrap();
        assert_eq!(a.pulls_total, 2 * 119);
        assert_eq!(a.arm, 1);
        assert!(naive(&BanditInstance::new(vec![0.9, 0.1]).unwrap(), 0.0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn se_single_arm() {
        let mut rng = stream(1, 0, 0);
        let out = successive_elimination(&BanditInstance::new(vec![0.4]).unwrap(), 0.1, &mut rng).unwrap();
        assert_eq!((out.arm, out.pulls_total), (1, 0));
    }

    #[test]
    fn elimination_round_is_first_crossing() {
        for gap in [0.5, 0.1, 0.01] {
            let t = se_elimination_round(4, gap, 0.1);
            assert!(2.0 * se_radius(4, t, 0.1) <= gap);
            assert!(2.0 * se_radius(4, t - 1, 0.1) > gap);
        }
    }
}
