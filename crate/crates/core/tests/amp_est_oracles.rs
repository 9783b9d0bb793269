//! Phase-estimation distributions checked against an explicit DFT of the
//! phase register, plus the gapped-estimation guarantees.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qbai::amp_est::{gae, qpe_distribution, single_run_pmf, QpeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome probabilities of textbook phase estimation: the register holds
/// `Σ_x e^{2πi x φ}|x>/√M` for each eigenphase, followed by an inverse DFT.
fn dft_pmf(p: f64, m: usize) -> Vec<f64> {
    let theta = p.sqrt().asin();
    let mut out = vec![0.0; m];
    for phi in [theta / PI, -theta / PI] {
        for (y, o) in out.iter_mut().enumerate() {
            let amp: Complex64 = (0..m)
                .map(|x| Complex64::from_polar(1.0, 2.0 * PI * x as f64 * (phi - y as f64 / m as f64)))
                .sum::<Complex64>()
                / m as f64;
            *o += 0.5 * amp.norm_sqr();
        }
    }
    out
}

#[test]
fn single_run_matches_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let p: f64 = rng.gen();
        let m = 1usize << rng.gen_range(1..8);
        let a = single_run_pmf(p, m as u64);
        let b = dft_pmf(p, m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11, "p={p} m={m}");
        }
    }
}

#[test]
fn median_distribution_matches_enumeration() {
    // enumerate all outcome triples of three independent runs
    let p = 0.37;
    let m = 8u64;
    let single = qpe_distribution(p, QpeConfig::new(m, 1).unwrap());
    let k = single.probs.len();
    let mut expect = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let mut v = [a, b, c];
                v.sort();
                expect[v[1]] += single.probs[a] * single.probs[b] * single.probs[c];
            }
        }
    }
    let med = qpe_distribution(p, QpeConfig::new(m, 3).unwrap());
    for (x, y) in med.probs.iter().zip(&expect) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn gae_guarantees_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 10_000 {
        let eps = rng.gen_range(0.005..0.5);
        let delta = rng.gen_range(1e-6..0.5);
        let l = rng.gen_range(0.01..0.99);
        let p: f64 = rng.gen();
        if p >= l - 2.0 * eps && p < l - eps {
            continue;
        }
        let g = gae(p, eps, delta, l).unwrap();
        if p >= l - eps {
            assert!(g.beta1 <= delta, "p={p} eps={eps} delta={delta} l={l}");
        } else {
            assert!(g.beta0 <= delta, "p={p} eps={eps} delta={delta} l={l}");
        }
        checked += 1;
    }
}

proptest! {
    #[test]
    fn distribution_sums_to_one(p in 0.0f64..=1.0, bits in 1u32..11, half_reps in 0u32..8) {
        let d = qpe_distribution(p, QpeConfig::new(1 << bits, 2 * half_reps + 1).unwrap());
        prop_assert!((d.total() - 1.0).abs() <= 1e-12);
    }
}
