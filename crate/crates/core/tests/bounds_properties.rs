use qbai::bounds::{adversary_bound, check_overlap_inequality, hard_family};
use qbai::BanditInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn overlap_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100_000 {
        let floor = rng.gen_range(1e-6..=0.5);
        let p1 = rng.gen_range(floor..=1.0 - floor);
        let p2 = rng.gen_range(floor..=1.0 - floor);
        let c = check_overlap_inequality(p1, p2, floor).unwrap();
        assert!(c.holds, "p1={p1} p2={p2} floor={floor}");
    }
}

#[test]
fn overlap_equality_at_the_floor() {
    for floor in [0.01, 0.1, 0.3, 0.5] {
        let c = check_overlap_inequality(floor, floor, floor).unwrap();
        assert!((c.lhs - c.rhs).abs() <= 1e-12);
    }
}

#[test]
fn bound_is_permutation_invariant_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..200 {
        let n = rng.gen_range(2..10);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
        let Ok(instance) = BanditInstance::new(p.clone()) else { continue };
        let mut q = p.clone();
        q.reverse();
        let reversed = BanditInstance::new(q).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let delta = k as f64 / 100.0;
            let a = adversary_bound(&instance, delta, 0.2).unwrap();
            let b = adversary_bound(&reversed, delta, 0.2).unwrap();
            assert!((a.intermediate - b.intermediate).abs() <= 1e-12 * a.intermediate);
            assert!(a.simplified <= a.intermediate * (1.0 + 1e-12));
            assert!(a.intermediate <= last);
            last = a.intermediate;
        }
    }
}

#[test]
fn hard_family_stays_inside_the_widened_floor() {
    let instance = BanditInstance::new(vec![0.7, 0.3, 0.55, 0.4]).unwrap();
    let f = hard_family(&instance, 0.3).unwrap();
    for (x, v) in &f.variants {
        assert_eq!(v.best(), *x);
        for &b in v.biases() {
            assert!(b >= 0.3 - f.eta && b <= 0.7 + f.eta);
        }
    }
}
