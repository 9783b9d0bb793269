//! Adversary lower bound for quantum best-arm identification.

use crate::error::{invalid, Error, Result};
use crate::oracle::BanditInstance;

/// `c(x) = 2 sqrt(x (1 − x))`.
pub fn c_fn(x: f64) -> f64 {
    2.0 * (x * (1.0 - x)).sqrt()
}

/// Instances the adversary argument cannot tell apart from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardFamily {
    pub base: BanditInstance,
    pub p_floor: f64,
    pub eta: f64,
    /// `(x, variant)` where variant `x` raises arm `x` to `p_1 + η`.
    pub variants: Vec<(usize, BanditInstance)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryBound {
    pub eta: f64,
    /// `(1 − 2√(δ(1−δ))) / (1 + 2/c(p − η)) · √Σ 1/Δ'_x²`.
    pub intermediate: f64,
    /// `(4/5)(1 − 2√(δ(1−δ))) / (1 + 2/c(p/2)) · √H`.
    pub simplified: f64,
}

fn check_floor(instance: &BanditInstance, p_floor: f64) -> Result<()> {
    if !(p_floor > 0.0 && p_floor < 0.5) {
        return Err(invalid(format!("p_floor {p_floor} outside (0, 1/2)")));
    }
    for &v in instance.biases() {
        if v < p_floor || v > 1.0 - p_floor {
            return Err(Error::BiasOutsideFloor {
                value: v,
                floor: p_floor,
                ceil: 1.0 - p_floor,
            });
        }
    }
    Ok(())
}

fn eta_of(instance: &BanditInstance, p_floor: f64) -> f64 {
    match instance.kth_largest(2) {
        Some(p2) => p_floor * (instance.kth_largest(1).unwrap() - p2) / 2.0,
        None => 0.0,
    }
}

pub fn hard_family(instance: &BanditInstance, p_floor: f64) -> Result<HardFamily> {
    check_floor(instance, p_floor)?;
    let eta = eta_of(instance, p_floor);
    let raised = instance.kth_largest(1).unwrap() + eta;
    let mut variants = Vec::new();
    for x in 1..=instance.n_real() {
        if x == instance.best() {
            continue;
        }
        let mut p = instance.biases().to_vec();
        p[x - 1] = raised;
        variants.push((x, BanditInstance::new(p)?));
    }
    Ok(HardFamily {
        base: instance.clone(),
        p_floor,
        eta,
        variants,
    })
}

pub fn adversary_bound(instance: &BanditInstance, delta: f64, p_floor: f64) -> Result<AdversaryBound> {
    check_floor(instance, p_floor)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid(format!("delta {delta} outside (0, 1/2)")));
    }
    let eta = eta_of(instance, p_floor);
    let p1 = instance.kth_largest(1).unwrap();
    let lead = 1.0 - 2.0 * (delta * (1.0 - delta)).sqrt();
    let sum_inv: f64 = instance
        .arms()
        .filter(|&(label, _)| label != instance.best())
        .map(|(_, p)| {
            let d = p1 + eta - p;
            1.0 / (d * d)
        })
        .sum();
    let intermediate = lead / (1.0 + 2.0 / c_fn(p_floor - eta)) * sum_inv.sqrt();
    let simplified = 0.8 * lead / (1.0 + 2.0 / c_fn(p_floor / 2.0)) * instance.hardness().h.sqrt();
    Ok(AdversaryBound {
        eta,
        intermediate,
        simplified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|√((1−p1)p2) − √((1−p2)p1)| ≤ |p1 − p2| / (2√(p(1−p)))`.
pub fn check_overlap_inequality(p1: f64, p2: f64, p_floor: f64) -> Result<OverlapCheck> {
    if !(p_floor > 0.0 && p_floor <= 0.5) {
        return Err(invalid(format!("p_floor {p_floor} outside (0, 1/2]")));
    }
    for v in [p1, p2] {
        if v < p_floor || v > 1.0 - p_floor {
            return Err(Error::BiasOutsideFloor {
                value: v,
                floor: p_floor,
                ceil: 1.0 - p_floor,
            });
        }
    }
    let lhs = (((1.0 - p1) * p2).sqrt() - ((1.0 - p2) * p1).sqrt()).abs();
    let rhs = (p1 - p2).abs() / (2.0 * (p_floor * (1.0 - p_floor)).sqrt());
    Ok(OverlapCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Lower bound against a modeled upper-bound cost on the same instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lower: f64,
    pub modeled: f64,
    pub ratio: f64,
    pub violated: bool,
}

pub fn bound_vs_model(
    instance: &BanditInstance,
    delta: f64,
    p_floor: f64,
    modeled_on: &BanditInstance,
    modeled_cost: f64,
) -> Result<BoundReport> {
    if instance.biases() != modeled_on.biases() {
        return Err(Error::InstanceMismatch);
    }
    let lower = adversary_bound(instance, delta, p_floor)?.intermediate;
    Ok(BoundReport {
        lower,
        modeled: modeled_cost,
        ratio: modeled_cost / lower,
        violated: lower > modeled_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bound_vanishes_at_half() {
        let i = BanditInstance::new(vec![0.6, 0.4]).unwrap();
        let b = adversary_bound(&i, 0.5 - 1e-9, 0.25).unwrap();
        assert!(b.intermediate < 1e-3);
    }

    #[test]
    fn two_arm_value() {
        // re-derived by hand: η = 0.25·0.2/2 = 0.025, Δ' = 0.225
        let i = BanditInstance::new(vec![0.6, 0.4]).unwrap();
        let b = adversary_bound(&i, 0.05, 0.25).unwrap();
        let lead = 1.0 - 2.0 * (0.05f64 * 0.95).sqrt();
        let c = 2.0 * (0.225f64 * 0.775).sqrt();
        assert_relative_eq!(b.eta, 0.025, epsilon = 1e-15);
        assert_relative_eq!(b.intermediate, lead / (1.0 + 2.0 / c) / 0.225, max_relative = 1e-12);
        assert!(b.simplified <= b.intermediate);
    }

    #[test]
    fn floor_is_enforced() {
        let i = BanditInstance::new(vec![0.9, 0.4]).unwrap();
        assert!(matches!(adversary_bound(&i, 0.1, 0.2), Err(Error::BiasOutsideFloor { .. })));
        assert!(adversary_bound(&i, 0.1, 0.6).is_err());
        assert!(adversary_bound(&i, 0.6, 0.1).is_err());
    }

    #[test]
    fn overlap_equality_witness() {
        let c = check_overlap_inequality(0.3, 0.3, 0.3).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        // near-equality as p1, p2 approach p from either side
        let p = 0.2;
        let c = check_overlap_inequality(p, p + 1e-7, p).unwrap();
        assert_relative_eq!(c.lhs, c.rhs, max_relative = 1e-5);
    }

    #[test]
    fn family_variants_have_their_own_best_arm() {
        let i = BanditInstance::new(vec![0.5, 0.7, 0.3]).unwrap();
        let f = hard_family(&i, 0.2).unwrap();
        assert_eq!(f.variants.len(), 2);
        for (x, v) in &f.variants {
            assert_eq!(v.best(), *x);
        }
    }

    #[test]
    fn model_comparison_guard() {
        let a = BanditInstance::new(vec![0.6, 0.4]).unwrap();
        let b = BanditInstance::new(vec![0.6, 0.3]).unwrap();
        assert!(matches!(bound_vs_model(&a, 0.1, 0.25, &b, 10.0), Err(Error::InstanceMismatch)));
        let r = bound_vs_model(&a, 0.1, 0.25, &a, 1e6).unwrap();
        assert!(!r.violated && r.ratio > 1.0);
    }
}
