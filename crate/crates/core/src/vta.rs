//! The variable-time search algorithm `𝒜(O, l2, l1, α)` on the branch backend.
//!
//! Each arm's branch runs up to `m` gapped estimations with precisions
//! `ε_j = 2^-j` against the upper threshold `l1`. A branch that reports "below"
//! at stage `j` records `j` in its clock and drops its flag; branches that never
//! stop end in clock slot `m + 1` with the flag still raised.

use rayon::prelude::*;

use crate::amp_est::{aest_query_cost, choose_qpe_config, gae_with_config, GaeOutcome, QpeConfig, ThresholdRule};
use crate::error::{invalid, Error, Result};
use crate::oracle::BanditInstance;
use crate::sim::{Amplitude, BranchComponent, BranchState, GarbageLabel, QueryLedger};

/// Parameters of one invocation of the algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct VtaParams {
    pub l2: f64,
    pub l1: f64,
    pub alpha: f64,
    pub n_arms: usize,
    pub delta: f64,
    pub m: u32,
    pub a: f64,
    /// Phase-estimation configuration of stage `j` at index `j − 1`.
    pub stages: Vec<QpeConfig>,
    pub rule: ThresholdRule,
}

impl VtaParams {
    pub fn new(l2: f64, l1: f64, alpha: f64, n_arms: usize) -> Result<Self> {
        if !(0.0 < l2 && l2 < l1 && l1 < 1.0) {
            return Err(invalid(format!("thresholds must satisfy 0 < l2 < l1 < 1, got l2={l2}, l1={l1}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha {alpha} outside (0, 1)")));
        }
        if n_arms == 0 {
            return Err(Error::EmptyInstance);
        }
        let delta = l1 - l2;
        let m = ((1.0 / delta).log2().ceil().max(0.0) as u32) + 2;
        let m = m.max(3);
        let a = alpha / (2.0 * m as f64 * (n_arms as f64).powf(1.5));
        let stages = (1..=m).map(|j| choose_qpe_config(stage_eps(j) / 4.0, a)).collect();
        Ok(VtaParams {
            l2,
            l1,
            alpha,
            n_arms,
            delta,
            m,
            a,
            stages,
            rule: ThresholdRule::Standard,
        })
    }

    /// Replaces the per-stage phase-estimation configurations. Used to shrink
    /// registers for gate-level cross-checks.
    pub fn with_stages(mut self, stages: Vec<QpeConfig>) -> Result<Self> {
        if stages.len() != self.m as usize {
            return Err(invalid(format!("expected {} stage configurations, got {}", self.m, stages.len())));
        }
        self.stages = stages;
        Ok(self)
    }

    pub fn with_rule(mut self, rule: ThresholdRule) -> Self {
        self.rule = rule;
        self
    }

    /// Oracle calls of each gapped-estimation stage.
    pub fn stage_costs(&self) -> Vec<u64> {
        self.stages.iter().map(|c| aest_query_cost(*c)).collect()
    }

    /// Stopping times `t_1..t_{m+1}`.
    pub fn stopping_times(&self) -> Vec<u64> {
        let mut t = Vec::with_capacity(self.m as usize + 1);
        let mut acc = 1u64;
        for c in self.stage_costs() {
            acc += c;
            t.push(acc);
        }
        // the termination step makes no queries
        t.push(acc);
        t
    }
}

/// Precision `2^-j` of stage `j`.
pub fn stage_eps(j: u32) -> f64 {
    0.5f64.powi(j as i32)
}

/// Partition of the arms relative to `l1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmSets {
    pub s_left: Vec<usize>,
    pub s_mid: Vec<usize>,
    pub s_right: Vec<usize>,
}

impl ArmSets {
    pub fn s_lm(&self) -> Vec<usize> {
        let mut v = [self.s_left.clone(), self.s_mid.clone()].concat();
        v.sort_unstable();
        v
    }

    pub fn s_mr(&self) -> Vec<usize> {
        let mut v = [self.s_mid.clone(), self.s_right.clone()].concat();
        v.sort_unstable();
        v
    }
}

/// Stopping-time statistics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct VtaProfile {
    pub t: Vec<u64>,
    pub w: Vec<f64>,
    pub t_avg: f64,
    pub psucc: f64,
    pub psucc_prime: f64,
}

impl VtaProfile {
    pub fn t_max(&self) -> u64 {
        *self.t.last().expect("at least one stage")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VtaRun {
    pub state: BranchState,
    pub profile: VtaProfile,
    pub ledger: QueryLedger,
    pub params: VtaParams,
    pub sets: ArmSets,
}

/// White-box classification of every arm (synthetic arm included).
pub fn arm_sets(instance: &BanditInstance, params: &VtaParams) -> ArmSets {
    let mut sets = ArmSets::default();
    let left_edge = params.l1 - params.delta / 2.0;
    let right_edge = params.l1 - params.delta / 8.0;
    for (label, p) in instance.arms() {
        if p < left_edge {
            sets.s_left.push(label);
        } else if p < right_edge {
            sets.s_mid.push(label);
        } else {
            sets.s_right.push(label);
        }
    }
    sets
}

/// Stop/continue amplitudes of every stage for one bias.
fn stage_outcomes(p: f64, params: &VtaParams) -> Vec<GaeOutcome> {
    let mut out = Vec::with_capacity(params.m as usize);
    for (idx, cfg) in params.stages.iter().enumerate() {
        let g = gae_with_config(p, stage_eps(idx as u32 + 1), params.l1, *cfg, params.rule);
        out.push(g);
        if g.beta0 == 0.0 {
            break;
        }
    }
    out
}

fn arm_components(label: usize, stages: &[GaeOutcome], params: &VtaParams, amp0: f64) -> Vec<BranchComponent> {
    let mut out = Vec::with_capacity(params.m as usize + 1);
    let mut running = amp0;
    for (idx, g) in stages.iter().enumerate() {
        let j = idx as u32 + 1;
        let stopped = running * g.beta1;
        if stopped != 0.0 {
            out.push(BranchComponent {
                arm: label,
                clock: j,
                garbage: GarbageLabel::after_stages(j, true),
                flag: false,
                amp: Amplitude::new(stopped, 0.0),
            });
        }
        running *= g.beta0;
        if running == 0.0 {
            return out;
        }
    }
    out.push(BranchComponent {
        arm: label,
        clock: params.m + 1,
        garbage: GarbageLabel::after_stages(params.m, false),
        flag: true,
        amp: Amplitude::new(running, 0.0),
    });
    out
}

/// Executes the algorithm exactly on the branch backend.
pub fn run_vta(instance: &BanditInstance, params: &VtaParams) -> Result<VtaRun> {
    let n = instance.num_arms();
    if n != params.n_arms {
        return Err(Error::ArmCountMismatch {
            left: n,
            right: params.n_arms,
        });
    }
    let amp0 = 1.0 / (n as f64).sqrt();
    let arms: Vec<(usize, f64)> = instance.arms().collect();
    // arms sharing a bias share their stage outcomes
    let mut distinct: Vec<f64> = arms.iter().map(|a| a.1).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    let outcomes: Vec<Vec<GaeOutcome>> = distinct.par_iter().map(|&p| stage_outcomes(p, params)).collect();
    let components: Vec<BranchComponent> = arms
        .iter()
        .flat_map(|&(label, p)| {
            let k = distinct.binary_search_by(|d| d.total_cmp(&p)).expect("bias listed");
            arm_components(label, &outcomes[k], params, amp0)
        })
        .collect();
    let state = BranchState::new(n, components);

    let mut ledger = QueryLedger::new();
    ledger.charge_calls("init", 1);
    ledger.charge_calls("gae", params.stage_costs().iter().sum());

    let sets = arm_sets(instance, params);
    let profile = profile_of(&state, params, &sets);
    Ok(VtaRun {
        state,
        profile,
        ledger,
        params: params.clone(),
        sets,
    })
}

/// `(1/n)(|S_right| + Σ_{S_mid} β_{i,1}²)` with `β_{i,1}²` read off the state.
pub fn psucc_closed_form(instance: &BanditInstance, params: &VtaParams, state: &BranchState) -> f64 {
    let sets = arm_sets(instance, params);
    psucc_prime_from_sets(state, params.n_arms, &sets)
}

fn psucc_prime_from_sets(state: &BranchState, n: usize, sets: &ArmSets) -> f64 {
    // arm_flag_mass already carries the 1/n of the uniform superposition
    let mid: f64 = sets.s_mid.iter().map(|&i| state.arm_flag_mass(i, true)).sum();
    sets.s_right.len() as f64 / n as f64 + mid
}

fn profile_of(state: &BranchState, params: &VtaParams, sets: &ArmSets) -> VtaProfile {
    let t = params.stopping_times();
    let slots = params.m as usize + 1;
    let masses = state.clock_masses(slots);
    let w: Vec<f64> = masses[1..].to_vec();
    let t_avg = w
        .iter()
        .zip(&t)
        .map(|(wj, tj)| wj * (*tj as f64) * (*tj as f64))
        .sum::<f64>()
        .sqrt();
    let (_, psucc) = state.project_flag(true);
    VtaProfile {
        t,
        w,
        t_avg,
        psucc,
        psucc_prime: psucc_prime_from_sets(state, params.n_arms, sets),
    }
}

/// Recomputes the stopping profile of a finished run from its state.
pub fn stopping_profile(run: &VtaRun) -> VtaProfile {
    profile_of(&run.state, &run.params, &run.sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn run(p: Vec<f64>, l2: f64, l1: f64, alpha: f64) -> VtaRun {
        let inst = BanditInstance::new(p).unwrap();
        let params = VtaParams::new(l2, l1, alpha, inst.num_arms()).unwrap();
        run_vta(&inst, &params).unwrap()
    }

    #[test]
    fn params_derivation() {
        let p = VtaParams::new(0.4, 0.6, 0.01, 2).unwrap();
        // Δ = 0.2: ⌈log2 5⌉ + 2 = 5
        assert_eq!(p.m, 5);
        assert_relative_eq!(p.a, 0.01 / (2.0 * 5.0 * 2f64.powf(1.5)), max_relative = 1e-12);
        assert_eq!(VtaParams::new(0.1, 0.9, 0.01, 2).unwrap().m, 3);
        assert!(VtaParams::new(0.6, 0.4, 0.01, 2).is_err());
        assert!(VtaParams::new(0.4, 1.0, 0.01, 2).is_err());
        assert!(VtaParams::new(0.4, 0.6, 0.0, 2).is_err());
    }

    #[test]
    fn arm_set_examples() {
        let inst = BanditInstance::new(vec![0.6, 0.55, 0.4]).unwrap();
        let params = VtaParams::new(0.4, 0.6, 0.01, 3).unwrap();
        let sets = arm_sets(&inst, &params);
        assert_eq!(sets.s_right, vec![1]);
        assert_eq!(sets.s_mid, vec![2]);
        assert_eq!(sets.s_left, vec![3]);
        assert_eq!(sets.s_mr(), vec![1, 2]);
        assert_eq!(sets.s_lm(), vec![2, 3]);
    }

    #[test]
    fn single_strong_arm_keeps_its_flag() {
        let r = run(vec![0.9], 0.4, 0.6, 0.01);
        assert!(r.profile.psucc >= 1.0 - 2.0 * 0.01);
        let ma = 2.0 * r.params.m as f64 * r.params.a;
        assert!(r.profile.w[r.params.m as usize] >= 1.0 - 2.0 * ma * ma);
    }

    #[test]
    fn two_arm_example() {
        let alpha = 0.01;
        let r = run(vec![0.9, 0.1], 0.4, 0.6, alpha);
        assert!((r.profile.psucc - 0.5).abs() <= 2.0 * alpha / 2.0);
        assert_eq!(r.profile.psucc_prime, 0.5);
    }

    #[test]
    fn all_low_arms_rarely_succeed() {
        let alpha = 0.05;
        let r = run(vec![0.1, 0.2, 0.05], 0.6, 0.8, alpha);
        assert!(r.profile.psucc <= 2.0 * alpha / 3.0);
    }

    #[test]
    fn profile_invariants() {
        let r = run(vec![0.7, 0.52, 0.45, 0.2], 0.4, 0.6, 0.02);
        let pr = &r.profile;
        assert_relative_eq!(pr.w.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        assert!(pr.t.windows(2).take(r.params.m as usize - 1).all(|w| w[0] < w[1]));
        assert!(pr.t_avg <= pr.t_max() as f64 * (1.0 + 1e-12));
        assert_relative_eq!(r.state.norm_sqr(), 1.0, epsilon = 1e-10);
        assert_eq!(r.ledger.oracle_calls, pr.t_max());
        assert!(r.ledger.is_conserved());
        assert_eq!(stopping_profile(&r), r.profile);
    }

    #[test]
    fn deterministic() {
        let a = run(vec![0.7, 0.52, 0.45, 0.2], 0.4, 0.6, 0.02);
        let b = run(vec![0.7, 0.52, 0.45, 0.2], 0.4, 0.6, 0.02);
        assert_eq!(a, b);
    }

    #[test]
    fn arm_count_mismatch_is_rejected() {
        let inst = BanditInstance::new(vec![0.9, 0.1]).unwrap();
        let params = VtaParams::new(0.4, 0.6, 0.01, 3).unwrap();
        assert!(matches!(run_vta(&inst, &params), Err(Error::ArmCountMismatch { .. })));
    }
}
