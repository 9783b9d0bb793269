//! Variable-time amplitude amplification and estimation.
//!
//! Amplification of `𝒜` with the flag projector acts inside the plane spanned
//! by the flagged and unflagged parts of `𝒜|0>`, so the amplified output is
//! the normalized flag-1 projection of the branch state and no circuit is
//! built. What the circuits would cost is charged from the variable-time cost
//! formula instead, as `modeled_cost` in the ledger.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::sim::QueryLedger;
use crate::vta::{VtaProfile, VtaRun};

/// Variable-time costs of one run of `𝒜`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub q: f64,
    pub r_rep: u32,
    pub amplify_cost: f64,
    pub estimate_cost: f64,
}

/// How `estimate` resolves its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimateMode {
    #[default]
    Honest,
    /// Always the lowest value the guarantee allows.
    AdversarialLow,
    /// Always the highest value the guarantee allows.
    AdversarialHigh,
}

/// Number of amplification attempts for failure probability `delta`.
pub fn amplify_repetitions(delta: f64) -> u32 {
    (2.0 / delta).log2().ceil().max(1.0) as u32
}

pub fn cost_model(profile: &VtaProfile, eps: f64, delta: f64) -> Result<CostModel> {
    if profile.psucc <= 0.0 {
        return Err(Error::EmptySuccessSubspace);
    }
    let t = profile.t_max() as f64;
    let lt = t.log2();
    let q = t * lt + profile.t_avg / profile.psucc.sqrt() * lt;
    let r_rep = amplify_repetitions(delta);
    let estimate_cost = if eps > 0.0 {
        q / eps * lt * lt * (t / delta).log2().log2()
    } else {
        f64::INFINITY
    };
    Ok(CostModel {
        q,
        r_rep,
        amplify_cost: r_rep as f64 * q,
        estimate_cost,
    })
}

fn base_ledger(run: &VtaRun) -> QueryLedger {
    run.ledger.clone()
}

/// `Amplify(𝒜, δ)`: returns an arm label drawn from the amplified state.
pub fn amplify<R: Rng + ?Sized>(run: &VtaRun, delta: f64, rng: &mut R) -> Result<(usize, QueryLedger)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("amplify delta {delta} outside (0, 1)")));
    }
    let (good, psucc) = run.state.project_flag(true);
    if psucc == 0.0 {
        return Err(Error::EmptySuccessSubspace);
    }
    let costs = cost_model(&run.profile, 0.0, delta)?;
    let mut ledger = base_ledger(run);
    ledger.charge_modeled("amplify", costs.amplify_cost);
    for _ in 0..costs.r_rep {
        if rng.gen_bool(0.5) {
            return Ok((good.sample_arm(rng), ledger));
        }
    }
    Ok((run.state.sample_arm(rng), ledger))
}

/// `Estimate(𝒜, ε, δ)`: an estimate of the success probability of `𝒜`.
pub fn estimate<R: Rng + ?Sized>(
    run: &VtaRun,
    eps: f64,
    delta: f64,
    mode: EstimateMode,
    rng: &mut R,
) -> Result<(f64, QueryLedger)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("estimate eps {eps} outside [0, 1)")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("estimate delta {delta} outside [0, 1)")));
    }
    let costs = cost_model(&run.profile, eps, delta.max(f64::MIN_POSITIVE))?;
    let mut ledger = base_ledger(run);
    ledger.charge_modeled("estimate", costs.estimate_cost);
    let n = run.params.n_arms as f64;
    let p = run.profile.psucc;
    let pp = run.profile.psucc_prime;
    let r = match mode {
        EstimateMode::AdversarialLow => (1.0 - eps) * (pp - 0.1 / n),
        EstimateMode::AdversarialHigh => (1.0 + eps) * (pp + 0.1 / n),
        EstimateMode::Honest if eps == 0.0 => p,
        EstimateMode::Honest => {
            if rng.gen_bool(delta) {
                rng.gen_range(0.0..=2.0)
            } else {
                p * (1.0 + rng.gen_range(-eps..=eps))
            }
        }
    };
    Ok((r, ledger))
}
