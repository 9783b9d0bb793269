//! Fixed-confidence best-arm identification: interval shrinking, locating the
//! top two biases, the final amplification, and the PAC and fixed-budget
//! variants built on top.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::oracle::BanditInstance;
use crate::sim::QueryLedger;
use crate::stats::kl_bernoulli;
use crate::vta::{run_vta, VtaParams, VtaRun};
use crate::vtaa::{amplify, estimate, EstimateMode};

/// Closed interval inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid(format!("interval [{lo}, {hi}] not inside [0, 1]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Intervals for the best and second-best bias during `locate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPair {
    pub i1: Interval,
    pub i2: Interval,
    pub iteration: usize,
    pub current_delta: f64,
}

impl IntervalPair {
    pub fn separation(&self) -> f64 {
        self.i1.lo - self.i2.hi
    }

    pub fn is_separated(&self) -> bool {
        self.separation() >= 2.0 * self.i1.width()
    }
}

/// What one call to `shrink` saw and decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkRecord {
    pub k: usize,
    pub input: Interval,
    pub output: Interval,
    pub r: [f64; 2],
    pub b: [bool; 2],
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub delta: f64,
    pub shrinks: [ShrinkRecord; 2],
    pub i1: Interval,
    pub i2: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaiResult {
    pub arm: usize,
    pub ledger: QueryLedger,
    pub transcript: Vec<RoundRecord>,
    pub i1: Interval,
    pub i2: Interval,
    /// Thresholds of the final amplification, if one ran.
    pub thresholds: Option<(f64, f64)>,
}

impl BaiResult {
    pub fn rounds(&self) -> usize {
        self.transcript.len()
    }
}

/// Knobs shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaiConfig {
    pub estimate_mode: EstimateMode,
    /// Smallest gap the round cap of `locate` is sized for.
    pub delta2_floor: f64,
    /// Abort once the modeled cost exceeds this.
    pub budget: Option<f64>,
}

impl Default for BaiConfig {
    fn default() -> Self {
        BaiConfig {
            estimate_mode: EstimateMode::Honest,
            delta2_floor: 2f64.powi(-8),
            budget: None,
        }
    }
}

impl BaiConfig {
    pub fn max_rounds(&self) -> usize {
        4 * (round_bound(self.delta2_floor) + 3)
    }
}

/// `⌈log_{5/3}(1/Δ₂)⌉`; `locate` needs at most three rounds more than this.
pub fn round_bound(delta2: f64) -> usize {
    ((1.0 / delta2).ln() / (5.0f64 / 3.0).ln()).ceil().max(0.0) as usize
}

type RunKey = (Vec<u64>, bool, [u64; 3]);

thread_local! {
    static RUNS: RefCell<HashMap<RunKey, Rc<VtaRun>>> = RefCell::new(HashMap::new());
}

/// `run_vta` memoized per thread. The run is a pure function of its inputs
/// and Monte Carlo trials revisit the same thresholds over and over.
fn cached_run(instance: &BanditInstance, l2: f64, l1: f64, alpha: f64) -> Result<Rc<VtaRun>> {
    let key: RunKey = (
        instance.biases().iter().map(|p| p.to_bits()).collect(),
        instance.has_synthetic_arm(),
        [l2.to_bits(), l1.to_bits(), alpha.to_bits()],
    );
    if let Some(run) = RUNS.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(run);
    }
    let params = VtaParams::new(l2, l1, alpha, instance.num_arms())?;
    let run = Rc::new(run_vta(instance, &params)?);
    RUNS.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= 4096 {
            c.clear();
        }
        c.insert(key, run.clone());
    });
    Ok(run)
}

/// Decision threshold for the shrink estimates of the `k`-th bias.
pub fn shrink_threshold(k: usize, n: usize) -> f64 {
    (k as f64 + 0.5) / (n as f64 + 1.0)
}

/// One step of interval shrinking for the `k`-th largest bias.
pub fn shrink<R: Rng + ?Sized>(
    instance: &BanditInstance,
    k: usize,
    interval: Interval,
    delta: f64,
    mode: EstimateMode,
    rng: &mut R,
) -> Result<(Interval, ShrinkRecord, QueryLedger)> {
    if k != 1 && k != 2 {
        return Err(invalid(format!("shrink rank k = {k} must be 1 or 2")));
    }
    if interval.width() <= 0.0 {
        return Err(Error::DegenerateInterval {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    let (a, b) = (interval.lo, interval.hi);
    let eps = interval.width() / 5.0;
    let delta = delta / 2.0;
    let augmented = instance.append_perfect_arm()?;
    let n = instance.n_real();
    let threshold = shrink_threshold(k, n);
    let mut ledger = QueryLedger::new();
    let mut r = [0.0; 2];
    let mut bits = [false; 2];
    for (j, (l2, l1)) in [(a + eps, a + 3.0 * eps), (a + 2.0 * eps, a + 4.0 * eps)].into_iter().enumerate() {
        let run = cached_run(&augmented, l2, l1, 0.01 * delta)?;
        let (rj, lj) = estimate(&run, 0.1, delta, mode, rng)?;
        ledger.merge(&lj);
        r[j] = rj;
        bits[j] = rj > threshold;
    }
    let output = match bits {
        [false, false] => Interval { lo: a, hi: a + 3.0 * eps },
        [true, true] => Interval { lo: a + 2.0 * eps, hi: b },
        _ => Interval {
            lo: a + eps,
            hi: a + 4.0 * eps,
        },
    };
    let record = ShrinkRecord {
        k,
        input: interval,
        output,
        r,
        b: bits,
        delta,
    };
    Ok((output, record, ledger))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocateOutcome {
    pub pair: IntervalPair,
    pub transcript: Vec<RoundRecord>,
    pub ledger: QueryLedger,
    /// True when the loop stopped on the width break rather than separation.
    pub width_break: bool,
}

fn over_budget(config: &BaiConfig, ledger: &QueryLedger) -> bool {
    config.budget.is_some_and(|b| ledger.modeled_cost > b)
}

/// Marker error for a run that hit its modeled-cost cap.
#[derive(Debug)]
struct OverBudget;

fn locate_inner<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    width_stop: Option<f64>,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<std::result::Result<LocateOutcome, OverBudget>> {
    let mut pair = IntervalPair {
        i1: Interval::UNIT,
        i2: Interval::UNIT,
        iteration: 0,
        current_delta: delta / 8.0,
    };
    let mut transcript = Vec::new();
    let mut ledger = QueryLedger::new();
    let cap = config.max_rounds();
    loop {
        if pair.is_separated() {
            break;
        }
        if width_stop.is_some_and(|w| pair.i1.width() <= w) {
            return Ok(Ok(LocateOutcome {
                pair,
                transcript,
                ledger,
                width_break: true,
            }));
        }
        if pair.iteration >= cap {
            return Err(Error::SeparationNotAchieved { rounds: pair.iteration });
        }
        let d = pair.current_delta;
        let (i1, s1, l1) = shrink(instance, 1, pair.i1, d, config.estimate_mode, rng)?;
        ledger.merge(&l1);
        let (i2, s2, l2) = shrink(instance, 2, pair.i2, d, config.estimate_mode, rng)?;
        ledger.merge(&l2);
        pair.i1 = i1;
        pair.i2 = i2;
        pair.iteration += 1;
        pair.current_delta = d / 2.0;
        transcript.push(RoundRecord {
            round: pair.iteration,
            delta: d,
            shrinks: [s1, s2],
            i1,
            i2,
        });
        if over_budget(config, &ledger) {
            return Ok(Err(OverBudget));
        }
    }
    Ok(Ok(LocateOutcome {
        pair,
        transcript,
        ledger,
        width_break: false,
    }))
}

/// Narrows intervals around the best and second-best biases until they are
/// well separated.
pub fn locate<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<LocateOutcome> {
    let uncapped = BaiConfig { budget: None, ..*config };
    Ok(locate_inner(instance, delta, None, &uncapped, rng)?.expect("no budget set"))
}

fn check_instance(instance: &BanditInstance, delta: f64) -> Result<()> {
    if instance.has_synthetic_arm() {
        return Err(Error::SyntheticArmPresent);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

fn finish<R: Rng + ?Sized>(
    instance: &BanditInstance,
    located: LocateOutcome,
    l2: f64,
    l1: f64,
    delta: f64,
    rng: &mut R,
) -> Result<BaiResult> {
    let mut ledger = located.ledger;
    let run = cached_run(instance, l2, l1, 0.01 * delta)?;
    let (arm, la) = amplify(&run, delta, rng)?;
    ledger.merge(&la);
    Ok(BaiResult {
        arm,
        ledger,
        transcript: located.transcript,
        i1: located.pair.i1,
        i2: located.pair.i2,
        thresholds: Some((l2, l1)),
    })
}

fn best_arm_inner<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<Option<BaiResult>> {
    check_instance(instance, delta)?;
    if instance.n_real() == 1 {
        return Ok(Some(trivial_result(1)));
    }
    let delta = delta / 2.0;
    let located = match locate_inner(instance, delta, None, config, rng)? {
        Ok(l) => l,
        Err(OverBudget) => return Ok(None),
    };
    let (l1, l2) = (located.pair.i1.lo, located.pair.i2.hi);
    let result = finish(instance, located, l2, l1, delta, rng)?;
    if over_budget(config, &result.ledger) {
        return Ok(None);
    }
    Ok(Some(result))
}

fn trivial_result(arm: usize) -> BaiResult {
    BaiResult {
        arm,
        ledger: QueryLedger::new(),
        transcript: Vec::new(),
        i1: Interval::UNIT,
        i2: Interval::UNIT,
        thresholds: None,
    }
}

/// Identifies the best arm with probability at least `1 − delta`.
pub fn best_arm<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<BaiResult> {
    let uncapped = BaiConfig { budget: None, ..*config };
    Ok(best_arm_inner(instance, delta, &uncapped, rng)?.expect("no budget set"))
}

/// `best_arm` that gives up (returns `None`) once its modeled cost exceeds
/// `cap`.
pub fn best_arm_capped<R: Rng + ?Sized>(
    instance: &BanditInstance,
    delta: f64,
    cap: f64,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<Option<BaiResult>> {
    let capped = BaiConfig {
        budget: Some(cap),
        ..*config
    };
    best_arm_inner(instance, delta, &capped, rng)
}

/// Finds an `eps_pac`-optimal arm with probability at least `1 − delta`.
pub fn pac_arm<R: Rng + ?Sized>(
    instance: &BanditInstance,
    eps_pac: f64,
    delta: f64,
    config: &BaiConfig,
    rng: &mut R,
) -> Result<BaiResult> {
    check_instance(instance, delta)?;
    if !(eps_pac > 0.0 && eps_pac < 1.0) {
        return Err(invalid(format!("eps {eps_pac} outside (0, 1)")));
    }
    if instance.n_real() == 1 {
        return Ok(trivial_result(1));
    }
    let delta = delta / 2.0;
    let uncapped = BaiConfig { budget: None, ..*config };
    let located = locate_inner(instance, delta, Some(eps_pac / 4.0), &uncapped, rng)?.expect("no budget set");
    let l1 = located.pair.i1.lo;
    let l2 = if located.width_break {
        let l2 = l1 - eps_pac / 4.0;
        if l2 > 0.0 {
            l2
        } else {
            l1 / 2.0
        }
    } else {
        located.pair.i2.hi
    };
    if l1 <= 0.0 {
        // every bias is within eps/4 of zero, so any arm will do
        let arm = rng.gen_range(1..=instance.n_real());
        return Ok(BaiResult {
            arm,
            ledger: located.ledger,
            transcript: located.transcript,
            i1: located.pair.i1,
            i2: located.pair.i2,
            thresholds: None,
        });
    }
    finish(instance, located, l2, l1, delta, rng)
}

/// One entry of the calibration table: confidence and its cost cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcEntry {
    pub delta: f64,
    pub tc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedBudgetOutcome {
    pub arm: usize,
    pub delta_star: f64,
    pub runs: usize,
    pub votes: BTreeMap<usize, usize>,
    pub abstained: usize,
    pub ledger: QueryLedger,
}

/// Chooses `δ*` minimizing `exp(−⌊T/Tc(δ)⌋ D(1/2 ‖ δ))` over the table.
/// Returns `(entry, runs, bound)`.
pub fn plan_fixed_budget(budget: f64, table: &[TcEntry]) -> Result<(TcEntry, usize, f64)> {
    if table.is_empty() {
        return Err(invalid("empty Tc table"));
    }
    let mut best: Option<(TcEntry, usize, f64)> = None;
    for e in table {
        if !(e.delta > 0.0 && e.delta < 0.5) || e.tc <= 0.0 {
            return Err(invalid(format!("bad Tc entry delta={} tc={}", e.delta, e.tc)));
        }
        let m = (budget / e.tc).floor() as usize;
        if m == 0 {
            continue;
        }
        let bound = (-(m as f64) * kl_bernoulli(0.5, e.delta)).exp();
        if best.is_none_or(|(_, _, b)| bound < b) {
            best = Some((*e, m, bound));
        }
    }
    best.ok_or(Error::BudgetTooSmall { budget })
}

/// Fixed-budget identification by majority vote over capped runs.
pub fn fixed_budget<R: Rng + ?Sized>(
    instance: &BanditInstance,
    budget: f64,
    table: &[TcEntry],
    config: &BaiConfig,
    rng: &mut R,
) -> Result<FixedBudgetOutcome> {
    let (entry, runs, _) = plan_fixed_budget(budget, table)?;
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut abstained = 0;
    let mut ledger = QueryLedger::new();
    for _ in 0..runs {
        match best_arm_capped(instance, entry.delta / 2.0, entry.tc, config, rng) {
            Ok(Some(r)) => {
                ledger.merge(&r.ledger);
                *votes.entry(r.arm).or_insert(0) += 1;
            }
            Ok(None) | Err(Error::SeparationNotAchieved { .. }) | Err(Error::EmptySuccessSubspace) => {
                abstained += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let top = votes.values().copied().max().ok_or(Error::NoDecision)?;
    // BTreeMap iterates in label order, so the first maximum is the smallest label
    let arm = votes.iter().find(|(_, &v)| v == top).map(|(&a, _)| a).expect("nonempty");
    Ok(FixedBudgetOutcome {
        arm,
        delta_star: entry.delta,
        runs,
        votes,
        abstained,
        ledger,
    })
}
