use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Opaque orthogonality label standing in for the phase-estimation
/// registers. Two components with different labels are orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GarbageLabel(u64);

impl GarbageLabel {
    pub const EMPTY: GarbageLabel = GarbageLabel(0);

    /// Label of the branch that ran `stages` gapped estimations, all of them
    /// answering "continue" except possibly the last one.
    pub fn after_stages(stages: u32, stopped_at_last: bool) -> Self {
        GarbageLabel(((stages as u64) << 1) | stopped_at_last as u64)
    }
}

/// One labelled orthogonal piece of a block-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchComponent {
    pub arm: usize,
    /// Unary stop step: 0 while running, `j` once stopped at step `j`.
    pub clock: u32,
    pub garbage: GarbageLabel,
    pub flag: bool,
    pub amp: Amplitude,
}

impl BranchComponent {
    fn key(&self) -> (usize, u32, GarbageLabel, bool) {
        (self.arm, self.clock, self.garbage, self.flag)
    }
}

/// Statevector of the variable-time algorithm stored as independent branch
/// families, one per arm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchState {
    pub components: Vec<BranchComponent>,
    pub n_arms: usize,
}

/// Joint outcome `(arm, clock, flag)` of measuring the index, clock and flag
/// registers.
pub type Outcome = (usize, u32, bool);

impl BranchState {
    pub fn new(n_arms: usize, components: Vec<BranchComponent>) -> Self {
        BranchState { components, n_arms }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.amp.norm_sqr()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Projects onto `flag == bit`; returns the normalized projection and its
    /// squared norm. A zero projection comes back as an empty state.
    pub fn project_flag(&self, bit: bool) -> (BranchState, f64) {
        let kept: Vec<BranchComponent> = self
            .components
            .iter()
            .filter(|c| c.flag == bit)
            .copied()
            .collect();
        let mass: f64 = kept.iter().map(|c| c.amp.norm_sqr()).sum();
        if mass == 0.0 {
            return (BranchState::new(self.n_arms, Vec::new()), 0.0);
        }
        let scale = 1.0 / mass.sqrt();
        let comps = kept
            .into_iter()
            .map(|mut c| {
                c.amp *= scale;
                c
            })
            .collect();
        (BranchState::new(self.n_arms, comps), mass)
    }

    /// `<self|other>`, matching components by their full label tuple.
    pub fn inner_product(&self, other: &BranchState) -> Result<Amplitude> {
        if self.n_arms != other.n_arms {
            return Err(Error::ArmCountMismatch {
                left: self.n_arms,
                right: other.n_arms,
            });
        }
        let mut index: HashMap<_, Amplitude> = HashMap::with_capacity(other.components.len());
        for c in &other.components {
            *index.entry(c.key()).or_default() += c.amp;
        }
        Ok(self
            .components
            .iter()
            .filter_map(|c| index.get(&c.key()).map(|b| c.amp.conj() * b))
            .sum())
    }

    /// Rescales to unit norm. Only called at algorithm boundaries.
    pub fn renormalized(mut self) -> Self {
        let n = self.norm_sqr();
        if n > 0.0 {
            let s = 1.0 / n.sqrt();
            for c in &mut self.components {
                c.amp *= s;
            }
        }
        self
    }

    pub fn joint_distribution(&self) -> BTreeMap<Outcome, f64> {
        let mut out = BTreeMap::new();
        for c in &self.components {
            *out.entry((c.arm, c.clock, c.flag)).or_insert(0.0) += c.amp.norm_sqr();
        }
        out
    }

    /// Squared mass on clock slot `j` for `j = 0..=slots`.
    pub fn clock_masses(&self, slots: usize) -> Vec<f64> {
        let mut w = vec![0.0; slots + 1];
        for c in &self.components {
            w[c.clock as usize] += c.amp.norm_sqr();
        }
        w
    }

    /// Mass of `arm` with the given flag.
    pub fn arm_flag_mass(&self, arm: usize, flag: bool) -> f64 {
        self.components
            .iter()
            .filter(|c| c.arm == arm && c.flag == flag)
            .map(|c| c.amp.norm_sqr())
            .sum()
    }

    pub fn arm_mass(&self, arm: usize) -> f64 {
        self.components
            .iter()
            .filter(|c| c.arm == arm)
            .map(|c| c.amp.norm_sqr())
            .sum()
    }

    /// Measures the index register. Panics on an empty state.
    pub fn sample_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        assert!(!self.components.is_empty(), "cannot measure an empty state");
        let total = self.norm_sqr();
        let mut u = rng.gen::<f64>() * total;
        for c in &self.components {
            u -= c.amp.norm_sqr();
            if u < 0.0 {
                return c.arm;
            }
        }
        // rounding left a sliver; fall back to the last component with mass
        self.components
            .iter()
            .rev()
            .find(|c| c.amp.norm_sqr() > 0.0)
            .map(|c| c.arm)
            .unwrap_or(self.components[0].arm)
    }
}

/// Total-variation distance between two outcome distributions.
pub fn total_variation<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().cloned());
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Oracle-call accounting.
///
/// `oracle_calls` counts raw `O`/`O†` invocations of circuits that were
/// actually executed; `modeled_cost` accumulates the variable-time cost
/// formulas charged for amplification and estimation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLedger {
    pub oracle_calls: u64,
    pub modeled_cost: f64,
    pub breakdown: BTreeMap<String, u64>,
    pub modeled_breakdown: BTreeMap<String, f64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_calls(&mut self, subroutine: &str, calls: u64) {
        self.oracle_calls += calls;
        *self.breakdown.entry(subroutine.to_string()).or_insert(0) += calls;
    }

    pub fn charge_modeled(&mut self, subroutine: &str, cost: f64) {
        debug_assert!(cost >= 0.0);
        self.modeled_cost += cost;
        *self.modeled_breakdown.entry(subroutine.to_string()).or_insert(0.0) += cost;
    }

    /// Associative merge of two ledgers.
    pub fn merge(&mut self, other: &QueryLedger) {
        self.oracle_calls += other.oracle_calls;
        self.modeled_cost += other.modeled_cost;
        for (k, v) in &other.breakdown {
            *self.breakdown.entry(k.clone()).or_insert(0) += v;
        }
        for (k, v) in &other.modeled_breakdown {
            *self.modeled_breakdown.entry(k.clone()).or_insert(0.0) += v;
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.breakdown.values().sum::<u64>() == self.oracle_calls
    }
}
