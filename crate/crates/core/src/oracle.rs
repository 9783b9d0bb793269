//! Bandit instances, coin states and the hardness parameter `H`.
//!
//! Arms carry 1-based labels in the order the biases were given. Biases are
//! kept unsorted; anything that needs the sorted order sorts a copy. The
//! synthetic arm appended by the interval-shrinking step has label 0 and bias
//! exactly 1.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label of the synthetic perfect arm.
pub const SYNTHETIC_ARM: usize = 0;

/// A Bernoulli multi-armed bandit with a unique best arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    biases: Vec<f64>,
    best: usize,
    synthetic: bool,
}

/// Gaps to the best arm in sorted order together with `H` and the smallest gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub delta: Vec<f64>,
    pub h: f64,
    pub delta2: f64,
}

/// Single-qubit state `sqrt(1-p)|0> + sqrt(p)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinState {
    pub p: f64,
}

impl CoinState {
    pub fn amplitudes(&self) -> (f64, f64) {
        coin_amplitudes(self.p)
    }
}

/// `(sqrt(1 - p), sqrt(p))`.
pub fn coin_amplitudes(p: f64) -> (f64, f64) {
    ((1.0 - p).sqrt(), p.sqrt())
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    p: Vec<f64>,
}

impl BanditInstance {
    /// Validates the biases and records the best arm.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyInstance);
        }
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::BiasOutOfRange { arm: i + 1, value: v });
            }
        }
        let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..p.len()).filter(|&i| p[i] == max).collect();
        if winners.len() > 1 {
            return Err(Error::BestArmNotUnique);
        }
        Ok(BanditInstance {
            biases: p,
            best: winners[0] + 1,
            synthetic: false,
        })
    }

    /// Loads `{"p": [...]}` and validates it.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::new(file.p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile { p: self.biases.clone() }).expect("plain f64 vector")
    }

    /// Number of real (non-synthetic) arms.
    pub fn n_real(&self) -> usize {
        self.biases.len()
    }

    /// Number of arms the oracle exposes, the synthetic one included.
    pub fn num_arms(&self) -> usize {
        self.biases.len() + self.synthetic as usize
    }

    pub fn has_synthetic_arm(&self) -> bool {
        self.synthetic
    }

    /// Label of the best real arm.
    pub fn best(&self) -> usize {
        self.best
    }

    /// Real biases in label order.
    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// `(label, bias)` for every arm of the oracle; the synthetic arm comes first.
    pub fn arms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let synthetic = self.synthetic.then_some((SYNTHETIC_ARM, 1.0));
        synthetic
            .into_iter()
            .chain(self.biases.iter().enumerate().map(|(i, &p)| (i + 1, p)))
    }

    pub fn bias(&self, label: usize) -> Option<f64> {
        if label == SYNTHETIC_ARM {
            self.synthetic.then_some(1.0)
        } else {
            self.biases.get(label - 1).copied()
        }
    }

    /// The `k`-th largest real bias (`k = 1` is the best arm).
    pub fn kth_largest(&self, k: usize) -> Option<f64> {
        let mut sorted = self.biases.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.get(k.checked_sub(1)?).copied()
    }

    /// Gap profile over the real arms.
    pub fn hardness(&self) -> GapProfile {
        let mut sorted = self.biases.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let top = sorted[0];
        let delta: Vec<f64> = sorted[1..].iter().map(|p| top - p).collect();
        let h = delta.iter().map(|d| 1.0 / (d * d)).sum();
        let delta2 = delta.iter().cloned().fold(f64::INFINITY, f64::min);
        GapProfile { delta, h, delta2 }
    }

    /// Oracle `O'` with arm 0 of bias 1 prepended; real labels are unchanged.
    pub fn append_perfect_arm(&self) -> Result<Self> {
        if self.synthetic {
            return Err(Error::SyntheticArmPresent);
        }
        Ok(BanditInstance {
            biases: self.biases.clone(),
            best: self.best,
            synthetic: true,
        })
    }

    /// Relabels arms: new arm `j + 1` gets the bias of old arm `perm[j] + 1`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.biases.len() {
            return Err(Error::ArmCountMismatch {
                left: perm.len(),
                right: self.biases.len(),
            });
        }
        let p = perm.iter().map(|&j| self.biases[j]).collect();
        let mut out = Self::new(p)?;
        out.synthetic = self.synthetic;
        Ok(out)
    }

    /// White-box check of whether `label` is `eps`-optimal.
    pub fn is_eps_optimal(&self, label: usize, eps: f64) -> bool {
        match self.bias(label) {
            Some(p) if label != SYNTHETIC_ARM => p >= self.biases[self.best - 1] - eps,
            _ => false,
        }
    }
}
