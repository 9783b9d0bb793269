//! Dense statevector reference for the variable-time algorithm.
//!
//! Registers, from the least significant qubit up: the arm index `I`, the coin
//! `B`, clock bits `C_1..C_{m+1}`, the phase registers `P_{j,s}` (`r_j` of them
//! per stage, `b_j` qubits each) and the flag `F`. Every gate is applied to the
//! full vector, so this is only usable for a handful of qubits; it exists to
//! check the branch backend.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::amp_est::{aest_query_cost, gae_threshold, grid_count_below, ThresholdRule};
use crate::error::{Error, Result};
use crate::oracle::{coin_amplitudes, BanditInstance};
use crate::sim::state::{Outcome, QueryLedger};
use crate::vta::{stage_eps, VtaParams};

/// Largest statevector the reference backend will allocate.
pub const GATE_QUBIT_BUDGET: usize = 26;

type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub index_bits: usize,
    pub coin: usize,
    /// Qubit of clock bit `C_j` at index `j − 1`.
    pub clock: Vec<usize>,
    /// `phase[j-1][s]` is the first qubit of register `P_{j,s}`.
    pub phase: Vec<Vec<usize>>,
    pub phase_bits: Vec<usize>,
    pub flag: usize,
    pub total: usize,
}

impl Layout {
    fn build(n_arms: usize, params: &VtaParams) -> Result<Layout> {
        let mut total = 0usize;
        let mut take = |name: String, width: usize| -> Result<usize> {
            let start = total;
            total += width;
            if total > GATE_QUBIT_BUDGET {
                return Err(Error::QubitBudget {
                    register: name,
                    needed: width,
                    total,
                    budget: GATE_QUBIT_BUDGET,
                });
            }
            Ok(start)
        };
        let index_bits = (usize::BITS - (n_arms - 1).leading_zeros()) as usize;
        take("I".into(), index_bits)?;
        let coin = take("B".into(), 1)?;
        let mut clock = Vec::new();
        for j in 1..=params.m as usize + 1 {
            clock.push(take(format!("C_{j}"), 1)?);
        }
        let mut phase = Vec::new();
        let mut phase_bits = Vec::new();
        for (idx, cfg) in params.stages.iter().enumerate() {
            let bits = cfg.bits() as usize;
            let mut regs = Vec::new();
            for s in 1..=cfg.reps() {
                regs.push(take(format!("P_{},{}", idx + 1, s), bits)?);
            }
            phase.push(regs);
            phase_bits.push(bits);
        }
        let flag = take("F".into(), 1)?;
        Ok(Layout {
            index_bits,
            coin,
            clock,
            phase,
            phase_bits,
            flag,
            total,
        })
    }

    fn index_mask(&self) -> usize {
        (1 << self.index_bits) - 1
    }
}

/// Output of the gate-level run.
#[derive(Debug, Clone)]
pub struct GateState {
    pub amps: Vec<Complex64>,
    pub layout: Layout,
    /// Arm label stored at each index-register value.
    pub labels: Vec<usize>,
    pub ledger: QueryLedger,
}

impl GateState {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Distribution of measuring `I`, the clock and `F`.
    pub fn joint_distribution(&self) -> BTreeMap<Outcome, f64> {
        let mut out = BTreeMap::new();
        let mask = self.layout.index_mask();
        for (x, a) in self.amps.iter().enumerate() {
            let prob = a.norm_sqr();
            if prob == 0.0 {
                continue;
            }
            let arm = self.labels[x & mask];
            let clock = self
                .layout
                .clock
                .iter()
                .position(|&q| x >> q & 1 == 1)
                .map_or(0, |j| j as u32 + 1);
            let flag = x >> self.layout.flag & 1 == 1;
            *out.entry((arm, clock, flag)).or_insert(0.0) += prob;
        }
        out
    }

    pub fn flag_probability(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(x, _)| x >> self.layout.flag & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Coin preparation `A|0> = sqrt(1-p)|0> + sqrt(p)|1>`.
fn coin_unitary(p: f64) -> Mat2 {
    let (a0, a1) = coin_amplitudes(p);
    [[c(a0), c(-a1)], [c(a1), c(a0)]]
}

/// Grover iterate `−A S_0 A† S_χ`, a rotation by `2θ` in the coin plane.
fn grover_iterate(p: f64) -> Mat2 {
    let a = coin_unitary(p);
    let s0 = [[c(-1.0), c(0.0)], [c(0.0), c(1.0)]];
    let chi = [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]];
    let q = matmul(&matmul(&matmul(&a, &s0), &dagger(&a)), &chi);
    [[-q[0][0], -q[0][1]], [-q[1][0], -q[1][1]]]
}

struct Sim {
    amps: Vec<Complex64>,
}

impl Sim {
    /// Applies `u` to `target` on basis states where `(x & mask) == value`.
    fn apply_1q(&mut self, target: usize, u: &Mat2, mask: usize, value: usize) {
        let bit = 1 << target;
        for x in 0..self.amps.len() {
            if x & bit != 0 || x & mask != value {
                continue;
            }
            let y = x | bit;
            let (a0, a1) = (self.amps[x], self.amps[y]);
            self.amps[x] = u[0][0] * a0 + u[0][1] * a1;
            self.amps[y] = u[1][0] * a0 + u[1][1] * a1;
        }
    }

    /// Applies the dense `dim × dim` matrix `u` to the contiguous register
    /// starting at `start`, on basis states where `(x & mask) == value`.
    fn apply_register(&mut self, start: usize, bits: usize, u: &[Complex64], mask: usize, value: usize) {
        let dim = 1 << bits;
        let reg_mask = (dim - 1) << start;
        let mut buf = vec![c(0.0); dim];
        for base in 0..self.amps.len() {
            if base & reg_mask != 0 || base & mask != value {
                continue;
            }
            for (k, b) in buf.iter_mut().enumerate() {
                *b = self.amps[base | (k << start)];
            }
            for row in 0..dim {
                let mut acc = c(0.0);
                for col in 0..dim {
                    acc += u[row * dim + col] * buf[col];
                }
                self.amps[base | (row << start)] = acc;
            }
        }
    }

    /// Flips `target` on basis states (with the target clear) satisfying `pred`.
    fn flip_where(&mut self, target: usize, pred: impl Fn(usize) -> bool) {
        let bit = 1 << target;
        for x in 0..self.amps.len() {
            if x & bit == 0 && pred(x) {
                self.amps.swap(x, x | bit);
            }
        }
    }
}

fn inverse_qft(bits: usize) -> Vec<Complex64> {
    let dim = 1usize << bits;
    let norm = 1.0 / (dim as f64).sqrt();
    let mut u = vec![c(0.0); dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            let angle = -2.0 * PI * (row * col) as f64 / dim as f64;
            u[row * dim + col] = Complex64::from_polar(norm, angle);
        }
    }
    u
}

fn mat_pow2(u: &Mat2, t: usize) -> Mat2 {
    let mut out = *u;
    for _ in 0..t {
        out = matmul(&out, &out);
    }
    out
}

/// Runs the algorithm gate by gate on a dense statevector.
pub fn gate_level_run(instance: &BanditInstance, params: &VtaParams) -> Result<GateState> {
    let n = instance.num_arms();
    if n != params.n_arms {
        return Err(Error::ArmCountMismatch {
            left: n,
            right: params.n_arms,
        });
    }
    let layout = Layout::build(n, params)?;
    let arms: Vec<(usize, f64)> = instance.arms().collect();
    let mut labels: Vec<usize> = arms.iter().map(|a| a.0).collect();
    labels.resize(1 << layout.index_bits, usize::MAX);
    let imask = layout.index_mask();

    let mut sim = Sim {
        amps: vec![c(0.0); 1 << layout.total],
    };
    let mut ledger = QueryLedger::new();

    // uniform superposition over the valid index values, flag raised
    let amp0 = 1.0 / (n as f64).sqrt();
    let flag_bit = 1 << layout.flag;
    for i in 0..n {
        sim.amps[i | flag_bit] = c(amp0);
    }
    for (i, &(_, p)) in arms.iter().enumerate() {
        sim.apply_1q(layout.coin, &coin_unitary(p), imask, i);
    }
    ledger.charge_calls("init", 1);

    let hadamard = {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [[c(h), c(h)], [c(h), c(-h)]]
    };
    let grover: Vec<Mat2> = arms.iter().map(|&(_, p)| grover_iterate(p)).collect();
    let mut running_mask = 0usize;
    for (idx, cfg) in params.stages.iter().enumerate() {
        let j = idx as u32 + 1;
        let bits = layout.phase_bits[idx];
        let m_points = cfg.m_points();
        for &start in &layout.phase[idx] {
            for q in start..start + bits {
                sim.apply_1q(q, &hadamard, running_mask, 0);
            }
            for t in 0..bits {
                let control = running_mask | (1 << (start + t));
                for (i, g) in grover.iter().enumerate() {
                    let u = mat_pow2(g, t);
                    sim.apply_1q(layout.coin, &u, control | imask, (1 << (start + t)) | i);
                }
            }
            let iqft = inverse_qft(bits);
            sim.apply_register(start, bits, &iqft, running_mask, 0);
        }
        ledger.charge_calls("gae", aest_query_cost(*cfg));

        let count_below = grid_count_below(gae_threshold(stage_eps(j), params.l1), m_points);
        let regs = layout.phase[idx].clone();
        let need = (cfg.reps() as usize).div_ceil(2);
        let reg_mask = (1usize << bits) - 1;
        let rule = params.rule;
        let clock_q = layout.clock[idx];
        sim.flip_where(clock_q, |x| {
            if x & running_mask != 0 {
                return false;
            }
            let below = regs
                .iter()
                .filter(|&&s| {
                    let y = (x >> s & reg_mask) as u64;
                    y.min(m_points - y) < count_below
                })
                .count();
            let stop = below >= need;
            match rule {
                ThresholdRule::Standard => stop,
                ThresholdRule::Flipped => !stop,
            }
        });
        let clock_bit = 1 << clock_q;
        sim.flip_where(layout.flag, |x| x & clock_bit != 0);
        running_mask |= clock_bit;
    }
    let last = layout.clock[params.m as usize];
    sim.flip_where(last, |x| x & running_mask == 0);

    Ok(GateState {
        amps: sim.amps,
        layout,
        labels,
        ledger,
    })
}
