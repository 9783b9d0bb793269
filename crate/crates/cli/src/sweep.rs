//! Hardness sweeps: quantum cost, classical pulls and the lower bound per
//! (instance, trial), plus the log-log fits over the family.

use std::io::{self, Write};

use rand::RngCore;
use rayon::prelude::*;

use qbai::bai::{best_arm, BaiConfig};
use qbai::bounds::adversary_bound;
use qbai::classical::{naive, successive_elimination};
use qbai::rng::{domain, stream};
use qbai::stats::log_log_slope;
use qbai::BanditInstance;

use crate::families::Family;
use crate::CliError;

pub const CSV_HEADER: &str = "instance_id,n,H,delta2,delta,modeled_quantum_cost,raw_oracle_calls,classical_se_pulls,classical_naive_pulls,lower_bound,success,seed";

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Family(Family),
    /// A single instance read from disk.
    Fixed(BanditInstance),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub source: Source,
    pub ns: Vec<usize>,
    pub delta2s: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance_id: usize,
    pub n: usize,
    pub h: f64,
    pub delta2: f64,
    pub delta: f64,
    pub modeled_quantum_cost: f64,
    pub raw_oracle_calls: u64,
    pub classical_se_pulls: u64,
    pub classical_naive_pulls: u64,
    pub lower_bound: f64,
    pub success: bool,
    pub seed: u64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.n,
            self.h,
            self.delta2,
            self.delta,
            self.modeled_quantum_cost,
            self.raw_oracle_calls,
            self.classical_se_pulls,
            self.classical_naive_pulls,
            self.lower_bound,
            self.success,
            self.seed
        )
    }
}

impl SweepSpec {
    /// Instances in canonical order: `n` outer, `Δ₂` inner.
    pub fn instances(&self) -> Result<Vec<BanditInstance>, CliError> {
        match &self.source {
            Source::Fixed(i) => Ok(vec![i.clone()]),
            Source::Family(f) => {
                let mut out = Vec::new();
                for &n in &self.ns {
                    for &d in &self.delta2s {
                        out.push(f.instance(n, d)?);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Rejects sweeps that cannot support a scaling fit: fewer than six
    /// distinct `H` values or a span below three decades.
    pub fn check_span(&self) -> Result<(), CliError> {
        let mut hs: Vec<f64> = self.instances()?.iter().map(|i| i.hardness().h).collect();
        hs.sort_by(|a, b| a.total_cmp(b));
        hs.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-9);
        let span = hs.last().zip(hs.first()).map_or(0.0, |(hi, lo)| (hi / lo).log10());
        if hs.len() < 6 || span < 3.0 {
            return Err(CliError::Usage(format!(
                "degenerate sweep: {} distinct H values spanning {span:.2} decades (need >= 6 and >= 3)",
                hs.len()
            )));
        }
        Ok(())
    }
}

/// Bias floor used for the lower bound: the largest `p` with every bias in
/// `[p, 1 − p]`.
pub fn bias_floor(instance: &BanditInstance) -> f64 {
    instance.biases().iter().map(|&p| p.min(1.0 - p)).fold(0.5, f64::min)
}

/// Seed of trial `trial` on instance `id`; reruns of the row use it alone.
pub fn trial_seed(master: u64, id: usize, trials: usize, trial: usize) -> u64 {
    stream(master, domain::INSTANCES, (id * trials + trial) as u64).next_u64()
}

/// One sweep row, reproducible from `seed` alone.
pub fn run_row(instance: &BanditInstance, id: usize, delta: f64, seed: u64) -> Result<SweepRow, CliError> {
    let g = instance.hardness();
    let q = best_arm(instance, delta, &BaiConfig::default(), &mut stream(seed, domain::QUANTUM, 0))?;
    let se = successive_elimination(instance, delta, &mut stream(seed, domain::SUCCESSIVE_ELIMINATION, 0))?;
    let nv = naive(instance, g.delta2, delta, &mut stream(seed, domain::NAIVE, 0))?;
    let floor = bias_floor(instance);
    let lower_bound = if floor > 0.0 && floor < 0.5 && delta < 0.5 {
        adversary_bound(instance, delta, floor)?.intermediate
    } else {
        0.0
    };
    Ok(SweepRow {
        instance_id: id,
        n: instance.n_real(),
        h: g.h,
        delta2: g.delta2,
        delta,
        modeled_quantum_cost: q.ledger.modeled_cost,
        raw_oracle_calls: q.ledger.oracle_calls,
        classical_se_pulls: se.pulls_total,
        classical_naive_pulls: nv.pulls_total,
        lower_bound,
        success: q.arm == instance.best(),
        seed,
    })
}

/// Runs every (instance, trial) in parallel; rows come back in canonical order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    if spec.trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    if !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(CliError::Usage(format!("delta {} outside (0, 1)", spec.delta)));
    }
    let instances = spec.instances()?;
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|id| (0..spec.trials).map(move |t| (id, t)))
        .collect();
    jobs.par_iter()
        .map(|&(id, t)| run_row(&instances[id], id, spec.delta, trial_seed(spec.seed, id, spec.trials, t)))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Per-instance means.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSummary {
    pub instance_id: usize,
    pub n: usize,
    pub h: f64,
    pub delta2: f64,
    pub quantum: f64,
    pub se: f64,
    pub naive: f64,
    pub lower_bound: f64,
    pub success_rate: f64,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<InstanceSummary> {
    let mut out: Vec<InstanceSummary> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for r in rows {
        if out.last().is_none_or(|s| s.instance_id != r.instance_id) {
            out.push(InstanceSummary {
                instance_id: r.instance_id,
                n: r.n,
                h: r.h,
                delta2: r.delta2,
                quantum: 0.0,
                se: 0.0,
                naive: 0.0,
                lower_bound: r.lower_bound,
                success_rate: 0.0,
            });
            counts.push(0);
        }
        let s = out.last_mut().unwrap();
        s.quantum += r.modeled_quantum_cost;
        s.se += r.classical_se_pulls as f64;
        s.naive += r.classical_naive_pulls as f64;
        s.success_rate += r.success as u8 as f64;
        *counts.last_mut().unwrap() += 1;
    }
    for (s, c) in out.iter_mut().zip(counts) {
        let c = c as f64;
        s.quantum /= c;
        s.se /= c;
        s.naive /= c;
        s.success_rate /= c;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepFit {
    pub quantum_slope: f64,
    pub se_slope: f64,
    pub naive_slope: f64,
    pub bound_slope: f64,
    /// Rows where the lower bound exceeds the modeled cost.
    pub bound_violations: usize,
}

/// Log-log slopes of the per-instance means against `H`.
pub fn fit(rows: &[SweepRow]) -> SweepFit {
    let s = summarize(rows);
    let h: Vec<f64> = s.iter().map(|x| x.h).collect();
    let col = |f: fn(&InstanceSummary) -> f64| s.iter().map(f).collect::<Vec<f64>>();
    let slope = |y: Vec<f64>| {
        if s.len() < 2 || y.iter().any(|v| *v <= 0.0) {
            f64::NAN
        } else {
            log_log_slope(&h, &y)
        }
    };
    SweepFit {
        quantum_slope: slope(col(|x| x.quantum)),
        se_slope: slope(col(|x| x.se)),
        naive_slope: slope(col(|x| x.naive)),
        bound_slope: slope(col(|x| x.lower_bound)),
        bound_violations: rows.iter().filter(|r| r.lower_bound > r.modeled_quantum_cost).count(),
    }
}

/// Whitespace-separated columns for gnuplot.
pub fn write_dat<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "# H quantum se naive lower_bound success_rate n delta2")?;
    for s in summarize(rows) {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            s.h, s.quantum, s.se, s.naive, s.lower_bound, s.success_rate, s.n, s.delta2
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepSpec {
        SweepSpec {
            source: Source::Family(Family::UniformGap),
            ns: vec![2, 3],
            delta2s: vec![0.25, 0.125],
            delta: 0.1,
            trials: 2,
            seed: 5,
        }
    }

    #[test]
    fn rows_are_canonical_and_reproducible() {
        let a = run_sweep(&small()).unwrap();
        let b = run_sweep(&small()).unwrap();
        assert_eq!(a, b);
        let ids: Vec<usize> = a.iter().map(|r| r.instance_id).collect();
        assert_eq!(ids, vec![0, 0, 1, 1, 2, 2, 3, 3]);
        let again = run_row(&Family::UniformGap.instance(3, 0.125).unwrap(), 3, 0.1, a[7].seed).unwrap();
        assert_eq!(again, a[7]);
    }

    #[test]
    fn csv_layout() {
        let rows = run_sweep(&small()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for l in lines {
            assert_eq!(l.split(',').count(), 12);
        }
    }

    #[test]
    fn span_check() {
        assert!(small().check_span().is_err());
        let wide = SweepSpec {
            ns: vec![2, 4, 8, 16],
            delta2s: vec![0.25, 2f64.powi(-4), 2f64.powi(-6), 2f64.powi(-8)],
            ..small()
        };
        assert!(wide.check_span().is_ok());
    }

    #[test]
    fn floor_of_instance() {
        let i = BanditInstance::new(vec![0.9, 0.3]).unwrap();
        assert!((bias_floor(&i) - 0.1).abs() < 1e-12);
    }
}
