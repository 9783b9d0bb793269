//! Subcommand bodies. Each returns the process exit code: 0 on success, 1
//! when a statistical check or suite fails. Usage errors come back as
//! `CliError` and map to 2.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use qbai::bai::{best_arm, fixed_budget, pac_arm, plan_fixed_budget, BaiConfig, BaiResult, TcEntry};
use qbai::bounds::adversary_bound;
use qbai::classical::{naive, se_predicted_pulls, successive_elimination};
use qbai::rng::{domain, stream};
use qbai::stats::{binomial_sigma, quantile, wilson_interval};
use qbai::BanditInstance;

use crate::args::{BoundArgs, Command, FixedBudgetArgs, InstanceArgs, RunArgs, SweepArgs, ValidateArgs};
use crate::config::ConfigFile;
use crate::families::Family;
use crate::sweep::{bias_floor, fit, run_sweep, write_csv, write_dat, Source, SweepSpec};
use crate::validate::{run_suites, Faults, Level};
use crate::CliError;

pub fn run(command: &Command, out: &mut dyn Write) -> Result<u8, CliError> {
    match command {
        Command::Bestarm(a) => cmd_bestarm(a, out),
        Command::Pac(a) => cmd_pac(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Baseline(a) => cmd_baseline(a, out),
        Command::Bound(a) => cmd_bound(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Fixedbudget(a) => cmd_fixedbudget(a, out),
    }
}

fn config_of(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn parse_biases(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad bias '{s}': {e}")))
        })
        .collect()
}

fn load_instance(args: &InstanceArgs, cfg: &ConfigFile) -> Result<BanditInstance, CliError> {
    if let Some(p) = &args.p {
        return Ok(BanditInstance::new(p.clone())?);
    }
    if let Some(f) = &args.file {
        return Ok(BanditInstance::load(f)?);
    }
    if let Some(p) = cfg.raw("p") {
        return Ok(BanditInstance::new(parse_biases(p)?)?);
    }
    if let Some(f) = cfg.raw("file") {
        return Ok(BanditInstance::load(f)?);
    }
    Err(CliError::Usage("an instance is required: pass --p or --file".into()))
}

fn check_unit(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} {v} outside (0, 1)")))
    }
}

fn check_trials(t: usize) -> Result<usize, CliError> {
    if t == 0 {
        Err(CliError::Usage("--trials must be positive".into()))
    } else {
        Ok(t)
    }
}

fn describe(instance: &BanditInstance) -> String {
    let g = instance.hardness();
    format!(
        "n={} best={} H={} delta2={} p=[{}]",
        instance.n_real(),
        instance.best(),
        g.h,
        g.delta2,
        instance.biases().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
    )
}

fn write_transcript(out: &mut dyn Write, r: &BaiResult) -> std::io::Result<()> {
    for rec in &r.transcript {
        writeln!(
            out,
            "  round {} delta={:.3e} I1=[{:.6}, {:.6}] I2=[{:.6}, {:.6}] r1=({:.4}, {:.4}) r2=({:.4}, {:.4}) B1=({}, {}) B2=({}, {})",
            rec.round,
            rec.delta,
            rec.i1.lo,
            rec.i1.hi,
            rec.i2.lo,
            rec.i2.hi,
            rec.shrinks[0].r[0],
            rec.shrinks[0].r[1],
            rec.shrinks[1].r[0],
            rec.shrinks[1].r[1],
            rec.shrinks[0].b[0] as u8,
            rec.shrinks[0].b[1] as u8,
            rec.shrinks[1].b[0] as u8,
            rec.shrinks[1].b[1] as u8,
        )?;
    }
    if let Some((l2, l1)) = r.thresholds {
        writeln!(out, "  final thresholds l2={l2:.6} l1={l1:.6}")?;
    }
    Ok(())
}

/// Prints the empirical rate against `target − 3σ` and returns the exit code.
fn rate_verdict(out: &mut dyn Write, label: &str, hits: usize, trials: usize, target: f64) -> std::io::Result<u8> {
    let rate = hits as f64 / trials as f64;
    let floor = target - 3.0 * binomial_sigma(target, trials);
    let (lo, hi) = wilson_interval(hits, trials, 3.0);
    let ok = rate >= floor;
    writeln!(
        out,
        "{label}: {hits}/{trials} = {rate:.4} (3-sigma CI [{lo:.4}, {hi:.4}]), required >= {floor:.4}: {}",
        if ok { "PASS" } else { "FAIL" }
    )?;
    Ok(if ok { 0 } else { 1 })
}

fn monte_carlo(args: &RunArgs, out: &mut dyn Write, pac_eps: Option<f64>) -> Result<u8, CliError> {
    let cfg = config_of(&args.instance.config)?;
    let instance = load_instance(&args.instance, &cfg)?;
    let delta = check_unit("delta", cfg.pick(args.delta, "delta", 0.05)?)?;
    let trials = check_trials(cfg.pick(args.trials, "trials", 100)?)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let config = BaiConfig::default();
    writeln!(out, "instance: {}", describe(&instance))?;
    let results: Vec<BaiResult> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, domain::QUANTUM, t);
            match pac_eps {
                Some(eps) => pac_arm(&instance, eps, delta, &config, &mut rng),
                None => best_arm(&instance, delta, &config, &mut rng),
            }
        })
        .collect::<Result<_, qbai::Error>>()?;
    let mut hits = 0;
    let mut cost = 0.0;
    let mut calls = 0u64;
    for (t, r) in results.iter().enumerate() {
        let ok = match pac_eps {
            Some(eps) => instance.is_eps_optimal(r.arm, eps),
            None => r.arm == instance.best(),
        };
        hits += ok as usize;
        cost += r.ledger.modeled_cost;
        calls += r.ledger.oracle_calls;
        writeln!(
            out,
            "trial {t}: arm {} {} rounds={} modeled_cost={:.6e} raw_oracle_calls={}",
            r.arm,
            if ok { "ok" } else { "WRONG" },
            r.rounds(),
            r.ledger.modeled_cost,
            r.ledger.oracle_calls
        )?;
        if trials == 1 {
            write_transcript(out, r)?;
        }
    }
    writeln!(
        out,
        "mean modeled cost {:.6e}, mean raw oracle calls {:.1}",
        cost / trials as f64,
        calls as f64 / trials as f64
    )?;
    let label = if pac_eps.is_some() { "eps-optimal rate" } else { "success rate" };
    Ok(rate_verdict(out, label, hits, trials, 1.0 - delta)?)
}

pub fn cmd_bestarm(args: &RunArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    monte_carlo(args, out, None)
}

pub fn cmd_pac(args: &RunArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.instance.config)?;
    let eps = check_unit("eps", cfg.pick(args.eps, "eps", 0.1)?)?;
    monte_carlo(args, out, Some(eps))
}

pub fn cmd_baseline(args: &RunArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.instance.config)?;
    let instance = load_instance(&args.instance, &cfg)?;
    let delta = check_unit("delta", cfg.pick(args.delta, "delta", 0.05)?)?;
    let trials = check_trials(cfg.pick(args.trials, "trials", 100)?)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let gap = cfg.pick(args.gap, "gap", instance.hardness().delta2)?;
    writeln!(out, "instance: {}", describe(&instance))?;
    let runs: Vec<(usize, u64, usize, u64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let se = successive_elimination(&instance, delta, &mut stream(seed, domain::SUCCESSIVE_ELIMINATION, t))?;
            let nv = naive(&instance, gap, delta, &mut stream(seed, domain::NAIVE, t))?;
            Ok((se.arm, se.pulls_total, nv.arm, nv.pulls_total))
        })
        .collect::<Result<_, qbai::Error>>()?;
    let best = instance.best();
    let se_hits = runs.iter().filter(|r| r.0 == best).count();
    let nv_hits = runs.iter().filter(|r| r.2 == best).count();
    let mut se_pulls: Vec<f64> = runs.iter().map(|r| r.1 as f64).collect();
    se_pulls.sort_by(|a, b| a.total_cmp(b));
    writeln!(
        out,
        "successive elimination: median pulls {:.0}, mean {:.1}, predicted {}",
        quantile(&se_pulls, 0.5),
        se_pulls.iter().sum::<f64>() / trials as f64,
        se_predicted_pulls(&instance, delta)
    )?;
    writeln!(out, "uniform sampling: {} pulls per run with known gap {gap}", runs[0].3)?;
    let a = rate_verdict(out, "successive elimination success", se_hits, trials, 1.0 - delta)?;
    let b = rate_verdict(out, "uniform sampling success", nv_hits, trials, 1.0 - delta)?;
    Ok(a.max(b))
}

pub fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.instance.config)?;
    let instance = load_instance(&args.instance, &cfg)?;
    let delta = cfg.pick(args.delta, "delta", 0.05)?;
    let floor = cfg.pick(args.p_floor, "p-floor", bias_floor(&instance))?;
    let b = adversary_bound(&instance, delta, floor)?;
    let h = instance.hardness().h;
    writeln!(out, "instance: {}", describe(&instance))?;
    writeln!(out, "p_floor {floor}, delta {delta}, eta {}", b.eta)?;
    writeln!(out, "intermediate bound {:.6e}", b.intermediate)?;
    writeln!(out, "simplified bound   {:.6e}", b.simplified)?;
    writeln!(out, "H {h:.6e}, sqrt(H) {:.6e}", h.sqrt())?;
    writeln!(
        out,
        "bound / sqrt(H): intermediate {:.6e}, simplified {:.6e}",
        b.intermediate / h.sqrt(),
        b.simplified / h.sqrt()
    )?;
    Ok(0)
}

fn sweep_spec(args: &SweepArgs, cfg: &ConfigFile) -> Result<SweepSpec, CliError> {
    let file = args.file.clone().or_else(|| cfg.raw("file").map(PathBuf::from));
    let source = match file {
        Some(f) => Source::Fixed(BanditInstance::load(f)?),
        None => {
            let name = args.family.clone().or_else(|| cfg.raw("family").map(String::from));
            let mut family: Family = name.as_deref().unwrap_or("uniform-gap").parse()?;
            if let Family::GeometricGap { gamma } = &mut family {
                *gamma = cfg.pick(args.gamma, "gamma", 2.0)?;
            }
            Source::Family(family)
        }
    };
    let list = |key: &str| -> Result<Option<Vec<String>>, CliError> {
        Ok(cfg.raw(key).map(|v| v.split(',').map(|s| s.trim().to_string()).collect()))
    };
    let ns = match &args.ns {
        Some(v) => v.clone(),
        None => match list("ns")? {
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad n '{s}'"))))
                .collect::<Result<_, _>>()?,
            None => vec![2, 4, 8, 16],
        },
    };
    let exps = match &args.gap_exponents {
        Some(v) => v.clone(),
        None => match list("gap-exponents")? {
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad exponent '{s}'"))))
                .collect::<Result<_, _>>()?,
            None => vec![2, 4, 6, 8],
        },
    };
    if ns.is_empty() || exps.is_empty() {
        return Err(CliError::Usage("empty sweep grid".into()));
    }
    Ok(SweepSpec {
        source,
        ns,
        delta2s: exps.iter().map(|&e| 2f64.powi(-e)).collect(),
        delta: check_unit("delta", cfg.pick(args.delta, "delta", 0.1)?)?,
        trials: check_trials(cfg.pick(args.trials, "trials", 2)?)?,
        seed: cfg.pick(args.seed, "seed", 0)?,
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.config)?;
    let spec = sweep_spec(args, &cfg)?;
    if matches!(spec.source, Source::Family(_)) {
        spec.check_span()?;
    }
    let rows = run_sweep(&spec)?;
    let out_path = args.out.clone().or_else(|| cfg.raw("out").map(PathBuf::from));
    let dat_path = args.dat.clone().or_else(|| cfg.raw("dat").map(PathBuf::from));
    // the report goes to stderr when the CSV owns stdout
    let mut stderr = std::io::stderr();
    let report: &mut dyn Write = match &out_path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_csv(&rows, &mut w)?;
            w.flush()?;
            out
        }
        None => {
            write_csv(&rows, &mut *out)?;
            &mut stderr
        }
    };
    if let Some(p) = dat_path {
        let mut w = BufWriter::new(File::create(p)?);
        write_dat(&rows, &mut w)?;
        w.flush()?;
    }
    let f = fit(&rows);
    let successes = rows.iter().filter(|r| r.success).count();
    writeln!(report, "rows {}, quantum successes {successes}", rows.len())?;
    writeln!(report, "log-log slope vs H: modeled quantum cost {:.4}", f.quantum_slope)?;
    writeln!(report, "log-log slope vs H: successive elimination pulls {:.4}", f.se_slope)?;
    writeln!(report, "log-log slope vs H: uniform sampling pulls {:.4}", f.naive_slope)?;
    writeln!(report, "log-log slope vs H: lower bound {:.4}", f.bound_slope)?;
    writeln!(report, "rows with lower bound above modeled cost: {}", f.bound_violations)?;
    Ok(if f.bound_violations == 0 { 0 } else { 1 })
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.config)?;
    let level: Level = match &args.level {
        Some(l) => l.parse()?,
        None => cfg.raw("level").unwrap_or("quick").parse()?,
    };
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let faults = Faults {
        flip_gae_threshold: args.inject_gae_flip,
    };
    let results = run_suites(level, faults, seed);
    for r in &results {
        writeln!(
            out,
            "{:<20} {} checks={} failures={} {}",
            r.suite,
            if r.passed { "PASS" } else { "FAIL" },
            r.checks,
            r.failures,
            r.detail
        )?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite).collect();
    writeln!(out, "{}", serde_json::to_string(&results).expect("plain summary"))?;
    if failed.is_empty() {
        Ok(0)
    } else {
        writeln!(out, "failed suites: {}", failed.join(", "))?;
        Ok(1)
    }
}

/// `Tc(δ)`: the `(1 − δ/2)` quantile of the modeled cost of `best_arm` at
/// confidence `δ/2`, over `runs` calibration runs.
pub fn calibrate_tc(instance: &BanditInstance, deltas: &[f64], runs: usize, seed: u64) -> Result<Vec<TcEntry>, CliError> {
    let config = BaiConfig::default();
    deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let costs: Vec<f64> = (0..runs as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, domain::CALIBRATION, ((k as u64) << 32) | t);
                    best_arm(instance, delta / 2.0, &config, &mut rng).map(|r| r.ledger.modeled_cost)
                })
                .collect::<Result<_, qbai::Error>>()?;
            Ok(TcEntry {
                delta,
                tc: quantile(&costs, 1.0 - delta / 2.0),
            })
        })
        .collect()
}

fn parse_tc(entries: &[String]) -> Result<Vec<TcEntry>, CliError> {
    entries
        .iter()
        .map(|e| {
            let (d, t) = e
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("Tc entry '{e}' is not delta:tc")))?;
            let bad = |_| CliError::Usage(format!("Tc entry '{e}' is not numeric"));
            Ok(TcEntry {
                delta: d.trim().parse().map_err(bad)?,
                tc: t.trim().parse().map_err(bad)?,
            })
        })
        .collect()
}

pub const CALIBRATION_DELTAS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.4];

pub fn cmd_fixedbudget(args: &FixedBudgetArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = config_of(&args.instance.config)?;
    let instance = load_instance(&args.instance, &cfg)?;
    let budget: f64 = match args.budget {
        Some(b) => b,
        None => cfg
            .get("budget")?
            .ok_or_else(|| CliError::Usage("--budget is required".into()))?,
    };
    let trials = check_trials(cfg.pick(args.trials, "trials", 1)?)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let tc_list = match &args.tc {
        Some(v) => Some(v.clone()),
        None => cfg.raw("tc").map(|v| v.split(',').map(String::from).collect()),
    };
    let table = match tc_list {
        Some(v) => parse_tc(&v)?,
        None => {
            let runs = cfg.pick(args.calibration_runs, "calibration-runs", 40)?;
            calibrate_tc(&instance, &CALIBRATION_DELTAS, check_trials(runs)?, seed)?
        }
    };
    writeln!(out, "instance: {}", describe(&instance))?;
    for e in &table {
        writeln!(out, "Tc({}) = {:.6e}", e.delta, e.tc)?;
    }
    let (entry, runs, bound) = plan_fixed_budget(budget, &table)?;
    writeln!(out, "plan: delta* = {}, {runs} capped runs, failure bound {bound:.4e}", entry.delta)?;
    let config = BaiConfig::default();
    let outcomes: Vec<Result<usize, qbai::Error>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, domain::QUANTUM, t);
            fixed_budget(&instance, budget, &table, &config, &mut rng).map(|o| o.arm)
        })
        .collect();
    let mut failures = 0;
    for (t, o) in outcomes.iter().enumerate() {
        match o {
            Ok(arm) => {
                failures += (*arm != instance.best()) as usize;
                if trials <= 20 {
                    writeln!(out, "trial {t}: arm {arm}")?;
                }
            }
            Err(e) => {
                failures += 1;
                if trials <= 20 {
                    writeln!(out, "trial {t}: {e}")?;
                }
            }
        }
    }
    let rate = failures as f64 / trials as f64;
    let allowed = bound + 3.0 * binomial_sigma(bound.min(0.5), trials);
    let ok = rate <= allowed;
    writeln!(
        out,
        "failure rate {failures}/{trials} = {rate:.4}, allowed <= {allowed:.4}: {}",
        if ok { "PASS" } else { "FAIL" }
    )?;
    Ok(if ok { 0 } else { 1 })
}
