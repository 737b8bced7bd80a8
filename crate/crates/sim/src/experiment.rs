//! Seeded Monte-Carlo runners for the convergence and sweep experiments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bdirs_core::{
    make_channels, noise_power, run_joint, sample_geometry, LinkObjective64, RunRecord64, Scenario, Variant,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::output::{ensure_writable, write_atomic};

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_JSON: &str = "convergence_summary.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep_summary.json";

/// Relative gains quoted for the reference-scale system, kept next to the
/// measured ones for comparison.
pub const REFERENCE_POWER_GAIN: f64 = 0.20;
pub const REFERENCE_ANTENNA_GAIN: f64 = 0.15;

pub fn build_link(scenario: &Scenario, seed: u64) -> bdirs_core::Result<LinkObjective64> {
    let params = sample_geometry::<f64>(seed, scenario);
    let channels = make_channels(&params)?;
    LinkObjective64::new(
        channels,
        noise_power(scenario.noise_dbm_per_hz, scenario.bandwidth_hz),
        scenario.bandwidth_hz,
    )
}

fn solve(cfg: &ExperimentConfig, scenario: &Scenario, p_dbm: f64, seed: u64, variant: Variant) -> Result<RunRecord64> {
    let wrap = |source| SimError::Solver { seed, variant, source };
    let link = build_link(scenario, seed).map_err(wrap)?;
    run_joint(&link, &cfg.joint(p_dbm)?, variant, seed).map_err(wrap)
}

fn sorted_variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let mut v = cfg.variants.clone();
    v.sort();
    v
}

fn sorted_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    let mut s = cfg.seeds.clone();
    s.sort_unstable();
    s
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub runs: usize,
    pub mean_final_se: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub n_bs: usize,
    pub m_irs: usize,
    pub p_dbm: f64,
    pub seeds: usize,
    pub variants: BTreeMap<Variant, VariantSummary>,
}

/// One record per (seed, variant), ordered by seed, then variant.
#[derive(Debug, Clone)]
pub struct ConvergenceResults {
    pub config_hash: String,
    pub scenario: Scenario,
    pub p_dbm: f64,
    pub records: Vec<RunRecord64>,
}

pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceResults> {
    cfg.validate()?;
    let jobs: Vec<(u64, Variant)> = sorted_seeds(cfg)
        .into_iter()
        .flat_map(|s| sorted_variants(cfg).into_iter().map(move |v| (s, v)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(seed, variant)| solve(cfg, &cfg.scenario, cfg.converge.p_dbm, seed, variant))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceResults {
        config_hash: cfg.hash(),
        scenario: cfg.scenario.clone(),
        p_dbm: cfg.converge.p_dbm,
        records,
    })
}

impl ConvergenceResults {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,variant,outer_iter,se_bits_per_hz\n");
        for r in &self.records {
            for &(iter, se) in &r.trace {
                writeln!(out, "{},{},{},{}", r.seed, r.variant, iter, se).unwrap();
            }
        }
        out
    }

    pub fn summary(&self) -> ConvergenceSummary {
        let mut variants = BTreeMap::new();
        let kinds: std::collections::BTreeSet<Variant> = self.records.iter().map(|r| r.variant).collect();
        for v in kinds {
            let rs: Vec<&RunRecord64> = self.records.iter().filter(|r| r.variant == v).collect();
            variants.insert(
                v,
                VariantSummary {
                    runs: rs.len(),
                    mean_final_se: mean(rs.iter().map(|r| r.final_se())),
                    mean_iterations: mean(rs.iter().map(|r| r.iters_used as f64)),
                    converged_fraction: mean(rs.iter().map(|r| if r.converged { 1.0 } else { 0.0 })),
                },
            );
        }
        let seeds: std::collections::BTreeSet<u64> = self.records.iter().map(|r| r.seed).collect();
        ConvergenceSummary {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: self.config_hash.clone(),
            n_bs: self.scenario.n_bs,
            m_irs: self.scenario.m_irs,
            p_dbm: self.p_dbm,
            seeds: seeds.len(),
            variants,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let json = serde_json::to_string_pretty(&self.summary()).expect("summary serializes") + "\n";
        Ok(vec![
            write_atomic(dir, CONVERGENCE_CSV, self.to_csv().as_bytes())?,
            write_atomic(dir, CONVERGENCE_JSON, json.as_bytes())?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub p_dbm: f64,
    pub variant: Variant,
    pub seed: u64,
    pub se_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub p_dbm: f64,
    pub variant: Variant,
    pub runs: usize,
    pub mean_se: f64,
}

/// Relative change of the mean SE between two grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gain {
    pub variant: Variant,
    /// The coordinate held fixed: N for power gains, P (dBm) for antenna gains.
    pub at: f64,
    pub from: f64,
    pub to: f64,
    pub relative_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub m_irs: usize,
    pub seeds: usize,
    pub points: Vec<SweepPoint>,
    /// 10 → 20 dBm, per N and variant; empty when either power is absent.
    pub power_gain_10_to_20_dbm: Vec<Gain>,
    /// Smallest → largest N, per power and variant.
    pub antenna_gain_min_to_max_n: Vec<Gain>,
    pub reference_power_gain: f64,
    pub reference_antenna_gain: f64,
}

/// Rows ordered by N, power (as listed), variant, then seed.
#[derive(Debug, Clone)]
pub struct SweepResults {
    pub config_hash: String,
    pub m_irs: usize,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep_experiment(cfg: &ExperimentConfig) -> Result<SweepResults> {
    cfg.validate()?;
    let mut ns = cfg.sweep.n_values.clone();
    ns.sort_unstable();
    let mut ps = cfg.sweep.p_dbm_values.clone();
    ps.sort_by(f64::total_cmp);
    let mut jobs = Vec::new();
    for &n in &ns {
        for &p in &ps {
            for v in sorted_variants(cfg) {
                for s in sorted_seeds(cfg) {
                    jobs.push((n, p, v, s));
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(n, p_dbm, variant, seed)| {
            let rec = solve(cfg, &cfg.scenario.with_n_bs(n), p_dbm, seed, variant)?;
            Ok(SweepRow {
                n,
                p_dbm,
                variant,
                seed,
                se_final: rec.final_se(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResults {
        config_hash: cfg.hash(),
        m_irs: cfg.scenario.m_irs,
        rows,
    })
}

impl SweepResults {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p_dbm,variant,seed,se_final\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.n, r.p_dbm, r.variant, r.seed, r.se_final).unwrap();
        }
        out
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut points: Vec<SweepPoint> = Vec::new();
        for r in &self.rows {
            match points.last_mut() {
                Some(pt) if pt.n == r.n && pt.p_dbm == r.p_dbm && pt.variant == r.variant => {
                    pt.runs += 1;
                    pt.mean_se += r.se_final;
                }
                _ => points.push(SweepPoint {
                    n: r.n,
                    p_dbm: r.p_dbm,
                    variant: r.variant,
                    runs: 1,
                    mean_se: r.se_final,
                }),
            }
        }
        for pt in &mut points {
            pt.mean_se /= pt.runs as f64;
        }
        points
    }

    /// Seed-averaged SE at one grid point.
    pub fn mean_se(&self, n: usize, p_dbm: f64, variant: Variant) -> Option<f64> {
        self.points()
            .into_iter()
            .find(|pt| pt.n == n && pt.p_dbm == p_dbm && pt.variant == variant)
            .map(|pt| pt.mean_se)
    }

    pub fn summary(&self) -> SweepSummary {
        let points = self.points();
        let lookup = |n: usize, p: f64, v: Variant| {
            points
                .iter()
                .find(|pt| pt.n == n && pt.p_dbm == p && pt.variant == v)
                .map(|pt| pt.mean_se)
        };
        let mut ns: Vec<usize> = points.iter().map(|pt| pt.n).collect();
        ns.dedup();
        let mut ps: Vec<f64> = points.iter().map(|pt| pt.p_dbm).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        let variants: std::collections::BTreeSet<Variant> = points.iter().map(|pt| pt.variant).collect();

        let rel = |a: f64, b: f64| (b - a) / a;
        let mut power = Vec::new();
        let mut antenna = Vec::new();
        for &v in &variants {
            for &n in &ns {
                if let (Some(a), Some(b)) = (lookup(n, 10.0, v), lookup(n, 20.0, v)) {
                    power.push(Gain {
                        variant: v,
                        at: n as f64,
                        from: 10.0,
                        to: 20.0,
                        relative_gain: rel(a, b),
                    });
                }
            }
            if let (Some(&lo), Some(&hi)) = (ns.first(), ns.last()) {
                if lo != hi {
                    for &p in &ps {
                        if let (Some(a), Some(b)) = (lookup(lo, p, v), lookup(hi, p, v)) {
                            antenna.push(Gain {
                                variant: v,
                                at: p,
                                from: lo as f64,
                                to: hi as f64,
                                relative_gain: rel(a, b),
                            });
                        }
                    }
                }
            }
        }
        let seeds: std::collections::BTreeSet<u64> = self.rows.iter().map(|r| r.seed).collect();
        SweepSummary {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: self.config_hash.clone(),
            m_irs: self.m_irs,
            seeds: seeds.len(),
            points,
            power_gain_10_to_20_dbm: power,
            antenna_gain_min_to_max_n: antenna,
            reference_power_gain: REFERENCE_POWER_GAIN,
            reference_antenna_gain: REFERENCE_ANTENNA_GAIN,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let json = serde_json::to_string_pretty(&self.summary()).expect("summary serializes") + "\n";
        Ok(vec![
            write_atomic(dir, SWEEP_CSV, self.to_csv().as_bytes())?,
            write_atomic(dir, SWEEP_JSON, json.as_bytes())?,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Converge,
    Sweep,
}

/// Validates, checks the output directory, runs, and writes both files.
pub fn execute(experiment: Experiment, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_writable(out_dir)?;
    match experiment {
        Experiment::Converge => run_convergence_experiment(cfg)?.write(out_dir),
        Experiment::Sweep => run_sweep_experiment(cfg)?.write(out_dir),
    }
}
