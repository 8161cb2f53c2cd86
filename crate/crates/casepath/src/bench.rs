//! Runtime-per-case and ω-breakpoint benchmarks.

use std::str::FromStr;
use std::time::Instant;

use casepath_core::cv::LooContext;
use casepath_core::lambda_path::build_lambda_path;
use casepath_core::{lambda_grid, log_grid, oracle_solve, Dataset, FitConfig, OracleConfig};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::Cell;
use crate::sim::{simulate, SimSpec};

/// Largest `n` accepted for oracle refits.
pub const REFIT_CAP: usize = 200;

/// One `(n, p, τ)` entry of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Setting {
    pub n: usize,
    pub p: usize,
    pub tau: f64,
}

impl FromStr for Setting {
    type Err = Error;

    /// `100x50x0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
        let bad = || Error::Usage(format!("grid entry {s:?} is not NxPxTAU"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Setting {
            n: parts[0].parse().map_err(|_| bad())?,
            p: parts[1].parse().map_err(|_| bad())?,
            tau: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

/// Parses `100x50x0.5;50x300x0.1`.
pub fn parse_grid(text: &str) -> Result<Vec<Setting>> {
    text.split([';', ' ']).filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Comparison strategy besides the ω paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Baseline {
    /// ω paths only.
    Omega,
    /// One λ path per case-deleted dataset plus interpolation.
    Lambda,
    /// Oracle refit per case and grid point.
    Refit,
    /// Both baselines.
    Both,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(Baseline::Omega),
            "lambda" => Ok(Baseline::Lambda),
            "refit" => Ok(Baseline::Refit),
            "both" => Ok(Baseline::Both),
            _ => Err(Error::Usage(format!("unknown baseline {s:?}; use omega, lambda, refit or both"))),
        }
    }
}

impl Baseline {
    fn lambda(self) -> bool {
        matches!(self, Baseline::Lambda | Baseline::Both)
    }

    fn refit(self) -> bool {
        matches!(self, Baseline::Refit | Baseline::Both)
    }
}

/// Where the λ grid comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LambdaRange {
    Fixed {
        lo: f64,
        hi: f64,
    },
    /// Log grid over the full-data λ breakpoints, lower end clamped to `1e-4`.
    Breakpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub settings: Vec<Setting>,
    pub n_lambda: usize,
    pub replicates: usize,
    pub baseline: Baseline,
    pub seed: u64,
    pub range: LambdaRange,
    /// Inner repetitions per timing; the median is reported.
    pub inner: usize,
}

impl BenchConfig {
    /// Rejects infeasible entries with a reason.
    pub fn validate(&self) -> Result<()> {
        if self.n_lambda < 2 || self.replicates == 0 || self.inner == 0 {
            return Err(Error::Usage("need --n-lambda >= 2 and at least one replicate".into()));
        }
        if let LambdaRange::Fixed { lo, hi } = self.range {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Usage(format!("lambda range [{lo}, {hi}] is not a positive interval")));
            }
        }
        for s in &self.settings {
            let reason = if s.n < 3 {
                Some("n must be at least 3")
            } else if s.p < 1 {
                Some("p must be at least 1")
            } else if !(s.tau > 0.0 && s.tau < 1.0) {
                Some("tau must lie in (0, 1)")
            } else if self.baseline.refit() && s.n > REFIT_CAP {
                Some("oracle refits are capped at n = 200")
            } else {
                None
            };
            if let Some(r) = reason {
                return Err(Error::Usage(format!("grid entry {}x{}x{}: {r}", s.n, s.p, s.tau)));
            }
        }
        if self.settings.is_empty() {
            return Err(Error::Usage("empty benchmark grid".into()));
        }
        Ok(())
    }
}

/// Measurements of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub replicate: usize,
    pub seed: u64,
    pub omega_per_case: f64,
    pub lambda_per_case: Option<f64>,
    pub refit_per_case: Option<f64>,
    /// Mean number of ω breakpoints strictly inside `(0, 1)` over all `(λ, i⋆)`.
    pub mean_breakpoints: f64,
    pub fallbacks: usize,
}

pub const RECORD_HEADER: [&str; 10] = [
    "n",
    "p",
    "tau",
    "replicate",
    "seed",
    "omega_sec_per_case",
    "lambda_path_sec_per_case",
    "refit_sec_per_case",
    "mean_omega_breakpoints",
    "fallbacks",
];

impl BenchRecord {
    pub fn cells(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.p.into(),
            self.tau.into(),
            self.replicate.into(),
            Cell::Text(self.seed.to_string()),
            self.omega_per_case.into(),
            self.lambda_per_case.into(),
            self.refit_per_case.into(),
            self.mean_breakpoints.into(),
            self.fallbacks.into(),
        ]
    }
}

/// λ grid of a replicate.
pub fn grid_for(data: &Dataset, tau: f64, n_lambda: usize, range: LambdaRange) -> Result<Vec<f64>> {
    Ok(match range {
        LambdaRange::Fixed { lo, hi } => log_grid(lo, hi, n_lambda)?,
        LambdaRange::Breakpoints => lambda_grid(&build_lambda_path(data, tau, 1e-4)?, n_lambda)?,
    })
}

/// Held-out predictions and ω-path counts for every `(λ, i⋆)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRun {
    pub predictions: Vec<Vec<f64>>,
    pub breakpoints: usize,
    pub fallbacks: usize,
}

/// The ω-path strategy: one λ path for the full data, then `n` ω paths per grid point.
pub fn omega_strategy(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<OmegaRun> {
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let path = build_lambda_path(data, tau, lo)?;
    let mut run = OmegaRun { predictions: Vec::with_capacity(lambdas.len()), breakpoints: 0, fallbacks: 0 };
    for &l in lambdas {
        let ctx = LooContext::new(data, FitConfig::new(tau, l)?, path.eval(data, l)?)?;
        let mut preds = Vec::with_capacity(data.n());
        for i in 0..data.n() {
            let out = ctx.case(i)?;
            run.breakpoints += out.interior_breakpoints;
            run.fallbacks += out.fallbacks;
            preds.push(ctx.prediction(i, &out));
        }
        run.predictions.push(preds);
    }
    Ok(run)
}

/// Mean interior ω breakpoints per `(λ, i⋆)`.
pub fn mean_omega_breakpoints(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<f64> {
    let run = omega_strategy(data, tau, lambdas)?;
    Ok(run.breakpoints as f64 / (lambdas.len() * data.n()) as f64)
}

/// Baseline: a λ path for each case-deleted dataset, interpolated on the grid.
#[allow(clippy::needless_range_loop)]
pub fn lambda_strategy(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = vec![vec![0.0; data.n()]; lambdas.len()];
    for i in 0..data.n() {
        let sub = data.without_case(i)?;
        let path = build_lambda_path(&sub, tau, lo)?;
        for (k, &l) in lambdas.iter().enumerate() {
            out[k][i] = path.eval(&sub, l)?.fitted(data, i);
        }
    }
    Ok(out)
}

/// Baseline: an oracle fit for each case-deleted dataset and grid point.
#[allow(clippy::needless_range_loop)]
pub fn refit_strategy(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let ocfg = OracleConfig::default();
    let mut out = vec![vec![0.0; data.n()]; lambdas.len()];
    for i in 0..data.n() {
        let sub = data.without_case(i)?;
        for (k, &l) in lambdas.iter().enumerate() {
            out[k][i] = oracle_solve(&sub, &FitConfig::new(tau, l)?, 1.0, None, &ocfg)?.fitted(data, i);
        }
    }
    Ok(out)
}

/// Median wall-clock seconds of `reps` runs of `f`.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let v = f()?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(v);
    }
    times.sort_by(f64::total_cmp);
    Ok((times[times.len() / 2], last.expect("at least one repetition")))
}

/// Seed of replicate `r`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

pub fn run_replicate(cfg: &BenchConfig, setting: Setting, replicate: usize) -> Result<BenchRecord> {
    let seed = replicate_seed(cfg.seed, replicate);
    let data = simulate(SimSpec { n: setting.n, p: setting.p, seed })?.data;
    let tau = setting.tau;
    let lambdas = grid_for(&data, tau, cfg.n_lambda, cfg.range)?;
    let n = data.n() as f64;
    let (t_omega, run) = median_time(cfg.inner, || omega_strategy(&data, tau, &lambdas))?;
    let lambda_per_case = if cfg.baseline.lambda() {
        Some(median_time(cfg.inner, || lambda_strategy(&data, tau, &lambdas))?.0 / n)
    } else {
        None
    };
    let refit_per_case = if cfg.baseline.refit() {
        Some(median_time(cfg.inner, || refit_strategy(&data, tau, &lambdas))?.0 / n)
    } else {
        None
    };
    Ok(BenchRecord {
        n: setting.n,
        p: setting.p,
        tau,
        replicate,
        seed,
        omega_per_case: t_omega / n,
        lambda_per_case,
        refit_per_case,
        mean_breakpoints: run.breakpoints as f64 / (lambdas.len() * data.n()) as f64,
        fallbacks: run.fallbacks,
    })
}

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Replicate summary of one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingSummary {
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub replicates: usize,
    pub mean_breakpoints: f64,
    pub se_breakpoints: f64,
    pub omega_per_case: f64,
    pub omega_se: f64,
    pub lambda_per_case: Option<f64>,
    pub refit_per_case: Option<f64>,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SettingSummary> {
    let mut keys: Vec<(usize, usize, f64)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.n, r.p, r.tau)) {
            keys.push((r.n, r.p, r.tau));
        }
    }
    keys.into_iter()
        .map(|(n, p, tau)| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| (r.n, r.p, r.tau) == (n, p, tau)).collect();
            let bp: Vec<f64> = rs.iter().map(|r| r.mean_breakpoints).collect();
            let om: Vec<f64> = rs.iter().map(|r| r.omega_per_case).collect();
            let opt_mean = |f: fn(&BenchRecord) -> Option<f64>| {
                let v: Vec<f64> = rs.iter().filter_map(|r| f(r)).collect();
                (!v.is_empty()).then(|| mean_se(&v).0)
            };
            let (mean_breakpoints, se_breakpoints) = mean_se(&bp);
            let (omega_per_case, omega_se) = mean_se(&om);
            SettingSummary {
                n,
                p,
                tau,
                replicates: rs.len(),
                mean_breakpoints,
                se_breakpoints,
                omega_per_case,
                omega_se,
                lambda_per_case: opt_mean(|r| r.lambda_per_case),
                refit_per_case: opt_mean(|r| r.refit_per_case),
            }
        })
        .collect()
}
