//! Command-line surface: simulate, fit, cv, influence, df, bench.

use std::fs;
use std::path::PathBuf;

use casepath_core::diagnostics::influence_graph_qr;
use casepath_core::omega_path::build_omega_path_with;
use casepath_core::{
    brute_force_loo, df_estimate, full_fit_at, kkt_residual, lambda_grid, log_grid, ElbowGramInverse, FitConfig,
    OracleConfig, RidgeHat, Scaling, Side,
};
use casepath_core::{build_lambda_path, cv::rcv_from_predictions, Dataset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bench::{self, BenchConfig, LambdaRange, RECORD_HEADER};
use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv, write_table_file};
use crate::parallel::{par_map, parallel_loo_cv, pool, resolve_threads, THREADS_ENV};
use crate::plot::{LineChart, Marker, Series};
use crate::report::RunReport;
use crate::sim::{simulate, SimMetadata, SimSpec};

/// Relative certificate every fit must meet.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "casepath", version, about = "Case-weight solution paths for ridge-penalized quantile regression")]
pub struct Cli {
    /// Worker threads (default: $CASEPATH_THREADS, then all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a Gaussian linear-model dataset.
    Simulate(SimulateArgs),
    /// Fit at one λ and write coefficients, duals and the KKT certificate.
    Fit(FitArgs),
    /// Exact leave-one-out CV and GACV over a λ grid.
    Cv(CvArgs),
    /// Case influence graphs.
    Influence(InfluenceArgs),
    /// Case-weight degrees of freedom.
    Df(DfArgs),
    /// Runtime and ω-breakpoint benchmarks.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Data source: a CSV file or a simulation spec.
#[derive(Debug, Args, Clone)]
pub struct Input {
    /// CSV with a `y` column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Simulation settings such as `n=50,p=30`.
    #[arg(long)]
    pub simulate: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Input {
    fn load(&self) -> Result<(Dataset, serde_json::Value)> {
        match (&self.data, &self.simulate) {
            (Some(_), Some(_)) => Err(Error::Usage("conflicting input flags: give either --data or --simulate".into())),
            (None, None) => Err(Error::Usage("no input: give --data or --simulate".into())),
            (Some(path), None) => Ok((read_csv(path)?, json!({ "data": path }))),
            (None, Some(spec)) => {
                let spec = SimSpec::parse(spec, self.seed)?;
                Ok((simulate(spec)?.data, json!({ "simulate": spec })))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,
    #[arg(long, requires = "lambda_max")]
    pub lambda_min: Option<f64>,
    #[arg(long, requires = "lambda_min")]
    pub lambda_max: Option<f64>,
    /// Write cv_curve.svg.
    #[arg(long)]
    pub plot: bool,
    /// Cross-check RCV against oracle refits.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Qrrp,
    Ridge,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Model::Qrrp)]
    pub model: Model,
    /// `all` or a comma-separated list of 0-based case indices.
    #[arg(long, default_value = "all")]
    pub cases: String,
    #[arg(long)]
    pub plot: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DfArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Model::Qrrp)]
    pub model: Model,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.9")]
    pub omegas: Vec<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Settings `NxPxTAU` separated by `;`.
    #[arg(long, default_value = "100x50x0.5")]
    pub grid: String,
    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// omega, lambda, refit or both.
    #[arg(long, default_value = "lambda")]
    pub baseline: String,
    /// `lo,hi` or `auto` for the full-data breakpoint range.
    #[arg(long, default_value = "0.01,100")]
    pub lambda_range: String,
    #[arg(long, default_value_t = 3)]
    pub inner: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let (name, out) = match &cli.command {
        Command::Simulate(a) => ("simulate", a.out.clone()),
        Command::Fit(a) => ("fit", a.out.clone()),
        Command::Cv(a) => ("cv", a.out.clone()),
        Command::Influence(a) => ("influence", a.out.clone()),
        Command::Df(a) => ("df", a.out.clone()),
        Command::Bench(a) => ("bench", a.out.clone()),
    };
    let mut report = RunReport::new(name, serde_json::Value::Null);
    let result = fs::create_dir_all(&out).map_err(|e| Error::io(&out, e)).and_then(|()| match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &mut report),
        Command::Fit(a) => cmd_fit(a, &mut report),
        Command::Cv(a) => cmd_cv(a, cli.threads, &mut report),
        Command::Influence(a) => cmd_influence(a, cli.threads, &mut report),
        Command::Df(a) => cmd_df(a, cli.threads, &mut report),
        Command::Bench(a) => cmd_bench(a, &mut report),
    });
    report.finish(&result);
    if out.is_dir() {
        if let Err(e) = report.write(&out) {
            eprintln!("{}", json!({ "error": { "category": e.category(), "message": e.to_string() } }));
        }
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "category": e.category(), "message": e.to_string() } }));
            e.exit_code()
        }
    }
}

fn cmd_simulate(a: &SimulateArgs, report: &mut RunReport) -> Result<()> {
    let spec = SimSpec { n: a.n, p: a.p, seed: a.seed };
    report.config = json!({ "spec": spec });
    let sim = report.time("simulate", || simulate(spec))?;
    let csv = a.out.join("data.csv");
    let meta = a.out.join("data.meta.json");
    report.time("write", || -> Result<()> {
        write_csv(&sim.data, &csv)?;
        SimMetadata::new(spec, &sim).write(&meta)
    })?;
    report.output(&csv);
    report.output(&meta);
    Ok(())
}

fn side_label(s: Side) -> &'static str {
    match s {
        Side::Left => "L",
        Side::Elbow => "E",
        Side::Right => "R",
    }
}

fn cmd_fit(a: &FitArgs, report: &mut RunReport) -> Result<()> {
    report.config = json!({ "input": a.input.data, "simulate": a.input.simulate, "seed": a.input.seed, "tau": a.tau, "lambda": a.lambda });
    let cfg = FitConfig::new(a.tau, a.lambda)?;
    let (data, _) = report.time("load", || a.input.load())?;
    let sol = report.time("fit", || full_fit_at(&data, cfg.tau, cfg.lambda))?;
    let kkt = kkt_residual(&sol, &data, &cfg)? / data.scale();
    let body = json!({
        "tau": cfg.tau,
        "lambda": cfg.lambda,
        "beta0": sol.beta0,
        "beta": sol.beta.as_slice(),
        "theta": sol.theta.as_slice(),
        "residuals": sol.residuals.as_slice(),
        "partition": sol.partition.sides().iter().map(|&s| side_label(s)).collect::<String>(),
        "elbow": sol.partition.elbow(),
        "kkt_certificate": kkt,
    });
    let path = a.out.join("fit.json");
    let text = serde_json::to_string_pretty(&body)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    report.output(&path);
    report.summary = json!({ "kkt_certificate": kkt, "elbow_size": sol.partition.elbow_len() });
    if kkt > CERTIFICATE_TOL {
        return Err(Error::Verification(format!("KKT certificate {kkt:e} exceeds {CERTIFICATE_TOL:e}")));
    }
    Ok(())
}

fn cmd_cv(a: &CvArgs, threads: Option<usize>, report: &mut RunReport) -> Result<()> {
    report.config = json!({
        "input": a.input.data, "simulate": a.input.simulate, "seed": a.input.seed, "tau": a.tau,
        "n_lambda": a.n_lambda, "lambda_min": a.lambda_min, "lambda_max": a.lambda_max, "verify": a.verify,
    });
    FitConfig::new(a.tau, 1.0)?;
    let workers = pool(resolve_threads(threads)?)?;
    let (data, _) = report.time("load", || a.input.load())?;
    let lambdas = report.time("grid", || -> Result<Vec<f64>> {
        Ok(match (a.lambda_min, a.lambda_max) {
            (Some(lo), Some(hi)) => log_grid(lo, hi, a.n_lambda)?,
            _ => lambda_grid(&build_lambda_path(&data, a.tau, 1e-4)?, a.n_lambda)?,
        })
    })?;
    let (curve, extras) = report.time("paths", || parallel_loo_cv(&workers, &data, a.tau, &lambdas))?;
    for (k, g) in curve.gacv.iter().enumerate() {
        if g.is_none() {
            report.warn(format!("GACV undefined at lambda {}: every case is in the elbow", curve.lambdas[k]));
        }
    }
    for (k, &f) in extras.fallbacks.iter().enumerate() {
        if f > 0 {
            report.warn(format!("{f} degenerate omega events recovered by the oracle at lambda {}", curve.lambdas[k]));
        }
    }
    let path = a.out.join("cv_curve.csv");
    report.time("write", || {
        let rows = (0..curve.lambdas.len()).map(|k| {
            vec![curve.lambdas[k].into(), curve.rcv[k].into(), curve.gacv[k].into(), curve.elbow_sizes[k].into()]
        });
        write_table_file(&path, &["lambda", "rcv", "gacv", "elbow_size"], rows)
    })?;
    report.output(&path);
    let (ir, ig) = curve.argmin_indices();
    report.summary = json!({
        "n": data.n(), "p": data.p(), "argmin_rcv": curve.argmin_rcv, "argmin_gacv": curve.argmin_gacv,
        "argmin_rcv_index": ir, "argmin_gacv_index": ig,
        "mean_omega_breakpoints": curve.points.iter().map(|p| p.mean_breakpoints).collect::<Vec<_>>(),
    });
    if a.plot {
        let svg = a.out.join("cv_curve.svg");
        let mut chart = LineChart {
            title: format!("Exact LOO CV and GACV, tau = {}", a.tau),
            x_label: "lambda".into(),
            y_label: "score".into(),
            log_x: true,
            series: vec![
                Series { name: "RCV".into(), points: zip(&curve.lambdas, &curve.rcv), highlight: true },
                Series {
                    name: "GACV".into(),
                    points: curve.lambdas.iter().zip(&curve.gacv).filter_map(|(&l, g)| g.map(|g| (l, g))).collect(),
                    highlight: true,
                },
            ],
            markers: vec![Marker { x: curve.argmin_rcv, label: "argmin RCV".into(), series: 0 }],
        };
        if let Some(g) = curve.argmin_gacv {
            chart.markers.push(Marker { x: g, label: "argmin GACV".into(), series: 1 });
        }
        fs::write(&svg, chart.to_svg()).map_err(|e| Error::io(&svg, e))?;
        report.output(&svg);
    }
    if a.verify {
        if data.n() > bench::REFIT_CAP {
            return Err(Error::Usage(format!("--verify is limited to n <= {}", bench::REFIT_CAP)));
        }
        let worst = report.time("verify", || -> Result<f64> {
            let ocfg = OracleConfig::default();
            let diffs = par_map(&workers, lambdas.len(), |k| {
                let cfg = FitConfig::new(a.tau, curve.lambdas[k])?;
                let brute = brute_force_loo(&data, &cfg, &ocfg)?;
                Ok((rcv_from_predictions(&data, a.tau, &brute) - curve.rcv[k]).abs())
            })?;
            Ok(diffs.into_iter().fold(0.0, f64::max))
        })?;
        report.summary["verify_max_abs_rcv_diff"] = json!(worst);
        if worst > 1e-8 {
            return Err(Error::Verification(format!("path RCV differs from oracle refits by {worst:e}")));
        }
    }
    Ok(())
}

fn zip(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

fn parse_cases(text: &str, n: usize) -> Result<Vec<usize>> {
    if text.trim() == "all" {
        return Ok((0..n).collect());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i: usize = part.parse().map_err(|_| Error::Usage(format!("bad case index {part:?}")))?;
        if i >= n {
            return Err(casepath_core::Error::InvalidInput(format!("case {i} out of range for n = {n}")).into());
        }
        out.push(i);
    }
    if out.is_empty() {
        return Err(Error::Usage("empty case list".into()));
    }
    Ok(out)
}

/// Knots plus a uniform grid of 101 points, from 1 down to 0.
fn omega_samples(knots: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).chain(knots.iter().copied()).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w.dedup();
    w
}

fn cmd_influence(a: &InfluenceArgs, threads: Option<usize>, report: &mut RunReport) -> Result<()> {
    report.config = json!({
        "input": a.input.data, "simulate": a.input.simulate, "seed": a.input.seed, "tau": a.tau,
        "lambda": a.lambda, "model": format!("{:?}", a.model).to_lowercase(), "cases": a.cases,
    });
    let cfg = FitConfig::new(a.tau, a.lambda)?;
    let workers = pool(resolve_threads(threads)?)?;
    let (data, _) = report.time("load", || a.input.load())?;
    let cases = parse_cases(&a.cases, data.n())?;
    let (curves, residuals): (Vec<Vec<(f64, f64)>>, Vec<f64>) = match a.model {
        Model::Qrrp => {
            let full = report.time("fit", || full_fit_at(&data, cfg.tau, cfg.lambda))?;
            let gram = ElbowGramInverse::for_elbow(&data, &full.partition.elbow())?;
            let (curves, fallbacks) = report.time("paths", || -> Result<(Vec<_>, usize)> {
                let out = par_map(&workers, cases.len(), |k| {
                    let path = build_omega_path_with(&data, &cfg, cases[k], &full, gram.clone())?;
                    let g = influence_graph_qr(&path, &data, &cfg)?;
                    Ok((
                        omega_samples(&g.knots).into_iter().map(|w| (w, g.eval(w))).collect::<Vec<_>>(),
                        path.fallbacks,
                    ))
                })?;
                let f = out.iter().map(|o| o.1).sum();
                Ok((out.into_iter().map(|o| o.0).collect(), f))
            })?;
            if fallbacks > 0 {
                report.warn(format!("{fallbacks} degenerate omega events recovered by the oracle"));
            }
            (curves, cases.iter().map(|&i| full.residuals[i]).collect())
        }
        Model::Ridge => {
            let hat = report.time("fit", || RidgeHat::new(&data, cfg.lambda))?;
            let curves = cases
                .iter()
                .map(|&i| {
                    let inf = hat.influence(i);
                    omega_samples(&[]).into_iter().map(|w| (w, inf.eval(w, Scaling::Rescaled))).collect()
                })
                .collect();
            (curves, cases.iter().map(|&i| hat.residuals[i]).collect())
        }
    };
    let path = a.out.join("influence.csv");
    report.time("write", || {
        let rows = cases
            .iter()
            .zip(&curves)
            .flat_map(|(&i, c)| c.iter().map(move |&(w, d)| vec![i.into(), w.into(), d.into()]));
        write_table_file(&path, &["case", "omega", "d_tilde"], rows)
    })?;
    report.output(&path);
    let hi = argmax(&residuals, |r| r);
    let lo = argmax(&residuals, |r| -r);
    report.summary = json!({
        "cases": cases.len(),
        "largest_residual_case": cases[hi],
        "smallest_residual_case": cases[lo],
        "max_d_tilde_at_zero": curves.iter().map(|c| c.last().map_or(0.0, |p| p.1)).fold(0.0, f64::max),
    });
    if a.plot {
        let svg = a.out.join("influence.svg");
        let chart = LineChart {
            title: format!("Case influence graphs ({})", format!("{:?}", a.model).to_lowercase()),
            x_label: "omega".into(),
            y_label: "D tilde".into(),
            log_x: false,
            series: cases
                .iter()
                .zip(&curves)
                .enumerate()
                .map(|(k, (&i, c))| Series {
                    name: format!("case {i}"),
                    points: c.clone(),
                    highlight: k == hi || k == lo,
                })
                .collect(),
            markers: vec![],
        };
        fs::write(&svg, chart.to_svg()).map_err(|e| Error::io(&svg, e))?;
        report.output(&svg);
    }
    Ok(())
}

fn argmax(v: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if key(x) > key(v[best]) {
            best = k;
        }
    }
    best
}

fn cmd_df(a: &DfArgs, threads: Option<usize>, report: &mut RunReport) -> Result<()> {
    report.config = json!({
        "input": a.input.data, "simulate": a.input.simulate, "seed": a.input.seed, "tau": a.tau,
        "lambda": a.lambda, "model": format!("{:?}", a.model).to_lowercase(), "omegas": a.omegas,
    });
    let cfg = FitConfig::new(a.tau, a.lambda)?;
    if a.omegas.is_empty() || a.omegas.iter().any(|w| !(0.0..1.0).contains(w)) {
        return Err(Error::Usage("--omegas must lie in [0, 1)".into()));
    }
    let workers = pool(resolve_threads(threads)?)?;
    let (data, _) = report.time("load", || a.input.load())?;
    let estimates = match a.model {
        Model::Qrrp => {
            let full = report.time("fit", || full_fit_at(&data, cfg.tau, cfg.lambda))?;
            let gram = ElbowGramInverse::for_elbow(&data, &full.partition.elbow())?;
            let full_fitted: Vec<f64> = (0..data.n()).map(|i| full.fitted(&data, i)).collect();
            let per_case = report.time("paths", || {
                par_map(&workers, data.n(), |i| {
                    let path = build_omega_path_with(&data, &cfg, i, &full, gram.clone())?;
                    a.omegas.iter().map(|&w| Ok(path.eval_at(w)?.fitted(&data, i))).collect::<Result<Vec<f64>>>()
                })
            })?;
            a.omegas
                .iter()
                .enumerate()
                .map(|(k, &w)| {
                    let case: Vec<f64> = per_case.iter().map(|v| v[k]).collect();
                    Ok(df_estimate(&data, &case, &full_fitted, w)?)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Model::Ridge => {
            let hat = RidgeHat::new(&data, cfg.lambda)?;
            report.summary = json!({ "trace_hat": hat.trace() });
            a.omegas.iter().map(|&w| Ok(casepath_core::ridge_df(&data, cfg.lambda, w)?)).collect::<Result<Vec<_>>>()?
        }
    };
    for e in &estimates {
        if !e.excluded.is_empty() {
            report.warn(format!(
                "omega {}: {} summands excluded (vanishing denominator): {:?}",
                e.omega,
                e.excluded.len(),
                e.excluded
            ));
        }
    }
    let path = a.out.join("df.csv");
    write_table_file(
        &path,
        &["omega", "df", "excluded"],
        estimates.iter().map(|e| vec![e.omega.into(), e.value.into(), e.excluded.len().into()]),
    )?;
    report.output(&path);
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    if report.summary.is_null() {
        report.summary = json!({});
    }
    report.summary["df"] = json!(values);
    Ok(())
}

fn cmd_bench(a: &BenchArgs, report: &mut RunReport) -> Result<()> {
    let range = if a.lambda_range.trim() == "auto" {
        LambdaRange::Breakpoints
    } else {
        let (lo, hi) = a
            .lambda_range
            .split_once(',')
            .ok_or_else(|| Error::Usage(format!("--lambda-range must be lo,hi or auto, got {:?}", a.lambda_range)))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad lambda bound {s:?}")));
        LambdaRange::Fixed { lo: num(lo)?, hi: num(hi)? }
    };
    let cfg = BenchConfig {
        settings: bench::parse_grid(&a.grid)?,
        n_lambda: a.n_lambda,
        replicates: a.replicates,
        baseline: a.baseline.parse()?,
        seed: a.seed,
        range,
        inner: a.inner,
    };
    report.config = serde_json::to_value(&cfg)?;
    cfg.validate()?;
    let mut records = Vec::new();
    for &s in &cfg.settings {
        for r in 0..cfg.replicates {
            let rec = report.time("bench", || bench::run_replicate(&cfg, s, r))?;
            log::info!("{}x{}x{} replicate {r}: {:.3} breakpoints", s.n, s.p, s.tau, rec.mean_breakpoints);
            if rec.fallbacks > 0 {
                report.warn(format!("{}x{}x{} replicate {r}: {} oracle recoveries", s.n, s.p, s.tau, rec.fallbacks));
            }
            records.push(rec);
        }
    }
    let path = a.out.join("bench.csv");
    write_table_file(&path, &RECORD_HEADER, records.iter().map(|r| r.cells()))?;
    report.output(&path);
    let summary = bench::summarize(&records);
    let spath = a.out.join("bench_summary.csv");
    write_table_file(
        &spath,
        &[
            "n",
            "p",
            "tau",
            "replicates",
            "mean_omega_breakpoints",
            "se_omega_breakpoints",
            "omega_sec_per_case",
            "omega_sec_se",
            "lambda_path_sec_per_case",
            "refit_sec_per_case",
        ],
        summary.iter().map(|s| {
            vec![
                s.n.into(),
                s.p.into(),
                s.tau.into(),
                s.replicates.into(),
                s.mean_breakpoints.into(),
                s.se_breakpoints.into(),
                s.omega_per_case.into(),
                s.omega_se.into(),
                s.lambda_per_case.into(),
                s.refit_per_case.into(),
            ]
        }),
    )?;
    report.output(&spath);
    report.summary = serde_json::to_value(&summary)?;
    Ok(())
}
