//! Worker pool over `(λ, i⋆)` tasks with results merged by index.

use casepath_core::cv::{point_from_predictions, LooContext};
use casepath_core::lambda_path::build_lambda_path;
use casepath_core::{CvCurve, Dataset, FitConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "CASEPATH_THREADS";

/// Worker count: the flag, else the environment, else the available cores.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return if t == 0 { Err(Error::Usage("--threads must be positive".into())) } else { Ok(t) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} workers: {e}")))
}

/// Runs `f(0..len)` on the pool and returns results in index order.
pub fn par_map<T, F>(pool: &rayon::ThreadPool, len: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    pool.install(|| (0..len).into_par_iter().map(&f).collect())
}

/// Per-λ ω-path statistics beyond the CV curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CvExtras {
    /// Oracle recoveries per grid point.
    pub fallbacks: Vec<usize>,
}

/// Exact LOO CV with one task per `(λ, i⋆)`.
pub fn parallel_loo_cv(
    pool: &rayon::ThreadPool,
    data: &Dataset,
    tau: f64,
    lambdas: &[f64],
) -> Result<(CvCurve, CvExtras)> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Usage("lambdas must be positive and finite".into()));
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let path = build_lambda_path(data, tau, lo)?;
    let contexts: Vec<LooContext<'_>> = lambdas
        .iter()
        .map(|&l| LooContext::new(data, FitConfig::new(tau, l)?, path.eval(data, l)?))
        .collect::<casepath_core::Result<_>>()?;
    let n = data.n();
    let results = par_map(pool, lambdas.len() * n, |t| {
        let (k, i) = (t / n, t % n);
        let ctx = &contexts[k];
        let out = ctx.case(i)?;
        Ok((ctx.prediction(i, &out), out.interior_breakpoints, out.fallbacks))
    })?;
    let mut points = Vec::with_capacity(lambdas.len());
    let mut fallbacks = Vec::with_capacity(lambdas.len());
    for (k, ctx) in contexts.iter().enumerate() {
        let chunk = &results[k * n..(k + 1) * n];
        let preds = chunk.iter().map(|r| r.0).collect();
        let bps = chunk.iter().map(|r| r.1).sum();
        fallbacks.push(chunk.iter().map(|r| r.2).sum());
        points.push(point_from_predictions(ctx, preds, bps));
    }
    Ok((CvCurve::from_points(points)?, CvExtras { fallbacks }))
}
