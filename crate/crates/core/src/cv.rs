//! Exact leave-one-out CV through ω paths, GACV, and the anatomy of flipped cases.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lambda_path::{build_lambda_path, full_fit_at};
use crate::linalg::ElbowGramInverse;
use crate::model::{check_loss, Dataset, FitConfig, QuantileSolution, ELBOW_TOL};
use crate::omega_path::{omega_terminal, OmegaOutcome};

/// Per-λ ingredients shared by all ω paths at that λ.
#[derive(Debug, Clone)]
pub struct LooContext<'a> {
    pub data: &'a Dataset,
    pub cfg: FitConfig,
    pub full: QuantileSolution,
    gram: ElbowGramInverse,
}

impl<'a> LooContext<'a> {
    pub fn new(data: &'a Dataset, cfg: FitConfig, full: QuantileSolution) -> Result<Self> {
        let gram = ElbowGramInverse::for_elbow(data, &full.partition.elbow())?;
        Ok(LooContext { data, cfg, full, gram })
    }

    /// Walks the ω path of case `i` to its terminal solution.
    pub fn case(&self, i: usize) -> Result<OmegaOutcome> {
        omega_terminal(self.data, &self.cfg, i, &self.full, self.gram.clone())
    }

    /// `f̂^{[-i]}(xᵢ)` from a walked path.
    pub fn prediction(&self, i: usize, out: &OmegaOutcome) -> f64 {
        out.terminal.fitted(self.data, i)
    }

    pub fn elbow_size(&self) -> usize {
        self.gram.len()
    }

    /// `Σ ρ_τ(rᵢ) / (n − |E|)`, undefined when every case is in the elbow.
    pub fn gacv(&self) -> Option<f64> {
        gacv(self.data, self.cfg.tau, &self.full)
    }
}

/// GACV score of a full-data fit.
pub fn gacv(data: &Dataset, tau: f64, full: &QuantileSolution) -> Option<f64> {
    let n = data.n();
    let e = full.partition.elbow_len();
    if e >= n {
        return None;
    }
    let loss: f64 = full.residuals.iter().map(|&r| check_loss(r, tau)).sum();
    Some(loss / (n - e) as f64)
}

/// Mean check loss of held-out residuals.
pub fn rcv_from_predictions(data: &Dataset, tau: f64, predictions: &[f64]) -> f64 {
    let y = data.y();
    let s: f64 = predictions.iter().enumerate().map(|(i, &f)| check_loss(y[i] - f, tau)).sum();
    s / data.n() as f64
}

/// Scores at one λ.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPoint {
    pub lambda: f64,
    pub rcv: f64,
    pub gacv: Option<f64>,
    pub elbow_size: usize,
    /// Held-out predictions in case order.
    pub predictions: Vec<f64>,
    /// Mean ω breakpoints strictly inside `(0, 1)` per case.
    pub mean_breakpoints: f64,
}

/// Scores over a λ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    pub rcv: Vec<f64>,
    pub gacv: Vec<Option<f64>>,
    pub elbow_sizes: Vec<usize>,
    pub argmin_rcv: f64,
    /// `None` when GACV is undefined on the whole grid.
    pub argmin_gacv: Option<f64>,
    pub points: Vec<CvPoint>,
}

impl CvCurve {
    pub fn from_points(points: Vec<CvPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty lambda grid".into()));
        }
        let lambdas: Vec<f64> = points.iter().map(|p| p.lambda).collect();
        let rcv: Vec<f64> = points.iter().map(|p| p.rcv).collect();
        let gacv: Vec<Option<f64>> = points.iter().map(|p| p.gacv).collect();
        let elbow_sizes = points.iter().map(|p| p.elbow_size).collect();
        let argmin_rcv = lambdas[argmin(rcv.iter().map(|&v| Some(v))).unwrap_or(0)];
        let argmin_gacv = argmin(gacv.iter().copied()).map(|k| lambdas[k]);
        Ok(CvCurve { lambdas, rcv, gacv, elbow_sizes, argmin_rcv, argmin_gacv, points })
    }

    /// Grid positions of the two minimizers.
    pub fn argmin_indices(&self) -> (usize, Option<usize>) {
        (argmin(self.rcv.iter().map(|&v| Some(v))).unwrap_or(0), argmin(self.gacv.iter().copied()))
    }
}

/// First index of the smallest defined value.
fn argmin(values: impl Iterator<Item = Option<f64>>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}

/// Exact LOO scores at one λ from its full-data fit.
pub fn cv_point(data: &Dataset, tau: f64, lambda: f64, full: QuantileSolution) -> Result<CvPoint> {
    let cfg = FitConfig::new(tau, lambda)?;
    let ctx = LooContext::new(data, cfg, full)?;
    let mut predictions = Vec::with_capacity(data.n());
    let mut bps = 0usize;
    for i in 0..data.n() {
        let out = ctx.case(i)?;
        bps += out.interior_breakpoints;
        predictions.push(ctx.prediction(i, &out));
    }
    Ok(point_from_predictions(&ctx, predictions, bps))
}

/// Assembles a [`CvPoint`] from per-case results.
pub fn point_from_predictions(ctx: &LooContext<'_>, predictions: Vec<f64>, total_breakpoints: usize) -> CvPoint {
    let data = ctx.data;
    CvPoint {
        lambda: ctx.cfg.lambda,
        rcv: rcv_from_predictions(data, ctx.cfg.tau, &predictions),
        gacv: ctx.gacv(),
        elbow_size: ctx.elbow_size(),
        predictions,
        mean_breakpoints: total_breakpoints as f64 / data.n() as f64,
    }
}

/// Exact LOO CV over `lambdas` (any order, all positive), sequentially.
pub fn exact_loo_cv(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<CvCurve> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput("lambdas must be positive and finite".into()));
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let path = build_lambda_path(data, tau, lo)?;
    let points = lambdas.iter().map(|&l| cv_point(data, tau, l, path.eval(data, l)?)).collect::<Result<Vec<_>>>()?;
    CvCurve::from_points(points)
}

/// Row of the flipped-case table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `r_loo > 0`, `r ≤ −δ`.
    A,
    /// `r_loo > 0`, `−δ < r ≤ 0`.
    B,
    /// `r_loo < 0`, `r ≥ δ`.
    C,
    /// `r_loo < 0`, `0 ≤ r < δ`.
    D,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::A => "a",
            Scenario::B => "b",
            Scenario::C => "c",
            Scenario::D => "d",
        }
    }
}

/// A case whose full-data and held-out residuals disagree in sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipRecord {
    pub case: usize,
    pub r_full: f64,
    pub r_loo: f64,
    pub scenario: Scenario,
    pub approx_error: f64,
    pub in_elbow: bool,
}

/// Derivative of the smoothed check loss `(τ𝕀(r>0) + (1−τ)𝕀(r<0))·r²/δ` inside `(−δ, δ)`.
pub fn smoothed_check_derivative(r: f64, tau: f64, delta: f64) -> f64 {
    if r >= delta {
        tau
    } else if r <= -delta {
        tau - 1.0
    } else if r > 0.0 {
        2.0 * tau * r / delta
    } else if r < 0.0 {
        2.0 * (1.0 - tau) * r / delta
    } else {
        0.0
    }
}

/// Table row for a pair of residuals, `None` if not flipped.
pub fn classify_flip(r_full: f64, r_loo: f64, delta: f64) -> Option<Scenario> {
    if r_loo > 0.0 {
        if r_full <= -delta {
            Some(Scenario::A)
        } else if r_full <= 0.0 {
            Some(Scenario::B)
        } else {
            None
        }
    } else if r_loo < 0.0 {
        if r_full >= delta {
            Some(Scenario::C)
        } else if r_full >= 0.0 {
            Some(Scenario::D)
        } else {
            None
        }
    } else {
        None
    }
}

/// `ρ'_{τ,δ}(r)(r_loo − r) − [ρ_τ(r_loo) − ρ_τ(r)]`.
pub fn approximation_error(r_full: f64, r_loo: f64, tau: f64, delta: f64) -> f64 {
    smoothed_check_derivative(r_full, tau, delta) * (r_loo - r_full)
        - (check_loss(r_loo, tau) - check_loss(r_full, tau))
}

/// Flipped cases at one λ with the default width `δ = 1e−4·max(1, ‖y‖∞)`.
pub fn flip_analysis(data: &Dataset, tau: f64, lambda: f64) -> Result<Vec<FlipRecord>> {
    flip_analysis_with(data, tau, lambda, 1e-4 * data.scale())
}

pub fn flip_analysis_with(data: &Dataset, tau: f64, lambda: f64, delta: f64) -> Result<Vec<FlipRecord>> {
    let full = full_fit_at(data, tau, lambda)?;
    let ctx = LooContext::new(data, FitConfig::new(tau, lambda)?, full)?;
    let mut preds = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let out = ctx.case(i)?;
        preds.push(ctx.prediction(i, &out));
    }
    Ok(flips_from_predictions(data, tau, &ctx.full, &preds, delta))
}

/// Flip records from a full fit and held-out predictions.
pub fn flips_from_predictions(
    data: &Dataset,
    tau: f64,
    full: &QuantileSolution,
    predictions: &[f64],
    delta: f64,
) -> Vec<FlipRecord> {
    let cut = ELBOW_TOL * data.scale();
    let mut out = Vec::new();
    for (i, &pred) in predictions.iter().enumerate() {
        let raw = full.residuals[i];
        let in_elbow = full.partition.side(i) == crate::model::Side::Elbow;
        let r_full = if raw.abs() <= cut { 0.0 } else { raw };
        let r_loo = data.y()[i] - pred;
        if let Some(scenario) = classify_flip(r_full, r_loo, delta) {
            if r_full == 0.0 && !in_elbow {
                log::warn!("flipped case {i} has a zero residual outside the elbow");
            }
            out.push(FlipRecord {
                case: i,
                r_full,
                r_loo,
                scenario,
                approx_error: approximation_error(r_full, r_loo, tau, delta),
                in_elbow,
            });
        }
    }
    out
}
