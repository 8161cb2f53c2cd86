//! Case influence and case-weight degrees of freedom.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::ElbowGramInverse;
use crate::model::{Dataset, FitConfig};
use crate::omega_path::{omega_terminal, OmegaPath};

/// Piecewise-quadratic `D̃(ω) = ‖r_ω − r_1‖²/n` along an ω path.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph {
    pub case: usize,
    pub n: usize,
    /// Segment ends from 1 down to 0.
    pub knots: Vec<f64>,
    /// `D̃` at `knots`.
    pub values: Vec<f64>,
    /// Residual slope `h_m/λ` on each segment.
    pub slope_table: Vec<DVector<f64>>,
    /// `r_ω − r_1` at the top of each segment.
    offsets: Vec<DVector<f64>>,
    end: DVector<f64>,
}

impl InfluenceGraph {
    /// `D̃(ω)`.
    pub fn eval(&self, omega: f64) -> f64 {
        if omega >= 1.0 {
            return 0.0;
        }
        if omega <= 0.0 {
            return self.end.norm_squared() / self.n as f64;
        }
        let m = (0..self.slope_table.len())
            .find(|&m| omega > self.knots[m + 1] && omega <= self.knots[m])
            .unwrap_or(self.slope_table.len() - 1);
        let d = &self.offsets[m] + &self.slope_table[m] * (omega - self.knots[m]);
        d.norm_squared() / self.n as f64
    }
}

/// Influence graph of the starred case of `path`.
pub fn influence_graph_qr(path: &OmegaPath, data: &Dataset, cfg: &FitConfig) -> Result<InfluenceGraph> {
    if path.segments.is_empty() {
        return Err(Error::InvalidInput("path has no recorded segments".into()));
    }
    let n = data.n();
    let lam = cfg.lambda;
    let mut knots = Vec::with_capacity(path.segments.len() + 1);
    let mut slope_table = Vec::with_capacity(path.segments.len());
    let mut offsets = Vec::with_capacity(path.segments.len());
    let mut acc = DVector::zeros(n);
    for seg in &path.segments {
        acc.add_scalar_mut(-seg.entry_shift);
        knots.push(seg.omega_hi);
        offsets.push(acc.clone());
        let h = &seg.h / lam;
        acc.axpy(seg.omega_lo - seg.omega_hi, &h, 1.0);
        slope_table.push(h);
    }
    knots.push(path.segments.last().map_or(0.0, |s| s.omega_lo));
    let mut g = InfluenceGraph { case: path.istar, n, knots, values: Vec::new(), slope_table, offsets, end: acc };
    g.values = g.knots.iter().map(|&w| g.eval(w)).collect();
    Ok(g)
}

/// `(1/n)‖r_ω − r_1‖²` from interpolated path residuals.
pub fn influence_from_residuals(path: &OmegaPath, omega: f64) -> Result<f64> {
    let sol = path.eval_at(omega)?;
    let d = &sol.residuals - &path.start.residuals;
    Ok(d.norm_squared() / d.len() as f64)
}

/// Ridge fit with its hat matrix, for `Σ(yᵢ − β₀ − xᵢᵀβ)² + λ‖β‖²`.
#[derive(Debug, Clone)]
pub struct RidgeHat {
    pub lambda: f64,
    /// `(X̃ᵀX̃ + λĨ)⁻¹`.
    pub dinv: DMatrix<f64>,
    /// `H = X̃(X̃ᵀX̃ + λĨ)⁻¹X̃ᵀ`.
    pub hat: DMatrix<f64>,
    /// `(β₀, β)`.
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    xtilde: DMatrix<f64>,
}

impl RidgeHat {
    pub fn new(data: &Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("ridge penalty must be nonnegative, got {lambda}")));
        }
        let xt = data.xtilde();
        let mut d = xt.tr_mul(&xt);
        for j in 1..d.nrows() {
            d[(j, j)] += lambda;
        }
        let dinv = crate::linalg::spd_inverse(&d).ok_or(Error::SingularElbow { indices: Vec::new() })?;
        let hat = &xt * &dinv * xt.transpose();
        let coef = &dinv * xt.tr_mul(data.y());
        let residuals = data.y() - &xt * &coef;
        Ok(RidgeHat { lambda, dinv, hat, coef, residuals, xtilde: xt })
    }

    pub fn leverage(&self, i: usize) -> f64 {
        self.hat[(i, i)]
    }

    pub fn trace(&self) -> f64 {
        self.hat.trace()
    }

    /// Fit with weight `omega` on case `istar`, by the hat-matrix identity.
    pub fn weighted_fit(&self, istar: usize, omega: f64) -> (f64, DVector<f64>) {
        let coef = if omega >= 1.0 {
            self.coef.clone()
        } else {
            let u = &self.dinv * self.xtilde.row(istar).transpose();
            let denom = 1.0 / (1.0 - omega) - self.leverage(istar);
            &self.coef - u * (self.residuals[istar] / denom)
        };
        split(coef)
    }

    /// Closed-form influence curve of `istar`.
    pub fn influence(&self, istar: usize) -> RidgeInfluence {
        RidgeInfluence {
            case: istar,
            residual: self.residuals[istar],
            leverage: self.leverage(istar),
            sum_sq_hat: self.hat.column(istar).norm_squared(),
            n: self.hat.nrows(),
        }
    }

    /// Fitted values `X̃β̃` for given coefficients.
    pub fn fitted(&self, beta0: f64, beta: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(beta.len() + 1);
        c[0] = beta0;
        c.rows_mut(1, beta.len()).copy_from(beta);
        &self.xtilde * c
    }
}

fn split(coef: DVector<f64>) -> (f64, DVector<f64>) {
    let p = coef.len() - 1;
    (coef[0], coef.rows(1, p).into_owned())
}

/// Weighted ridge fit through the hat-matrix identity.
pub fn ridge_weighted_fit(data: &Dataset, lambda: f64, istar: usize, omega: f64) -> Result<(f64, DVector<f64>)> {
    check_case(data, istar, omega)?;
    Ok(RidgeHat::new(data, lambda)?.weighted_fit(istar, omega))
}

/// Weighted ridge fit through the weighted normal equations.
pub fn ridge_weighted_fit_direct(data: &Dataset, lambda: f64, istar: usize, omega: f64) -> Result<(f64, DVector<f64>)> {
    check_case(data, istar, omega)?;
    let xt = data.xtilde();
    let mut wx = xt.clone();
    wx.row_mut(istar).scale_mut(omega);
    let mut d = wx.tr_mul(&xt);
    for j in 1..d.nrows() {
        d[(j, j)] += lambda;
    }
    let rhs = wx.tr_mul(data.y());
    let coef = d.lu().solve(&rhs).ok_or(Error::SingularElbow { indices: Vec::new() })?;
    Ok(split(coef))
}

fn check_case(data: &Dataset, istar: usize, omega: f64) -> Result<()> {
    if istar >= data.n() {
        return Err(Error::InvalidInput(alloc::format!("case {istar} out of range")));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidInput(alloc::format!("omega {omega} outside [0, 1]")));
    }
    Ok(())
}

/// Normalization of the influence distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// Divide by `n`.
    Rescaled,
    /// Divide by `p·σ̂²`.
    Classical { p: usize, sigma2: f64 },
}

/// Closed-form ridge influence curve of one case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeInfluence {
    pub case: usize,
    pub residual: f64,
    pub leverage: f64,
    /// `Σⱼ h²_{j,i⋆}`.
    pub sum_sq_hat: f64,
    pub n: usize,
}

impl RidgeInfluence {
    pub fn eval(&self, omega: f64, scaling: Scaling) -> f64 {
        if omega >= 1.0 {
            return 0.0;
        }
        let denom = 1.0 / (1.0 - omega) - self.leverage;
        let s = match scaling {
            Scaling::Rescaled => self.n as f64,
            Scaling::Classical { p, sigma2 } => p as f64 * sigma2,
        };
        self.residual * self.residual * self.sum_sq_hat / (s * denom * denom)
    }
}

/// Closed-form ridge influence curve of `istar`.
pub fn influence_graph_ridge(data: &Dataset, lambda: f64, istar: usize) -> Result<RidgeInfluence> {
    check_case(data, istar, 0.0)?;
    Ok(RidgeHat::new(data, lambda)?.influence(istar))
}

/// `df_ω` estimate with its summands.
#[derive(Debug, Clone, PartialEq)]
pub struct DfEstimate {
    pub omega: f64,
    pub value: f64,
    /// Summands; zero for excluded cases.
    pub per_case: Vec<f64>,
    /// Cases whose denominator vanished.
    pub excluded: Vec<usize>,
}

/// `Σᵢ (f̂(xᵢ) − f̂ⁱ_ω(xᵢ)) / ((1 − ω)(yᵢ − f̂ⁱ_ω(xᵢ)))`.
pub fn df_estimate(data: &Dataset, case_fitted: &[f64], full_fitted: &[f64], omega: f64) -> Result<DfEstimate> {
    let n = data.n();
    if case_fitted.len() != n || full_fitted.len() != n {
        return Err(Error::DimensionMismatch { what: "fitted values", expected: n, found: case_fitted.len() });
    }
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::InvalidInput(alloc::format!("omega must lie in [0, 1), got {omega}")));
    }
    let cut = 1e-12 * data.scale();
    let mut per_case = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for i in 0..n {
        let den = data.y()[i] - case_fitted[i];
        if den.abs() < cut {
            excluded.push(i);
            per_case.push(0.0);
        } else {
            per_case.push((full_fitted[i] - case_fitted[i]) / ((1.0 - omega) * den));
        }
    }
    Ok(DfEstimate { omega, value: per_case.iter().sum(), per_case, excluded })
}

/// Quantile-regression `df_ω` through one ω path per case.
pub fn qr_df(data: &Dataset, cfg: &FitConfig, full: &crate::model::QuantileSolution, omega: f64) -> Result<DfEstimate> {
    let gram = ElbowGramInverse::for_elbow(data, &full.partition.elbow())?;
    let full_fitted: Vec<f64> = (0..data.n()).map(|i| full.fitted(data, i)).collect();
    let mut case_fitted = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let f = if omega == 0.0 {
            omega_terminal(data, cfg, i, full, gram.clone())?.terminal.fitted(data, i)
        } else {
            let path = crate::omega_path::build_omega_path_with(data, cfg, i, full, gram.clone())?;
            path.eval_at(omega)?.fitted(data, i)
        };
        case_fitted.push(f);
    }
    df_estimate(data, &case_fitted, &full_fitted, omega)
}

/// Ridge `df_ω` from closed-form weighted fits.
pub fn ridge_df(data: &Dataset, lambda: f64, omega: f64) -> Result<DfEstimate> {
    let hat = RidgeHat::new(data, lambda)?;
    let full_fitted = hat.fitted(hat.coef[0], &hat.coef.rows(1, data.p()).into_owned());
    let case_fitted: Vec<f64> = (0..data.n())
        .map(|i| {
            let (b0, b) = hat.weighted_fit(i, omega);
            data.fitted(i, b0, &b)
        })
        .collect();
    df_estimate(data, &case_fitted, full_fitted.as_slice(), omega)
}
