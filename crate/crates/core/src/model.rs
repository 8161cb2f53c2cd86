//! Data, configuration, partitions and the KKT certificate.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for elbow membership of a residual.
pub const ELBOW_TOL: f64 = 1e-9;

/// Absolute tolerance for a dual value sitting on a box boundary.
pub const THETA_TOL: f64 = 1e-12;

/// Default pass threshold for [`kkt_residual`], relative to [`Dataset::scale`].
pub const KKT_TOL: f64 = 1e-8;

/// Check loss `τ·max(r,0) + (1−τ)·max(−r,0)`.
#[inline]
pub fn check_loss(r: f64, tau: f64) -> f64 {
    if r >= 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

/// Covariates and response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    xt: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch { what: "response", expected: n, found: y.len() });
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 cases, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidInput("need at least one covariate".into()));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite covariate at row {}, column {}", k % n, k / n)));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite response at row {i}")));
        }
        let xt = x.transpose();
        Ok(Dataset { x, xt, y })
    }

    /// Builds a dataset from row-major covariates.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { what: "covariate row", expected: p, found: rows[i].len() });
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Dataset::new(x, DVector::from_column_slice(y))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    #[inline]
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Covariates of case `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.xt.as_slice()[i * p..(i + 1) * p]
    }

    /// Augmented row `(1, xᵢ)`.
    pub fn xtilde_row(&self, i: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.p() + 1);
        v.push(1.0);
        v.extend_from_slice(self.row(i));
        v
    }

    /// Augmented design `(1, X)`.
    pub fn xtilde(&self) -> DMatrix<f64> {
        let (n, p) = self.x.shape();
        DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] })
    }

    /// `max(1, ‖y‖∞)`.
    pub fn scale(&self) -> f64 {
        self.y.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// The dataset with case `i` removed.
    pub fn without_case(&self, i: usize) -> Result<Dataset> {
        if i >= self.n() {
            return Err(Error::InvalidInput(format!("case {i} out of range")));
        }
        Dataset::new(self.x.clone().remove_row(i), self.y.clone().remove_row(i))
    }

    /// Fitted value `β₀ + xᵢᵀβ`.
    #[inline]
    pub fn fitted(&self, i: usize, beta0: f64, beta: &DVector<f64>) -> f64 {
        beta0 + dot(self.row(i), beta.as_slice())
    }

    /// Residual vector `y − β₀ − Xβ`.
    pub fn residuals(&self, beta0: f64, beta: &DVector<f64>) -> DVector<f64> {
        let mut r = self.y.add_scalar(-beta0);
        r.gemv(-1.0, &self.x, beta, 1.0);
        r
    }

    /// `Xᵀv`.
    pub fn xt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.x.tr_mul(v)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quantile level and ridge penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub tau: f64,
    pub lambda: f64,
}

impl FitConfig {
    pub fn new(tau: f64, lambda: f64) -> Result<Self> {
        validate_tau(tau)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(FitConfig { tau, lambda })
    }
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// Membership of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Elbow,
    Right,
}

/// Left/elbow/right assignment of every case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    sides: Vec<Side>,
}

impl Partition {
    pub fn from_sides(sides: Vec<Side>) -> Self {
        Partition { sides }
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    #[inline]
    pub fn side(&self, i: usize) -> Side {
        self.sides[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, side: Side) {
        self.sides[i] = side;
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    fn members(&self, s: Side) -> Vec<usize> {
        (0..self.sides.len()).filter(|&i| self.sides[i] == s).collect()
    }

    pub fn elbow(&self) -> Vec<usize> {
        self.members(Side::Elbow)
    }

    pub fn left(&self) -> Vec<usize> {
        self.members(Side::Left)
    }

    pub fn right(&self) -> Vec<usize> {
        self.members(Side::Right)
    }

    pub fn elbow_len(&self) -> usize {
        self.sides.iter().filter(|&&s| s == Side::Elbow).count()
    }
}

/// Elbow membership from residual magnitudes: `|rᵢ| ≤ tol·scale` is elbow.
pub fn partition_from_residuals(residuals: &[f64], tol: f64, scale: f64) -> Partition {
    let cut = tol * scale;
    Partition::from_sides(
        residuals
            .iter()
            .map(|&r| {
                if r.abs() <= cut {
                    Side::Elbow
                } else if r < 0.0 {
                    Side::Left
                } else {
                    Side::Right
                }
            })
            .collect(),
    )
}

/// Primal and dual solution at fixed `(τ, λ, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSolution {
    pub beta0: f64,
    pub beta: DVector<f64>,
    pub theta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub partition: Partition,
    pub omega: f64,
    pub starred: Option<usize>,
}

impl QuantileSolution {
    /// Weight of case `i` in the objective.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        case_weight(self.omega, self.starred, i)
    }

    pub fn fitted(&self, data: &Dataset, i: usize) -> f64 {
        data.fitted(i, self.beta0, &self.beta)
    }
}

#[inline]
pub(crate) fn case_weight(omega: f64, starred: Option<usize>, i: usize) -> f64 {
    if starred == Some(i) {
        omega
    } else {
        1.0
    }
}

/// Case-weight adjusted objective.
pub fn objective(
    data: &Dataset,
    cfg: &FitConfig,
    omega: f64,
    istar: Option<usize>,
    beta0: f64,
    beta: &DVector<f64>,
) -> f64 {
    let weights: Vec<f64> = (0..data.n()).map(|i| case_weight(omega, istar, i)).collect();
    weighted_objective(data, cfg, &weights, beta0, beta)
}

/// Objective with arbitrary nonnegative case weights.
pub fn weighted_objective(data: &Dataset, cfg: &FitConfig, weights: &[f64], beta0: f64, beta: &DVector<f64>) -> f64 {
    let r = data.residuals(beta0, beta);
    let loss: f64 = r.iter().zip(weights).map(|(&ri, &w)| w * check_loss(ri, cfg.tau)).sum();
    loss + 0.5 * cfg.lambda * beta.norm_squared()
}

/// Max-norm violation of the KKT conditions of `sol`.
pub fn kkt_residual(sol: &QuantileSolution, data: &Dataset, cfg: &FitConfig) -> Result<f64> {
    let n = data.n();
    let weights: Vec<f64> = (0..n).map(|i| sol.weight(i)).collect();
    weighted_kkt_residual(data, cfg, &weights, sol.beta0, &sol.beta, &sol.theta, &sol.partition)
}

/// KKT violation for arbitrary nonnegative case weights.
pub fn weighted_kkt_residual(
    data: &Dataset,
    cfg: &FitConfig,
    weights: &[f64],
    beta0: f64,
    beta: &DVector<f64>,
    theta: &DVector<f64>,
    partition: &Partition,
) -> Result<f64> {
    for (what, expected, found) in [
        ("coefficients", data.p(), beta.len()),
        ("duals", data.n(), theta.len()),
        ("partition", data.n(), partition.len()),
        ("weights", data.n(), weights.len()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch { what, expected, found });
        }
    }
    Ok(kkt_report(data, cfg, weights, beta0, beta, theta, partition).max())
}

/// Components of the KKT certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `|Σθ|`.
    pub balance: f64,
    /// `‖Xᵀθ − λβ‖∞`.
    pub stationarity: f64,
    /// Worst dual box violation and its case.
    pub dual: (f64, usize),
    /// Worst residual sign or elbow-equation violation and its case.
    pub primal: (f64, usize),
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.balance.max(self.stationarity).max(self.dual.0).max(self.primal.0)
    }
}

/// Itemized KKT violations; dimensions must already agree.
pub fn kkt_report(
    data: &Dataset,
    cfg: &FitConfig,
    weights: &[f64],
    beta0: f64,
    beta: &DVector<f64>,
    theta: &DVector<f64>,
    partition: &Partition,
) -> KktReport {
    let tau = cfg.tau;
    let mut stat = data.xt_mul(theta);
    stat.axpy(-cfg.lambda, beta, 1.0);
    let mut rep = KktReport { balance: theta.sum().abs(), stationarity: stat.amax(), dual: (0.0, 0), primal: (0.0, 0) };
    for i in 0..data.n() {
        let w = weights[i];
        let t = theta[i];
        let r = data.y()[i] - data.fitted(i, beta0, beta);
        let (d, pr) = match partition.side(i) {
            Side::Left | Side::Right if w == 0.0 => (t.abs(), 0.0),
            Side::Left => ((t - w * (tau - 1.0)).abs(), r.max(0.0)),
            Side::Right => ((t - w * tau).abs(), (-r).max(0.0)),
            Side::Elbow => ((w * (tau - 1.0) - t).max(t - w * tau).max(0.0), r.abs()),
        };
        if d > rep.dual.0 {
            rep.dual = (d, i);
        }
        if pr > rep.primal.0 {
            rep.primal = (pr, i);
        }
    }
    rep
}

/// Number of cases in each of (left, elbow, right).
pub fn partition_counts(p: &Partition) -> (usize, usize, usize) {
    p.sides().iter().fold((0, 0, 0), |(l, e, r), s| match s {
        Side::Left => (l + 1, e, r),
        Side::Elbow => (l, e + 1, r),
        Side::Right => (l, e, r + 1),
    })
}
