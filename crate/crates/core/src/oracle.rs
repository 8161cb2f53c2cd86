//! Reference solver by smoothing continuation plus exact KKT polishing.
//!
//! Independent of the path machinery: it never touches the elbow Gram inverse and
//! polishes with the full `(1 + p + |E|)` KKT matrix.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    dot, validate_tau, weighted_kkt_residual, Dataset, FitConfig, Partition, QuantileSolution, Side, ELBOW_TOL,
    THETA_TOL,
};

/// Settings of [`oracle_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Newton iterations per smoothing level.
    pub max_iter: usize,
    /// Certificate target, relative to `max(1, ‖y‖∞)`.
    pub kkt_tol: f64,
    /// First smoothing width, relative to `max(1, ‖y‖∞)`.
    pub smoothing_start: f64,
    /// Factor applied to the width after each level.
    pub smoothing_decay: f64,
    /// Smallest width, relative to `max(1, ‖y‖∞)`.
    pub smoothing_floor: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_iter: 200,
            kkt_tol: 1e-10,
            smoothing_start: 0.1,
            smoothing_decay: 0.2,
            smoothing_floor: 1e-10,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.kkt_tol >= 1e-12) || !(self.smoothing_decay > 0.0 && self.smoothing_decay < 1.0) {
            return Err(Error::InvalidInput("oracle tolerance or decay out of range".into()));
        }
        if !(self.smoothing_start > 0.0 && self.smoothing_floor > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidInput("oracle smoothing schedule must be positive".into()));
        }
        Ok(())
    }
}

/// Solves the case-weight adjusted problem at `omega` (weight on `istar`).
pub fn oracle_solve(
    data: &Dataset,
    cfg: &FitConfig,
    omega: f64,
    istar: Option<usize>,
    ocfg: &OracleConfig,
) -> Result<QuantileSolution> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidInput("omega must lie in [0, 1]".into()));
    }
    if omega < 1.0 && istar.is_none() {
        return Err(Error::InvalidInput("a starred case is required when omega < 1".into()));
    }
    if let Some(i) = istar {
        if i >= data.n() {
            return Err(Error::InvalidInput(alloc::format!("case {i} out of range")));
        }
    }
    let weights: Vec<f64> = (0..data.n()).map(|i| if Some(i) == istar { omega } else { 1.0 }).collect();
    let fit = oracle_solve_weighted(data, cfg, &weights, ocfg)?;
    Ok(QuantileSolution {
        beta0: fit.beta0,
        beta: fit.beta,
        theta: fit.theta,
        residuals: fit.residuals,
        partition: fit.partition,
        omega,
        starred: istar,
    })
}

/// Solution of the weighted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFit {
    pub beta0: f64,
    pub beta: DVector<f64>,
    pub theta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub partition: Partition,
    pub kkt: f64,
}

/// Minimizes `Σ wᵢ ρ_τ(rᵢ) + (λ/2)‖β‖²` for arbitrary nonnegative weights.
pub fn oracle_solve_weighted(
    data: &Dataset,
    cfg: &FitConfig,
    weights: &[f64],
    ocfg: &OracleConfig,
) -> Result<WeightedFit> {
    validate_tau(cfg.tau)?;
    ocfg.validate()?;
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch { what: "weights", expected: data.n(), found: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
    }
    let scale = data.scale();
    let target = ocfg.kkt_tol * scale;
    let mut s = Smoothed::new(data, cfg, weights);
    let mut delta = ocfg.smoothing_start * scale;
    let floor = ocfg.smoothing_floor * scale;
    let mut best = f64::INFINITY;
    loop {
        s.minimize(delta, ocfg.max_iter);
        let r = s.residuals();
        let guess = Partition::from_sides(
            (0..data.n())
                .map(|i| {
                    if weights[i] > 0.0 && r[i].abs() < delta {
                        Side::Elbow
                    } else if r[i] < 0.0 {
                        Side::Left
                    } else {
                        Side::Right
                    }
                })
                .collect(),
        );
        if let Some(fit) = polish(data, cfg, weights, guess, s.v[0], target) {
            if fit.kkt <= target {
                return Ok(fit);
            }
            best = best.min(fit.kkt);
        }
        if delta <= floor {
            break;
        }
        delta = (delta * ocfg.smoothing_decay).max(floor);
    }
    Err(Error::OracleFailure { residual: best })
}

/// Fits without case `i` for every `i` and returns the held-out predictions.
pub fn brute_force_loo(data: &Dataset, cfg: &FitConfig, ocfg: &OracleConfig) -> Result<Vec<f64>> {
    (0..data.n())
        .map(|i| {
            let sub = data.without_case(i)?;
            let fit = oracle_solve(&sub, cfg, 1.0, None, ocfg)?;
            Ok(fit.beta0 + dot(data.row(i), fit.beta.as_slice()))
        })
        .collect()
}

/// Weighted Huberized check loss plus ridge, minimized by damped Newton.
struct Smoothed<'a> {
    data: &'a Dataset,
    tau: f64,
    lambda: f64,
    w: &'a [f64],
    v: DVector<f64>,
}

impl<'a> Smoothed<'a> {
    fn new(data: &'a Dataset, cfg: &FitConfig, w: &'a [f64]) -> Self {
        let p = data.p();
        let mut v = DVector::zeros(p + 1);
        v[0] = weighted_quantile(data.y().as_slice(), w, cfg.tau);
        Smoothed { data, tau: cfg.tau, lambda: cfg.lambda, w, v }
    }

    fn residuals_at(&self, v: &DVector<f64>) -> DVector<f64> {
        let beta = v.rows(1, self.data.p()).into_owned();
        self.data.residuals(v[0], &beta)
    }

    fn residuals(&self) -> DVector<f64> {
        self.residuals_at(&self.v)
    }

    fn value(&self, v: &DVector<f64>, delta: f64) -> f64 {
        let r = self.residuals_at(v);
        let loss: f64 = r.iter().zip(self.w).map(|(&ri, &wi)| wi * huber_check(ri, self.tau, delta)).sum();
        loss + 0.5 * self.lambda * v.rows(1, self.data.p()).norm_squared()
    }

    fn minimize(&mut self, delta: f64, max_iter: usize) {
        let (n, p) = (self.data.n(), self.data.p());
        let mut f = self.value(&self.v, delta);
        for _ in 0..max_iter {
            let r = self.residuals();
            let mut grad = DVector::zeros(p + 1);
            let mut hess = DMatrix::zeros(p + 1, p + 1);
            let mut xt = vec![0.0; p + 1];
            for i in 0..n {
                if self.w[i] == 0.0 {
                    continue;
                }
                xt[0] = 1.0;
                xt[1..].copy_from_slice(self.data.row(i));
                let (d1, d2) = huber_check_derivs(r[i], self.tau, delta);
                let g = -self.w[i] * d1;
                let c = self.w[i] * d2;
                for a in 0..=p {
                    grad[a] += g * xt[a];
                    if c != 0.0 {
                        for b in 0..=a {
                            hess[(a, b)] += c * xt[a] * xt[b];
                        }
                    }
                }
            }
            for a in 1..=p {
                grad[a] += self.lambda * self.v[a];
                hess[(a, a)] += self.lambda;
            }
            for a in 0..=p {
                for b in 0..a {
                    hess[(b, a)] = hess[(a, b)];
                }
            }
            if grad.amax() <= 1e-14 * (1.0 + f.abs()) {
                break;
            }
            let mut mu = 1e-12 * (1.0 + hess.diagonal().amax());
            let step = loop {
                let mut h = hess.clone();
                for a in 0..=p {
                    h[(a, a)] += mu;
                }
                if let Some(ch) = h.cholesky() {
                    break ch.solve(&(-&grad));
                }
                mu *= 100.0;
            };
            let slope = grad.dot(&step);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &self.v + &step * alpha;
                let fc = self.value(&cand, delta);
                if fc <= f + 1e-4 * alpha * slope {
                    let moved = (&cand - &self.v).amax();
                    self.v = cand;
                    f = fc;
                    accepted = moved > 1e-16 * (1.0 + self.v.amax());
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
}

/// C¹ Huberization of the check loss with quadratic zone `(−δ, δ)`.
fn huber_check(r: f64, tau: f64, delta: f64) -> f64 {
    if r >= delta {
        tau * (r - 0.5 * delta)
    } else if r >= 0.0 {
        tau * r * r / (2.0 * delta)
    } else if r > -delta {
        (1.0 - tau) * r * r / (2.0 * delta)
    } else {
        (1.0 - tau) * (-r - 0.5 * delta)
    }
}

fn huber_check_derivs(r: f64, tau: f64, delta: f64) -> (f64, f64) {
    if r >= delta {
        (tau, 0.0)
    } else if r >= 0.0 {
        (tau * r / delta, tau / delta)
    } else if r > -delta {
        ((1.0 - tau) * r / delta, (1.0 - tau) / delta)
    } else {
        (tau - 1.0, 0.0)
    }
}

/// Smallest `v` with weighted share of `y ≤ v` at least `τ`.
fn weighted_quantile(y: &[f64], w: &[f64], tau: f64) -> f64 {
    let mut idx: Vec<usize> = (0..y.len()).filter(|&i| w[i] > 0.0).collect();
    if idx.is_empty() {
        return 0.0;
    }
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let total: f64 = idx.iter().map(|&i| w[i]).sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += w[i];
        if acc >= tau * total {
            return y[i];
        }
    }
    y[*idx.last().unwrap()]
}

/// Exact solve on a candidate partition followed by active-set corrections.
fn polish(
    data: &Dataset,
    cfg: &FitConfig,
    w: &[f64],
    mut part: Partition,
    beta0_hint: f64,
    target: f64,
) -> Option<WeightedFit> {
    let (n, p) = (data.n(), data.p());
    let tau = cfg.tau;
    let tol = ELBOW_TOL * data.scale();
    let mut last: Option<WeightedFit> = None;
    for _ in 0..(2 * n + 4) {
        let elbow = part.elbow();
        let mut theta = DVector::zeros(n);
        for i in 0..n {
            theta[i] = match part.side(i) {
                Side::Left => w[i] * (tau - 1.0),
                Side::Right => w[i] * tau,
                Side::Elbow => 0.0,
            };
        }
        let (beta0, beta) = if elbow.is_empty() {
            if theta.sum().abs() > target {
                return last;
            }
            (beta0_hint, data.xt_mul(&theta) / cfg.lambda)
        } else {
            let k = elbow.len();
            let m = 1 + p + k;
            let mut a = DMatrix::zeros(m, m);
            let mut rhs = DVector::zeros(m);
            let s: f64 = theta.sum();
            let u = data.xt_mul(&theta);
            rhs[0] = -s;
            for j in 0..p {
                a[(1 + j, 1 + j)] = cfg.lambda;
                rhs[1 + j] = u[j];
            }
            for (c, &e) in elbow.iter().enumerate() {
                let col = 1 + p + c;
                a[(0, col)] = 1.0;
                a[(col, 0)] = 1.0;
                for (j, xj) in data.row(e).iter().enumerate() {
                    a[(1 + j, col)] = -xj;
                    a[(col, 1 + j)] = *xj;
                }
                rhs[col] = data.y()[e];
            }
            // Repeated elbow rows make the system singular; take the minimum-norm duals.
            let z = match a.clone().lu().solve(&rhs) {
                Some(z) if z.iter().all(|v| v.is_finite()) => z,
                _ => a.svd(true, true).solve(&rhs, 1e-12 * (1.0 + cfg.lambda)).ok()?,
            };
            if z.iter().any(|v| !v.is_finite()) {
                return last;
            }
            for (c, &e) in elbow.iter().enumerate() {
                theta[e] = z[1 + p + c];
            }
            (z[0], z.rows(1, p).into_owned())
        };
        let residuals = data.residuals(beta0, &beta);
        let mut changed = false;
        let mut next = part.clone();
        for i in 0..n {
            match part.side(i) {
                Side::Elbow => {
                    if theta[i] < w[i] * (tau - 1.0) - THETA_TOL {
                        next.set(i, Side::Left);
                        changed = true;
                    } else if theta[i] > w[i] * tau + THETA_TOL {
                        next.set(i, Side::Right);
                        changed = true;
                    }
                }
                Side::Left if w[i] > 0.0 && residuals[i] > tol => {
                    next.set(i, Side::Elbow);
                    changed = true;
                }
                Side::Right if w[i] > 0.0 && residuals[i] < -tol => {
                    next.set(i, Side::Elbow);
                    changed = true;
                }
                Side::Left | Side::Right if w[i] == 0.0 => {
                    let s = if residuals[i] < 0.0 { Side::Left } else { Side::Right };
                    next.set(i, s);
                }
                _ => {}
            }
        }
        let kkt = weighted_kkt_residual(data, cfg, w, beta0, &beta, &theta, &part).ok()?;
        let fit = WeightedFit { beta0, beta, theta, residuals, partition: part.clone(), kkt };
        if !changed && kkt <= target {
            return Some(fit);
        }
        last = Some(fit);
        if !changed {
            return last;
        }
        part = next;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_is_continuous_at_knots() {
        for &tau in &[0.1, 0.5, 0.9] {
            let d = 0.3;
            for &r in &[d, -d, 0.0] {
                let a = huber_check(r - 1e-12, tau, d);
                let b = huber_check(r + 1e-12, tau, d);
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn weighted_quantile_skips_zero_weights() {
        let y = [5.0, 1.0, 2.0, 3.0];
        let w = [0.0, 1.0, 1.0, 1.0];
        assert_eq!(weighted_quantile(&y, &w, 0.5), 2.0);
    }
}
