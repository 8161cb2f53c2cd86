//! Full-data solution path in λ.
//!
//! With the partition held fixed, `λβ₀`, `θ_E`, `λβ` and `λr` are affine in λ. The path
//! starts at λ = ∞ with a single order statistic in the elbow and walks down to
//! `lambda_min`, switching the partition whenever an elbow dual reaches a bound or a
//! residual reaches zero.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::elbow::{assemble, solve_elbow_duals};
use crate::error::{Error, Result};
use crate::linalg::ElbowGramInverse;
use crate::model::{dot, kkt_residual, validate_tau, Dataset, FitConfig, Partition, QuantileSolution, Side, KKT_TOL};
use crate::oracle::{oracle_solve, OracleConfig};

/// Relative width inside which two events count as simultaneous.
pub const TIE_TOL: f64 = 1e-12;

/// Breakpoints between exact re-solves of the running state.
pub const RESYNC_EVERY: usize = 32;

/// Affine pieces on one λ interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSegment {
    /// Upper end (`f64::INFINITY` for the first segment).
    pub lambda_hi: f64,
    pub lambda_lo: f64,
    pub partition: Partition,
    /// Elbow cases in the order of `theta_*`.
    pub elbow: Vec<usize>,
    /// `λβ₀ = alpha0.0 + alpha0.1·λ`.
    pub alpha0: (f64, f64),
    /// `θ_E = theta_intercept + theta_slope·λ`.
    pub theta_intercept: DVector<f64>,
    pub theta_slope: DVector<f64>,
}

/// Piecewise-linear full-data path.
#[derive(Debug, Clone)]
pub struct LambdaPath {
    pub tau: f64,
    pub lambda_min: f64,
    /// Event values, strictly decreasing.
    pub breakpoints: Vec<f64>,
    /// Solutions at `breakpoints`, on the partition below each event.
    pub solutions: Vec<QuantileSolution>,
    /// Segments from λ = ∞ down to `lambda_min`.
    pub segments: Vec<LambdaSegment>,
    /// Largest breakpoint (`lambda_min` when the path has none).
    pub lambda_max: f64,
    /// Number of oracle re-solves after ambiguous events.
    pub fallbacks: usize,
}

impl LambdaPath {
    /// Solution at `lambda ≥ lambda_min`.
    pub fn eval(&self, data: &Dataset, lambda: f64) -> Result<QuantileSolution> {
        if !(lambda >= self.lambda_min) || !lambda.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "lambda {lambda} outside the path range [{}, inf)",
                self.lambda_min
            )));
        }
        if let Some(k) = self.breakpoints.iter().position(|&b| b == lambda) {
            return Ok(self.solutions[k].clone());
        }
        let seg = self
            .segments
            .iter()
            .find(|s| lambda >= s.lambda_lo && lambda < s.lambda_hi)
            .or(self.segments.last())
            .ok_or(Error::Contract("empty lambda path"))?;
        let mut theta = pinned_theta(&seg.partition, self.tau);
        for (j, &e) in seg.elbow.iter().enumerate() {
            theta[e] = seg.theta_intercept[j] + seg.theta_slope[j] * lambda;
        }
        let alpha0 = seg.alpha0.0 + seg.alpha0.1 * lambda;
        Ok(assemble(data, lambda, alpha0, theta, seg.partition.clone(), 1.0, None))
    }

    /// Elbow size at `lambda`.
    pub fn elbow_size(&self, lambda: f64) -> usize {
        self.segments
            .iter()
            .find(|s| lambda >= s.lambda_lo && lambda < s.lambda_hi)
            .or(self.segments.last())
            .map_or(0, |s| s.elbow.len())
    }
}

fn pinned_theta(part: &Partition, tau: f64) -> DVector<f64> {
    DVector::from_iterator(
        part.len(),
        part.sides().iter().map(|s| match s {
            Side::Left => tau - 1.0,
            Side::Right => tau,
            Side::Elbow => 0.0,
        }),
    )
}

/// `n_lambda` log-equispaced values on `[lo, hi]`, ascending.
pub fn log_grid(lo: f64, hi: f64, n_lambda: usize) -> Result<Vec<f64>> {
    if n_lambda < 2 || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidInput(alloc::format!(
            "grid needs 0 < lo < hi and at least two points, got [{lo}, {hi}] with {n_lambda}"
        )));
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let step = (b - a) / (n_lambda - 1) as f64;
    let mut g: Vec<f64> = (0..n_lambda).map(|k| libm::exp(a + step * k as f64)).collect();
    g[0] = lo;
    g[n_lambda - 1] = hi;
    Ok(g)
}

/// Log grid over the breakpoint range of `path`, ascending.
pub fn lambda_grid(path: &LambdaPath, n_lambda: usize) -> Result<Vec<f64>> {
    if path.breakpoints.len() < 2 {
        return Err(Error::InvalidInput("lambda path has fewer than two breakpoints".into()));
    }
    let lo = path.breakpoints.last().copied().unwrap_or(path.lambda_min).max(path.lambda_min);
    log_grid(lo, path.lambda_max, n_lambda)
}

/// Single full-data fit.
pub fn full_fit_at(data: &Dataset, tau: f64, lambda: f64) -> Result<QuantileSolution> {
    FitConfig::new(tau, lambda)?;
    let path = build_lambda_path(data, tau, lambda)?;
    path.eval(data, lambda)
}

/// Partition and duals at λ = ∞.
fn initial_state(data: &Dataset, tau: f64) -> (Partition, DVector<f64>, usize) {
    let n = data.n();
    let y = data.y();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let m = n as f64 * tau;
    let nearest = libm::round(m);
    let mut sides = vec![Side::Right; n];
    let mut theta = DVector::from_element(n, tau);
    let (e, theta_e, below) = if (m - nearest).abs() <= 1e-9 {
        let k = nearest as usize;
        (order[k - 1], tau - 1.0, k - 1)
    } else {
        let k = libm::floor(m) as usize;
        (order[k], k as f64 - tau * (n - 1) as f64, k)
    };
    for &i in &order[..below] {
        sides[i] = Side::Left;
        theta[i] = tau - 1.0;
    }
    sides[e] = Side::Elbow;
    theta[e] = theta_e;
    (Partition::from_sides(sides), theta, e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Entry(usize),
    Exit(usize, Side),
}

impl Event {
    fn case(&self) -> usize {
        match *self {
            Event::Entry(i) | Event::Exit(i, _) => i,
        }
    }
}

/// Running state of the λ walk.
struct Walk<'a> {
    data: &'a Dataset,
    tau: f64,
    part: Partition,
    gram: ElbowGramInverse,
    theta: DVector<f64>,
    /// `λβ₀` at `lambda`.
    alpha0: f64,
    /// `λβ`.
    lbeta: DVector<f64>,
    /// `λr`.
    lres: DVector<f64>,
    lambda: f64,
    // slopes in λ
    a1: f64,
    g: DVector<f64>,
    lbeta1: DVector<f64>,
    q: DVector<f64>,
}

impl<'a> Walk<'a> {
    fn slopes(&mut self) -> Result<()> {
        let data = self.data;
        let elbow = self.gram.elbow();
        let k = elbow.len();
        let y_e = DVector::from_iterator(k, elbow.iter().map(|&e| data.y()[e]));
        let g_one = self.gram.apply_ones();
        let denom = g_one.sum();
        if !(denom > 0.0) {
            return Err(Error::SingularElbow { indices: elbow.to_vec() });
        }
        let g_y = self.gram.apply(&y_e);
        self.a1 = g_y.sum() / denom;
        self.g = if k == 1 { DVector::zeros(1) } else { g_y - g_one * self.a1 };
        let p = data.p();
        let mut lb1 = DVector::zeros(p);
        for (j, &e) in elbow.iter().enumerate() {
            let gj = self.g[j];
            if gj != 0.0 {
                for (acc, xv) in lb1.iter_mut().zip(data.row(e)) {
                    *acc += gj * xv;
                }
            }
        }
        let mut q = data.y().add_scalar(-self.a1);
        q.gemv(-1.0, data.x(), &lb1, 1.0);
        for &e in elbow {
            q[e] = 0.0;
        }
        self.lbeta1 = lb1;
        self.q = q;
        Ok(())
    }

    /// Largest admissible event below the current λ, with its λ value.
    fn next_event(&self) -> Option<(f64, Event)> {
        let tau = self.tau;
        let mut best: Option<(f64, Event)> = None;
        let infinite = !self.lambda.is_finite();
        let consider = |lam: f64, ev: Event, best: &mut Option<(f64, Event)>| {
            if !(lam > 0.0) {
                return;
            }
            match best {
                None => *best = Some((lam, ev)),
                Some((bl, bev)) => {
                    let tie = (lam - *bl).abs() <= TIE_TOL * bl.abs().max(lam.abs());
                    if tie {
                        if prefer(ev, *bev) {
                            *best = Some((lam.max(*bl), ev));
                        }
                    } else if lam > *bl {
                        *best = Some((lam, ev));
                    }
                }
            }
        };
        let elbow = self.gram.elbow();
        if !infinite {
            for (j, &e) in elbow.iter().enumerate() {
                let gj = self.g[j];
                let th = self.theta[e];
                let t = if gj < 0.0 {
                    (tau - th) / (-gj)
                } else if gj > 0.0 {
                    (th - (tau - 1.0)) / gj
                } else {
                    continue;
                };
                let side = if gj < 0.0 { Side::Right } else { Side::Left };
                consider(self.lambda - t.max(0.0), Event::Exit(e, side), &mut best);
            }
        }
        for i in 0..self.data.n() {
            let qi = self.q[i];
            let lam = match self.part.side(i) {
                Side::Elbow => continue,
                Side::Right if qi > 0.0 => {
                    if infinite {
                        -self.intercept(i) / qi
                    } else {
                        self.lambda - self.lres[i].max(0.0) / qi
                    }
                }
                Side::Left if qi < 0.0 => {
                    if infinite {
                        -self.intercept(i) / qi
                    } else {
                        self.lambda - self.lres[i].min(0.0) / qi
                    }
                }
                _ => continue,
            };
            consider(lam, Event::Entry(i), &mut best);
        }
        best
    }

    /// Intercept of `λrᵢ` as an affine function of λ (first segment only).
    fn intercept(&self, i: usize) -> f64 {
        // λrᵢ = λyᵢ − λβ₀ − xᵢᵀλβ with λβ constant and λβ₀ = c + a1·λ.
        -(self.alpha0) - dot(self.data.row(i), self.lbeta.as_slice())
    }

    fn segment(&self, lo: f64) -> LambdaSegment {
        let lam = self.lambda;
        let elbow = self.gram.elbow().to_vec();
        let k = elbow.len();
        let th = DVector::from_iterator(k, elbow.iter().map(|&e| self.theta[e]));
        let (a0, ti) =
            if lam.is_finite() { (self.alpha0 - self.a1 * lam, &th - &self.g * lam) } else { (self.alpha0, th) };
        LambdaSegment {
            lambda_hi: lam,
            lambda_lo: lo,
            partition: self.part.clone(),
            elbow,
            alpha0: (a0, self.a1),
            theta_intercept: ti,
            theta_slope: self.g.clone(),
        }
    }

    /// Moves the state to `target`.
    fn advance(&mut self, target: f64) {
        if self.lambda.is_finite() {
            let d = target - self.lambda;
            self.alpha0 += self.a1 * d;
            for (j, &e) in self.gram.elbow().iter().enumerate() {
                self.theta[e] += self.g[j] * d;
            }
            self.lbeta.axpy(d, &self.lbeta1, 1.0);
            self.lres.axpy(d, &self.q, 1.0);
        } else {
            // alpha0 and lres hold intercepts on the first segment.
            self.alpha0 += self.a1 * target;
            let mut lr = self.data.y() * target;
            lr.add_scalar_mut(-self.alpha0);
            lr.gemv(-1.0, self.data.x(), &self.lbeta, 1.0);
            self.lres = lr;
        }
        self.lambda = target;
    }

    fn apply(&mut self, ev: Event) -> Result<()> {
        let tau = self.tau;
        match ev {
            Event::Entry(i) => {
                self.gram.add(self.data, i)?;
                self.part.set(i, Side::Elbow);
                self.lres[i] = 0.0;
            }
            Event::Exit(i, side) => {
                let pos = self.gram.position(i).ok_or(Error::Contract("exiting case not in elbow"))?;
                if self.gram.len() == 1 {
                    return Err(Error::Contract("lambda path emptied its elbow"));
                }
                self.gram.remove(pos)?;
                self.part.set(i, side);
                self.theta[i] = if side == Side::Right { tau } else { tau - 1.0 };
            }
        }
        Ok(())
    }

    /// Exact re-solve of the state at the current λ.
    fn resync(&mut self) -> Result<()> {
        let lam = self.lambda;
        self.alpha0 = solve_elbow_duals(self.data, lam, &self.gram, &mut self.theta)?;
        self.lbeta = self.data.xt_mul(&self.theta);
        let mut lr = self.data.y() * lam;
        lr.add_scalar_mut(-self.alpha0);
        lr.gemv(-1.0, self.data.x(), &self.lbeta, 1.0);
        self.lres = lr;
        Ok(())
    }

    fn solution(&self) -> QuantileSolution {
        let lam = self.lambda;
        QuantileSolution {
            beta0: self.alpha0 / lam,
            beta: &self.lbeta / lam,
            theta: self.theta.clone(),
            residuals: &self.lres / lam,
            partition: self.part.clone(),
            omega: 1.0,
            starred: None,
        }
    }

    /// Cheap certificate: dual balance, boxes and elbow equations.
    fn quick_check(&self) -> f64 {
        let data = self.data;
        let tau = self.tau;
        let lam = self.lambda;
        let mut worst = self.theta.sum().abs();
        let scale = data.scale();
        for i in 0..data.n() {
            let t = self.theta[i];
            let v = match self.part.side(i) {
                Side::Left => (t - (tau - 1.0)).abs().max(self.lres[i].max(0.0) / lam),
                Side::Right => (t - tau).abs().max((-self.lres[i]).max(0.0) / lam),
                Side::Elbow => {
                    let r = data.y()[i] - (self.alpha0 + dot(data.row(i), self.lbeta.as_slice())) / lam;
                    (tau - 1.0 - t).max(t - tau).max(0.0).max(r.abs())
                }
            };
            worst = worst.max(v);
        }
        worst / scale
    }

    /// Replaces the state by an oracle solve at the current λ.
    fn recover(&mut self) -> Result<()> {
        let cfg = FitConfig::new(self.tau, self.lambda)?;
        let sol = oracle_solve(self.data, &cfg, 1.0, None, &OracleConfig::default())?;
        let elbow = sol.partition.elbow();
        self.gram = ElbowGramInverse::for_elbow(self.data, &elbow)?;
        self.part = sol.partition.clone();
        self.theta = sol.theta.clone();
        if elbow.is_empty() {
            return Err(Error::Contract("oracle recovery produced an empty elbow"));
        }
        self.resync()
    }
}

fn prefer(a: Event, b: Event) -> bool {
    match (a, b) {
        (Event::Entry(_), Event::Exit(..)) => true,
        (Event::Exit(..), Event::Entry(_)) => false,
        _ => a.case() < b.case(),
    }
}

/// Builds the full-data path on `[lambda_min, ∞)`.
pub fn build_lambda_path(data: &Dataset, tau: f64, lambda_min: f64) -> Result<LambdaPath> {
    validate_tau(tau)?;
    if !(lambda_min > 0.0 && lambda_min.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("lambda_min must be positive, got {lambda_min}")));
    }
    let (n, p) = (data.n(), data.p());
    let (part, theta, e) = initial_state(data, tau);
    let gram = ElbowGramInverse::for_elbow(data, &[e])?;
    let lbeta = data.xt_mul(&theta);
    // On the first segment λβ₀ = λ·y_e − x_eᵀλβ; keep the intercept in alpha0.
    let alpha0 = -dot(data.row(e), lbeta.as_slice());
    let mut w = Walk {
        data,
        tau,
        part,
        gram,
        theta,
        alpha0,
        lbeta,
        lres: DVector::zeros(n),
        lambda: f64::INFINITY,
        a1: 0.0,
        g: DVector::zeros(1),
        lbeta1: DVector::zeros(p),
        q: DVector::zeros(n),
    };
    w.slopes()?;
    let cap = 50 * (n + p);
    let mut path = LambdaPath {
        tau,
        lambda_min,
        breakpoints: Vec::new(),
        solutions: Vec::new(),
        segments: Vec::new(),
        lambda_max: lambda_min,
        fallbacks: 0,
    };
    let mut events = 0usize;
    let mut stalled = 0usize;
    loop {
        let next = w.next_event();
        let (lam, ev) = match next {
            Some((lam, ev)) if lam >= lambda_min => (lam, ev),
            _ => {
                path.segments.push(w.segment(lambda_min));
                break;
            }
        };
        events += 1;
        if events > cap {
            return Err(Error::Divergence { limit: cap });
        }
        let fresh = !w.lambda.is_finite() || lam < w.lambda * (1.0 - TIE_TOL);
        let lam = if fresh { lam } else { w.lambda };
        if fresh {
            path.segments.push(w.segment(lam));
            stalled = 0;
        } else {
            stalled += 1;
        }
        w.advance(lam);
        w.apply(ev)?;
        if fresh && path.breakpoints.len() % RESYNC_EVERY == RESYNC_EVERY - 1 {
            w.resync()?;
        }
        w.slopes()?;
        let tol = KKT_TOL;
        if stalled > n + p || w.quick_check() > tol {
            log::warn!("lambda path: re-solving at lambda = {lam:e} after an ambiguous event");
            w.recover()?;
            w.slopes()?;
            path.fallbacks += 1;
            stalled = 0;
            if w.quick_check() > tol {
                return Err(Error::Certificate { residual: w.quick_check(), at: lam });
            }
        }
        if fresh {
            path.breakpoints.push(lam);
            path.solutions.push(w.solution());
        } else if let Some(last) = path.solutions.last_mut() {
            *last = w.solution();
        }
        if !fresh && path.breakpoints.is_empty() {
            return Err(Error::Contract("zero-length step before the first breakpoint"));
        }
    }
    path.lambda_max = path.breakpoints.first().copied().unwrap_or(lambda_min);
    Ok(path)
}

/// Full-data fits on a grid from one path, in grid order.
pub fn fits_on_grid(data: &Dataset, tau: f64, lambdas: &[f64]) -> Result<(LambdaPath, Vec<QuantileSolution>)> {
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let path = build_lambda_path(data, tau, lo)?;
    let fits = lambdas.iter().map(|&l| path.eval(data, l)).collect::<Result<Vec<_>>>()?;
    Ok((path, fits))
}

/// Certificate of a full-data solution.
pub fn certify(data: &Dataset, tau: f64, lambda: f64, sol: &QuantileSolution) -> Result<f64> {
    let cfg = FitConfig::new(tau, lambda)?;
    Ok(kkt_residual(sol, data, &cfg)? / data.scale())
}
