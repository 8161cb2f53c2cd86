//! Case-weight path from ω = 1 (full data) down to ω = 0 (case left out).
//!
//! On each segment the partition is fixed and `λβ₀`, `θ_E`, `λβ`, `λr` move linearly in ω
//! with slopes `b0`, `b`, `X̃_Eᵀb + c·x̃⋆`, `h`, where `c = τ − 𝕀(i⋆ ∈ L)`.

use alloc::vec::Vec;
use nalgebra::DVector;

use crate::elbow::solve_elbow_duals;
use crate::error::{Error, Result};
use crate::lambda_path::{RESYNC_EVERY, TIE_TOL};
use crate::linalg::ElbowGramInverse;
use crate::model::{dot, kkt_residual, Dataset, FitConfig, Partition, QuantileSolution, Side, KKT_TOL};
use crate::oracle::{oracle_solve, OracleConfig};

/// Slopes in ω of the scaled quantities on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Slopes {
    /// Slope of `λβ₀`.
    pub b0: f64,
    /// Slope of `θ_E`, aligned with the elbow order of the Gram inverse.
    pub b: DVector<f64>,
    /// Slope of `λβ`.
    pub beta: DVector<f64>,
    /// Slope of `λr`.
    pub h: DVector<f64>,
}

/// `τ − 𝕀(i⋆ ∈ L)`: slope of `θ⋆` in ω.
fn star_factor(tau: f64, side: Side) -> f64 {
    if side == Side::Left {
        tau - 1.0
    } else {
        tau
    }
}

/// Segment slopes for a starred case outside the elbow.
pub fn slopes(
    data: &Dataset,
    cfg: &FitConfig,
    partition: &Partition,
    istar: usize,
    gram: &ElbowGramInverse,
) -> Result<Slopes> {
    let side = partition.side(istar);
    if side == Side::Elbow {
        return Err(Error::Contract("starred case must be outside the elbow"));
    }
    let c = star_factor(cfg.tau, side);
    let elbow = gram.elbow();
    let k = elbow.len();
    if k == 0 {
        return Err(Error::Contract("slopes need a nonempty elbow"));
    }
    let xs = data.row(istar);
    let z = DVector::from_iterator(k, elbow.iter().map(|&e| 1.0 + dot(data.row(e), xs)));
    let u1 = gram.apply_ones();
    let uz = gram.apply(&z);
    let b0 = c * (1.0 - uz.sum()) / u1.sum();
    let b = -(&u1 * b0 + &uz * c);
    let p = data.p();
    let mut w = DVector::from_column_slice(xs) * c;
    for (j, &e) in elbow.iter().enumerate() {
        let bj = b[j];
        for (acc, xv) in w.iter_mut().zip(data.row(e)) {
            *acc += bj * xv;
        }
    }
    debug_assert_eq!(w.len(), p);
    let w0 = b.sum() + c;
    let mut h = DVector::from_element(data.n(), -(b0 + w0));
    h.gemv(-1.0, data.x(), &w, 1.0);
    Ok(Slopes { b0, b, beta: w, h })
}

/// Partition change at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Elbow case reaches a dual bound and leaves to `to`.
    ElbowExit { case: usize, to: Side },
    /// Case outside the elbow reaches a zero residual.
    ElbowEntry { case: usize },
    /// No further events before ω = 0.
    Terminal,
}

/// State needed to locate the next breakpoint.
#[derive(Debug, Clone, Copy)]
pub struct StepState<'a> {
    pub tau: f64,
    pub omega: f64,
    pub istar: usize,
    pub partition: &'a Partition,
    /// Elbow cases in slope order.
    pub elbow: &'a [usize],
    pub theta: &'a DVector<f64>,
    /// `λr` at `omega`.
    pub scaled_residuals: &'a DVector<f64>,
    pub b: &'a DVector<f64>,
    pub h: &'a DVector<f64>,
}

/// Largest ω in `[0, omega]` at which the partition changes.
pub fn next_breakpoint(s: &StepState<'_>) -> (f64, Event) {
    let tau = s.tau;
    let om = s.omega;
    let mut best: Option<(f64, Event)> = None;
    let mut consider = |t: f64, ev: Event| {
        if !(t <= om * (1.0 + TIE_TOL)) {
            return;
        }
        let cand = (om - t.max(0.0)).max(0.0);
        match best {
            None => best = Some((cand, ev)),
            Some((bw, bev)) => {
                if (cand - bw).abs() <= TIE_TOL * cand.max(bw) {
                    if prefer(ev, bev) {
                        best = Some((cand.max(bw), ev));
                    }
                } else if cand > bw {
                    best = Some((cand, ev));
                }
            }
        }
    };
    for (j, &e) in s.elbow.iter().enumerate() {
        let bj = s.b[j];
        let th = s.theta[e];
        if bj < 0.0 {
            consider((tau - th) / (-bj), Event::ElbowExit { case: e, to: Side::Right });
        } else if bj > 0.0 {
            consider((th - (tau - 1.0)) / bj, Event::ElbowExit { case: e, to: Side::Left });
        }
    }
    for i in 0..s.partition.len() {
        let hi = s.h[i];
        let lr = s.scaled_residuals[i];
        match s.partition.side(i) {
            Side::Right if hi > 0.0 => consider(lr.max(0.0) / hi, Event::ElbowEntry { case: i }),
            Side::Left if hi < 0.0 => consider(lr.min(0.0) / hi, Event::ElbowEntry { case: i }),
            _ => {}
        }
    }
    best.unwrap_or((0.0, Event::Terminal))
}

fn prefer(a: Event, b: Event) -> bool {
    let key = |e: Event| match e {
        Event::ElbowEntry { case } => (0, case),
        Event::ElbowExit { case, .. } => (1, case),
        Event::Terminal => (2, usize::MAX),
    };
    key(a) < key(b)
}

/// One linear piece of the ω path.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSegment {
    pub omega_hi: f64,
    pub omega_lo: f64,
    pub partition: Partition,
    /// Elbow cases in the order of `b`.
    pub elbow: Vec<usize>,
    /// Slope of `λβ₀`.
    pub b0: f64,
    /// Slope of `θ_E`.
    pub b: DVector<f64>,
    /// Slope of `θ⋆`.
    pub star_slope: f64,
    /// Slope of `λβ`.
    pub beta_slope: DVector<f64>,
    /// Slope of `λr`.
    pub h: DVector<f64>,
    /// Solution at `omega_hi`.
    pub anchor: QuantileSolution,
    /// Jump of `β₀` applied at `omega_hi` when the elbow had emptied.
    pub entry_shift: f64,
}

impl OmegaSegment {
    fn eval(&self, lambda: f64, omega: f64) -> QuantileSolution {
        let d = omega - self.omega_hi;
        let a = &self.anchor;
        let mut theta = a.theta.clone();
        for (j, &e) in self.elbow.iter().enumerate() {
            theta[e] += self.b[j] * d;
        }
        if let Some(s) = a.starred {
            theta[s] += self.star_slope * d;
        }
        QuantileSolution {
            beta0: a.beta0 + self.b0 * d / lambda,
            beta: &a.beta + &self.beta_slope * (d / lambda),
            theta,
            residuals: &a.residuals + &self.h * (d / lambda),
            partition: self.partition.clone(),
            omega,
            starred: a.starred,
        }
    }
}

/// Complete ω path for one starred case.
#[derive(Debug, Clone)]
pub struct OmegaPath {
    pub istar: usize,
    pub tau: f64,
    pub lambda: f64,
    /// `1 = ω₀ > ω₁ > … > 0`, ending with 0.
    pub breakpoints: Vec<f64>,
    pub segments: Vec<OmegaSegment>,
    /// Full-data solution the path starts from.
    pub start: QuantileSolution,
    pub terminal: QuantileSolution,
    /// Oracle re-solves after ambiguous events.
    pub fallbacks: usize,
    /// Partition changes including simultaneous ones.
    pub events: usize,
}

impl OmegaPath {
    /// Breakpoints strictly inside `(0, 1)`.
    pub fn interior_breakpoints(&self) -> usize {
        self.breakpoints.iter().filter(|&&w| w > 0.0 && w < 1.0).count()
    }

    /// Solution at `omega ∈ [0, 1]`.
    pub fn eval_at(&self, omega: f64) -> Result<QuantileSolution> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidInput(alloc::format!("omega {omega} outside [0, 1]")));
        }
        if omega == 0.0 {
            return Ok(self.terminal.clone());
        }
        let seg = self
            .segments
            .iter()
            .find(|s| omega > s.omega_lo && omega <= s.omega_hi)
            .ok_or(Error::Contract("omega not covered by any segment"))?;
        if omega == seg.omega_hi {
            return Ok(seg.anchor.clone());
        }
        Ok(seg.eval(self.lambda, omega))
    }

    /// Leave-one-out prediction `f̂^{[-i⋆]}(x⋆)`.
    pub fn loo_prediction(&self, data: &Dataset) -> f64 {
        self.terminal.fitted(data, self.istar)
    }
}

/// Summary of a path walk without stored segments.
#[derive(Debug, Clone)]
pub struct OmegaOutcome {
    pub terminal: QuantileSolution,
    pub interior_breakpoints: usize,
    pub events: usize,
    pub fallbacks: usize,
    pub max_elbow: usize,
}

struct OmegaWalk<'a> {
    data: &'a Dataset,
    cfg: FitConfig,
    istar: usize,
    part: Partition,
    gram: ElbowGramInverse,
    theta: DVector<f64>,
    alpha0: f64,
    lbeta: DVector<f64>,
    lres: DVector<f64>,
    omega: f64,
}

impl<'a> OmegaWalk<'a> {
    fn from_full(
        data: &'a Dataset,
        cfg: FitConfig,
        istar: usize,
        full: &QuantileSolution,
        gram: ElbowGramInverse,
    ) -> Self {
        let lam = cfg.lambda;
        OmegaWalk {
            data,
            cfg,
            istar,
            part: full.partition.clone(),
            gram,
            theta: full.theta.clone(),
            alpha0: full.beta0 * lam,
            lbeta: &full.beta * lam,
            lres: &full.residuals * lam,
            omega: 1.0,
        }
    }

    fn c(&self) -> f64 {
        star_factor(self.cfg.tau, self.part.side(self.istar))
    }

    fn solution(&self) -> QuantileSolution {
        let lam = self.cfg.lambda;
        QuantileSolution {
            beta0: self.alpha0 / lam,
            beta: &self.lbeta / lam,
            theta: self.theta.clone(),
            residuals: &self.lres / lam,
            partition: self.part.clone(),
            omega: self.omega,
            starred: Some(self.istar),
        }
    }

    fn advance(&mut self, sl: &Slopes, target: f64) {
        let d = target - self.omega;
        if d != 0.0 {
            self.alpha0 += sl.b0 * d;
            for (j, &e) in self.gram.elbow().iter().enumerate() {
                self.theta[e] += sl.b[j] * d;
            }
            self.lbeta.axpy(d, &sl.beta, 1.0);
            self.lres.axpy(d, &sl.h, 1.0);
        }
        self.omega = target;
        self.theta[self.istar] = self.c() * target;
    }

    /// Shifts `β₀` so the nearest residual on the side that must feed the elbow reaches zero.
    /// Returns the shift of `β₀`.
    fn refill_elbow(&mut self) -> Result<f64> {
        let c = self.c();
        let want = if c > 0.0 { Side::Left } else { Side::Right };
        let mut pick: Option<usize> = None;
        for i in 0..self.data.n() {
            if i == self.istar || self.part.side(i) != want {
                continue;
            }
            let better = match pick {
                None => true,
                Some(j) => {
                    if want == Side::Left {
                        self.lres[i] > self.lres[j]
                    } else {
                        self.lres[i] < self.lres[j]
                    }
                }
            };
            if better {
                pick = Some(i);
            }
        }
        let j = pick.ok_or(Error::Contract("no case available to refill an empty elbow"))?;
        let delta = self.lres[j];
        self.alpha0 += delta;
        self.lres.add_scalar_mut(-delta);
        self.lres[j] = 0.0;
        self.part.set(j, Side::Elbow);
        self.gram = ElbowGramInverse::for_elbow(self.data, &[j])?;
        log::debug!("omega path {}: elbow refilled by case {j} at omega = {}", self.istar, self.omega);
        Ok(delta / self.cfg.lambda)
    }

    fn apply(&mut self, ev: Event) -> Result<()> {
        let tau = self.cfg.tau;
        match ev {
            Event::ElbowEntry { case } => {
                if case == self.istar {
                    return Err(Error::Contract("starred case re-entered the elbow"));
                }
                self.gram.add(self.data, case)?;
                self.part.set(case, Side::Elbow);
                self.lres[case] = 0.0;
            }
            Event::ElbowExit { case, to } => {
                let pos = self.gram.position(case).ok_or(Error::Contract("exiting case not in elbow"))?;
                if self.gram.len() == 1 {
                    self.gram.clear();
                } else {
                    self.gram.remove(pos)?;
                }
                self.part.set(case, to);
                self.theta[case] = if to == Side::Right { tau } else { tau - 1.0 };
            }
            Event::Terminal => {}
        }
        Ok(())
    }

    fn resync(&mut self) -> Result<()> {
        let lam = self.cfg.lambda;
        self.theta[self.istar] = self.c() * self.omega;
        self.alpha0 = solve_elbow_duals(self.data, lam, &self.gram, &mut self.theta)?;
        self.lbeta = self.data.xt_mul(&self.theta);
        let mut lr = self.data.y() * lam;
        lr.add_scalar_mut(-self.alpha0);
        lr.gemv(-1.0, self.data.x(), &self.lbeta, 1.0);
        self.lres = lr;
        Ok(())
    }

    fn quick_check(&self) -> f64 {
        let data = self.data;
        let tau = self.cfg.tau;
        let lam = self.cfg.lambda;
        let mut worst = self.theta.sum().abs();
        for i in 0..data.n() {
            let w = if i == self.istar { self.omega } else { 1.0 };
            let t = self.theta[i];
            let v = match self.part.side(i) {
                Side::Left | Side::Right if w == 0.0 => t.abs(),
                Side::Left => (t - w * (tau - 1.0)).abs().max(self.lres[i].max(0.0) / lam),
                Side::Right => (t - w * tau).abs().max((-self.lres[i]).max(0.0) / lam),
                Side::Elbow => {
                    let r = data.y()[i] - (self.alpha0 + dot(data.row(i), self.lbeta.as_slice())) / lam;
                    (w * (tau - 1.0) - t).max(t - w * tau).max(0.0).max(r.abs())
                }
            };
            worst = worst.max(v);
        }
        worst / data.scale()
    }

    fn recover(&mut self) -> Result<()> {
        let sol = oracle_solve(self.data, &self.cfg, self.omega, Some(self.istar), &OracleConfig::default())?;
        if sol.partition.side(self.istar) == Side::Elbow && self.omega < 1.0 {
            return Err(Error::Contract("oracle placed the starred case in the elbow"));
        }
        let elbow = sol.partition.elbow();
        self.part = sol.partition.clone();
        self.theta = sol.theta.clone();
        self.gram = ElbowGramInverse::for_elbow(self.data, &elbow)?;
        if elbow.is_empty() {
            self.alpha0 = sol.beta0 * self.cfg.lambda;
            self.lbeta = &sol.beta * self.cfg.lambda;
            self.lres = &sol.residuals * self.cfg.lambda;
            self.refill_elbow()?;
            return Ok(());
        }
        self.resync()
    }
}

/// Walk configuration.
struct WalkOpts {
    record: bool,
}

struct WalkResult {
    breakpoints: Vec<f64>,
    segments: Vec<OmegaSegment>,
    terminal: QuantileSolution,
    fallbacks: usize,
    events: usize,
    max_elbow: usize,
}

fn walk(
    data: &Dataset,
    cfg: &FitConfig,
    istar: usize,
    full: &QuantileSolution,
    gram: ElbowGramInverse,
    opts: WalkOpts,
) -> Result<WalkResult> {
    let (n, p) = (data.n(), data.p());
    let tau = cfg.tau;
    let cap = 50 * (n + p);
    let mut w = OmegaWalk::from_full(data, *cfg, istar, full, gram);
    let mut out = WalkResult {
        breakpoints: alloc::vec![1.0],
        segments: Vec::new(),
        terminal: full.clone(),
        fallbacks: 0,
        events: 0,
        max_elbow: w.gram.len(),
    };
    let zero = Slopes { b0: 0.0, b: DVector::zeros(0), beta: DVector::zeros(p), h: DVector::zeros(n) };
    let mut shift = 0.0;

    if w.part.side(istar) == Side::Elbow {
        let t = w.theta[istar];
        let (mut omega1, to) = if t > 0.0 {
            ((t / tau).min(1.0), Side::Right)
        } else if t < 0.0 {
            ((t / (tau - 1.0)).min(1.0), Side::Left)
        } else {
            (0.0, Side::Right)
        };
        if omega1 >= 1.0 - TIE_TOL {
            log::info!("omega path {istar}: starred dual on its bound at omega = 1");
            omega1 = 1.0;
        }
        if omega1 < 1.0 && opts.record {
            let mut anchor = w.solution();
            anchor.omega = 1.0;
            out.segments.push(OmegaSegment {
                omega_hi: 1.0,
                omega_lo: omega1,
                partition: w.part.clone(),
                elbow: w.gram.elbow().to_vec(),
                b0: 0.0,
                b: DVector::zeros(w.gram.len()),
                star_slope: 0.0,
                beta_slope: zero.beta.clone(),
                h: zero.h.clone(),
                anchor,
                entry_shift: 0.0,
            });
        }
        if omega1 == 0.0 {
            w.omega = 0.0;
            let mut terminal = w.solution();
            terminal.omega = 0.0;
            out.breakpoints.push(0.0);
            out.terminal = terminal;
            return Ok(out);
        }
        if omega1 < 1.0 {
            out.breakpoints.push(omega1);
        }
        w.omega = omega1;
        let pos = w.gram.position(istar).ok_or(Error::Contract("starred case missing from elbow"))?;
        if w.gram.len() == 1 {
            w.gram.clear();
        } else {
            w.gram.remove(pos)?;
        }
        w.part.set(istar, to);
        w.lres[istar] = 0.0;
        out.events += 1;
    }

    let mut since_sync = 0usize;
    let mut stalled = 0usize;
    loop {
        if w.gram.is_empty() {
            shift += w.refill_elbow()?;
        }
        let sl = slopes(data, cfg, &w.part, istar, &w.gram)?;
        let (next, ev) = {
            let st = StepState {
                tau,
                omega: w.omega,
                istar,
                partition: &w.part,
                elbow: w.gram.elbow(),
                theta: &w.theta,
                scaled_residuals: &w.lres,
                b: &sl.b,
                h: &sl.h,
            };
            next_breakpoint(&st)
        };
        let fresh = next < w.omega * (1.0 - TIE_TOL);
        let next = if fresh { next } else { w.omega };
        if fresh {
            if opts.record {
                out.segments.push(OmegaSegment {
                    omega_hi: w.omega,
                    omega_lo: next,
                    partition: w.part.clone(),
                    elbow: w.gram.elbow().to_vec(),
                    b0: sl.b0,
                    b: sl.b.clone(),
                    star_slope: w.c(),
                    beta_slope: sl.beta.clone(),
                    h: sl.h.clone(),
                    anchor: w.solution(),
                    entry_shift: shift,
                });
            }
            shift = 0.0;
            stalled = 0;
        } else {
            stalled += 1;
        }
        w.advance(&sl, next);
        if ev == Event::Terminal {
            break;
        }
        out.events += 1;
        if out.events > cap {
            return Err(Error::Divergence { limit: cap });
        }
        w.apply(ev)?;
        out.max_elbow = out.max_elbow.max(w.gram.len());
        if fresh {
            if next > 0.0 {
                out.breakpoints.push(next);
            }
            since_sync += 1;
            if since_sync >= RESYNC_EVERY && !w.gram.is_empty() {
                w.resync()?;
                since_sync = 0;
            }
        }
        let mut drifted = !w.gram.is_empty() && w.quick_check() > KKT_TOL;
        if drifted && stalled <= n + p {
            // Accumulated rounding first; the partition itself may still be right.
            w.resync()?;
            since_sync = 0;
            drifted = w.quick_check() > KKT_TOL;
        }
        if stalled > n + p || drifted {
            log::warn!("omega path {istar}: re-solving at omega = {:e} after an ambiguous event", w.omega);
            w.recover()?;
            out.fallbacks += 1;
            stalled = 0;
            if w.quick_check() > KKT_TOL {
                return Err(Error::Certificate { residual: w.quick_check(), at: w.omega });
            }
        }
        if w.omega == 0.0 {
            break;
        }
    }
    if w.gram.is_empty() {
        w.refill_elbow()?;
    }
    w.omega = 0.0;
    w.resync()?;
    let terminal = w.solution();
    let kkt = kkt_residual(&terminal, data, cfg)? / data.scale();
    if kkt > KKT_TOL {
        return Err(Error::Certificate { residual: kkt, at: 0.0 });
    }
    out.breakpoints.push(0.0);
    out.terminal = terminal;
    Ok(out)
}

fn check_full(data: &Dataset, cfg: &FitConfig, istar: usize, full: &QuantileSolution) -> Result<()> {
    if istar >= data.n() {
        return Err(Error::InvalidInput(alloc::format!("case {istar} out of range")));
    }
    if full.omega != 1.0 {
        return Err(Error::InvalidInput("starting solution must be the full-data fit".into()));
    }
    let kkt = kkt_residual(full, data, cfg)? / data.scale();
    if kkt > KKT_TOL {
        return Err(Error::Certificate { residual: kkt, at: 1.0 });
    }
    Ok(())
}

/// Builds the complete path for case `istar` from the full-data solution.
pub fn build_omega_path(data: &Dataset, cfg: &FitConfig, istar: usize, full: &QuantileSolution) -> Result<OmegaPath> {
    check_full(data, cfg, istar, full)?;
    let gram = ElbowGramInverse::for_elbow(data, &full.partition.elbow())?;
    build_omega_path_with(data, cfg, istar, full, gram)
}

/// As [`build_omega_path`], reusing a Gram inverse of the full-data elbow.
pub fn build_omega_path_with(
    data: &Dataset,
    cfg: &FitConfig,
    istar: usize,
    full: &QuantileSolution,
    gram: ElbowGramInverse,
) -> Result<OmegaPath> {
    let r = walk(data, cfg, istar, full, gram, WalkOpts { record: true })?;
    Ok(OmegaPath {
        istar,
        tau: cfg.tau,
        lambda: cfg.lambda,
        breakpoints: r.breakpoints,
        segments: r.segments,
        start: full.clone(),
        terminal: r.terminal,
        fallbacks: r.fallbacks,
        events: r.events,
    })
}

/// Walks the path without storing segments.
pub fn omega_terminal(
    data: &Dataset,
    cfg: &FitConfig,
    istar: usize,
    full: &QuantileSolution,
    gram: ElbowGramInverse,
) -> Result<OmegaOutcome> {
    let r = walk(data, cfg, istar, full, gram, WalkOpts { record: false })?;
    let interior = r.breakpoints.iter().filter(|&&w| w > 0.0 && w < 1.0).count();
    Ok(OmegaOutcome {
        terminal: r.terminal,
        interior_breakpoints: interior,
        events: r.events,
        fallbacks: r.fallbacks,
        max_elbow: r.max_elbow,
    })
}
