//! Projected gradient descent on squared metric mismatch.
//!
//! The update is `W ← project(W − μ Σ_m e_m · df_m/dW)` with
//! `e_m = f_m(W) − K_m`. The factor 2 from differentiating `e_m²` is folded
//! into `μ`, so `μ` is half the step of plain gradient descent on the cost.
//! The same convention holds for the penalty of [`constrained_fit`]: its
//! quadratic term contributes `2λ(W − Y)` to the update direction.

use std::io::Write;

use ndarray::{Array2, Zip};

use crate::error::{NetError, Result};
use crate::gradients::{accumulate_partial, finish_gradient, GradientMatrix};
use crate::metrics::{MetricSpec, NetStats};
use crate::network::{check_square, frobenius_distance, project, MissingMask, WeightMatrix};

/// Cost improvements below this count as no progress.
const PLATEAU_DELTA: f64 = 1e-14;
/// Consecutive no-progress iterations before a run stops as a plateau.
const PLATEAU_PATIENCE: usize = 100;
/// Consecutive increases of the reconstruction error that abort a decomposition.
const STALL_PATIENCE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    /// Learning rate.
    pub mu: f64,
    /// Stop once the metric cost is at or below this value.
    pub eps: f64,
    pub max_iters: usize,
    /// Trace cadence; 0 records only the first and last iteration.
    pub log_every: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { mu: 1e-3, eps: 1e-8, max_iters: 50_000, log_every: 100 }
    }
}

impl DescentConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(NetError::InvalidParams(format!("learning rate must be positive, got {}", self.mu)));
        }
        if !(self.eps > 0.0) {
            return Err(NetError::InvalidParams(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iters == 0 {
            return Err(NetError::InvalidParams("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig {
    pub inner: DescentConfig,
    pub lambda0: f64,
    pub lambda_growth: f64,
    pub outer_max: usize,
    /// Stop once `‖W_f − (W_1 + W_2)‖_F²` is at or below this value.
    pub recon_eps: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            inner: DescentConfig::default(),
            lambda0: 0.1,
            lambda_growth: 1.05,
            outer_max: 50,
            recon_eps: 1e-6,
        }
    }
}

impl DecompositionConfig {
    pub fn check(&self) -> Result<()> {
        self.inner.check()?;
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(NetError::InvalidParams("lambda0 must be nonnegative".into()));
        }
        if !(self.lambda_growth >= 1.0 && self.lambda_growth.is_finite()) {
            return Err(NetError::InvalidParams("lambda_growth must be at least 1".into()));
        }
        if self.outer_max == 0 {
            return Err(NetError::InvalidParams("outer_max must be at least 1".into()));
        }
        if !(self.recon_eps > 0.0) {
            return Err(NetError::InvalidParams("recon_eps must be positive".into()));
        }
        Ok(())
    }

    /// Penalty used at outer iteration `t` (0-based).
    pub fn lambda_at(&self, t: usize) -> f64 {
        self.lambda0 * self.lambda_growth.powi(t as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `Σ_m e_m²`.
    pub cost: f64,
    /// Residuals `e_m = f_m(W) − K_m`, in target order.
    pub per_metric_error: Vec<f64>,
    /// Frobenius distance to the true network, when one was supplied.
    pub dist_to_reference: Option<f64>,
    /// `‖W_f − (W_1 + W_2)‖_F²` for decomposition traces.
    pub recon_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub w_hat: WeightMatrix,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub iters: usize,
}

impl FitResult {
    pub fn final_cost(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.cost)
    }
}

/// Optional knobs for [`denoise_with`].
#[derive(Debug, Clone, Default)]
pub struct DenoiseOptions<'a> {
    /// Only entries marked in this mask are updated.
    pub update_mask: Option<&'a MissingMask>,
    /// True network, used only to fill `dist_to_reference` in the trace.
    pub truth: Option<&'a WeightMatrix>,
}

fn check_targets(targets: &[MetricSpec], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(NetError::NoTargets);
    }
    targets.iter().try_for_each(|s| s.check(n))
}

fn residuals(stats: &NetStats, targets: &[MetricSpec]) -> Result<Vec<f64>> {
    targets.iter().map(|s| Ok(stats.value(s)? - s.target)).collect()
}

/// `Σ_m (f_m(W) − K_m)²`.
pub fn cost(w: &WeightMatrix, targets: &[MetricSpec]) -> Result<f64> {
    check_targets(targets, w.n())?;
    let stats = NetStats::for_specs(w.as_array(), targets);
    Ok(residuals(&stats, targets)?.iter().map(|e| e * e).sum())
}

fn gradient_from_residuals(
    stats: &NetStats,
    targets: &[MetricSpec],
    errors: &[f64],
) -> Result<GradientMatrix> {
    let n = stats.n();
    let mut acc = Array2::zeros((n, n));
    for (spec, &e) in targets.iter().zip(errors) {
        if e != 0.0 {
            accumulate_partial(&mut acc, spec, stats, e)?;
        }
    }
    Ok(finish_gradient(&acc))
}

/// `Σ_m e_m · df_m/dW`, half the gradient of [`cost`] on the space of
/// symmetric zero-diagonal matrices.
pub fn cost_gradient(w: &WeightMatrix, targets: &[MetricSpec]) -> Result<GradientMatrix> {
    check_targets(targets, w.n())?;
    let stats = NetStats::for_specs(w.as_array(), targets);
    let errors = residuals(&stats, targets)?;
    gradient_from_residuals(&stats, targets, &errors)
}

/// Quadratic tether `λ ‖W − Y‖_F²` used by [`constrained_fit`].
struct Penalty<'a> {
    reference: &'a Array2<f64>,
    lambda: f64,
}

struct Descent<'a> {
    targets: &'a [MetricSpec],
    cfg: &'a DescentConfig,
    mask: Option<&'a MissingMask>,
    truth: Option<&'a WeightMatrix>,
    penalty: Option<Penalty<'a>>,
}

struct Point {
    w: WeightMatrix,
    errors: Vec<f64>,
    cost: f64,
    objective: f64,
}

impl<'a> Descent<'a> {
    fn evaluate(&self, w: WeightMatrix) -> Result<(Point, GradientMatrix)> {
        let stats = NetStats::for_specs(w.as_array(), self.targets);
        let errors = residuals(&stats, self.targets)?;
        let cost: f64 = errors.iter().map(|e| e * e).sum();
        let mut direction = gradient_from_residuals(&stats, self.targets, &errors)?;
        let mut objective = cost;
        if let Some(p) = &self.penalty {
            let diff = w.as_array() - p.reference;
            objective += p.lambda * diff.iter().map(|d| d * d).sum::<f64>();
            direction.scaled_add(2.0 * p.lambda, &diff);
        }
        drop(stats);
        Ok((Point { w, errors, cost, objective }, direction))
    }

    fn record(&self, iter: usize, p: &Point) -> TraceRecord {
        TraceRecord {
            iter,
            cost: p.cost,
            per_metric_error: p.errors.clone(),
            dist_to_reference: self.truth.map(|t| t.frobenius_distance(&p.w)),
            recon_error: None,
        }
    }

    fn step(&self, current: &WeightMatrix, direction: &GradientMatrix) -> Result<WeightMatrix> {
        let mu = self.cfg.mu;
        let mut next = current.as_array().clone();
        match self.mask {
            None => next.scaled_add(-mu, direction),
            Some(mask) => Zip::indexed(&mut next).and(direction).for_each(|(i, j), v, &d| {
                if mask.is_missing(i, j) {
                    *v -= mu * d;
                }
            }),
        }
        let mut projected = project(&next)?;
        if let Some(mask) = self.mask {
            // observed entries stay bit-identical
            let mut a = projected.into_inner();
            Zip::indexed(&mut a).and(current.as_array()).for_each(|(i, j), v, &old| {
                if !mask.is_missing(i, j) {
                    *v = old;
                }
            });
            projected = WeightMatrix::from_projected(a);
        }
        Ok(projected)
    }

    fn run(&self, start: WeightMatrix) -> Result<FitResult> {
        self.cfg.check()?;
        let (mut point, mut direction) = self.evaluate(start)?;
        if !point.objective.is_finite() {
            return Err(NetError::NonFiniteCost { iter: 0 });
        }
        let mut trace = vec![self.record(0, &point)];
        let mut converged = point.cost <= self.cfg.eps;
        let mut iters = 0;
        let mut flat = 0;
        while !converged && iters < self.cfg.max_iters {
            let next = self.step(&point.w, &direction)?;
            let (next_point, next_direction) = self.evaluate(next)?;
            iters += 1;
            if !next_point.objective.is_finite() {
                return Err(NetError::NonFiniteCost { iter: iters });
            }
            if point.objective - next_point.objective < PLATEAU_DELTA {
                flat += 1;
            } else {
                flat = 0;
            }
            point = next_point;
            direction = next_direction;
            converged = point.cost <= self.cfg.eps;
            let last = converged || flat >= PLATEAU_PATIENCE || iters == self.cfg.max_iters;
            if last || (self.cfg.log_every > 0 && iters % self.cfg.log_every == 0) {
                trace.push(self.record(iters, &point));
            }
            if flat >= PLATEAU_PATIENCE {
                break;
            }
        }
        Ok(FitResult { w_hat: point.w, trace, converged, iters })
    }
}

/// Denoises `w_e` towards the metric targets.
pub fn denoise(w_e: &WeightMatrix, targets: &[MetricSpec], cfg: &DescentConfig) -> Result<FitResult> {
    denoise_with(w_e, targets, cfg, &DenoiseOptions::default())
}

pub fn denoise_with(
    w_e: &WeightMatrix,
    targets: &[MetricSpec],
    cfg: &DescentConfig,
    opts: &DenoiseOptions,
) -> Result<FitResult> {
    let n = w_e.n();
    check_targets(targets, n)?;
    if let Some(m) = opts.update_mask {
        if m.n() != n {
            return Err(NetError::ShapeMismatch { expected: n, found: m.n() });
        }
    }
    if let Some(t) = opts.truth {
        if t.n() != n {
            return Err(NetError::ShapeMismatch { expected: n, found: t.n() });
        }
    }
    Descent { targets, cfg, mask: opts.update_mask, truth: opts.truth, penalty: None }.run(w_e.clone())
}

fn check_reference(y: &Array2<f64>) -> Result<usize> {
    let n = check_square(y)?;
    for i in 0..n {
        for j in i..n {
            if !y[[i, j]].is_finite() {
                return Err(NetError::NonFinite { row: i, col: j });
            }
            if (y[[i, j]] - y[[j, i]]).abs() > crate::network::SYMMETRY_TOL {
                return Err(NetError::Asymmetric { row: i, col: j });
            }
        }
    }
    Ok(n)
}

/// Minimizes `Σ_m e_m² + λ ‖W − Y‖_F²` starting from the projection of `Y`.
///
/// `Y` may leave `[0, 1]` (it is typically `W_f − W_2`), but it must be
/// square, finite and symmetric.
pub fn constrained_fit(
    y: &Array2<f64>,
    targets: &[MetricSpec],
    lambda: f64,
    cfg: &DescentConfig,
) -> Result<FitResult> {
    let n = check_reference(y)?;
    check_targets(targets, n)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(NetError::InvalidParams(format!("lambda must be nonnegative, got {lambda}")));
    }
    let penalty = (lambda > 0.0).then_some(Penalty { reference: y, lambda });
    Descent { targets, cfg, mask: None, truth: None, penalty }.run(project(y)?)
}

/// Value of the constrained objective, `Σ_m e_m² + λ ‖W − Y‖_F²`.
pub fn constrained_objective(
    w: &WeightMatrix,
    y: &Array2<f64>,
    targets: &[MetricSpec],
    lambda: f64,
) -> Result<f64> {
    Ok(cost(w, targets)? + lambda * frobenius_distance(w.as_array(), y).powi(2))
}

/// Outcome of [`decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Estimate of the first network. Its trace has one record per outer
    /// iteration, with `recon_error` filled in.
    pub first: FitResult,
    pub second: FitResult,
    /// The denoise-only estimates used as initialization.
    pub init_first: WeightMatrix,
    pub init_second: WeightMatrix,
    /// Reconstruction error after initialization and after every outer iteration.
    pub recon_errors: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
}

fn reconstruction_error(w_f: &Array2<f64>, a: &WeightMatrix, b: &WeightMatrix) -> f64 {
    let mut s = 0.0;
    Zip::from(w_f).and(a.as_array()).and(b.as_array()).for_each(|&f, &x, &y| {
        let d = f - x - y;
        s += d * d;
    });
    s
}

fn outer_record(iter: usize, fit: &FitResult, recon: f64) -> TraceRecord {
    let last = fit.trace.last().expect("descent records at least one point");
    TraceRecord {
        iter,
        cost: last.cost,
        per_metric_error: last.per_metric_error.clone(),
        dist_to_reference: None,
        recon_error: Some(recon),
    }
}

/// Splits a mixture `W_f ≈ W_1 + W_2` by alternating constrained fits.
///
/// Both estimates start from denoising `project(W_f)` with their own targets.
/// The penalty grows geometrically, `λ_t = λ_0 · growth^t`.
pub fn decompose(
    w_f: &Array2<f64>,
    targets1: &[MetricSpec],
    targets2: &[MetricSpec],
    cfg: &DecompositionConfig,
) -> Result<Decomposition> {
    cfg.check()?;
    let n = check_reference(w_f)?;
    check_targets(targets1, n)?;
    check_targets(targets2, n)?;
    let start = project(w_f)?;
    let init1 = denoise(&start, targets1, &cfg.inner)?;
    let init2 = denoise(&start, targets2, &cfg.inner)?;
    decompose_from(w_f, targets1, targets2, cfg, init1, init2)
}

/// Alternating stage of [`decompose`] from given initial fits.
pub fn decompose_from(
    w_f: &Array2<f64>,
    targets1: &[MetricSpec],
    targets2: &[MetricSpec],
    cfg: &DecompositionConfig,
    init1: FitResult,
    init2: FitResult,
) -> Result<Decomposition> {
    cfg.check()?;
    let n = check_reference(w_f)?;
    for w in [&init1.w_hat, &init2.w_hat] {
        if w.n() != n {
            return Err(NetError::ShapeMismatch { expected: n, found: w.n() });
        }
    }
    let init_first = init1.w_hat.clone();
    let init_second = init2.w_hat.clone();
    let mut recon = reconstruction_error(w_f, &init1.w_hat, &init2.w_hat);
    let mut recon_errors = vec![recon];
    let mut trace1 = vec![outer_record(0, &init1, recon)];
    let mut trace2 = vec![outer_record(0, &init2, recon)];
    let mut fit1 = init1;
    let mut fit2 = init2;
    let mut outer = 0;
    let mut rising = 0;
    while recon > cfg.recon_eps && outer < cfg.outer_max {
        let lambda = cfg.lambda_at(outer);
        let y1 = w_f - fit2.w_hat.as_array();
        fit1 = constrained_fit(&y1, targets1, lambda, &cfg.inner)?;
        let y2 = w_f - fit1.w_hat.as_array();
        fit2 = constrained_fit(&y2, targets2, lambda, &cfg.inner)?;
        outer += 1;
        let next = reconstruction_error(w_f, &fit1.w_hat, &fit2.w_hat);
        rising = if next > recon { rising + 1 } else { 0 };
        recon = next;
        recon_errors.push(recon);
        trace1.push(outer_record(outer, &fit1, recon));
        trace2.push(outer_record(outer, &fit2, recon));
        if rising >= STALL_PATIENCE {
            return Err(NetError::ScheduleStall { streak: rising });
        }
    }
    let converged = recon <= cfg.recon_eps;
    let first = FitResult { w_hat: fit1.w_hat, trace: trace1, converged, iters: outer };
    let second = FitResult { w_hat: fit2.w_hat, trace: trace2, converged, iters: outer };
    Ok(Decomposition { first, second, init_first, init_second, recon_errors, outer_iters: outer, converged })
}

/// Fills the masked entries of `w_ic` with `w_init`.
pub fn initialize_missing(w_ic: &WeightMatrix, mask: &MissingMask, w_init: f64) -> Result<WeightMatrix> {
    if mask.n() != w_ic.n() {
        return Err(NetError::ShapeMismatch { expected: w_ic.n(), found: mask.n() });
    }
    if !(0.0..=1.0).contains(&w_init) {
        return Err(NetError::InvalidParams(format!("w_init must lie in [0, 1], got {w_init}")));
    }
    let mut a = w_ic.as_array().clone();
    for (i, j) in mask.pairs() {
        a[[i, j]] = w_init;
        a[[j, i]] = w_init;
    }
    Ok(WeightMatrix::from_projected(a))
}

/// Completes the masked entries of `w_ic`; observed entries are never changed.
pub fn complete(
    w_ic: &WeightMatrix,
    mask: &MissingMask,
    targets: &[MetricSpec],
    w_init: f64,
    cfg: &DescentConfig,
) -> Result<FitResult> {
    complete_with(w_ic, mask, targets, w_init, cfg, None)
}

pub fn complete_with(
    w_ic: &WeightMatrix,
    mask: &MissingMask,
    targets: &[MetricSpec],
    w_init: f64,
    cfg: &DescentConfig,
    truth: Option<&WeightMatrix>,
) -> Result<FitResult> {
    if mask.is_empty() {
        return Err(NetError::EmptyMask);
    }
    let start = initialize_missing(w_ic, mask, w_init)?;
    denoise_with(&start, targets, cfg, &DenoiseOptions { update_mask: Some(mask), truth })
}

/// Writes a trace as CSV with header `iter,cost,recon_error,dist_to_truth`.
pub fn write_trace_csv<W: Write>(out: &mut W, trace: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(out, "iter,cost,recon_error,dist_to_truth")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in trace {
        writeln!(out, "{},{},{},{}", r.iter, r.cost, opt(r.recon_error), opt(r.dist_to_reference))?;
    }
    Ok(())
}

/// Plain-text summary: one `key = value` line each.
pub fn summary(result: &FitResult) -> String {
    format!(
        "converged = {}\niterations = {}\nfinal_cost = {}\n",
        result.converged,
        result.iters,
        result.final_cost()
    )
}
