//! Error measures and the synthetic experiment sweeps.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::estimators::{complete, decompose, denoise, initialize_missing, DecompositionConfig, DescentConfig};
use crate::generators::{add_noise, derive_seed, random_mask, GeneratorSpec};
use crate::metrics::{targets_from_reference, MetricKind};
use crate::network::{ModuleAssignment, WeightMatrix};

/// `1 − ‖Ŵ − W‖_F / ‖W_ref − W‖_F`. 1 is perfect recovery, negative means
/// the estimate is further from the truth than the reference.
pub fn error_reduction(w_hat: &WeightMatrix, w_true: &WeightMatrix, w_ref: &WeightMatrix) -> Result<f64> {
    let n = w_true.n();
    for w in [w_hat, w_ref] {
        if w.n() != n {
            return Err(NetError::ShapeMismatch { expected: n, found: w.n() });
        }
    }
    let reference = w_ref.frobenius_distance(w_true);
    if reference == 0.0 {
        return Err(NetError::ZeroReferenceError);
    }
    Ok(1.0 - w_hat.frobenius_distance(w_true) / reference)
}

/// Further reduction of a decomposition estimate over the denoise-only estimate.
pub fn decomposition_reduction(
    w_dec: &WeightMatrix,
    w_den: &WeightMatrix,
    w_true: &WeightMatrix,
) -> Result<f64> {
    error_reduction(w_dec, w_true, w_den)
}

/// Mean squared difference over off-diagonal entries.
pub fn mse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(NetError::ShapeMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let n = a.nrows();
    if n < 2 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = a[[i, j]] - b[[i, j]];
                s += d * d;
            }
        }
    }
    Ok(s / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Denoise,
    Decompose,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Sigma,
    N,
    MissingFrac,
}

/// A named group of metric kinds used together as targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSet {
    pub name: String,
    pub metrics: Vec<MetricKind>,
    /// Targets for the second network of a decomposition.
    #[serde(default)]
    pub second: Option<Vec<MetricKind>>,
    /// Learning-rate override for this set.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

impl MetricSet {
    pub fn new(name: &str, metrics: &[MetricKind]) -> Self {
        MetricSet { name: name.to_string(), metrics: metrics.to_vec(), second: None, mu: None, max_iters: None }
    }

    pub fn with_second(mut self, metrics: &[MetricKind]) -> Self {
        self.second = Some(metrics.to_vec());
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    fn descent(&self, base: &DescentConfig) -> DescentConfig {
        DescentConfig {
            mu: self.mu.unwrap_or(base.mu),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            log_every: 0,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentSection {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_mu() -> f64 {
    DescentConfig::default().mu
}
fn default_eps() -> f64 {
    DescentConfig::default().eps
}
fn default_max_iters() -> usize {
    DescentConfig::default().max_iters
}

impl Default for DescentSection {
    fn default() -> Self {
        let d = DescentConfig::default();
        DescentSection { mu: d.mu, eps: d.eps, max_iters: d.max_iters }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSection {
    pub lambda0: f64,
    pub lambda_growth: f64,
    pub outer_max: usize,
    pub recon_eps: f64,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        let d = DecompositionConfig::default();
        DecompositionSection {
            lambda0: d.lambda0,
            lambda_growth: d.lambda_growth,
            outer_max: d.outer_max,
            recon_eps: d.recon_eps,
        }
    }
}

/// One experiment: a scheme, a truth generator, metric sets to compare, and
/// the variable swept.
///
/// Truth networks depend on `(base_seed, realization)` only, so every sweep
/// value and metric set of one realization sees the same truth. Noise and
/// masks also depend on the sweep value index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub generator: GeneratorSpec,
    /// Second constituent network for decomposition sweeps.
    #[serde(default)]
    pub second_generator: Option<GeneratorSpec>,
    #[serde(rename = "metric_set")]
    pub metric_sets: Vec<MetricSet>,
    pub sweep_var: SweepVar,
    pub sweep_values: Vec<f64>,
    pub realizations: usize,
    pub base_seed: u64,
    /// Noise level when `sigma` is not the swept variable.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Missing fraction when it is not the swept variable.
    #[serde(default = "default_missing_frac")]
    pub missing_frac: f64,
    #[serde(default = "default_w_init")]
    pub w_init: f64,
    #[serde(default)]
    pub descent: DescentSection,
    #[serde(default)]
    pub decomposition: DecompositionSection,
}

fn default_sigma() -> f64 {
    0.5
}
fn default_missing_frac() -> f64 {
    0.1
}
fn default_w_init() -> f64 {
    0.5
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| NetError::Parse(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| NetError::Parse(e.to_string()))
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(NetError::InvalidParams(m));
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.sweep_values.is_empty() {
            return bad("sweep_values is empty".into());
        }
        if self.sweep_values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("sweep_values must be strictly increasing".into());
        }
        if self.metric_sets.is_empty() {
            return bad("at least one metric_set is required".into());
        }
        for set in &self.metric_sets {
            if set.metrics.is_empty() {
                return bad(format!("metric set '{}' is empty", set.name));
            }
            if self.scheme == Scheme::Decompose && set.second.as_ref().is_none_or(|s| s.is_empty()) {
                return bad(format!("metric set '{}' needs 'second' metrics for decomposition", set.name));
            }
        }
        match (self.scheme, self.sweep_var) {
            (Scheme::Decompose, SweepVar::N) => {}
            (Scheme::Decompose, v) => return bad(format!("decomposition sweeps support sweep_var = n only, got {v:?}")),
            (Scheme::Denoise, SweepVar::MissingFrac) => return bad("denoise sweeps cannot sweep missing_frac".into()),
            (Scheme::Complete, SweepVar::Sigma) => return bad("completion sweeps cannot sweep sigma".into()),
            _ => {}
        }
        if self.scheme == Scheme::Decompose && self.second_generator.is_none() {
            return bad("decomposition sweeps need second_generator".into());
        }
        if self.sweep_var == SweepVar::N && self.sweep_values.iter().any(|v| v.fract() != 0.0 || *v < 3.0) {
            return bad("n sweep values must be integers >= 3".into());
        }
        if self.scheme == Scheme::Complete {
            let fracs: Vec<f64> = match self.sweep_var {
                SweepVar::MissingFrac => self.sweep_values.clone(),
                _ => vec![self.missing_frac],
            };
            if fracs.iter().any(|&f| f <= 0.0) {
                return Err(NetError::EmptyMask);
            }
        }
        Ok(())
    }

    fn base_descent(&self) -> DescentConfig {
        DescentConfig {
            mu: self.descent.mu,
            eps: self.descent.eps,
            max_iters: self.descent.max_iters,
            log_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub metric_set: String,
    pub mean_er: f64,
    pub std_er: f64,
    pub realizations: usize,
    /// Per-realization values, in realization order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, sweep_value: f64, metric_set: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.metric_set == metric_set)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "sweep_value,metric_set,mean_er,std_er,realizations")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.sweep_value, r.metric_set, r.mean_er, r.std_er, r.realizations)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

/// Pairwise summation in index order.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(v) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1) as f64).sqrt())
}

struct Truth {
    w: WeightMatrix,
    modules: Option<ModuleAssignment>,
}

fn generate_truth(gen: &GeneratorSpec, n: usize, seed: u64) -> Result<Truth> {
    let (w, modules) = gen.with_n(n).with_seed(seed).generate()?;
    Ok(Truth { w, modules })
}

/// Runs every (sweep value, realization, metric set) combination.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.check()?;
    let base = spec.base_descent();
    let mut rows = Vec::new();
    for (vi, &value) in spec.sweep_values.iter().enumerate() {
        let n = match spec.sweep_var {
            SweepVar::N => value as usize,
            _ => spec.generator.n,
        };
        let mut per_set: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.realizations); spec.metric_sets.len()];
        for r in 0..spec.realizations {
            let values = run_realization(spec, &base, vi, value, n, r as u64)?;
            for (k, v) in values.into_iter().enumerate() {
                per_set[k].push(v);
            }
        }
        for (set, values) in spec.metric_sets.iter().zip(per_set) {
            let (mean_er, std_er) = mean_std(&values);
            rows.push(SweepRow {
                sweep_value: value,
                metric_set: set.name.clone(),
                mean_er,
                std_er,
                realizations: values.len(),
                values,
            });
        }
    }
    Ok(SweepTable { rows })
}

/// Error reduction of every metric set for one realization.
fn run_realization(
    spec: &SweepSpec,
    base: &DescentConfig,
    vi: usize,
    value: f64,
    n: usize,
    r: u64,
) -> Result<Vec<f64>> {
    let seed = spec.base_seed;
    let truth = generate_truth(&spec.generator, n, derive_seed(seed, &[0, r]))?;
    match spec.scheme {
        Scheme::Denoise => {
            let sigma = if spec.sweep_var == SweepVar::Sigma { value } else { spec.sigma };
            let noisy = add_noise(&truth.w, sigma, derive_seed(seed, &[2, r, vi as u64]))?;
            spec.metric_sets
                .iter()
                .map(|set| {
                    let targets = targets_from_reference(&truth.w, &set.metrics, truth.modules.as_ref())?;
                    let fit = denoise(&noisy, &targets, &set.descent(base))?;
                    error_reduction(&fit.w_hat, &truth.w, &noisy)
                })
                .collect()
        }
        Scheme::Complete => {
            let frac = if spec.sweep_var == SweepVar::MissingFrac { value } else { spec.missing_frac };
            let mask = random_mask(n, frac, derive_seed(seed, &[3, r, vi as u64]))?;
            let start = initialize_missing(&truth.w, &mask, spec.w_init)?;
            spec.metric_sets
                .iter()
                .map(|set| {
                    let targets = targets_from_reference(&truth.w, &set.metrics, truth.modules.as_ref())?;
                    let fit = complete(&start, &mask, &targets, spec.w_init, &set.descent(base))?;
                    error_reduction(&fit.w_hat, &truth.w, &start)
                })
                .collect()
        }
        Scheme::Decompose => {
            let gen2 = spec.second_generator.as_ref().expect("checked");
            let second = generate_truth(gen2, n, derive_seed(seed, &[1, r]))?;
            let mixture = truth.w.as_array() + second.w.as_array();
            spec.metric_sets
                .iter()
                .map(|set| {
                    let kinds2 = set.second.as_deref().expect("checked");
                    let t1 = targets_from_reference(&truth.w, &set.metrics, truth.modules.as_ref())?;
                    let t2 = targets_from_reference(&second.w, kinds2, second.modules.as_ref())?;
                    let cfg = DecompositionConfig {
                        inner: set.descent(base),
                        lambda0: spec.decomposition.lambda0,
                        lambda_growth: spec.decomposition.lambda_growth,
                        outer_max: spec.decomposition.outer_max,
                        recon_eps: spec.decomposition.recon_eps,
                    };
                    let dec = decompose(&mixture, &t1, &t2, &cfg)?;
                    let er1 = decomposition_reduction(&dec.first.w_hat, &dec.init_first, &truth.w)?;
                    let er2 = decomposition_reduction(&dec.second.w_hat, &dec.init_second, &second.w)?;
                    Ok(0.5 * (er1 + er2))
                })
                .collect()
        }
    }
}
