//! Seeded synthetic networks and noise injection.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so output is
//! bit-identical across platforms for a given seed. Pairs are visited
//! row-major over the upper triangle.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::network::{MissingMask, ModuleAssignment, WeightMatrix};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with stream indices (splitmix64 finalizer per step).
pub fn derive_seed(base: u64, streams: &[u64]) -> u64 {
    let mut x = base;
    for &s in streams {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(s.wrapping_mul(0xD1B5_4A32_D192_ED03));
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    RandomComplete,
    ScaleFree,
    Modular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub avg_degree: Option<f64>,
    #[serde(default)]
    pub modules: Option<usize>,
    #[serde(default)]
    pub in_module_frac: Option<f64>,
}

impl GeneratorSpec {
    pub fn random_complete(n: usize, seed: u64) -> Self {
        GeneratorSpec { kind: GeneratorKind::RandomComplete, n, seed, avg_degree: None, modules: None, in_module_frac: None }
    }

    pub fn scale_free(n: usize, avg_degree: f64, seed: u64) -> Self {
        GeneratorSpec { avg_degree: Some(avg_degree), kind: GeneratorKind::ScaleFree, ..Self::random_complete(n, seed) }
    }

    pub fn modular(n: usize, modules: usize, in_module_frac: f64, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Modular,
            modules: Some(modules),
            in_module_frac: Some(in_module_frac),
            ..Self::random_complete(n, seed)
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        GeneratorSpec { n, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorSpec { seed, ..self.clone() }
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 3 {
            return Err(NetError::InvalidParams(format!("generators need n >= 3, got {}", self.n)));
        }
        let missing = |what: &str| NetError::InvalidParams(format!("{:?} generator needs {what}", self.kind));
        match self.kind {
            GeneratorKind::RandomComplete => {}
            GeneratorKind::ScaleFree => {
                self.avg_degree.ok_or_else(|| missing("avg_degree"))?;
            }
            GeneratorKind::Modular => {
                self.modules.ok_or_else(|| missing("modules"))?;
                let f = self.in_module_frac.ok_or_else(|| missing("in_module_frac"))?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(NetError::InvalidParams(format!("in_module_frac must lie in (0, 1], got {f}")));
                }
            }
        }
        Ok(())
    }

    /// Generates the network; modular specs also return the module assignment.
    pub fn generate(&self) -> Result<(WeightMatrix, Option<ModuleAssignment>)> {
        self.check()?;
        match self.kind {
            GeneratorKind::RandomComplete => Ok((random_complete(self.n, self.seed)?, None)),
            GeneratorKind::ScaleFree => {
                Ok((scale_free(self.n, self.avg_degree.unwrap_or_default(), self.seed)?, None))
            }
            GeneratorKind::Modular => {
                let (w, m) = modular(
                    self.n,
                    self.modules.unwrap_or_default(),
                    self.in_module_frac.unwrap_or_default(),
                    self.seed,
                )?;
                Ok((w, Some(m)))
            }
        }
    }
}

fn symmetric_from_pairs(n: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = weight(i, j);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    a
}

/// Every pair gets an independent `U[0, 1)` weight.
pub fn random_complete(n: usize, seed: u64) -> Result<WeightMatrix> {
    if n < 2 {
        return Err(NetError::InvalidParams(format!("random_complete needs n >= 2, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    Ok(WeightMatrix::from_projected(symmetric_from_pairs(n, |_, _| rng.random::<f64>())))
}

/// Preferential attachment scaffold with `U[0, 1)` weights on its edges.
///
/// Growth starts from a clique on `m_hi + 1` nodes, where `m_hi` is
/// `ceil(avg_degree / 2)`. Every later node attaches `m` distinct edges with
/// probability proportional to current binary degree, where `m` is
/// `floor(avg_degree / 2)` or `m_hi`, chosen at random so the expected mean
/// binary degree tracks `avg_degree`.
pub fn scale_free(n: usize, avg_degree: f64, seed: u64) -> Result<WeightMatrix> {
    if !(avg_degree >= 1.0) || avg_degree >= n as f64 {
        return Err(NetError::InvalidParams(format!(
            "scale_free needs 1 <= avg_degree < n, got avg_degree {avg_degree}, n {n}"
        )));
    }
    let half = avg_degree / 2.0;
    let m_lo = half.floor() as usize;
    let m_hi = half.ceil() as usize;
    let p_hi = half - m_lo as f64;
    let core = (m_hi + 1).min(n);

    let mut rng = rng_from_seed(seed);
    let mut adj = vec![vec![false; n]; n];
    // each edge endpoint appears once per incident edge
    let mut endpoints: Vec<usize> = Vec::new();
    for i in 0..core {
        for j in (i + 1)..core {
            adj[i][j] = true;
            adj[j][i] = true;
            endpoints.extend([i, j]);
        }
    }
    for v in core..n {
        let m = if m_lo == m_hi || rng.random::<f64>() >= p_hi { m_lo } else { m_hi };
        let m = m.max(1).min(v);
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            let u = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        for u in chosen {
            adj[v][u] = true;
            adj[u][v] = true;
            endpoints.extend([u, v]);
        }
    }
    let mut weights = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i][j] {
                let w = rng.random::<f64>();
                weights[[i, j]] = w;
                weights[[j, i]] = w;
            }
        }
    }
    Ok(WeightMatrix::from_projected(weights))
}

/// Splits `n` nodes into `k` contiguous blocks whose sizes differ by at most one.
pub fn equal_modules(n: usize, k: usize) -> Result<ModuleAssignment> {
    if k == 0 || k > n {
        return Err(NetError::InvalidParams(format!("cannot split {n} nodes into {k} modules")));
    }
    ModuleAssignment::new((0..n).map(|i| i * k / n + 1).collect())
}

/// Block-modular network.
///
/// Every within-module pair carries a nonzero `U[0, 1)` weight. Enough
/// between-module pairs are then switched on, chosen uniformly, that the
/// within-module share of nonzero edges is `in_module_frac` (limited by the
/// number of between-module pairs available).
pub fn modular(
    n: usize,
    n_modules: usize,
    in_module_frac: f64,
    seed: u64,
) -> Result<(WeightMatrix, ModuleAssignment)> {
    if !(in_module_frac > 0.0 && in_module_frac <= 1.0) {
        return Err(NetError::InvalidParams(format!("in_module_frac must lie in (0, 1], got {in_module_frac}")));
    }
    let modules = equal_modules(n, n_modules)?;
    let mut inside = Vec::new();
    let mut between = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if modules.module_of(i) == modules.module_of(j) {
                inside.push((i, j));
            } else {
                between.push((i, j));
            }
        }
    }
    if inside.is_empty() {
        return Err(NetError::InvalidParams("modules must contain at least two nodes".into()));
    }
    let wanted = (inside.len() as f64 * (1.0 - in_module_frac) / in_module_frac).round() as usize;
    let wanted = wanted.min(between.len());

    let mut rng = rng_from_seed(seed);
    let mut on = vec![false; n * n];
    for &(i, j) in &inside {
        on[i * n + j] = true;
    }
    let mut picked = sample(&mut rng, between.len(), wanted).into_vec();
    picked.sort_unstable();
    for k in picked {
        let (i, j) = between[k];
        on[i * n + j] = true;
    }
    let a = symmetric_from_pairs(n, |i, j| if on[i * n + j] { rng.random::<f64>() } else { 0.0 });
    Ok((WeightMatrix::from_projected(a), modules))
}

/// `W_e = W + σE` with symmetric standard normal `E`, negatives clamped to
/// zero, then divided by the maximum entry.
///
/// Normalization happens even when `σ = 0`.
pub fn add_noise(w: &WeightMatrix, sigma: f64, seed: u64) -> Result<WeightMatrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(NetError::InvalidParams(format!("sigma must be nonnegative, got {sigma}")));
    }
    let n = w.n();
    let mut rng = rng_from_seed(seed);
    let mut a = symmetric_from_pairs(n, |i, j| {
        let e: f64 = rng.sample(StandardNormal);
        (w.get(i, j) + sigma * e).max(0.0)
    });
    let max = a.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(NetError::DegenerateAllZero);
    }
    a.mapv_inplace(|v| v / max);
    Ok(WeightMatrix::from_projected(a))
}

/// Uniformly chosen set of `round(frac · n(n−1)/2)` missing pairs.
pub fn random_mask(n: usize, frac: f64, seed: u64) -> Result<MissingMask> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(NetError::InvalidParams(format!("missing fraction must lie in [0, 1], got {frac}")));
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let count = (frac * pairs.len() as f64).round() as usize;
    let mut rng = rng_from_seed(seed);
    let mut picked = sample(&mut rng, pairs.len(), count).into_vec();
    picked.sort_unstable();
    let chosen: Vec<(usize, usize)> = picked.into_iter().map(|k| pairs[k]).collect();
    MissingMask::from_pairs(n, &chosen)
}

/// Binary degree (number of nonzero incident weights) of every node.
pub fn binary_degrees(w: &WeightMatrix) -> Vec<usize> {
    w.as_array().rows().into_iter().map(|r| r.iter().filter(|&&v| v > 0.0).count()).collect()
}
