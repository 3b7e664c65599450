//! Shared fixtures and index-sum oracles for the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use netfit::{validate, ModuleAssignment, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric matrix with off-diagonal entries uniform in `[lo, hi]`.
pub fn random_weights(n: usize, lo: f64, hi: f64, seed: u64) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(lo..=hi);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    validate(a).unwrap()
}

pub fn random_modules(n: usize, k: usize, seed: u64) -> ModuleAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let ids = (0..n).map(|i| if i < k { i + 1 } else { rng.random_range(1..=k) }).collect();
    ModuleAssignment::new(ids).unwrap()
}

fn w(m: &WeightMatrix, i: usize, j: usize) -> f64 {
    m.get(i, j)
}

pub fn oracle_degree(m: &WeightMatrix, i: usize) -> f64 {
    (0..m.n()).map(|j| w(m, i, j)).sum()
}

pub fn oracle_mean_degree(m: &WeightMatrix) -> f64 {
    (0..m.n()).map(|i| oracle_degree(m, i)).sum::<f64>() / m.n() as f64
}

pub fn oracle_avg_neighbour_degree(m: &WeightMatrix, i: usize) -> f64 {
    let k = oracle_degree(m, i);
    if k == 0.0 {
        return 0.0;
    }
    (0..m.n()).map(|j| w(m, i, j) * oracle_degree(m, j)).sum::<f64>() / k
}

/// Closed weighted walks `i → j → k → i` and open two-paths `j − i − k`.
fn triangle_terms(m: &WeightMatrix, i: usize) -> (f64, f64) {
    let n = m.n();
    let (mut closed, mut open) = (0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            closed += w(m, i, j) * w(m, j, k) * w(m, k, i);
            if j != k {
                open += w(m, i, j) * w(m, i, k);
            }
        }
    }
    (closed, open)
}

pub fn oracle_transitivity(m: &WeightMatrix) -> f64 {
    let (mut closed, mut open) = (0.0, 0.0);
    for i in 0..m.n() {
        let (c, o) = triangle_terms(m, i);
        closed += c;
        open += o;
    }
    if open == 0.0 {
        0.0
    } else {
        closed / open
    }
}

pub fn oracle_clustering(m: &WeightMatrix, i: usize) -> f64 {
    let (c, o) = triangle_terms(m, i);
    if o == 0.0 {
        0.0
    } else {
        c / o
    }
}

pub fn oracle_global_clustering(m: &WeightMatrix) -> f64 {
    (0..m.n()).map(|i| oracle_clustering(m, i)).sum::<f64>() / m.n() as f64
}

pub fn oracle_modularity(m: &WeightMatrix, modules: &ModuleAssignment) -> f64 {
    let n = m.n();
    let l: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w(m, i, j)).sum();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if modules.module_of(i) == modules.module_of(j) {
                s += w(m, i, j) - oracle_degree(m, i) * oracle_degree(m, j) / l;
            }
        }
    }
    s / l
}
