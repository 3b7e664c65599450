//! Dense weighted undirected networks and the constant matrices used by the
//! metric derivatives.
//!
//! Node indices are 0-based throughout the library. File formats and the CLI
//! use 1-based indices and convert at the boundary.

use ndarray::Array2;

use crate::error::{NetError, Result};

/// Absolute tolerance on `|w_ij - w_ji|` accepted by [`validate`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric, zero-diagonal weight matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Array2<f64>);

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        WeightMatrix(Array2::zeros((n, n)))
    }

    /// Unit-weight complete graph (the `H_n` pattern).
    pub fn complete(n: usize) -> Self {
        WeightMatrix(ones_off_diagonal(n))
    }

    /// Wraps a matrix the caller guarantees is already valid. Only used
    /// internally after [`project`].
    pub(crate) fn from_projected(a: Array2<f64>) -> Self {
        debug_assert!(validate(a.clone()).is_ok());
        WeightMatrix(a)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Sum of all entries, `tr{W O_n}`.
    pub fn total_weight(&self) -> f64 {
        self.0.sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Frobenius distance to another matrix of the same size.
    pub fn frobenius_distance(&self, other: &WeightMatrix) -> f64 {
        frobenius_distance(&self.0, &other.0)
    }
}

impl AsRef<Array2<f64>> for WeightMatrix {
    fn as_ref(&self) -> &Array2<f64> {
        &self.0
    }
}

pub(crate) fn frobenius_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn check_square(a: &Array2<f64>) -> Result<usize> {
    let (rows, cols) = a.dim();
    if rows != cols || rows == 0 {
        return Err(NetError::NotSquare { rows, cols });
    }
    Ok(rows)
}

/// Checks the network invariants and wraps the matrix.
///
/// Entries are scanned row-major over the upper triangle (including the
/// diagonal) so the first offending position is reported.
pub fn validate(a: Array2<f64>) -> Result<WeightMatrix> {
    let n = check_square(&a)?;
    for i in 0..n {
        for j in i..n {
            let v = a[[i, j]];
            let t = a[[j, i]];
            if !v.is_finite() || !t.is_finite() {
                return Err(NetError::NonFinite { row: i, col: j });
            }
            if i == j {
                if v != 0.0 {
                    return Err(NetError::NonzeroDiagonal { index: i });
                }
                continue;
            }
            if (v - t).abs() > SYMMETRY_TOL {
                return Err(NetError::Asymmetric { row: i, col: j });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(NetError::OutOfRange { row: i, col: j, value: v });
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(NetError::OutOfRange { row: j, col: i, value: t });
            }
        }
    }
    Ok(WeightMatrix(a))
}

/// Projects an arbitrary square matrix onto the set of weight matrices:
/// symmetric average, clamp to `[0, 1]`, zero diagonal.
pub fn project(a: &Array2<f64>) -> Result<WeightMatrix> {
    let n = check_square(a)?;
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (0.5 * (a[[i, j]] + a[[j, i]])).clamp(0.0, 1.0);
            // NaN survives clamp; map it to 0 so the result stays valid
            let v = if v.is_nan() { 0.0 } else { v };
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(WeightMatrix(out))
}

/// Symmetric boolean mask of missing entries. The diagonal is never missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    n: usize,
    missing: Vec<bool>,
}

impl MissingMask {
    pub fn empty(n: usize) -> Self {
        MissingMask { n, missing: vec![false; n * n] }
    }

    /// Builds a mask from unordered pairs; each pair marks both `(i, j)` and `(j, i)`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut mask = MissingMask::empty(n);
        for &(i, j) in pairs {
            mask.set(i, j)?;
        }
        Ok(mask)
    }

    /// Builds a mask from a dense boolean matrix, checking symmetry and an
    /// all-false diagonal.
    pub fn from_dense(a: &Array2<bool>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols || rows == 0 {
            return Err(NetError::NotSquare { rows, cols });
        }
        let n = rows;
        let mut mask = MissingMask::empty(n);
        for i in 0..n {
            if a[[i, i]] {
                return Err(NetError::NonzeroDiagonal { index: i });
            }
            for j in (i + 1)..n {
                if a[[i, j]] != a[[j, i]] {
                    return Err(NetError::Asymmetric { row: i, col: j });
                }
                if a[[i, j]] {
                    mask.set(i, j)?;
                }
            }
        }
        Ok(mask)
    }

    fn set(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.n;
        for idx in [i, j] {
            if idx >= n {
                return Err(NetError::IndexOutOfRange { index: idx, n });
            }
        }
        if i == j {
            return Err(NetError::NonzeroDiagonal { index: i });
        }
        self.missing[i * n + j] = true;
        self.missing[j * n + i] = true;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.n + j]
    }

    /// Number of missing unordered pairs.
    pub fn count_pairs(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count() / 2
    }

    pub fn is_empty(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    /// Missing unordered pairs `(i, j)` with `i < j`, row-major.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.is_missing(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The `S_M` indicator matrix: ones at missing entries.
    pub fn indicator(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| {
            if self.is_missing(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Assignment of every node to a module id (`1..=M`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleAssignment {
    module_of: Vec<usize>,
}

impl ModuleAssignment {
    pub fn new(module_of: Vec<usize>) -> Result<Self> {
        if module_of.is_empty() {
            return Err(NetError::InvalidParams("module assignment is empty".into()));
        }
        if let Some(pos) = module_of.iter().position(|&m| m == 0) {
            return Err(NetError::InvalidParams(format!(
                "module ids start at 1 (node {} has 0)",
                pos + 1
            )));
        }
        Ok(ModuleAssignment { module_of })
    }

    /// Every node in module 1.
    pub fn single(n: usize) -> Self {
        ModuleAssignment { module_of: vec![1; n] }
    }

    pub fn n(&self) -> usize {
        self.module_of.len()
    }

    pub fn module_of(&self, i: usize) -> usize {
        self.module_of[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.module_of
    }

    pub fn module_count(&self) -> usize {
        let mut ids = self.module_of.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Relabels nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        ModuleAssignment { module_of: perm.iter().map(|&p| self.module_of[p]).collect() }
    }

    /// The `Δ` matrix with `δ_ij = 1` iff `i` and `j` share a module.
    pub fn delta(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(i, j)| {
            if self.module_of[i] == self.module_of[j] {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Selector for the constant matrices used in the derivations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Helper {
    /// `S_ij`: zero except a one at `(i, j)`.
    Single(usize, usize),
    /// `O_n`: all ones.
    Ones,
    /// `H_n`: all ones except the diagonal.
    OnesOffDiagonal,
    /// `R_j`: ones in column `j`.
    Column(usize),
    /// Circular shift `C_r` with `shift = r - 1`; `C_r A` moves the rows of
    /// `A` down by `shift`. `Shift(0)` is the identity.
    Shift(usize),
}

pub fn helper_matrix(n: usize, selector: Helper) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(NetError::InvalidParams("helper matrices need n >= 1".into()));
    }
    let check = |idx: usize| {
        if idx >= n {
            Err(NetError::IndexOutOfRange { index: idx, n })
        } else {
            Ok(())
        }
    };
    Ok(match selector {
        Helper::Single(i, j) => {
            check(i)?;
            check(j)?;
            let mut a = Array2::zeros((n, n));
            a[[i, j]] = 1.0;
            a
        }
        Helper::Ones => Array2::ones((n, n)),
        Helper::OnesOffDiagonal => ones_off_diagonal(n),
        Helper::Column(j) => {
            check(j)?;
            let mut a = Array2::zeros((n, n));
            a.column_mut(j).fill(1.0);
            a
        }
        Helper::Shift(s) => {
            check(s)?;
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                a[[i, (i + n - s) % n]] = 1.0;
            }
            a
        }
    })
}

fn ones_off_diagonal(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 })
}
