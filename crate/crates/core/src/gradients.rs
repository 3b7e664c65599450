//! Analytic derivatives of the metrics and a finite-difference oracle.
//!
//! The `partial_*` functions return the unconstrained partial derivative
//! `∂f/∂W` with `{∂f/∂W}_ab = ∂f/∂w_ab`, every entry treated as free.
//! Weight matrices are symmetric, so the derivative that matters is the one
//! along the pair `(w_ab, w_ba)`, obtained by [`symmetrize_gradient`]:
//! `df/dW = ∂f/∂W + (∂f/∂W)ᵀ − diag(∂f/∂W)`.
//!
//! [`grad`] returns that symmetrized matrix with the diagonal cleared (the
//! diagonal is not a free variable). Its off-diagonal entry `(a, b)` is
//! `d/dt f(W + t (S_ab + S_ba))` at `t = 0`, which is exactly what
//! [`fd_gradient`] estimates. For a symmetric zero-diagonal direction `D`,
//! the directional derivative is `Σ_{a<b} G_ab D_ab = ½ ⟨G, D⟩_F`.

use ndarray::{Array1, Array2, Axis, Zip};

use crate::error::{NetError, Result};
use crate::metrics::{evaluate_array, MetricKind, MetricSpec, NetStats};
use crate::network::{check_square, helper_matrix, Helper, ModuleAssignment, WeightMatrix};

/// Gradient of a metric or cost with respect to the weight matrix.
pub type GradientMatrix = Array2<f64>;

/// `df/dW = G + Gᵀ − diag(G)`.
pub fn symmetrize_gradient(g: &Array2<f64>) -> Result<GradientMatrix> {
    let n = check_square(g)?;
    let mut out = g + &g.t();
    for i in 0..n {
        out[[i, i]] -= g[[i, i]];
    }
    Ok(out)
}

/// Symmetrized gradient on the space of weight matrices (zero diagonal).
fn on_network_space(partial: &Array2<f64>) -> GradientMatrix {
    let mut g = partial + &partial.t();
    g.diag_mut().fill(0.0);
    g
}

fn check_node(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(NetError::IndexOutOfRange { index: i, n });
    }
    Ok(())
}

/// `∂k_i/∂W = R_iᵀ`: ones in row `i`.
pub fn partial_degree(w: &WeightMatrix, i: usize) -> Result<GradientMatrix> {
    let n = w.n();
    check_node(n, i)?;
    let mut g = Array2::zeros((n, n));
    add_degree(&mut g, i, 1.0);
    Ok(g)
}

/// Average of the per-node degree partials, `O_n / n`. Independent of `W`.
pub fn partial_mean_degree(w: &WeightMatrix) -> GradientMatrix {
    let n = w.n();
    Array2::from_elem((n, n), 1.0 / n as f64)
}

/// `(τ (W R_i + R_i W)ᵀ − ρ R_iᵀ) / τ²`; zero when node `i` is isolated.
pub fn partial_avg_neighbour_degree(w: &WeightMatrix, i: usize) -> Result<GradientMatrix> {
    let n = w.n();
    check_node(n, i)?;
    let stats = NetStats::new(w.as_array(), false);
    let mut g = Array2::zeros((n, n));
    add_neighbour_degree(&mut g, &stats, i, 1.0);
    Ok(g)
}

/// `(3β (W²)ᵀ − α(Wᵀ H_n + H_n Wᵀ)) / β²`; zero when `β = 0`.
pub fn partial_transitivity(w: &WeightMatrix) -> GradientMatrix {
    let n = w.n();
    let stats = NetStats::new(w.as_array(), true);
    let mut g = Array2::zeros((n, n));
    add_transitivity(&mut g, &stats, 1.0);
    g
}

/// Quotient rule on `γ_i = tr{S_ii W³}` and `ζ_i = tr{S_ii W H_n W}`:
///
/// `dγ_i = Σ_{r=0}^{2} (W^r S_ii W^{2−r})ᵀ`,
/// `dζ_i = S_iiᵀ Wᵀ H_nᵀ + H_nᵀ Wᵀ S_iiᵀ`,
/// `∂C_i/∂W = (ζ_i dγ_i − γ_i dζ_i) / ζ_i²`.
pub fn partial_clustering_coefficient(w: &WeightMatrix, i: usize) -> Result<GradientMatrix> {
    let n = w.n();
    check_node(n, i)?;
    let stats = NetStats::new(w.as_array(), true);
    let mut g = Array2::zeros((n, n));
    add_clustering(&mut g, &stats, i, 1.0);
    Ok(g)
}

/// Average of the per-node clustering partials.
pub fn partial_global_clustering(w: &WeightMatrix) -> GradientMatrix {
    let n = w.n();
    let stats = NetStats::new(w.as_array(), true);
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        add_clustering(&mut g, &stats, i, 1.0 / n as f64);
    }
    g
}

/// `∂M/∂W = ∂m1/∂W − ∂m2/∂W` with
/// `∂m1/∂W = (l Δ − θ O_n) / l²` and
/// `∂m2/∂W = Σ_r (l (C_r W Δᵀ + C_rᵀ W Δ) − 2 ξ_r O_n) / l³`.
///
/// The circular shifts sum to `O_n`, so the sum over `r` collapses to
/// `(l (O_n W Δᵀ + O_n W Δ) − 2 Σ_r ξ_r O_n) / l³` with
/// `Σ_r ξ_r = cᵀ Δ c` for the column sums `c`.
/// [`partial_modularity_by_shifts`] evaluates the uncollapsed sum.
pub fn partial_modularity(w: &WeightMatrix, modules: &ModuleAssignment) -> Result<GradientMatrix> {
    let n = w.n();
    if modules.n() != n {
        return Err(NetError::ShapeMismatch { expected: n, found: modules.n() });
    }
    let stats = NetStats::new(w.as_array(), false);
    let mut g = Array2::zeros((n, n));
    add_modularity(&mut g, &stats, &modules.delta(), 1.0)?;
    Ok(g)
}

/// The modularity partial built term by term from the `n` circular shift
/// matrices `C_r` and scalars `ξ_r = tr{Wᵀ C_r W Δᵀ}`. `O(n⁴)`; kept as an
/// independent route for checking [`partial_modularity`].
pub fn partial_modularity_by_shifts(
    w: &WeightMatrix,
    modules: &ModuleAssignment,
) -> Result<GradientMatrix> {
    let n = w.n();
    if modules.n() != n {
        return Err(NetError::ShapeMismatch { expected: n, found: modules.n() });
    }
    let w = w.as_array();
    let delta = modules.delta();
    let ones = Array2::<f64>::ones((n, n));
    let total = (w * &ones).sum();
    if total == 0.0 {
        return Err(NetError::EmptyNetwork);
    }
    let theta = w.dot(&delta.t()).diag().sum();
    let dm1 = (&delta * total - &ones * theta) / (total * total);

    let mut dm2 = Array2::<f64>::zeros((n, n));
    for shift in 0..n {
        let c = helper_matrix(n, Helper::Shift(shift))?;
        let xi = w.t().dot(&c).dot(w).dot(&delta.t()).diag().sum();
        let term = (c.dot(w).dot(&delta.t()) + c.t().dot(w).dot(&delta)) * total - &ones * (2.0 * xi);
        dm2 += &(term / total.powi(3));
    }
    Ok(dm1 - dm2)
}

fn add_degree(g: &mut Array2<f64>, i: usize, weight: f64) {
    g.row_mut(i).mapv_inplace(|v| v + weight);
}

fn add_neighbour_degree(g: &mut Array2<f64>, stats: &NetStats, i: usize, weight: f64) {
    let (rho, tau) = stats.neighbour_terms(i);
    if tau == 0.0 {
        return;
    }
    // (W R_i)ᵀ puts the degree vector in row i; (R_i W)ᵀ has entry (a, b) = w_ia.
    let row_scale = weight / tau;
    {
        let mut row = g.row_mut(i);
        row.scaled_add(row_scale, &stats.rowsum);
        row.mapv_inplace(|v| v - weight * rho / (tau * tau));
    }
    let wi = stats.w.row(i);
    for (a, mut grow) in g.axis_iter_mut(Axis(0)).enumerate() {
        let v = row_scale * wi[a];
        if v != 0.0 {
            grow.mapv_inplace(|x| x + v);
        }
    }
}

fn add_transitivity(g: &mut Array2<f64>, stats: &NetStats, weight: f64) {
    let (alpha, beta) = stats.transitivity_terms();
    if beta == 0.0 {
        return;
    }
    let sq = stats.sq();
    let w = stats.w;
    let (c1, c2) = (weight * 3.0 / beta, weight * alpha / (beta * beta));
    // (Wᵀ H)_ab = colsum_a − w_ba ; (H Wᵀ)_ab = rowsum_b − w_ba
    Zip::indexed(g).for_each(|(a, b), v| {
        let wh = stats.colsum[a] - w[[b, a]];
        let hw = stats.rowsum[b] - w[[b, a]];
        *v += c1 * sq[[b, a]] - c2 * (wh + hw);
    });
}

fn add_clustering(g: &mut Array2<f64>, stats: &NetStats, i: usize, weight: f64) {
    let (gamma, zeta) = stats.clustering_terms(i);
    if zeta == 0.0 {
        return;
    }
    let w = stats.w;
    let sq = stats.sq();
    let n = stats.n();
    let c_num = weight / zeta;
    let c_den = weight * gamma / (zeta * zeta);

    // r = 1 term, (W S_ii W)ᵀ_ab = w_ia w_bi
    let left: Array1<f64> = w.row(i).to_owned();
    let right: Array1<f64> = w.column(i).to_owned();
    for a in 0..n {
        let la = c_num * left[a];
        if la == 0.0 {
            continue;
        }
        let mut grow = g.row_mut(a);
        grow.scaled_add(la, &right);
    }
    // r = 0 term (column i) and dζ second term H Wᵀ S_ii (column i)
    let row_i_sum = w.row(i).sum();
    for a in 0..n {
        g[[a, i]] += c_num * sq[[i, a]] - c_den * (row_i_sum - w[[i, a]]);
    }
    // r = 2 term (row i) and dζ first term S_ii Wᵀ H (row i)
    let col_i_sum = w.column(i).sum();
    for b in 0..n {
        g[[i, b]] += c_num * sq[[b, i]] - c_den * (col_i_sum - w[[b, i]]);
    }
}

fn add_modularity(
    g: &mut Array2<f64>,
    stats: &NetStats,
    delta: &Array2<f64>,
    weight: f64,
) -> Result<()> {
    let (theta, total, xi_sum) = stats.modularity_terms(delta);
    if total == 0.0 {
        return Err(NetError::EmptyNetwork);
    }
    // O_n W Δᵀ has entry (a, b) = (Δ c)_b, O_n W Δ has (Δᵀ c)_b
    let dc = delta.dot(&stats.colsum);
    let dtc = delta.t().dot(&stats.colsum);
    let l2 = total * total;
    let l3 = l2 * total;
    let constant = -theta / l2 + 2.0 * xi_sum / l3;
    Zip::indexed(g).for_each(|(a, b), v| {
        let dm1 = delta[[a, b]] / total;
        let dm2 = (dc[b] + dtc[b]) / l2;
        *v += weight * (dm1 - dm2 + constant);
    });
    Ok(())
}

/// Adds `weight · ∂f/∂W` of one metric into `acc`.
pub(crate) fn accumulate_partial(
    acc: &mut Array2<f64>,
    spec: &MetricSpec,
    stats: &NetStats,
    weight: f64,
) -> Result<()> {
    let n = stats.n();
    match spec.kind {
        MetricKind::Degree => add_degree(acc, spec.node.unwrap_or(0), weight),
        MetricKind::MeanDegree => acc.mapv_inplace(|v| v + weight / n as f64),
        MetricKind::AvgNeighbourDegree => {
            add_neighbour_degree(acc, stats, spec.node.unwrap_or(0), weight)
        }
        MetricKind::Transitivity => add_transitivity(acc, stats, weight),
        MetricKind::ClusteringCoefficient => {
            add_clustering(acc, stats, spec.node.unwrap_or(0), weight)
        }
        MetricKind::GlobalClustering => {
            for i in 0..n {
                add_clustering(acc, stats, i, weight / n as f64);
            }
        }
        MetricKind::Modularity => {
            let delta = spec.modules.as_ref().expect("checked modularity spec").delta();
            add_modularity(acc, stats, &delta, weight)?;
        }
    }
    Ok(())
}

/// The unconstrained partial `∂f/∂W` for any metric spec.
pub fn partial(spec: &MetricSpec, w: &WeightMatrix) -> Result<GradientMatrix> {
    spec.check(w.n())?;
    let stats = NetStats::new(w.as_array(), spec.kind.needs_square());
    let mut acc = Array2::zeros((w.n(), w.n()));
    accumulate_partial(&mut acc, spec, &stats, 1.0)?;
    Ok(acc)
}

/// Symmetrized derivative of a metric on the space of weight matrices.
pub fn grad(spec: &MetricSpec, w: &WeightMatrix) -> Result<GradientMatrix> {
    Ok(on_network_space(&partial(spec, w)?))
}

pub(crate) fn finish_gradient(partial: &Array2<f64>) -> GradientMatrix {
    on_network_space(partial)
}

/// Central differences under joint perturbation of `(i, j)` and `(j, i)`.
///
/// Entries closer than `h` to 0 or 1 use a one-sided difference that stays
/// inside `[0, 1]`. The diagonal is 0.
pub fn fd_gradient(spec: &MetricSpec, w: &WeightMatrix, h: f64) -> Result<GradientMatrix> {
    if !(h > 0.0) {
        return Err(NetError::NonPositiveStep);
    }
    spec.check(w.n())?;
    let n = w.n();
    let base = w.as_array();
    let f0 = evaluate_array(spec, base)?;
    let mut out = Array2::zeros((n, n));
    let mut probe = base.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let x = base[[i, j]];
            let (lo, hi) = ((x - h).max(0.0), (x + h).min(1.0));
            let eval_at = |probe: &mut Array2<f64>, v: f64| {
                probe[[i, j]] = v;
                probe[[j, i]] = v;
                evaluate_array(spec, probe)
            };
            let f_hi = if hi == x { f0 } else { eval_at(&mut probe, hi)? };
            let f_lo = if lo == x { f0 } else { eval_at(&mut probe, lo)? };
            probe[[i, j]] = x;
            probe[[j, i]] = x;
            let d = (f_hi - f_lo) / (hi - lo);
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    Ok(out)
}

/// Relative error statistics of an analytic gradient against the oracle,
/// over off-diagonal entries where `|oracle| > floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    pub compared: usize,
}

pub fn compare_gradients(analytic: &Array2<f64>, oracle: &Array2<f64>, floor: f64) -> GradCheck {
    let n = oracle.nrows();
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j || oracle[[i, j]].abs() <= floor {
                continue;
            }
            let rel = (analytic[[i, j]] - oracle[[i, j]]).abs() / oracle[[i, j]].abs();
            max = max.max(rel);
            sum += rel;
            count += 1;
        }
    }
    GradCheck {
        max_rel_err: max,
        mean_rel_err: if count == 0 { 0.0 } else { sum / count as f64 },
        compared: count,
    }
}

/// Runs [`grad`] against [`fd_gradient`] for one spec.
pub fn check_gradient(spec: &MetricSpec, w: &WeightMatrix, h: f64) -> Result<GradCheck> {
    let analytic = grad(spec, w)?;
    let oracle = fd_gradient(spec, w, h)?;
    Ok(compare_gradients(&analytic, &oracle, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate;
    use ndarray::array;

    #[test]
    fn degree_partial_is_row_of_ones() {
        let w = WeightMatrix::complete(3);
        let g = partial_degree(&w, 1).unwrap();
        assert_eq!(g, array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]);
        let s = grad(&MetricSpec::degree(1, 0.0), &w).unwrap();
        assert_eq!(s, array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        assert!(partial_degree(&w, 3).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let g = array![[0.0, 0.3], [0.3, 0.0]];
        assert_eq!(symmetrize_gradient(&g).unwrap(), &g * 2.0);
        let eye = Array2::<f64>::eye(3);
        assert_eq!(symmetrize_gradient(&eye).unwrap(), eye);
        let g = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(symmetrize_gradient(&g).unwrap(), array![[1.0, 5.0], [5.0, 4.0]]);
        assert!(symmetrize_gradient(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn mean_degree_gradient_is_constant() {
        let a = validate(array![[0.0, 0.2, 0.9], [0.2, 0.0, 0.4], [0.9, 0.4, 0.0]]).unwrap();
        let b = WeightMatrix::complete(3);
        let spec = MetricSpec::mean_degree(0.0);
        let ga = grad(&spec, &a).unwrap();
        assert_eq!(ga, grad(&spec, &b).unwrap());
        assert!((ga[[0, 1]] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ga[[1, 1]], 0.0);
        assert_eq!(partial_mean_degree(&a)[[0, 1]], 1.0 / 3.0);
    }

    #[test]
    fn degenerate_denominators_give_zero_gradients() {
        let z = WeightMatrix::zeros(4);
        assert_eq!(partial_transitivity(&z), Array2::<f64>::zeros((4, 4)));
        assert_eq!(partial_avg_neighbour_degree(&z, 2).unwrap(), Array2::<f64>::zeros((4, 4)));
        assert_eq!(partial_clustering_coefficient(&z, 0).unwrap(), Array2::<f64>::zeros((4, 4)));
        assert_eq!(
            partial_modularity(&z, &ModuleAssignment::single(4)),
            Err(NetError::EmptyNetwork)
        );
    }

    #[test]
    fn fd_rejects_bad_step() {
        let w = WeightMatrix::complete(3);
        assert_eq!(fd_gradient(&MetricSpec::mean_degree(0.0), &w, 0.0), Err(NetError::NonPositiveStep));
        assert_eq!(fd_gradient(&MetricSpec::mean_degree(0.0), &w, -1.0), Err(NetError::NonPositiveStep));
    }

    #[test]
    fn fd_mean_degree_convention() {
        // joint pair perturbation moves two entries: response 2/n
        let w = validate(array![[0.0, 0.5, 1.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let fd = fd_gradient(&MetricSpec::mean_degree(0.0), &w, 1e-6).unwrap();
        for i in 0..3 {
            assert_eq!(fd[[i, i]], 0.0);
            for j in 0..3 {
                if i != j {
                    assert!((fd[[i, j]] - 2.0 / 3.0).abs() < 1e-8, "{}", fd[[i, j]]);
                }
            }
        }
    }

    #[test]
    fn modularity_two_node_hand_calculation() {
        // n = 2, w_12 = x, separate modules: Δ = I, l = 2x, θ = 0, c = (x, x),
        // Σξ = cᵀΔc = 2x². ∂m1 = Δ/l = I/(2x); every entry of ∂m2 is
        // (l·x + l·x − 2·2x²)/l³ = 0. M = −1/2 for every x, so the pair
        // derivative must vanish.
        let x = 0.6;
        let w = validate(array![[0.0, x], [x, 0.0]]).unwrap();
        let m = ModuleAssignment::new(vec![1, 2]).unwrap();
        let p = partial_modularity(&w, &m).unwrap();
        let expected = array![[1.0 / (2.0 * x), 0.0], [0.0, 1.0 / (2.0 * x)]];
        for (a, b) in p.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{p}");
        }
        let by_shifts = partial_modularity_by_shifts(&w, &m).unwrap();
        for (a, b) in p.iter().zip(by_shifts.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let value = crate::metrics::modularity(&w, &m).unwrap();
        assert!((value + 0.5).abs() < 1e-15);
        let g = grad(&MetricSpec::modularity(m, 0.0), &w).unwrap();
        assert!(g[[0, 1]].abs() < 1e-12);
    }
}
