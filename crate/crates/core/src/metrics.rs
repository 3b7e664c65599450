//! Weighted graph metrics written as trace expressions of the weight matrix.
//!
//! | metric | numerator / denominator |
//! |---|---|
//! | degree `k_i` | `tr{W R_i}` |
//! | average neighbour degree `ND_i` | `tr{W² R_i} / tr{W R_i}` |
//! | transitivity `T` | `tr{W³} / tr{W H_n W}` |
//! | clustering `C_i` | `{W³}_ii / {W H_n W}_ii` |
//! | modularity `M` | `(1/l) Σ_ij (w_ij − k_i k_j / l) δ_ij`, `l = Σ_ij w_ij` |
//!
//! `tr{W H_n W} = Σ_{i≠j} Σ_h w_ih w_hj` skips the `i = j` terms, so the
//! transitivity denominator counts connected triples whose two end points are
//! distinct nodes. The clustering denominator `{W H_n W}_ii` likewise sums
//! `w_ij w_ih` over `j ≠ h` only.
//!
//! A zero denominator (`tr{W R_i}`, `tr{W H_n W}`, `{W H_n W}_ii`) yields a
//! metric value of 0. Modularity of an all-zero network is an error.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::network::{ModuleAssignment, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Degree,
    MeanDegree,
    AvgNeighbourDegree,
    Transitivity,
    #[serde(rename = "clustering", alias = "clustering_coefficient")]
    ClusteringCoefficient,
    GlobalClustering,
    Modularity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Degree,
        MetricKind::MeanDegree,
        MetricKind::AvgNeighbourDegree,
        MetricKind::Transitivity,
        MetricKind::ClusteringCoefficient,
        MetricKind::GlobalClustering,
        MetricKind::Modularity,
    ];

    /// Local metrics are defined per node and need a node index.
    pub fn is_local(self) -> bool {
        matches!(
            self,
            MetricKind::Degree | MetricKind::AvgNeighbourDegree | MetricKind::ClusteringCoefficient
        )
    }

    pub fn needs_modules(self) -> bool {
        self == MetricKind::Modularity
    }

    /// Whether evaluating the metric or its derivative needs `W²`.
    pub(crate) fn needs_square(self) -> bool {
        matches!(
            self,
            MetricKind::Transitivity
                | MetricKind::ClusteringCoefficient
                | MetricKind::GlobalClustering
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Degree => "degree",
            MetricKind::MeanDegree => "mean_degree",
            MetricKind::AvgNeighbourDegree => "avg_neighbour_degree",
            MetricKind::Transitivity => "transitivity",
            MetricKind::ClusteringCoefficient => "clustering",
            MetricKind::GlobalClustering => "global_clustering",
            MetricKind::Modularity => "modularity",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "degree" => MetricKind::Degree,
            "mean_degree" => MetricKind::MeanDegree,
            "avg_neighbour_degree" | "avg_neighbor_degree" | "neighbour_degree" => {
                MetricKind::AvgNeighbourDegree
            }
            "transitivity" => MetricKind::Transitivity,
            "clustering" | "clustering_coefficient" => MetricKind::ClusteringCoefficient,
            "global_clustering" => MetricKind::GlobalClustering,
            "modularity" => MetricKind::Modularity,
            other => return Err(NetError::Parse(format!("unknown metric '{other}'"))),
        };
        Ok(kind)
    }
}

/// One objective term: a metric, its attachments, and the target value `K_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub node: Option<usize>,
    pub modules: Option<ModuleAssignment>,
    pub target: f64,
}

impl MetricSpec {
    fn plain(kind: MetricKind, node: Option<usize>, target: f64) -> Self {
        MetricSpec { kind, node, modules: None, target }
    }

    pub fn degree(node: usize, target: f64) -> Self {
        Self::plain(MetricKind::Degree, Some(node), target)
    }

    pub fn mean_degree(target: f64) -> Self {
        Self::plain(MetricKind::MeanDegree, None, target)
    }

    pub fn avg_neighbour_degree(node: usize, target: f64) -> Self {
        Self::plain(MetricKind::AvgNeighbourDegree, Some(node), target)
    }

    pub fn transitivity(target: f64) -> Self {
        Self::plain(MetricKind::Transitivity, None, target)
    }

    pub fn clustering(node: usize, target: f64) -> Self {
        Self::plain(MetricKind::ClusteringCoefficient, Some(node), target)
    }

    pub fn global_clustering(target: f64) -> Self {
        Self::plain(MetricKind::GlobalClustering, None, target)
    }

    pub fn modularity(modules: ModuleAssignment, target: f64) -> Self {
        MetricSpec { kind: MetricKind::Modularity, node: None, modules: Some(modules), target }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    /// Checks attachments against the metric kind and a network of `n` nodes.
    pub fn check(&self, n: usize) -> Result<()> {
        if !self.target.is_finite() {
            return Err(NetError::NonFiniteTarget);
        }
        let kind = self.kind.name();
        match (self.kind.is_local(), self.node) {
            (true, None) => return Err(NetError::MissingAttachment { kind, what: "a node index" }),
            (true, Some(i)) if i >= n => return Err(NetError::IndexOutOfRange { index: i, n }),
            (false, Some(_)) => {
                return Err(NetError::InvalidParams(format!("{kind} does not take a node index")))
            }
            _ => {}
        }
        if self.kind.needs_modules() {
            match &self.modules {
                None => {
                    return Err(NetError::MissingAttachment { kind, what: "a module assignment" })
                }
                Some(m) if m.n() != n => {
                    return Err(NetError::ShapeMismatch { expected: n, found: m.n() })
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn node_index(&self) -> usize {
        self.node.expect("checked local metric")
    }

    fn module_assignment(&self) -> &ModuleAssignment {
        self.modules.as_ref().expect("checked modularity spec")
    }
}

/// Quantities shared between metric values and derivatives at one point `W`.
pub(crate) struct NetStats<'a> {
    pub w: &'a Array2<f64>,
    pub rowsum: Array1<f64>,
    pub colsum: Array1<f64>,
    pub square: Option<Array2<f64>>,
}

impl<'a> NetStats<'a> {
    pub fn new(w: &'a Array2<f64>, with_square: bool) -> Self {
        NetStats {
            w,
            rowsum: w.sum_axis(Axis(1)),
            colsum: w.sum_axis(Axis(0)),
            square: with_square.then(|| w.dot(w)),
        }
    }

    pub fn for_specs(w: &'a Array2<f64>, specs: &[MetricSpec]) -> Self {
        Self::new(w, specs.iter().any(|s| s.kind.needs_square()))
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn sq(&self) -> &Array2<f64> {
        self.square.as_ref().expect("W² requested by the metric set")
    }

    /// `(ρ, τ)` of the average neighbour degree of node `i`.
    pub fn neighbour_terms(&self, i: usize) -> (f64, f64) {
        let rho = self.w.row(i).dot(&self.rowsum);
        (rho, self.rowsum[i])
    }

    /// `(α, β) = (tr{W³}, tr{W H_n W})`.
    pub fn transitivity_terms(&self) -> (f64, f64) {
        let sq = self.sq();
        let alpha = (sq * &self.w.t()).sum();
        let beta = sq.sum() - sq.diag().sum();
        (alpha, beta)
    }

    /// `(γ_i, ζ_i) = ({W³}_ii, {W H_n W}_ii)`.
    pub fn clustering_terms(&self, i: usize) -> (f64, f64) {
        let gamma = self.sq().row(i).dot(&self.w.column(i));
        let row = self.w.row(i);
        let col = self.w.column(i);
        let zeta = row.sum() * col.sum() - row.dot(&col);
        (gamma, zeta)
    }

    pub fn clustering(&self, i: usize) -> f64 {
        let (gamma, zeta) = self.clustering_terms(i);
        ratio_or_zero(gamma, zeta)
    }

    /// `(θ, l, Σ_r ξ_r)` of the modularity decomposition `M = θ/l − Σξ/l²`.
    pub fn modularity_terms(&self, delta: &Array2<f64>) -> (f64, f64, f64) {
        let theta = (self.w * delta).sum();
        let total = self.w.sum();
        let xi_sum = self.colsum.dot(&delta.dot(&self.colsum));
        (theta, total, xi_sum)
    }

    pub fn value(&self, spec: &MetricSpec) -> Result<f64> {
        let n = self.n();
        Ok(match spec.kind {
            MetricKind::Degree => self.rowsum[spec.node_index()],
            MetricKind::MeanDegree => self.rowsum.sum() / n as f64,
            MetricKind::AvgNeighbourDegree => {
                let (rho, tau) = self.neighbour_terms(spec.node_index());
                ratio_or_zero(rho, tau)
            }
            MetricKind::Transitivity => {
                let (alpha, beta) = self.transitivity_terms();
                ratio_or_zero(alpha, beta)
            }
            MetricKind::ClusteringCoefficient => self.clustering(spec.node_index()),
            MetricKind::GlobalClustering => {
                (0..n).map(|i| self.clustering(i)).sum::<f64>() / n as f64
            }
            MetricKind::Modularity => {
                let (theta, total, xi_sum) =
                    self.modularity_terms(&spec.module_assignment().delta());
                if total == 0.0 {
                    return Err(NetError::EmptyNetwork);
                }
                theta / total - xi_sum / (total * total)
            }
        })
    }
}

pub(crate) fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn check_node(w: &WeightMatrix, i: usize) -> Result<()> {
    if i >= w.n() {
        return Err(NetError::IndexOutOfRange { index: i, n: w.n() });
    }
    Ok(())
}

/// Weighted degree (strength) of node `i`.
pub fn degree(w: &WeightMatrix, i: usize) -> Result<f64> {
    check_node(w, i)?;
    Ok(w.as_array().row(i).sum())
}

pub fn mean_degree(w: &WeightMatrix) -> f64 {
    w.total_weight() / w.n() as f64
}

pub fn avg_neighbour_degree(w: &WeightMatrix, i: usize) -> Result<f64> {
    check_node(w, i)?;
    let (rho, tau) = NetStats::new(w.as_array(), false).neighbour_terms(i);
    Ok(ratio_or_zero(rho, tau))
}

pub fn transitivity(w: &WeightMatrix) -> f64 {
    let (alpha, beta) = NetStats::new(w.as_array(), true).transitivity_terms();
    ratio_or_zero(alpha, beta)
}

pub fn clustering_coefficient(w: &WeightMatrix, i: usize) -> Result<f64> {
    check_node(w, i)?;
    Ok(NetStats::new(w.as_array(), true).clustering(i))
}

/// Node average of the clustering coefficients.
pub fn global_clustering(w: &WeightMatrix) -> f64 {
    let stats = NetStats::new(w.as_array(), true);
    let n = w.n();
    (0..n).map(|i| stats.clustering(i)).sum::<f64>() / n as f64
}

pub fn modularity(w: &WeightMatrix, modules: &ModuleAssignment) -> Result<f64> {
    if modules.n() != w.n() {
        return Err(NetError::ShapeMismatch { expected: w.n(), found: modules.n() });
    }
    NetStats::new(w.as_array(), false).value(&MetricSpec::modularity(modules.clone(), 0.0))
}

/// Evaluates the metric named by `spec` (its target is ignored).
pub fn evaluate(spec: &MetricSpec, w: &WeightMatrix) -> Result<f64> {
    evaluate_array(spec, w.as_array())
}

pub(crate) fn evaluate_array(spec: &MetricSpec, w: &Array2<f64>) -> Result<f64> {
    spec.check(w.nrows())?;
    NetStats::new(w, spec.kind.needs_square()).value(spec)
}

/// Builds objective terms whose targets are the metric values of `reference`.
///
/// Local kinds expand to one term per node; `modules` is required when the
/// list contains [`MetricKind::Modularity`].
pub fn targets_from_reference(
    reference: &WeightMatrix,
    kinds: &[MetricKind],
    modules: Option<&ModuleAssignment>,
) -> Result<Vec<MetricSpec>> {
    let n = reference.n();
    let mut specs = Vec::new();
    for &kind in kinds {
        if kind.is_local() {
            for i in 0..n {
                specs.push(MetricSpec::plain(kind, Some(i), 0.0));
            }
        } else if kind.needs_modules() {
            let m = modules.ok_or(NetError::MissingAttachment {
                kind: kind.name(),
                what: "a module assignment",
            })?;
            specs.push(MetricSpec::modularity(m.clone(), 0.0));
        } else {
            specs.push(MetricSpec::plain(kind, None, 0.0));
        }
    }
    for s in &specs {
        s.check(n)?;
    }
    let stats = NetStats::for_specs(reference.as_array(), &specs);
    specs
        .into_iter()
        .map(|s| {
            let v = stats.value(&s)?;
            Ok(s.with_target(v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate;
    use ndarray::array;

    fn path3() -> WeightMatrix {
        validate(array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).unwrap()
    }

    fn star(n: usize) -> WeightMatrix {
        let mut a = Array2::zeros((n, n));
        for j in 1..n {
            a[[0, j]] = 1.0;
            a[[j, 0]] = 1.0;
        }
        validate(a).unwrap()
    }

    #[test]
    fn degree_examples() {
        let h3 = WeightMatrix::complete(3);
        assert_eq!(degree(&h3, 0).unwrap(), 2.0);
        assert_eq!(degree(&WeightMatrix::zeros(4), 2).unwrap(), 0.0);
        assert_eq!(degree(&h3, 3), Err(NetError::IndexOutOfRange { index: 3, n: 3 }));
        assert_eq!(mean_degree(&WeightMatrix::complete(5)), 4.0);
        assert_eq!(mean_degree(&WeightMatrix::zeros(5)), 0.0);
    }

    #[test]
    fn neighbour_degree_examples() {
        assert_eq!(avg_neighbour_degree(&WeightMatrix::complete(5), 2).unwrap(), 4.0);
        assert_eq!(avg_neighbour_degree(&WeightMatrix::zeros(3), 1).unwrap(), 0.0);
        // end of a path: one neighbour of degree 2
        assert_eq!(avg_neighbour_degree(&path3(), 0).unwrap(), 2.0);
    }

    #[test]
    fn transitivity_examples() {
        assert_eq!(transitivity(&WeightMatrix::complete(4)), 1.0);
        assert_eq!(transitivity(&star(5)), 0.0);
        assert_eq!(transitivity(&WeightMatrix::zeros(4)), 0.0);
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(clustering_coefficient(&WeightMatrix::complete(3), 0).unwrap(), 1.0);
        assert_eq!(clustering_coefficient(&path3(), 1).unwrap(), 0.0);
        // end node has a single neighbour, so ζ = 0
        assert_eq!(clustering_coefficient(&path3(), 0).unwrap(), 0.0);
        assert_eq!(global_clustering(&WeightMatrix::complete(6)), 1.0);
        assert_eq!(global_clustering(&star(6)), 0.0);
    }

    #[test]
    fn modularity_examples() {
        let w = WeightMatrix::complete(4);
        assert!(modularity(&w, &ModuleAssignment::single(4)).unwrap().abs() < 1e-15);
        assert_eq!(
            modularity(&WeightMatrix::zeros(3), &ModuleAssignment::single(3)),
            Err(NetError::EmptyNetwork)
        );
        assert!(matches!(
            modularity(&w, &ModuleAssignment::single(3)),
            Err(NetError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_dispatch() {
        let h3 = WeightMatrix::complete(3);
        assert_eq!(evaluate(&MetricSpec::degree(0, 0.0), &h3).unwrap(), 2.0);
        assert_eq!(evaluate(&MetricSpec::transitivity(0.0), &WeightMatrix::complete(4)).unwrap(), 1.0);
        let m = evaluate(&MetricSpec::modularity(ModuleAssignment::single(3), 0.0), &h3).unwrap();
        assert!(m.abs() < 1e-15);
        let missing_node = MetricSpec { node: None, ..MetricSpec::degree(0, 0.0) };
        assert!(matches!(evaluate(&missing_node, &h3), Err(NetError::MissingAttachment { .. })));
        let no_modules = MetricSpec { modules: None, ..MetricSpec::modularity(ModuleAssignment::single(3), 0.0) };
        assert!(matches!(evaluate(&no_modules, &h3), Err(NetError::MissingAttachment { .. })));
        assert_eq!(
            evaluate(&MetricSpec::mean_degree(f64::NAN), &h3),
            Err(NetError::NonFiniteTarget)
        );
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.name().parse::<MetricKind>().unwrap(), kind);
        }
        assert!("betweenness".parse::<MetricKind>().is_err());
    }

    #[test]
    fn reference_targets_expand_local_kinds() {
        let w = WeightMatrix::complete(4);
        let specs = targets_from_reference(
            &w,
            &[MetricKind::Degree, MetricKind::Transitivity],
            None,
        )
        .unwrap();
        assert_eq!(specs.len(), 5);
        assert!(specs[..4].iter().all(|s| s.target == 3.0));
        assert_eq!(specs[4].target, 1.0);
        assert!(targets_from_reference(&w, &[MetricKind::Modularity], None).is_err());
    }
}
