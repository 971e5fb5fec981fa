//! Communication graphs and the consensus matrix.
//!
//! Agents sit on an undirected connected graph and mix their running
//! estimates through the symmetric, doubly stochastic matrix
//! `P = I − (κ/d_max)·L`, where `L` is the graph Laplacian. Everything
//! downstream (the spectral measures, the running-consensus update, the
//! policy bonus) is a function of `P`'s eigendecomposition, so the
//! decomposition is computed once here and carried around.
//!
//! Admissibility is enforced spectrally: construction fails unless the
//! smallest eigenvalue of `P` stays strictly above −1. This accepts any
//! κ > 0 that mixes, including κ > 1 on graphs that can take it, instead
//! of hard-coding a κ-range check.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default number of whole-graph redraws before `erdos_renyi` gives up
/// looking for a connected sample.
pub const DEFAULT_CONNECTIVITY_CAP: u32 = 10_000;

/// Tolerance below which an eigenvector component is treated as zero when
/// fixing the sign convention.
const SIGN_TOL: f64 = 1e-9;

/// Margin for the spectral admissibility check λ_M > −1.
const ADMISSIBILITY_MARGIN: f64 = 1e-12;

/// A validated undirected connected communication graph.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

impl Graph {
    pub fn agent_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] != 0.0
    }

    pub fn degree(&self, k: usize) -> usize {
        self.adjacency.row(k).iter().filter(|&&a| a != 0.0).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.agent_count()).map(|k| self.degree(k)).collect()
    }

    /// Maximum degree; 0 for the single-node graph.
    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        let m = self.agent_count();
        (0..m)
            .map(|i| ((i + 1)..m).filter(|&j| self.has_edge(i, j)).count())
            .sum()
    }
}

/// Validate an adjacency matrix (square, 0/1, symmetric, no self-loops,
/// connected) and wrap it as a [`Graph`]. Each rejection has its own error.
pub fn build_graph(adjacency: DMatrix<f64>) -> Result<Graph> {
    let (rows, cols) = adjacency.shape();
    if rows != cols {
        return Err(Error::NonSquareAdjacency { rows, cols });
    }
    if rows == 0 {
        return Err(Error::invalid("graph must have at least one node"));
    }
    for i in 0..rows {
        for j in 0..cols {
            let v = adjacency[(i, j)];
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidAdjacencyEntry {
                    row: i + 1,
                    col: j + 1,
                    value: v,
                });
            }
        }
    }
    for i in 0..rows {
        if adjacency[(i, i)] != 0.0 {
            return Err(Error::SelfLoop { node: i + 1 });
        }
        for j in (i + 1)..cols {
            if adjacency[(i, j)] != adjacency[(j, i)] {
                return Err(Error::AsymmetricAdjacency {
                    row: i + 1,
                    col: j + 1,
                });
            }
        }
    }
    if !is_connected(&adjacency) {
        return Err(Error::Disconnected);
    }
    Ok(Graph { adjacency })
}

fn is_connected(adjacency: &DMatrix<f64>) -> bool {
    let m = adjacency.nrows();
    let mut seen = vec![false; m];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if adjacency[(i, j)] != 0.0 && !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == m
}

/// Sample a connected Erdős–Rényi graph: every unordered pair is an edge
/// independently with probability `rho`; the whole graph is redrawn until
/// connected. Deterministic for a given `seed`.
pub fn erdos_renyi(m: usize, rho: f64, seed: u64) -> Result<Graph> {
    erdos_renyi_with_cap(m, rho, seed, DEFAULT_CONNECTIVITY_CAP)
}

/// As [`erdos_renyi`], with an explicit cap on redraw attempts.
pub fn erdos_renyi_with_cap(m: usize, rho: f64, seed: u64, cap: u32) -> Result<Graph> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "erdos_renyi needs at least 2 nodes, got {m}"
        )));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!(
            "edge probability must be in (0, 1], got {rho}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cap {
        let mut adjacency = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random::<f64>() < rho {
                    adjacency[(i, j)] = 1.0;
                    adjacency[(j, i)] = 1.0;
                }
            }
        }
        if is_connected(&adjacency) {
            return Ok(Graph { adjacency });
        }
    }
    Err(Error::ConnectivityCapExceeded { attempts: cap })
}

/// Graph Laplacian `L = D − A`. Rows sum to zero.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let m = g.agent_count();
    let mut l = -g.adjacency().clone();
    for i in 0..m {
        l[(i, i)] = g.degree(i) as f64;
    }
    l
}

/// The consensus matrix `P` with its full symmetric eigendecomposition.
///
/// Eigenvalues are sorted descending (`λ_1 = 1 > λ_2 ≥ … ≥ λ_M > −1`);
/// eigenvector columns are aligned with that order, orthonormal, and
/// sign-fixed so each column's first non-negligible component is positive.
#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    p: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    kappa: f64,
    dmax: usize,
}

impl ConsensusMatrix {
    pub fn agent_count(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors; column `p` pairs with `eigenvalues()[p]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Maximum degree of the underlying graph (0 for a single node).
    pub fn dmax(&self) -> usize {
        self.dmax
    }

    /// True when every entry of `P` is nonnegative (up to rounding). For
    /// κ ≤ 1 this always holds; larger κ can push diagonal entries of
    /// high-degree nodes negative, in which case the running count
    /// estimates are no longer guaranteed nonnegative pointwise.
    pub fn is_entrywise_nonnegative(&self) -> bool {
        self.p.iter().all(|&v| v >= -1e-12)
    }
}

/// Build `P = I − (κ/d_max)·L` and its eigendecomposition.
///
/// Fails with a spectrum violation when the smallest eigenvalue does not
/// stay strictly above −1 (the mix would oscillate instead of averaging).
/// The single-node graph yields the trivial `P = [1]` for any κ.
pub fn build_consensus_matrix(g: &Graph, kappa: f64) -> Result<ConsensusMatrix> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!(
            "consensus step size must be positive and finite, got {kappa}"
        )));
    }
    let m = g.agent_count();
    if m == 1 {
        return Ok(ConsensusMatrix {
            p: DMatrix::from_element(1, 1, 1.0),
            eigenvalues: vec![1.0],
            eigenvectors: DMatrix::from_element(1, 1, 1.0),
            kappa,
            dmax: 0,
        });
    }

    let dmax = g.max_degree();
    let p = DMatrix::identity(m, m) - laplacian(g) * (kappa / dmax as f64);

    let eig = p.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    for c in 0..m {
        let lead = (0..m).find(|&r| eigenvectors[(r, c)].abs() > SIGN_TOL);
        if let Some(r) = lead {
            if eigenvectors[(r, c)] < 0.0 {
                for r in 0..m {
                    eigenvectors[(r, c)] = -eigenvectors[(r, c)];
                }
            }
        }
    }

    let lambda_min = eigenvalues[m - 1];
    if lambda_min <= -1.0 + ADMISSIBILITY_MARGIN {
        return Err(Error::SpectrumViolation { lambda_min });
    }
    // For a connected graph with κ > 0 the second eigenvalue is strictly
    // below 1; anything else means the decomposition itself went wrong.
    if eigenvalues[1] >= 1.0 - ADMISSIBILITY_MARGIN {
        return Err(Error::internal(format!(
            "second eigenvalue {} reached 1 on a connected graph",
            eigenvalues[1]
        )));
    }

    Ok(ConsensusMatrix {
        p,
        eigenvalues,
        eigenvectors,
        kappa,
        dmax,
    })
}

/// Parse the edge-list text format: one `u v` pair per line, 1-indexed
/// node ids, blank lines and `#` comments ignored. A line with a single
/// id declares an isolated node (how a 1-node graph is written down);
/// the node count is the largest id mentioned.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_id = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut ids = Vec::new();
        for tok in line.split_whitespace() {
            let id: usize = tok.parse().map_err(|_| Error::EdgeList {
                line: line_no,
                reason: format!("expected a node id, got {tok:?}"),
            })?;
            if id == 0 {
                return Err(Error::EdgeList {
                    line: line_no,
                    reason: "node ids are 1-based".into(),
                });
            }
            ids.push(id);
        }
        match ids.as_slice() {
            [u] => max_id = max_id.max(*u),
            [u, v] => {
                if u == v {
                    return Err(Error::SelfLoop { node: *u });
                }
                max_id = max_id.max(*u).max(*v);
                edges.push((u - 1, v - 1));
            }
            _ => {
                return Err(Error::EdgeList {
                    line: line_no,
                    reason: format!("expected `u v`, got {} ids", ids.len()),
                })
            }
        }
    }
    if max_id == 0 {
        return Err(Error::invalid("edge list declares no nodes"));
    }
    let mut adjacency = DMatrix::zeros(max_id, max_id);
    for (u, v) in edges {
        adjacency[(u, v)] = 1.0;
        adjacency[(v, u)] = 1.0;
    }
    build_graph(adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{complete_graph, path_graph, paw_graph};

    #[test]
    fn single_node_is_trivially_connected() {
        let g = build_graph(DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(g.agent_count(), 1);
        assert_eq!(g.max_degree(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn two_path_is_valid() {
        let g = path_graph(2);
        assert_eq!(g.agent_count(), 2);
        assert!(g.has_edge(0, 1));
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn disconnected_rejected() {
        // Two 2-paths side by side.
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(3, 2)] = 1.0;
        assert!(matches!(build_graph(a), Err(Error::Disconnected)));
    }

    #[test]
    fn asymmetric_self_loop_and_bad_entries_rejected() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 1.0;
        assert!(matches!(
            build_graph(a),
            Err(Error::AsymmetricAdjacency { .. })
        ));

        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = 1.0;
        assert!(matches!(build_graph(a), Err(Error::SelfLoop { node: 1 })));

        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 2.0;
        assert!(matches!(
            build_graph(a),
            Err(Error::InvalidAdjacencyEntry { .. })
        ));

        let a = DMatrix::zeros(2, 3);
        assert!(matches!(
            build_graph(a),
            Err(Error::NonSquareAdjacency { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn er_full_probability_gives_complete_graph() {
        for seed in [0, 1, 17] {
            let g = erdos_renyi(10, 1.0, seed).unwrap();
            assert_eq!(g.edge_count(), 45);
        }
    }

    #[test]
    fn er_is_deterministic_per_seed() {
        let rho = (10.0f64).ln() / 10.0;
        let a = erdos_renyi(10, rho, 42).unwrap();
        let b = erdos_renyi(10, rho, 42).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        let c = erdos_renyi(10, rho, 43).unwrap();
        assert!(a.adjacency() != c.adjacency() || a.edge_count() == c.edge_count());
    }

    #[test]
    fn er_mean_edge_count_matches_binomial_when_dense() {
        // At rho=0.6 essentially every draw is connected, so rejection
        // sampling does not bias the edge count: binomial mean 27.0,
        // per-graph sd 3.286, SE of a 100-seed mean 0.3286.
        let mean = (0..100)
            .map(|seed| erdos_renyi(10, 0.6, seed).unwrap().edge_count() as f64)
            .sum::<f64>()
            / 100.0;
        assert!(
            (mean - 27.0).abs() <= 3.0 * 0.3286,
            "mean edge count {mean} vs binomial mean 27.0"
        );
    }

    #[test]
    fn er_mean_edge_count_matches_conditional_mean_when_sparse() {
        // At rho = ln(10)/10 only ~35% of draws are connected, and
        // conditioning on connectivity shifts the mean edge count well
        // above the binomial value 10.36: an independent 200k-sample
        // Monte Carlo estimate of the conditional mean gives 12.67 with
        // a per-graph sd of 2.13 (SE 0.213 for a 100-seed mean).
        let rho = (10.0f64).ln() / 10.0;
        let mean = (0..100)
            .map(|seed| erdos_renyi(10, rho, seed).unwrap().edge_count() as f64)
            .sum::<f64>()
            / 100.0;
        assert!(
            (mean - 12.67).abs() <= 0.75,
            "mean edge count {mean} vs conditional mean 12.67"
        );
    }

    #[test]
    fn er_rejects_bad_parameters() {
        assert!(erdos_renyi(1, 0.5, 0).is_err());
        assert!(erdos_renyi(10, 0.0, 0).is_err());
        assert!(erdos_renyi(10, 1.5, 0).is_err());
        // Cap of zero attempts can never succeed.
        assert!(matches!(
            erdos_renyi_with_cap(10, 0.5, 0, 0),
            Err(Error::ConnectivityCapExceeded { attempts: 0 })
        ));
    }

    #[test]
    fn laplacian_matches_hand_values() {
        let l2 = laplacian(&path_graph(2));
        assert_eq!(l2, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let l3 = laplacian(&path_graph(3));
        assert_eq!(
            l3,
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
        );

        let l4 = laplacian(&complete_graph(4));
        let expected = DMatrix::from_fn(4, 4, |i, j| if i == j { 3.0 } else { -1.0 });
        assert_eq!(l4, expected);
        for i in 0..4 {
            assert_eq!(l4.row(i).sum(), 0.0);
        }
    }

    #[test]
    fn two_path_half_step() {
        let cm = build_consensus_matrix(&path_graph(2), 0.5).unwrap();
        assert_eq!(
            cm.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5])
        );
        assert!((cm.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!(cm.eigenvalues()[1].abs() < 1e-12);
    }

    #[test]
    fn two_path_full_step_is_inadmissible() {
        // P would be the swap matrix with eigenvalue −1.
        assert!(matches!(
            build_consensus_matrix(&path_graph(2), 1.0),
            Err(Error::SpectrumViolation { .. })
        ));
    }

    #[test]
    fn three_path_full_step() {
        let cm = build_consensus_matrix(&path_graph(3), 1.0).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5]);
        assert!((cm.matrix() - expected).abs().max() < 1e-12);
        let eig = cm.eigenvalues();
        assert!((eig[0] - 1.0).abs() < 1e-9);
        assert!((eig[1] - 0.5).abs() < 1e-9);
        assert!((eig[2] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn paw_graph_admissibility_depends_on_kappa() {
        // λ_max(L) = 4 and d_max = 3, so κ = 3/2 lands exactly on −1 while
        // κ = 3/4 keeps the whole spectrum in [0, 1].
        let g = paw_graph();
        assert!(matches!(
            build_consensus_matrix(&g, 1.5),
            Err(Error::SpectrumViolation { .. })
        ));
        let cm = build_consensus_matrix(&g, 0.75).unwrap();
        let expected = [1.0, 0.75, 0.25, 0.0];
        for (got, want) in cm.eigenvalues().iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(cm.is_entrywise_nonnegative());
    }

    #[test]
    fn consensus_matrix_is_doubly_stochastic_and_orthonormal() {
        let rho = (10.0f64).ln() / 10.0;
        for seed in 0..5u64 {
            let g = erdos_renyi(8, rho.max(0.35), seed).unwrap();
            let cm = build_consensus_matrix(&g, 0.9).unwrap();
            let m = cm.agent_count();
            for i in 0..m {
                assert!((cm.matrix().row(i).sum() - 1.0).abs() < 1e-9);
                assert!((cm.matrix().column(i).sum() - 1.0).abs() < 1e-9);
            }
            // Leading eigenpair.
            assert!((cm.eigenvalues()[0] - 1.0).abs() < 1e-9);
            let flat = 1.0 / (m as f64).sqrt();
            for r in 0..m {
                assert!((cm.eigenvectors()[(r, 0)] - flat).abs() < 1e-9);
            }
            // Pairwise orthonormality.
            let u = cm.eigenvectors();
            let gram = u.transpose() * u;
            assert!((gram - DMatrix::identity(m, m)).abs().max() < 1e-9);
            // Reconstruction.
            let mut rebuilt = DMatrix::zeros(m, m);
            for p in 0..m {
                let col = u.column(p);
                rebuilt += col * col.transpose() * cm.eigenvalues()[p];
            }
            assert!((rebuilt - cm.matrix()).abs().max() < 1e-8);
        }
    }

    #[test]
    fn powers_converge_to_uniform_averaging() {
        for (g, kappa) in [
            (path_graph(3), 1.0),
            (paw_graph(), 0.75),
            (complete_graph(6), 5.0 / 6.0),
            (erdos_renyi(10, 0.4, 3).unwrap(), 0.8),
        ] {
            let cm = build_consensus_matrix(&g, kappa).unwrap();
            let m = cm.agent_count();
            let mut pt = cm.matrix().clone();
            for _ in 1..500 {
                pt = &pt * cm.matrix();
            }
            let uniform = DMatrix::from_element(m, m, 1.0 / m as f64);
            assert!((pt - uniform).abs().max() < 1e-6);
        }
    }

    #[test]
    fn single_node_consensus_is_identity() {
        let g = build_graph(DMatrix::zeros(1, 1)).unwrap();
        let cm = build_consensus_matrix(&g, 1.0).unwrap();
        assert_eq!(cm.matrix()[(0, 0)], 1.0);
        assert_eq!(cm.eigenvalues(), &[1.0]);
        assert_eq!(cm.dmax(), 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("# triangle plus pendant\n1 2\n1 3\n\n2 3\n3 4  # pendant\n")
            .unwrap();
        assert_eq!(g.agent_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.degrees(), vec![2, 2, 3, 1]);
        assert!(g.has_edge(0, 1) && g.has_edge(2, 3));
    }

    #[test]
    fn edge_list_single_node() {
        let g = parse_edge_list("1\n").unwrap();
        assert_eq!(g.agent_count(), 1);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            parse_edge_list("1 2 3\n"),
            Err(Error::EdgeList { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("1 one\n"),
            Err(Error::EdgeList { .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1\n"),
            Err(Error::EdgeList { .. })
        ));
        assert!(matches!(
            parse_edge_list("2 2\n"),
            Err(Error::SelfLoop { node: 2 })
        ));
        assert!(parse_edge_list("\n# nothing\n").is_err());
        // Gap in ids leaves node 2 isolated.
        assert!(matches!(
            parse_edge_list("1 3\n"),
            Err(Error::Disconnected)
        ));
    }
}
