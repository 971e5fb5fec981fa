//! Graph-spectral explore–exploit measures derived from the consensus
//! matrix: the count-deviation bound `ε_n`, the per-agent variance
//! inflation `ε_c^k`, and the node certainty `ς^k = 1/ε_c^k`.
//!
//! `ε_n` caps how far any agent's running pull-count estimate can drift
//! from the centralized per-unit-agent count. `ε_c^k` inflates agent k's
//! estimator variance relative to a fusion center; it is assembled from
//! pairwise eigenvector terms `a_pj(k)` chosen so that every contribution
//! is nonnegative regardless of eigenvector sign conventions. `ε_c^k = 0`
//! means agent k estimates as well as a fusion center, reported as
//! infinite certainty with a `centralized-equivalent` flag.
//!
//! The sums over eigenvector components admit two readings of the printed
//! sign indicator (see [`IndicatorReading`]); the componentwise reading is
//! the default and the diagonal-entry reading is kept behind a flag for
//! comparison. With repeated eigenvalues the eigenbasis inside an
//! eigenspace is not unique, and `ε_c^k` genuinely depends on the basis
//! the solver picks; values are deterministic for this crate's solver and
//! the basis can be inspected via `ConsensusMatrix::eigenvectors`.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::ConsensusMatrix;

/// Below this value `ε_c^k` is reported as exactly zero and the agent is
/// flagged centralized-equivalent. Analytic zeros come out of the
/// eigendecomposition as values around 1e-16.
pub const CENTRALIZED_EPS: f64 = 1e-9;

/// How the sign indicator inside the eigenvector component sums is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorReading {
    /// The indicator follows the summation component: the sums split the
    /// Hadamard product `u_p ∘ u_j` into its positive and negative parts.
    /// This keeps the pairwise terms invariant under eigenvector
    /// negation and is the reading used everywhere by default.
    Componentwise,
    /// The indicator is pinned to the k-th diagonal entry, constant in
    /// the summation component. Orthogonality then collapses every
    /// cross term (`p ≠ j`), leaving only the squared-component diagonal.
    /// Kept for comparison.
    DiagonalEntry,
}

/// Positive/negative parts of the eigenvector Hadamard product
/// `u_p ∘ u_j`, summed over components.
#[derive(Debug, Clone, Copy)]
pub struct PairTerms {
    /// Σ_d max((u_p ∘ u_j)_d, 0) — nonnegative.
    pub nu_plus: f64,
    /// Σ_d min((u_p ∘ u_j)_d, 0) — nonpositive.
    pub nu_minus: f64,
    /// max(|nu_minus|, nu_plus).
    pub nu_max: f64,
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { what, index, len });
    }
    Ok(())
}

/// Count-deviation bound `ε_n = √M · Σ_{p≥2} |λ_p|/(1 − |λ_p|)`.
///
/// Zero exactly when all subdominant eigenvalues vanish (complete graph
/// at its flat-averaging step size, or a single node).
pub fn epsilon_n(cm: &ConsensusMatrix) -> f64 {
    let m = cm.agent_count();
    let sum: f64 = cm.eigenvalues()[1..]
        .iter()
        .map(|l| l.abs() / (1.0 - l.abs()))
        .sum();
    // An empty tail sums to IEEE −0.0; normalize so the zero prints unsigned.
    (m as f64).sqrt() * sum + 0.0
}

/// Componentwise positive/negative parts of `u_p ∘ u_j`.
pub fn pair_terms(cm: &ConsensusMatrix, p: usize, j: usize) -> Result<PairTerms> {
    let m = cm.agent_count();
    check_index("eigenvector", p, m)?;
    check_index("eigenvector", j, m)?;
    let u = cm.eigenvectors();
    let mut nu_plus = 0.0;
    let mut nu_minus = 0.0;
    for d in 0..m {
        let w = u[(d, p)] * u[(d, j)];
        if w >= 0.0 {
            nu_plus += w;
        } else {
            nu_minus += w;
        }
    }
    Ok(PairTerms {
        nu_plus,
        nu_minus,
        nu_max: nu_plus.max(-nu_minus),
    })
}

/// Nonnegative pairwise contribution of eigenpair (p, j) to agent k's
/// variance inflation, under the default componentwise reading.
///
/// The case split pairs matching signs: with `λ_p λ_j ≥ 0` the k-th
/// component of `u_p ∘ u_j` is weighted by the sum of the same-signed
/// components, and with `λ_p λ_j < 0` its magnitude is weighted by the
/// larger of the two one-sided sums. Negating any eigenvector flips both
/// factors together, so the result is sign-convention invariant.
pub fn a_pj(cm: &ConsensusMatrix, p: usize, j: usize, k: usize) -> Result<f64> {
    a_pj_with(cm, p, j, k, IndicatorReading::Componentwise)
}

/// [`a_pj`] under an explicit indicator reading.
pub fn a_pj_with(
    cm: &ConsensusMatrix,
    p: usize,
    j: usize,
    k: usize,
    reading: IndicatorReading,
) -> Result<f64> {
    let m = cm.agent_count();
    check_index("agent", k, m)?;
    check_index("eigenvector", p, m)?;
    check_index("eigenvector", j, m)?;
    let u = cm.eigenvectors();
    let w_k = u[(k, p)] * u[(k, j)];
    let (nu_plus, nu_minus) = match reading {
        IndicatorReading::Componentwise => {
            let terms = pair_terms(cm, p, j)?;
            (terms.nu_plus, terms.nu_minus)
        }
        IndicatorReading::DiagonalEntry => {
            let dot: f64 = (0..m).map(|d| u[(d, p)] * u[(d, j)]).sum();
            if w_k >= 0.0 {
                (dot, 0.0)
            } else {
                (0.0, dot)
            }
        }
    };
    let product = cm.eigenvalues()[p] * cm.eigenvalues()[j];
    let a = if product >= 0.0 {
        if w_k >= 0.0 {
            nu_plus * w_k
        } else {
            nu_minus * w_k
        }
    } else {
        nu_plus.max(-nu_minus) * w_k.abs()
    };
    Ok(a)
}

/// Per-agent variance inflation
/// `ε_c^k = M · Σ_{p=1..M} Σ_{j=2..M} (|λ_p λ_j|/(1 − |λ_p λ_j|)) · a_pj(k)`
/// (indices here are the 1-based positions in the sorted spectrum; the
/// Rust arguments are 0-based).
pub fn epsilon_c(cm: &ConsensusMatrix, k: usize) -> Result<f64> {
    epsilon_c_with(cm, k, IndicatorReading::Componentwise)
}

/// [`epsilon_c`] under an explicit indicator reading.
pub fn epsilon_c_with(cm: &ConsensusMatrix, k: usize, reading: IndicatorReading) -> Result<f64> {
    let m = cm.agent_count();
    check_index("agent", k, m)?;
    let lambda = cm.eigenvalues();
    let mut total = 0.0;
    for p in 0..m {
        for j in 1..m {
            let prod = (lambda[p] * lambda[j]).abs();
            total += prod / (1.0 - prod) * a_pj_with(cm, p, j, k, reading)?;
        }
    }
    Ok(m as f64 * total)
}

/// Independent cross-check: assemble `ε_n` and every `ε_c^k` from the
/// truncated geometric sums `Σ_{t=1..horizon} |λ_p|^t` and
/// `Σ_{t=1..horizon} |λ_p λ_j|^t` instead of the closed forms. Converges
/// to [`epsilon_n`]/[`epsilon_c`] as the horizon grows.
pub fn geometric_series_oracle(cm: &ConsensusMatrix, horizon: u32) -> Result<(f64, Vec<f64>)> {
    if horizon < 1 {
        return Err(Error::invalid("oracle horizon must be at least 1"));
    }
    let m = cm.agent_count();
    let lambda = cm.eigenvalues();

    let truncated = |x: f64| -> f64 {
        let mut sum = 0.0;
        let mut pow = 1.0;
        for _ in 0..horizon {
            pow *= x;
            sum += pow;
        }
        sum
    };

    let eps_n_est = (m as f64).sqrt()
        * lambda[1..]
            .iter()
            .map(|l| truncated(l.abs()))
            .sum::<f64>();

    let mut eps_c_est = vec![0.0; m];
    for p in 0..m {
        for j in 1..m {
            let series = truncated((lambda[p] * lambda[j]).abs());
            for (k, slot) in eps_c_est.iter_mut().enumerate() {
                *slot += series * a_pj(cm, p, j, k)?;
            }
        }
    }
    for slot in eps_c_est.iter_mut() {
        *slot *= m as f64;
    }
    Ok((eps_n_est, eps_c_est))
}

/// Node certainty `ς^k`: the reciprocal of `ε_c^k`, with zero inflation
/// reported as infinite certainty rather than a sentinel number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeCertainty {
    Finite(f64),
    /// `ε_c^k = 0`: agent k's estimator is as good as a fusion center's.
    CentralizedEquivalent,
}

impl NodeCertainty {
    pub fn is_centralized_equivalent(&self) -> bool {
        matches!(self, NodeCertainty::CentralizedEquivalent)
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            NodeCertainty::Finite(v) => Some(*v),
            NodeCertainty::CentralizedEquivalent => None,
        }
    }
}

impl fmt::Display for NodeCertainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeCertainty::Finite(v) => write!(f, "{v}"),
            NodeCertainty::CentralizedEquivalent => write!(f, "inf"),
        }
    }
}

/// The bundle the rest of the crate consumes: `ε_n`, all `ε_c^k` (snapped
/// to exact zero below [`CENTRALIZED_EPS`]), and the certainties.
#[derive(Debug, Clone)]
pub struct SpectralMetrics {
    pub eps_n: f64,
    pub eps_c: Vec<f64>,
    pub varsigma: Vec<NodeCertainty>,
}

impl SpectralMetrics {
    pub fn agent_count(&self) -> usize {
        self.eps_c.len()
    }

    /// Assemble a bundle from raw values, applying the same snapping and
    /// certainty rules as [`spectral_metrics`]. Useful for evaluating the
    /// regret bound at hypothetical measure values.
    pub fn from_parts(eps_n: f64, eps_c: Vec<f64>) -> Self {
        let eps_c: Vec<f64> = eps_c
            .into_iter()
            .map(|e| if e <= CENTRALIZED_EPS { 0.0 } else { e })
            .collect();
        let varsigma = eps_c
            .iter()
            .map(|&e| {
                if e == 0.0 {
                    NodeCertainty::CentralizedEquivalent
                } else {
                    NodeCertainty::Finite(1.0 / e)
                }
            })
            .collect();
        Self {
            eps_n,
            eps_c,
            varsigma,
        }
    }
}

/// Compute the full metric bundle under the default reading.
pub fn spectral_metrics(cm: &ConsensusMatrix) -> SpectralMetrics {
    spectral_metrics_with(cm, IndicatorReading::Componentwise)
}

/// [`spectral_metrics`] under an explicit indicator reading.
pub fn spectral_metrics_with(cm: &ConsensusMatrix, reading: IndicatorReading) -> SpectralMetrics {
    let m = cm.agent_count();
    let eps_c: Vec<f64> = (0..m)
        .map(|k| {
            // Index is in range by construction.
            let raw = epsilon_c_with(cm, k, reading).expect("agent index in range");
            if raw <= CENTRALIZED_EPS {
                0.0
            } else {
                raw
            }
        })
        .collect();
    let varsigma = eps_c
        .iter()
        .map(|&e| {
            if e == 0.0 {
                NodeCertainty::CentralizedEquivalent
            } else {
                NodeCertainty::Finite(1.0 / e)
            }
        })
        .collect();
    SpectralMetrics {
        eps_n: epsilon_n(cm),
        eps_c,
        varsigma,
    }
}
