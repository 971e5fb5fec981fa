//! Simulator for cooperative multi-armed bandits over a communication graph.
//!
//! A team of `M` agents repeatedly chooses among `N` Gaussian-reward arms.
//! No agent sees the others' rewards directly; instead every agent runs
//! *running consensus*: each step it mixes its per-arm pull-count and
//! reward-sum estimates with its neighbors' through a doubly stochastic
//! matrix `P` built from the graph, then folds in its own newest sample.
//! Arms are chosen by an upper-confidence-bound rule whose exploration
//! bonus is widened by a per-agent, graph-dependent inflation term, so
//! well-connected agents explore less and accumulate less regret.
//!
//! The crate computes the graph-spectral quantities that drive all of
//! this (`ε_n`, `ε_c^k`, the node certainty `ς^k`), simulates single runs
//! and seeded Monte Carlo ensembles, and evaluates the matching
//! theoretical regret bounds so that simulation and theory can be checked
//! against each other.
//!
//! Modules, bottom up:
//!
//! * [`graph`] — communication graphs, the consensus matrix `P`, its
//!   eigendecomposition, spectral admissibility.
//! * [`spectral`] — `ε_n`, `ε_c^k`, `ς^k`, and an independent
//!   truncated-series oracle for cross-checking them.
//! * [`bandit`] — the Gaussian arm model, regret accounting, and the
//!   centralized lower-bound benchmark.
//! * [`agents`] — the networked estimation state, the consensus update,
//!   and the arm-selection policies (cooperative and single-agent).
//! * [`sim`] — run/ensemble drivers, the group regret bound, and the
//!   estimation/regret verification reports.
//!
//! Monte Carlo ensembles run in parallel when the `parallel` feature
//! (default) is enabled; results are bit-identical to the sequential
//! fallback regardless of thread count.

pub mod agents;
pub mod bandit;
pub mod error;
pub mod graph;
pub mod sim;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
