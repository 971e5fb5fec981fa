//! Cooperative estimation state and arm-selection policies.
//!
//! Each agent keeps running-consensus estimates of per-unit-agent pull counts
//! (`n̂`) and cumulative rewards (`ŝ`). One simulation step: every agent pulls
//! an arm, the pull indicators and realized rewards are folded into the
//! estimates, and one consensus averaging round runs:
//!
//! ```text
//! n̂_i ← P (n̂_i + ξ_i)        ŝ_i ← P (ŝ_i + r_i)
//! ```
//!
//! column by column over arms `i`. The cooperative UCB policy ranks arms by
//! `μ̂ + C` where `μ̂ = ŝ/n̂` and the exploration bonus `C` widens with the
//! agent's certainty measure `ε_c^k`. A single-agent UCB baseline with the
//! same σ-aware bonus is included for comparison; with one agent and
//! `ε_c = 0` the cooperative expressions reduce to it bit for bit.
//!
//! Time convention: `NetworkState::t` counts *completed* steps. A selection
//! made after `t` completed steps decides step `t + 1` and uses `ln(t + 1)`;
//! initialization pulls count as steps, so the clock starts at 1.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::ConsensusMatrix;

/// Per-agent estimates after some number of consensus steps.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// M×N estimated per-unit-agent pull counts.
    n_hat: DMatrix<f64>,
    /// M×N estimated per-unit-agent cumulative rewards.
    s_hat: DMatrix<f64>,
    /// Completed steps.
    t: u64,
}

impl NetworkState {
    /// Zero-initialized state for `agent_count` agents and `arm_count` arms.
    pub fn new(agent_count: usize, arm_count: usize) -> Result<Self> {
        if agent_count == 0 || arm_count == 0 {
            return Err(Error::invalid("state needs at least one agent and one arm"));
        }
        Ok(Self {
            n_hat: DMatrix::zeros(agent_count, arm_count),
            s_hat: DMatrix::zeros(agent_count, arm_count),
            t: 0,
        })
    }

    /// Assemble a state from explicit estimate matrices (mostly for tests).
    pub fn from_parts(n_hat: DMatrix<f64>, s_hat: DMatrix<f64>, t: u64) -> Result<Self> {
        if n_hat.nrows() != s_hat.nrows() || n_hat.ncols() != s_hat.ncols() {
            return Err(Error::dims(
                format!("{}x{}", n_hat.nrows(), n_hat.ncols()),
                format!("{}x{}", s_hat.nrows(), s_hat.ncols()),
            ));
        }
        if n_hat.is_empty() {
            return Err(Error::invalid("state needs at least one agent and one arm"));
        }
        if n_hat.iter().chain(s_hat.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("state entries must be finite"));
        }
        Ok(Self { n_hat, s_hat, t })
    }

    pub fn agent_count(&self) -> usize {
        self.n_hat.nrows()
    }

    pub fn arm_count(&self) -> usize {
        self.n_hat.ncols()
    }

    /// Completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_hat(&self) -> &DMatrix<f64> {
        &self.n_hat
    }

    pub fn s_hat(&self) -> &DMatrix<f64> {
        &self.s_hat
    }

    pub fn n_hat_entry(&self, k: usize, i: usize) -> Result<f64> {
        self.check(k, i)?;
        Ok(self.n_hat[(k, i)])
    }

    pub fn s_hat_entry(&self, k: usize, i: usize) -> Result<f64> {
        self.check(k, i)?;
        Ok(self.s_hat[(k, i)])
    }

    fn check(&self, k: usize, i: usize) -> Result<()> {
        if k >= self.agent_count() {
            return Err(Error::index("agent", k, self.agent_count()));
        }
        if i >= self.arm_count() {
            return Err(Error::index("arm", i, self.arm_count()));
        }
        Ok(())
    }
}

/// Exact centralized bookkeeping used to cross-check the consensus estimates.
///
/// Counts are kept as integers, so `n_cent` (total pulls of an arm divided by
/// the number of agents) is exact up to one final division.
#[derive(Debug, Clone)]
pub struct CentralizedTracker {
    agent_count: usize,
    total_pulls: Vec<u64>,
    total_reward: Vec<f64>,
}

impl CentralizedTracker {
    pub fn new(agent_count: usize, arm_count: usize) -> Self {
        Self {
            agent_count,
            total_pulls: vec![0; arm_count],
            total_reward: vec![0.0; arm_count],
        }
    }

    /// Fold in one step: `chosen[k]` / `rewards[k]` describe agent k's pull.
    pub fn record_step(&mut self, chosen: &[usize], rewards: &[f64]) -> Result<()> {
        if chosen.len() != self.agent_count || rewards.len() != self.agent_count {
            return Err(Error::dims(
                format!("{} agents", self.agent_count),
                format!("{} chosen / {} rewards", chosen.len(), rewards.len()),
            ));
        }
        for (&arm, &r) in chosen.iter().zip(rewards) {
            if arm >= self.total_pulls.len() {
                return Err(Error::index("arm", arm, self.total_pulls.len()));
            }
            self.total_pulls[arm] += 1;
            self.total_reward[arm] += r;
        }
        Ok(())
    }

    pub fn total_pulls_of_arm(&self, i: usize) -> u64 {
        self.total_pulls[i]
    }

    /// Per-unit-agent pull count of arm `i` (total pulls / agent count).
    pub fn n_cent(&self, i: usize) -> f64 {
        self.total_pulls[i] as f64 / self.agent_count as f64
    }

    /// Per-unit-agent cumulative reward of arm `i`.
    pub fn s_cent(&self, i: usize) -> f64 {
        self.total_reward[i] / self.agent_count as f64
    }

    pub fn arm_count(&self) -> usize {
        self.total_pulls.len()
    }
}

/// Parameters of the cooperative UCB policy.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    gamma: f64,
    eps_c: Vec<f64>,
    sigma_s: f64,
}

impl PolicyParams {
    /// `gamma` must exceed 1 strictly (the regret bound's tail sum diverges at
    /// γ = 1); `eps_c` holds one nonnegative certainty measure per agent.
    pub fn new(gamma: f64, eps_c: Vec<f64>, sigma_s: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::invalid("gamma must be a finite real > 1"));
        }
        if !(sigma_s > 0.0) || !sigma_s.is_finite() {
            return Err(Error::invalid("sigma_s must be a finite positive real"));
        }
        if eps_c.is_empty() {
            return Err(Error::invalid("eps_c must have one entry per agent"));
        }
        if eps_c.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::invalid("eps_c entries must be finite and >= 0"));
        }
        Ok(Self {
            gamma,
            eps_c,
            sigma_s,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eps_c(&self) -> &[f64] {
        &self.eps_c
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }
}

/// Build the M×N pull-indicator and reward matrices for one step in which
/// agent `k` pulled `chosen[k]` and observed `rewards[k]`.
pub fn pull_matrices(
    agent_count: usize,
    arm_count: usize,
    chosen: &[usize],
    rewards: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if chosen.len() != agent_count || rewards.len() != agent_count {
        return Err(Error::dims(
            format!("{} agents", agent_count),
            format!("{} chosen / {} rewards", chosen.len(), rewards.len()),
        ));
    }
    let mut xi = DMatrix::zeros(agent_count, arm_count);
    let mut r = DMatrix::zeros(agent_count, arm_count);
    for (k, (&arm, &reward)) in chosen.iter().zip(rewards).enumerate() {
        if arm >= arm_count {
            return Err(Error::index("arm", arm, arm_count));
        }
        xi[(k, arm)] = 1.0;
        r[(k, arm)] = reward;
    }
    Ok((xi, r))
}

/// One running-consensus update: `n̂ ← P(n̂ + ξ)`, `ŝ ← P(ŝ + r)`, and the
/// step counter advances.
///
/// `xi` must be a 0/1 matrix with exactly one 1 per row (each agent pulls
/// exactly one arm per step) and `rewards` must be zero away from the pulls.
///
/// When P is entrywise nonnegative the update provably keeps `n̂ ≥ 0`; that is
/// asserted here. Consensus step sizes above `1/d_max` produce negative
/// entries in P, in which case transiently negative estimates are
/// mathematically possible and the guard is skipped — the policy layer treats
/// `n̂ ≤ 0` as "estimate unavailable" instead.
pub fn consensus_step(
    cm: &ConsensusMatrix,
    state: &mut NetworkState,
    xi: &DMatrix<f64>,
    rewards: &DMatrix<f64>,
) -> Result<()> {
    let (m, n) = (state.agent_count(), state.arm_count());
    if cm.matrix().nrows() != m {
        return Err(Error::dims(
            format!("{m} agents"),
            format!("{} consensus rows", cm.matrix().nrows()),
        ));
    }
    if xi.nrows() != m || xi.ncols() != n || rewards.nrows() != m || rewards.ncols() != n {
        return Err(Error::dims(
            format!("{m}x{n}"),
            format!(
                "{}x{} xi / {}x{} rewards",
                xi.nrows(),
                xi.ncols(),
                rewards.nrows(),
                rewards.ncols()
            ),
        ));
    }
    for k in 0..m {
        let mut ones = 0usize;
        for i in 0..n {
            let v = xi[(k, i)];
            if v == 1.0 {
                ones += 1;
            } else if v != 0.0 {
                return Err(Error::InvalidPullRow { agent: k + 1 });
            }
        }
        if ones != 1 {
            return Err(Error::InvalidPullRow { agent: k + 1 });
        }
        for i in 0..n {
            if xi[(k, i)] == 0.0 && rewards[(k, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "reward for agent {} placed on an arm it did not pull",
                    k + 1
                )));
            }
        }
    }

    state.n_hat = cm.matrix() * (&state.n_hat + xi);
    state.s_hat = cm.matrix() * (&state.s_hat + rewards);
    state.t += 1;

    if cm.is_entrywise_nonnegative() {
        for &v in state.n_hat.iter() {
            if v < 0.0 {
                return Err(Error::internal(format!(
                    "negative pull-count estimate {v} under a nonnegative consensus matrix"
                )));
            }
        }
    }
    Ok(())
}

/// Estimated empirical mean `ŝ_i^k / n̂_i^k`.
pub fn mu_hat(state: &NetworkState, k: usize, i: usize) -> Result<f64> {
    state.check(k, i)?;
    let n = state.n_hat[(k, i)];
    if n <= 0.0 {
        return Err(Error::EstimateUnavailable {
            agent: k + 1,
            arm: i + 1,
        });
    }
    Ok(state.s_hat[(k, i)] / n)
}

/// The cooperative exploration bonus as a plain formula:
/// `σ_s·√(2γ·((n̂+ε_c)/(M·n̂))·(ln t / n̂))`.
///
/// `t` is a positive real here so the formula can be evaluated at arbitrary
/// points; simulation call sites pass the integer step number.
pub fn cooperative_bonus(
    n_hat: f64,
    eps_c: f64,
    agent_count: f64,
    sigma_s: f64,
    gamma: f64,
    t: f64,
) -> f64 {
    let ln_t = t.ln();
    sigma_s * (2.0 * gamma * ((n_hat + eps_c) / (agent_count * n_hat)) * (ln_t / n_hat)).sqrt()
}

/// Single-agent σ-aware UCB bonus: `σ_s·√(2γ·ln t / n)`.
///
/// With one agent and `ε_c = 0` the cooperative expression evaluates to the
/// same floating-point result, operation for operation.
pub fn single_agent_bonus(n: f64, sigma_s: f64, gamma: f64, t: f64) -> f64 {
    let ln_t = t.ln();
    sigma_s * (2.0 * gamma * (ln_t / n)).sqrt()
}

/// Exploration bonus for agent `k` and arm `i` at the decision for step
/// `state.t() + 1`.
pub fn ucb_bonus(state: &NetworkState, k: usize, i: usize, params: &PolicyParams) -> Result<f64> {
    state.check(k, i)?;
    if params.eps_c.len() != state.agent_count() {
        return Err(Error::dims(
            format!("{} agents", state.agent_count()),
            format!("{} eps_c entries", params.eps_c.len()),
        ));
    }
    let n = state.n_hat[(k, i)];
    if n <= 0.0 {
        return Err(Error::EstimateUnavailable {
            agent: k + 1,
            arm: i + 1,
        });
    }
    Ok(cooperative_bonus(
        n,
        params.eps_c[k],
        state.agent_count() as f64,
        params.sigma_s,
        params.gamma,
        (state.t + 1) as f64,
    ))
}

/// Pick agent `k`'s arm for the next step: argmax of `μ̂ + C`, ties broken
/// uniformly at random with the run's generator.
///
/// The generator is only touched when two or more arms are *exactly* tied,
/// so rng streams shared with reward sampling stay aligned in the
/// generic position (ties have measure zero under Gaussian rewards).
pub fn select_arm<R: Rng + ?Sized>(
    state: &NetworkState,
    k: usize,
    params: &PolicyParams,
    rng: &mut R,
) -> Result<usize> {
    let n = state.arm_count();
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for i in 0..n {
        let q = mu_hat(state, k, i)? + ucb_bonus(state, k, i, params)?;
        if q > best {
            best = q;
            ties.clear();
            ties.push(i);
        } else if q == best {
            ties.push(i);
        }
    }
    if ties.len() == 1 {
        Ok(ties[0])
    } else {
        Ok(ties[rng.random_range(0..ties.len())])
    }
}

/// Pull counts and reward sums of a lone agent running the UCB baseline.
///
/// Counts are stored as floats accumulated by `+1.0` so the arithmetic
/// mirrors the cooperative path with an identity consensus matrix exactly.
#[derive(Debug, Clone)]
pub struct SingleAgentHistory {
    n: Vec<f64>,
    s: Vec<f64>,
}

impl SingleAgentHistory {
    pub fn new(arm_count: usize) -> Result<Self> {
        if arm_count == 0 {
            return Err(Error::invalid("history needs at least one arm"));
        }
        Ok(Self {
            n: vec![0.0; arm_count],
            s: vec![0.0; arm_count],
        })
    }

    pub fn record(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.n.len() {
            return Err(Error::index("arm", arm, self.n.len()));
        }
        self.n[arm] += 1.0;
        self.s[arm] += reward;
        Ok(())
    }

    pub fn arm_count(&self) -> usize {
        self.n.len()
    }

    pub fn pulls(&self, i: usize) -> f64 {
        self.n[i]
    }

    pub fn mean(&self, i: usize) -> Result<f64> {
        if self.n[i] <= 0.0 {
            return Err(Error::EstimateUnavailable { agent: 1, arm: i + 1 });
        }
        Ok(self.s[i] / self.n[i])
    }
}

/// Single-agent UCB selection at step `t`: argmax of mean + bonus, first
/// index winning ties. Every arm must have been sampled at least once.
pub fn single_agent_ucb_select(
    history: &SingleAgentHistory,
    t: u64,
    sigma_s: f64,
    gamma: f64,
) -> Result<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for i in 0..history.arm_count() {
        let q = history.mean(i)? + single_agent_bonus(history.n[i], sigma_s, gamma, t as f64);
        if q > best {
            best = q;
            arg = i;
        }
    }
    Ok(arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_consensus_matrix;
    use crate::spectral::epsilon_n;
    use crate::testutil::{path_graph, paw_graph};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_agent_consensus_example() {
        // P = [[1/2, 1/2], [1/2, 1/2]]: one pull spreads evenly.
        let cm = build_consensus_matrix(&path_graph(2), 0.5).unwrap();
        let mut state = NetworkState::new(2, 2).unwrap();
        let (xi, r) = pull_matrices(2, 2, &[0, 1], &[10.0, -4.0]).unwrap();
        consensus_step(&cm, &mut state, &xi, &r).unwrap();
        assert_eq!(state.t(), 1);
        assert_abs_diff_eq!(state.n_hat_entry(0, 0).unwrap(), 0.5);
        assert_abs_diff_eq!(state.n_hat_entry(1, 0).unwrap(), 0.5);
        assert_abs_diff_eq!(state.n_hat_entry(0, 1).unwrap(), 0.5);
        assert_abs_diff_eq!(state.s_hat_entry(0, 0).unwrap(), 5.0);
        assert_abs_diff_eq!(state.s_hat_entry(1, 1).unwrap(), -2.0);
    }

    #[test]
    fn identity_consensus_is_exact_bookkeeping() {
        let cm = build_consensus_matrix(&crate::testutil::single_node(), 0.7).unwrap();
        let mut state = NetworkState::new(1, 3).unwrap();
        let pulls = [(0usize, 2.0), (1, -1.0), (0, 4.0), (2, 0.25), (0, 1.0)];
        for &(arm, reward) in &pulls {
            let (xi, r) = pull_matrices(1, 3, &[arm], &[reward]).unwrap();
            consensus_step(&cm, &mut state, &xi, &r).unwrap();
        }
        assert_eq!(state.n_hat_entry(0, 0).unwrap(), 3.0);
        assert_eq!(state.n_hat_entry(0, 1).unwrap(), 1.0);
        assert_eq!(state.n_hat_entry(0, 2).unwrap(), 1.0);
        assert_eq!(state.s_hat_entry(0, 0).unwrap(), 7.0);
        assert_eq!(state.s_hat_entry(0, 2).unwrap(), 0.25);
        assert_eq!(mu_hat(&state, 0, 1).unwrap(), -1.0);
    }

    #[test]
    fn column_sums_and_sandwich_hold_under_random_play() {
        let cm = build_consensus_matrix(&paw_graph(), 0.75).unwrap();
        let eps_n = epsilon_n(&cm);
        let (m, n) = (4usize, 3usize);
        let mut state = NetworkState::new(m, n).unwrap();
        let mut tracker = CentralizedTracker::new(m, n);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let chosen: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
            let rewards: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
            let (xi, r) = pull_matrices(m, n, &chosen, &rewards).unwrap();
            consensus_step(&cm, &mut state, &xi, &r).unwrap();
            tracker.record_step(&chosen, &rewards).unwrap();

            for i in 0..n {
                // Column-sum conservation: Σ_k n̂ = total pulls exactly.
                let col_sum: f64 = (0..m).map(|k| state.n_hat_entry(k, i).unwrap()).sum();
                assert_abs_diff_eq!(
                    col_sum,
                    tracker.total_pulls_of_arm(i) as f64,
                    epsilon = 1e-9
                );
                // Count-deviation sandwich around the centralized count.
                for k in 0..m {
                    let dev = (state.n_hat_entry(k, i).unwrap() - tracker.n_cent(i)).abs();
                    assert!(dev <= eps_n + 1e-9, "deviation {dev} above ε_n = {eps_n}");
                }
                // Nonnegative estimates under a nonnegative P.
                for k in 0..m {
                    assert!(state.n_hat_entry(k, i).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn consensus_step_rejects_malformed_input() {
        let cm = build_consensus_matrix(&path_graph(2), 0.5).unwrap();
        let mut state = NetworkState::new(2, 2).unwrap();

        // Row with two pulls.
        let mut xi = DMatrix::zeros(2, 2);
        xi[(0, 0)] = 1.0;
        xi[(0, 1)] = 1.0;
        xi[(1, 0)] = 1.0;
        let r = DMatrix::zeros(2, 2);
        assert!(matches!(
            consensus_step(&cm, &mut state, &xi, &r),
            Err(Error::InvalidPullRow { agent: 1 })
        ));

        // Row with no pull.
        let mut xi = DMatrix::zeros(2, 2);
        xi[(0, 0)] = 1.0;
        assert!(matches!(
            consensus_step(&cm, &mut state, &xi, &r),
            Err(Error::InvalidPullRow { agent: 2 })
        ));

        // Non-0/1 indicator.
        let mut xi = DMatrix::zeros(2, 2);
        xi[(0, 0)] = 0.5;
        xi[(1, 0)] = 1.0;
        assert!(consensus_step(&cm, &mut state, &xi, &r).is_err());

        // Reward on an arm the agent did not pull.
        let (xi, _) = pull_matrices(2, 2, &[0, 1], &[1.0, 1.0]).unwrap();
        let mut bad_r = DMatrix::zeros(2, 2);
        bad_r[(0, 1)] = 3.0;
        bad_r[(1, 1)] = 1.0;
        assert!(consensus_step(&cm, &mut state, &xi, &bad_r).is_err());

        // Dimension mismatch.
        let (xi3, r3) = pull_matrices(3, 2, &[0, 0, 1], &[1.0, 1.0, 1.0]).unwrap();
        assert!(consensus_step(&cm, &mut state, &xi3, &r3).is_err());

        // Untouched state after all the failures.
        assert_eq!(state.t(), 0);
        assert_eq!(state.n_hat_entry(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn mu_hat_basics() {
        let n_hat = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let s_hat = DMatrix::from_row_slice(1, 2, &[10.0, 1.0]);
        let state = NetworkState::from_parts(n_hat, s_hat, 3).unwrap();
        assert_eq!(mu_hat(&state, 0, 0).unwrap(), 5.0);
        assert!(matches!(
            mu_hat(&state, 0, 1),
            Err(Error::EstimateUnavailable { agent: 1, arm: 2 })
        ));
        assert!(mu_hat(&state, 1, 0).is_err());
    }

    #[test]
    fn bonus_formula_reference_points() {
        // n̂=1, ε_c=0, M=1, σ=1, γ=2, t=e → √(2·2·1·1) = 2.
        let b = cooperative_bonus(1.0, 0.0, 1.0, 1.0, 2.0, std::f64::consts::E);
        assert_eq!(b, 2.0);
        // ln 1 = 0 kills the bonus no matter what.
        assert_eq!(cooperative_bonus(5.0, 3.0, 4.0, 30.0, 1.1, 1.0), 0.0);
        assert_eq!(single_agent_bonus(7.0, 30.0, 1.1, 1.0), 0.0);
    }

    #[test]
    fn cooperative_bonus_reduces_to_single_agent_bitwise() {
        for &n in &[1.0, 2.0, 3.0, 7.0, 100.0, 0.5, 12.25] {
            for &t in &[2.0, 3.0, 10.0, 999.0, 1e6] {
                for &gamma in &[1.1, 1.5, 2.0] {
                    let coop = cooperative_bonus(n, 0.0, 1.0, 30.0, gamma, t);
                    let single = single_agent_bonus(n, 30.0, gamma, t);
                    assert_eq!(coop.to_bits(), single.to_bits());
                }
            }
        }
    }

    #[test]
    fn ucb_bonus_uses_next_step_clock() {
        let n_hat = DMatrix::from_row_slice(1, 1, &[1.0]);
        let s_hat = DMatrix::from_row_slice(1, 1, &[0.0]);
        // After 0 completed steps the decision is for step 1 → ln 1 = 0.
        let state = NetworkState::from_parts(n_hat.clone(), s_hat.clone(), 0).unwrap();
        let params = PolicyParams::new(2.0, vec![0.0], 1.0).unwrap();
        assert_eq!(ucb_bonus(&state, 0, 0, &params).unwrap(), 0.0);
        // After 7 completed steps the decision uses ln 8.
        let state = NetworkState::from_parts(n_hat, s_hat, 7).unwrap();
        let expect = cooperative_bonus(1.0, 0.0, 1.0, 1.0, 2.0, 8.0);
        assert_eq!(ucb_bonus(&state, 0, 0, &params).unwrap(), expect);
    }

    #[test]
    fn policy_params_validation() {
        assert!(PolicyParams::new(1.0, vec![0.0], 1.0).is_err());
        assert!(PolicyParams::new(0.9, vec![0.0], 1.0).is_err());
        assert!(PolicyParams::new(1.000001, vec![0.0], 1.0).is_ok());
        assert!(PolicyParams::new(1.1, vec![0.0], 0.0).is_err());
        assert!(PolicyParams::new(1.1, vec![], 1.0).is_err());
        assert!(PolicyParams::new(1.1, vec![-0.1], 1.0).is_err());
        assert!(PolicyParams::new(1.1, vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn select_arm_prefers_dominant_mean() {
        let n_hat = DMatrix::from_row_slice(1, 3, &[5.0, 5.0, 5.0]);
        let s_hat = DMatrix::from_row_slice(1, 3, &[0.0, 5000.0, 0.0]);
        let state = NetworkState::from_parts(n_hat, s_hat, 15).unwrap();
        let params = PolicyParams::new(1.1, vec![2.0], 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_arm(&state, 0, &params, &mut rng).unwrap(), 1);
    }

    #[test]
    fn select_arm_breaks_exact_ties_uniformly() {
        // Perfectly symmetric estimates: all four arms share one Q value.
        let n_hat = DMatrix::from_element(1, 4, 2.0);
        let s_hat = DMatrix::from_element(1, 4, 6.0);
        let state = NetworkState::from_parts(n_hat, s_hat, 8).unwrap();
        let params = PolicyParams::new(1.1, vec![1.5], 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let trials = 10_000;
        let mut counts = [0u32; 4];
        for _ in 0..trials {
            counts[select_arm(&state, 0, &params, &mut rng).unwrap()] += 1;
        }
        // Binomial(10000, 1/4): sd ≈ 43.3; allow 3 sd.
        let sd = (trials as f64 * 0.25 * 0.75).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - 2500.0).abs() <= 3.0 * sd,
                "tie-break counts {counts:?} not uniform"
            );
        }
    }

    #[test]
    fn select_arm_is_shift_invariant() {
        // Adding a constant to every μ̂ (achieved exactly by ŝ += c·n̂ with
        // n̂ = 1) leaves the decision unchanged.
        let n_hat = DMatrix::from_element(1, 5, 1.0);
        let s_hat = DMatrix::from_row_slice(1, 5, &[3.0, -2.0, 7.5, 7.0, 0.0]);
        let shifted = s_hat.map(|s| s + 64.0);
        let a = NetworkState::from_parts(n_hat.clone(), s_hat, 20).unwrap();
        let b = NetworkState::from_parts(n_hat, shifted, 20).unwrap();
        let params = PolicyParams::new(1.3, vec![0.5], 2.0).unwrap();
        for seed in 0..50 {
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(
                select_arm(&a, 0, &params, &mut r1).unwrap(),
                select_arm(&b, 0, &params, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn select_arm_shape_errors() {
        let state = NetworkState::new(2, 3).unwrap();
        // eps_c sized for the wrong agent count.
        let params = PolicyParams::new(1.1, vec![0.0], 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(select_arm(&state, 0, &params, &mut rng).is_err());
        // Uninitialized estimates propagate "estimate unavailable".
        let params2 = PolicyParams::new(1.1, vec![0.0, 0.0], 30.0).unwrap();
        assert!(matches!(
            select_arm(&state, 0, &params2, &mut rng),
            Err(Error::EstimateUnavailable { .. })
        ));
    }

    #[test]
    fn single_agent_select_basics() {
        let mut hist = SingleAgentHistory::new(1).unwrap();
        hist.record(0, 5.0).unwrap();
        assert_eq!(single_agent_ucb_select(&hist, 2, 30.0, 1.1).unwrap(), 0);

        let mut hist = SingleAgentHistory::new(3).unwrap();
        hist.record(0, 1.0).unwrap();
        hist.record(1, 100.0).unwrap();
        // Arm 2 unsampled → initialization guard.
        assert!(single_agent_ucb_select(&hist, 3, 30.0, 1.1).is_err());
        hist.record(2, 1.0).unwrap();
        assert_eq!(single_agent_ucb_select(&hist, 4, 30.0, 1.1).unwrap(), 1);
    }
}
