//! N-armed Gaussian bandit model, regret accounting, and the fusion-center
//! lower bound used as a centralized baseline.
//!
//! [`BanditModel`] holds the arm means `m_i` and the common known reward
//! standard deviation `sigma_s`. Regret is always *expected* regret: each pull
//! of arm `i` contributes its gap `Δ_i = max_j m_j − m_i`, never the realized
//! reward noise. [`RegretTrace`] records one run's choices and accumulates
//! those gaps per agent.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Immutable description of the reward environment.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditModel {
    means: Vec<f64>,
    sigma_s: f64,
}

impl BanditModel {
    /// `means` are the per-arm Gaussian means; `sigma_s` is the common
    /// standard deviation (strictly positive). At least one arm is required;
    /// single-arm models are allowed for degenerate tests.
    pub fn new(means: Vec<f64>, sigma_s: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::invalid("arm means: at least one arm is required"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("arm means must be finite"));
        }
        if !(sigma_s > 0.0) || !sigma_s.is_finite() {
            return Err(Error::invalid("sigma_s must be a finite positive real"));
        }
        Ok(Self { means, sigma_s })
    }

    pub fn arm_count(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    pub fn best_mean(&self) -> f64 {
        self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index maximizer. Ties in the means only affect this label;
    /// regret uses the gaps, which are tie-safe.
    pub fn optimal_arm(&self) -> usize {
        let best = self.best_mean();
        self.means.iter().position(|&m| m == best).unwrap()
    }

    /// Gap of one arm: `best_mean − m_i` (zero for every maximizer).
    pub fn gap(&self, arm: usize) -> Result<f64> {
        let m = *self
            .means
            .get(arm)
            .ok_or_else(|| Error::index("arm", arm, self.means.len()))?;
        Ok(self.best_mean() - m)
    }

    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.means.iter().map(|m| best - m).collect()
    }
}

/// One draw from `Normal(m_arm, sigma_s²)`. Deterministic given the rng state.
pub fn sample_reward<R: Rng + ?Sized>(
    model: &BanditModel,
    arm: usize,
    rng: &mut R,
) -> Result<f64> {
    let mean = *model
        .means
        .get(arm)
        .ok_or_else(|| Error::index("arm", arm, model.means.len()))?;
    let normal = Normal::new(mean, model.sigma_s)
        .map_err(|_| Error::internal("Gaussian with validated sigma rejected"))?;
    Ok(normal.sample(rng))
}

/// Per-run history: chosen arms, realized rewards, cumulative expected regret,
/// and pull counts, all per agent.
///
/// Time is 1-based in the accessors to match the simulation clock; storage is
/// step-major.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    agent_count: usize,
    arm_count: usize,
    /// chosen[t-1][k] = arm pulled by agent k at step t.
    chosen: Vec<Vec<usize>>,
    /// rewards[t-1][k] = realized reward for that pull.
    rewards: Vec<Vec<f64>>,
    /// cum_regret[t-1][k] = Σ_{τ≤t} Δ_{chosen[τ][k]}.
    cum_regret: Vec<Vec<f64>>,
    /// pulls[k][i] = number of times agent k pulled arm i so far.
    pulls: Vec<Vec<u64>>,
}

impl RegretTrace {
    pub fn new(agent_count: usize, arm_count: usize, horizon_hint: usize) -> Self {
        Self {
            agent_count,
            arm_count,
            chosen: Vec::with_capacity(horizon_hint),
            rewards: Vec::with_capacity(horizon_hint),
            cum_regret: Vec::with_capacity(horizon_hint),
            pulls: vec![vec![0; arm_count]; agent_count],
        }
    }

    /// Append one simulation step: `chosen[k]` / `rewards[k]` describe agent
    /// k's pull. Gap accounting uses `model`, which must match the trace shape.
    pub fn record_step(
        &mut self,
        chosen: &[usize],
        rewards: &[f64],
        model: &BanditModel,
    ) -> Result<()> {
        if chosen.len() != self.agent_count || rewards.len() != self.agent_count {
            return Err(Error::dims(
                format!("{} agents", self.agent_count),
                format!("{} chosen / {} rewards", chosen.len(), rewards.len()),
            ));
        }
        if model.arm_count() != self.arm_count {
            return Err(Error::dims(
                format!("{} arms", self.arm_count),
                format!("{} arms", model.arm_count()),
            ));
        }
        let mut step_regret = Vec::with_capacity(self.agent_count);
        for (k, &arm) in chosen.iter().enumerate() {
            let gap = model.gap(arm)?;
            let prev = self
                .cum_regret
                .last()
                .map(|row| row[k])
                .unwrap_or(0.0);
            step_regret.push(prev + gap);
            self.pulls[k][arm] += 1;
        }
        self.chosen.push(chosen.to_vec());
        self.rewards.push(rewards.to_vec());
        self.cum_regret.push(step_regret);
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn arm_count(&self) -> usize {
        self.arm_count
    }

    /// Number of recorded steps (the realized horizon T).
    pub fn horizon(&self) -> usize {
        self.chosen.len()
    }

    /// Arm pulled by agent `k` at 1-based step `t`.
    pub fn chosen_arm(&self, t: usize, k: usize) -> Result<usize> {
        self.check_step(t)?;
        self.check_agent(k)?;
        Ok(self.chosen[t - 1][k])
    }

    pub fn reward(&self, t: usize, k: usize) -> Result<f64> {
        self.check_step(t)?;
        self.check_agent(k)?;
        Ok(self.rewards[t - 1][k])
    }

    /// Cumulative expected regret of agent `k` through 1-based step `t`.
    pub fn cumulative_regret(&self, t: usize, k: usize) -> Result<f64> {
        self.check_step(t)?;
        self.check_agent(k)?;
        Ok(self.cum_regret[t - 1][k])
    }

    /// Agent k's regret at the end of the trace (0 for an empty trace).
    pub fn final_regret(&self, k: usize) -> Result<f64> {
        self.check_agent(k)?;
        Ok(self.cum_regret.last().map(|row| row[k]).unwrap_or(0.0))
    }

    /// Final pull count of arm `i` by agent `k`.
    pub fn pull_count(&self, k: usize, i: usize) -> Result<u64> {
        self.check_agent(k)?;
        if i >= self.arm_count {
            return Err(Error::index("arm", i, self.arm_count));
        }
        Ok(self.pulls[k][i])
    }

    /// Σ_k n_i^k(T): how often the group pulled arm `i` in total.
    pub fn group_pulls_of_arm(&self, i: usize) -> Result<u64> {
        if i >= self.arm_count {
            return Err(Error::index("arm", i, self.arm_count));
        }
        Ok(self.pulls.iter().map(|row| row[i]).sum())
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.chosen.len() {
            return Err(Error::index("step", t, self.chosen.len()));
        }
        Ok(())
    }

    fn check_agent(&self, k: usize) -> Result<()> {
        if k >= self.agent_count {
            return Err(Error::index("agent", k, self.agent_count));
        }
        Ok(())
    }
}

/// Group regret from realized counts: Σ_k Σ_i Δ_i · n_i^k(T).
///
/// Equals the sum over time of the chosen-arm gaps; the equality of the two
/// accounting paths is exercised in the tests.
pub fn expected_group_regret(trace: &RegretTrace, model: &BanditModel) -> Result<f64> {
    if model.arm_count() != trace.arm_count {
        return Err(Error::dims(
            format!("{} arms", trace.arm_count),
            format!("{} arms", model.arm_count()),
        ));
    }
    let gaps = model.gaps();
    let mut total = 0.0;
    for row in &trace.pulls {
        for (i, &count) in row.iter().enumerate() {
            total += gaps[i] * count as f64;
        }
    }
    Ok(total)
}

/// Leading term of the centralized lower bound for one suboptimal arm:
/// `(2σ_s²/Δ_arm²)·ln T`.
///
/// The asymptotic `o(1)` correction is dropped. `T = 1` gives 0 (`ln 1 = 0`),
/// a documented boundary; `T = 0` is rejected.
pub fn fusion_center_lower_bound(model: &BanditModel, arm: usize, horizon: u64) -> Result<f64> {
    let gap = model.gap(arm)?;
    if gap <= 0.0 {
        return Err(Error::invalid(
            "fusion-center bound: arm must be suboptimal (gap > 0)",
        ));
    }
    if horizon == 0 {
        return Err(Error::invalid("fusion-center bound: horizon must be >= 1"));
    }
    let sigma = model.sigma_s;
    Ok(2.0 * sigma * sigma / (gap * gap) * (horizon as f64).ln())
}
