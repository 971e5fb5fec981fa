//! Simulation orchestration: single runs, Monte Carlo ensembles, the group
//! regret bound, the estimation-guarantee verifiers, and the random-graph
//! sweep.
//!
//! Determinism contract: run `r` of an ensemble always uses seed
//! `base_seed + r` and its own generator. Per-run results are collected in run
//! order and reduced sequentially, so ensembles are bit-identical between
//! repeated invocations, across thread counts, and between the parallel and
//! sequential code paths (the `parallel` feature only changes who computes
//! each run, never the reduction order).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{
    consensus_step, mu_hat, pull_matrices, select_arm, single_agent_ucb_select,
    CentralizedTracker, NetworkState, PolicyParams, SingleAgentHistory,
};
use crate::bandit::{sample_reward, BanditModel, RegretTrace};
use crate::error::{Error, Result};
use crate::graph::{build_consensus_matrix, erdos_renyi, Graph};
use crate::spectral::{spectral_metrics, SpectralMetrics};

/// Extra tolerance on the count-deviation sandwich check, on top of ε_n.
pub const SANDWICH_SLACK: f64 = 1e-9;

/// Monte Carlo slack factor allowed on the variance bound check.
pub const VARIANCE_SLACK: f64 = 0.10;

/// Which rule chooses arms during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Cooperative UCB after a synchronized initialization phase.
    Policy,
    /// Deterministic staggered round-robin: agent k pulls arm
    /// `(t − 1 + k) mod N` at step t. Every agent visits every arm once per N
    /// steps, so no separate initialization is needed. Used by the
    /// estimation-moment verifiers, which require a schedule that does not
    /// depend on the observed rewards.
    RoundRobin,
}

/// How the policy's initialization steps assign arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Steps 1..=N: every agent pulls arm t. Doubly stochastic averaging then
    /// gives n̂_i^k = 1 exactly for every agent and arm at the end of the
    /// phase, for any admissible consensus matrix.
    Synchronized,
    /// Steps 1..=N: agent k pulls arm `(t − 1 + k) mod N`. Covers every arm
    /// per agent but leaves the estimates unevenly mixed; kept for
    /// comparisons.
    Staggered,
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: BanditModel,
    pub graph: Graph,
    /// Consensus step-size scale κ.
    pub kappa: f64,
    /// Exploration exponent γ (> 1 strictly).
    pub gamma: f64,
    /// Steps per run, counting initialization.
    pub horizon: u64,
    /// Monte Carlo run count.
    pub runs: u32,
    pub base_seed: u64,
    pub schedule: Schedule,
    pub init: InitMode,
}

impl ExperimentConfig {
    /// Policy experiment with synchronized initialization.
    pub fn policy(
        model: BanditModel,
        graph: Graph,
        kappa: f64,
        gamma: f64,
        horizon: u64,
        runs: u32,
        base_seed: u64,
    ) -> Self {
        Self {
            model,
            graph,
            kappa,
            gamma,
            horizon,
            runs,
            base_seed,
            schedule: Schedule::Policy,
            init: InitMode::Synchronized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be >= 1"));
        }
        if self.horizon < self.model.arm_count() as u64 {
            return Err(Error::invalid(format!(
                "horizon {} too short: initialization needs one step per arm ({})",
                self.horizon,
                self.model.arm_count()
            )));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma must be a finite real > 1"));
        }
        Ok(())
    }
}

/// Outcome of one simulation run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trace: RegretTrace,
    pub final_state: NetworkState,
    /// Largest |n̂_i^k − n_i^cent| seen at any step.
    pub max_count_deviation: f64,
}

/// The arm agent `k` pulls at 1-based step `t` of the staggered round-robin.
fn round_robin_arm(t: u64, k: usize, arm_count: usize) -> usize {
    ((t - 1) as usize + k) % arm_count
}

/// Execute one run with the given seed, asserting the count-deviation
/// sandwich at every step.
pub fn run_once(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let cm = build_consensus_matrix(&cfg.graph, cfg.kappa)?;
    let metrics = spectral_metrics(&cm);
    let params = PolicyParams::new(cfg.gamma, metrics.eps_c.clone(), cfg.model.sigma_s())?;
    run_once_prepared(cfg, &cm, &metrics, &params, seed)
}

/// `run_once` with the consensus matrix, spectral metrics, and policy
/// parameters precomputed — the ensemble drivers share them across runs.
fn run_once_prepared(
    cfg: &ExperimentConfig,
    cm: &crate::graph::ConsensusMatrix,
    metrics: &SpectralMetrics,
    params: &PolicyParams,
    seed: u64,
) -> Result<RunRecord> {
    let m = cfg.graph.agent_count();
    let n = cfg.model.arm_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = NetworkState::new(m, n)?;
    let mut tracker = CentralizedTracker::new(m, n);
    let mut trace = RegretTrace::new(m, n, cfg.horizon as usize);
    let mut max_dev = 0.0f64;

    for t in 1..=cfg.horizon {
        let chosen: Vec<usize> = match cfg.schedule {
            Schedule::RoundRobin => (0..m).map(|k| round_robin_arm(t, k, n)).collect(),
            Schedule::Policy if t <= n as u64 => match cfg.init {
                InitMode::Synchronized => vec![(t - 1) as usize; m],
                InitMode::Staggered => (0..m).map(|k| round_robin_arm(t, k, n)).collect(),
            },
            Schedule::Policy => {
                let mut picks = Vec::with_capacity(m);
                for k in 0..m {
                    picks.push(select_arm(&state, k, params, &mut rng)?);
                }
                picks
            }
        };
        let mut rewards = Vec::with_capacity(m);
        for &arm in &chosen {
            rewards.push(sample_reward(&cfg.model, arm, &mut rng)?);
        }

        let (xi, r) = pull_matrices(m, n, &chosen, &rewards)?;
        consensus_step(cm, &mut state, &xi, &r)?;
        tracker.record_step(&chosen, &rewards)?;
        trace.record_step(&chosen, &rewards, &cfg.model)?;

        // Count-deviation sandwich: every estimate stays within ε_n of the
        // centralized per-unit-agent count. A violation is a defect, not an
        // input problem.
        for i in 0..n {
            let cent = tracker.n_cent(i);
            for k in 0..m {
                let dev = (state.n_hat_entry(k, i)? - cent).abs();
                if dev > max_dev {
                    max_dev = dev;
                }
                if dev > metrics.eps_n + SANDWICH_SLACK {
                    return Err(Error::SandwichViolation {
                        t,
                        agent: k + 1,
                        arm: i + 1,
                        n_hat: state.n_hat_entry(k, i)?,
                        n_cent: cent,
                        eps_n: metrics.eps_n,
                    });
                }
            }
        }
    }

    Ok(RunRecord {
        trace,
        final_state: state,
        max_count_deviation: max_dev,
    })
}

/// Aggregated Monte Carlo results.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub agent_count: usize,
    pub arm_count: usize,
    pub horizon: u64,
    pub runs: u32,
    /// `mean_regret[t-1][k]`: mean cumulative expected regret of agent k
    /// through step t.
    pub mean_regret: Vec<Vec<f64>>,
    /// Standard error of the mean, same shape (zero when runs = 1).
    pub stderr_regret: Vec<Vec<f64>>,
    /// `mean_pulls[k][i]`: mean final pull count of arm i by agent k.
    pub mean_pulls: Vec<Vec<f64>>,
    /// `mean_group_pulls[i] = Σ_k mean_pulls[k][i]`.
    pub mean_group_pulls: Vec<f64>,
    /// Mean final group regret (= Σ_k final per-agent mean regret, exactly).
    pub group_regret: f64,
    /// Spectral measures of the consensus matrix the ensemble ran on.
    pub spectral: SpectralMetrics,
    /// Largest sandwich deviation across every run and step.
    pub max_count_deviation: f64,
}

impl EnsembleResult {
    pub fn final_mean_regret(&self, k: usize) -> f64 {
        self.mean_regret.last().map(|row| row[k]).unwrap_or(0.0)
    }

    pub fn final_stderr_regret(&self, k: usize) -> f64 {
        self.stderr_regret.last().map(|row| row[k]).unwrap_or(0.0)
    }
}

/// What finalization keeps from each run.
struct RunSummary {
    /// [t-1][k] cumulative regret.
    regret: Vec<Vec<f64>>,
    /// [k][i] final pulls.
    pulls: Vec<Vec<u64>>,
    max_dev: f64,
}

fn summarize_run(rec: &RunRecord) -> Result<RunSummary> {
    let m = rec.trace.agent_count();
    let n = rec.trace.arm_count();
    let horizon = rec.trace.horizon();
    let mut regret = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut row = Vec::with_capacity(m);
        for k in 0..m {
            row.push(rec.trace.cumulative_regret(t, k)?);
        }
        regret.push(row);
    }
    let mut pulls = vec![vec![0u64; n]; m];
    for (k, row) in pulls.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = rec.trace.pull_count(k, i)?;
        }
    }
    Ok(RunSummary {
        regret,
        pulls,
        max_dev: rec.max_count_deviation,
    })
}

/// Deterministic reduction of per-run summaries, in run order.
fn finalize_ensemble(
    cfg: &ExperimentConfig,
    spectral: SpectralMetrics,
    per_run: Vec<RunSummary>,
) -> Result<EnsembleResult> {
    let m = cfg.graph.agent_count();
    let n = cfg.model.arm_count();
    let horizon = cfg.horizon as usize;
    let runs = per_run.len();
    if runs != cfg.runs as usize {
        return Err(Error::internal("ensemble produced a wrong run count"));
    }
    let rf = runs as f64;

    let mut mean_regret = vec![vec![0.0f64; m]; horizon];
    for summary in &per_run {
        for (t, row) in summary.regret.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                mean_regret[t][k] += v;
            }
        }
    }
    for row in &mut mean_regret {
        for v in row.iter_mut() {
            *v /= rf;
        }
    }

    // Second pass for the standard errors keeps the arithmetic stable and
    // independent of how runs were scheduled.
    let mut stderr_regret = vec![vec![0.0f64; m]; horizon];
    if runs >= 2 {
        for summary in &per_run {
            for (t, row) in summary.regret.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    let d = v - mean_regret[t][k];
                    stderr_regret[t][k] += d * d;
                }
            }
        }
        for row in &mut stderr_regret {
            for v in row.iter_mut() {
                *v = (*v / (rf - 1.0)).sqrt() / rf.sqrt();
            }
        }
    }

    let mut mean_pulls = vec![vec![0.0f64; n]; m];
    for summary in &per_run {
        for (k, row) in summary.pulls.iter().enumerate() {
            for (i, &c) in row.iter().enumerate() {
                mean_pulls[k][i] += c as f64;
            }
        }
    }
    for row in &mut mean_pulls {
        for v in row.iter_mut() {
            *v /= rf;
        }
    }
    let mean_group_pulls: Vec<f64> = (0..n).map(|i| (0..m).map(|k| mean_pulls[k][i]).sum::<f64>()).collect();

    let group_regret = mean_regret
        .last()
        .map(|row| row.iter().sum::<f64>())
        .unwrap_or(0.0);
    let max_count_deviation = per_run.iter().fold(0.0f64, |acc, s| acc.max(s.max_dev));

    Ok(EnsembleResult {
        agent_count: m,
        arm_count: n,
        horizon: cfg.horizon,
        runs: cfg.runs,
        mean_regret,
        stderr_regret,
        mean_pulls,
        mean_group_pulls,
        group_regret,
        spectral,
        max_count_deviation,
    })
}

fn prepare(cfg: &ExperimentConfig) -> Result<(crate::graph::ConsensusMatrix, SpectralMetrics, PolicyParams)> {
    cfg.validate()?;
    let cm = build_consensus_matrix(&cfg.graph, cfg.kappa)?;
    let metrics = spectral_metrics(&cm);
    let params = PolicyParams::new(cfg.gamma, metrics.eps_c.clone(), cfg.model.sigma_s())?;
    Ok((cm, metrics, params))
}

/// Run the ensemble on the current thread only. Always available; the
/// parallel driver must agree with this bit for bit.
pub fn run_ensemble_sequential(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    let (cm, metrics, params) = prepare(cfg)?;
    let mut per_run = Vec::with_capacity(cfg.runs as usize);
    for r in 0..cfg.runs {
        let rec = run_once_prepared(cfg, &cm, &metrics, &params, cfg.base_seed.wrapping_add(r as u64))?;
        per_run.push(summarize_run(&rec)?);
    }
    finalize_ensemble(cfg, metrics, per_run)
}

/// Run `cfg.runs` independent runs (seeds `base_seed + r`) and aggregate.
///
/// With the `parallel` feature the runs are distributed across the rayon
/// pool; summaries are still reduced in run order.
#[cfg(feature = "parallel")]
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    use rayon::prelude::*;
    let (cm, metrics, params) = prepare(cfg)?;
    let results: Vec<Result<RunSummary>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let rec = run_once_prepared(cfg, &cm, &metrics, &params, cfg.base_seed.wrapping_add(r as u64))?;
            summarize_run(&rec)
        })
        .collect();
    let per_run = results.into_iter().collect::<Result<Vec<_>>>()?;
    finalize_ensemble(cfg, metrics, per_run)
}

#[cfg(not(feature = "parallel"))]
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    run_ensemble_sequential(cfg)
}

/// Upper bound on the expected total pulls of a suboptimal arm by the whole
/// group through step `horizon`:
///
/// ```text
/// ⌈ M·ε_n + Σ_k (8 σ_s² γ (1 + ε_c^k) / (M Δ_i²)) · ln T ⌉ + M·γ/(γ−1)
/// ```
///
/// The ceiling wraps the entire bracket. Snapped-to-zero ε values make the
/// centralized case exact.
pub fn theorem1_bound(
    model: &BanditModel,
    spectral: &SpectralMetrics,
    arm: usize,
    horizon: u64,
    gamma: f64,
) -> Result<f64> {
    let gap = model.gap(arm)?;
    if gap <= 0.0 {
        return Err(Error::invalid(
            "group pull bound: arm must be suboptimal (gap > 0)",
        ));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma must be a finite real > 1"));
    }
    if horizon == 0 {
        return Err(Error::invalid("group pull bound: horizon must be >= 1"));
    }
    let m = spectral.agent_count() as f64;
    let sigma = model.sigma_s();
    let ln_t = (horizon as f64).ln();
    let per_agent: f64 = spectral
        .eps_c
        .iter()
        .map(|&ec| 8.0 * sigma * sigma * gamma * (1.0 + ec) / (m * gap * gap) * ln_t)
        .sum();
    let bracket = m * spectral.eps_n + per_agent;
    Ok(bracket.ceil() + m * gamma / (gamma - 1.0))
}

/// One arm's entry in a bound-verification report.
#[derive(Debug, Clone)]
pub struct ArmBoundCheck {
    /// 0-based arm index.
    pub arm: usize,
    pub gap: f64,
    /// Monte Carlo mean of the group's total pulls of this arm at T.
    pub empirical_group_pulls: f64,
    pub bound: f64,
    /// `bound − empirical` (nonnegative when the bound holds).
    pub margin: f64,
    pub ok: bool,
}

/// Result of checking the group pull bound against an ensemble.
#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub checks: Vec<ArmBoundCheck>,
    pub all_ok: bool,
    pub ensemble: EnsembleResult,
}

/// Run the policy ensemble and compare every suboptimal arm's empirical mean
/// group pulls against [`theorem1_bound`].
pub fn verify_theorem1(cfg: &ExperimentConfig) -> Result<Theorem1Report> {
    if cfg.schedule != Schedule::Policy {
        return Err(Error::invalid("bound verification needs the policy schedule"));
    }
    let ensemble = run_ensemble(cfg)?;
    let mut checks = Vec::new();
    for arm in 0..cfg.model.arm_count() {
        if cfg.model.gap(arm)? <= 0.0 {
            continue;
        }
        let bound = theorem1_bound(&cfg.model, &ensemble.spectral, arm, cfg.horizon, cfg.gamma)?;
        let empirical = ensemble.mean_group_pulls[arm];
        checks.push(ArmBoundCheck {
            arm,
            gap: cfg.model.gap(arm)?,
            empirical_group_pulls: empirical,
            bound,
            margin: bound - empirical,
            ok: empirical <= bound,
        });
    }
    let all_ok = !checks.is_empty() && checks.iter().all(|c| c.ok);
    Ok(Theorem1Report {
        checks,
        all_ok,
        ensemble,
    })
}

/// One (checkpoint, agent, arm) moment check from the estimation verifier.
#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub t: u64,
    pub agent: usize,
    pub arm: usize,
    /// Monte Carlo mean of μ̂ across runs.
    pub mean_estimate: f64,
    pub model_mean: f64,
    /// Standard error of that Monte Carlo mean.
    pub standard_error: f64,
    /// Monte Carlo variance of μ̂ across runs.
    pub variance: f64,
    /// `(σ_s²/M)·(n̂ + ε_c^k)/n̂²` at the checkpoint (n̂ is deterministic
    /// under the round-robin schedule).
    pub variance_bound: f64,
    pub n_hat: f64,
    pub mean_within_3se: bool,
    pub variance_within_bound: bool,
}

/// Report from the estimation-guarantee verifier.
#[derive(Debug, Clone)]
pub struct Proposition1Report {
    pub eps_n: f64,
    /// Statement 1 evidence: worst |n̂ − n_cent| over all runs and steps.
    pub max_count_deviation: f64,
    pub sandwich_ok: bool,
    pub checks: Vec<MomentCheck>,
    /// Statement 2: every check's mean within 3 standard errors.
    pub unbiasedness_ok: bool,
    /// Statement 3: every check's variance within the bound (plus slack).
    pub variance_ok: bool,
    pub runs: u32,
}

/// Verify the three estimation guarantees under the deterministic round-robin
/// schedule, at the given checkpoints (each ≥ N so every estimate exists).
///
/// Statement1 (the count sandwich) is asserted inside every run; this
/// additionally reports the observed worst deviation. Statements 2 and 3
/// compare the Monte Carlo mean and variance of μ̂_i^k at each checkpoint
/// against the model mean and the spectral variance bound.
pub fn verify_proposition1(cfg: &ExperimentConfig, checkpoints: &[u64]) -> Result<Proposition1Report> {
    if cfg.schedule != Schedule::RoundRobin {
        return Err(Error::invalid(
            "estimation verification needs the round-robin schedule",
        ));
    }
    let (cm, metrics, _params) = prepare(cfg)?;
    let m = cfg.graph.agent_count();
    let n = cfg.model.arm_count();
    if checkpoints.is_empty() {
        return Err(Error::invalid("at least one checkpoint is required"));
    }
    for &cp in checkpoints {
        if cp < n as u64 || cp > cfg.horizon {
            return Err(Error::invalid(format!(
                "checkpoint {cp} outside [{}, {}]",
                n, cfg.horizon
            )));
        }
    }

    // The schedule is reward-independent, so n̂ at each checkpoint is the
    // same in every run; compute it once with a rewardless pass.
    let n_hat_at: Vec<nalgebra::DMatrix<f64>> = {
        let last = *checkpoints.iter().max().unwrap();
        let mut state = NetworkState::new(m, n)?;
        let mut by_time: Vec<(u64, nalgebra::DMatrix<f64>)> = Vec::new();
        for t in 1..=last {
            let chosen: Vec<usize> = (0..m).map(|k| round_robin_arm(t, k, n)).collect();
            let rewards = vec![0.0; m];
            let (xi, r) = pull_matrices(m, n, &chosen, &rewards)?;
            consensus_step(&cm, &mut state, &xi, &r)?;
            if checkpoints.contains(&t) {
                by_time.push((t, state.n_hat().clone()));
            }
        }
        checkpoints
            .iter()
            .map(|t| {
                by_time
                    .iter()
                    .find(|(tt, _)| tt == t)
                    .map(|(_, mat)| mat.clone())
                    .expect("checkpoint collected")
            })
            .collect()
    };

    // μ̂ matrices per run per checkpoint.
    let estimates = collect_mu_hat(cfg, &cm, checkpoints)?;
    let max_dev = estimates.max_dev;

    let rf = cfg.runs as f64;
    let mut checks = Vec::with_capacity(checkpoints.len() * m * n);
    for (ci, &t) in checkpoints.iter().enumerate() {
        for k in 0..m {
            for i in 0..n {
                let values: Vec<f64> = estimates.per_run.iter().map(|run| run[ci][(k, i)]).collect();
                let mean = values.iter().sum::<f64>() / rf;
                let variance = if cfg.runs >= 2 {
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0)
                } else {
                    0.0
                };
                let se = (variance / rf).sqrt();
                let n_hat = n_hat_at[ci][(k, i)];
                let sigma = cfg.model.sigma_s();
                let bound = sigma * sigma / m as f64 * (n_hat + metrics.eps_c[k]) / (n_hat * n_hat);
                let model_mean = cfg.model.means()[i];
                checks.push(MomentCheck {
                    t,
                    agent: k,
                    arm: i,
                    mean_estimate: mean,
                    model_mean,
                    standard_error: se,
                    variance,
                    variance_bound: bound,
                    n_hat,
                    mean_within_3se: (mean - model_mean).abs() <= 3.0 * se,
                    variance_within_bound: variance <= bound * (1.0 + VARIANCE_SLACK),
                });
            }
        }
    }

    let unbiasedness_ok = checks.iter().all(|c| c.mean_within_3se);
    let variance_ok = checks.iter().all(|c| c.variance_within_bound);
    Ok(Proposition1Report {
        eps_n: metrics.eps_n,
        max_count_deviation: max_dev,
        sandwich_ok: max_dev <= metrics.eps_n + SANDWICH_SLACK,
        checks,
        unbiasedness_ok,
        variance_ok,
        runs: cfg.runs,
    })
}

struct MuHatSamples {
    /// per_run[r][checkpoint] = M×N matrix of μ̂.
    per_run: Vec<Vec<nalgebra::DMatrix<f64>>>,
    max_dev: f64,
}

fn mu_hat_one_run(
    cfg: &ExperimentConfig,
    cm: &crate::graph::ConsensusMatrix,
    eps_n: f64,
    checkpoints: &[u64],
    seed: u64,
) -> Result<(Vec<nalgebra::DMatrix<f64>>, f64)> {
    let m = cfg.graph.agent_count();
    let n = cfg.model.arm_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = NetworkState::new(m, n)?;
    let mut tracker = CentralizedTracker::new(m, n);
    let mut out: Vec<Option<nalgebra::DMatrix<f64>>> = vec![None; checkpoints.len()];
    let mut max_dev = 0.0f64;
    let last = *checkpoints.iter().max().unwrap();
    for t in 1..=last {
        let chosen: Vec<usize> = (0..m).map(|k| round_robin_arm(t, k, n)).collect();
        let mut rewards = Vec::with_capacity(m);
        for &arm in &chosen {
            rewards.push(sample_reward(&cfg.model, arm, &mut rng)?);
        }
        let (xi, r) = pull_matrices(m, n, &chosen, &rewards)?;
        consensus_step(cm, &mut state, &xi, &r)?;
        tracker.record_step(&chosen, &rewards)?;
        for i in 0..n {
            let cent = tracker.n_cent(i);
            for k in 0..m {
                let dev = (state.n_hat_entry(k, i)? - cent).abs();
                if dev > max_dev {
                    max_dev = dev;
                }
                if dev > eps_n + SANDWICH_SLACK {
                    return Err(Error::SandwichViolation {
                        t,
                        agent: k + 1,
                        arm: i + 1,
                        n_hat: state.n_hat_entry(k, i)?,
                        n_cent: cent,
                        eps_n,
                    });
                }
            }
        }
        for (ci, &cp) in checkpoints.iter().enumerate() {
            if cp == t {
                let mut mats = nalgebra::DMatrix::zeros(m, n);
                for k in 0..m {
                    for i in 0..n {
                        mats[(k, i)] = mu_hat(&state, k, i)?;
                    }
                }
                out[ci] = Some(mats);
            }
        }
    }
    let mats = out
        .into_iter()
        .map(|o| o.ok_or_else(|| Error::internal("missed a checkpoint")))
        .collect::<Result<Vec<_>>>()?;
    Ok((mats, max_dev))
}

#[cfg(feature = "parallel")]
fn collect_mu_hat(
    cfg: &ExperimentConfig,
    cm: &crate::graph::ConsensusMatrix,
    checkpoints: &[u64],
) -> Result<MuHatSamples> {
    use rayon::prelude::*;
    let eps_n = crate::spectral::epsilon_n(cm);
    let results: Vec<Result<(Vec<nalgebra::DMatrix<f64>>, f64)>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| mu_hat_one_run(cfg, cm, eps_n, checkpoints, cfg.base_seed.wrapping_add(r as u64)))
        .collect();
    let per: Vec<(Vec<nalgebra::DMatrix<f64>>, f64)> =
        results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_dev = per.iter().fold(0.0f64, |a, (_, d)| a.max(*d));
    Ok(MuHatSamples {
        per_run: per.into_iter().map(|(mats, _)| mats).collect(),
        max_dev,
    })
}

#[cfg(not(feature = "parallel"))]
fn collect_mu_hat(
    cfg: &ExperimentConfig,
    cm: &crate::graph::ConsensusMatrix,
    checkpoints: &[u64],
) -> Result<MuHatSamples> {
    let eps_n = crate::spectral::epsilon_n(cm);
    let mut per = Vec::with_capacity(cfg.runs as usize);
    for r in 0..cfg.runs {
        per.push(mu_hat_one_run(
            cfg,
            cm,
            eps_n,
            checkpoints,
            cfg.base_seed.wrapping_add(r as u64),
        )?);
    }
    let max_dev = per.iter().fold(0.0f64, |a, (_, d)| a.max(*d));
    Ok(MuHatSamples {
        per_run: per.into_iter().map(|(mats, _)| mats).collect(),
        max_dev,
    })
}

/// One run of the single-agent UCB baseline on its own reward stream.
#[derive(Debug, Clone)]
pub struct SingleAgentRun {
    pub chosen: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Cumulative expected regret after each step.
    pub cumulative_regret: Vec<f64>,
    pub history: SingleAgentHistory,
}

/// Simulate a lone agent: initialization pulls arms 1..N in order, then UCB.
///
/// Consumes its generator exactly like a 1-agent cooperative run (one reward
/// draw per step, no tie-break draws), so equal seeds give comparable
/// streams.
pub fn simulate_single_agent(
    model: &BanditModel,
    horizon: u64,
    gamma: f64,
    seed: u64,
) -> Result<SingleAgentRun> {
    let n = model.arm_count();
    if horizon < n as u64 {
        return Err(Error::invalid(
            "horizon too short for single-agent initialization",
        ));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma must be a finite real > 1"));
    }
    let sigma_s = model.sigma_s();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = SingleAgentHistory::new(n)?;
    let mut chosen = Vec::with_capacity(horizon as usize);
    let mut rewards = Vec::with_capacity(horizon as usize);
    let mut cum = Vec::with_capacity(horizon as usize);
    let mut total = 0.0;
    for t in 1..=horizon {
        let arm = if t <= n as u64 {
            (t - 1) as usize
        } else {
            single_agent_ucb_select(&hist, t, sigma_s, gamma)?
        };
        let reward = sample_reward(model, arm, &mut rng)?;
        hist.record(arm, reward)?;
        total += model.gap(arm)?;
        chosen.push(arm);
        rewards.push(reward);
        cum.push(total);
    }
    Ok(SingleAgentRun {
        chosen,
        rewards,
        cumulative_regret: cum,
        history: hist,
    })
}

/// Spearman rank correlation with average ranks for ties.
///
/// Returns an error when fewer than two pairs are given or either side is
/// constant (the correlation is undefined there).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::dims(
            format!("{} xs", xs.len()),
            format!("{} ys", ys.len()),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("correlation needs at least two pairs"));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("correlation inputs must be finite"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::invalid("correlation undefined for constant input"));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < idx.len() {
        let mut end = pos + 1;
        while end < idx.len() && values[idx[end]] == values[idx[pos]] {
            end += 1;
        }
        // 1-based ranks; ties share the average of their positions.
        let avg = (pos + 1 + end) as f64 / 2.0;
        for &i in &idx[pos..end] {
            ranks[i] = avg;
        }
        pos = end;
    }
    ranks
}

/// Configuration of the random-graph performance sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model: BanditModel,
    pub agents: usize,
    /// Edge probability of the random graphs.
    pub rho: f64,
    pub graph_count: u32,
    /// Monte Carlo runs per graph.
    pub runs: u32,
    pub horizon: u64,
    pub gamma: f64,
    /// Consensus scale; `None` applies κ = d_max/(d_max − 1) per graph.
    pub kappa: Option<f64>,
    pub base_seed: u64,
}

/// One (graph, agent) observation from the sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub graph_index: u32,
    /// 0-based agent id within its graph.
    pub agent: usize,
    pub eps_c: f64,
    /// `None` when the agent is centralized-equivalent (infinite certainty).
    pub varsigma: Option<f64>,
    pub mean_final_regret: f64,
}

/// Sweep results plus sampling diagnostics.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Graphs whose first consensus construction failed the spectrum check
    /// and were redrawn.
    pub resampled_graphs: u32,
    /// Worst sandwich deviation observed across all graphs and runs, relative
    /// to each graph's own ε_n (≤ 1 + slack when the bound holds everywhere).
    pub max_relative_count_deviation: f64,
}

/// Default consensus scale: κ = d_max/(d_max − 1).
///
/// Needs d_max ≥ 2; pass an explicit κ for graphs with maximum degree 1.
pub fn default_kappa(graph: &Graph) -> Result<f64> {
    let d = graph.max_degree();
    if d < 2 {
        return Err(Error::invalid(
            "default consensus scale needs maximum degree >= 2; pass kappa explicitly",
        ));
    }
    Ok(d as f64 / (d as f64 - 1.0))
}

const SWEEP_ATTEMPTS_PER_SLOT: u64 = 100;

/// Run the policy on `graph_count` connected random graphs and collect one
/// point per (graph, agent).
///
/// Graph slot `g` deterministically tries seeds
/// `base_seed + g·SWEEP_ATTEMPTS_PER_SLOT + attempt` until the sampled graph
/// admits the consensus scale (the default per-graph rule can fail the
/// spectrum check on unlucky topologies); per-run simulation seeds derive
/// from the same slot seed.
pub fn er_sweep(sw: &SweepConfig) -> Result<SweepResult> {
    if sw.graph_count == 0 {
        return Err(Error::invalid("sweep needs at least one graph"));
    }
    let mut points = Vec::new();
    let mut resampled = 0u32;
    let mut worst_relative_dev = 0.0f64;
    for g in 0..sw.graph_count {
        let slot_base = sw
            .base_seed
            .wrapping_add(g as u64 * SWEEP_ATTEMPTS_PER_SLOT);
        let mut found = None;
        for attempt in 0..SWEEP_ATTEMPTS_PER_SLOT {
            let graph_seed = slot_base.wrapping_add(attempt);
            let graph = erdos_renyi(sw.agents, sw.rho, graph_seed)?;
            let kappa = match sw.kappa {
                Some(k) => k,
                None => default_kappa(&graph)?,
            };
            match build_consensus_matrix(&graph, kappa) {
                Ok(_) => {
                    found = Some((graph, kappa, graph_seed));
                    break;
                }
                Err(Error::SpectrumViolation { .. }) => {
                    resampled += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
        }
        let (graph, kappa, graph_seed) = found.ok_or(Error::ConnectivityCapExceeded {
            attempts: SWEEP_ATTEMPTS_PER_SLOT as u32,
        })?;

        let cfg = ExperimentConfig::policy(
            sw.model.clone(),
            graph,
            kappa,
            sw.gamma,
            sw.horizon,
            sw.runs,
            // Decouple simulation seeds from graph seeds deterministically.
            graph_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
        );
        let result = run_ensemble(&cfg)?;
        if result.spectral.eps_n > 0.0 {
            worst_relative_dev =
                worst_relative_dev.max(result.max_count_deviation / result.spectral.eps_n);
        } else if result.max_count_deviation > SANDWICH_SLACK {
            worst_relative_dev = f64::INFINITY;
        }
        for k in 0..cfg.graph.agent_count() {
            points.push(SweepPoint {
                graph_index: g,
                agent: k,
                eps_c: result.spectral.eps_c[k],
                varsigma: result.spectral.varsigma[k].finite(),
                mean_final_regret: result.final_mean_regret(k),
            });
        }
    }
    Ok(SweepResult {
        points,
        resampled_graphs: resampled,
        max_relative_count_deviation: worst_relative_dev,
    })
}
