//! The three subcommands: graph analysis, the experiment driver, and the
//! bound table.

use std::fs;
use std::path::{Path, PathBuf};

use coop_ucb::bandit::fusion_center_lower_bound;
use coop_ucb::graph::{build_consensus_matrix, parse_edge_list};
use coop_ucb::sim::{default_kappa, er_sweep, run_ensemble, spearman, theorem1_bound};
use coop_ucb::spectral::spectral_metrics;

use crate::config::{GraphSource, Recipe};
use crate::Failure;

/// Spectral profile of a graph as CSV: two header rows (ε_n, eigenvalues)
/// followed by one row per agent with its degree, ε_c^k, and certainty ς^k
/// (`inf` marks a centralized-equivalent agent).
pub fn analyze_graph(edges: &Path, kappa: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let text =
        fs::read_to_string(edges).map_err(|e| Failure::Usage(format!("{}: {e}", edges.display())))?;
    let graph = parse_edge_list(&text)?;
    let kappa = match kappa {
        Some(k) => k,
        None => default_kappa(&graph)?,
    };
    let cm = build_consensus_matrix(&graph, kappa)?;
    let metrics = spectral_metrics(&cm);

    let mut doc = String::new();
    doc.push_str(&format!("eps_n,{}\n", metrics.eps_n));
    doc.push_str("eigenvalues");
    for lambda in cm.eigenvalues() {
        doc.push_str(&format!(",{lambda}"));
    }
    doc.push('\n');
    doc.push_str("agent,degree,eps_c,varsigma\n");
    for k in 0..graph.agent_count() {
        doc.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            graph.degree(k),
            metrics.eps_c[k],
            metrics.varsigma[k]
        ));
    }

    match out {
        Some(path) => fs::write(path, doc)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => print!("{doc}"),
    }
    Ok(())
}

/// Files written by one `simulate` invocation, removed together if any later
/// step fails so an aborted run leaves nothing partial behind.
struct OutputSink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSink {
    fn create(dir: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        Ok(OutputSink {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        self.written.push(path.clone());
        println!("wrote {}", path.display());
        Ok(())
    }

    fn discard(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

/// Run the recipe and write plot-ready CSVs into `out_dir` (or the
/// `COOP_UCB_OUT_DIR` directory, or the working directory).
pub fn simulate(
    config: &Path,
    out_dir: Option<PathBuf>,
    runs_override: Option<u32>,
) -> Result<(), Failure> {
    let mut recipe = Recipe::load(config)?;
    if let Some(runs) = runs_override {
        recipe.runs = runs;
    }
    let dir = out_dir
        .or_else(|| std::env::var_os("COOP_UCB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut sink = OutputSink::create(dir)?;
    let outcome = match recipe.graph {
        GraphSource::Fixed(_) => simulate_fixed(&recipe, &mut sink),
        GraphSource::Random { .. } => simulate_sweep(&recipe, &mut sink),
    };
    if outcome.is_err() {
        sink.discard();
    }
    outcome
}

/// Fixed-graph experiment: mean regret trajectory, per-agent summary, and
/// per-(agent, arm) mean pull counts. Agent and arm ids are 1-based in every
/// output, matching edge-list labels.
fn simulate_fixed(recipe: &Recipe, sink: &mut OutputSink) -> Result<(), Failure> {
    let cfg = recipe.experiment()?;
    let ens = run_ensemble(&cfg)?;
    let m = ens.agent_count;

    let mut trajectory = String::from("t,agent,mean_regret,stderr\n");
    for t in 1..=ens.horizon as usize {
        for k in 0..m {
            trajectory.push_str(&format!(
                "{t},{},{},{}\n",
                k + 1,
                ens.mean_regret[t - 1][k],
                ens.stderr_regret[t - 1][k]
            ));
        }
    }

    let mut summary = String::from("agent,eps_c,varsigma,mean_final_regret,stderr_final_regret\n");
    for k in 0..m {
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            ens.spectral.eps_c[k],
            ens.spectral.varsigma[k],
            ens.final_mean_regret(k),
            ens.final_stderr_regret(k)
        ));
    }

    let mut pulls = String::from("agent,arm,mean_pulls\n");
    for k in 0..m {
        for i in 0..ens.arm_count {
            pulls.push_str(&format!("{},{},{}\n", k + 1, i + 1, ens.mean_pulls[k][i]));
        }
    }

    sink.write("trajectory.csv", &trajectory)?;
    sink.write("summary.csv", &summary)?;
    sink.write("pulls.csv", &pulls)?;
    println!(
        "{} agents, {} runs at T={}: mean final group regret {:.1}",
        m, ens.runs, ens.horizon, ens.group_regret
    );
    Ok(())
}

/// Random-graph sweep: one scatter row per (graph, agent) pairing node
/// certainty with final regret.
fn simulate_sweep(recipe: &Recipe, sink: &mut OutputSink) -> Result<(), Failure> {
    let sweep = recipe.sweep_config()?;
    let result = er_sweep(&sweep)?;

    let mut scatter = String::from("graph,agent,eps_c,varsigma,mean_final_regret\n");
    for p in &result.points {
        scatter.push_str(&format!(
            "{},{},{},{},{}\n",
            p.graph_index + 1,
            p.agent + 1,
            p.eps_c,
            match p.varsigma {
                Some(v) => v.to_string(),
                None => "inf".to_string(),
            },
            p.mean_final_regret
        ));
    }
    sink.write("scatter.csv", &scatter)?;

    let (certainty, regret): (Vec<f64>, Vec<f64>) = result
        .points
        .iter()
        .filter_map(|p| p.varsigma.map(|v| (v, p.mean_final_regret)))
        .unzip();
    match spearman(&certainty, &regret) {
        Ok(rho) => println!(
            "spearman(varsigma, final regret) = {rho:.4} over {} points ({} graph draws replaced)",
            certainty.len(),
            result.resampled_graphs
        ),
        Err(_) => println!(
            "{} points, too few distinct certainties for a rank correlation",
            certainty.len()
        ),
    }
    Ok(())
}

/// Print the group-pull bound table for every suboptimal arm of the
/// recipe's model on its graph, next to the fusion-center leading term, and
/// optionally next to empirical mean pulls from a `pulls.csv`.
pub fn bounds(config: &Path, empirical: Option<&Path>) -> Result<(), Failure> {
    let recipe = Recipe::load(config)?;
    let cfg = recipe.experiment()?;
    let cm = build_consensus_matrix(&cfg.graph, cfg.kappa)?;
    let metrics = spectral_metrics(&cm);
    let model = &cfg.model;

    let empirical_by_arm = match empirical {
        Some(path) => Some(read_group_pulls(path, model.arm_count())?),
        None => None,
    };

    let suboptimal: Vec<usize> = (0..model.arm_count())
        .filter(|&i| model.gap(i).map(|g| g > 0.0).unwrap_or(false))
        .collect();
    if suboptimal.is_empty() {
        return Err(Failure::Usage(
            "every arm is optimal; nothing to bound".into(),
        ));
    }

    println!(
        "group pulls of each suboptimal arm at T={}, gamma={}, {} agents",
        cfg.horizon,
        cfg.gamma,
        cfg.graph.agent_count()
    );
    let mut header = format!(
        "{:>4} {:>8} {:>14} {:>14} {:>14}",
        "arm", "gap", "bound", "fusion", "bound/fusion"
    );
    if empirical_by_arm.is_some() {
        header.push_str(&format!(" {:>14} {:>14}", "empirical", "emp/bound"));
    }
    println!("{header}");

    for arm in suboptimal {
        let bound = theorem1_bound(model, &metrics, arm, cfg.horizon, cfg.gamma)?;
        let fusion = fusion_center_lower_bound(model, arm, cfg.horizon)?;
        let ratio = if fusion > 0.0 { bound / fusion } else { f64::INFINITY };
        let mut row = format!(
            "{:>4} {:>8.3} {:>14.3} {:>14.3} {:>14.4}",
            arm + 1,
            model.gap(arm)?,
            bound,
            fusion,
            ratio
        );
        if let Some(by_arm) = &empirical_by_arm {
            row.push_str(&format!(
                " {:>14.3} {:>14.4}",
                by_arm[arm],
                by_arm[arm] / bound
            ));
        }
        println!("{row}");
    }
    Ok(())
}

/// Sum a `pulls.csv` (`agent,arm,mean_pulls`, 1-based ids) into mean group
/// pulls per arm.
fn read_group_pulls(path: &Path, arm_count: usize) -> Result<Vec<f64>, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut by_arm = vec![0.0f64; arm_count];
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || Failure::Usage(format!("{}:{}: malformed row", path.display(), line_no + 1));
        let mut fields = line.split(',');
        let _agent = fields.next().ok_or_else(bad)?;
        let arm: usize = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let pulls: f64 = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        if arm == 0 || arm > arm_count {
            return Err(Failure::Usage(format!(
                "{}:{}: arm {} outside 1..={}",
                path.display(),
                line_no + 1,
                arm,
                arm_count
            )));
        }
        by_arm[arm - 1] += pulls;
    }
    Ok(by_arm)
}
