//! Experiment recipes: a small structured text format mirroring the
//! library's experiment configuration, with strict parsing so a typo in a
//! key fails loudly instead of silently falling back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use coop_ucb::bandit::BanditModel;
use coop_ucb::graph::{parse_edge_list, Graph};
use coop_ucb::sim::{default_kappa, ExperimentConfig, SweepConfig};

use crate::Failure;

/// The ten-arm reward table used when a recipe gives no `means`.
pub fn default_means() -> Vec<f64> {
    vec![40.0, 50.0, 50.0, 60.0, 70.0, 70.0, 80.0, 90.0, 92.0, 95.0]
}

/// Raw recipe file. Every scalar is optional; the defaults are:
/// `gamma = 1.1`, `kappa = d_max/(d_max − 1)` for the given graph,
/// `runs = 500`, `horizon = 1000`, `sigma_s = 30`, `means` = the ten-arm
/// table, `seed = 1`. Unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    means: Option<Vec<f64>>,
    sigma_s: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    horizon: Option<u64>,
    runs: Option<u32>,
    seed: Option<u64>,
    graph: GraphSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum GraphSpec {
    /// A fixed graph read from an edge-list file; a relative `path` is
    /// resolved against the recipe's own directory.
    EdgeList { path: PathBuf },
    /// A family of connected random graphs sampled inside the run.
    ErdosRenyi { agents: usize, rho: f64, graphs: u32 },
}

/// A recipe with defaults applied and the graph source resolved.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub model: BanditModel,
    pub gamma: f64,
    pub horizon: u64,
    pub runs: u32,
    pub seed: u64,
    /// `None` means "derive per graph from the degree rule".
    pub kappa: Option<f64>,
    pub graph: GraphSource,
}

#[derive(Debug, Clone)]
pub enum GraphSource {
    Fixed(Graph),
    Random { agents: usize, rho: f64, graphs: u32 },
}

impl Recipe {
    pub fn load(path: &Path) -> Result<Recipe, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let raw: ConfigFile = toml::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));

        let model = BanditModel::new(
            raw.means.unwrap_or_else(default_means),
            raw.sigma_s.unwrap_or(30.0),
        )?;
        let graph = match raw.graph {
            GraphSpec::EdgeList { path: edges } => {
                let resolved = if edges.is_absolute() {
                    edges
                } else {
                    dir.join(edges)
                };
                let text = fs::read_to_string(&resolved)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", resolved.display())))?;
                GraphSource::Fixed(parse_edge_list(&text)?)
            }
            GraphSpec::ErdosRenyi {
                agents,
                rho,
                graphs,
            } => GraphSource::Random {
                agents,
                rho,
                graphs,
            },
        };

        Ok(Recipe {
            model,
            gamma: raw.gamma.unwrap_or(1.1),
            horizon: raw.horizon.unwrap_or(1000),
            runs: raw.runs.unwrap_or(500),
            seed: raw.seed.unwrap_or(1),
            kappa: raw.kappa,
            graph,
        })
    }

    /// The fixed-graph experiment this recipe describes.
    ///
    /// Errors when the recipe asks for random graphs instead.
    pub fn experiment(&self) -> Result<ExperimentConfig, Failure> {
        let GraphSource::Fixed(graph) = &self.graph else {
            return Err(Failure::Usage(
                "this command needs a fixed graph (graph type \"edge-list\")".into(),
            ));
        };
        let kappa = match self.kappa {
            Some(k) => k,
            None => default_kappa(graph)?,
        };
        Ok(ExperimentConfig::policy(
            self.model.clone(),
            graph.clone(),
            kappa,
            self.gamma,
            self.horizon,
            self.runs,
            self.seed,
        ))
    }

    /// The random-graph sweep this recipe describes.
    pub fn sweep_config(&self) -> Result<SweepConfig, Failure> {
        let GraphSource::Random {
            agents,
            rho,
            graphs,
        } = self.graph
        else {
            return Err(Failure::Usage(
                "this command needs random graphs (graph type \"erdos-renyi\")".into(),
            ));
        };
        Ok(SweepConfig {
            model: self.model.clone(),
            agents,
            rho,
            graph_count: graphs,
            runs: self.runs,
            horizon: self.horizon,
            gamma: self.gamma,
            kappa: self.kappa,
            base_seed: self.seed,
        })
    }
}
