//! Experiment configuration: JSON document, schema types, and the checks that
//! run before any solver is called.

use std::fmt;
use std::path::Path;

use mfmdp::matrix::parse_rational_matrix;
use mfmdp::nagent::MAX_TABLE_ENTRIES;
use mfmdp::numeric::parse_rational;
use mfmdp::{Graph, Matrix, Rational, Scalar};
use serde::Deserialize;

/// A number given either as a JSON number or as a string such as `"3/8"`.
/// Decimal literals are kept exactly.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Number(serde_json::Number),
    Text(String),
}

impl Num {
    pub fn exact(&self) -> Option<Rational> {
        match self {
            Num::Number(n) => parse_rational(&n.to_string())
                .ok()
                .or_else(|| n.as_f64().and_then(|x| mfmdp::numeric::rational_from_f64(x).ok())),
            Num::Text(s) => parse_rational(s).ok(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Num::Number(n) => n.as_f64(),
            Num::Text(_) => self.exact().map(|r| r.to_f64()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<Num>>),
    File { file: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Lattice { rows: usize, cols: usize },
    Complete { nodes: usize },
    Edges { nodes: usize, edges: Vec<[usize; 2]> },
    /// Whitespace-separated edge list, one pair per line.
    File { nodes: usize, path: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RewardSpec {
    /// `Σ_y Δ(x,y) μ(y)`, using the model distance.
    Spread,
    Zero,
    Constant { value: f64 },
    Tabular { values: Vec<Vec<f64>> },
    Indicator { rewarded: usize, positions: Vec<f64>, center: f64, radius: f64 },
}

/// Population-independent transitions `laws[x][a]` over next states.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularSpec {
    pub actions: Vec<Vec<usize>>,
    pub laws: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub alphas: Vec<Num>,
    pub probs: Vec<Num>,
    /// Admissible targets per state; defaults to the number of states.
    pub gamma: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub b: [Num; 2],
    pub c: [Num; 2],
    pub d: [Num; 2],
    pub e: [Num; 2],
    pub a: [Num; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinearPolicySpec {
    Affine { a0: Num, slope: Num },
    Mixture { first: Vec<[Num; 2]>, second: Vec<[Num; 2]>, w0: Num, slope: Num },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub gamma_s: Num,
    pub gamma_a: Num,
    pub gamma_w: Num,
    pub policy: LinearPolicySpec,
    /// `(value, probability)` atoms of the idiosyncratic noise.
    pub noise: Vec<[Num; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub states: Option<usize>,
    pub graph: Option<GraphSpec>,
    pub distance: Option<MatrixSource>,
    pub transitions: Option<TabularSpec>,
    pub reward: Option<RewardSpec>,
    pub alpha: Option<Num>,
    pub common_noise: Option<NoiseSpec>,
    pub market: Option<MarketSpec>,
    pub linear: Option<LinearSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    SolveStatic,
    BuildPolicy,
    SimulateAgents,
    Flow,
    ValueIterate,
    AverageReward,
    Tauber,
    ContractionCheck,
    CommonNoise,
    Market,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::SolveStatic => "solve-static",
            TaskKind::BuildPolicy => "build-policy",
            TaskKind::SimulateAgents => "simulate-agents",
            TaskKind::Flow => "flow",
            TaskKind::ValueIterate => "value-iterate",
            TaskKind::AverageReward => "average-reward",
            TaskKind::Tauber => "tauber",
            TaskKind::ContractionCheck => "contraction-check",
            TaskKind::CommonNoise => "common-noise",
            TaskKind::Market => "market",
        }
    }

    /// Library module the task mostly exercises; used to qualify error codes.
    pub fn module(self) -> &'static str {
        match self {
            TaskKind::SolveStatic | TaskKind::CommonNoise | TaskKind::Market => "staticopt",
            TaskKind::BuildPolicy => "metropolis",
            TaskKind::SimulateAgents | TaskKind::ValueIterate => "nagent",
            TaskKind::Flow | TaskKind::AverageReward | TaskKind::Tauber => "meanfield",
            TaskKind::ContractionCheck => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Product,
    Empirical,
    Limit,
    /// Product and empirical solves plus their sup-norm discrepancy.
    Compare,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Detailed-balance kernel for `target` (default: the static optimum of
    /// the model distance), inverted at the model's `alpha`.
    Balance { target: Option<Vec<Num>>, kappa: Option<Num> },
    /// Explicit `Q̄(a|x)` rows.
    Table { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    pub method: Option<Method>,
    pub policy: Option<PolicySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Decentralized,
    Discretized,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub horizon: Option<usize>,
    pub grid_resolution: Option<usize>,
    pub action_resolution: Option<usize>,
    pub seed: Option<u64>,
    pub initial_state: Option<usize>,
    pub initial_measure: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub controller: Option<ControllerKind>,
    /// Number of point-mass starts, evenly spaced on [0,1], for contraction-check.
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Prefix for every file written by the run.
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub task: TaskSection,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Problems found before dispatch.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Unreadable or malformed document.
    Syntax(String),
    /// A named field is missing or out of range.
    Field { field: String, message: String },
    /// The task cannot be carried out on this model.
    Infeasible { field: String, message: String },
    Capacity { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax(m) => write!(f, "{m}"),
            ConfigError::Field { field, message }
            | ConfigError::Infeasible { field, message }
            | ConfigError::Capacity { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: name.into(), message: message.into() }
}

fn require<T: Clone>(v: &Option<T>, name: &str, task: TaskKind) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| field(name, format!("required by task {}", task.name())))
}

/// A parsed document plus the files it references, resolved against the
/// directory of the config file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Config text and referenced files, in a fixed order, for hashing.
    pub inputs: Vec<(String, Vec<u8>)>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Syntax(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig =
        serde_json::from_slice(&bytes).map_err(|e| ConfigError::Syntax(format!("config: {e}")))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut inputs = vec![(path.display().to_string(), bytes)];
    for (name, rel) in referenced_files(&config) {
        let full = base_dir.join(&rel);
        let data = std::fs::read(&full).map_err(|e| field(name, format!("cannot read {}: {e}", full.display())))?;
        inputs.push((rel, data));
    }
    Ok(LoadedConfig { config, inputs })
}

fn referenced_files(c: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    if let Some(MatrixSource::File { file }) = &c.model.distance {
        out.push(("model.distance.file", file.clone()));
    }
    if let Some(GraphSpec::File { path, .. }) = &c.model.graph {
        out.push(("model.graph.path", path.clone()));
    }
    out
}

impl LoadedConfig {
    fn file_text(&self, rel: &str) -> String {
        self.inputs
            .iter()
            .find(|(name, _)| name == rel)
            .map(|(_, b)| String::from_utf8_lossy(b).into_owned())
            .unwrap_or_default()
    }

    pub fn distance_exact(&self) -> Result<Option<Matrix<Rational>>, ConfigError> {
        let Some(src) = &self.config.model.distance else { return Ok(None) };
        let m = match src {
            MatrixSource::Inline(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| v.exact().ok_or_else(|| field("model.distance", "entries must be numbers")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Matrix::from_rows(rows).map_err(|e| field("model.distance", e.to_string()))?
            }
            MatrixSource::File { file } => {
                parse_rational_matrix(&self.file_text(file)).map_err(|e| field("model.distance.file", e.to_string()))?
            }
        };
        mfmdp::validate_distance(&m.to_f64()).map_err(|e| field("model.distance", e.to_string()))?;
        Ok(Some(m))
    }

    pub fn graph(&self) -> Result<Option<Graph>, ConfigError> {
        let Some(spec) = &self.config.model.graph else { return Ok(None) };
        let g = match spec {
            GraphSpec::Lattice { rows, cols } => Graph::lattice(*rows, *cols),
            GraphSpec::Complete { nodes } => Graph::complete(*nodes),
            GraphSpec::Edges { nodes, edges } => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                Graph::from_edges(*nodes, &pairs)
            }
            GraphSpec::File { nodes, path } => Graph::parse_edge_list(*nodes, &self.file_text(path)),
        };
        g.map(Some).map_err(|e| field("model.graph", e.to_string()))
    }

    /// Number of states implied by the model section.
    pub fn states(&self) -> Result<Option<usize>, ConfigError> {
        let m = &self.config.model;
        let mut found: Vec<(&str, usize)> = Vec::new();
        if let Some(d) = m.states {
            found.push(("model.states", d));
        }
        if let Some(g) = self.graph()? {
            found.push(("model.graph", g.d()));
        }
        if let Some(dist) = self.distance_exact()? {
            found.push(("model.distance", dist.rows()));
        }
        if let Some(t) = &m.transitions {
            found.push(("model.transitions", t.actions.len()));
        }
        if let Some(&(name, d)) = found.iter().find(|(_, d)| *d != found[0].1) {
            return Err(field(name, format!("has {d} states but {} has {}", found[0].0, found[0].1)));
        }
        Ok(found.first().map(|f| f.1))
    }
}

/// Schema and feasibility checks; no solver is run.
pub fn validate(lc: &LoadedConfig) -> Result<(), ConfigError> {
    let c = &lc.config;
    let task = c.task.kind;
    let p = &c.parameters;
    let d = lc.states()?;

    if let Some(b) = p.beta {
        if !(b > 0.0 && b < 1.0) {
            return Err(field("parameters.beta", "must lie in (0,1)"));
        }
    }
    if let Some(bs) = &p.betas {
        if bs.is_empty() || bs.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(field("parameters.betas", "must be a nonempty list of values in (0,1)"));
        }
    }
    if let Some(t) = p.tolerance {
        if !(t > 0.0) {
            return Err(field("parameters.tolerance", "must be positive"));
        }
    }
    if let Some(a) = &c.model.alpha {
        match a.value() {
            Some(v) if (0.0..=1.0).contains(&v) => {}
            _ => return Err(field("model.alpha", "must lie in [0,1]")),
        }
    }
    if let (Some(d), Some(x)) = (d, p.initial_state) {
        if x >= d {
            return Err(field("parameters.initial_state", format!("must be below the state count {d}")));
        }
    }

    let needs_model = matches!(
        task,
        TaskKind::SimulateAgents | TaskKind::Flow | TaskKind::ValueIterate | TaskKind::AverageReward | TaskKind::Tauber
    );
    if needs_model {
        require(&c.model.reward, "model.reward", task)?;
        if c.model.transitions.is_none() {
            require(&c.model.graph, "model.graph", task)?;
            require(&c.model.alpha, "model.alpha", task)?;
        }
        if matches!(c.model.reward, Some(RewardSpec::Spread)) {
            require(&c.model.distance, "model.distance", task)?;
        }
    }
    let needs_policy = matches!(
        task,
        TaskKind::BuildPolicy | TaskKind::SimulateAgents | TaskKind::Flow | TaskKind::AverageReward | TaskKind::Tauber
    );
    if needs_policy {
        check_policy(lc, task)?;
    }

    match task {
        TaskKind::SolveStatic => {
            require(&c.model.distance, "model.distance", task)?;
        }
        TaskKind::BuildPolicy => {}
        TaskKind::SimulateAgents => {
            require(&p.n, "parameters.n", task)?;
            require(&p.horizon, "parameters.horizon", task)?;
            require(&p.seed, "parameters.seed", task)?;
            initial(lc, task)?;
        }
        TaskKind::Flow | TaskKind::AverageReward => {
            require(&p.horizon, "parameters.horizon", task)?;
            initial(lc, task)?;
            if c.model.common_noise.is_some() {
                require(&p.seed, "parameters.seed", task)?;
            }
        }
        TaskKind::Tauber => {
            require(&p.betas, "parameters.betas", task)?;
            initial(lc, task)?;
        }
        TaskKind::ValueIterate => {
            let method = require(&c.task.method, "task.method", task)?;
            require(&p.beta, "parameters.beta", task)?;
            let d = d.unwrap_or(0);
            match method {
                Method::Product | Method::Empirical | Method::Compare => {
                    let n = require(&p.n, "parameters.n", task)?;
                    if n == 0 {
                        return Err(field("parameters.n", "must be positive"));
                    }
                    if method != Method::Empirical {
                        let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
                        if size > MAX_TABLE_ENTRIES {
                            return Err(ConfigError::Capacity {
                                field: "parameters.n".into(),
                                message: format!("|S|^N = {d}^{n} exceeds the table limit {MAX_TABLE_ENTRIES}"),
                            });
                        }
                    }
                }
                Method::Limit => {
                    require(&p.grid_resolution, "parameters.grid_resolution", task)?;
                }
            }
        }
        TaskKind::ContractionCheck => {
            require(&c.model.linear, "model.linear", task)?;
        }
        TaskKind::CommonNoise => {
            require(&c.model.distance, "model.distance", task)?;
            let noise = require(&c.model.common_noise, "model.common_noise", task)?;
            if noise.alphas.len() != noise.probs.len() || noise.alphas.is_empty() {
                return Err(field("model.common_noise", "alphas and probs need the same nonzero length"));
            }
            for v in noise.alphas.iter().chain(&noise.probs) {
                if v.exact().is_none() {
                    return Err(field("model.common_noise", "entries must be numbers or fractions"));
                }
            }
        }
        TaskKind::Market => {
            let m = require(&c.model.market, "model.market", task)?;
            if m.b.iter().chain(&m.c).chain(&m.d).chain(&m.e).chain(&m.a).any(|v| v.exact().is_none()) {
                return Err(field("model.market", "coordinates must be numbers or fractions"));
            }
        }
    }
    Ok(())
}

fn initial(lc: &LoadedConfig, task: TaskKind) -> Result<(), ConfigError> {
    let p = &lc.config.parameters;
    if p.initial_state.is_none() && p.initial_measure.is_none() {
        return Err(field("parameters.initial_state", format!("required by task {}", task.name())));
    }
    Ok(())
}

fn check_policy(lc: &LoadedConfig, task: TaskKind) -> Result<(), ConfigError> {
    let c = &lc.config;
    let policy = require(&c.task.policy, "task.policy", task)?;
    if let PolicySpec::Balance { target, .. } = &policy {
        let g = lc.graph()?.ok_or_else(|| field("model.graph", format!("required by task {}", task.name())))?;
        require(&c.model.alpha, "model.alpha", task)?;
        let isolated = g.isolated_nodes();
        if !isolated.is_empty() {
            return Err(ConfigError::Infeasible {
                field: "model.graph".into(),
                message: format!("nodes {isolated:?} have no neighbours; a balance kernel needs a connected graph"),
            });
        }
        if !g.is_connected() {
            return Err(ConfigError::Infeasible {
                field: "model.graph".into(),
                message: "graph is not connected; a balance kernel needs a connected graph".into(),
            });
        }
        match target {
            Some(t) => {
                if t.len() != g.d() || t.iter().any(|v| v.exact().is_none_or(|r| r <= Rational::zero())) {
                    return Err(field("task.policy.target", "needs one positive mass per node"));
                }
            }
            None => {
                require(&c.model.distance, "model.distance", task)?;
            }
        }
    }
    Ok(())
}
