//! JSON project configuration and its conversion into library types.

use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use geo_uio::distributed::{classify_nodes, NodeSpec, SensorGraph, SignMode};
use geo_uio::reference::{self, unknown_input_bound};
use geo_uio::sim::{Method, ObserverInit, SignalSpec, SimConfig};
use geo_uio::{InputPartition, LinSystem, Mat, PlacementConfig, SpectralPartition, SynthesisSettings, TolerancePolicy, Vector};
use serde::{Deserialize, Serialize};

/// Environment variable overriding the relative rank tolerance.
pub const TOL_ENV: &str = "GEO_UIO_TOL";

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub system: SystemBlock,
    /// Known/unknown input split for a centralized design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionBlock>,
    /// Sensor nodes for a distributed design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeBlock>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphBlock>,
    #[serde(default)]
    pub spectral: SpectralBlock,
    #[serde(default)]
    pub signals: Vec<SignalSpec>,
    pub sim: SimBlock,
    /// Bound on the unknown inputs of rank-deficient nodes; defaults to the
    /// largest amplitude among their unknown channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_bar_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBlock {
    pub known: Vec<usize>,
    pub unknown: Vec<usize>,
}

/// A node's output map is either given explicitly (`c`) or selected from
/// the rows of the system's `C` (`output_rows`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeBlock {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_rows: Option<Vec<usize>>,
    pub known: Vec<usize>,
    pub unknown: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphBlock {
    pub adjacency: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralBlock {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_targets: Option<Vec<f64>>,
    pub pole_margin: f64,
    /// Multiplier applied to the minimal consensus gains.
    pub safety: f64,
}

impl Default for SpectralBlock {
    fn default() -> Self {
        SpectralBlock {
            alpha: 0.0,
            pole_targets: None,
            pole_margin: 0.5,
            safety: 1.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignBlock {
    Exact,
    BoundaryLayer { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitBlock {
    Zero,
    TrueState,
    Custom(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_sign")]
    pub sign: SignBlock,
    pub x0: Vec<f64>,
    #[serde(default = "default_init")]
    pub observer_init: InitBlock,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Threshold used for the time-to-tolerance metric.
    #[serde(default = "default_error_tolerance")]
    pub error_tolerance: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_sign() -> SignBlock {
    SignBlock::BoundaryLayer { eps: 1e-3 }
}

fn default_init() -> InitBlock {
    InitBlock::Zero
}

fn default_stride() -> usize {
    1
}

fn default_error_tolerance() -> f64 {
    1e-2
}

/// A validated design problem.
pub enum Problem {
    Centralized {
        sys: LinSystem,
        inputs: InputPartition,
    },
    Distributed {
        sys: LinSystem,
        nodes: Vec<NodeSpec>,
        graph: SensorGraph,
        u_bar_max: f64,
    },
}

pub struct Prepared {
    pub problem: Problem,
    pub settings: SynthesisSettings,
    pub safety: f64,
    pub signals: Vec<SignalSpec>,
    pub sim: SimConfig,
    pub error_tolerance: f64,
}

pub fn load(path: &Path) -> Result<ProjectConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn matrix(rows: &Rows, name: &str) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    ensure!(rows.iter().all(|row| row.len() == c), "matrix {name} has rows of unequal length");
    ensure!(rows.iter().flatten().all(|v| v.is_finite()), "matrix {name} has non-finite entries");
    Ok(Mat::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

pub fn rows(m: &Mat) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Tolerance policy with the environment override applied.
pub fn tolerance_policy() -> Result<TolerancePolicy> {
    let base = TolerancePolicy::default();
    match std::env::var(TOL_ENV) {
        Ok(raw) => {
            let rel: f64 = raw.trim().parse().with_context(|| format!("{TOL_ENV}={raw:?} is not a number"))?;
            TolerancePolicy::new(rel, base.abs_residual_tol).map_err(|e| anyhow!("{TOL_ENV}: {e}"))
        }
        Err(std::env::VarError::NotPresent) => Ok(base),
        Err(e) => Err(anyhow!("{TOL_ENV}: {e}")),
    }
}

impl ProjectConfig {
    pub fn prepare(&self) -> Result<Prepared> {
        let sys = LinSystem::new(
            matrix(&self.system.a, "A")?,
            matrix(&self.system.b, "B")?,
            matrix(&self.system.c, "C")?,
        )
        .context("invalid system block")?;

        let s = &self.spectral;
        ensure!(s.alpha.is_finite(), "spectral.alpha must be finite");
        ensure!(s.pole_margin > 0.0, "spectral.pole_margin must be positive");
        ensure!(s.safety >= 1.0 && s.safety.is_finite(), "spectral.safety must be at least 1");
        let settings = SynthesisSettings {
            spectral: SpectralPartition::with_alpha(s.alpha),
            placement: PlacementConfig {
                targets: s.pole_targets.clone(),
                margin: s.pole_margin,
            },
            tol: tolerance_policy()?,
        };

        ensure!(
            self.signals.len() == sys.m(),
            "signals block has {} channels, B has {} columns",
            self.signals.len(),
            sys.m()
        );
        let sim = self.sim_config(sys.n())?;

        let problem = match (&self.partition, &self.nodes) {
            (Some(p), None) => {
                let inputs = InputPartition::new(&sys.b, p.known.clone(), p.unknown.clone()).context("invalid partition block")?;
                Problem::Centralized { sys, inputs }
            }
            (None, Some(blocks)) => self.distributed_problem(sys, blocks, &settings.tol)?,
            (Some(_), Some(_)) => bail!("config has both a partition block and a nodes block"),
            (None, None) => bail!("config needs a partition block (centralized) or a nodes block (distributed)"),
        };
        Ok(Prepared {
            problem,
            settings,
            safety: s.safety,
            signals: self.signals.clone(),
            sim,
            error_tolerance: self.sim.error_tolerance,
        })
    }

    fn sim_config(&self, n: usize) -> Result<SimConfig> {
        let b = &self.sim;
        ensure!(b.x0.len() == n, "sim.x0 has length {}, expected {n}", b.x0.len());
        ensure!(b.error_tolerance > 0.0, "sim.error_tolerance must be positive");
        let mut cfg = SimConfig::new(b.t_end, Vector::from_vec(b.x0.clone()));
        cfg.dt = b.dt;
        cfg.method = b.method;
        cfg.record_stride = b.record_stride;
        cfg.sign_mode = match b.sign {
            SignBlock::Exact => SignMode::Exact,
            SignBlock::BoundaryLayer { eps } => SignMode::BoundaryLayer { eps },
        };
        cfg.observer_init = match &b.observer_init {
            InitBlock::Zero => ObserverInit::Zero,
            InitBlock::TrueState => ObserverInit::TrueState,
            InitBlock::Custom(states) => ObserverInit::Custom(states.iter().map(|v| Vector::from_vec(v.clone())).collect()),
        };
        cfg.validate().context("invalid sim block")?;
        Ok(cfg)
    }

    fn distributed_problem(&self, sys: LinSystem, blocks: &[NodeBlock], tol: &TolerancePolicy) -> Result<Problem> {
        ensure!(!blocks.is_empty(), "nodes block is empty");
        let mut nodes = Vec::with_capacity(blocks.len());
        for nb in blocks {
            ensure!(nodes.iter().all(|n: &NodeSpec| n.id != nb.id), "duplicate node id {}", nb.id);
            let c = match (&nb.c, &nb.output_rows) {
                (Some(c), None) => matrix(c, &format!("C of node {}", nb.id))?,
                (None, Some(idx)) => {
                    ensure!(!idx.is_empty(), "node {} selects no output rows", nb.id);
                    if let Some(bad) = idx.iter().find(|&&i| i >= sys.p()) {
                        bail!("node {} selects output row {bad}, C has {} rows", nb.id, sys.p());
                    }
                    sys.c.select_rows(idx.iter())
                }
                _ => bail!("node {} needs exactly one of `c` or `output_rows`", nb.id),
            };
            InputPartition::new(&sys.b, nb.known.clone(), nb.unknown.clone())
                .with_context(|| format!("invalid input split for node {}", nb.id))?;
            nodes.push(NodeSpec {
                id: nb.id,
                c,
                known_cols: nb.known.clone(),
                unknown_cols: nb.unknown.clone(),
            });
        }
        let graph_block = self.graph.as_ref().context("distributed config needs a graph block")?;
        let graph = SensorGraph::new(matrix(&graph_block.adjacency, "adjacency")?).context("invalid graph block")?;
        ensure!(
            graph.len() == nodes.len(),
            "graph has {} vertices for {} nodes",
            graph.len(),
            nodes.len()
        );
        let u_bar_max = match self.u_bar_max {
            Some(u) => u,
            None => {
                let (_, n2) = classify_nodes(&sys, &nodes, tol)?;
                unknown_input_bound(&nodes, &self.signals, &n2)
            }
        };
        Ok(Problem::Distributed {
            sys,
            nodes,
            graph,
            u_bar_max,
        })
    }

    /// Built-in three-state example with one unknown input.
    pub fn centralized_reference() -> Result<Self> {
        let p = reference::centralized()?;
        Ok(ProjectConfig {
            system: system_block(&p.sys),
            partition: Some(PartitionBlock {
                known: p.inputs.known_cols.clone(),
                unknown: p.inputs.unknown_cols.clone(),
            }),
            nodes: None,
            graph: None,
            spectral: SpectralBlock::default(),
            signals: p.signals,
            sim: reference_sim(20.0, &p.x0),
            u_bar_max: None,
        })
    }

    /// Built-in six-state example observed by four sensors on a ring.
    pub fn distributed_reference() -> Result<Self> {
        let p = reference::distributed()?;
        Ok(ProjectConfig {
            system: system_block(&p.sys),
            partition: None,
            nodes: Some(
                p.nodes
                    .iter()
                    .map(|n| NodeBlock {
                        id: n.id,
                        c: Some(rows(&n.c)),
                        output_rows: None,
                        known: n.known_cols.clone(),
                        unknown: n.unknown_cols.clone(),
                    })
                    .collect(),
            ),
            graph: Some(GraphBlock {
                adjacency: rows(p.graph.adjacency()),
            }),
            spectral: SpectralBlock::default(),
            signals: p.signals,
            sim: reference_sim(40.0, &p.x0),
            u_bar_max: Some(p.u_bar_max),
        })
    }
}

fn system_block(sys: &LinSystem) -> SystemBlock {
    SystemBlock {
        a: rows(&sys.a),
        b: rows(&sys.b),
        c: rows(&sys.c),
    }
}

fn reference_sim(t_end: f64, x0: &Vector) -> SimBlock {
    SimBlock {
        t_end,
        dt: default_dt(),
        method: Method::Rk4,
        sign: default_sign(),
        x0: x0.iter().copied().collect(),
        observer_init: InitBlock::Zero,
        record_stride: 1,
        error_tolerance: default_error_tolerance(),
    }
}
