//! JSON run report: synthesized matrices, existence checks, residuals and
//! simulation metrics.

use geo_uio::central::{CentralizedObserver, ObserverResiduals, RankConditions};
use geo_uio::distributed::{DistributedObserverNetwork, NodeClass, SensorNode};
use geo_uio::sim::ErrorSummary;
use geo_uio::{GeometricDecomposition, LinSystem, SynthesisSettings};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{rows, Rows};

/// Name of the centralized existence condition as reported.
pub const INTERSECTION_CHECK: &str = "W_g* ∩ Ker C = 0";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub mode: Mode,
    pub settings: SettingsReport,
    pub system: SystemReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centralized: Option<CentralReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distributed: Option<DistributedReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<ObserverMetrics>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Vec<CheckRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SettingsReport {
    pub rel_rank_tol: f64,
    pub abs_residual_tol: f64,
    pub alpha: f64,
    pub boundary_tol: f64,
    pub pole_margin: f64,
    pub pole_targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemReport {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub w_star: Rows,
    pub s_star: Rows,
    pub wg_star: Rows,
    pub w_dims: Vec<usize>,
    pub s_dims: Vec<usize>,
    /// Invariant zeros as `[re, im]`.
    pub zeros: Vec<[f64; 2]>,
    pub good_zeros: usize,
    pub bad_zeros: usize,
    pub friend: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub reconstruction: f64,
    pub unknown_input_leak: f64,
    pub friend: f64,
    pub commutation: f64,
    pub max_real_eigenvalue: f64,
    pub dimension_identity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralReport {
    pub existence: Check,
    pub rank_matched: bool,
    pub detectable: bool,
    pub z_dim: usize,
    pub known_cols: Vec<usize>,
    pub unknown_cols: Vec<usize>,
    /// Observer `ż = Ā̄ z + (P B) u − (P L) y`, `x̂ = E z + F y`.
    pub quotient_map: Rows,
    pub projection: Rows,
    pub gain: Rows,
    pub e: Rows,
    pub f: Rows,
    pub known_input_map: Rows,
    pub output_injection: Rows,
    pub decomposition: DecompositionReport,
    pub residuals: ResidualReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedReport {
    pub p_w: Rows,
    pub abar_w: Rows,
    pub e: Rows,
    pub f: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeReport {
    pub id: usize,
    pub class: String,
    /// `rank(C_i B̄_i) = rank(B̄_i)`.
    pub local_rank_condition: bool,
    pub state_dim: usize,
    pub known_cols: Vec<usize>,
    pub unknown_cols: Vec<usize>,
    pub c: Rows,
    pub gain: Rows,
    pub closed_loop: Rows,
    pub quotient_map: Rows,
    pub projection: Rows,
    /// Basis of the directions recovered through consensus.
    pub consensus_basis: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedReport>,
    pub decomposition: DecompositionReport,
    pub residuals: ResidualReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub connected: bool,
    pub algebraic_connectivity: f64,
    pub bounded_input: bool,
    pub joint_detectability: bool,
    pub sigma_min_q: f64,
    pub unrecoverable_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributedReport {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub adjacency: Rows,
    pub assumptions: AssumptionReport,
    pub chi_min: f64,
    pub gamma_min: f64,
    pub a_l_norm: f64,
    pub chi: f64,
    pub gamma: f64,
    pub u_bar_max: f64,
    pub nodes: Vec<NodeReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObserverMetrics {
    pub observer: String,
    pub final_err: f64,
    pub max_err: f64,
    pub time_to_tolerance: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub worst: f64,
    pub threshold: String,
    pub pass: bool,
}

fn complex_pairs(zs: &[Complex64]) -> Vec<[f64; 2]> {
    zs.iter().map(|z| [z.re, z.im]).collect()
}

fn decomposition_report(d: &GeometricDecomposition) -> DecompositionReport {
    DecompositionReport {
        w_star: rows(d.w_star.basis()),
        s_star: rows(d.s_star.basis()),
        wg_star: rows(d.wg_star.basis()),
        w_dims: d.w_dims.clone(),
        s_dims: d.s_dims.clone(),
        zeros: complex_pairs(&d.zeros),
        good_zeros: d.xbar_g.dim(),
        bad_zeros: d.xbar_b.dim(),
        friend: rows(&d.friend),
    }
}

fn residual_report(r: &ObserverResiduals) -> ResidualReport {
    ResidualReport {
        reconstruction: r.reconstruction,
        unknown_input_leak: r.unknown_input_leak,
        friend: r.friend,
        commutation: r.commutation,
        max_real_eigenvalue: r.max_real_eigenvalue,
        dimension_identity: r.dimension_identity,
    }
}

impl RunReport {
    fn new(mode: Mode, sys: &LinSystem, settings: &SynthesisSettings) -> Self {
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            mode,
            settings: SettingsReport {
                rel_rank_tol: settings.tol.rel_rank_tol,
                abs_residual_tol: settings.tol.abs_residual_tol,
                alpha: settings.spectral.alpha,
                boundary_tol: settings.spectral.boundary_tol,
                pole_margin: settings.placement.margin,
                pole_targets: settings.placement.targets.clone(),
            },
            system: SystemReport {
                a: rows(&sys.a),
                b: rows(&sys.b),
                c: rows(&sys.c),
            },
            centralized: None,
            distributed: None,
            metrics: None,
            verification: None,
        }
    }

    pub fn centralized(
        sys: &LinSystem,
        settings: &SynthesisSettings,
        obs: &CentralizedObserver,
        classical: RankConditions,
        residuals: &ObserverResiduals,
        known_cols: &[usize],
        unknown_cols: &[usize],
    ) -> Self {
        let mut report = RunReport::new(Mode::Centralized, sys, settings);
        report.centralized = Some(CentralReport {
            existence: Check {
                name: INTERSECTION_CHECK.into(),
                pass: true,
            },
            rank_matched: classical.rank_matched,
            detectable: classical.detectable,
            z_dim: obs.z_dim(),
            known_cols: known_cols.to_vec(),
            unknown_cols: unknown_cols.to_vec(),
            quotient_map: rows(&obs.abar_l),
            projection: rows(&obs.p_wg),
            gain: rows(&obs.l),
            e: rows(&obs.e),
            f: rows(&obs.f),
            known_input_map: rows(&obs.known_input_map),
            output_injection: rows(&obs.output_injection),
            decomposition: decomposition_report(&obs.decomp),
            residuals: residual_report(residuals),
        });
        report
    }

    pub fn distributed(
        sys: &LinSystem,
        settings: &SynthesisSettings,
        net: &DistributedObserverNetwork,
        residuals: &[ObserverResiduals],
    ) -> Self {
        let mut report = RunReport::new(Mode::Distributed, sys, settings);
        report.distributed = Some(DistributedReport {
            n1: net.n1_ids(),
            n2: net.n2_ids(),
            adjacency: rows(net.graph.adjacency()),
            assumptions: AssumptionReport {
                connected: net.joint.connected,
                algebraic_connectivity: net.graph.algebraic_connectivity(),
                bounded_input: net.u_bar_max.is_finite(),
                joint_detectability: net.joint.ok,
                sigma_min_q: net.joint.sigma_min_q,
                unrecoverable_dim: net.joint.unrecoverable_dim,
            },
            chi_min: net.bounds.chi_min,
            gamma_min: net.bounds.gamma_min,
            a_l_norm: net.bounds.a_l_norm,
            chi: net.chi,
            gamma: net.gamma,
            u_bar_max: net.u_bar_max,
            nodes: net.nodes.iter().zip(residuals).map(|(n, r)| node_report(n, r)).collect(),
        });
        report
    }
}

fn node_report(node: &SensorNode, r: &ObserverResiduals) -> NodeReport {
    NodeReport {
        id: node.id,
        class: match node.class {
            NodeClass::N1 => "N1".into(),
            NodeClass::N2 => "N2".into(),
        },
        local_rank_condition: node.class == NodeClass::N1,
        state_dim: node.state_dim(),
        known_cols: node.inputs.known_cols.clone(),
        unknown_cols: node.inputs.unknown_cols.clone(),
        c: rows(&node.c),
        gain: rows(&node.l),
        closed_loop: rows(&node.a_l),
        quotient_map: rows(&node.abar_g),
        projection: rows(&node.decomp.p_wg),
        consensus_basis: rows(node.consensus_basis()),
        reduced: node.reduced.as_ref().map(|b| ReducedReport {
            p_w: rows(&b.p_w),
            abar_w: rows(&b.abar_w),
            e: rows(&b.e),
            f: rows(&b.f),
        }),
        decomposition: decomposition_report(&node.decomp),
        residuals: residual_report(r),
    }
}

pub fn observer_metrics(names: &[String], summaries: &[ErrorSummary]) -> Vec<ObserverMetrics> {
    names
        .iter()
        .zip(summaries)
        .map(|(name, s)| ObserverMetrics {
            observer: name.clone(),
            final_err: s.final_err,
            max_err: s.max_err,
            time_to_tolerance: s.time_to_tolerance,
            tolerance: s.tolerance,
        })
        .collect()
}
