//! Networked unknown-input observer over an undirected sensor graph.
//!
//! Nodes that pass the local rank test (`N1`) run a reduced observer on
//! `X/W_i*`; the others (`N2`) run a full-order observer with a sign-based
//! consensus term that dominates their unknown inputs. Directions a node
//! cannot recover alone are supplied by linear consensus with gain `χ`.

use nalgebra::SymmetricEigen;

use crate::central::{solve_output_reconstruction, ObserverResiduals};
use crate::error::{Assumption, GeoError, Result};
use crate::geometry::{decompose, friend_residual, stabilizing_friend, GeometricDecomposition, SynthesisSettings};
use crate::linalg::{self, Mat, Vector};
use crate::subspace::{image, intersect, Subspace, TolerancePolicy};
use crate::system::{InputPartition, LinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Local rank condition holds.
    N1,
    /// Local rank condition fails.
    N2,
}

/// Raw description of one sensor: its output map and input split.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: usize,
    pub c: Mat,
    pub known_cols: Vec<usize>,
    pub unknown_cols: Vec<usize>,
}

/// Extra blocks of a reduced-order (`N1`) node.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlocks {
    pub p_w: Mat,
    /// Map of `A + L C` on `X/W_i*`.
    pub abar_w: Mat,
    pub e: Mat,
    pub f: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: usize,
    pub c: Mat,
    pub inputs: InputPartition,
    pub class: NodeClass,
    pub decomp: GeometricDecomposition,
    pub l: Mat,
    /// `A + L C`.
    pub a_l: Mat,
    /// Map of `A + L C` on `X/W_{g,i}*`.
    pub abar_g: Mat,
    pub reduced: Option<ReducedBlocks>,
}

impl SensorNode {
    pub fn wg_basis(&self) -> &Mat {
        self.decomp.wg_star.basis()
    }

    /// Dimension of the node's observer state.
    pub fn state_dim(&self) -> usize {
        match &self.reduced {
            Some(r) => r.abar_w.nrows(),
            None => self.a_l.nrows(),
        }
    }

    /// Block of `W_V`: `V_i` for `N1`, `W_{g,i}*` for `N2`.
    pub fn consensus_basis(&self) -> &Mat {
        match self.class {
            NodeClass::N1 => &self.decomp.v,
            NodeClass::N2 => self.wg_basis(),
        }
    }

    /// Block of `A_L`: `V_iᵀ A_L V_i` for `N1`, `W_gᵀ A_L W_g` for `N2`.
    pub fn restricted_dynamics(&self) -> Mat {
        let basis = self.consensus_basis();
        basis.transpose() * &self.a_l * basis
    }

    /// `x̂_i` from the observer state.
    pub fn estimate(&self, state: &Vector, y: &Vector) -> Vector {
        match &self.reduced {
            Some(r) => &r.e * state + &r.f * y,
            None => state.clone(),
        }
    }

    /// Error component on `X/W_{g,i}*`: `P_g P_wᵀ (P_w x − z)` for `N1`,
    /// `P_g (x − x̂)` for `N2`.
    pub fn quotient_error(&self, x: &Vector, state: &Vector) -> Vector {
        let p_g = &self.decomp.p_wg;
        match &self.reduced {
            Some(r) => p_g * (r.p_w.transpose() * (&r.p_w * x - state)),
            None => p_g * (x - state),
        }
    }

    pub fn residuals(&self, a: &Mat) -> Result<ObserverResiduals> {
        let n = a.nrows();
        let d = &self.decomp;
        let p_g = &d.p_wg;
        let eigs = linalg::eigenvalues(&self.abar_g)?;
        let reconstruction = match &self.reduced {
            Some(r) => (&r.e * &r.p_w + &r.f * &self.c - Mat::identity(n, n)).norm(),
            None => 0.0,
        };
        Ok(ObserverResiduals {
            reconstruction,
            unknown_input_leak: (p_g * &self.inputs.b_unknown).norm(),
            friend: friend_residual(a, &self.c, &self.l, &d.wg_star),
            commutation: (&self.abar_g * p_g - p_g * &self.a_l).norm(),
            max_real_eigenvalue: linalg::max_real_part(&eigs),
            dimension_identity: d.xbar_g.dim() + d.xbar_b.dim() == d.s_star.dim() - d.w_star.dim(),
        })
    }
}

/// Undirected, unweighted communication graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorGraph {
    adjacency: Mat,
    laplacian: Mat,
}

impl SensorGraph {
    pub fn new(adjacency: Mat) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(GeoError::DimensionMismatch {
                context: "adjacency must be square",
                expected: n,
                actual: adjacency.ncols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(GeoError::InvalidInput(format!("adjacency entry ({i},{j}) = {a} is not 0/1")));
                }
                if a != adjacency[(j, i)] {
                    return Err(GeoError::InvalidInput(format!("adjacency is not symmetric at ({i},{j})")));
                }
            }
            if adjacency[(i, i)] != 0.0 {
                return Err(GeoError::InvalidInput(format!("self-loop at node index {i}")));
            }
        }
        let degrees = Mat::from_diagonal(&Vector::from_iterator(n, adjacency.row_iter().map(|r| r.sum())));
        let laplacian = degrees - &adjacency;
        Ok(SensorGraph { adjacency, laplacian })
    }

    /// Graph on `n` nodes with the given undirected edges (0-based indices).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = Mat::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(GeoError::InvalidInput(format!("invalid edge ({i},{j})")));
            }
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
        SensorGraph::new(adj)
    }

    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).filter(|(i, j)| i != j).collect();
        SensorGraph::from_edges(n, &edges)
    }

    pub fn len(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &Mat {
        &self.laplacian
    }

    /// Second-smallest Laplacian eigenvalue.
    pub fn algebraic_connectivity(&self) -> f64 {
        if self.len() < 2 {
            return f64::INFINITY;
        }
        let mut eigs: Vec<f64> = SymmetricEigen::new(self.laplacian.clone()).eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        eigs[1]
    }

    pub fn is_connected(&self) -> bool {
        self.algebraic_connectivity() > 1e-9
    }

    /// `Σ_j a_ij (x̂_j − x̂_i)`.
    pub fn disagreement(&self, i: usize, estimates: &[Vector]) -> Vector {
        let mut s = Vector::zeros(estimates[i].len());
        for (j, xj) in estimates.iter().enumerate() {
            if self.adjacency[(i, j)] != 0.0 {
                s += self.adjacency[(i, j)] * (xj - &estimates[i]);
            }
        }
        s
    }
}

/// Realization of `sgn(·)` in the `N2` consensus term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignMode {
    /// `sgn(0) = 0`.
    Exact,
    /// `clamp(s/eps, −1, 1)`.
    BoundaryLayer { eps: f64 },
}

impl Default for SignMode {
    fn default() -> Self {
        SignMode::BoundaryLayer { eps: 1e-3 }
    }
}

impl SignMode {
    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            SignMode::Exact => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SignMode::BoundaryLayer { eps } => (s / eps).clamp(-1.0, 1.0),
        }
    }
}

pub fn classify(c: &Mat, bbar: &Mat, tol: &TolerancePolicy) -> NodeClass {
    let cb = c * bbar;
    let b_rank = image(bbar, tol).dim();
    let scale = linalg::spectral_norm(c) * linalg::spectral_norm(bbar);
    let cb_rank = if cb.is_empty() {
        0
    } else {
        let (_, sv, _) = linalg::svd_desc(&cb);
        linalg::numerical_rank(&sv, cb.nrows().max(cb.ncols()), scale, tol)
    };
    if cb_rank == b_rank {
        NodeClass::N1
    } else {
        NodeClass::N2
    }
}

/// Splits node ids into `(N1, N2)` by the local rank test.
pub fn classify_nodes(sys: &LinSystem, specs: &[NodeSpec], tol: &TolerancePolicy) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut n1 = Vec::new();
    let mut n2 = Vec::new();
    for spec in specs {
        check_node_spec(sys, spec)?;
        let bbar = linalg::select_columns(&sys.b, &spec.unknown_cols);
        match classify(&spec.c, &bbar, tol) {
            NodeClass::N1 => n1.push(spec.id),
            NodeClass::N2 => n2.push(spec.id),
        }
    }
    Ok((n1, n2))
}

fn check_node_spec(sys: &LinSystem, spec: &NodeSpec) -> Result<()> {
    if spec.c.ncols() != sys.n() {
        return Err(GeoError::DimensionMismatch {
            context: "node output map columns",
            expected: sys.n(),
            actual: spec.c.ncols(),
        });
    }
    if !linalg::is_finite(&spec.c) {
        return Err(GeoError::NonFinite("node output map"));
    }
    Ok(())
}

pub fn per_node_decomposition(sys: &LinSystem, spec: &NodeSpec, settings: &SynthesisSettings) -> Result<SensorNode> {
    check_node_spec(sys, spec)?;
    let tol = &settings.tol;
    let inputs = InputPartition::new(&sys.b, spec.known_cols.clone(), spec.unknown_cols.clone())?;
    let class = classify(&spec.c, &inputs.b_unknown, tol);
    let decomp = decompose(&sys.a, &spec.c, &inputs.b_unknown, settings)?;
    let sf = stabilizing_friend(&sys.a, &spec.c, &decomp.wg_star, &decomp.friend, settings)?;
    let a_l = &sys.a + &sf.gain * &spec.c;
    let reduced = match class {
        NodeClass::N1 => {
            let p_w = decomp.p_wstar.clone();
            let (e, f) = solve_output_reconstruction(&p_w, &spec.c, tol)?;
            let abar_w = &p_w * &a_l * p_w.transpose();
            Some(ReducedBlocks { p_w, abar_w, e, f })
        }
        NodeClass::N2 => None,
    };
    Ok(SensorNode {
        id: spec.id,
        c: spec.c.clone(),
        inputs,
        class,
        decomp,
        l: sf.gain,
        a_l,
        abar_g: sf.quotient_map,
        reduced,
    })
}

/// Node indices with `N1` first, then `N2`, each in input order.
fn block_order(nodes: &[SensorNode]) -> Vec<usize> {
    let (mut n1, n2): (Vec<usize>, Vec<usize>) = (0..nodes.len()).partition(|&i| nodes[i].class == NodeClass::N1);
    n1.extend(n2);
    n1
}

/// `𝐖_V = blockdiag(V_i (N1), W_{g,j}* (N2))` and the matching `𝐀_L`.
pub fn consensus_blocks(nodes: &[SensorNode]) -> (Mat, Mat) {
    let order = block_order(nodes);
    let w: Vec<Mat> = order.iter().map(|&i| nodes[i].consensus_basis().clone()).collect();
    let a: Vec<Mat> = order.iter().map(|&i| nodes[i].restricted_dynamics()).collect();
    (linalg::block_diag(&w), linalg::block_diag(&a))
}

/// `𝐐 = 𝐖_Vᵀ (ℒ ⊗ I_n) 𝐖_V`, with the Laplacian permuted to the block order.
pub fn consensus_matrix(nodes: &[SensorNode], graph: &SensorGraph) -> Mat {
    let order = block_order(nodes);
    let lap = graph.laplacian();
    let permuted = Mat::from_fn(order.len(), order.len(), |i, j| lap[(order[i], order[j])]);
    let n = nodes.first().map_or(0, |nd| nd.a_l.nrows());
    let (w_v, _) = consensus_blocks(nodes);
    w_v.transpose() * linalg::kron(&permuted, &Mat::identity(n, n)) * w_v
}

fn smallest_singular_value(q: &Mat) -> f64 {
    if q.is_empty() {
        return f64::INFINITY;
    }
    linalg::svd_desc(q).1.last().copied().unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDetectability {
    pub ok: bool,
    pub connected: bool,
    pub sigma_min_q: f64,
    /// Dimension of `(∩ Im V_i) ∩ (∩ W_{g,j}*)`.
    pub unrecoverable_dim: usize,
}

pub fn joint_detectability_check(nodes: &[SensorNode], graph: &SensorGraph, tol: &TolerancePolicy) -> Result<JointDetectability> {
    if nodes.len() != graph.len() {
        return Err(GeoError::DimensionMismatch {
            context: "graph size vs node count",
            expected: nodes.len(),
            actual: graph.len(),
        });
    }
    let connected = graph.is_connected();
    let sigma_min_q = smallest_singular_value(&consensus_matrix(nodes, graph));
    let n = nodes.first().map_or(0, |nd| nd.a_l.nrows());
    let mut common = Subspace::full(n);
    for node in nodes {
        let basis = node.consensus_basis();
        let s = if basis.ncols() == 0 {
            Subspace::zero(n)
        } else {
            image(basis, tol)
        };
        common = intersect(&common, &s, tol)?;
    }
    Ok(JointDetectability {
        ok: connected && sigma_min_q > 1e-9,
        connected,
        sigma_min_q,
        unrecoverable_dim: common.dim(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub chi_min: f64,
    pub gamma_min: f64,
    pub sigma_min_q: f64,
    pub a_l_norm: f64,
}

pub fn gain_bounds(nodes: &[SensorNode], graph: &SensorGraph, u_bar_max: f64) -> Result<GainBounds> {
    let sigma_min_q = smallest_singular_value(&consensus_matrix(nodes, graph));
    if sigma_min_q <= 1e-9 {
        return Err(GeoError::SingularQ { sigma_min: sigma_min_q });
    }
    let (_, a_block) = consensus_blocks(nodes);
    let a_l_norm = linalg::spectral_norm(&a_block);
    let chi_min = if sigma_min_q.is_infinite() { 0.0 } else { a_l_norm / sigma_min_q };
    let n2: Vec<&SensorNode> = nodes.iter().filter(|n| n.class == NodeClass::N2).collect();
    let gamma_min = if n2.is_empty() {
        0.0
    } else {
        let b_max = n2.iter().map(|n| linalg::norm_1(&n.inputs.b_unknown)).fold(0.0, f64::max);
        let w_max = n2.iter().map(|n| linalg::norm_inf(n.wg_basis())).fold(0.0, f64::max);
        u_bar_max * b_max * w_max
    };
    Ok(GainBounds {
        chi_min,
        gamma_min,
        sigma_min_q,
        a_l_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedObserverNetwork {
    pub nodes: Vec<SensorNode>,
    pub graph: SensorGraph,
    pub chi: f64,
    pub gamma: f64,
    pub u_bar_max: f64,
    pub bounds: GainBounds,
    pub joint: JointDetectability,
}

impl DistributedObserverNetwork {
    pub fn n1_ids(&self) -> Vec<usize> {
        self.ids_of(NodeClass::N1)
    }

    pub fn n2_ids(&self) -> Vec<usize> {
        self.ids_of(NodeClass::N2)
    }

    fn ids_of(&self, class: NodeClass) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.class == class).map(|n| n.id).collect()
    }
}

pub const CHI_FLOOR: f64 = 0.1;

pub fn synthesize_distributed(
    sys: &LinSystem,
    specs: &[NodeSpec],
    graph: &SensorGraph,
    settings: &SynthesisSettings,
    u_bar_max: f64,
    safety: f64,
) -> Result<DistributedObserverNetwork> {
    if !(safety >= 1.0) || !safety.is_finite() {
        return Err(GeoError::InvalidInput(format!("safety factor must be finite and ≥ 1, got {safety}")));
    }
    if specs.is_empty() {
        return Err(GeoError::InvalidInput("network has no nodes".into()));
    }
    if specs.len() != graph.len() {
        return Err(GeoError::DimensionMismatch {
            context: "graph size vs node count",
            expected: specs.len(),
            actual: graph.len(),
        });
    }
    if !graph.is_connected() {
        return Err(GeoError::AssumptionViolated {
            assumption: Assumption::Connected,
            detail: format!("algebraic connectivity {:.3e}", graph.algebraic_connectivity()),
        });
    }
    if !(u_bar_max >= 0.0) || !u_bar_max.is_finite() {
        return Err(GeoError::AssumptionViolated {
            assumption: Assumption::BoundedInput,
            detail: format!("unknown-input bound must be finite and nonnegative, got {u_bar_max}"),
        });
    }
    let nodes = specs
        .iter()
        .map(|s| per_node_decomposition(sys, s, settings))
        .collect::<Result<Vec<_>>>()?;
    let joint = joint_detectability_check(&nodes, graph, &settings.tol)?;
    if !joint.ok {
        return Err(GeoError::AssumptionViolated {
            assumption: Assumption::JointDetectability,
            detail: format!(
                "sigma_min(Q) = {:.3e}, jointly unrecoverable dimension {}",
                joint.sigma_min_q, joint.unrecoverable_dim
            ),
        });
    }
    let bounds = gain_bounds(&nodes, graph, u_bar_max)?;
    let chi = if bounds.chi_min > 0.0 { safety * bounds.chi_min } else { CHI_FLOOR };
    Ok(DistributedObserverNetwork {
        nodes,
        graph: graph.clone(),
        chi,
        gamma: safety * bounds.gamma_min,
        u_bar_max,
        bounds,
        joint,
    })
}

/// Reduced-order node: `ż = Ā_w z − P_w L y + P_w B_i u_i + χ P_w V Vᵀ s`.
pub fn node_rhs_n1(node: &SensorNode, z: &Vector, y: &Vector, u_known: &Vector, s: &Vector, chi: f64) -> Vector {
    let r = node.reduced.as_ref().expect("node_rhs_n1 called on an N2 node");
    let v = &node.decomp.v;
    let mut dz = &r.abar_w * z - &r.p_w * (&node.l * y) + &r.p_w * (&node.inputs.b_known * u_known);
    if chi != 0.0 && v.ncols() > 0 {
        dz += chi * (&r.p_w * (v * (v.transpose() * s)));
    }
    dz
}

/// Full-order node:
/// `dx̂ = A_L x̂ − L y + B_i u_i + χ W_g W_gᵀ s + γ W_g sgn(W_gᵀ s)`.
#[allow(clippy::too_many_arguments)]
pub fn node_rhs_n2(
    node: &SensorNode,
    xhat: &Vector,
    y: &Vector,
    u_known: &Vector,
    s: &Vector,
    chi: f64,
    gamma: f64,
    sign: &SignMode,
) -> Vector {
    let wg = node.wg_basis();
    let mut dx = &node.a_l * xhat - &node.l * y + &node.inputs.b_known * u_known;
    if wg.ncols() > 0 {
        let proj = wg.transpose() * s;
        if chi != 0.0 {
            dx += chi * (wg * &proj);
        }
        if gamma != 0.0 {
            dx += gamma * (wg * proj.map(|v| sign.apply(v)));
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn plant() -> LinSystem {
        let a = Mat::from_row_slice(
            4,
            4,
            &[0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, -2.0],
        );
        let b = Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        LinSystem::new(a, b, Mat::identity(4, 4)).unwrap()
    }

    #[test]
    fn graph_laplacian_and_connectivity() {
        let g = SensorGraph::ring(4).unwrap();
        for row in g.laplacian().row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
        assert!(g.is_connected());
        assert!((g.algebraic_connectivity() - 2.0).abs() < 1e-12);
        let g = SensorGraph::new(Mat::zeros(2, 2)).unwrap();
        assert!(!g.is_connected());
        assert!(SensorGraph::ring(1).unwrap().is_connected());
    }

    #[test]
    fn graph_rejects_invalid_adjacency() {
        assert!(SensorGraph::new(Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).is_err());
        assert!(SensorGraph::new(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).is_err());
        assert!(SensorGraph::new(Mat::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0])).is_err());
    }

    #[test]
    fn sign_modes() {
        assert_eq!(SignMode::Exact.apply(0.0), 0.0);
        assert_eq!(SignMode::Exact.apply(-3.0), -1.0);
        let bl = SignMode::BoundaryLayer { eps: 1e-3 };
        assert_eq!(bl.apply(5e-4), 0.5);
        assert_eq!(bl.apply(-1.0), -1.0);
    }

    #[test]
    fn classification_degenerate_cases() {
        let sys = plant();
        let all_known = NodeSpec {
            id: 7,
            c: Mat::identity(4, 4),
            known_cols: vec![0, 1],
            unknown_cols: vec![],
        };
        let (n1, n2) = classify_nodes(&sys, &[all_known], &tol()).unwrap();
        assert_eq!((n1, n2), (vec![7], vec![]));

        let blind = NodeSpec {
            id: 3,
            c: Mat::from_row_slice(1, 4, &[0.0, 1.0, 0.0, 0.0]),
            known_cols: vec![1],
            unknown_cols: vec![0],
        };
        let blind2 = NodeSpec { id: 4, ..blind.clone() };
        let (n1, n2) = classify_nodes(&sys, &[blind, blind2], &tol()).unwrap();
        assert!(n1.is_empty());
        assert_eq!(n2, vec![3, 4]);
    }

    #[test]
    fn full_output_node_reconstructs() {
        let sys = plant();
        let spec = NodeSpec {
            id: 1,
            c: Mat::identity(4, 4),
            known_cols: vec![1],
            unknown_cols: vec![0],
        };
        let node = per_node_decomposition(&sys, &spec, &SynthesisSettings::default()).unwrap();
        assert_eq!(node.class, NodeClass::N1);
        assert_eq!(node.decomp.w_star.dim(), 1);
        let r = node.residuals(&sys.a).unwrap();
        assert!(r.reconstruction <= 1e-9);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let sys = plant();
        let spec = |id| NodeSpec {
            id,
            c: Mat::identity(4, 4),
            known_cols: vec![0, 1],
            unknown_cols: vec![],
        };
        let g = SensorGraph::new(Mat::zeros(2, 2)).unwrap();
        let err = synthesize_distributed(&sys, &[spec(1), spec(2)], &g, &SynthesisSettings::default(), 1.0, 1.1)
            .unwrap_err();
        assert!(matches!(
            err,
            GeoError::AssumptionViolated {
                assumption: Assumption::Connected,
                ..
            }
        ));
        let nodes: Vec<_> = [spec(1), spec(2)]
            .iter()
            .map(|s| per_node_decomposition(&sys, s, &SynthesisSettings::default()).unwrap())
            .collect();
        assert!(!joint_detectability_check(&nodes, &g, &tol()).unwrap().ok);
    }

    #[test]
    fn single_node_network_has_no_coupling() {
        let sys = plant();
        let spec = NodeSpec {
            id: 1,
            c: Mat::identity(4, 4),
            known_cols: vec![1],
            unknown_cols: vec![0],
        };
        let g = SensorGraph::ring(1).unwrap();
        let net = synthesize_distributed(&sys, &[spec], &g, &SynthesisSettings::default(), 0.0, 1.1).unwrap();
        assert_eq!(net.bounds.chi_min, 0.0);
        assert_eq!(net.chi, CHI_FLOOR);
        assert_eq!(net.gamma, 0.0);
        assert!(net.bounds.sigma_min_q.is_infinite());
    }

    #[test]
    fn consensus_terms_vanish_at_agreement() {
        let sys = plant();
        let spec = NodeSpec {
            id: 2,
            c: Mat::from_row_slice(1, 4, &[0.0, 1.0, 0.0, 0.0]),
            known_cols: vec![1],
            unknown_cols: vec![0],
        };
        let node = per_node_decomposition(&sys, &spec, &SynthesisSettings::default()).unwrap();
        assert_eq!(node.class, NodeClass::N2);
        let x = Vector::from_vec(vec![1.0, -1.0, 0.5, 2.0]);
        let y = &node.c * &x;
        let u = Vector::from_vec(vec![0.3]);
        let s = Vector::zeros(4);
        let coupled = node_rhs_n2(&node, &x, &y, &u, &s, 5.0, 3.0, &SignMode::Exact);
        let local = &node.a_l * &x - &node.l * &y + &node.inputs.b_known * &u;
        assert_eq!(coupled, local);
    }
}
