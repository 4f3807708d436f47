//! Built-in benchmark problems: a 3-state plant with one unknown input for
//! the centralized observer, and a 6-state plant observed by four sensors
//! for the distributed one.

use crate::distributed::{classify_nodes, NodeSpec, SensorGraph};
use crate::error::Result;
use crate::linalg::{Mat, Vector};
use crate::sim::{SignalKind, SignalSpec};
use crate::subspace::TolerancePolicy;
use crate::system::{InputPartition, LinSystem};

pub struct CentralizedProblem {
    pub sys: LinSystem,
    pub inputs: InputPartition,
    pub signals: Vec<SignalSpec>,
    pub x0: Vector,
}

pub struct DistributedProblem {
    pub sys: LinSystem,
    pub nodes: Vec<NodeSpec>,
    pub graph: SensorGraph,
    pub signals: Vec<SignalSpec>,
    pub x0: Vector,
    pub u_bar_max: f64,
}

pub fn centralized() -> Result<CentralizedProblem> {
    let a = Mat::from_row_slice(3, 3, &[2.0, -2.0, 0.0, 0.0, 0.0, 1.0, 0.0, -2.0, 1.0]);
    let b = Mat::from_row_slice(3, 2, &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    let c = Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let inputs = InputPartition::new(&b, vec![0], vec![1])?;
    Ok(CentralizedProblem {
        sys: LinSystem::new(a, b, c)?,
        inputs,
        signals: vec![
            SignalSpec::new(SignalKind::Sin, 1.0, 1.0, 0.0),
            SignalSpec::new(SignalKind::Cos, 1.0, 0.5, 0.0),
        ],
        x0: Vector::from_vec(vec![1.0, 2.0, 3.0]),
    })
}

/// The sensor graph is not part of the benchmark data; a ring `1-2-3-4-1`
/// is used.
pub fn distributed() -> Result<DistributedProblem> {
    #[rustfmt::skip]
    let a = Mat::from_row_slice(6, 6, &[
        0.0, 3.0, 0.0, 0.0, 0.0, 0.0,
        -2.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 2.0, 0.0, 0.0,
        0.0, 0.0, -3.0, -2.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0, 0.0, -3.0,
        0.0, 2.0, 0.0, 0.0, 4.0, 0.0,
    ]);
    #[rustfmt::skip]
    let b = Mat::from_row_slice(6, 3, &[
        0.0, 0.0, 0.0,
        1.0, 0.0, 0.0,
        0.0, 0.0, 1.0,
        0.0, 1.0, 0.0,
        0.0, 0.0, 0.0,
        1.0, 0.0, 1.0,
    ]);
    let row = |v: &[f64]| Mat::from_row_slice(1, 6, v);
    let e = |i: usize| {
        let mut r = Mat::zeros(1, 6);
        r[(0, i)] = 1.0;
        r
    };
    let stack = |a: Mat, b: Mat| crate::linalg::vstack(&a, &b);
    let c1 = stack(e(0), e(2));
    let c2 = row(&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    let c3 = stack(e(2), e(1));
    let c4 = row(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let c = stack(stack(c1.clone(), c2.clone()), stack(c3.clone(), c4.clone()));
    let sys = LinSystem::new(a, b, c)?;
    let nodes = vec![
        NodeSpec { id: 1, c: c1, known_cols: vec![0, 1], unknown_cols: vec![2] },
        NodeSpec { id: 2, c: c2, known_cols: vec![0, 2], unknown_cols: vec![1] },
        NodeSpec { id: 3, c: c3, known_cols: vec![1, 2], unknown_cols: vec![0] },
        NodeSpec { id: 4, c: c4, known_cols: vec![0], unknown_cols: vec![1, 2] },
    ];
    let (_, n2) = classify_nodes(&sys, &nodes, &TolerancePolicy::default())?;
    let signals = vec![
        SignalSpec::new(SignalKind::Sin, 1.0, 1.0, 0.0),
        SignalSpec::new(SignalKind::Cos, 0.2, 1.0, 0.0),
        SignalSpec::new(SignalKind::Sin, 0.2, 0.5, 0.0),
    ];
    Ok(DistributedProblem {
        sys,
        graph: SensorGraph::ring(4)?,
        u_bar_max: unknown_input_bound(&nodes, &signals, &n2),
        nodes,
        signals,
        x0: Vector::from_vec(vec![1.0, 2.0, 3.0, -1.0, -2.0, -3.0]),
    })
}

/// Largest amplitude among the unknown channels of the nodes in `ids`.
pub fn unknown_input_bound(nodes: &[NodeSpec], signals: &[SignalSpec], ids: &[usize]) -> f64 {
    nodes
        .iter()
        .filter(|n| ids.contains(&n.id))
        .flat_map(|n| n.unknown_cols.iter())
        .filter_map(|&j| signals.get(j))
        .map(|s| s.amplitude.abs())
        .fold(0.0, f64::max)
}
