//! Fixed-step simulation of a plant together with its observers.
//!
//! The joint state `[x; observer states…]` is advanced with explicit Euler
//! or classical RK4. Consensus couplings read every node's estimate from
//! the same stage snapshot, so node order never matters.

use serde::{Deserialize, Serialize};

use crate::central::CentralizedObserver;
use crate::distributed::{node_rhs_n1, node_rhs_n2, DistributedObserverNetwork, NodeClass, SignMode};
use crate::error::{GeoError, Result};
use crate::linalg::Vector;
use crate::system::{InputPartition, LinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Sin,
    Cos,
    Const,
}

/// `amplitude · kind(frequency · t + phase)`; `Const` ignores frequency and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, amplitude: f64, frequency: f64, phase: f64) -> Self {
        SignalSpec {
            kind,
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let arg = self.frequency * t + self.phase;
        match self.kind {
            SignalKind::Sin => self.amplitude * arg.sin(),
            SignalKind::Cos => self.amplitude * arg.cos(),
            SignalKind::Const => self.amplitude,
        }
    }
}

pub fn eval_signals(specs: &[SignalSpec], t: f64) -> Vector {
    Vector::from_iterator(specs.len(), specs.iter().map(|s| s.eval(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

/// Initial observer states.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ObserverInit {
    #[default]
    Zero,
    /// Each observer starts at the state consistent with `x0`.
    TrueState,
    /// One internal state per observer, in node order.
    Custom(Vec<Vector>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub sign_mode: SignMode,
    pub x0: Vector,
    pub observer_init: ObserverInit,
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(t_end: f64, x0: Vector) -> Self {
        SimConfig {
            t_end,
            dt: 1e-3,
            method: Method::Rk4,
            sign_mode: SignMode::default(),
            x0,
            observer_init: ObserverInit::Zero,
            record_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(GeoError::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt > 0.0) || self.dt >= self.t_end {
            return Err(GeoError::InvalidInput(format!(
                "dt must satisfy 0 < dt < t_end, got dt = {}",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(GeoError::InvalidInput("record_stride must be at least 1".into()));
        }
        if let SignMode::BoundaryLayer { eps } = self.sign_mode {
            if !(eps > 0.0) {
                return Err(GeoError::InvalidInput(format!("boundary-layer width must be positive, got {eps}")));
            }
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite("initial state"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }

    /// Number of recorded samples.
    pub fn samples(&self) -> usize {
        self.steps() / self.record_stride + 1
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vector>,
    /// `xhat[k][i]`: estimate of observer `k` at sample `i`.
    pub xhat: Vec<Vec<Vector>>,
    /// `‖x − x̂_k‖₂` per observer and sample.
    pub err_norm: Vec<Vec<f64>>,
    /// Internal observer states (`z` or `x̂`) per observer and sample.
    pub states: Vec<Vec<Vector>>,
}

impl Trajectory {
    fn with_observers(count: usize, samples: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(samples),
            x: Vec::with_capacity(samples),
            xhat: vec![Vec::with_capacity(samples); count],
            err_norm: vec![Vec::with_capacity(samples); count],
            states: vec![Vec::with_capacity(samples); count],
        }
    }

    pub fn observers(&self) -> usize {
        self.xhat.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_k err_norm[k][i]` for every sample `i`.
    pub fn worst_error(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.err_norm.iter().map(|e| e[i]).fold(0.0, f64::max))
            .collect()
    }
}

/// Per-observer error summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub final_err: f64,
    pub max_err: f64,
    /// First sample time after which the error stays below the tolerance.
    pub time_to_tolerance: Option<f64>,
    pub tolerance: f64,
}

pub fn error_metrics(traj: &Trajectory, tolerance: f64) -> Vec<ErrorSummary> {
    traj.err_norm
        .iter()
        .map(|errs| ErrorSummary {
            final_err: errs.last().copied().unwrap_or(f64::NAN),
            max_err: errs.iter().copied().fold(0.0, f64::max),
            time_to_tolerance: time_to_tolerance(&traj.times, errs, tolerance),
            tolerance,
        })
        .collect()
}

pub fn time_to_tolerance(times: &[f64], errs: &[f64], tolerance: f64) -> Option<f64> {
    let last_bad = errs.iter().rposition(|&e| !(e < tolerance));
    match last_bad {
        None => times.first().copied(),
        Some(i) => times.get(i + 1).copied(),
    }
}

/// `sup { err(t) : t ≥ t_from }`.
pub fn sup_after(times: &[f64], errs: &[f64], t_from: f64) -> f64 {
    times
        .iter()
        .zip(errs)
        .filter(|(&t, _)| t >= t_from - 1e-12)
        .map(|(_, &e)| e)
        .fold(0.0, f64::max)
}

/// Error norms beyond this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Advances `state` from `t = 0` over `cfg.steps()` steps, calling `record`
/// on every `record_stride`-th sample (including `t = 0`).
pub fn integrate(
    mut state: Vector,
    cfg: &SimConfig,
    mut rhs: impl FnMut(f64, &Vector) -> Vector,
    mut record: impl FnMut(f64, &Vector) -> Result<()>,
) -> Result<Vector> {
    cfg.validate()?;
    let h = cfg.dt;
    let steps = cfg.steps();
    for k in 0..=steps {
        let t = k as f64 * h;
        if k % cfg.record_stride == 0 {
            record(t, &state)?;
        }
        if k == steps {
            break;
        }
        state = match cfg.method {
            Method::Euler => {
                let d = rhs(t, &state);
                state + h * d
            }
            Method::Rk4 => {
                let k1 = rhs(t, &state);
                let k2 = rhs(t + 0.5 * h, &(&state + (0.5 * h) * &k1));
                let k3 = rhs(t + 0.5 * h, &(&state + (0.5 * h) * &k2));
                let k4 = rhs(t + h, &(&state + h * &k3));
                state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            }
        };
        if state.iter().any(|v| !v.is_finite()) {
            return Err(GeoError::NonFiniteState {
                time: (k + 1) as f64 * h,
                detail: "non-finite state".into(),
            });
        }
    }
    Ok(state)
}

fn guard(time: f64, observer: usize, err: f64) -> Result<()> {
    if !err.is_finite() || err > DIVERGENCE_LIMIT {
        return Err(GeoError::NonFiniteState {
            time,
            detail: format!("observer {observer} error norm {err:.3e}"),
        });
    }
    Ok(())
}

fn check_signals(sys: &LinSystem, signals: &[SignalSpec], x0: &Vector) -> Result<()> {
    if signals.len() != sys.m() {
        return Err(GeoError::DimensionMismatch {
            context: "signal channels vs inputs",
            expected: sys.m(),
            actual: signals.len(),
        });
    }
    if x0.len() != sys.n() {
        return Err(GeoError::DimensionMismatch {
            context: "initial state",
            expected: sys.n(),
            actual: x0.len(),
        });
    }
    Ok(())
}

fn initial_states(init: &ObserverInit, consistent: Vec<Vector>) -> Result<Vec<Vector>> {
    match init {
        ObserverInit::Zero => Ok(consistent.iter().map(|v| Vector::zeros(v.len())).collect()),
        ObserverInit::TrueState => Ok(consistent),
        ObserverInit::Custom(states) => {
            if states.len() != consistent.len() {
                return Err(GeoError::DimensionMismatch {
                    context: "custom observer initial states",
                    expected: consistent.len(),
                    actual: states.len(),
                });
            }
            for (s, c) in states.iter().zip(&consistent) {
                if s.len() != c.len() {
                    return Err(GeoError::DimensionMismatch {
                        context: "custom observer state length",
                        expected: c.len(),
                        actual: s.len(),
                    });
                }
            }
            Ok(states.clone())
        }
    }
}

fn plant_rhs(sys: &LinSystem, x: &Vector, u: &Vector) -> Vector {
    &sys.a * x + &sys.b * u
}

pub fn simulate_centralized(
    sys: &LinSystem,
    part: &InputPartition,
    obs: &CentralizedObserver,
    signals: &[SignalSpec],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_signals(sys, signals, &cfg.x0)?;
    let n = sys.n();
    let r = obs.z_dim();
    let z0 = initial_states(&cfg.observer_init, vec![&obs.p_wg * &cfg.x0])?.remove(0);
    let mut state = Vector::zeros(n + r);
    state.rows_mut(0, n).copy_from(&cfg.x0);
    state.rows_mut(n, r).copy_from(&z0);

    let mut traj = Trajectory::with_observers(1, cfg.samples());
    integrate(
        state,
        cfg,
        |t, s| {
            let x = s.rows(0, n).into_owned();
            let z = s.rows(n, r).into_owned();
            let u = eval_signals(signals, t);
            let y = &sys.c * &x;
            let mut d = Vector::zeros(n + r);
            d.rows_mut(0, n).copy_from(&plant_rhs(sys, &x, &u));
            d.rows_mut(n, r).copy_from(&obs.rhs(&z, &y, &part.known_part(&u)));
            d
        },
        |t, s| {
            let x = s.rows(0, n).into_owned();
            let z = s.rows(n, r).into_owned();
            let xhat = obs.estimate(&z, &(&sys.c * &x));
            let err = (&x - &xhat).norm();
            guard(t, 0, err)?;
            traj.times.push(t);
            traj.x.push(x);
            traj.xhat[0].push(xhat);
            traj.err_norm[0].push(err);
            traj.states[0].push(z);
            Ok(())
        },
    )?;
    Ok(traj)
}

struct NodeLayout {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    total: usize,
}

impl NodeLayout {
    fn new(n: usize, net: &DistributedObserverNetwork) -> Self {
        let dims: Vec<usize> = net.nodes.iter().map(|nd| nd.state_dim()).collect();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut at = n;
        for d in &dims {
            offsets.push(at);
            at += d;
        }
        NodeLayout { offsets, dims, total: at }
    }
}

fn node_outputs(net: &DistributedObserverNetwork, x: &Vector) -> Vec<Vector> {
    net.nodes.iter().map(|nd| &nd.c * x).collect()
}

fn node_estimates(net: &DistributedObserverNetwork, layout: &NodeLayout, s: &Vector, ys: &[Vector]) -> Vec<Vector> {
    net.nodes
        .iter()
        .enumerate()
        .map(|(i, nd)| nd.estimate(&s.rows(layout.offsets[i], layout.dims[i]).into_owned(), &ys[i]))
        .collect()
}

pub fn simulate_distributed(
    sys: &LinSystem,
    net: &DistributedObserverNetwork,
    signals: &[SignalSpec],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_signals(sys, signals, &cfg.x0)?;
    let n = sys.n();
    let layout = NodeLayout::new(n, net);
    let consistent: Vec<Vector> = net
        .nodes
        .iter()
        .map(|nd| match &nd.reduced {
            Some(r) => &r.p_w * &cfg.x0,
            None => cfg.x0.clone(),
        })
        .collect();
    let init = initial_states(&cfg.observer_init, consistent)?;
    let mut state = Vector::zeros(layout.total);
    state.rows_mut(0, n).copy_from(&cfg.x0);
    for (i, s0) in init.iter().enumerate() {
        state.rows_mut(layout.offsets[i], layout.dims[i]).copy_from(s0);
    }

    let count = net.nodes.len();
    let mut traj = Trajectory::with_observers(count, cfg.samples());
    integrate(
        state,
        cfg,
        |t, s| {
            let x = s.rows(0, n).into_owned();
            let u = eval_signals(signals, t);
            let ys = node_outputs(net, &x);
            let estimates = node_estimates(net, &layout, s, &ys);
            let mut d = Vector::zeros(layout.total);
            d.rows_mut(0, n).copy_from(&plant_rhs(sys, &x, &u));
            for (i, nd) in net.nodes.iter().enumerate() {
                let own = s.rows(layout.offsets[i], layout.dims[i]).into_owned();
                let disagreement = net.graph.disagreement(i, &estimates);
                let u_known = nd.inputs.known_part(&u);
                let di = match nd.class {
                    NodeClass::N1 => node_rhs_n1(nd, &own, &ys[i], &u_known, &disagreement, net.chi),
                    NodeClass::N2 => node_rhs_n2(
                        nd,
                        &own,
                        &ys[i],
                        &u_known,
                        &disagreement,
                        net.chi,
                        net.gamma,
                        &cfg.sign_mode,
                    ),
                };
                d.rows_mut(layout.offsets[i], layout.dims[i]).copy_from(&di);
            }
            d
        },
        |t, s| {
            let x = s.rows(0, n).into_owned();
            let ys = node_outputs(net, &x);
            let estimates = node_estimates(net, &layout, s, &ys);
            traj.times.push(t);
            for (i, xhat) in estimates.into_iter().enumerate() {
                let err = (&x - &xhat).norm();
                guard(t, i, err)?;
                traj.err_norm[i].push(err);
                traj.xhat[i].push(xhat);
                traj.states[i].push(s.rows(layout.offsets[i], layout.dims[i]).into_owned());
            }
            traj.x.push(x);
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Quotient error at every sample. It evolves under the observer's
/// quotient map regardless of the unknown inputs.
pub fn centralized_quotient_errors(obs: &CentralizedObserver, traj: &Trajectory) -> Vec<Vector> {
    traj.x
        .iter()
        .zip(&traj.states[0])
        .map(|(x, z)| obs.quotient_error(x, z))
        .collect()
}

/// Quotient error of node `k` at every sample; the consensus terms vanish
/// on it, so it evolves under the node's own quotient map.
pub fn node_quotient_errors(net: &DistributedObserverNetwork, traj: &Trajectory, k: usize) -> Vec<Vector> {
    traj.x
        .iter()
        .zip(&traj.states[k])
        .map(|(x, s)| net.nodes[k].quotient_error(x, s))
        .collect()
}
