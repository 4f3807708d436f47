//! Command implementations and the exit-code contract.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use geo_uio::battery::{run_battery, BatteryConfig, BatteryReport};
use geo_uio::central::{classical_rank_condition, synthesize_centralized_uio, CentralizedObserver, ObserverResiduals};
use geo_uio::distributed::{synthesize_distributed, DistributedObserverNetwork};
use geo_uio::sim::{error_metrics, simulate_centralized, simulate_distributed, Trajectory};
use geo_uio::GeoError;

use crate::config::{self, Prepared, Problem, ProjectConfig};
use crate::output;
use crate::report::{observer_metrics, CheckRow, RunReport};

/// Largest share of marginal draws tolerated by the randomized battery.
pub const MAX_MARGINAL_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 1,
    Synthesis = 2,
    Simulation = 3,
    Verification = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        Failure { kind, error: error.into() }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stage = match self.kind {
            ExitKind::Config => "configuration error",
            ExitKind::Synthesis => "synthesis failed",
            ExitKind::Simulation => "simulation failed",
            ExitKind::Verification => "verification failed",
        };
        write!(f, "{stage}: {:#}", self.error)
    }
}

pub type Outcome<T> = Result<T, Failure>;

trait Stage<T> {
    fn stage(self, kind: ExitKind) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, kind: ExitKind) -> Outcome<T> {
        self.map_err(|e| Failure::new(kind, e))
    }
}

/// Malformed inputs surface as configuration errors whichever stage finds them.
fn classify(err: GeoError, stage: ExitKind) -> Failure {
    let kind = match err {
        GeoError::InvalidInput(_) | GeoError::DimensionMismatch { .. } => ExitKind::Config,
        _ => stage,
    };
    Failure::new(kind, err)
}

pub enum Synthesized {
    Centralized {
        obs: Box<CentralizedObserver>,
        residuals: ObserverResiduals,
    },
    Distributed {
        net: Box<DistributedObserverNetwork>,
        residuals: Vec<ObserverResiduals>,
    },
}

impl Synthesized {
    pub fn observer_names(&self) -> Vec<String> {
        match self {
            Synthesized::Centralized { .. } => vec!["node1".into()],
            Synthesized::Distributed { net, .. } => net.nodes.iter().map(|n| format!("node{}", n.id)).collect(),
        }
    }

    fn residuals(&self) -> Vec<(String, &ObserverResiduals)> {
        let names = self.observer_names();
        match self {
            Synthesized::Centralized { residuals, .. } => vec![(names[0].clone(), residuals)],
            Synthesized::Distributed { residuals, .. } => names.into_iter().zip(residuals).collect(),
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Outcome<ProjectConfig> {
    let path = path.ok_or_else(|| Failure::new(ExitKind::Config, anyhow!("--config PATH is required")))?;
    config::load(path).stage(ExitKind::Config)
}

pub fn synthesize(p: &Prepared) -> Outcome<(Synthesized, RunReport)> {
    let settings = &p.settings;
    match &p.problem {
        Problem::Centralized { sys, inputs } => {
            let obs = synthesize_centralized_uio(sys, inputs, settings).map_err(|e| classify(e, ExitKind::Synthesis))?;
            let residuals = obs.residuals(sys, inputs).map_err(|e| classify(e, ExitKind::Synthesis))?;
            let classical = classical_rank_condition(&sys.a, &sys.c, &inputs.b_unknown, &settings.spectral, &settings.tol)
                .map_err(|e| classify(e, ExitKind::Synthesis))?;
            let report = RunReport::centralized(
                sys,
                settings,
                &obs,
                classical,
                &residuals,
                &inputs.known_cols,
                &inputs.unknown_cols,
            );
            Ok((
                Synthesized::Centralized {
                    obs: Box::new(obs),
                    residuals,
                },
                report,
            ))
        }
        Problem::Distributed {
            sys,
            nodes,
            graph,
            u_bar_max,
        } => {
            let net = synthesize_distributed(sys, nodes, graph, settings, *u_bar_max, p.safety)
                .map_err(|e| classify(e, ExitKind::Synthesis))?;
            let residuals = net
                .nodes
                .iter()
                .map(|n| n.residuals(&sys.a))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| classify(e, ExitKind::Synthesis))?;
            let report = RunReport::distributed(sys, settings, &net, &residuals);
            Ok((
                Synthesized::Distributed {
                    net: Box::new(net),
                    residuals,
                },
                report,
            ))
        }
    }
}

pub fn simulate(p: &Prepared, synth: &Synthesized) -> Outcome<Trajectory> {
    let result = match (synth, &p.problem) {
        (Synthesized::Centralized { obs, .. }, Problem::Centralized { sys, inputs }) => {
            simulate_centralized(sys, inputs, obs, &p.signals, &p.sim)
        }
        (Synthesized::Distributed { net, .. }, Problem::Distributed { sys, .. }) => {
            simulate_distributed(sys, net, &p.signals, &p.sim)
        }
        _ => unreachable!("synthesis result always matches the problem kind"),
    };
    result.map_err(|e| classify(e, ExitKind::Simulation))
}

/// Per-observer residual checks against fixed thresholds.
pub fn residual_checks(synth: &Synthesized, alpha: f64) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for (name, r) in synth.residuals() {
        let bounded = |check: &str, worst: f64, limit: f64| CheckRow {
            check: format!("{name} {check}"),
            worst,
            threshold: format!("<= {limit:.0e}"),
            pass: worst <= limit,
        };
        rows.push(bounded("reconstruction |E P + F C - I|", r.reconstruction, 1e-9));
        rows.push(bounded("unknown-input leak |P B_unknown|", r.unknown_input_leak, 1e-10));
        rows.push(bounded("friend invariance residual", r.friend, 1e-9));
        rows.push(bounded("quotient commutation residual", r.commutation, 1e-9));
        rows.push(CheckRow {
            check: format!("{name} max Re eig(quotient map)"),
            worst: r.max_real_eigenvalue,
            threshold: format!("< {alpha}"),
            pass: r.max_real_eigenvalue < alpha,
        });
        rows.push(CheckRow {
            check: format!("{name} zero-split dimension identity"),
            worst: if r.dimension_identity { 0.0 } else { 1.0 },
            threshold: "exact".into(),
            pass: r.dimension_identity,
        });
    }
    rows
}

pub fn battery_checks(report: &BatteryReport) -> Vec<CheckRow> {
    vec![
        CheckRow {
            check: format!("existence tests agree ({} of {} scored)", report.agreements, report.scored),
            worst: report.disagreements.len() as f64,
            threshold: "0 disagreements".into(),
            pass: report.disagreements.is_empty(),
        },
        CheckRow {
            check: "trials with numerical errors".into(),
            worst: report.errors as f64,
            threshold: "0".into(),
            pass: report.errors == 0,
        },
        CheckRow {
            check: format!("marginal draws ({} of {})", report.marginal, report.trials),
            worst: report.marginal_rate(),
            threshold: format!("< {MAX_MARGINAL_RATE}"),
            pass: report.marginal_rate() < MAX_MARGINAL_RATE,
        },
    ]
}

fn print_checks(rows: &[CheckRow]) {
    let width = rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(0);
    for r in rows {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let pad = width - r.check.chars().count();
        println!("{verdict}  {}{}  worst {:>11.3e}  ({})", r.check, " ".repeat(pad), r.worst, r.threshold);
    }
}

fn prepare_out(out: &Path) -> Outcome<()> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
        .stage(ExitKind::Config)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T, kind: ExitKind) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).context("cannot serialize report").stage(kind)?;
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .stage(kind)
}

fn print_synthesis(synth: &Synthesized, report: &RunReport) {
    match synth {
        Synthesized::Centralized { obs, .. } => {
            let d = &obs.decomp;
            println!("centralized observer: z_dim = {}", obs.z_dim());
            println!(
                "dim W* = {}, dim S* = {}, dim W_g* = {}, zeros good/bad = {}/{}",
                d.w_star.dim(),
                d.s_star.dim(),
                d.wg_star.dim(),
                d.xbar_g.dim(),
                d.xbar_b.dim()
            );
            println!("{}: pass", crate::report::INTERSECTION_CHECK);
        }
        Synthesized::Distributed { net, .. } => {
            let dist = report.distributed.as_ref().expect("distributed report");
            println!("distributed observer: N1 = {:?}, N2 = {:?}", dist.n1, dist.n2);
            for n in &net.nodes {
                println!(
                    "node {}: {:?}, state dim {}, dim W_g* = {}",
                    n.id,
                    n.class,
                    n.state_dim(),
                    n.decomp.wg_star.dim()
                );
            }
            println!(
                "chi = {:.6} (min {:.6}), gamma = {:.6} (min {:.6}), u_bar_max = {}",
                net.chi, net.bounds.chi_min, net.gamma, net.bounds.gamma_min, net.u_bar_max
            );
        }
    }
}

pub fn cmd_synth(config: Option<&Path>, out: &Path) -> Outcome<()> {
    let prepared = load_config(config)?.prepare().stage(ExitKind::Config)?;
    let (synth, report) = synthesize(&prepared)?;
    prepare_out(out)?;
    write_json(&out.join("report.json"), &report, ExitKind::Synthesis)?;
    print_synthesis(&synth, &report);
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}

fn run_simulation(prepared: &Prepared, synth: &Synthesized, report: &mut RunReport, out: &Path) -> Outcome<Trajectory> {
    let traj = simulate(prepared, synth)?;
    let names = synth.observer_names();
    output::write_trajectory_csv(&out.join("trajectory.csv"), &traj, &names).stage(ExitKind::Simulation)?;
    for (k, name) in names.iter().enumerate() {
        output::write_plot_data(&out.join(format!("plot_{name}_err.dat")), &traj.times, &traj.err_norm[k])
            .stage(ExitKind::Simulation)?;
    }
    let metrics = observer_metrics(&names, &error_metrics(&traj, prepared.error_tolerance));
    for m in &metrics {
        let settle = m.time_to_tolerance.map_or("never".to_string(), |t| format!("t = {t}"));
        println!(
            "{}: final err {:.3e}, max err {:.3e}, below {:.0e} from {settle}",
            m.observer, m.final_err, m.max_err, m.tolerance
        );
    }
    report.metrics = Some(metrics);
    Ok(traj)
}

pub fn cmd_simulate(config: Option<&Path>, out: &Path) -> Outcome<()> {
    let prepared = load_config(config)?.prepare().stage(ExitKind::Config)?;
    let (synth, mut report) = synthesize(&prepared)?;
    prepare_out(out)?;
    run_simulation(&prepared, &synth, &mut report, out)?;
    write_json(&out.join("report.json"), &report, ExitKind::Simulation)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_verify(config: Option<&Path>, out: Option<&Path>, trials: Option<usize>, seed: u64) -> Outcome<()> {
    if config.is_none() && trials.is_none() {
        return Err(Failure::new(
            ExitKind::Config,
            anyhow!("verify needs --config PATH or --trials N"),
        ));
    }
    let mut rows = Vec::new();
    if let Some(n) = trials {
        if n == 0 {
            return Err(Failure::new(ExitKind::Config, anyhow!("--trials must be at least 1")));
        }
        let settings = geo_uio::SynthesisSettings {
            tol: config::tolerance_policy().stage(ExitKind::Config)?,
            ..Default::default()
        };
        let report = run_battery(&BatteryConfig::new(n, seed), &settings);
        println!("randomized battery: {n} trials, seed {seed}");
        rows.extend(battery_checks(&report));
        if let Some(dir) = out {
            prepare_out(dir)?;
            write_json(&dir.join("battery.json"), &report, ExitKind::Verification)?;
        }
    }
    if config.is_some() {
        let prepared = load_config(config)?.prepare().stage(ExitKind::Config)?;
        let (synth, mut report) = synthesize(&prepared)?;
        let checks = residual_checks(&synth, prepared.settings.spectral.alpha);
        rows.extend(checks.iter().cloned());
        report.verification = Some(checks);
        if let Some(dir) = out {
            prepare_out(dir)?;
            write_json(&dir.join("report.json"), &report, ExitKind::Verification)?;
        }
    }
    print_checks(&rows);
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Failure::new(
            ExitKind::Verification,
            anyhow!("{failed} of {} checks failed", rows.len()),
        ));
    }
    println!("all {} checks passed", rows.len());
    Ok(())
}

/// Built-in example names accepted by `reproduce`.
pub const EXAMPLES: [&str; 2] = ["centralized", "distributed"];

pub fn builtin_config(which: &str) -> Outcome<ProjectConfig> {
    let cfg = match which {
        "centralized" => ProjectConfig::centralized_reference(),
        "distributed" => ProjectConfig::distributed_reference(),
        other => {
            return Err(Failure::new(
                ExitKind::Config,
                anyhow!("unknown example {other:?}; expected one of {}", EXAMPLES.join(", ")),
            ))
        }
    };
    cfg.stage(ExitKind::Config)
}

pub fn cmd_reproduce(which: &str, out: Option<&Path>) -> Outcome<()> {
    let cfg = builtin_config(which)?;
    let out: PathBuf = out.map_or_else(|| PathBuf::from("out").join(which), Path::to_path_buf);
    prepare_out(&out)?;
    write_json(&out.join("config.json"), &cfg, ExitKind::Config)?;
    let prepared = cfg.prepare().stage(ExitKind::Config)?;
    let (synth, mut report) = synthesize(&prepared)?;
    print_synthesis(&synth, &report);
    run_simulation(&prepared, &synth, &mut report, &out)?;
    let checks = residual_checks(&synth, prepared.settings.spectral.alpha);
    print_checks(&checks);
    let failed = checks.iter().filter(|r| !r.pass).count();
    report.verification = Some(checks);
    write_json(&out.join("report.json"), &report, ExitKind::Simulation)?;
    println!("wrote {}", out.display());
    if failed > 0 {
        return Err(Failure::new(ExitKind::Verification, anyhow!("{failed} residual checks failed")));
    }
    Ok(())
}
