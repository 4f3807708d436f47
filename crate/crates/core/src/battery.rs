//! Randomized cross-check of the geometric existence test against the
//! classical rank-plus-detectability test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::central::{check_uio_condition, classical_rank_condition, RankConditions};
use crate::error::Result;
use crate::geometry::{decompose, SynthesisSettings};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_states: usize,
    pub max_outputs: usize,
    pub max_unknown_inputs: usize,
    pub entry_bound: f64,
    /// Instances whose smallest decision margin falls below this are marginal.
    pub marginal_gap: f64,
}

impl BatteryConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        BatteryConfig {
            trials,
            seed,
            max_states: 6,
            max_outputs: 3,
            max_unknown_inputs: 2,
            entry_bound: 2.0,
            marginal_gap: 1e-6,
        }
    }
}

/// Random `(A, C, B̄)` with entries uniform in `[−bound, bound]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTriple {
    pub a: Mat,
    pub c: Mat,
    pub bbar: Mat,
}

/// Draws trial `index` of the stream identified by `seed`; independent of
/// the order in which trials are drawn.
pub fn random_triple(seed: u64, index: u64, max_states: usize, max_outputs: usize, max_unknown: usize, bound: f64) -> RandomTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = rng.random_range(2..=max_states.max(2));
    let p = rng.random_range(1..=max_outputs.min(n).max(1));
    let q = rng.random_range(1..=max_unknown.min(n).max(1));
    let mut draw = |r: usize, c: usize| Mat::from_fn(r, c, |_, _| rng.random_range(-bound..=bound));
    let a = draw(n, n);
    let c = draw(p, n);
    let bbar = draw(n, q);
    RandomTriple { a, c, bbar }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub states: usize,
    pub outputs: usize,
    pub unknown_inputs: usize,
    pub geometric: bool,
    pub rank_matched: bool,
    pub detectable: bool,
    pub margin: f64,
    pub marginal: bool,
}

impl TrialOutcome {
    pub fn agrees(&self) -> bool {
        self.geometric == (self.rank_matched && self.detectable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub trials: usize,
    pub scored: usize,
    pub agreements: usize,
    pub marginal: usize,
    /// Trials where either test returned an error.
    pub errors: usize,
    pub disagreements: Vec<TrialOutcome>,
    pub outcomes: Vec<TrialOutcome>,
}

impl BatteryReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.scored == 0 {
            1.0
        } else {
            self.agreements as f64 / self.scored as f64
        }
    }

    pub fn marginal_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.marginal as f64 / self.trials as f64
        }
    }

    pub fn passed(&self, max_marginal_rate: f64) -> bool {
        self.disagreements.is_empty() && self.errors == 0 && self.marginal_rate() < max_marginal_rate
    }
}

/// Runs both existence tests on one triple, returning the outcome and the
/// smallest decision margin seen by either.
pub fn evaluate(triple: &RandomTriple, settings: &SynthesisSettings) -> (Result<(bool, RankConditions)>, f64) {
    linalg::audited(|| {
        let d = decompose(&triple.a, &triple.c, &triple.bbar, settings)?;
        let geometric = check_uio_condition(&d, &triple.c, &settings.tol)?;
        let classical =
            classical_rank_condition(&triple.a, &triple.c, &triple.bbar, &settings.spectral, &settings.tol)?;
        Ok((geometric, classical))
    })
}

pub fn run_battery(cfg: &BatteryConfig, settings: &SynthesisSettings) -> BatteryReport {
    let mut report = BatteryReport {
        seed: cfg.seed,
        trials: cfg.trials,
        scored: 0,
        agreements: 0,
        marginal: 0,
        errors: 0,
        disagreements: Vec::new(),
        outcomes: Vec::with_capacity(cfg.trials),
    };
    for index in 0..cfg.trials {
        let triple = random_triple(
            cfg.seed,
            index as u64,
            cfg.max_states,
            cfg.max_outputs,
            cfg.max_unknown_inputs,
            cfg.entry_bound,
        );
        let (result, margin) = evaluate(&triple, settings);
        let marginal = margin < cfg.marginal_gap;
        let Ok((geometric, classical)) = result else {
            if marginal {
                report.marginal += 1;
            } else {
                report.errors += 1;
            }
            continue;
        };
        let outcome = TrialOutcome {
            index,
            states: triple.a.nrows(),
            outputs: triple.c.nrows(),
            unknown_inputs: triple.bbar.ncols(),
            geometric,
            rank_matched: classical.rank_matched,
            detectable: classical.detectable,
            margin,
            marginal,
        };
        if marginal {
            report.marginal += 1;
        } else {
            report.scored += 1;
            if outcome.agrees() {
                report.agreements += 1;
            } else {
                report.disagreements.push(outcome);
            }
        }
        report.outcomes.push(outcome);
    }
    report
}
