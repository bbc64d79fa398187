//! Iterate-and-round driver shared by the CRF and graph matching solvers.

use std::time::Instant;

use crate::engine::{
    run_iteration, run_iteration_observed, ConvergenceMonitor, Direction, Reparametrization, Schedule, StopRule,
};
use crate::error::Result;
use crate::graph::{FactorGraph, FactorId};
use crate::io::log::{ConvergenceRecord, Event};

/// Rounding kicks in on every forward pass once the relative improvement
/// of the bound drops below this.
pub const ROUNDING_GAIN_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub stop: StopRule,
    /// Also round on forward passes every this many iterations (0: never).
    pub round_interval: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            stop: StopRule::default(),
            round_interval: 10,
        }
    }
}

/// Primal heuristic interleaved with a forward pass.
pub trait PassRounder {
    fn begin(&mut self);

    /// Called right before the receive step of each visited factor.
    fn visit(&mut self, fg: &FactorGraph, state: &Reparametrization, factor: FactorId);

    /// Completes the pass; returns the primal cost and solution, or `None`
    /// when no feasible solution was found.
    fn finish(&mut self, fg: &FactorGraph, state: &Reparametrization) -> Option<(f64, Vec<usize>)>;

    /// Rounds from `state` alone, outside of any pass.
    fn round(&mut self, fg: &FactorGraph, state: &Reparametrization) -> Option<(f64, Vec<usize>)> {
        self.begin();
        self.finish(fg, state)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub dual: f64,
    /// Best primal cost found; `+inf` when rounding never succeeded.
    pub primal: f64,
    pub solution: Option<Vec<usize>>,
    pub trace: Vec<ConvergenceRecord>,
    pub iterations: usize,
}

impl SolveOutcome {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

struct Best {
    primal: f64,
    solution: Option<Vec<usize>>,
}

impl Best {
    fn offer(&mut self, candidate: Option<(f64, Vec<usize>)>) -> bool {
        match candidate {
            Some((value, sol)) if value < self.primal || self.solution.is_none() => {
                self.primal = value;
                self.solution = Some(sol);
                true
            }
            _ => false,
        }
    }

    fn as_record(&self) -> Option<f64> {
        self.solution.as_ref().map(|_| self.primal)
    }
}

pub fn solve_with_rounding(
    fg: &FactorGraph,
    state: &mut Reparametrization,
    schedule: &mut Schedule,
    options: &SolveOptions,
    rounder: &mut dyn PassRounder,
) -> Result<SolveOutcome> {
    schedule.validate(fg)?;
    let start = Instant::now();
    let elapsed = || start.elapsed().as_millis() as u64;
    let mut bound = state.lower_bound(fg);
    let mut best = Best {
        primal: f64::INFINITY,
        solution: None,
    };
    let mut trace = vec![ConvergenceRecord {
        iteration: 0,
        elapsed_ms: 0,
        dual_bound: bound,
        best_primal: None,
        event: Event::Iterate,
    }];
    let mut monitor = ConvergenceMonitor::new(options.stop, bound);
    let mut last_gain = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=options.stop.max_iters {
        let forward = schedule.direction() == Direction::Forward;
        let periodic = options.round_interval > 0 && it % options.round_interval == 0;
        let do_round = forward && (last_gain < ROUNDING_GAIN_THRESHOLD || periodic);
        bound = if do_round {
            rounder.begin();
            let b = run_iteration_observed(fg, state, schedule, &mut |f, s| rounder.visit(fg, s, f))?;
            best.offer(rounder.finish(fg, state));
            b
        } else {
            run_iteration(fg, state, schedule)?
        };
        iterations = it;
        last_gain = monitor.observe(bound);
        trace.push(ConvergenceRecord {
            iteration: it,
            elapsed_ms: elapsed(),
            dual_bound: bound,
            best_primal: best.as_record(),
            event: if do_round { Event::Round } else { Event::Iterate },
        });
        if monitor.converged() {
            break;
        }
    }

    best.offer(rounder.round(fg, state));
    trace.push(ConvergenceRecord {
        iteration: iterations,
        elapsed_ms: elapsed(),
        dual_bound: bound,
        best_primal: best.as_record(),
        event: Event::Round,
    });
    Ok(SolveOutcome {
        dual: bound,
        primal: best.primal,
        solution: best.solution,
        trace,
        iterations,
    })
}
