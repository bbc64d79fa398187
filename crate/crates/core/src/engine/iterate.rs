use crate::engine::message::{apply_update, maximize_message};
use crate::engine::schedule::{validate_blocks, Schedule, SendBlock};
use crate::engine::Reparametrization;
use crate::error::Result;
use crate::graph::{EdgeId, FactorGraph, FactorId};

/// For each listed edge, the neighbor across it sends its maximal message
/// to `i` alone; updates are applied one after another with weight 1.
pub fn receive_messages(
    fg: &FactorGraph,
    state: &mut Reparametrization,
    i: FactorId,
    receive: &[EdgeId],
) -> Result<()> {
    for &e in receive {
        fg.check_incident(i, e)?;
        let j = fg.edge(e).other(i);
        let update = maximize_message(fg, state, j, &[e], None)?;
        apply_update(fg, state, &update, 1.0)?;
    }
    Ok(())
}

/// Computes every block's message from the same snapshot, then applies
/// them with their weights.
pub fn send_messages(fg: &FactorGraph, state: &mut Reparametrization, i: FactorId, blocks: &[SendBlock]) -> Result<()> {
    validate_blocks(fg, i, blocks)?;
    let updates = blocks
        .iter()
        .map(|b| maximize_message(fg, state, i, &b.targets, None))
        .collect::<Result<Vec<_>>>()?;
    for (update, block) in updates.iter().zip(blocks) {
        apply_update(fg, state, update, block.weight)?;
    }
    Ok(())
}

/// One pass over the schedule. Returns the dual bound after the pass.
pub fn run_iteration(fg: &FactorGraph, state: &mut Reparametrization, schedule: &mut Schedule) -> Result<f64> {
    run_iteration_observed(fg, state, schedule, &mut |_, _| {})
}

/// Like [`run_iteration`], calling `observer` right before each visit's
/// receive step.
pub fn run_iteration_observed(
    fg: &FactorGraph,
    state: &mut Reparametrization,
    schedule: &mut Schedule,
    observer: &mut dyn FnMut(FactorId, &Reparametrization),
) -> Result<f64> {
    for visit in schedule.current() {
        observer(visit.factor, state);
        receive_messages(fg, state, visit.factor, &visit.receive)?;
        send_messages(fg, state, visit.factor, &visit.send)?;
    }
    schedule.advance();
    state.refresh(fg);
    Ok(state.lower_bound(fg))
}

/// Relative slack used for all monotonicity comparisons.
pub fn bound_slack(bound: f64) -> f64 {
    1e-9 * bound.abs().max(1.0)
}

/// Stopping rule: at most `max_iters` iterations, and stop once the bound
/// has improved by less than `tol * max(1, |D|)` on `patience` consecutive
/// iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub tol: f64,
    pub patience: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-8,
            patience: 2,
        }
    }
}

/// Tracks consecutive small improvements for a [`StopRule`].
#[derive(Debug, Clone)]
pub struct ConvergenceMonitor {
    rule: StopRule,
    stalled: usize,
    last: f64,
}

impl ConvergenceMonitor {
    pub fn new(rule: StopRule, initial: f64) -> Self {
        Self {
            rule,
            stalled: 0,
            last: initial,
        }
    }

    /// Relative improvement of `bound` over the previous observation.
    pub fn observe(&mut self, bound: f64) -> f64 {
        let gain = (bound - self.last) / self.last.abs().max(1.0);
        if gain < self.rule.tol {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.last = bound;
        gain
    }

    pub fn converged(&self) -> bool {
        self.stalled >= self.rule.patience
    }

    pub fn reset(&mut self, bound: f64) {
        self.stalled = 0;
        self.last = bound;
    }
}

/// Runs iterations until the stop rule fires. Returns the bound trace,
/// starting with the bound before the first iteration.
pub fn run_to_convergence(
    fg: &FactorGraph,
    state: &mut Reparametrization,
    schedule: &mut Schedule,
    rule: StopRule,
) -> Result<Vec<f64>> {
    let initial = state.lower_bound(fg);
    let mut trace = vec![initial];
    let mut monitor = ConvergenceMonitor::new(rule, initial);
    for _ in 0..rule.max_iters {
        let bound = run_iteration(fg, state, schedule)?;
        trace.push(bound);
        monitor.observe(bound);
        if monitor.converged() {
            break;
        }
    }
    Ok(trace)
}
