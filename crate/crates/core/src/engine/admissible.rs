//! Enumeration checks that a message update is admissible.

use crate::engine::{MessageUpdate, Reparametrization, MINIMIZER_TOL};
use crate::graph::{FactorGraph, FactorId};

/// Outcome of [`check_admissible`]; every field is true for an admissible
/// update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibilityReport {
    /// Exact sign pattern relative to the anchor.
    pub sign_pattern: bool,
    /// The anchor still minimizes after applying the update.
    pub anchor_minimal: bool,
    /// The anchor minimizes `<-delta, A x>` over the domain.
    pub anchor_minimizes_negated_update: bool,
    /// Every other minimizer also satisfies the sign pattern and stays
    /// minimal, up to tolerance.
    pub ties_transfer: bool,
}

impl AdmissibilityReport {
    pub fn holds(&self) -> bool {
        self.sign_pattern && self.anchor_minimal && self.anchor_minimizes_negated_update && self.ties_transfer
    }
}

fn update_value(fg: &FactorGraph, update: &MessageUpdate, config: usize) -> f64 {
    let support = fg.factor(update.factor).domain.support(config);
    update
        .targets
        .iter()
        .zip(&update.deltas)
        .map(|(&e, delta)| {
            let image = fg.edge(e).projection(update.factor).image(support);
            image.iter().zip(delta).map(|(&a, &d)| f64::from(a) * d).sum::<f64>()
        })
        .sum()
}

fn is_minimal(costs: &[f64], config: usize, tol: f64) -> bool {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    costs[config] <= min + tol
}

fn config_costs(fg: &FactorGraph, factor: FactorId, cost: &[f64]) -> Vec<f64> {
    let domain = fg.factor(factor).domain.as_ref();
    (0..domain.num_configs()).map(|c| domain.config_cost(cost, c)).collect()
}

/// Checks `update`, computed on `state`, when applied with `weight`.
pub fn check_admissible(
    fg: &FactorGraph,
    state: &Reparametrization,
    update: &MessageUpdate,
    weight: f64,
) -> AdmissibilityReport {
    let i = update.factor;
    let domain = fg.factor(i).domain.as_ref();
    let before = config_costs(fg, i, state.cost(i));
    let scale = before
        .iter()
        .chain(update.deltas.iter().flatten())
        .filter(|v| v.is_finite())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 10.0 * MINIMIZER_TOL * scale;

    let mut after_state = state.clone();
    for (&e, delta) in update.targets.iter().zip(&update.deltas) {
        after_state.add_message(fg, e, i, delta, weight);
    }
    let after = config_costs(fg, i, after_state.cost(i));

    let negated: Vec<f64> = (0..domain.num_configs())
        .map(|c| -update_value(fg, update, c))
        .collect();
    let anchor_minimizes_negated_update = is_minimal(&negated, update.anchor, tol);

    let sign_ok = |config: usize, slack: f64| {
        let support = domain.support(config);
        update.targets.iter().zip(&update.deltas).all(|(&e, delta)| {
            let image = fg.edge(e).projection(i).image(support);
            image
                .iter()
                .zip(delta)
                .all(|(&a, &d)| if a == 1 { d >= -slack } else { d <= slack })
        })
    };
    let min_before = before.iter().copied().fold(f64::INFINITY, f64::min);
    let ties_transfer = (0..domain.num_configs())
        .filter(|&c| c != update.anchor && before[c] <= min_before + MINIMIZER_TOL * scale)
        .all(|c| sign_ok(c, tol) && is_minimal(&after, c, tol));

    AdmissibilityReport {
        sign_pattern: sign_ok(update.anchor, 0.0),
        anchor_minimal: is_minimal(&after, update.anchor, tol),
        anchor_minimizes_negated_update,
        ties_transfer,
    }
}
