use std::collections::BTreeSet;

use crate::engine::Reparametrization;
use crate::graph::{EdgeId, FactorGraph, FactorId};

/// Tolerance for membership in a factor's minimizer set.
pub const MINIMIZER_TOL: f64 = 1e-9;

/// All configurations within [`MINIMIZER_TOL`] of the factor minimum.
pub fn enumerate_minimizers(fg: &FactorGraph, state: &Reparametrization, i: FactorId) -> Vec<usize> {
    let domain = fg.factor(i).domain.as_ref();
    let cost = state.cost(i);
    let (_, min) = domain.minimize(cost);
    (0..domain.num_configs())
        .filter(|&c| domain.config_cost(cost, c) <= min + MINIMIZER_TOL)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub violated: Vec<EdgeId>,
}

/// Checks `A_(i,j) S_i == A_(j,i) S_j` on every coupling edge, where `S_i`
/// is the full minimizer set of factor `i`.
pub fn marginal_consistency(fg: &FactorGraph, state: &Reparametrization) -> ConsistencyReport {
    let minimizers: Vec<Vec<usize>> = (0..fg.num_factors())
        .map(|i| enumerate_minimizers(fg, state, i))
        .collect();
    let image = |factor: FactorId, e: EdgeId| -> BTreeSet<Vec<u8>> {
        let domain = fg.factor(factor).domain.as_ref();
        let proj = fg.edge(e).projection(factor);
        minimizers[factor]
            .iter()
            .map(|&c| proj.image(domain.support(c)))
            .collect()
    };
    let violated: Vec<EdgeId> = (0..fg.num_edges())
        .filter(|&e| {
            let (a, b) = fg.edge(e).endpoints();
            image(a, e) != image(b, e)
        })
        .collect();
    ConsistencyReport {
        consistent: violated.is_empty(),
        violated,
    }
}
