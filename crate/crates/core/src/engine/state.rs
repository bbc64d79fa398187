use crate::graph::{reparametrized_cost, DualVariables, EdgeId, FactorGraph, FactorId};

/// Dual variables together with a cache of every factor's reparametrized
/// cost. Message applications update both incrementally; [`refresh`]
/// rebuilds the cache from the duals.
///
/// [`refresh`]: Reparametrization::refresh
#[derive(Debug, Clone)]
pub struct Reparametrization {
    duals: DualVariables,
    costs: Vec<Vec<f64>>,
}

impl Reparametrization {
    pub fn new(fg: &FactorGraph) -> Self {
        Self::from_duals(fg, DualVariables::zeros(fg))
    }

    pub fn from_duals(fg: &FactorGraph, duals: DualVariables) -> Self {
        let costs = (0..fg.num_factors())
            .map(|i| reparametrized_cost(fg, &duals, i))
            .collect();
        Self { duals, costs }
    }

    pub fn duals(&self) -> &DualVariables {
        &self.duals
    }

    pub fn into_duals(self) -> DualVariables {
        self.duals
    }

    pub fn cost(&self, factor: FactorId) -> &[f64] {
        &self.costs[factor]
    }

    pub fn refresh(&mut self, fg: &FactorGraph) {
        for (i, cost) in self.costs.iter_mut().enumerate() {
            *cost = reparametrized_cost(fg, &self.duals, i);
        }
    }

    /// Grows to a graph that extends the one this state was built for.
    pub fn extend_to(&mut self, fg: &FactorGraph) {
        self.duals.extend_to(fg);
        self.costs.resize(fg.num_factors(), Vec::new());
        self.refresh(fg);
    }

    pub fn lower_bound(&self, fg: &FactorGraph) -> f64 {
        fg.factors()
            .iter()
            .zip(&self.costs)
            .map(|(f, cost)| f.domain.minimize(cost).1)
            .sum()
    }

    /// `phi_(from, other) += weight * delta`, keeping both cached costs in step.
    pub fn add_message(&mut self, fg: &FactorGraph, edge: EdgeId, from: FactorId, delta: &[f64], weight: f64) {
        if weight == 0.0 {
            return;
        }
        let e = fg.edge(edge);
        let to = e.other(from);
        self.duals.add(fg, edge, from, delta, weight);
        e.projection(from).add_transpose(delta, weight, &mut self.costs[from]);
        e.projection(to).add_transpose(delta, -weight, &mut self.costs[to]);
    }
}
