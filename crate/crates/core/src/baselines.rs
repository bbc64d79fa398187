//! Subgradient ascent on the same dual, and exhaustive oracles for small
//! instances.

use crate::engine::Reparametrization;
use crate::error::{Error, Result};
use crate::graph::{edge_agrees, DualVariables, FactorGraph, Labeling};
use crate::matching::MatchingModel;
use crate::mrf::PairwiseModel;
use crate::multicut::{multicut_cost, GraphPartition, MulticutInstance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Step `c` every iteration.
    Constant(f64),
    /// Step `c / t` at iteration `t = 1, 2, ...`.
    Diminishing(f64),
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            StepRule::Constant(c) | StepRule::Diminishing(c) => c,
        };
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("step parameter must be positive, got {c}")))
        }
    }

    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepRule::Constant(c) => c,
            StepRule::Diminishing(c) => c / t.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubgradientResult {
    /// Best bound seen, including the starting point.
    pub best_bound: f64,
    pub duals: DualVariables,
    /// Running best bound after each step, starting with the initial one.
    pub trace: Vec<f64>,
}

/// Synchronous subgradient ascent from `phi = 0`.
///
/// Each step minimizes every factor independently and moves the dual of
/// each coupling by the step size times the disagreement of the two
/// projected minimizers.
pub fn subgradient_solve(fg: &FactorGraph, steps: usize, rule: StepRule) -> Result<SubgradientResult> {
    rule.validate()?;
    let mut state = Reparametrization::new(fg);
    let mut best = state.lower_bound(fg);
    let mut trace = vec![best];
    for t in 1..=steps {
        let minimizers: Vec<usize> = (0..fg.num_factors())
            .map(|i| fg.factor(i).domain.minimize(state.cost(i)).0)
            .collect();
        let step = rule.step(t);
        let mut duals = state.duals().clone();
        for (e, edge) in fg.edges().iter().enumerate() {
            let (a, b) = edge.endpoints();
            let ia = edge.projection(a).apply(fg.factor(a).domain.support(minimizers[a]));
            let ib = edge.projection(b).apply(fg.factor(b).domain.support(minimizers[b]));
            for ((phi, &xa), &xb) in duals.stored_mut(e).iter_mut().zip(&ia).zip(&ib) {
                *phi += step * (xa as f64 - xb as f64);
            }
        }
        state = Reparametrization::from_duals(fg, duals);
        best = best.max(state.lower_bound(fg));
        trace.push(best);
    }
    Ok(SubgradientResult {
        best_bound: best,
        duals: state.into_duals(),
        trace,
    })
}

/// Largest search space the exhaustive oracles accept.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Exact minimum of the base costs over coupling-consistent labelings,
/// by depth-first search that prunes on inconsistent couplings. `None`
/// when no consistent labeling exists.
pub fn brute_force_ilp(fg: &FactorGraph) -> Result<Option<(Labeling, f64)>> {
    let size: f64 = fg.factors().iter().map(|f| f.domain.num_configs() as f64).product();
    if size > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap(format!("{size} joint configurations")));
    }
    let n = fg.num_factors();
    let mut current = vec![0; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    ilp_dfs(fg, 0, 0.0, &mut current, &mut best);
    Ok(best.map(|(x, v)| (Labeling(x), v)))
}

fn ilp_dfs(fg: &FactorGraph, i: usize, acc: f64, current: &mut Vec<usize>, best: &mut Option<(Vec<usize>, f64)>) {
    if i == fg.num_factors() {
        if best.as_ref().is_none_or(|(_, v)| acc < *v) {
            *best = Some((current.clone(), acc));
        }
        return;
    }
    let factor = fg.factor(i);
    for config in 0..factor.domain.num_configs() {
        current[i] = config;
        let consistent = fg.incident(i).iter().all(|&e| {
            let edge = fg.edge(e);
            let (a, b) = edge.endpoints();
            let other = edge.other(i);
            other > i || edge_agrees(fg, edge, current[a], current[b])
        });
        if consistent {
            let cost = factor.domain.config_cost(&factor.cost, config);
            ilp_dfs(fg, i + 1, acc + cost, current, best);
        }
    }
}

/// Exact MAP labeling of a pairwise model by enumerating node labelings.
pub fn brute_force_crf(model: &PairwiseModel) -> Result<(Vec<usize>, f64)> {
    let n = model.num_nodes();
    let size: f64 = (0..n).map(|u| model.num_labels(u) as f64).product();
    if size > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap(format!("{size} labelings")));
    }
    let mut labels = vec![0; n];
    let mut best = (labels.clone(), model.energy(&labels));
    'outer: loop {
        let mut u = 0;
        loop {
            if u == n {
                break 'outer;
            }
            labels[u] += 1;
            if labels[u] < model.num_labels(u) {
                break;
            }
            labels[u] = 0;
            u += 1;
        }
        let value = model.energy(&labels);
        if value < best.1 {
            best = (labels.clone(), value);
        }
    }
    Ok(best)
}

pub const MULTICUT_ORACLE_MAX_VERTICES: usize = 10;

/// Cheapest partition over all set partitions of the vertices.
pub fn brute_force_multicut(instance: &MulticutInstance) -> Result<(GraphPartition, f64)> {
    let n = instance.num_vertices();
    if n > MULTICUT_ORACLE_MAX_VERTICES {
        return Err(Error::SizeCap(format!("{n} vertices")));
    }
    // restricted growth strings: a[0] = 0, a[k] <= 1 + max(a[..k])
    let mut a = vec![0usize; n];
    let single = GraphPartition::from_labels(&a);
    let mut best = (single.clone(), multicut_cost(instance, &single));
    if n == 0 {
        return Ok(best);
    }
    loop {
        let mut k = n - 1;
        loop {
            if k == 0 {
                return Ok(best);
            }
            let bound = a[..k].iter().max().unwrap() + 1;
            if a[k] < bound {
                a[k] += 1;
                break;
            }
            a[k] = 0;
            k -= 1;
        }
        let p = GraphPartition::from_labels(&a);
        let value = multicut_cost(instance, &p);
        if value < best.1 {
            best = (p, value);
        }
    }
}

pub const MATCHING_ORACLE_MAX_NODES: usize = 8;

/// Cheapest assignment of distinct universe labels to all nodes, or
/// `None` when every node cannot be served.
pub fn brute_force_matching(model: &MatchingModel) -> Result<Option<(Vec<usize>, f64)>> {
    let n = model.num_nodes();
    if n > MATCHING_ORACLE_MAX_NODES {
        return Err(Error::SizeCap(format!("{n} nodes")));
    }
    let mut used = vec![false; model.universe()];
    let mut local = vec![0; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    matching_dfs(model, 0, &mut used, &mut local, &mut best);
    Ok(best.map(|(l, v)| (model.to_universe(&l), v)))
}

fn matching_dfs(
    model: &MatchingModel,
    u: usize,
    used: &mut [bool],
    local: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, f64)>,
) {
    if u == model.num_nodes() {
        let value = model.backbone().energy(local);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            *best = Some((local.clone(), value));
        }
        return;
    }
    for (k, &s) in model.candidates(u).iter().enumerate() {
        if !used[s] {
            used[s] = true;
            local[u] = k;
            matching_dfs(model, u + 1, used, local, best);
            used[s] = false;
        }
    }
}
