//! Graph matching: a pairwise model whose labels come from a shared
//! universe, each universe label used by at most one node. Every universe
//! label gets a factor choosing which node takes it, or nobody.

use std::sync::Arc;

use crate::engine::{Reparametrization, Schedule, SendBlock, Visit};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, FactorGraph, FactorGraphBuilder, FactorId, Labeling, Projection};
use crate::mrf::{
    add_crf_factors, check_order, simplex_coordinate_messages, split_by_order, GreedyRounder, PairwiseModel, Simplex,
};
use crate::solve::{solve_with_rounding, SolveOptions, SolveOutcome};

/// Node `u` chooses among `candidates[u]`; its local label `k` stands for
/// universe label `candidates[u][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingModel {
    backbone: PairwiseModel,
    universe: usize,
    candidates: Vec<Vec<usize>>,
}

impl MatchingModel {
    /// `unary[u][k]` is the cost of assigning `candidates[u][k]` to `u`.
    pub fn new(universe: usize, candidates: Vec<Vec<usize>>, unary: Vec<Vec<f64>>) -> Result<Self> {
        if candidates.len() != unary.len() {
            return Err(Error::InvalidModel(format!(
                "{} candidate sets for {} nodes",
                candidates.len(),
                unary.len()
            )));
        }
        for (u, cands) in candidates.iter().enumerate() {
            if cands.is_empty() {
                return Err(Error::EmptyCandidateSet(u));
            }
            if cands.len() != unary[u].len() {
                return Err(Error::InvalidModel(format!(
                    "node {u}: {} candidates but {} unary costs",
                    cands.len(),
                    unary[u].len()
                )));
            }
            for (k, &s) in cands.iter().enumerate() {
                if s >= universe {
                    return Err(Error::InvalidModel(format!(
                        "node {u}: label {s} outside universe of size {universe}"
                    )));
                }
                if cands[..k].contains(&s) {
                    return Err(Error::InvalidModel(format!("node {u}: label {s} listed twice")));
                }
            }
        }
        Ok(Self {
            backbone: PairwiseModel::new(unary)?,
            universe,
            candidates,
        })
    }

    /// Pairwise costs between `u` and `v`, indexed by their local labels.
    pub fn add_edge(&mut self, u: usize, v: usize, table: Vec<f64>) -> Result<usize> {
        self.backbone.add_edge(u, v, table)
    }

    pub fn backbone(&self) -> &PairwiseModel {
        &self.backbone
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn num_nodes(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates(&self, u: usize) -> &[usize] {
        &self.candidates[u]
    }

    /// Local index of universe label `s` at node `u`.
    pub fn local_label(&self, u: usize, s: usize) -> Option<usize> {
        self.candidates[u].iter().position(|&c| c == s)
    }

    /// Nodes having `s` as a candidate, ascending.
    pub fn nodes_with(&self, s: usize) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&u| self.candidates[u].contains(&s))
            .collect()
    }

    /// Objective of an assignment given in universe labels; `None` if some
    /// node is unassigned or takes a label outside its candidates.
    pub fn cost(&self, assignment: &[Option<usize>]) -> Option<f64> {
        let local: Vec<usize> = assignment
            .iter()
            .enumerate()
            .map(|(u, s)| s.and_then(|s| self.local_label(u, s)))
            .collect::<Option<_>>()?;
        Some(self.backbone.energy(&local))
    }

    pub fn to_universe(&self, local: &[usize]) -> Vec<usize> {
        local.iter().enumerate().map(|(u, &k)| self.candidates[u][k]).collect()
    }
}

/// Factor layout: nodes, then edges as in the CRF graph, then one label
/// factor per universe label. Label factor `s` has one coordinate per node
/// in [`MatchingModel::nodes_with`] followed by the dummy "unassigned".
#[derive(Debug, Clone)]
pub struct GmFactorGraph {
    pub fg: FactorGraph,
    label_offset: usize,
    /// Coupling id of (node, local label).
    node_couplings: Vec<Vec<EdgeId>>,
    /// Coupling ids of each label factor, by ascending node.
    label_couplings: Vec<Vec<EdgeId>>,
}

impl GmFactorGraph {
    pub fn label_factor(&self, s: usize) -> FactorId {
        self.label_offset + s
    }

    pub fn node_couplings(&self, u: usize) -> &[EdgeId] {
        &self.node_couplings[u]
    }

    pub fn label_couplings(&self, s: usize) -> &[EdgeId] {
        &self.label_couplings[s]
    }
}

pub fn build_gm_factor_graph(model: &MatchingModel) -> Result<GmFactorGraph> {
    if let Some(u) = model.candidates.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptyCandidateSet(u));
    }
    let backbone = &model.backbone;
    let mut b = FactorGraphBuilder::new();
    add_crf_factors(&mut b, backbone);
    let label_offset = backbone.num_nodes() + backbone.num_edges();
    let members: Vec<Vec<usize>> = (0..model.universe).map(|s| model.nodes_with(s)).collect();
    for nodes in &members {
        b.add_factor(Arc::new(Simplex::new(nodes.len() + 1)), vec![0.0; nodes.len() + 1]);
    }
    let mut node_couplings = vec![Vec::new(); model.num_nodes()];
    let mut label_couplings = vec![Vec::new(); model.universe];
    for (u, cands) in model.candidates.iter().enumerate() {
        for (k, &s) in cands.iter().enumerate() {
            let pos = members[s].binary_search(&u).expect("member list holds u");
            let id = b.add_coupling(
                u,
                label_offset + s,
                Projection::coordinate(cands.len(), k),
                Projection::coordinate(members[s].len() + 1, pos),
            );
            node_couplings[u].push(id);
            label_couplings[s].push(id);
        }
    }
    // nodes are added in ascending order, so label couplings already follow
    // the member order
    Ok(GmFactorGraph {
        fg: b.build()?,
        label_offset,
        node_couplings,
        label_couplings,
    })
}

/// Message from a label factor with reparametrized cost `theta` (members
/// first, dummy last) to the member at position `target`:
/// best cost without the target minus the target's cost.
pub fn label_factor_message(theta: &[f64], target: usize) -> Result<f64> {
    if target + 1 >= theta.len() {
        return Err(Error::InvalidModel(format!(
            "position {target} is not a coupled node of a label factor with {} members",
            theta.len().saturating_sub(1)
        )));
    }
    let mut anchor = 0;
    for (k, &v) in theta.iter().enumerate() {
        if v < theta[anchor] {
            anchor = k;
        }
    }
    Ok(simplex_coordinate_messages(theta, anchor, &[target])[0])
}

/// Factor graph labeling for a complete assignment in local labels; label
/// factors pick their assigned node or the dummy.
pub fn gm_labeling(model: &MatchingModel, local: &[usize]) -> Labeling {
    let backbone = &model.backbone;
    let mut configs = local.to_vec();
    for &(u, v) in backbone.edges() {
        configs.push(local[u] * backbone.num_labels(v) + local[v]);
    }
    for s in 0..model.universe {
        let members = model.nodes_with(s);
        let pos = members
            .iter()
            .position(|&u| model.candidates[u][local[u]] == s)
            .unwrap_or(members.len());
        configs.push(pos);
    }
    Labeling(configs)
}

fn node_pass(model: &MatchingModel, gm: &GmFactorGraph, order: &[usize]) -> Vec<Visit> {
    let split = split_by_order(&model.backbone, order);
    order
        .iter()
        .map(|&u| {
            let (incoming, outgoing) = &split[u];
            let labels = &gm.node_couplings[u];
            let w = 1.0 / (1 + incoming.len().max(outgoing.len())) as f64;
            let mut receive = incoming.clone();
            receive.extend_from_slice(labels);
            let mut send: Vec<SendBlock> = outgoing
                .iter()
                .map(|&c| SendBlock {
                    targets: vec![c],
                    weight: w,
                })
                .collect();
            if !labels.is_empty() {
                send.push(SendBlock {
                    targets: labels.clone(),
                    weight: w,
                });
            }
            Visit {
                factor: u,
                receive,
                send,
            }
        })
        .collect()
}

fn label_visit(gm: &GmFactorGraph, s: usize) -> Visit {
    let couplings = gm.label_couplings[s].clone();
    Visit {
        factor: gm.label_factor(s),
        receive: couplings.clone(),
        send: vec![SendBlock {
            targets: couplings,
            weight: 1.0,
        }],
    }
}

/// Node visits along `order` (reversed on backward passes), each sending
/// to its outgoing edges and, as one block, to all of its label factors;
/// then every label factor gathers from its nodes and sends everything back.
pub fn schedule_amp(model: &MatchingModel, gm: &GmFactorGraph, order: &[usize]) -> Result<Schedule> {
    check_order(model.num_nodes(), order)?;
    let active: Vec<usize> = (0..model.universe)
        .filter(|&s| !gm.label_couplings[s].is_empty())
        .collect();
    let mut forward = node_pass(model, gm, order);
    forward.extend(active.iter().map(|&s| label_visit(gm, s)));
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    let mut backward = node_pass(model, gm, &reversed);
    backward.extend(active.iter().rev().map(|&s| label_visit(gm, s)));
    Ok(Schedule::alternating(forward, backward))
}

/// Greedy assignment along `order` that skips labels already taken.
/// Entries are universe labels; `None` marks a node left without a label.
pub fn round_gm(model: &MatchingModel, state: &Reparametrization, order: &[usize]) -> Result<Vec<Option<usize>>> {
    check_order(model.num_nodes(), order)?;
    let mut r = GreedyRounder::new(&model.backbone, Some((&model.candidates, model.universe)), order);
    r.complete(state);
    Ok(r.labels()
        .iter()
        .enumerate()
        .map(|(u, l)| l.map(|k| model.candidates[u][k]))
        .collect())
}

/// True iff no universe label is assigned twice.
pub fn verify_matching(assignment: &[Option<usize>]) -> bool {
    let mut seen = std::collections::HashSet::new();
    assignment.iter().flatten().all(|&s| seen.insert(s))
}

/// Runs the AMP schedule with interleaved rounding. The solution is in
/// local labels; `primal` is infinite when no complete matching was found.
pub fn solve_gm(model: &MatchingModel, order: &[usize], options: &SolveOptions) -> Result<SolveOutcome> {
    let gm = build_gm_factor_graph(model)?;
    let mut schedule = schedule_amp(model, &gm, order)?;
    let mut state = Reparametrization::new(&gm.fg);
    let mut rounder = GreedyRounder::new(&model.backbone, Some((&model.candidates, model.universe)), order);
    solve_with_rounding(&gm.fg, &mut state, &mut schedule, options, &mut rounder)
}
