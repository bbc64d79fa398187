//! Pairwise CRF MAP inference: simplex node factors, table edge factors
//! coupled by marginalization, and the SRMP / MSD / MPLP schedules.

use std::sync::Arc;

use crate::engine::{Reparametrization, Schedule, SendBlock, Visit};
use crate::error::{Error, Result};
use crate::graph::{
    EdgeId, FactorDomain, FactorGraph, FactorGraphBuilder, FactorId, Labeling, Projection, ProjectionShape, TableAxis,
};
use crate::solve::{solve_with_rounding, PassRounder, SolveOptions, SolveOutcome};

/// Unit vectors of length `n`: configuration `k` selects coordinate `k`.
#[derive(Debug, Clone)]
pub struct Simplex {
    coords: Vec<usize>,
}

impl Simplex {
    pub fn new(n: usize) -> Self {
        Self {
            coords: (0..n).collect(),
        }
    }
}

fn first_min(cost: &[f64]) -> (usize, f64) {
    let mut best = (0, cost[0]);
    for (k, &v) in cost.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

/// The coordinate a single-row projection selects, if it is one.
fn selected_coordinate(p: &Projection) -> Option<usize> {
    match p.shape() {
        ProjectionShape::Coordinate(c) => Some(c),
        ProjectionShape::Identity if p.rows() == 1 => Some(0),
        _ => None,
    }
}

impl FactorDomain for Simplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn num_configs(&self) -> usize {
        self.coords.len()
    }

    fn support(&self, config: usize) -> &[usize] {
        &self.coords[config..config + 1]
    }

    fn config_cost(&self, cost: &[f64], config: usize) -> f64 {
        cost[config]
    }

    fn minimize(&self, cost: &[f64]) -> (usize, f64) {
        first_min(cost)
    }

    fn closed_form_message(&self, cost: &[f64], anchor: usize, targets: &[&Projection]) -> Option<Vec<Vec<f64>>> {
        if let [p] = targets {
            if p.shape() == ProjectionShape::Identity {
                return Some(vec![node_to_edge_message(cost)]);
            }
        }
        let coords: Vec<usize> = targets.iter().map(|p| selected_coordinate(p)).collect::<Option<_>>()?;
        for (k, c) in coords.iter().enumerate() {
            if coords[..k].contains(c) {
                return None;
            }
        }
        Some(
            simplex_coordinate_messages(cost, anchor, &coords)
                .into_iter()
                .map(|d| vec![d])
                .collect(),
        )
    }
}

/// Row-major `rows x cols` table of label pairs, one configuration per cell.
#[derive(Debug, Clone)]
pub struct PairTable {
    rows: usize,
    cols: usize,
    cells: Simplex,
}

impl PairTable {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: Simplex::new(rows * cols),
        }
    }
}

impl FactorDomain for PairTable {
    fn name(&self) -> &'static str {
        "pair-table"
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn num_configs(&self) -> usize {
        self.rows * self.cols
    }

    fn support(&self, config: usize) -> &[usize] {
        self.cells.support(config)
    }

    fn config_cost(&self, cost: &[f64], config: usize) -> f64 {
        cost[config]
    }

    fn minimize(&self, cost: &[f64]) -> (usize, f64) {
        first_min(cost)
    }

    fn closed_form_message(&self, cost: &[f64], _anchor: usize, targets: &[&Projection]) -> Option<Vec<Vec<f64>>> {
        match targets {
            [p] => match p.shape() {
                ProjectionShape::Marginal { rows, cols, axis } if rows == self.rows && cols == self.cols => {
                    Some(vec![edge_to_node_message(cost, rows, cols, axis)])
                }
                _ => None,
            },
            _ => None,
        }
    }
}

/// `min(theta) - theta(x)` for every label `x`.
pub fn node_to_edge_message(theta: &[f64]) -> Vec<f64> {
    let (_, min) = first_min(theta);
    theta.iter().map(|&v| min - v).collect()
}

/// Minimum over the whole table minus the min-marginal along `axis`.
pub fn edge_to_node_message(table: &[f64], rows: usize, cols: usize, axis: TableAxis) -> Vec<f64> {
    let (_, min) = first_min(table);
    let k = match axis {
        TableAxis::Rows => rows,
        TableAxis::Cols => cols,
    };
    let mut marginal = vec![f64::INFINITY; k];
    for a in 0..rows {
        for b in 0..cols {
            let s = match axis {
                TableAxis::Rows => a,
                TableAxis::Cols => b,
            };
            marginal[s] = marginal[s].min(table[a * cols + b]);
        }
    }
    marginal.into_iter().map(|m| min - m).collect()
}

/// Joint message from a simplex factor to scalar couplings on the distinct
/// coordinates `coords`, anchored at `anchor`.
///
/// Coordinates other than the anchor drop to the anchor's cost. A lone
/// target on the anchor itself is raised up to the second best cost.
pub fn simplex_coordinate_messages(cost: &[f64], anchor: usize, coords: &[usize]) -> Vec<f64> {
    let mu = cost[anchor];
    if let [only] = coords {
        if *only == anchor {
            let second = cost
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != anchor)
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min);
            return vec![if second.is_finite() { second - mu } else { 0.0 }];
        }
    }
    coords
        .iter()
        .map(|&c| if c == anchor { 0.0 } else { mu - cost[c] })
        .collect()
}

/// Unary and pairwise costs over a graph with per-node label counts.
/// Pairwise tables are row-major with the lower node id as row index.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel {
    unary: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    pairwise: Vec<Vec<f64>>,
    adjacency: Vec<Vec<(EdgeId, usize)>>,
}

impl PairwiseModel {
    /// A model without edges. Every node needs at least one label.
    pub fn new(unary: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(u) = unary.iter().position(|t| t.is_empty()) {
            return Err(Error::InvalidModel(format!("node {u} has no labels")));
        }
        let n = unary.len();
        Ok(Self {
            unary,
            edges: Vec::new(),
            pairwise: Vec::new(),
            adjacency: vec![Vec::new(); n],
        })
    }

    /// Adds edge `uv` with a row-major table indexed `(x_u, x_v)`. The
    /// table is transposed when `u > v`. Returns the edge index.
    pub fn add_edge(&mut self, u: usize, v: usize, table: Vec<f64>) -> Result<usize> {
        let n = self.num_nodes();
        if u >= n || v >= n {
            return Err(Error::InvalidModel(format!("edge ({u},{v}) references a missing node")));
        }
        if u == v {
            return Err(Error::InvalidModel(format!("self-loop at node {u}")));
        }
        if self.edge_index(u, v).is_some() {
            return Err(Error::InvalidModel(format!("duplicate edge ({u},{v})")));
        }
        let (nu, nv) = (self.num_labels(u), self.num_labels(v));
        if table.len() != nu * nv {
            return Err(Error::InvalidModel(format!(
                "edge ({u},{v}) table has {} entries, expected {}",
                table.len(),
                nu * nv
            )));
        }
        let (a, b, table) = if u < v {
            (u, v, table)
        } else {
            let mut t = vec![0.0; nu * nv];
            for xu in 0..nu {
                for xv in 0..nv {
                    t[xv * nu + xu] = table[xu * nv + xv];
                }
            }
            (v, u, t)
        };
        let e = self.edges.len();
        self.edges.push((a, b));
        self.pairwise.push(table);
        self.adjacency[a].push((e, b));
        self.adjacency[b].push((e, a));
        Ok(e)
    }

    pub fn num_nodes(&self) -> usize {
        self.unary.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_labels(&self, u: usize) -> usize {
        self.unary[u].len()
    }

    pub fn unary(&self, u: usize) -> &[f64] {
        &self.unary[u]
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn pairwise(&self, e: usize) -> &[f64] {
        &self.pairwise[e]
    }

    /// Incident edges of `u` with the node at the other end.
    pub fn neighbors(&self, u: usize) -> &[(EdgeId, usize)] {
        &self.adjacency[u]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency.get(u)?.iter().find(|&&(_, w)| w == v).map(|&(e, _)| e)
    }

    /// Pairwise cost of edge `e` with `x_u = a` at endpoint `u` and the
    /// other endpoint at `b`.
    fn pair_cost(&self, table: &[f64], e: usize, u: usize, a: usize, b: usize) -> f64 {
        let (lo, hi) = self.edges[e];
        if u == lo {
            table[a * self.num_labels(hi) + b]
        } else {
            table[b * self.num_labels(u) + a]
        }
    }

    pub fn energy(&self, labels: &[usize]) -> f64 {
        let unary: f64 = labels.iter().enumerate().map(|(u, &x)| self.unary[u][x]).sum();
        let pairwise: f64 = self
            .edges
            .iter()
            .zip(&self.pairwise)
            .map(|(&(u, v), t)| t[labels[u] * self.num_labels(v) + labels[v]])
            .sum();
        unary + pairwise
    }
}

/// Factor graph of a pairwise model. Node `u` is factor `u`, edge `e` is
/// factor `n + e`; coupling `2e` joins edge `e` to its lower endpoint and
/// `2e + 1` to its upper endpoint.
#[derive(Debug, Clone)]
pub struct CrfFactorGraph {
    pub fg: FactorGraph,
    pub num_nodes: usize,
}

impl CrfFactorGraph {
    pub fn edge_factor(&self, e: usize) -> FactorId {
        self.num_nodes + e
    }
}

/// Coupling id joining edge `e` with its endpoint `u`.
pub fn coupling_id(model: &PairwiseModel, u: usize, e: usize) -> EdgeId {
    if model.edges[e].0 == u {
        2 * e
    } else {
        2 * e + 1
    }
}

pub(crate) fn add_crf_factors(b: &mut FactorGraphBuilder, model: &PairwiseModel) {
    for u in 0..model.num_nodes() {
        b.add_factor(Arc::new(Simplex::new(model.num_labels(u))), model.unary[u].clone());
    }
    let n = model.num_nodes();
    for (e, &(u, v)) in model.edges.iter().enumerate() {
        let (nu, nv) = (model.num_labels(u), model.num_labels(v));
        let f = b.add_factor(Arc::new(PairTable::new(nu, nv)), model.pairwise[e].clone());
        debug_assert_eq!(f, n + e);
        b.add_coupling(
            u,
            f,
            Projection::identity(nu),
            Projection::table_marginal(nu, nv, TableAxis::Rows),
        );
        b.add_coupling(
            v,
            f,
            Projection::identity(nv),
            Projection::table_marginal(nu, nv, TableAxis::Cols),
        );
    }
}

pub fn build_crf_factor_graph(model: &PairwiseModel) -> Result<CrfFactorGraph> {
    let mut b = FactorGraphBuilder::new();
    add_crf_factors(&mut b, model);
    Ok(CrfFactorGraph {
        fg: b.build()?,
        num_nodes: model.num_nodes(),
    })
}

/// Factor graph labeling for node labels: each edge factor takes the cell
/// of its endpoint labels.
pub fn crf_labeling(model: &PairwiseModel, labels: &[usize]) -> Labeling {
    let mut configs = labels.to_vec();
    for &(u, v) in &model.edges {
        configs.push(labels[u] * model.num_labels(v) + labels[v]);
    }
    Labeling(configs)
}

pub(crate) fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidModel(format!(
            "node order has {} entries, model has {n} nodes",
            order.len()
        )));
    }
    for &u in order {
        if u >= n || seen[u] {
            return Err(Error::InvalidModel(format!("node order is not a permutation (at {u})")));
        }
        seen[u] = true;
    }
    Ok(())
}

/// Incoming (earlier in `order`) and outgoing coupling ids of every node.
pub(crate) fn split_by_order(model: &PairwiseModel, order: &[usize]) -> Vec<(Vec<EdgeId>, Vec<EdgeId>)> {
    let mut pos = vec![0; model.num_nodes()];
    for (k, &u) in order.iter().enumerate() {
        pos[u] = k;
    }
    (0..model.num_nodes())
        .map(|u| {
            let mut incoming = Vec::new();
            let mut outgoing = Vec::new();
            for &(e, v) in model.neighbors(u) {
                let c = coupling_id(model, u, e);
                if pos[v] < pos[u] {
                    incoming.push(c);
                } else {
                    outgoing.push(c);
                }
            }
            (incoming, outgoing)
        })
        .collect()
}

fn srmp_pass(model: &PairwiseModel, order: &[usize]) -> Vec<Visit> {
    let split = split_by_order(model, order);
    order
        .iter()
        .map(|&u| {
            let (incoming, outgoing) = &split[u];
            let w = 1.0 / incoming.len().max(outgoing.len()).max(1) as f64;
            Visit {
                factor: u,
                receive: incoming.clone(),
                send: outgoing
                    .iter()
                    .map(|&c| SendBlock {
                        targets: vec![c],
                        weight: w,
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Sequential reweighted message passing over node factors: forward along
/// `order`, backward along its reverse.
pub fn schedule_srmp(model: &PairwiseModel, order: &[usize]) -> Result<Schedule> {
    check_order(model.num_nodes(), order)?;
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    Ok(Schedule::alternating(
        srmp_pass(model, order),
        srmp_pass(model, &reversed),
    ))
}

/// Min-sum diffusion: every node gathers from all its edges and spreads
/// evenly back to them.
pub fn schedule_msd(model: &PairwiseModel) -> Schedule {
    let visits = (0..model.num_nodes())
        .map(|u| {
            let couplings: Vec<EdgeId> = model
                .neighbors(u)
                .iter()
                .map(|&(e, _)| coupling_id(model, u, e))
                .collect();
            let w = 1.0 / couplings.len().max(1) as f64;
            Visit {
                factor: u,
                receive: couplings.clone(),
                send: couplings
                    .iter()
                    .map(|&c| SendBlock {
                        targets: vec![c],
                        weight: w,
                    })
                    .collect(),
            }
        })
        .collect();
    Schedule::fixed(visits)
}

/// Max-product LP style: edge factors gather from both endpoints and hand
/// half of the result back to each.
pub fn schedule_mplp(model: &PairwiseModel) -> Schedule {
    let n = model.num_nodes();
    let visits = (0..model.num_edges())
        .map(|e| Visit {
            factor: n + e,
            receive: vec![2 * e, 2 * e + 1],
            send: vec![
                SendBlock {
                    targets: vec![2 * e],
                    weight: 0.5,
                },
                SendBlock {
                    targets: vec![2 * e + 1],
                    weight: 0.5,
                },
            ],
        })
        .collect();
    Schedule::fixed(visits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrfSchedule {
    Srmp,
    Msd,
    Mplp,
}

/// Greedy sequential labeling on reparametrized costs. Each node takes the
/// label minimizing its own cost plus the edge costs towards neighbors
/// already labeled. With `universe` set, a universe label is used at most
/// once and nodes left without a label stay unassigned.
pub(crate) struct GreedyRounder<'a> {
    model: &'a PairwiseModel,
    universe: Option<(&'a [Vec<usize>], usize)>,
    order: Vec<usize>,
    labels: Vec<Option<usize>>,
    visited: Vec<bool>,
    used: Vec<bool>,
}

impl<'a> GreedyRounder<'a> {
    pub(crate) fn new(model: &'a PairwiseModel, universe: Option<(&'a [Vec<usize>], usize)>, order: &[usize]) -> Self {
        let n = model.num_nodes();
        Self {
            model,
            universe,
            order: order.to_vec(),
            labels: vec![None; n],
            visited: vec![false; n],
            used: vec![false; universe.map_or(0, |(_, size)| size)],
        }
    }

    fn reset(&mut self) {
        self.labels.iter_mut().for_each(|l| *l = None);
        self.visited.iter_mut().for_each(|v| *v = false);
        self.used.iter_mut().for_each(|u| *u = false);
    }

    fn assign(&mut self, state: &Reparametrization, u: usize) {
        self.visited[u] = true;
        let n = self.model.num_nodes();
        let theta = state.cost(u);
        let mut best: Option<(usize, f64)> = None;
        for (k, &base) in theta.iter().enumerate() {
            if let Some((cands, _)) = self.universe {
                if self.used[cands[u][k]] {
                    continue;
                }
            }
            let mut value = base;
            for &(e, v) in self.model.neighbors(u) {
                if let Some(xv) = self.labels[v] {
                    value += self.model.pair_cost(state.cost(n + e), e, u, k, xv);
                }
            }
            if best.is_none_or(|(_, b)| value < b) {
                best = Some((k, value));
            }
        }
        if let Some((k, _)) = best {
            self.labels[u] = Some(k);
            if let Some((cands, _)) = self.universe {
                self.used[cands[u][k]] = true;
            }
        }
    }

    /// Assigns every node not visited yet, in order.
    pub(crate) fn complete(&mut self, state: &Reparametrization) {
        for idx in 0..self.order.len() {
            let u = self.order[idx];
            if !self.visited[u] {
                self.assign(state, u);
            }
        }
    }

    pub(crate) fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    fn result(&self) -> Option<(f64, Vec<usize>)> {
        let labels: Vec<usize> = self.labels.iter().copied().collect::<Option<_>>()?;
        Some((self.model.energy(&labels), labels))
    }
}

impl PassRounder for GreedyRounder<'_> {
    fn begin(&mut self) {
        self.reset();
    }

    fn visit(&mut self, _fg: &FactorGraph, state: &Reparametrization, factor: FactorId) {
        if factor < self.model.num_nodes() && !self.visited[factor] {
            self.assign(state, factor);
        }
    }

    fn finish(&mut self, _fg: &FactorGraph, state: &Reparametrization) -> Option<(f64, Vec<usize>)> {
        self.complete(state);
        self.result()
    }

    /// Outside a pass, rounds along the order and along its reverse and
    /// keeps the cheaper result.
    fn round(&mut self, _fg: &FactorGraph, state: &Reparametrization) -> Option<(f64, Vec<usize>)> {
        let forward = self.order.clone();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for order in [forward.clone(), forward.iter().rev().copied().collect()] {
            self.order = order;
            self.reset();
            self.complete(state);
            if let Some(r) = self.result() {
                if best.as_ref().is_none_or(|b| r.0 < b.0) {
                    best = Some(r);
                }
            }
        }
        self.order = forward;
        best
    }
}

/// Sequential rounding along `order` from the current reparametrization.
pub fn round_crf(model: &PairwiseModel, state: &Reparametrization, order: &[usize]) -> Result<Vec<usize>> {
    check_order(model.num_nodes(), order)?;
    let mut r = GreedyRounder::new(model, None, order);
    r.complete(state);
    Ok(r.labels().iter().map(|l| l.expect("every node has a label")).collect())
}

/// Runs the chosen schedule to convergence with interleaved rounding.
/// `order` drives SRMP and rounding.
pub fn solve_crf(
    model: &PairwiseModel,
    kind: CrfSchedule,
    order: &[usize],
    options: &SolveOptions,
) -> Result<SolveOutcome> {
    check_order(model.num_nodes(), order)?;
    let crf = build_crf_factor_graph(model)?;
    let mut schedule = match kind {
        CrfSchedule::Srmp => schedule_srmp(model, order)?,
        CrfSchedule::Msd => schedule_msd(model),
        CrfSchedule::Mplp => schedule_mplp(model),
    };
    let mut state = Reparametrization::new(&crf.fg);
    let mut rounder = GreedyRounder::new(model, None, order);
    solve_with_rounding(&crf.fg, &mut state, &mut schedule, options, &mut rounder)
}
