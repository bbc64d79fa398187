//! Multicut: 0/1 edge factors (cut or not), triangle cycle factors that
//! forbid a single cut edge on a triangle, cutting-plane activation of
//! triangles and local-search rounding.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use crate::engine::{
    receive_messages, run_iteration, ConvergenceMonitor, Reparametrization, Schedule, SendBlock, StopRule, Visit,
};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, FactorDomain, FactorGraph, FactorGraphBuilder, FactorId, Labeling, Projection};
use crate::io::log::{ConvergenceRecord, Event};

/// Graph with edge costs. A positive cost prefers joining the endpoints,
/// a negative one cutting them. Auxiliary edges are chords added during
/// separation and always cost zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticutInstance {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    costs: Vec<f64>,
    auxiliary: Vec<bool>,
    index: HashMap<(usize, usize), usize>,
}

impl MulticutInstance {
    /// Vertices named by their index.
    pub fn new(num_vertices: usize) -> Self {
        Self::with_names((0..num_vertices).map(|v| v.to_string()).collect())
    }

    pub fn with_names(names: Vec<String>) -> Self {
        Self {
            names,
            edges: Vec::new(),
            costs: Vec::new(),
            auxiliary: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push_edge(&mut self, u: usize, v: usize, cost: f64, auxiliary: bool) -> Result<usize> {
        let n = self.num_vertices();
        if u >= n || v >= n {
            return Err(Error::InvalidModel(format!(
                "edge ({u},{v}) references a missing vertex"
            )));
        }
        if u == v {
            return Err(Error::InvalidModel(format!("self-loop at vertex {}", self.names[u])));
        }
        let key = (u.min(v), u.max(v));
        if self.index.contains_key(&key) {
            return Err(Error::InvalidModel(format!(
                "duplicate edge ({},{})",
                self.names[key.0], self.names[key.1]
            )));
        }
        let e = self.edges.len();
        self.edges.push(key);
        self.costs.push(cost);
        self.auxiliary.push(auxiliary);
        self.index.insert(key, e);
        Ok(e)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cost: f64) -> Result<usize> {
        self.push_edge(u, v, cost, false)
    }

    pub fn add_auxiliary_edge(&mut self, u: usize, v: usize) -> Result<usize> {
        self.push_edge(u, v, 0.0, true)
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn is_auxiliary(&self, e: usize) -> bool {
        self.auxiliary[e]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.index.get(&(u.min(v), u.max(v))).copied()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }
}

/// Component id per vertex, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphPartition {
    labels: Vec<usize>,
}

impl GraphPartition {
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_components(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_cut(&self, u: usize, v: usize) -> bool {
        self.labels[u] != self.labels[v]
    }
}

/// Sum of the costs of cut edges.
pub fn multicut_cost(instance: &MulticutInstance, partition: &GraphPartition) -> f64 {
    instance
        .edges
        .iter()
        .zip(&instance.costs)
        .filter(|(&(u, v), _)| partition.is_cut(u, v))
        .map(|(_, &c)| c)
        .sum()
}

/// Cut indicator per edge.
pub fn induced_cut(instance: &MulticutInstance, partition: &GraphPartition) -> Vec<u8> {
    instance
        .edges
        .iter()
        .map(|&(u, v)| u8::from(partition.is_cut(u, v)))
        .collect()
}

/// True iff no cycle of the graph carries exactly one cut edge under `x`,
/// i.e. the endpoints of every cut edge are disconnected by uncut edges.
pub fn cut_is_feasible(instance: &MulticutInstance, x: &[u8]) -> bool {
    let n = instance.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for (e, &(u, v)) in instance.edges.iter().enumerate() {
        if x[e] == 0 {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    instance
        .edges
        .iter()
        .enumerate()
        .filter(|&(e, _)| x[e] == 1)
        .all(|(_, &(u, v))| find(&mut parent, u) != find(&mut parent, v))
}

/// Domain {0, 1} of a single cut indicator.
#[derive(Debug, Clone, Copy)]
pub struct BinaryVar;

const BINARY_SUPPORTS: [&[usize]; 2] = [&[], &[0]];

impl FactorDomain for BinaryVar {
    fn name(&self) -> &'static str {
        "binary"
    }

    fn dim(&self) -> usize {
        1
    }

    fn num_configs(&self) -> usize {
        2
    }

    fn support(&self, config: usize) -> &[usize] {
        BINARY_SUPPORTS[config]
    }

    /// The whole cost moves across, whichever value is optimal.
    fn closed_form_message(&self, cost: &[f64], _anchor: usize, targets: &[&Projection]) -> Option<Vec<Vec<f64>>> {
        match targets {
            [p] if p.entries() == [(0, 0)] => Some(vec![vec![-cost[0]]]),
            _ => None,
        }
    }
}

/// Cut patterns of a triangle with no edge cut alone, in canonical order.
pub const TRIANGLE_CONFIGS: [[u8; 3]; 5] = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0], [1, 1, 1]];

const TRIANGLE_SUPPORTS: [&[usize]; 5] = [&[], &[1, 2], &[0, 2], &[0, 1], &[0, 1, 2]];

/// Joint cut indicators of the three edges of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleCycle;

impl FactorDomain for TriangleCycle {
    fn name(&self) -> &'static str {
        "triangle"
    }

    fn dim(&self) -> usize {
        3
    }

    fn num_configs(&self) -> usize {
        5
    }

    fn support(&self, config: usize) -> &[usize] {
        TRIANGLE_SUPPORTS[config]
    }

    /// Difference of the best patterns with the target edge uncut and cut.
    fn closed_form_message(&self, cost: &[f64], _anchor: usize, targets: &[&Projection]) -> Option<Vec<Vec<f64>>> {
        let [p] = targets else { return None };
        let [(0, c)] = p.entries() else { return None };
        let c = *c;
        let (mut m0, mut m1) = (f64::INFINITY, f64::INFINITY);
        for (config, support) in TRIANGLE_SUPPORTS.iter().enumerate() {
            let value = self.config_cost(cost, config);
            if support.contains(&c) {
                m1 = m1.min(value);
            } else {
                m0 = m0.min(value);
            }
        }
        Some(vec![vec![m0 - m1]])
    }
}

/// Best admissible cut pattern of a triangle and its cost.
pub fn cycle_min_oracle(theta: [f64; 3]) -> ([u8; 3], f64) {
    let (config, value) = TriangleCycle.minimize(&theta);
    (TRIANGLE_CONFIGS[config], value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Edge(usize),
    Cycle(usize),
}

/// Factor graph of a multicut instance with a set of active triangles.
///
/// Triangle `k` is coupled to its edges `[ab, ac, bc]` by couplings `3k`,
/// `3k + 1`, `3k + 2`. A fresh build puts edge `e` at factor `e` followed
/// by the triangles; [`grow`](Self::grow) appends new edges and triangles
/// after the existing factors so that factor and coupling ids stay put.
#[derive(Debug, Clone)]
pub struct MulticutFactorGraph {
    pub fg: FactorGraph,
    slots: Vec<Slot>,
    edge_factor: Vec<FactorId>,
    cycles: Vec<[usize; 3]>,
    edge_couplings: Vec<Vec<EdgeId>>,
}

impl MulticutFactorGraph {
    pub fn num_edges(&self) -> usize {
        self.edge_factor.len()
    }

    pub fn edge_factor(&self, e: usize) -> FactorId {
        self.edge_factor[e]
    }

    /// Vertex triples of the active triangles.
    pub fn cycles(&self) -> &[[usize; 3]] {
        &self.cycles
    }

    /// Couplings of edge `e` to the triangles containing it.
    pub fn edge_couplings(&self, e: usize) -> &[EdgeId] {
        &self.edge_couplings[e]
    }

    /// Adds the edges `instance` has beyond the current ones and the
    /// triangles `fresh`, keeping all existing ids.
    pub fn grow(&self, instance: &MulticutInstance, fresh: &[[usize; 3]]) -> Result<Self> {
        let mut slots = self.slots.clone();
        slots.extend((self.num_edges()..instance.num_edges()).map(Slot::Edge));
        let mut cycles = self.cycles.clone();
        for &t in fresh {
            slots.push(Slot::Cycle(cycles.len()));
            cycles.push(t);
        }
        assemble(instance, slots, cycles)
    }
}

fn triangle_edges(instance: &MulticutInstance, t: [usize; 3]) -> Result<[usize; 3]> {
    let [a, b, c] = t;
    if a == b || b == c || a == c {
        return Err(Error::InvalidModel(format!("({a},{b},{c}) is not a triangle")));
    }
    let edge = |u, v| {
        instance
            .edge_index(u, v)
            .ok_or_else(|| Error::InvalidModel(format!("triangle ({a},{b},{c}) lacks edge ({u},{v})")))
    };
    Ok([edge(a, b)?, edge(a, c)?, edge(b, c)?])
}

fn sorted_triple(t: [usize; 3]) -> [usize; 3] {
    let mut t = t;
    t.sort_unstable();
    t
}

fn assemble(instance: &MulticutInstance, slots: Vec<Slot>, cycles: Vec<[usize; 3]>) -> Result<MulticutFactorGraph> {
    let m = instance.num_edges();
    let cycles: Vec<[usize; 3]> = cycles.into_iter().map(sorted_triple).collect();
    let cycle_edges = cycles
        .iter()
        .map(|&t| triangle_edges(instance, t))
        .collect::<Result<Vec<_>>>()?;
    let mut b = FactorGraphBuilder::new();
    let mut edge_factor = vec![usize::MAX; m];
    let mut cycle_factor = vec![usize::MAX; cycles.len()];
    for &slot in &slots {
        match slot {
            Slot::Edge(e) => edge_factor[e] = b.add_factor(Arc::new(BinaryVar), vec![instance.costs[e]]),
            Slot::Cycle(k) => cycle_factor[k] = b.add_factor(Arc::new(TriangleCycle), vec![0.0; 3]),
        }
    }
    let mut edge_couplings = vec![Vec::new(); m];
    for (k, edges) in cycle_edges.iter().enumerate() {
        for (j, &e) in edges.iter().enumerate() {
            let id = b.add_coupling(
                edge_factor[e],
                cycle_factor[k],
                Projection::identity(1),
                Projection::coordinate(3, j),
            );
            edge_couplings[e].push(id);
        }
    }
    Ok(MulticutFactorGraph {
        fg: b.build()?,
        slots,
        edge_factor,
        cycles,
        edge_couplings,
    })
}

pub fn build_multicut_factor_graph(instance: &MulticutInstance, cycles: &[[usize; 3]]) -> Result<MulticutFactorGraph> {
    let slots = (0..instance.num_edges())
        .map(Slot::Edge)
        .chain((0..cycles.len()).map(Slot::Cycle))
        .collect();
    assemble(instance, slots, cycles.to_vec())
}

/// Factor graph labeling induced by a partition.
pub fn multicut_labeling(
    mfg: &MulticutFactorGraph,
    instance: &MulticutInstance,
    partition: &GraphPartition,
) -> Labeling {
    let x = induced_cut(instance, partition);
    let configs = mfg
        .slots
        .iter()
        .map(|&slot| match slot {
            Slot::Edge(e) => x[e] as usize,
            Slot::Cycle(k) => {
                let edges = triangle_edges(instance, mfg.cycles[k]).expect("validated at build");
                let pattern = [x[edges[0]], x[edges[1]], x[edges[2]]];
                TRIANGLE_CONFIGS
                    .iter()
                    .position(|&p| p == pattern)
                    .expect("partitions never cut a single triangle edge")
            }
        })
        .collect();
    Labeling(configs)
}

/// Edge factors gather from all their triangles and hand their cost back
/// in equal shares. The visit order reverses every iteration.
pub fn schedule_multicut(mfg: &MulticutFactorGraph) -> Schedule {
    let visits = (0..mfg.num_edges())
        .filter(|&e| !mfg.edge_couplings[e].is_empty())
        .map(|e| {
            let couplings = &mfg.edge_couplings[e];
            let w = 1.0 / couplings.len() as f64;
            Visit {
                factor: mfg.edge_factor[e],
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
    Schedule::reversing(visits)
}

fn shortest_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        if a == to {
            break;
        }
        for &b in &adj[a] {
            if prev[b] == usize::MAX {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    if prev[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// All triangles of the graph as sorted vertex triples, ascending.
pub fn enumerate_triangles(instance: &MulticutInstance) -> Vec<[usize; 3]> {
    let n = instance.num_vertices();
    let mut nbrs = vec![BTreeSet::new(); n];
    for &(u, v) in &instance.edges {
        nbrs[u].insert(v);
        nbrs[v].insert(u);
    }
    let mut out = Vec::new();
    for a in 0..n {
        for &b in nbrs[a].range(a + 1..) {
            for &c in nbrs[b].range(b + 1..) {
                if nbrs[a].contains(&c) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Guaranteed bound gain of activating a triangle with edge costs `theta`:
/// its best admissible pattern minus the independent edge minima.
pub fn triangle_gain(theta: [f64; 3]) -> f64 {
    cycle_min_oracle(theta).1 - theta.iter().map(|&c| c.min(0.0)).sum::<f64>()
}

/// Gains below this are treated as zero.
pub const SEPARATION_TOL: f64 = 1e-9;

/// Picks up to `budget` inactive triangles to activate, largest gain
/// first, ties broken by vertex triple. `edge_costs` are the current per
/// edge costs of `instance`.
///
/// Candidates are the triangles of the graph scored by [`triangle_gain`],
/// plus, for every repulsive edge whose endpoints are joined by a path of
/// attractive edges, the fan triangulation of that cycle from the first
/// endpoint, scored by the cycle's gain. Chords the selected triangles
/// need are added to `instance` as auxiliary edges.
pub fn separate_triangles(
    instance: &mut MulticutInstance,
    edge_costs: &[f64],
    active: &[[usize; 3]],
    budget: usize,
) -> Vec<[usize; 3]> {
    let active: BTreeSet<[usize; 3]> = active.iter().copied().map(sorted_triple).collect();
    let mut gains: HashMap<[usize; 3], f64> = HashMap::new();
    let mut offer = |t: [usize; 3], g: f64| {
        let t = sorted_triple(t);
        if g > SEPARATION_TOL && !active.contains(&t) {
            let entry = gains.entry(t).or_insert(g);
            *entry = entry.max(g);
        }
    };
    for t in enumerate_triangles(instance) {
        let e = triangle_edges(instance, t).expect("enumerated triangle");
        offer(t, triangle_gain([edge_costs[e[0]], edge_costs[e[1]], edge_costs[e[2]]]));
    }
    let mut attractive = vec![Vec::new(); instance.num_vertices()];
    for (&(u, v), &c) in instance.edges.iter().zip(edge_costs) {
        if c > SEPARATION_TOL {
            attractive[u].push(v);
            attractive[v].push(u);
        }
    }
    for (&(u, v), &c) in instance.edges.iter().zip(edge_costs) {
        if c >= -SEPARATION_TOL {
            continue;
        }
        let Some(path) = shortest_path(&attractive, u, v) else {
            continue;
        };
        let weakest = path
            .windows(2)
            .map(|w| edge_costs[instance.edge_index(w[0], w[1]).expect("path edge")])
            .fold(-c, f64::min);
        for w in path[1..].windows(2) {
            offer([u, w[0], w[1]], weakest);
        }
    }
    let mut scored: Vec<([usize; 3], f64)> = gains.into_iter().collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(budget);
    let chosen: Vec<[usize; 3]> = scored.into_iter().map(|(t, _)| t).collect();
    for &[a, b, c] in &chosen {
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if instance.edge_index(x, y).is_none() {
                instance.add_auxiliary_edge(x, y).expect("distinct vertices");
            }
        }
    }
    chosen
}

/// Edge costs after every edge has received from all its triangles,
/// computed on a copy of `state`.
pub fn received_edge_costs(mfg: &MulticutFactorGraph, state: &Reparametrization) -> Result<Vec<f64>> {
    let mut s = state.clone();
    for e in 0..mfg.num_edges() {
        receive_messages(&mfg.fg, &mut s, mfg.edge_factor[e], &mfg.edge_couplings[e])?;
    }
    Ok((0..mfg.num_edges()).map(|e| s.cost(mfg.edge_factor[e])[0]).collect())
}

/// Maximum number of improvement passes in [`round_multicut_kl`].
pub const KL_MAX_PASSES: usize = 100;

/// Local search from the components of the positive-cost edges: greedy
/// component merges, then single vertex moves into adjacent components,
/// each accepted only if it strictly lowers the cut cost.
pub fn round_multicut_kl(instance: &MulticutInstance, costs: &[f64]) -> GraphPartition {
    let n = instance.num_vertices();
    let adj = instance.adjacency();
    let mut label = initial_components(instance, costs);
    for _ in 0..KL_MAX_PASSES {
        let merged = merge_components(instance, costs, &mut label);
        let moved = move_vertices(&adj, costs, &mut label);
        if !merged && !moved {
            break;
        }
    }
    debug_assert_eq!(label.len(), n);
    GraphPartition::from_labels(&label)
}

fn initial_components(instance: &MulticutInstance, costs: &[f64]) -> Vec<usize> {
    let n = instance.num_vertices();
    let mut label: Vec<usize> = (0..n).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for (&(u, v), &c) in instance.edges.iter().zip(costs) {
            if c > 0.0 && label[u] != label[v] {
                let m = label[u].min(label[v]);
                label[u] = m;
                label[v] = m;
                changed = true;
            }
        }
    }
    label
}

fn merge_components(instance: &MulticutInstance, costs: &[f64], label: &mut [usize]) -> bool {
    let mut any = false;
    loop {
        let mut between: HashMap<(usize, usize), f64> = HashMap::new();
        for (&(u, v), &c) in instance.edges.iter().zip(costs) {
            let (a, b) = (label[u], label[v]);
            if a != b {
                *between.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
            }
        }
        let best = between
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
        let Some(((a, b), _)) = best else {
            return any;
        };
        for l in label.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
        any = true;
    }
}

fn move_vertices(adj: &[Vec<(usize, usize)>], costs: &[f64], label: &mut [usize]) -> bool {
    let mut any = false;
    for v in 0..label.len() {
        let own = label[v];
        let mut towards: HashMap<usize, f64> = HashMap::new();
        let mut inside = 0.0;
        for &(w, e) in &adj[v] {
            if label[w] == own {
                inside += costs[e];
            } else {
                *towards.entry(label[w]).or_insert(0.0) += costs[e];
            }
        }
        // moving v to component d cuts its edges into `own` and joins those into d
        let best = towards
            .into_iter()
            .map(|(d, w)| (inside - w, d))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((delta, d)) = best {
            if delta < 0.0 {
                label[v] = d;
                any = true;
            }
        }
    }
    any
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MulticutConfig {
    /// Total iteration budget and per-round convergence test.
    pub stop: StopRule,
    /// Iterations between separation rounds.
    pub tighten_interval: usize,
    /// Triangles added per round; `None` means the number of edges.
    pub separation_budget: Option<usize>,
}

impl Default for MulticutConfig {
    fn default() -> Self {
        Self {
            stop: StopRule::default(),
            tighten_interval: 20,
            separation_budget: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MulticutSolution {
    pub dual: f64,
    pub primal: f64,
    pub partition: GraphPartition,
    /// Triangles active at the end.
    pub cycles: Vec<[usize; 3]>,
    /// The instance with the auxiliary chords added during separation.
    pub completed: MulticutInstance,
    pub trace: Vec<ConvergenceRecord>,
    pub iterations: usize,
}

impl MulticutSolution {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// Cutting-plane message passing: starts without triangles, alternates
/// blocks of iterations with rounding and triangle separation, and stops
/// once the gap closes, nothing is left to separate at convergence, or
/// the iteration budget runs out.
pub fn solve_multicut(instance: &MulticutInstance, config: &MulticutConfig) -> Result<MulticutSolution> {
    let start = Instant::now();
    let elapsed = || start.elapsed().as_millis() as u64;
    let mut completed = instance.clone();
    let budget = config.separation_budget.unwrap_or(instance.num_edges());
    let mut mfg = build_multicut_factor_graph(&completed, &[])?;
    let mut state = Reparametrization::new(&mfg.fg);
    let mut schedule = schedule_multicut(&mfg);
    let mut bound = state.lower_bound(&mfg.fg);
    let mut monitor = ConvergenceMonitor::new(config.stop, bound);
    let mut trace = vec![ConvergenceRecord {
        iteration: 0,
        elapsed_ms: 0,
        dual_bound: bound,
        best_primal: None,
        event: Event::Iterate,
    }];
    let mut best = GraphPartition::single(completed.num_vertices());
    let mut primal = f64::INFINITY;
    let mut iterations = 0;

    loop {
        let mut ran = 0;
        while ran < config.tighten_interval.max(1) && iterations < config.stop.max_iters {
            bound = run_iteration(&mfg.fg, &mut state, &mut schedule)?;
            iterations += 1;
            ran += 1;
            monitor.observe(bound);
            trace.push(ConvergenceRecord {
                iteration: iterations,
                elapsed_ms: elapsed(),
                dual_bound: bound,
                best_primal: primal.is_finite().then_some(primal),
                event: Event::Iterate,
            });
            if monitor.converged() {
                break;
            }
        }

        let costs = received_edge_costs(&mfg, &state)?;
        let partition = round_multicut_kl(&completed, &costs);
        let value = multicut_cost(&completed, &partition);
        if value < primal {
            primal = value;
            best = partition;
        }
        trace.push(ConvergenceRecord {
            iteration: iterations,
            elapsed_ms: elapsed(),
            dual_bound: bound,
            best_primal: Some(primal),
            event: Event::Round,
        });

        if primal - bound <= SEPARATION_TOL || iterations >= config.stop.max_iters {
            break;
        }
        let fresh = separate_triangles(&mut completed, &costs, mfg.cycles(), budget);
        if fresh.is_empty() {
            if monitor.converged() {
                break;
            }
            continue;
        }
        mfg = mfg.grow(&completed, &fresh)?;
        state.extend_to(&mfg.fg);
        schedule = schedule_multicut(&mfg);
        bound = state.lower_bound(&mfg.fg);
        monitor.reset(bound);
        trace.push(ConvergenceRecord {
            iteration: iterations,
            elapsed_ms: elapsed(),
            dual_bound: bound,
            best_primal: Some(primal),
            event: Event::Tighten,
        });
    }

    Ok(MulticutSolution {
        dual: bound,
        primal,
        partition: best,
        cycles: mfg.cycles().to_vec(),
        completed,
        trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{enumerate_minimizers, maximize_message, run_to_convergence};
    use crate::graph::{check_coupling_consistency, labeling_cost, DualVariables};

    pub(crate) fn triangle(costs: [f64; 3]) -> MulticutInstance {
        let mut m = MulticutInstance::new(3);
        m.add_edge(0, 1, costs[0]).unwrap();
        m.add_edge(0, 2, costs[1]).unwrap();
        m.add_edge(1, 2, costs[2]).unwrap();
        m
    }

    fn k4(cost: f64) -> MulticutInstance {
        let mut m = MulticutInstance::new(4);
        for u in 0..4 {
            for v in u + 1..4 {
                m.add_edge(u, v, cost).unwrap();
            }
        }
        m
    }

    #[test]
    fn instance_validation() {
        let mut m = MulticutInstance::new(2);
        assert!(m.add_edge(0, 0, 1.0).is_err());
        m.add_edge(0, 1, 1.0).unwrap();
        assert!(m.add_edge(1, 0, 2.0).is_err());
    }

    #[test]
    fn cycle_oracle_examples() {
        assert_eq!(cycle_min_oracle([-1.0, -1.0, 2.0]), ([1, 1, 0], -2.0));
        assert_eq!(cycle_min_oracle([-1.0, 2.0, 2.0]), ([0, 0, 0], 0.0));
        assert_eq!(cycle_min_oracle([0.0, 0.0, 0.0]), ([0, 0, 0], 0.0));
    }

    #[test]
    fn triangle_domain_excludes_single_cuts() {
        for config in TRIANGLE_CONFIGS {
            assert_ne!(config.iter().map(|&c| c as u32).sum::<u32>(), 1);
        }
    }

    #[test]
    fn factor_graph_counts() {
        let mfg = build_multicut_factor_graph(&triangle([1.0; 3]), &[[0, 1, 2]]).unwrap();
        assert_eq!((mfg.fg.num_factors(), mfg.fg.num_edges()), (4, 3));
        let m = k4(1.0);
        let all = enumerate_triangles(&m);
        assert_eq!(all.len(), 4);
        let mfg = build_multicut_factor_graph(&m, &all).unwrap();
        assert_eq!((mfg.fg.num_factors(), mfg.fg.num_edges()), (10, 12));
        assert!(build_multicut_factor_graph(&m, &[[0, 1, 1]]).is_err());
        let mut path = MulticutInstance::new(3);
        path.add_edge(0, 1, 1.0).unwrap();
        path.add_edge(1, 2, 1.0).unwrap();
        assert!(build_multicut_factor_graph(&path, &[[0, 1, 2]]).is_err());
    }

    #[test]
    fn edge_relaxation_bound() {
        let m = triangle([-1.0, 2.0, -0.5]);
        let mfg = build_multicut_factor_graph(&m, &[]).unwrap();
        let state = Reparametrization::new(&mfg.fg);
        assert_eq!(state.lower_bound(&mfg.fg), -1.5);
    }

    #[test]
    fn all_cost_in_cycle_gives_bound() {
        let m = triangle([-1.0, -1.0, 2.0]);
        let mfg = build_multicut_factor_graph(&m, &[[0, 1, 2]]).unwrap();
        let mut state = Reparametrization::new(&mfg.fg);
        for e in 0..3 {
            let update = maximize_message(&mfg.fg, &state, e, &[e], None).unwrap();
            crate::engine::apply_update(&mfg.fg, &mut state, &update, 1.0).unwrap();
        }
        assert_eq!(state.cost(3), &[-1.0, -1.0, 2.0]);
        assert_eq!(state.lower_bound(&mfg.fg), -2.0);
        assert_eq!(enumerate_minimizers(&mfg.fg, &state, 3), vec![3]);
    }

    #[test]
    fn one_iteration_closes_triangle() {
        let m = triangle([-1.0, 2.0, 2.0]);
        let mfg = build_multicut_factor_graph(&m, &[[0, 1, 2]]).unwrap();
        let mut state = Reparametrization::new(&mfg.fg);
        let mut schedule = schedule_multicut(&mfg);
        assert_eq!(state.lower_bound(&mfg.fg), -1.0);
        let d = run_iteration(&mfg.fg, &mut state, &mut schedule).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn schedule_weights() {
        let m = k4(1.0);
        let mfg = build_multicut_factor_graph(&m, &enumerate_triangles(&m)).unwrap();
        let s = schedule_multicut(&mfg);
        // every K4 edge lies in two triangles
        assert!(s.forward().iter().all(|v| v.send.iter().all(|b| b.weight == 0.5)));
        let single = build_multicut_factor_graph(&triangle([1.0; 3]), &[[0, 1, 2]]).unwrap();
        let s = schedule_multicut(&single);
        assert!(s.forward().iter().all(|v| v.send[0].weight == 1.0));
        assert_eq!(s.backward().unwrap()[0].factor, 2);
    }

    #[test]
    fn separation_examples() {
        let mut m = triangle([0.0; 3]);
        assert_eq!(separate_triangles(&mut m, &[-1.0, 2.0, 2.0], &[], 5), vec![[0, 1, 2]]);
        assert!(separate_triangles(&mut m, &[-1.0, -1.0, 2.0], &[], 5).is_empty());
        assert!(separate_triangles(&mut m, &[1.0, 1.0, 2.0], &[], 5).is_empty());
        assert!(separate_triangles(&mut m, &[-1.0, 2.0, 2.0], &[[0, 1, 2]], 5).is_empty());
        assert!(separate_triangles(&mut m, &[-1.0, 2.0, 2.0], &[], 0).is_empty());
        assert_eq!(triangle_gain([-1.0, 2.0, 2.0]), 1.0);
    }

    #[test]
    fn kl_examples() {
        let m = triangle([-1.0, -1.0, 2.0]);
        let p = round_multicut_kl(&m, m.costs());
        assert_eq!(p.labels(), &[0, 1, 1]);
        assert_eq!(multicut_cost(&m, &p), -2.0);

        let m = k4(1.0);
        let p = round_multicut_kl(&m, m.costs());
        assert_eq!(p.num_components(), 1);
        assert_eq!(multicut_cost(&m, &p), 0.0);

        let m = k4(-1.0);
        let p = round_multicut_kl(&m, m.costs());
        assert_eq!(p.num_components(), 4);
        assert_eq!(multicut_cost(&m, &p), -6.0);
    }

    #[test]
    fn cut_feasibility() {
        let m = triangle([1.0; 3]);
        assert!(cut_is_feasible(&m, &[0, 1, 1]));
        assert!(!cut_is_feasible(&m, &[1, 0, 0]));
        let p = GraphPartition::from_labels(&[7, 3, 3]);
        assert_eq!(induced_cut(&m, &p), vec![1, 1, 0]);
        assert!(cut_is_feasible(&m, &induced_cut(&m, &p)));
        assert_eq!(multicut_cost(&m, &GraphPartition::single(3)), 0.0);
    }

    #[test]
    fn separation_adds_chords() {
        // square 0-1-2-3 with one repulsive side
        let mut m = MulticutInstance::new(4);
        m.add_edge(0, 1, -1.0).unwrap();
        m.add_edge(1, 2, 1.0).unwrap();
        m.add_edge(2, 3, 1.0).unwrap();
        m.add_edge(0, 3, 1.0).unwrap();
        let mut c = m.clone();
        let costs = c.costs().to_vec();
        let fresh = separate_triangles(&mut c, &costs, &[], 10);
        // path 0-3-2-1 fans out from 0 through the chord (0,2)
        assert_eq!(fresh, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(c.num_edges(), 5);
        assert!(c.is_auxiliary(4));
        assert_eq!(c.costs()[4], 0.0);
        let out = solve_multicut(&m, &MulticutConfig::default()).unwrap();
        assert!((out.dual - 0.0).abs() < 1e-9);
        assert_eq!(out.primal, 0.0);
    }

    #[test]
    fn solve_worked_triangles() {
        let out = solve_multicut(&triangle([-1.0, -1.0, 2.0]), &MulticutConfig::default()).unwrap();
        assert_eq!((out.dual, out.primal), (-2.0, -2.0));
        assert!(out.cycles.is_empty());

        let out = solve_multicut(&triangle([-1.0, 2.0, 2.0]), &MulticutConfig::default()).unwrap();
        assert_eq!((out.dual, out.primal), (0.0, 0.0));
        assert_eq!(out.cycles, vec![[0, 1, 2]]);
        assert!(out.trace.iter().any(|r| r.event == Event::Tighten));

        let out = solve_multicut(&k4(1.0), &MulticutConfig::default()).unwrap();
        assert_eq!((out.dual, out.primal), (0.0, 0.0));
        assert!(out.cycles.is_empty());

        let out = solve_multicut(&MulticutInstance::new(0), &MulticutConfig::default()).unwrap();
        assert_eq!((out.dual, out.primal), (0.0, 0.0));
    }

    #[test]
    fn single_triangle_converges_to_optimum() {
        let m = triangle([0.3, -0.7, -0.2]);
        let mfg = build_multicut_factor_graph(&m, &[[0, 1, 2]]).unwrap();
        let mut state = Reparametrization::new(&mfg.fg);
        let mut schedule = schedule_multicut(&mfg);
        let trace = run_to_convergence(&mfg.fg, &mut state, &mut schedule, StopRule::default()).unwrap();
        // best partition {0,1},{2} cuts the two negative edges
        assert!((trace.last().unwrap() - (-0.9)).abs() < 1e-9);
    }

    #[test]
    fn partition_labeling_is_consistent() {
        let m = triangle([-1.0, -1.0, 2.0]);
        let mfg = build_multicut_factor_graph(&m, &[[0, 1, 2]]).unwrap();
        let p = GraphPartition::from_labels(&[0, 1, 1]);
        let x = multicut_labeling(&mfg, &m, &p);
        assert!(check_coupling_consistency(&mfg.fg, &x).unwrap().consistent);
        let phi = DualVariables::zeros(&mfg.fg);
        assert_eq!(labeling_cost(&mfg.fg, &phi, &x).unwrap(), -2.0);
    }
}
