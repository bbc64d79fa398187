//! Random instances for tests and benchmarks. Costs are uniform in
//! `[-1, 1]` unless noted.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matching::MatchingModel;
use crate::mrf::PairwiseModel;
use crate::multicut::MulticutInstance;

fn costs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Chain `0 - 1 - ... - n-1` with `labels` labels per node.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize, labels: usize) -> PairwiseModel {
    let unary = (0..n).map(|_| costs(rng, labels)).collect();
    let mut m = PairwiseModel::new(unary).expect("labels > 0");
    for u in 1..n {
        let t = costs(rng, labels * labels);
        m.add_edge(u - 1, u, t).expect("fresh chain edge");
    }
    m
}

/// Between 1 and `max_nodes` nodes with 1 to `max_labels` labels each; each
/// pair of nodes is joined with probability `density`.
pub fn random_crf<R: Rng>(rng: &mut R, max_nodes: usize, max_labels: usize, density: f64) -> PairwiseModel {
    let n = rng.gen_range(1..=max_nodes);
    let unary = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_labels);
            costs(rng, k)
        })
        .collect();
    let mut m = PairwiseModel::new(unary).expect("labels > 0");
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                let t = costs(rng, m.num_labels(u) * m.num_labels(v));
                m.add_edge(u, v, t).expect("fresh edge");
            }
        }
    }
    m
}

/// Between 1 and `max_nodes` nodes over a universe of up to `max_labels`
/// labels, at least as many as nodes when possible; each node draws a
/// non-empty random candidate subset, so some instances are infeasible.
pub fn random_matching<R: Rng>(rng: &mut R, max_nodes: usize, max_labels: usize, density: f64) -> MatchingModel {
    let n = rng.gen_range(1..=max_nodes);
    let universe = rng.gen_range(n.min(max_labels)..=max_labels);
    let mut candidates = Vec::with_capacity(n);
    let mut unary = Vec::with_capacity(n);
    for _ in 0..n {
        let mut labels: Vec<usize> = (0..universe).collect();
        labels.shuffle(rng);
        labels.truncate(rng.gen_range(1..=universe));
        labels.sort_unstable();
        unary.push(costs(rng, labels.len()));
        candidates.push(labels);
    }
    let mut m = MatchingModel::new(universe, candidates, unary).expect("valid candidates");
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                let t = costs(rng, m.candidates(u).len() * m.candidates(v).len());
                m.add_edge(u, v, t).expect("fresh edge");
            }
        }
    }
    m
}

/// Between 2 and `max_vertices` vertices on a path backbone (so that no
/// vertex is isolated) plus random chords with probability `density`.
pub fn random_multicut<R: Rng>(rng: &mut R, max_vertices: usize, density: f64) -> MulticutInstance {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let mut m = MulticutInstance::new(n);
    for u in 1..n {
        m.add_edge(u - 1, u, rng.gen_range(-1.0..=1.0))
            .expect("fresh path edge");
    }
    for u in 0..n {
        for v in u + 2..n {
            if rng.gen_bool(density) {
                m.add_edge(u, v, rng.gen_range(-1.0..=1.0)).expect("fresh chord");
            }
        }
    }
    m
}

/// Fisher-Yates permutation of `0..n`.
pub fn random_order<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}
