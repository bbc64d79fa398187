//! Factor graphs of coupled binary-vector subproblems.
//!
//! A factor owns a finite set of 0/1 configurations (its domain) and a cost
//! vector; a coupling edge ties two factors together through 0/1 selection
//! matrices that must map every configuration to a 0/1 vector. Dual
//! variables live on coupling edges and shift cost between the two
//! endpoints.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type FactorId = usize;
pub type EdgeId = usize;

/// Domain of a factor: an enumerable list of 0/1 vectors of length `dim`.
///
/// Configurations are addressed by index in a fixed canonical order; the
/// order doubles as the tie-break rule for minimization. A configuration is
/// described by its support, the sorted list of coordinates equal to one.
pub trait FactorDomain: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn num_configs(&self) -> usize;

    fn support(&self, config: usize) -> &[usize];

    fn config_cost(&self, cost: &[f64], config: usize) -> f64 {
        self.support(config).iter().map(|&c| cost[c]).sum()
    }

    /// First configuration (in canonical order) attaining the minimum cost.
    fn minimize(&self, cost: &[f64]) -> (usize, f64) {
        let mut best = (0, self.config_cost(cost, 0));
        for config in 1..self.num_configs() {
            let value = self.config_cost(cost, config);
            if value < best.1 {
                best = (config, value);
            }
        }
        best
    }

    /// Closed-form admissible message maximizer.
    ///
    /// Returns one delta vector per target projection, or `None` when this
    /// domain has no closed form for the given target shapes.
    fn closed_form_message(&self, _cost: &[f64], _anchor: usize, _targets: &[&Projection]) -> Option<Vec<Vec<f64>>> {
        None
    }
}

/// Domain given by an explicit list of configurations.
#[derive(Debug, Clone)]
pub struct ExplicitDomain {
    dim: usize,
    supports: Vec<Vec<usize>>,
}

impl ExplicitDomain {
    pub fn new(dim: usize, configs: &[Vec<u8>]) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut seen = HashSet::new();
        let mut supports = Vec::with_capacity(configs.len());
        for (idx, config) in configs.iter().enumerate() {
            if config.len() != dim {
                return Err(Error::DimensionMismatch {
                    factor: idx,
                    expected: dim,
                    found: config.len(),
                });
            }
            let mut support = Vec::new();
            for (coordinate, &value) in config.iter().enumerate() {
                match value {
                    0 => {}
                    1 => support.push(coordinate),
                    _ => return Err(Error::NonBinaryConfig { coordinate, value }),
                }
            }
            if !seen.insert(support.clone()) {
                return Err(Error::DuplicateConfig(idx));
            }
            supports.push(support);
        }
        Ok(Self { dim, supports })
    }
}

impl FactorDomain for ExplicitDomain {
    fn name(&self) -> &'static str {
        "explicit"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn num_configs(&self) -> usize {
        self.supports.len()
    }

    fn support(&self, config: usize) -> &[usize] {
        &self.supports[config]
    }
}

/// Which axis of a row-major `rows x cols` table a marginal projection keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableAxis {
    Rows,
    Cols,
}

/// Structural hint recorded when a projection is built, so domains can
/// recognize the selections they have closed forms for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionShape {
    Identity,
    Coordinate(usize),
    Marginal { rows: usize, cols: usize, axis: TableAxis },
    General,
}

/// A 0/1 matrix with `rows` rows (message dimension K) and `dim` columns,
/// stored as a list of (row, column) positions holding a one.
#[derive(Debug, Clone)]
pub struct Projection {
    rows: usize,
    dim: usize,
    entries: Vec<(usize, usize)>,
    col_rows: Vec<Vec<usize>>,
    shape: ProjectionShape,
}

impl Projection {
    pub fn new(rows: usize, dim: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        for &(row, col) in &entries {
            if row >= rows || col >= dim {
                return Err(Error::ProjectionRange {
                    row,
                    col,
                    rows,
                    cols: dim,
                });
            }
        }
        entries.sort_unstable();
        entries.dedup();
        let shape =
            if rows == dim && entries.len() == dim && entries.iter().enumerate().all(|(k, &(r, c))| r == k && c == k) {
                ProjectionShape::Identity
            } else if rows == 1 && entries.len() == 1 {
                ProjectionShape::Coordinate(entries[0].1)
            } else {
                ProjectionShape::General
            };
        Ok(Self::with_shape(rows, dim, entries, shape))
    }

    /// Builds a projection from a dense 0/1 matrix given row by row.
    pub fn from_dense(dim: usize, matrix: &[Vec<u8>]) -> Result<Self> {
        let mut entries = Vec::new();
        for (row, values) in matrix.iter().enumerate() {
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    factor: row,
                    expected: dim,
                    found: values.len(),
                });
            }
            for (col, &value) in values.iter().enumerate() {
                match value {
                    0 => {}
                    1 => entries.push((row, col)),
                    _ => return Err(Error::NonBinaryConfig { coordinate: col, value }),
                }
            }
        }
        Self::new(matrix.len(), dim, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self::with_shape(n, n, (0..n).map(|k| (k, k)).collect(), ProjectionShape::Identity)
    }

    /// Single-row selection of coordinate `coordinate` out of `dim`.
    pub fn coordinate(dim: usize, coordinate: usize) -> Self {
        assert!(coordinate < dim, "coordinate out of range");
        Self::with_shape(1, dim, vec![(0, coordinate)], ProjectionShape::Coordinate(coordinate))
    }

    /// Marginalization of a row-major `rows x cols` table onto one axis.
    pub fn table_marginal(rows: usize, cols: usize, axis: TableAxis) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for a in 0..rows {
            for b in 0..cols {
                let row = match axis {
                    TableAxis::Rows => a,
                    TableAxis::Cols => b,
                };
                entries.push((row, a * cols + b));
            }
        }
        entries.sort_unstable();
        let k = match axis {
            TableAxis::Rows => rows,
            TableAxis::Cols => cols,
        };
        Self::with_shape(k, rows * cols, entries, ProjectionShape::Marginal { rows, cols, axis })
    }

    fn with_shape(rows: usize, dim: usize, entries: Vec<(usize, usize)>, shape: ProjectionShape) -> Self {
        let mut col_rows = vec![Vec::new(); dim];
        for &(row, col) in &entries {
            col_rows[col].push(row);
        }
        Self {
            rows,
            dim,
            entries,
            col_rows,
            shape,
        }
    }

    /// Message dimension K.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> ProjectionShape {
        self.shape
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Rows having a one in column `col`.
    pub fn rows_of(&self, col: usize) -> &[usize] {
        &self.col_rows[col]
    }

    /// Row counts of `A x` for the configuration with the given support.
    pub fn apply(&self, support: &[usize]) -> Vec<usize> {
        let mut out = vec![0; self.rows];
        for &col in support {
            for &row in &self.col_rows[col] {
                out[row] += 1;
            }
        }
        out
    }

    /// Binary image `A x`; only meaningful once the projection condition holds.
    pub fn image(&self, support: &[usize]) -> Vec<u8> {
        self.apply(support).into_iter().map(|c| c as u8).collect()
    }

    /// `target += scale * A^T message`.
    pub fn add_transpose(&self, message: &[f64], scale: f64, target: &mut [f64]) {
        for &(row, col) in &self.entries {
            target[col] += scale * message[row];
        }
    }
}

#[derive(Debug, Clone)]
pub struct Factor {
    pub domain: Arc<dyn FactorDomain>,
    pub cost: Vec<f64>,
}

/// A coupling constraint `A_(a,b) x_a = A_(b,a) x_b` with `a < b`.
///
/// The dual vector of the edge is stored once, for direction `a -> b`; the
/// reverse direction reads its negation.
#[derive(Debug, Clone)]
pub struct CouplingEdge {
    a: FactorId,
    b: FactorId,
    proj_a: Projection,
    proj_b: Projection,
}

impl CouplingEdge {
    pub fn endpoints(&self) -> (FactorId, FactorId) {
        (self.a, self.b)
    }

    pub fn rows(&self) -> usize {
        self.proj_a.rows()
    }

    pub fn touches(&self, factor: FactorId) -> bool {
        self.a == factor || self.b == factor
    }

    pub fn other(&self, factor: FactorId) -> FactorId {
        if factor == self.a {
            self.b
        } else {
            debug_assert_eq!(factor, self.b);
            self.a
        }
    }

    pub fn projection(&self, factor: FactorId) -> &Projection {
        if factor == self.a {
            &self.proj_a
        } else {
            debug_assert_eq!(factor, self.b);
            &self.proj_b
        }
    }

    /// +1 if `factor` is the stored direction's source, -1 otherwise.
    pub fn sign(&self, factor: FactorId) -> f64 {
        if factor == self.a {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorGraph {
    factors: Vec<Factor>,
    edges: Vec<CouplingEdge>,
    incident: Vec<Vec<EdgeId>>,
}

impl FactorGraph {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn factor(&self, id: FactorId) -> &Factor {
        &self.factors[id]
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn edge(&self, id: EdgeId) -> &CouplingEdge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[CouplingEdge] {
        &self.edges
    }

    /// Coupling edges incident to `factor`, in insertion order.
    pub fn incident(&self, factor: FactorId) -> &[EdgeId] {
        &self.incident[factor]
    }

    /// The coupling edge between two factors, if any.
    pub fn edge_between(&self, i: FactorId, j: FactorId) -> Option<EdgeId> {
        self.incident
            .get(i)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].other(i) == j)
    }

    pub(crate) fn check_factor(&self, id: FactorId) -> Result<()> {
        if id < self.factors.len() {
            Ok(())
        } else {
            Err(Error::UnknownFactor(id))
        }
    }

    pub(crate) fn check_incident(&self, factor: FactorId, edge: EdgeId) -> Result<()> {
        let e = self.edges.get(edge).ok_or(Error::UnknownEdge(edge))?;
        if e.touches(factor) {
            Ok(())
        } else {
            Err(Error::NotIncident { factor, edge })
        }
    }
}

struct PendingCoupling {
    i: FactorId,
    j: FactorId,
    proj_i: Projection,
    proj_j: Projection,
}

/// Collects factors and couplings; [`build`](Self::build) validates them.
#[derive(Default)]
pub struct FactorGraphBuilder {
    factors: Vec<Factor>,
    couplings: Vec<PendingCoupling>,
}

impl FactorGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_factor(&mut self, domain: Arc<dyn FactorDomain>, cost: Vec<f64>) -> FactorId {
        self.factors.push(Factor { domain, cost });
        self.factors.len() - 1
    }

    /// Couples `i` and `j` via `proj_i x_i = proj_j x_j`. Returns the edge
    /// id the coupling will have in the built graph.
    pub fn add_coupling(&mut self, i: FactorId, j: FactorId, proj_i: Projection, proj_j: Projection) -> EdgeId {
        self.couplings.push(PendingCoupling { i, j, proj_i, proj_j });
        self.couplings.len() - 1
    }

    pub fn build(self) -> Result<FactorGraph> {
        for (id, factor) in self.factors.iter().enumerate() {
            let dim = factor.domain.dim();
            if factor.cost.len() != dim {
                return Err(Error::DimensionMismatch {
                    factor: id,
                    expected: dim,
                    found: factor.cost.len(),
                });
            }
            if factor.domain.num_configs() == 0 {
                return Err(Error::EmptyDomain);
            }
        }
        let n = self.factors.len();
        let mut incident = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(self.couplings.len());
        for c in self.couplings {
            if c.i >= n {
                return Err(Error::UnknownFactor(c.i));
            }
            if c.j >= n {
                return Err(Error::UnknownFactor(c.j));
            }
            if c.i == c.j {
                return Err(Error::SelfCoupling(c.i));
            }
            let key = (c.i.min(c.j), c.i.max(c.j));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            if c.proj_i.rows() != c.proj_j.rows() {
                return Err(Error::MessageDimension {
                    i: c.i,
                    j: c.j,
                    ki: c.proj_i.rows(),
                    kj: c.proj_j.rows(),
                });
            }
            for (f, p) in [(c.i, &c.proj_i), (c.j, &c.proj_j)] {
                let domain = &self.factors[f].domain;
                if p.dim() != domain.dim() {
                    return Err(Error::DimensionMismatch {
                        factor: f,
                        expected: domain.dim(),
                        found: p.dim(),
                    });
                }
                check_projection_condition(domain.as_ref(), p, c.i, c.j)?;
            }
            let edge = if c.i < c.j {
                CouplingEdge {
                    a: c.i,
                    b: c.j,
                    proj_a: c.proj_i,
                    proj_b: c.proj_j,
                }
            } else {
                CouplingEdge {
                    a: c.j,
                    b: c.i,
                    proj_a: c.proj_j,
                    proj_b: c.proj_i,
                }
            };
            let id = edges.len();
            incident[edge.a].push(id);
            incident[edge.b].push(id);
            edges.push(edge);
        }
        Ok(FactorGraph {
            factors: self.factors,
            edges,
            incident,
        })
    }
}

fn check_projection_condition(domain: &dyn FactorDomain, proj: &Projection, i: FactorId, j: FactorId) -> Result<()> {
    for config in 0..domain.num_configs() {
        let counts = proj.apply(domain.support(config));
        if let Some((row, &count)) = counts.iter().enumerate().find(|(_, &c)| c > 1) {
            return Err(Error::ProjectionCondition {
                i,
                j,
                config,
                row,
                count,
            });
        }
    }
    Ok(())
}

/// One real vector per coupling edge, stored for the direction from the
/// lower factor id to the higher one.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    values: Vec<Vec<f64>>,
}

impl DualVariables {
    pub fn zeros(fg: &FactorGraph) -> Self {
        Self {
            values: fg.edges().iter().map(|e| vec![0.0; e.rows()]).collect(),
        }
    }

    pub fn num_edges(&self) -> usize {
        self.values.len()
    }

    /// The stored copy `phi_(a,b)` with `a < b`.
    pub fn stored(&self, edge: EdgeId) -> &[f64] {
        &self.values[edge]
    }

    pub fn stored_mut(&mut self, edge: EdgeId) -> &mut [f64] {
        &mut self.values[edge]
    }

    /// `phi_(from, other)` for the given edge.
    pub fn get(&self, fg: &FactorGraph, edge: EdgeId, from: FactorId) -> Vec<f64> {
        let sign = fg.edge(edge).sign(from);
        self.values[edge].iter().map(|&v| sign * v).collect()
    }

    /// `phi_(from, other) += weight * delta`.
    pub fn add(&mut self, fg: &FactorGraph, edge: EdgeId, from: FactorId, delta: &[f64], weight: f64) {
        let scale = weight * fg.edge(edge).sign(from);
        for (v, d) in self.values[edge].iter_mut().zip(delta) {
            *v += scale * d;
        }
    }

    /// Resizes to `fg`, keeping existing vectors for the leading edges.
    pub fn extend_to(&mut self, fg: &FactorGraph) {
        for e in self.values.len()..fg.num_edges() {
            self.values.push(vec![0.0; fg.edge(e).rows()]);
        }
    }
}

/// One configuration index per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn configs(&self) -> &[usize] {
        &self.0
    }
}

/// `theta_i + sum_j A_(i,j)^T phi_(i,j)`.
pub fn reparametrized_cost(fg: &FactorGraph, phi: &DualVariables, i: FactorId) -> Vec<f64> {
    let mut cost = fg.factor(i).cost.clone();
    for &e in fg.incident(i) {
        let edge = fg.edge(e);
        edge.projection(i).add_transpose(phi.stored(e), edge.sign(i), &mut cost);
    }
    cost
}

/// Sum over factors of the minimal reparametrized configuration cost.
pub fn dual_lower_bound(fg: &FactorGraph, phi: &DualVariables) -> f64 {
    (0..fg.num_factors())
        .map(|i| {
            let cost = reparametrized_cost(fg, phi, i);
            fg.factor(i).domain.minimize(&cost).1
        })
        .sum()
}

fn check_labeling(fg: &FactorGraph, x: &Labeling) -> Result<()> {
    if x.0.len() != fg.num_factors() {
        return Err(Error::LabelingLength {
            expected: fg.num_factors(),
            found: x.0.len(),
        });
    }
    for (factor, &config) in x.0.iter().enumerate() {
        if config >= fg.factor(factor).domain.num_configs() {
            return Err(Error::ConfigOutOfDomain { factor, config });
        }
    }
    Ok(())
}

/// `sum_i <theta^phi_i, x_i>`; independent of `phi` for coupling-consistent `x`.
pub fn labeling_cost(fg: &FactorGraph, phi: &DualVariables, x: &Labeling) -> Result<f64> {
    check_labeling(fg, x)?;
    Ok(x.0
        .iter()
        .enumerate()
        .map(|(i, &config)| {
            let cost = reparametrized_cost(fg, phi, i);
            fg.factor(i).domain.config_cost(&cost, config)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingReport {
    pub consistent: bool,
    pub violated: Vec<EdgeId>,
}

/// Compares `A_(i,j) x_i` with `A_(j,i) x_j` on every coupling edge.
pub fn check_coupling_consistency(fg: &FactorGraph, x: &Labeling) -> Result<CouplingReport> {
    check_labeling(fg, x)?;
    let violated: Vec<EdgeId> = fg
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, edge)| !edge_agrees(fg, edge, x.0[edge.a], x.0[edge.b]))
        .map(|(e, _)| e)
        .collect();
    Ok(CouplingReport {
        consistent: violated.is_empty(),
        violated,
    })
}

pub(crate) fn edge_agrees(fg: &FactorGraph, edge: &CouplingEdge, xa: usize, xb: usize) -> bool {
    let sa = fg.factor(edge.a).domain.support(xa);
    let sb = fg.factor(edge.b).domain.support(xb);
    edge.proj_a.apply(sa) == edge.proj_b.apply(sb)
}
