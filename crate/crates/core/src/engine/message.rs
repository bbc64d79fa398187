//! The monotone update step: pick a minimizing configuration of a factor
//! and push as much cost as stays admissible towards a set of neighbors.

use crate::engine::Reparametrization;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, FactorDomain, FactorGraph, FactorId, Projection};

/// A candidate dual step for one factor and a set of its coupling edges.
///
/// `deltas[k]` is added to `phi_(factor, other)` on edge `targets[k]`;
/// `signs[k]` is the projected anchor `A x*` on that edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageUpdate {
    pub factor: FactorId,
    pub anchor: usize,
    pub targets: Vec<EdgeId>,
    pub deltas: Vec<Vec<f64>>,
    pub signs: Vec<Vec<u8>>,
}

impl MessageUpdate {
    /// Exact sign pattern check: nonnegative where the anchor projects to
    /// one, nonpositive where it projects to zero.
    pub fn satisfies_sign_pattern(&self) -> bool {
        self.deltas.iter().zip(&self.signs).all(|(delta, nu)| {
            delta
                .iter()
                .zip(nu)
                .all(|(&d, &s)| if s == 1 { d >= 0.0 } else { d <= 0.0 })
        })
    }
}

/// Minimizing configuration of factor `i` under its current reparametrized
/// cost. Ties go to the first configuration in canonical order.
pub fn min_oracle(fg: &FactorGraph, state: &Reparametrization, i: FactorId) -> (usize, f64) {
    fg.factor(i).domain.minimize(state.cost(i))
}

/// +1 on the support of `anchor`, -1 elsewhere.
pub fn default_direction(domain: &dyn FactorDomain, anchor: usize) -> Vec<f64> {
    let mut direction = vec![-1.0; domain.dim()];
    for &c in domain.support(anchor) {
        direction[c] = 1.0;
    }
    direction
}

fn check_direction(domain: &dyn FactorDomain, anchor: usize, direction: &[f64]) -> Result<()> {
    if direction.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            factor: anchor,
            expected: domain.dim(),
            found: direction.len(),
        });
    }
    let support = domain.support(anchor);
    for (s, &d) in direction.iter().enumerate() {
        let ok = if support.contains(&s) { d > 0.0 } else { d < 0.0 };
        if !ok {
            return Err(Error::InvalidDirection(s));
        }
    }
    Ok(())
}

/// Maximal admissible message from factor `i` to the coupling edges `targets`.
///
/// Domains with a closed form answer directly. Otherwise a single target is
/// handled by the enumeration maximizer of [`generic_message`]; several
/// targets without a closed form are an error. A custom `direction`
/// bypasses closed forms, which assume the default one.
pub fn maximize_message(
    fg: &FactorGraph,
    state: &Reparametrization,
    i: FactorId,
    targets: &[EdgeId],
    direction: Option<&[f64]>,
) -> Result<MessageUpdate> {
    fg.check_factor(i)?;
    for (k, &e) in targets.iter().enumerate() {
        fg.check_incident(i, e)?;
        if targets[..k].contains(&e) {
            return Err(Error::InvalidSchedule(format!("edge {e} listed twice in one message")));
        }
    }
    let domain = fg.factor(i).domain.as_ref();
    let cost = state.cost(i);
    let (anchor, _) = domain.minimize(cost);
    let projections: Vec<&Projection> = targets.iter().map(|&e| fg.edge(e).projection(i)).collect();

    let deltas = match direction {
        Some(d) => {
            check_direction(domain, anchor, d)?;
            match projections.as_slice() {
                [] => Vec::new(),
                [p] => vec![generic_message(domain, cost, anchor, p, d)],
                _ => return Err(Error::JointMessageUnsupported(i)),
            }
        }
        None => match domain.closed_form_message(cost, anchor, &projections) {
            Some(deltas) => deltas,
            None => match projections.as_slice() {
                [] => Vec::new(),
                [p] => {
                    let d = default_direction(domain, anchor);
                    vec![generic_message(domain, cost, anchor, p, &d)]
                }
                _ => return Err(Error::JointMessageUnsupported(i)),
            },
        },
    };
    let support = domain.support(anchor);
    let signs = projections.iter().map(|p| p.image(support)).collect();
    Ok(MessageUpdate {
        factor: i,
        anchor,
        targets: targets.to_vec(),
        deltas,
        signs,
    })
}

/// Enumeration maximizer for a single target projection.
///
/// When every configuration activates at most one row of `proj`, the
/// maximization over admissible updates is a one-parameter problem: rows
/// other than the anchor's are pushed down until their best configuration
/// ties the anchor, and the anchor's own row `s*` is raised by
/// `t in [0, cap]` iff the total direction slope is positive. For
/// projections activating several rows at once, the min-marginal step is
/// scaled by the largest number of active rows, which keeps it admissible.
pub fn generic_message(
    domain: &dyn FactorDomain,
    cost: &[f64],
    anchor: usize,
    proj: &Projection,
    direction: &[f64],
) -> Vec<f64> {
    let k = proj.rows();
    let mu = domain.config_cost(cost, anchor);
    let mut row_min = vec![f64::INFINITY; k];
    let mut none_min = f64::INFINITY;
    let mut max_active = 0usize;
    for config in 0..domain.num_configs() {
        let value = domain.config_cost(cost, config);
        let image = proj.apply(domain.support(config));
        let mut active = 0;
        for (s, &count) in image.iter().enumerate() {
            if count > 0 {
                active += 1;
                row_min[s] = row_min[s].min(value);
            }
        }
        if active == 0 {
            none_min = none_min.min(value);
        }
        max_active = max_active.max(active);
    }

    let anchor_rows: Vec<usize> = proj
        .apply(domain.support(anchor))
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, _)| s)
        .collect();

    let mut delta = vec![0.0; k];
    if max_active > 1 {
        let scale = max_active as f64;
        for s in 0..k {
            if !anchor_rows.contains(&s) && row_min[s].is_finite() {
                delta[s] = (mu - row_min[s]) / scale;
            }
        }
        return delta;
    }

    let mut slope_coef = vec![0.0; k];
    for &(row, col) in proj.entries() {
        slope_coef[row] += direction[col];
    }
    let raise = match anchor_rows.first() {
        None => 0.0,
        Some(&star) => {
            let mut slope = slope_coef[star];
            let mut cap = none_min - mu;
            for s in (0..k).filter(|&s| s != star && row_min[s].is_finite()) {
                slope += slope_coef[s];
                cap = cap.min(row_min[s] - mu);
            }
            if slope > 0.0 && cap.is_finite() {
                delta[star] = cap;
                cap
            } else {
                0.0
            }
        }
    };
    for s in 0..k {
        if !anchor_rows.contains(&s) && row_min[s].is_finite() {
            delta[s] = ((mu + raise) - row_min[s]).min(0.0);
        }
    }
    delta
}

/// Applies `weight * update` to the duals.
pub fn apply_update(
    fg: &FactorGraph,
    state: &mut Reparametrization,
    update: &MessageUpdate,
    weight: f64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::InvalidSchedule(format!("weight {weight} outside [0,1]")));
    }
    for (&e, delta) in update.targets.iter().zip(&update.deltas) {
        state.add_message(fg, e, update.factor, delta, weight);
    }
    Ok(())
}
