use crate::error::{Error, Result};
use crate::graph::{EdgeId, FactorGraph, FactorId};

/// Slack allowed on the `sum of weights <= 1` check.
const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SendBlock {
    pub targets: Vec<EdgeId>,
    pub weight: f64,
}

/// One factor visit: receive along `receive` (in order), then send the
/// blocks of `send` computed from a common snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub factor: FactorId,
    pub receive: Vec<EdgeId>,
    pub send: Vec<SendBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Ordered factor visits. An alternating schedule switches between its
/// forward and backward pass after every iteration.
#[derive(Debug, Clone)]
pub struct Schedule {
    forward: Vec<Visit>,
    backward: Option<Vec<Visit>>,
    direction: Direction,
}

impl Schedule {
    /// The same pass every iteration.
    pub fn fixed(visits: Vec<Visit>) -> Self {
        Self {
            forward: visits,
            backward: None,
            direction: Direction::Forward,
        }
    }

    pub fn alternating(forward: Vec<Visit>, backward: Vec<Visit>) -> Self {
        Self {
            forward,
            backward: Some(backward),
            direction: Direction::Forward,
        }
    }

    /// Alternates between `visits` and the same visits in reverse order.
    pub fn reversing(visits: Vec<Visit>) -> Self {
        let backward = visits.iter().rev().cloned().collect();
        Self::alternating(visits, backward)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn is_alternating(&self) -> bool {
        self.backward.is_some()
    }

    pub fn forward(&self) -> &[Visit] {
        &self.forward
    }

    pub fn backward(&self) -> Option<&[Visit]> {
        self.backward.as_deref()
    }

    /// Visits of the pass the next iteration will run.
    pub fn current(&self) -> &[Visit] {
        match (self.direction, &self.backward) {
            (Direction::Backward, Some(b)) => b,
            _ => &self.forward,
        }
    }

    /// Moves to the next pass direction of an alternating schedule.
    pub fn advance(&mut self) {
        if self.backward.is_some() {
            self.direction = match self.direction {
                Direction::Forward => Direction::Backward,
                Direction::Backward => Direction::Forward,
            };
        }
    }

    pub fn reset(&mut self) {
        self.direction = Direction::Forward;
    }

    pub fn validate(&self, fg: &FactorGraph) -> Result<()> {
        for visit in self.forward.iter().chain(self.backward.iter().flatten()) {
            validate_visit(fg, visit)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_blocks(fg: &FactorGraph, factor: FactorId, blocks: &[SendBlock]) -> Result<()> {
    let mut total = 0.0;
    let mut used: Vec<EdgeId> = Vec::new();
    for block in blocks {
        if block.weight.is_nan() || block.weight < 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "negative weight {} at factor {factor}",
                block.weight
            )));
        }
        total += block.weight;
        for &e in &block.targets {
            fg.check_incident(factor, e)?;
            if used.contains(&e) {
                return Err(Error::InvalidSchedule(format!(
                    "send blocks of factor {factor} overlap on edge {e}"
                )));
            }
            used.push(e);
        }
    }
    if total > 1.0 + WEIGHT_SLACK {
        return Err(Error::WeightSum(total));
    }
    Ok(())
}

fn validate_visit(fg: &FactorGraph, visit: &Visit) -> Result<()> {
    fg.check_factor(visit.factor)?;
    for &e in &visit.receive {
        fg.check_incident(visit.factor, e)?;
    }
    validate_blocks(fg, visit.factor, &visit.send)
}
