use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Iterate,
    Tighten,
    Round,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Event::Iterate => "iterate",
            Event::Tighten => "tighten",
            Event::Round => "round",
        })
    }
}

/// One row of a solver's convergence log.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub elapsed_ms: u64,
    pub dual_bound: f64,
    pub best_primal: Option<f64>,
    pub event: Event,
}

pub const CSV_HEADER: &str = "iteration,elapsed_ms,dual_bound,best_primal,event";

/// Writes the log as CSV with a header row; an absent primal is an empty
/// field and an infinite one is written as `inf`.
pub fn write_csv<W: Write>(mut out: W, records: &[ConvergenceRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let primal = match r.best_primal {
            // adding zero turns -0 into 0
            Some(p) => format!("{}", p + 0.0),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            r.elapsed_ms,
            r.dual_bound + 0.0,
            primal,
            r.event
        )?;
    }
    Ok(())
}

/// Checks the log invariants: dual bound non-decreasing within the relative
/// slack, best primal non-increasing where present.
pub fn trace_is_monotone(records: &[ConvergenceRecord]) -> bool {
    records.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let dual_ok = b.dual_bound >= a.dual_bound - 1e-9 * a.dual_bound.abs().max(1.0);
        let primal_ok = match (a.best_primal, b.best_primal) {
            (Some(p), Some(q)) => q <= p,
            (Some(_), None) => false,
            _ => true,
        };
        dual_ok && primal_ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let records = vec![
            ConvergenceRecord {
                iteration: 0,
                elapsed_ms: 0,
                dual_bound: -1.0,
                best_primal: None,
                event: Event::Iterate,
            },
            ConvergenceRecord {
                iteration: 1,
                elapsed_ms: 3,
                dual_bound: 0.5,
                best_primal: Some(2.0),
                event: Event::Round,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,elapsed_ms,dual_bound,best_primal,event\n0,0,-1,,iterate\n1,3,0.5,2,round\n"
        );
        assert!(trace_is_monotone(&records));
    }
}
