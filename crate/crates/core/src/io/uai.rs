//! UAI `MARKOV` files restricted to unary and pairwise cliques.
//!
//! Table entries are additive costs. Within a pairwise table the last
//! variable of the clique runs fastest. Repeated cliques are summed.

use std::collections::HashMap;
use std::fmt::Write;

use super::tokens::{parse_error, Tokens};
use crate::error::Result;
use crate::mrf::PairwiseModel;

/// Cost assigned to zero-probability entries by [`parse_uai_neglog`].
pub const NEGLOG_ZERO_COST: f64 = 1e9;

pub fn parse_uai(text: &str) -> Result<PairwiseModel> {
    parse(text, Some)
}

/// Reads the tables as probabilities or potentials and converts each entry
/// `p` to `-ln p`; zeros become [`NEGLOG_ZERO_COST`].
pub fn parse_uai_neglog(text: &str) -> Result<PairwiseModel> {
    parse(text, |v| {
        if v < 0.0 || v.is_nan() {
            None
        } else if v == 0.0 {
            Some(NEGLOG_ZERO_COST)
        } else {
            Some(-v.ln())
        }
    })
}

fn parse(text: &str, convert: impl Fn(f64) -> Option<f64>) -> Result<PairwiseModel> {
    let mut t = Tokens::new(text);
    let (line, header) = t.next_str("header")?;
    if header != "MARKOV" {
        return Err(parse_error(line, format!("expected MARKOV header, found {header:?}")));
    }
    let n: usize = t.next("variable count")?;
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        let line = t.line();
        let c: usize = t.next("cardinality")?;
        if c == 0 {
            return Err(parse_error(line, "zero cardinality"));
        }
        cards.push(c);
    }
    let num_cliques: usize = t.next("clique count")?;
    let mut cliques = Vec::with_capacity(num_cliques);
    for _ in 0..num_cliques {
        let line = t.line();
        let size: usize = t.next("clique size")?;
        if !(1..=2).contains(&size) {
            return Err(parse_error(line, format!("non-pairwise clique of size {size}")));
        }
        let mut vars = Vec::with_capacity(size);
        for _ in 0..size {
            let line = t.line();
            let v: usize = t.next("variable index")?;
            if v >= n {
                return Err(parse_error(line, format!("variable {v} out of range")));
            }
            vars.push(v);
        }
        if size == 2 && vars[0] == vars[1] {
            return Err(parse_error(line, format!("clique repeats variable {}", vars[0])));
        }
        cliques.push(vars);
    }

    let mut unary: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    // tables keyed by (lower, higher), row-major with the lower as row
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut pair: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for vars in &cliques {
        let line = t.line();
        let count: usize = t.next("table size")?;
        let expected: usize = vars.iter().map(|&v| cards[v]).product();
        if count != expected {
            return Err(parse_error(
                line,
                format!("count mismatch: table has {count} entries, clique needs {expected}"),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let line = t.line();
            let raw: f64 = t.next("number")?;
            let v = convert(raw).ok_or_else(|| parse_error(line, format!("invalid potential {raw}")))?;
            values.push(v);
        }
        match vars[..] {
            [u] => unary[u].iter_mut().zip(&values).for_each(|(a, b)| *a += b),
            [a, b] => {
                let (lo, hi) = (a.min(b), a.max(b));
                let table = pair.entry((lo, hi)).or_insert_with(|| {
                    order.push((lo, hi));
                    vec![0.0; cards[lo] * cards[hi]]
                });
                for xa in 0..cards[a] {
                    for xb in 0..cards[b] {
                        let v = values[xa * cards[b] + xb];
                        let idx = if a < b { xa * cards[b] + xb } else { xb * cards[a] + xa };
                        table[idx] += v;
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    if !t.is_empty() {
        return Err(parse_error(
            t.line(),
            "count mismatch: trailing tokens after the last table",
        ));
    }

    let mut model = PairwiseModel::new(unary)?;
    for key in order {
        let table = pair.remove(&key).expect("table recorded with its key");
        model.add_edge(key.0, key.1, table)?;
    }
    Ok(model)
}

/// Writes every node's unary clique followed by the edges in model order.
pub fn write_uai(model: &PairwiseModel) -> String {
    let n = model.num_nodes();
    let mut out = String::from("MARKOV\n");
    let _ = writeln!(out, "{n}");
    let cards: Vec<String> = (0..n).map(|u| model.num_labels(u).to_string()).collect();
    let _ = writeln!(out, "{}", cards.join(" "));
    let _ = writeln!(out, "{}", n + model.num_edges());
    for u in 0..n {
        let _ = writeln!(out, "1 {u}");
    }
    for &(u, v) in model.edges() {
        let _ = writeln!(out, "2 {u} {v}");
    }
    let mut table = |values: &[f64]| {
        let _ = writeln!(out, "\n{}", values.len());
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", joined.join(" "));
    };
    for u in 0..n {
        table(model.unary(u));
    }
    for e in 0..model.num_edges() {
        table(model.pairwise(e));
    }
    out
}
