//! Assignment-list format for graph matching.
//!
//! ```text
//! c comment
//! p <left points> <right points> <assignments> <edges>
//! a <id> <left> <right> <cost>
//! e <id1> <id2> <cost>
//! ```
//!
//! Left points are the nodes, right points the labels. An `e` line adds its
//! cost to the pairwise entry of the two assignments; repeated `e` lines on
//! the same pair are summed.

use std::collections::HashMap;
use std::fmt::Write;

use super::tokens::{parse_error, parse_token};
use crate::error::Result;
use crate::matching::MatchingModel;

type Entry = (usize, usize, f64);

struct Header {
    left: usize,
    right: usize,
    assignments: usize,
    edges: usize,
}

pub fn parse_dd(text: &str) -> Result<MatchingModel> {
    let mut header: Option<Header> = None;
    // assignment id -> (node, local label)
    let mut ids: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    let mut unary: Vec<Vec<f64>> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    // (node pair) -> entries (local label, local label, cost)
    let mut tables: HashMap<(usize, usize), Vec<Entry>> = HashMap::new();
    let mut num_a = 0;
    let mut num_e = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some(&kind) = fields.first() else { continue };
        let arity = |n: usize| {
            if fields.len() == n + 1 {
                Ok(())
            } else {
                Err(parse_error(
                    line,
                    format!("'{kind}' line needs {n} fields, found {}", fields.len() - 1),
                ))
            }
        };
        match kind {
            "c" => {}
            "p" => {
                arity(4)?;
                if header.is_some() {
                    return Err(parse_error(line, "second 'p' line"));
                }
                let h = Header {
                    left: parse_token(line, fields[1], "left point count")?,
                    right: parse_token(line, fields[2], "right point count")?,
                    assignments: parse_token(line, fields[3], "assignment count")?,
                    edges: parse_token(line, fields[4], "edge count")?,
                };
                candidates = vec![Vec::new(); h.left];
                unary = vec![Vec::new(); h.left];
                header = Some(h);
            }
            "a" => {
                arity(4)?;
                let h = header
                    .as_ref()
                    .ok_or_else(|| parse_error(line, "'a' line before 'p' line"))?;
                let id: usize = parse_token(line, fields[1], "assignment id")?;
                let u: usize = parse_token(line, fields[2], "left point")?;
                let s: usize = parse_token(line, fields[3], "right point")?;
                let cost: f64 = parse_token(line, fields[4], "number")?;
                if u >= h.left || s >= h.right {
                    return Err(parse_error(line, format!("assignment ({u},{s}) out of range")));
                }
                if ids.contains_key(&id) {
                    return Err(parse_error(line, format!("duplicate assignment id {id}")));
                }
                if candidates[u].contains(&s) {
                    return Err(parse_error(line, format!("duplicate assignment pair ({u},{s})")));
                }
                ids.insert(id, (u, candidates[u].len()));
                candidates[u].push(s);
                unary[u].push(cost);
                num_a += 1;
            }
            "e" => {
                arity(3)?;
                let id1: usize = parse_token(line, fields[1], "assignment id")?;
                let id2: usize = parse_token(line, fields[2], "assignment id")?;
                let cost: f64 = parse_token(line, fields[3], "number")?;
                let lookup = |id: usize| {
                    ids.get(&id)
                        .copied()
                        .ok_or_else(|| parse_error(line, format!("dangling reference to assignment {id}")))
                };
                let (mut a, mut b) = (lookup(id1)?, lookup(id2)?);
                if a.0 == b.0 {
                    return Err(parse_error(
                        line,
                        format!("assignments {id1} and {id2} share left point {}", a.0),
                    ));
                }
                if a.0 > b.0 {
                    std::mem::swap(&mut a, &mut b);
                }
                let key = (a.0, b.0);
                tables
                    .entry(key)
                    .or_insert_with(|| {
                        pairs.push(key);
                        Vec::new()
                    })
                    .push((a.1, b.1, cost));
                num_e += 1;
            }
            other => return Err(parse_error(line, format!("unknown line type {other:?}"))),
        }
    }

    let Some(h) = header else {
        return Err(parse_error(1, "missing 'p' line"));
    };
    if num_a != h.assignments || num_e != h.edges {
        return Err(parse_error(
            text.lines().count().max(1),
            format!(
                "count mismatch: header announces {} assignments and {} edges, found {num_a} and {num_e}",
                h.assignments, h.edges
            ),
        ));
    }
    let mut model = MatchingModel::new(h.right, candidates, unary)?;
    for key in pairs {
        let cols = model.candidates(key.1).len();
        let mut table = vec![0.0; model.candidates(key.0).len() * cols];
        for (ka, kb, cost) in &tables[&key] {
            table[ka * cols + kb] += cost;
        }
        model.add_edge(key.0, key.1, table)?;
    }
    Ok(model)
}

/// Writes assignments numbered consecutively from 0 and one `e` line per
/// pairwise table entry, zeros included.
pub fn write_dd(model: &MatchingModel) -> String {
    let n = model.num_nodes();
    let mut first_id = Vec::with_capacity(n);
    let mut next = 0;
    for u in 0..n {
        first_id.push(next);
        next += model.candidates(u).len();
    }
    let backbone = model.backbone();
    let num_e: usize = (0..backbone.num_edges()).map(|e| backbone.pairwise(e).len()).sum();
    let mut out = String::new();
    let _ = writeln!(out, "p {n} {} {next} {num_e}", model.universe());
    for (u, &first) in first_id.iter().enumerate() {
        for (k, &s) in model.candidates(u).iter().enumerate() {
            let _ = writeln!(out, "a {} {u} {s} {}", first + k, backbone.unary(u)[k]);
        }
    }
    for (e, &(u, v)) in backbone.edges().iter().enumerate() {
        let cols = model.candidates(v).len();
        for (idx, cost) in backbone.pairwise(e).iter().enumerate() {
            let _ = writeln!(
                out,
                "e {} {} {cost}",
                first_id[u] + idx / cols,
                first_id[v] + idx % cols
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::brute_force_matching;

    #[test]
    fn complete_bipartite() {
        let m = parse_dd("p 2 2 4 0\na 0 0 0 1\na 1 0 1 2\na 2 1 0 3\na 3 1 1 4\n").unwrap();
        assert_eq!(m.candidates(0), &[0, 1]);
        assert_eq!(m.candidates(1), &[0, 1]);
        assert_eq!(m.backbone().num_edges(), 0);
        assert_eq!(m.backbone().unary(1), &[3.0, 4.0]);
    }

    #[test]
    fn two_node_example() {
        let text = "c two nodes\np 2 2 4 0\na 0 0 0 0\na 1 0 1 5\na 2 1 0 0\na 3 1 1 1\n";
        let m = parse_dd(text).unwrap();
        assert_eq!(brute_force_matching(&m).unwrap(), Some((vec![0, 1], 1.0)));
    }

    #[test]
    fn errors() {
        let dangling = "p 2 2 2 1\na 0 0 0 0\na 1 1 1 0\ne 1 7 0.5\n";
        assert!(parse_dd(dangling).unwrap_err().to_string().contains("dangling"));
        assert!(parse_dd("p 1 2 2 0\na 0 0 1 0\na 1 0 1 0\n").is_err());
        assert!(parse_dd("p 1 2 2 0\na 0 0 1 0\na 0 0 0 0\n").is_err());
        assert!(parse_dd("p 1 1 2 0\na 0 0 0 0\n").is_err());
        assert!(parse_dd("p 1 1 1 0\na 0 0 0 zero\n").is_err());
        assert!(parse_dd("a 0 0 0 0\n").is_err());
    }

    #[test]
    fn edges_accumulate() {
        let text = "p 2 2 4 3\na 0 0 0 0\na 1 0 1 0\na 2 1 0 0\na 3 1 1 0\ne 3 0 1.5\ne 0 3 0.5\ne 1 2 4\n";
        let m = parse_dd(text).unwrap();
        assert_eq!(m.backbone().pairwise(0), &[0.0, 2.0, 4.0, 0.0]);
        assert_eq!(parse_dd(&write_dd(&m)).unwrap(), m);
    }
}
