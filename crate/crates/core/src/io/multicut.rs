//! Edge lists `e <u> <v> <cost>` with arbitrary vertex tokens. Blank lines
//! and lines starting with `#` are skipped. Vertices are numbered in order
//! of first appearance.

use std::collections::HashMap;
use std::fmt::Write;

use super::tokens::{parse_error, parse_token};
use crate::error::Result;
use crate::multicut::MulticutInstance;

pub fn parse_multicut(text: &str) -> Result<MulticutInstance> {
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "e" || fields.len() != 4 {
            return Err(parse_error(
                line,
                format!("expected 'e <u> <v> <cost>', found {trimmed:?}"),
            ));
        }
        if fields[1] == fields[2] {
            return Err(parse_error(line, format!("self-loop at vertex {}", fields[1])));
        }
        let cost: f64 = parse_token(line, fields[3], "number")?;
        let mut vertex = |tok| {
            *ids.entry(tok).or_insert_with(|| {
                names.push(tok.to_string());
                names.len() - 1
            })
        };
        let (u, v) = (vertex(fields[1]), vertex(fields[2]));
        edges.push((line, u, v, cost));
    }
    let mut instance = MulticutInstance::with_names(names);
    for (line, u, v, cost) in edges {
        if instance.edge_index(u, v).is_some() {
            let n = instance.names();
            return Err(parse_error(line, format!("duplicate edge ({},{})", n[u], n[v])));
        }
        instance.add_edge(u, v, cost)?;
    }
    Ok(instance)
}

/// Writes the non-auxiliary edges. Vertices without such an edge are not
/// representable and are dropped.
pub fn write_multicut(instance: &MulticutInstance) -> String {
    let names = instance.names();
    let mut out = String::new();
    for (e, (&(u, v), cost)) in instance.edges().iter().zip(instance.costs()).enumerate() {
        if !instance.is_auxiliary(e) {
            let _ = writeln!(out, "e {} {} {cost}", names[u], names[v]);
        }
    }
    out
}
