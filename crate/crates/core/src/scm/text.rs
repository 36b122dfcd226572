//! Text serialization for [`DiscreteScm`].
//!
//! ```text
//! # comments and blank lines are ignored
//! outcome Y
//! node Z 2
//! node X 2 : Z U
//! cpt Z : 0.5 0.5
//! cpt X Z=0 U=0 : 0.8 0.2
//! ```
//!
//! `node` lines fix the canonical node order and list each node's parents.
//! Each `cpt` line is one table row keyed by the parent assignment, with the
//! keys in canonical parent order; every row must appear exactly once.
//! Probabilities are written with the shortest representation that parses
//! back to the same `f64`, so render/parse round-trips bit-exactly.

use std::collections::HashMap;

use super::DiscreteScm;
use crate::error::{Error, Result};
use crate::graph::Dag;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct NodeDecl {
    name: String,
    card: usize,
    parents: Vec<String>,
}

/// `(line, node, parent keys, probabilities)` of one `cpt` line.
type RowDecl = (usize, String, Vec<(String, usize)>, Vec<f64>);

pub fn parse_scm(input: &str) -> Result<DiscreteScm> {
    let mut outcome: Option<String> = None;
    let mut decls: Vec<NodeDecl> = Vec::new();
    let mut rows: Vec<RowDecl> = Vec::new();

    for (i, raw) in input.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, tail) = match line.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (line, None),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        match words.as_slice() {
            ["outcome", name] if tail.is_none() => {
                if outcome.replace(name.to_string()).is_some() {
                    return Err(perr(n, "duplicate outcome line"));
                }
            }
            ["node", name, card] => {
                let card: usize = card
                    .parse()
                    .map_err(|_| perr(n, format!("bad cardinality `{card}`")))?;
                let parents = tail
                    .map(|t| t.split_whitespace().map(str::to_string).collect())
                    .unwrap_or_default();
                decls.push(NodeDecl {
                    name: name.to_string(),
                    card,
                    parents,
                });
            }
            ["cpt", name, keys @ ..] => {
                let tail = tail.ok_or_else(|| perr(n, "missing `:` before probabilities"))?;
                let keys = keys
                    .iter()
                    .map(|k| {
                        let (var, val) = k
                            .split_once('=')
                            .ok_or_else(|| perr(n, format!("bad row key `{k}`")))?;
                        let val: usize = val
                            .parse()
                            .map_err(|_| perr(n, format!("bad value in `{k}`")))?;
                        Ok((var.to_string(), val))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let probs = tail
                    .split_whitespace()
                    .map(|p| {
                        p.parse::<f64>()
                            .map_err(|_| perr(n, format!("bad probability `{p}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push((n, name.to_string(), keys, probs));
            }
            _ => return Err(perr(n, format!("unrecognized line `{line}`"))),
        }
    }

    let names: Vec<&str> = decls.iter().map(|d| d.name.as_str()).collect();
    let edges: Vec<(&str, &str)> = decls
        .iter()
        .flat_map(|d| d.parents.iter().map(move |p| (p.as_str(), d.name.as_str())))
        .collect();
    let dag = Dag::new(&names, &edges)?;
    let cards: Vec<usize> = decls.iter().map(|d| d.card).collect();

    let mut tables: Vec<Vec<Option<Vec<f64>>>> = (0..dag.len())
        .map(|i| {
            let r: usize = dag.parent_indices(i).iter().map(|&p| cards[p]).product();
            vec![None; r]
        })
        .collect();
    let position: HashMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    for (n, name, keys, probs) in rows {
        let i = *position
            .get(name.as_str())
            .ok_or_else(|| perr(n, format!("cpt for undeclared node `{name}`")))?;
        let parents = dag.parent_indices(i);
        if keys.len() != parents.len()
            || keys.iter().zip(parents).any(|((k, _), &p)| *k != names[p])
        {
            return Err(perr(
                n,
                format!("row keys for `{name}` must be its parents in order"),
            ));
        }
        let mut r = 0;
        for ((k, v), &p) in keys.iter().zip(parents) {
            if *v >= cards[p] {
                return Err(perr(n, format!("value {v} out of range for `{k}`")));
            }
            r = r * cards[p] + v;
        }
        if probs.len() != cards[i] {
            return Err(perr(n, format!("expected {} probabilities", cards[i])));
        }
        if tables[i][r].replace(probs).is_some() {
            return Err(perr(n, format!("duplicate row for `{name}`")));
        }
    }
    let tables = tables
        .into_iter()
        .enumerate()
        .map(|(i, rows)| {
            rows.into_iter()
                .collect::<Option<Vec<_>>>()
                .map(|r| r.concat())
                .ok_or_else(|| perr(0, format!("incomplete table for `{}`", names[i])))
        })
        .collect::<Result<Vec<_>>>()?;

    let scm = DiscreteScm::new(dag, &cards, tables)?;
    match outcome {
        Some(o) => scm.with_outcome(&o),
        None => Ok(scm),
    }
}

pub(super) fn render(m: &DiscreteScm) -> String {
    let dag = m.dag();
    let names = dag.nodes();
    let mut out = String::from("# discrete structural causal model\n");
    out.push_str(&format!("outcome {}\n", m.outcome()));
    for (i, cpt) in m.cpts().iter().enumerate() {
        out.push_str(&format!("node {} {}", names[i], cpt.cardinality()));
        let parents = dag.parent_indices(i);
        if !parents.is_empty() {
            let ps: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
            out.push_str(&format!(" : {}", ps.join(" ")));
        }
        out.push('\n');
    }
    for (i, cpt) in m.cpts().iter().enumerate() {
        let parents = dag.parent_indices(i);
        for r in 0..cpt.rows() {
            out.push_str(&format!("cpt {}", names[i]));
            for (&p, v) in parents.iter().zip(cpt.row_values(r)) {
                out.push_str(&format!(" {}={}", names[p], v));
            }
            let probs: Vec<String> = cpt.row(r).iter().map(|p| p.to_string()).collect();
            out.push_str(&format!(" : {}\n", probs.join(" ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
outcome Y
node Z 2
node Y 3 : Z
cpt Z : 0.25 0.75
cpt Y Z=0 : 0.2 0.3 0.5
cpt Y Z=1 : 0.1 0.1 0.8
";

    #[test]
    fn parse_and_render() {
        let m = parse_scm(SMALL).unwrap();
        assert_eq!(m.cardinality("Y").unwrap(), 3);
        assert_eq!(m.cpt("Y").unwrap().prob(2, &[1]), 0.8);
        let text = m.to_text();
        let back = parse_scm(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(parse_scm("node Z 2\ncpt Z : 0.5 0.5\nbogus line\n").is_err());
        // missing row
        assert!(
            parse_scm("node Z 2\nnode Y 2 : Z\ncpt Z : 0.5 0.5\ncpt Y Z=0 : 0.5 0.5\n").is_err()
        );
        // duplicate row
        assert!(parse_scm("node Z 2\ncpt Z : 0.5 0.5\ncpt Z : 0.5 0.5\n").is_err());
        // row does not sum to one
        assert!(matches!(
            parse_scm("node Z 2\ncpt Z : 0.5 0.6\n"),
            Err(Error::InvalidTable { .. })
        ));
        // keys out of parent order
        assert!(parse_scm(
            "node A 2\nnode B 2\nnode Y 2 : A B\ncpt A : 0.5 0.5\ncpt B : 0.5 0.5\n\
             cpt Y B=0 A=0 : 0.5 0.5\n"
        )
        .is_err());
    }
}
