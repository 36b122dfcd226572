//! Plain-text graph descriptions.
//!
//! ```text
//! # comments (to end of line) and blank lines are ignored
//! nodes: Z X A U Y
//! Z -> X
//! U -> Y
//! ```
//!
//! The first content line must be `nodes:` followed by node names separated
//! by whitespace or commas. Every following content line is exactly one edge
//! `parent -> child`. Names match `[A-Za-z_][A-Za-z0-9_]*`. Anything else is
//! rejected.

use super::Dag;
use crate::error::{Error, Result};

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_name(token: &str, line: usize) -> Result<String> {
    if is_identifier(token) {
        Ok(token.to_string())
    } else {
        Err(Error::Parse {
            line,
            message: format!("invalid node name `{token}`"),
        })
    }
}

pub fn parse_graph(input: &str) -> Result<Dag> {
    let mut nodes: Option<Vec<String>> = None;
    let mut edges = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match nodes {
            None => {
                let rest = line.strip_prefix("nodes:").ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected `nodes:` line".into(),
                })?;
                let names = rest
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_name(t, line_no))
                    .collect::<Result<Vec<_>>>()?;
                nodes = Some(names);
            }
            Some(_) => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    [p, "->", c] => edges.push((parse_name(p, line_no)?, parse_name(c, line_no)?)),
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected `parent -> child`, got `{line}`"),
                        })
                    }
                }
            }
        }
    }
    let nodes = nodes.ok_or(Error::Parse {
        line: 0,
        message: "missing `nodes:` line".into(),
    })?;
    Dag::new(&nodes, &edges)
}

pub(super) fn render(g: &Dag) -> String {
    let mut out = format!("nodes: {}\n", g.nodes().join(" "));
    for (p, c) in g.edges() {
        out.push_str(&format!("{p} -> {c}\n"));
    }
    out
}
