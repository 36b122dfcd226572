//! Directed acyclic graphs, d-separation and single-world intervention graphs.
//!
//! Nodes are case-sensitive opaque names kept in the order they were declared.
//! Independence queries use a reachability ("Bayes ball") pass over
//! `(node, direction)` states, so every query is linear in the graph size.

mod swig;
mod text;

pub use swig::{Label, SwigGraph};
pub use text::parse_graph;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// A named-node directed acyclic graph.
#[derive(Debug, Clone)]
pub struct Dag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edge_set() == other.edge_set()
    }
}

impl Eq for Dag {}

impl Dag {
    pub fn new<N, E>(nodes: &[N], edges: &[(E, E)]) -> Result<Self>
    where
        N: AsRef<str>,
        E: AsRef<str>,
    {
        let mut names = Vec::with_capacity(nodes.len());
        let mut index = HashMap::new();
        for n in nodes {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), names.len()).is_some() {
                return Err(Error::DuplicateNode(n));
            }
            names.push(n);
        }
        let lookup = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownNode(name.to_string()))
        };
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (p, c) in edges {
            let (p, c) = (lookup(p.as_ref())?, lookup(c.as_ref())?);
            if p == c {
                return Err(Error::SelfLoop(names[p].clone()));
            }
            if idx_edges.contains(&(p, c)) {
                return Err(Error::DuplicateEdge(names[p].clone(), names[c].clone()));
            }
            idx_edges.push((p, c));
        }
        Self::from_indices(names, index, idx_edges)
    }

    fn from_indices(
        nodes: Vec<String>,
        index: HashMap<String, usize>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let k = nodes.len();
        let mut parents = vec![Vec::new(); k];
        let mut children = vec![Vec::new(); k];
        for &(p, c) in &edges {
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        // Kahn's algorithm, always releasing the lowest-index ready node so the
        // order is deterministic and respects declaration order where possible.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..k).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(k);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != k {
            let stuck = (0..k)
                .filter(|&i| indegree[i] > 0)
                .map(|i| nodes[i].clone())
                .collect();
            return Err(Error::Cycle(stuck));
        }

        Ok(Dag {
            nodes,
            index,
            edges,
            parents,
            children,
            topo,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges in declaration order.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(p, c)| (self.nodes[p].clone(), self.nodes[c].clone()))
            .collect()
    }

    fn edge_set(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(p, c)| (self.nodes[p].as_str(), self.nodes[c].as_str()))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        match (self.index.get(parent), self.index.get(child)) {
            (Some(&p), Some(&c)) => self.children[p].binary_search(&c).is_ok(),
            _ => false,
        }
    }

    /// Parent indices of node `i`, ascending (canonical order).
    pub fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn child_indices(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parents(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.index_of(name)?;
        Ok(self.parents[i]
            .iter()
            .map(|&p| self.nodes[p].as_str())
            .collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.index_of(name)?;
        Ok(self.children[i]
            .iter()
            .map(|&c| self.nodes[c].as_str())
            .collect())
    }

    /// Node indices in a topological order (ties broken by declaration order).
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn remove_edges<E: AsRef<str>>(&self, drop: &[(E, E)]) -> Result<Dag> {
        let mut removed = Vec::with_capacity(drop.len());
        for (p, c) in drop {
            let (p, c) = (p.as_ref(), c.as_ref());
            let pi = self.index_of(p)?;
            let ci = self.index_of(c)?;
            if !self.has_edge(p, c) {
                return Err(Error::MissingEdge(p.to_string(), c.to_string()));
            }
            removed.push((pi, ci));
        }
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| !removed.contains(e))
            .collect();
        Self::from_indices(self.nodes.clone(), self.index.clone(), edges)
    }

    /// Adds edges, keeping existing ones. Used to build variants outside the
    /// arrow-removal lattice.
    pub fn add_edges<E: AsRef<str>>(&self, add: &[(E, E)]) -> Result<Dag> {
        let mut edges = self.edges();
        for (p, c) in add {
            edges.push((p.as_ref().to_string(), c.as_ref().to_string()));
        }
        Dag::new(&self.nodes, &edges)
    }

    fn closure(&self, start: usize, upward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let next = if upward {
                &self.parents[v]
            } else {
                &self.children[v]
            };
            for &w in next {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    fn names_where(&self, mask: &[bool]) -> BTreeSet<String> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.nodes[i].clone())
            .collect()
    }

    /// Strict ancestors of `node`.
    pub fn ancestors(&self, node: &str) -> Result<BTreeSet<String>> {
        let i = self.index_of(node)?;
        Ok(self.names_where(&self.closure(i, true)))
    }

    /// Strict descendants of `node`.
    pub fn descendants(&self, node: &str) -> Result<BTreeSet<String>> {
        let i = self.index_of(node)?;
        Ok(self.names_where(&self.closure(i, false)))
    }

    /// True when a directed path `from -> ... -> to` exists whose interior
    /// avoids every node in `avoiding`.
    pub fn has_directed_path(&self, from: &str, to: &str, avoiding: &[&str]) -> Result<bool> {
        let from = self.index_of(from)?;
        let to = self.index_of(to)?;
        let mut blocked = vec![false; self.len()];
        for a in avoiding {
            blocked[self.index_of(a)?] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if c == to {
                    return Ok(true);
                }
                if !blocked[c] && !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        Ok(false)
    }

    fn query_masks<S: AsRef<str>>(
        &self,
        set_a: &[S],
        set_b: &[S],
        given: &[S],
    ) -> Result<[Vec<bool>; 3]> {
        let mut masks = [
            vec![false; self.len()],
            vec![false; self.len()],
            vec![false; self.len()],
        ];
        let mut owner: Vec<Option<usize>> = vec![None; self.len()];
        for (m, set) in [set_a, set_b, given].into_iter().enumerate() {
            for name in set {
                let name = name.as_ref();
                let i = self.index_of(name)?;
                match owner[i] {
                    Some(prev) if prev != m => {
                        return Err(Error::OverlappingSets(name.to_string()))
                    }
                    _ => owner[i] = Some(m),
                }
                masks[m][i] = true;
            }
        }
        Ok(masks)
    }

    /// Nodes that are in `given` or have a descendant in it.
    fn given_ancestry(&self, given: &[bool]) -> Vec<bool> {
        let mut anc = given.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&i| given[i]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        anc
    }

    /// Nodes reachable from `sources` along paths that are active given `given`.
    fn reachable(&self, sources: &[bool], given: &[bool]) -> Vec<bool> {
        const UP: usize = 0;
        const DOWN: usize = 1;
        let anc = self.given_ancestry(given);
        let mut visited = vec![[false; 2]; self.len()];
        let mut reached = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for (i, &s) in sources.iter().enumerate() {
            if s {
                queue.push_back((i, UP));
            }
        }
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !given[v] {
                reached[v] = true;
            }
            if dir == UP && !given[v] {
                queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
            } else if dir == DOWN {
                if !given[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
                }
                if anc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                }
            }
        }
        reached
    }

    /// d-separation of `set_a` and `set_b` given `given`.
    pub fn d_separated<S: AsRef<str>>(
        &self,
        set_a: &[S],
        set_b: &[S],
        given: &[S],
    ) -> Result<bool> {
        let [a, b, c] = self.query_masks(set_a, set_b, given)?;
        let reached = self.reachable(&a, &c);
        Ok(!reached.iter().zip(&b).any(|(&r, &in_b)| r && in_b))
    }

    /// An open path between the two sets, if one exists. Intended for
    /// diagnostics; the verdict itself comes from [`Dag::d_separated`].
    pub fn open_path<S: AsRef<str>>(
        &self,
        set_a: &[S],
        set_b: &[S],
        given: &[S],
    ) -> Result<Option<OpenPath>> {
        let [a, b, c] = self.query_masks(set_a, set_b, given)?;
        let anc = self.given_ancestry(&c);
        for start in (0..self.len()).filter(|&i| a[i]) {
            let mut path = vec![start];
            let mut forward = Vec::new();
            let mut on_path = vec![false; self.len()];
            on_path[start] = true;
            if self.extend_open(&mut path, &mut forward, &mut on_path, &a, &b, &c, &anc) {
                return Ok(Some(OpenPath {
                    nodes: path.iter().map(|&i| self.nodes[i].clone()).collect(),
                    forward,
                }));
            }
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn extend_open(
        &self,
        path: &mut Vec<usize>,
        forward: &mut Vec<bool>,
        on_path: &mut [bool],
        a: &[bool],
        b: &[bool],
        given: &[bool],
        anc: &[bool],
    ) -> bool {
        let v = *path.last().expect("path is never empty");
        let steps = self.children[v]
            .iter()
            .map(|&c| (c, true))
            .chain(self.parents[v].iter().map(|&p| (p, false)));
        for (w, fwd) in steps {
            if on_path[w] || a[w] {
                continue;
            }
            // The triple (prev, v, w) must be open at v.
            if let Some(&into_v) = forward.last() {
                let collider = into_v && !fwd;
                let open = if collider { anc[v] } else { !given[v] };
                if !open {
                    continue;
                }
            }
            path.push(w);
            forward.push(fwd);
            if b[w] {
                return true;
            }
            on_path[w] = true;
            if self.extend_open(path, forward, on_path, a, b, given, anc) {
                return true;
            }
            on_path[w] = false;
            path.pop();
            forward.pop();
        }
        false
    }

    /// Renders the graph in the text format read by [`parse_graph`].
    pub fn to_text(&self) -> String {
        text::render(self)
    }
}

/// A path witnessing d-connection. `forward[i]` is true when the edge
/// between `nodes[i]` and `nodes[i + 1]` points towards `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenPath {
    pub nodes: Vec<String>,
    pub forward: Vec<bool>,
}

impl OpenPath {
    pub fn render_with(&self, label: impl Fn(&str) -> String) -> String {
        let mut out = label(&self.nodes[0]);
        for (next, &fwd) in self.nodes[1..].iter().zip(&self.forward) {
            out.push_str(if fwd { " -> " } else { " <- " });
            out.push_str(&label(next));
        }
        out
    }
}

impl fmt::Display for OpenPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(str::to_string))
    }
}
