use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::text::is_identifier;
use super::Dag;
use crate::error::{Error, Result};

/// A counterfactual node name such as `Y^{a,z}`: a base node plus the set of
/// intervention labels it is indexed by. Superscripts are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub base: String,
    pub superscript: BTreeSet<String>,
}

impl Label {
    pub fn plain(base: &str) -> Self {
        Label {
            base: base.to_string(),
            superscript: BTreeSet::new(),
        }
    }

    /// Parses `Y`, `Y^z`, `Y^{z,a}`. Returns the base and, when a `^` was
    /// present, the superscript set.
    pub fn parse(s: &str) -> Result<(String, Option<BTreeSet<String>>)> {
        let bad = || Error::UnknownLabel(s.to_string());
        let s = s.trim();
        let Some((base, sup)) = s.split_once('^') else {
            return if is_identifier(s) {
                Ok((s.to_string(), None))
            } else {
                Err(bad())
            };
        };
        if !is_identifier(base) {
            return Err(bad());
        }
        let inner = match sup.strip_prefix('{') {
            Some(rest) => rest.strip_suffix('}').ok_or_else(bad)?,
            None => sup,
        };
        let mut labels = BTreeSet::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if !is_identifier(part) {
                return Err(bad());
            }
            labels.insert(part.to_string());
        }
        Ok((base.to_string(), Some(labels)))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sup: Vec<&str> = self.superscript.iter().map(String::as_str).collect();
        match sup.as_slice() {
            [] => write!(f, "{}", self.base),
            [one] => write!(f, "{}^{}", self.base, one),
            many => write!(f, "{}^{{{}}}", self.base, many.join(",")),
        }
    }
}

/// Single-world intervention graph: every intervened node is split into a
/// random half (keeping inbound edges) and a fixed half (carrying outbound
/// edges). Random nodes are labeled by the fixed nodes among their ancestors.
#[derive(Debug, Clone)]
pub struct SwigGraph {
    source: Dag,
    split: Dag,
    // split-graph index -> source index
    base_of: Vec<usize>,
    is_fixed: Vec<bool>,
    // source index -> split index of its random half
    random_of: Vec<usize>,
    superscripts: Vec<BTreeSet<String>>,
}

impl SwigGraph {
    /// Builds the SWIG for `interventions`, a list of `(node, label)` pairs.
    pub fn new<S: AsRef<str>>(g: &Dag, interventions: &[(S, S)]) -> Result<Self> {
        let mut label_of: HashMap<usize, String> = HashMap::new();
        let mut used: BTreeSet<String> = g.nodes().iter().cloned().collect();
        for (node, label) in interventions {
            let (node, label) = (node.as_ref(), label.as_ref());
            let i = g.index_of(node)?;
            if !is_identifier(label) || !used.insert(label.to_string()) || label_of.contains_key(&i)
            {
                return Err(Error::InvalidLabel(label.to_string()));
            }
            label_of.insert(i, label.to_string());
        }

        let mut names = Vec::new();
        let mut base_of = Vec::new();
        let mut is_fixed = Vec::new();
        let mut random_of = Vec::with_capacity(g.len());
        let mut fixed_of: Vec<Option<usize>> = vec![None; g.len()];
        for (i, name) in g.nodes().iter().enumerate() {
            random_of.push(names.len());
            names.push(name.clone());
            base_of.push(i);
            is_fixed.push(false);
            if let Some(label) = label_of.get(&i) {
                fixed_of[i] = Some(names.len());
                names.push(label.clone());
                base_of.push(i);
                is_fixed.push(true);
            }
        }
        let edges: Vec<(String, String)> = g
            .edges
            .iter()
            .map(|&(p, c)| {
                let from = fixed_of[p].unwrap_or(random_of[p]);
                (names[from].clone(), names[random_of[c]].clone())
            })
            .collect();
        let split = Dag::new(&names, &edges)?;

        let superscripts = (0..split.len())
            .map(|v| {
                if is_fixed[v] {
                    return BTreeSet::new();
                }
                let anc = split.closure(v, true);
                anc.iter()
                    .enumerate()
                    .filter(|&(w, &a)| a && is_fixed[w])
                    .map(|(w, _)| split.nodes()[w].clone())
                    .collect()
            })
            .collect();

        Ok(SwigGraph {
            source: g.clone(),
            split,
            base_of,
            is_fixed,
            random_of,
            superscripts,
        })
    }

    pub fn source(&self) -> &Dag {
        &self.source
    }

    /// The split graph; random halves keep their base names, fixed halves
    /// are named by their intervention label.
    pub fn split_graph(&self) -> &Dag {
        &self.split
    }

    pub fn random_nodes(&self) -> Vec<Label> {
        (0..self.split.len())
            .filter(|&v| !self.is_fixed[v])
            .map(|v| self.label_at(v))
            .collect()
    }

    pub fn fixed_nodes(&self) -> Vec<(String, String)> {
        (0..self.split.len())
            .filter(|&v| self.is_fixed[v])
            .map(|v| {
                (
                    self.source.nodes()[self.base_of[v]].clone(),
                    self.split.nodes()[v].clone(),
                )
            })
            .collect()
    }

    fn label_at(&self, v: usize) -> Label {
        Label {
            base: self.split.nodes()[v].clone(),
            superscript: self.superscripts[v].clone(),
        }
    }

    /// Counterfactual label of the random half of `base`.
    pub fn label(&self, base: &str) -> Result<Label> {
        let i = self.source.index_of(base)?;
        Ok(self.label_at(self.random_of[i]))
    }

    /// Resolves a user-supplied name to a random node. A bare base name is
    /// accepted. An explicit superscript must include every fixed ancestor
    /// and may add other intervention labels, since interventions that do
    /// not reach a node leave it unchanged (`Y^{z,a}` is `Y^a` when `z` does
    /// not reach `Y`).
    fn resolve(&self, name: &str) -> Result<usize> {
        let (base, sup) = Label::parse(name)?;
        let Ok(i) = self.source.index_of(&base) else {
            return Err(if self.split.contains(&base) {
                Error::InvalidArgument(format!("`{base}` is a fixed node"))
            } else {
                Error::UnknownLabel(name.to_string())
            });
        };
        let v = self.random_of[i];
        match sup {
            Some(s)
                if !s.is_superset(&self.superscripts[v])
                    || !s.iter().all(|l| self.is_intervention_label(l)) =>
            {
                Err(Error::UnknownLabel(name.to_string()))
            }
            _ => Ok(v),
        }
    }

    fn is_intervention_label(&self, label: &str) -> bool {
        self.split.index_of(label).is_ok_and(|v| self.is_fixed[v])
    }

    fn resolve_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<String>> {
        names
            .iter()
            .map(|n| {
                self.resolve(n.as_ref())
                    .map(|v| self.split.nodes()[v].clone())
            })
            .collect()
    }

    fn conditioning<S: AsRef<str>>(&self, given: &[S]) -> Result<Vec<String>> {
        let mut cond = self.resolve_all(given)?;
        cond.extend(
            (0..self.split.len())
                .filter(|&v| self.is_fixed[v])
                .map(|v| self.split.nodes()[v].clone()),
        );
        Ok(cond)
    }

    /// d-separation on the SWIG. Fixed nodes are constants: they block every
    /// path through them.
    pub fn independent<S: AsRef<str>>(
        &self,
        counterfactual: &str,
        other: &[S],
        given: &[S],
    ) -> Result<bool> {
        let a = self.resolve_all(&[counterfactual])?;
        let b = self.resolve_all(other)?;
        let c = self.conditioning(given)?;
        self.split.d_separated(&a, &b, &c)
    }

    /// Rendered open path (with counterfactual labels) when the query fails.
    pub fn open_path<S: AsRef<str>>(
        &self,
        counterfactual: &str,
        other: &[S],
        given: &[S],
    ) -> Result<Option<String>> {
        let a = self.resolve_all(&[counterfactual])?;
        let b = self.resolve_all(other)?;
        let c = self.conditioning(given)?;
        Ok(self.split.open_path(&a, &b, &c)?.map(|p| {
            p.render_with(|n| {
                let v = self
                    .split
                    .index_of(n)
                    .expect("path nodes come from the split graph");
                if self.is_fixed[v] {
                    n.to_string()
                } else {
                    self.label_at(v).to_string()
                }
            })
        }))
    }

    /// Merges every split pair back into one node, recovering the source graph.
    pub fn collapse(&self) -> Result<Dag> {
        let names = self.source.nodes();
        let edges: Vec<(String, String)> = self
            .split
            .edges
            .iter()
            .map(|&(p, c)| {
                (
                    names[self.base_of[p]].clone(),
                    names[self.base_of[c]].clone(),
                )
            })
            .collect();
        Dag::new(names, &edges)
    }
}

impl Dag {
    pub fn swig<S: AsRef<str>>(&self, interventions: &[(S, S)]) -> Result<SwigGraph> {
        SwigGraph::new(self, interventions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_1a() -> Dag {
        Dag::new(
            &["Z", "X", "A", "U", "Y"],
            &[
                ("Z", "X"),
                ("Z", "A"),
                ("X", "A"),
                ("X", "Y"),
                ("A", "Y"),
                ("U", "X"),
                ("U", "Y"),
            ],
        )
        .unwrap()
    }

    fn labels(sw: &SwigGraph) -> Vec<String> {
        sw.random_nodes().iter().map(ToString::to_string).collect()
    }

    #[test]
    fn label_parsing_and_rendering() {
        let (b, s) = Label::parse("Y^{z,a}").unwrap();
        assert_eq!(b, "Y");
        let l = Label {
            base: b,
            superscript: s.unwrap(),
        };
        assert_eq!(l.to_string(), "Y^{a,z}");
        assert_eq!(Label::parse("Y^z").unwrap().1.unwrap().len(), 1);
        assert_eq!(Label::parse("Y").unwrap().1, None);
        assert!(Label::parse("Y^{z").is_err());
        assert!(Label::parse("^z").is_err());
    }

    #[test]
    fn figure_1b_labels() {
        let sw = figure_1a().swig(&[("Z", "z")]).unwrap();
        assert_eq!(labels(&sw), vec!["Z", "X^z", "A^z", "U", "Y^z"]);
        assert_eq!(sw.fixed_nodes(), vec![("Z".to_string(), "z".to_string())]);
        assert!(sw.split_graph().has_edge("z", "X"));
        assert!(!sw.split_graph().has_edge("Z", "X"));
    }

    #[test]
    fn figure_1c_labels() {
        let sw = figure_1a().swig(&[("Z", "z"), ("A", "a")]).unwrap();
        assert_eq!(labels(&sw), vec!["Z", "X^z", "A^z", "U", "Y^{a,z}"]);
        assert!(sw.split_graph().has_edge("a", "Y"));
        assert!(sw.split_graph().has_edge("X", "A"));
    }

    #[test]
    fn empty_intervention_is_identity() {
        let g = figure_1a();
        let none: [(&str, &str); 0] = [];
        let sw = g.swig(&none).unwrap();
        assert_eq!(sw.split_graph(), &g);
        assert_eq!(sw.collapse().unwrap(), g);
    }

    #[test]
    fn collapse_recovers_source() {
        let g = figure_1a();
        let sw = g.swig(&[("Z", "z"), ("A", "a")]).unwrap();
        assert_eq!(sw.collapse().unwrap(), g);
    }

    #[test]
    fn swig_independences() {
        let g = figure_1a();
        let b = g.swig(&[("Z", "z")]).unwrap();
        assert!(b.independent("Y^z", &["Z"], &[]).unwrap());

        let c = g.swig(&[("Z", "z"), ("A", "a")]).unwrap();
        assert!(c.independent("Y^{z,a}", &["Z"], &[]).unwrap());
        assert!(c.independent("Y^{z,a}", &["A^z"], &["X^z", "Z"]).unwrap());

        let d = g.swig(&[("A", "a")]).unwrap();
        assert!(d.independent("Y^a", &["A"], &["Z", "X"]).unwrap());
        assert!(!d.independent("Y^a", &["A"], &["X"]).unwrap());
        let witness = d.open_path("Y^a", &["A"], &["X"]).unwrap().unwrap();
        assert_eq!(witness, "Y^a <- U -> X <- Z -> A");
    }

    #[test]
    fn resolution_errors() {
        let g = figure_1a();
        let c = g.swig(&[("Z", "z"), ("A", "a")]).unwrap();
        assert!(matches!(
            c.independent("Y^a", &["Z"], &[]),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            c.independent("Q", &["Z"], &[]),
            Err(Error::UnknownLabel(_))
        ));
        assert!(c.independent("Y", &["z"], &[]).is_err());
        assert!(matches!(
            c.independent("Y^{a,q}", &["Z"], &[]),
            Err(Error::UnknownLabel(_))
        ));
        // a label may carry interventions that do not reach the node
        let only_a = g
            .remove_edges(&[("Z", "X")])
            .unwrap()
            .remove_edges(&[("X", "Y")])
            .unwrap();
        let c2 = only_a.swig(&[("Z", "z"), ("A", "a")]).unwrap();
        assert_eq!(c2.label("Y").unwrap().to_string(), "Y^a");
        assert!(c2.independent("Y^{z,a}", &["Z"], &[]).unwrap());
        assert!(matches!(g.swig(&[("Z", "X")]), Err(Error::InvalidLabel(_))));
        assert!(g.swig(&[("Q", "q")]).is_err());
    }
}
