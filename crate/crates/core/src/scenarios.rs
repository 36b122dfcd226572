//! Trial structures obtained from the full five-node graph by removing arrows,
//! their canonical parameterizations, and the relations each structure
//! implies among functionals and counterfactual means.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::estimands::{full_report_scm, EstimandReport, Family, IDENTIFICATION_TOLERANCE};
use crate::graph::Dag;
use crate::scm::DiscreteScm;
use crate::{ASSIGNMENT, COVARIATE, LATENT, OUTCOME, TREATMENT};

/// Unlicensed functionals must miss their target by more than this on the
/// canonical presets; likewise for inequalities between effects.
pub const MATERIAL_GAP: f64 = 1e-3;

/// Arrows of the full trial graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    ZX,
    ZA,
    XA,
    XY,
    AY,
    UX,
    UY,
}

impl Edge {
    pub const ALL: [Edge; 7] = [
        Edge::ZX,
        Edge::ZA,
        Edge::XA,
        Edge::XY,
        Edge::AY,
        Edge::UX,
        Edge::UY,
    ];

    pub fn endpoints(&self) -> (&'static str, &'static str) {
        match self {
            Edge::ZX => (ASSIGNMENT, COVARIATE),
            Edge::ZA => (ASSIGNMENT, TREATMENT),
            Edge::XA => (COVARIATE, TREATMENT),
            Edge::XY => (COVARIATE, OUTCOME),
            Edge::AY => (TREATMENT, OUTCOME),
            Edge::UX => (LATENT, COVARIATE),
            Edge::UY => (LATENT, OUTCOME),
        }
    }

    /// Accepts `ZX` or `Z->X`.
    pub fn parse(s: &str) -> Result<Edge> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let compact = compact.replace("->", "");
        Edge::ALL
            .into_iter()
            .find(|e| {
                let (p, c) = e.endpoints();
                compact == format!("{p}{c}")
            })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown edge `{s}`")))
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, c) = self.endpoints();
        write!(f, "{p}{c}")
    }
}

/// The full trial graph: Z, X, A, U, Y with every arrow present.
pub fn full_graph() -> Dag {
    let edges: Vec<(&str, &str)> = Edge::ALL.iter().map(Edge::endpoints).collect();
    Dag::new(&[ASSIGNMENT, COVARIATE, TREATMENT, LATENT, OUTCOME], &edges)
        .expect("the full trial graph is acyclic")
}

/// Canonical structure-1 model.
fn canonical_full() -> DiscreteScm {
    DiscreteScm::binary(
        full_graph(),
        &[
            (ASSIGNMENT, &[0.5]),
            (LATENT, &[0.5]),
            // rows (z, u)
            (COVARIATE, &[0.2, 0.6, 0.5, 0.9]),
            // rows (z, x)
            (TREATMENT, &[0.1, 0.3, 0.7, 0.9]),
            // rows (x, a, u)
            (OUTCOME, &[0.1, 0.3, 0.5, 0.7, 0.2, 0.5, 0.6, 0.9]),
        ],
    )
    .expect("canonical tables are valid")
}

/// Canonical structure-2 model, parameterized directly.
fn canonical_structure2(dag: Dag) -> DiscreteScm {
    DiscreteScm::binary(
        dag,
        &[
            (ASSIGNMENT, &[0.5]),
            (LATENT, &[0.5]),
            // rows u
            (COVARIATE, &[0.3, 0.7]),
            (TREATMENT, &[0.1, 0.3, 0.7, 0.9]),
            // rows (a, u)
            (OUTCOME, &[0.2, 0.4, 0.6, 0.8]),
        ],
    )
    .expect("canonical tables are valid")
}

/// Drops parents from every table of `base`, averaging over each dropped
/// parent with its marginal distribution under `base`.
fn marginalize_tables(base: &DiscreteScm, dag: Dag) -> Result<DiscreteScm> {
    let joint = base.exact_joint();
    let names = base.dag().nodes();
    let marginals: Vec<Vec<f64>> = names
        .iter()
        .map(|n| joint.marginalize(&[n]).map(|m| m.mass().to_vec()))
        .collect::<Result<_>>()?;
    let cards = base.cardinalities();
    let mut tables = Vec::with_capacity(names.len());
    for (i, cpt) in base.cpts().iter().enumerate() {
        let old_parents = base.dag().parent_indices(i);
        let new_parents = dag.parent_indices(i);
        let new_cards: Vec<usize> = new_parents.iter().map(|&p| cards[p]).collect();
        let new_rows: usize = new_cards.iter().product();
        let mut table = vec![0.0; new_rows * cpt.cardinality()];
        for r in 0..cpt.rows() {
            let values = cpt.row_values(r);
            let mut weight = 1.0;
            let mut kept = Vec::with_capacity(new_parents.len());
            for (&p, &v) in old_parents.iter().zip(&values) {
                if new_parents.contains(&p) {
                    kept.push(v);
                } else {
                    weight *= marginals[p][v];
                }
            }
            let target = kept
                .iter()
                .zip(&new_cards)
                .fold(0, |acc, (v, k)| acc * k + v);
            for (slot, &p) in table[target * cpt.cardinality()..(target + 1) * cpt.cardinality()]
                .iter_mut()
                .zip(cpt.row(r))
            {
                *slot += weight * p;
            }
        }
        tables.push(table);
    }
    DiscreteScm::new(dag, &cards, tables)
}

/// A trial structure: the full graph minus some arrows, with a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub removed: Vec<Edge>,
    pub scm: DiscreteScm,
    pub canonical: bool,
}

const REGISTRY: [(&str, &[Edge]); 4] = [
    ("structure1", &[]),
    ("structure2", &[Edge::ZX, Edge::XY]),
    ("structure7", &[Edge::XA]),
    ("structure8", &[Edge::XA, Edge::XY]),
];

fn lattice_name(removed: &[Edge]) -> String {
    REGISTRY
        .iter()
        .find(|(_, edges)| *edges == removed)
        .map(|(name, _)| name.to_string())
        .unwrap_or_else(|| {
            let parts: Vec<String> = removed.iter().map(ToString::to_string).collect();
            format!("lattice:{}", parts.join(","))
        })
}

impl ScenarioSpec {
    pub fn dag(&self) -> &Dag {
        self.scm.dag()
    }

    /// Same structure with a user-supplied model; its graph must have the
    /// same nodes and arrows, in any declaration order.
    pub fn with_scm(&self, scm: DiscreteScm) -> Result<ScenarioSpec> {
        let shape = |d: &Dag| {
            let nodes: BTreeSet<String> = d.nodes().iter().cloned().collect();
            let edges: BTreeSet<(String, String)> = d.edges().into_iter().collect();
            (nodes, edges)
        };
        if shape(scm.dag()) != shape(self.dag()) {
            return Err(Error::InvalidArgument(format!(
                "model graph does not match {}",
                self.name
            )));
        }
        Ok(ScenarioSpec {
            name: self.name.clone(),
            removed: self.removed.clone(),
            scm,
            canonical: false,
        })
    }
}

/// Sub-structure of the full graph with canonical tables. Removing exactly
/// `Z -> X` and `X -> Y` yields the directly parameterized structure 2; every
/// other member averages the structure-1 tables over removed parents.
pub fn lattice(removed: &[Edge]) -> Result<ScenarioSpec> {
    let mut removed = removed.to_vec();
    removed.sort();
    removed.dedup();
    let drop: Vec<(&str, &str)> = removed.iter().map(Edge::endpoints).collect();
    let dag = full_graph().remove_edges(&drop)?;
    let scm = if removed == [Edge::ZX, Edge::XY] {
        canonical_structure2(dag)
    } else {
        marginalize_tables(&canonical_full(), dag)?
    };
    Ok(ScenarioSpec {
        name: lattice_name(&removed),
        removed,
        scm,
        canonical: true,
    })
}

pub fn structure1() -> ScenarioSpec {
    lattice(&[]).expect("registered structure")
}

pub fn structure2() -> ScenarioSpec {
    lattice(&[Edge::ZX, Edge::XY]).expect("registered structure")
}

pub fn structure7() -> ScenarioSpec {
    lattice(&[Edge::XA]).expect("registered structure")
}

pub fn structure8() -> ScenarioSpec {
    lattice(&[Edge::XA, Edge::XY]).expect("registered structure")
}

/// Every subset of the seven arrows, in bitmask order.
pub fn all_lattice_members() -> Vec<ScenarioSpec> {
    (0u32..1 << Edge::ALL.len())
        .map(|mask| {
            let removed: Vec<Edge> = Edge::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            lattice(&removed).expect("every subset of the full graph is acyclic")
        })
        .collect()
}

/// Parses `structure1`, `structure2`, `structure7`, `structure8` or
/// `lattice:<edges>` with comma-separated edges such as `ZX,XY`.
pub fn by_name(name: &str) -> Result<ScenarioSpec> {
    if let Some(rest) = name.strip_prefix("lattice:") {
        let edges = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Edge::parse)
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::UnknownScenario(name.to_string()))?;
        return lattice(&edges);
    }
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, edges)| lattice(edges))
        .unwrap_or_else(|| Err(Error::UnknownScenario(name.to_string())))
}

/// What the graph alone implies for a structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationExpectation {
    /// No directed path from assignment to outcome avoids treatment.
    pub exclusion_holds: bool,
    /// Whether each functional family is licensed by its SWIG independence.
    pub licensed: BTreeMap<Family, bool>,
    pub assignment_required_ppe: bool,
    pub assignment_required_ate: bool,
    /// Adjusting for X alone fails although adjusting for (Z, X) works.
    pub covariate_adjustment_needs_assignment: bool,
}

impl RelationExpectation {
    pub fn is_licensed(&self, family: Family) -> bool {
        self.licensed.get(&family).copied().unwrap_or(false)
    }

    /// Licensed families that identify the per-protocol means.
    pub fn ppe_functionals(&self) -> Vec<Family> {
        self.licensed
            .iter()
            .filter(|&(&f, &ok)| {
                ok && match f {
                    Family::Phi | Family::ArmCrude => true,
                    Family::Chi | Family::Psi | Family::Crude | Family::AssignmentAdjusted => {
                        self.exclusion_holds
                    }
                    Family::Gamma => false,
                }
            })
            .map(|(&f, _)| f)
            .collect()
    }

    /// Licensed families that identify the treatment means.
    pub fn ate_functionals(&self) -> Vec<Family> {
        self.licensed
            .iter()
            .filter(|&(&f, &ok)| {
                ok && matches!(
                    f,
                    Family::Chi | Family::Psi | Family::Crude | Family::AssignmentAdjusted
                )
            })
            .map(|(&f, _)| f)
            .collect()
    }
}

fn licenses(dag: &Dag) -> Result<BTreeMap<Family, bool>> {
    let do_z = dag.swig(&[(ASSIGNMENT, "z")])?;
    let do_za = dag.swig(&[(ASSIGNMENT, "z"), (TREATMENT, "a")])?;
    let do_a = dag.swig(&[(TREATMENT, "a")])?;
    let za_randomized = do_za.independent(OUTCOME, &[ASSIGNMENT], &[])?;

    let mut out = BTreeMap::new();
    out.insert(
        Family::Gamma,
        do_z.independent(OUTCOME, &[ASSIGNMENT], &[])?,
    );
    out.insert(
        Family::Phi,
        za_randomized && do_za.independent(OUTCOME, &[TREATMENT], &[COVARIATE, ASSIGNMENT])?,
    );
    out.insert(
        Family::ArmCrude,
        za_randomized && do_za.independent(OUTCOME, &[TREATMENT], &[ASSIGNMENT])?,
    );
    out.insert(
        Family::Chi,
        do_a.independent(OUTCOME, &[TREATMENT], &[ASSIGNMENT, COVARIATE])?,
    );
    out.insert(
        Family::Psi,
        do_a.independent(OUTCOME, &[TREATMENT], &[COVARIATE])?,
    );
    out.insert(Family::Crude, do_a.independent(OUTCOME, &[TREATMENT], &[])?);
    out.insert(
        Family::AssignmentAdjusted,
        do_a.independent(OUTCOME, &[TREATMENT], &[ASSIGNMENT])?,
    );
    Ok(out)
}

/// Relations implied by the graph of `s`, from d-separation on its SWIGs.
pub fn expected_relations(s: &ScenarioSpec) -> Result<RelationExpectation> {
    let dag = s.dag();
    let exclusion_holds = !dag.has_directed_path(ASSIGNMENT, OUTCOME, &[TREATMENT])?;
    let licensed = licenses(dag)?;
    let z_free = licensed[&Family::Psi] || licensed[&Family::Crude];
    Ok(RelationExpectation {
        exclusion_holds,
        assignment_required_ate: !z_free,
        assignment_required_ppe: !(exclusion_holds && z_free),
        covariate_adjustment_needs_assignment: licensed[&Family::Chi] && !licensed[&Family::Psi],
        licensed,
    })
}

/// One checked relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationCheck {
    pub name: String,
    /// Human-readable claim, e.g. `|phi - E[Y^{z,a}]| <= 1e-10`.
    pub claim: String,
    pub observed: f64,
    pub pass: bool,
}

fn max_gap(report: &EstimandReport, family: Family) -> f64 {
    let truth = report
        .truth
        .as_ref()
        .expect("scenario reports carry truths");
    let (kz, ka) = report.levels;
    family
        .members(kz, ka)
        .into_iter()
        .map(|f| match (report.value(f), truth.target(f)) {
            (Some(v), Some(t)) => (v - t).abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Checks every expected relation against the exact model. Inequalities
/// (unlicensed functionals missing their target, unequal effects) are only
/// asserted for canonical presets.
pub fn verify_relations(s: &ScenarioSpec) -> Result<(EstimandReport, Vec<RelationCheck>)> {
    let expect = expected_relations(s)?;
    let report = full_report_scm(&s.scm)?;
    let truth = report.truth.clone().expect("scenario reports carry truths");
    let mut checks = Vec::new();

    for family in Family::ALL {
        let gap = max_gap(&report, family);
        if expect.is_licensed(family) {
            checks.push(RelationCheck {
                name: format!("identified.{}", family.name()),
                claim: format!(
                    "max |{} - target| <= {IDENTIFICATION_TOLERANCE:e}",
                    family.name()
                ),
                observed: gap,
                pass: gap <= IDENTIFICATION_TOLERANCE,
            });
        } else if s.canonical {
            checks.push(RelationCheck {
                name: format!("biased.{}", family.name()),
                claim: format!("max |{} - target| > {MATERIAL_GAP:e}", family.name()),
                observed: gap,
                pass: gap > MATERIAL_GAP,
            });
        }
    }

    let effect_gap = (truth.ppe - truth.ate).abs();
    if expect.exclusion_holds {
        checks.push(RelationCheck {
            name: "equal.ppe_ate".into(),
            claim: format!("|ppe - ate| <= {IDENTIFICATION_TOLERANCE:e}"),
            observed: effect_gap,
            pass: effect_gap <= IDENTIFICATION_TOLERANCE,
        });
        if expect.is_licensed(Family::Phi) {
            let (kz, ka) = report.levels;
            let mut spread: f64 = 0.0;
            for a in 0..ka {
                let vals: Vec<f64> = (0..kz)
                    .filter_map(|z| report.value(crate::estimands::Functional::Phi(z, a)))
                    .collect();
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                spread = spread.max(hi - lo);
            }
            checks.push(RelationCheck {
                name: "constant_in_z.phi".into(),
                claim: format!("max_a spread_z phi(z,a) <= {IDENTIFICATION_TOLERANCE:e}"),
                observed: spread,
                pass: spread <= IDENTIFICATION_TOLERANCE,
            });
        }
    } else if s.canonical {
        checks.push(RelationCheck {
            name: "unequal.ppe_ate".into(),
            claim: format!("|ppe - ate| > {MATERIAL_GAP:e}"),
            observed: effect_gap,
            pass: effect_gap > MATERIAL_GAP,
        });
    }

    checks.push(RelationCheck {
        name: "positivity.zxa".into(),
        claim: "P(Z=z, X=x, A=a) > 0 for all cells".into(),
        observed: report.positivity.zero_cells.len() as f64,
        pass: report.positivity.holds() || !s.canonical,
    });
    Ok((report, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_graphs() {
        let g1 = full_graph();
        assert_eq!(structure1().dag(), &g1);
        assert_eq!(
            structure2().dag(),
            &g1.remove_edges(&[("Z", "X"), ("X", "Y")]).unwrap()
        );
        assert_eq!(structure7().dag(), &g1.remove_edges(&[("X", "A")]).unwrap());
        assert_eq!(structure8().name, "structure8");
        assert_eq!(by_name("lattice:ZX,XY").unwrap(), structure2());
        assert_eq!(by_name("lattice:").unwrap(), structure1());
        assert_eq!(by_name("lattice:UY").unwrap().name, "lattice:UY");
        assert!(matches!(
            by_name("structure3"),
            Err(Error::UnknownScenario(_))
        ));
        assert!(matches!(
            by_name("lattice:ZY"),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn edge_parsing() {
        assert_eq!(Edge::parse("Z->X").unwrap(), Edge::ZX);
        assert_eq!(Edge::parse("U -> Y").unwrap(), Edge::UY);
        assert!(Edge::parse("YZ").is_err());
    }

    #[test]
    fn structure7_tables_average_out_covariate() {
        let s7 = structure7();
        let a = s7.scm.cpt("A").unwrap();
        // P(X=1) = 0.55 under structure 1, so P(A=1 | z) = 0.45 p(z,0) + 0.55 p(z,1)
        assert!((a.prob(1, &[0]) - (0.45 * 0.1 + 0.55 * 0.3)).abs() < 1e-12);
        assert!((a.prob(1, &[1]) - (0.45 * 0.7 + 0.55 * 0.9)).abs() < 1e-12);
    }

    #[test]
    fn structure2_uses_direct_tables() {
        let s2 = structure2();
        assert_eq!(s2.scm.cpt("X").unwrap().prob(1, &[1]), 0.7);
        assert_eq!(s2.scm.cpt("Y").unwrap().prob(1, &[1, 0]), 0.6);
    }

    #[test]
    fn structure1_expectations() {
        let e = expected_relations(&structure1()).unwrap();
        assert!(!e.exclusion_holds);
        assert!(e.is_licensed(Family::Phi) && e.is_licensed(Family::Chi));
        assert!(!e.is_licensed(Family::Psi));
        assert!(e.assignment_required_ppe && e.assignment_required_ate);
    }

    #[test]
    fn structure2_expectations() {
        let e = expected_relations(&structure2()).unwrap();
        assert!(e.exclusion_holds);
        assert!(e.is_licensed(Family::Psi));
        assert!(!e.assignment_required_ppe && !e.assignment_required_ate);
    }

    #[test]
    fn structure7_expectations() {
        let e = expected_relations(&structure7()).unwrap();
        assert!(!e.exclusion_holds);
        assert!(e.is_licensed(Family::ArmCrude));
        assert!(e.is_licensed(Family::AssignmentAdjusted));
        assert!(e.ppe_functionals().contains(&Family::ArmCrude));
    }

    #[test]
    fn structure8_expectations() {
        let e = expected_relations(&structure8()).unwrap();
        assert!(e.exclusion_holds);
        assert!(e.is_licensed(Family::Crude));
        assert!(!e.is_licensed(Family::Psi));
        assert!(e.is_licensed(Family::Chi));
        assert!(e.covariate_adjustment_needs_assignment);
        assert!(!e.assignment_required_ate);
    }

    #[test]
    fn registered_structures_verify() {
        for s in [structure1(), structure2(), structure7(), structure8()] {
            let (_, checks) = verify_relations(&s).unwrap();
            for c in &checks {
                assert!(
                    c.pass,
                    "{}: {} failed (observed {})",
                    s.name, c.claim, c.observed
                );
            }
        }
    }
}
