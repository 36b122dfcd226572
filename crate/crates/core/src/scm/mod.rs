//! Discrete structural causal models.
//!
//! A [`DiscreteScm`] attaches a conditional probability table to every node of
//! a [`Dag`]. The joint law is the product of the tables, which is the law of
//! a structural model with mutually independent errors. Interventions replace
//! a node's table by a point mass (truncated factorization).

mod joint;
mod text;

pub use joint::{JointTable, Positivity, MASS_TOLERANCE};
pub use text::parse_scm;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng::StreamRng;

/// Rows of a conditional probability table must sum to one within this.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// `P(node = v | parents)` for one node. Rows are indexed by the parent
/// assignment in canonical parent order, first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    cardinality: usize,
    parent_cards: Vec<usize>,
    probs: Vec<f64>,
}

impl Cpt {
    pub fn new(
        cardinality: usize,
        parent_cards: Vec<usize>,
        probs: Vec<f64>,
    ) -> std::result::Result<Self, String> {
        if cardinality < 2 {
            return Err(format!("cardinality {cardinality} is below 2"));
        }
        let rows: usize = parent_cards.iter().product();
        if probs.len() != rows * cardinality {
            return Err(format!(
                "expected {} entries ({rows} rows of {cardinality}), got {}",
                rows * cardinality,
                probs.len()
            ));
        }
        for (r, row) in probs.chunks(cardinality).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(format!("row {r} has a negative or non-finite entry"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(format!("row {r} sums to {total}"));
            }
        }
        Ok(Cpt {
            cardinality,
            parent_cards,
            probs,
        })
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn rows(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        parent_values
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (v, k)| acc * k + v)
    }

    /// Parent assignment for row `r`.
    pub fn row_values(&self, mut r: usize) -> Vec<usize> {
        let mut values = vec![0; self.parent_cards.len()];
        for (slot, k) in values.iter_mut().zip(&self.parent_cards).rev() {
            *slot = r % k;
            r /= k;
        }
        values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.cardinality..(r + 1) * self.cardinality]
    }

    pub fn prob(&self, value: usize, parent_values: &[usize]) -> f64 {
        self.row(self.row_index(parent_values))[value]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn point_mass(&self, value: usize) -> Cpt {
        let mut probs = vec![0.0; self.probs.len()];
        for r in 0..self.rows() {
            probs[r * self.cardinality + value] = 1.0;
        }
        Cpt {
            cardinality: self.cardinality,
            parent_cards: self.parent_cards.clone(),
            probs,
        }
    }
}

/// Finite-valued structural causal model over a DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    dag: Dag,
    cpts: Vec<Cpt>,
    outcome: usize,
}

impl DiscreteScm {
    /// Builds a model from one flattened table per node (in node order). The
    /// outcome defaults to the node named `Y`, or the last node otherwise.
    pub fn new(dag: Dag, cardinalities: &[usize], tables: Vec<Vec<f64>>) -> Result<Self> {
        if cardinalities.len() != dag.len() || tables.len() != dag.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} cardinalities and tables",
                dag.len()
            )));
        }
        let mut cpts = Vec::with_capacity(dag.len());
        for (i, probs) in tables.into_iter().enumerate() {
            let parent_cards = dag
                .parent_indices(i)
                .iter()
                .map(|&p| cardinalities[p])
                .collect();
            let cpt = Cpt::new(cardinalities[i], parent_cards, probs).map_err(|reason| {
                Error::InvalidTable {
                    node: dag.nodes()[i].clone(),
                    reason,
                }
            })?;
            cpts.push(cpt);
        }
        let outcome = dag.index_of("Y").unwrap_or(dag.len().saturating_sub(1));
        Ok(DiscreteScm { dag, cpts, outcome })
    }

    /// Binary model from `P(node = 1 | parent row)` for every node and row.
    pub fn binary(dag: Dag, p_one: &[(&str, &[f64])]) -> Result<Self> {
        let mut tables = vec![None; dag.len()];
        for &(name, ones) in p_one {
            let i = dag.index_of(name)?;
            let rows = 1usize << dag.parent_indices(i).len();
            if ones.len() != rows {
                return Err(Error::InvalidTable {
                    node: name.to_string(),
                    reason: format!("expected {rows} rows, got {}", ones.len()),
                });
            }
            tables[i] = Some(
                ones.iter()
                    .flat_map(|&p| [1.0 - p, p])
                    .collect::<Vec<f64>>(),
            );
        }
        let tables = tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| Error::InvalidTable {
                    node: dag.nodes()[i].clone(),
                    reason: "missing table".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cards = vec![2; dag.len()];
        Self::new(dag, &cards, tables)
    }

    pub fn with_outcome(mut self, outcome: &str) -> Result<Self> {
        self.outcome = self.dag.index_of(outcome)?;
        Ok(self)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn outcome(&self) -> &str {
        &self.dag.nodes()[self.outcome]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.cpts.iter().map(Cpt::cardinality).collect()
    }

    pub fn cardinality(&self, node: &str) -> Result<usize> {
        Ok(self.cpts[self.dag.index_of(node)?].cardinality)
    }

    pub fn cpt(&self, node: &str) -> Result<&Cpt> {
        Ok(&self.cpts[self.dag.index_of(node)?])
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// `P(v_1, ..., v_k) = prod_i P(v_i | parents_i)` over every node.
    pub fn exact_joint(&self) -> JointTable {
        let cards = self.cardinalities();
        let total: usize = cards.iter().product();
        let mut values = vec![0usize; cards.len()];
        let mut mass = Vec::with_capacity(total);
        let mut parent_buf = Vec::new();
        for _ in 0..total {
            let mut p = 1.0;
            for (i, cpt) in self.cpts.iter().enumerate() {
                parent_buf.clear();
                parent_buf.extend(self.dag.parent_indices(i).iter().map(|&q| values[q]));
                p *= cpt.prob(values[i], &parent_buf);
                if p == 0.0 {
                    break;
                }
            }
            mass.push(p);
            // odometer increment, last variable fastest
            for d in (0..values.len()).rev() {
                values[d] += 1;
                if values[d] < cards[d] {
                    break;
                }
                values[d] = 0;
            }
        }
        // The product of row-stochastic tables sums to one up to rounding.
        JointTable::new(self.dag.nodes().to_vec(), cards, mass)
            .expect("product of valid tables is a valid joint")
    }

    /// Replaces each intervened node's table by a point mass at the set value.
    pub fn intervene(&self, set_to: &[(&str, usize)]) -> Result<DiscreteScm> {
        let mut out = self.clone();
        for &(name, value) in set_to {
            let i = self.dag.index_of(name)?;
            let k = self.cpts[i].cardinality;
            if value >= k {
                return Err(Error::ValueOutOfRange {
                    node: name.to_string(),
                    value,
                    cardinality: k,
                });
            }
            out.cpts[i] = self.cpts[i].point_mass(value);
        }
        Ok(out)
    }

    /// `E[target]` under the intervention, using levels `0..k` as values.
    pub fn counterfactual_mean(&self, set_to: &[(&str, usize)], target: &str) -> Result<f64> {
        let k = self.cardinality(target)?;
        let values: Vec<f64> = (0..k).map(|v| v as f64).collect();
        self.counterfactual_mean_with_values(set_to, target, &values)
    }

    pub fn counterfactual_mean_with_values(
        &self,
        set_to: &[(&str, usize)],
        target: &str,
        values: &[f64],
    ) -> Result<f64> {
        self.dag.index_of(target)?;
        if set_to.iter().any(|&(n, _)| n == target) {
            return Err(Error::TargetIntervened(target.to_string()));
        }
        self.intervene(set_to)?
            .exact_joint()
            .cond_mean_with_values(target, &[], values)
    }

    /// Observed-data law: the exact joint with `hide` summed out.
    pub fn observed_joint<S: AsRef<str>>(&self, hide: &[S]) -> Result<JointTable> {
        for h in hide {
            let h = h.as_ref();
            self.dag.index_of(h)?;
            if h == self.outcome() {
                return Err(Error::InvalidHide(format!("the outcome `{h}`")));
            }
        }
        if !self.dag.is_empty()
            && self
                .dag
                .nodes()
                .iter()
                .all(|n| hide.iter().any(|h| h.as_ref() == n))
        {
            return Err(Error::InvalidHide("every node".into()));
        }
        self.exact_joint().hide(hide)
    }

    /// Random model over `dag` with every table row drawn from a floored
    /// uniform simplex: each entry is at least `floor`, so strict positivity
    /// always holds.
    pub fn random(
        dag: Dag,
        cardinalities: &[usize],
        rng: &mut StreamRng,
        floor: f64,
    ) -> Result<Self> {
        if cardinalities.len() != dag.len() {
            return Err(Error::InvalidArgument(
                "one cardinality per node required".into(),
            ));
        }
        let tables = (0..dag.len())
            .map(|i| {
                let k = cardinalities[i];
                let rows: usize = dag
                    .parent_indices(i)
                    .iter()
                    .map(|&p| cardinalities[p])
                    .product();
                let free = 1.0 - floor * k as f64;
                (0..rows)
                    .flat_map(|_| {
                        let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
                        let total: f64 = raw.iter().sum();
                        let mut row: Vec<f64> =
                            raw.iter().map(|r| floor + free * r / total).collect();
                        // absorb rounding so the row sums to one
                        let excess: f64 = row.iter().sum::<f64>() - 1.0;
                        row[k - 1] -= excess;
                        row
                    })
                    .collect()
            })
            .collect();
        Self::new(dag, cardinalities, tables)
    }

    /// Renders the model in the text format read by [`parse_scm`].
    pub fn to_text(&self) -> String {
        text::render(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> DiscreteScm {
        let dag = Dag::new(&["Z", "A", "Y"], &[("Z", "A"), ("A", "Y")]).unwrap();
        DiscreteScm::binary(
            dag,
            &[("Z", &[0.3]), ("A", &[0.2, 0.9]), ("Y", &[0.1, 0.6])],
        )
        .unwrap()
    }

    #[test]
    fn cpt_validation() {
        assert!(Cpt::new(2, vec![], vec![0.5, 0.5]).is_ok());
        assert!(Cpt::new(1, vec![], vec![1.0]).is_err());
        assert!(Cpt::new(2, vec![], vec![0.5, 0.6]).is_err());
        assert!(Cpt::new(2, vec![2], vec![0.5, 0.5]).is_err());
        assert!(Cpt::new(2, vec![], vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn cpt_row_indexing() {
        let cpt = Cpt::new(2, vec![2, 3], vec![0.5; 12]).unwrap();
        assert_eq!(cpt.row_index(&[1, 2]), 5);
        assert_eq!(cpt.row_values(5), vec![1, 2]);
        assert_eq!(cpt.row_values(3), vec![1, 0]);
    }

    #[test]
    fn independent_fair_coins() {
        let none: [(&str, &str); 0] = [];
        let dag = Dag::new(&["Z", "Y"], &none).unwrap();
        let m = DiscreteScm::binary(dag, &[("Z", &[0.5]), ("Y", &[0.5])]).unwrap();
        assert_eq!(m.exact_joint().mass(), &[0.25; 4]);
    }

    #[test]
    fn deterministic_chain_is_point_mass() {
        let dag = Dag::new(&["Z", "A", "Y"], &[("Z", "A"), ("A", "Y")]).unwrap();
        let m = DiscreteScm::binary(
            dag,
            &[("Z", &[1.0]), ("A", &[1.0, 0.0]), ("Y", &[0.0, 1.0])],
        )
        .unwrap();
        let j = m.exact_joint();
        // Z=1 -> A=0 -> Y=0
        assert_eq!(j.cell(&[1, 0, 0]), 1.0);
        assert_eq!(j.mass().iter().filter(|&&p| p > 0.0).count(), 1);
    }

    #[test]
    fn intervention_basics() {
        let m = chain();
        assert_eq!(m.intervene(&[]).unwrap(), m);
        let j = m.intervene(&[("Z", 1)]).unwrap().exact_joint();
        assert_eq!(j.prob(&[("Z", 1)]).unwrap(), 1.0);
        assert!(matches!(
            m.intervene(&[("Z", 2)]),
            Err(Error::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            m.intervene(&[("Q", 0)]),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn counterfactual_means() {
        let m = chain();
        // do(Z=1): P(Y=1) = 0.9 * 0.6 + 0.1 * 0.1
        let v = m.counterfactual_mean(&[("Z", 1)], "Y").unwrap();
        assert!((v - 0.55).abs() < 1e-15);
        assert_eq!(m.counterfactual_mean(&[("A", 1)], "Y").unwrap(), 0.6);
        assert!(matches!(
            m.counterfactual_mean(&[("Y", 1)], "Y"),
            Err(Error::TargetIntervened(_))
        ));
    }

    #[test]
    fn hide_rules() {
        let m = chain();
        assert!(matches!(
            m.observed_joint(&["Y"]),
            Err(Error::InvalidHide(_))
        ));
        assert!(m.observed_joint(&["Q"]).is_err());
        let none: [&str; 0] = [];
        assert_eq!(m.observed_joint(&none).unwrap(), m.exact_joint());
        let with_other_outcome = m.clone().with_outcome("A").unwrap();
        assert!(with_other_outcome.observed_joint(&["Y"]).is_ok());
        assert!(with_other_outcome.observed_joint(&["Z", "Y"]).is_ok());
    }
}
