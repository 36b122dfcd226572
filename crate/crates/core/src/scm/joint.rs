use std::fmt;

use crate::error::{Error, Result};

/// Total-mass tolerance for joint tables.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Exact probability mass over the cross-product of finite variables.
///
/// Cells are laid out row-major: the first variable is the most significant
/// digit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<String>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    mass: Vec<f64>,
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

impl JointTable {
    pub fn new(vars: Vec<String>, cards: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        if vars.len() != cards.len() {
            return Err(Error::InvalidArgument(
                "variables and cardinalities differ in length".into(),
            ));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::DuplicateNode(v.clone()));
            }
        }
        let cells: usize = cards.iter().product();
        if mass.len() != cells {
            return Err(Error::InvalidArgument(format!(
                "expected {cells} cells, got {}",
                mass.len()
            )));
        }
        if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "negative or non-finite mass {bad}"
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "total mass {total} is not 1"
            )));
        }
        let strides = strides_for(&cards);
        Ok(JointTable {
            vars,
            cards,
            strides,
            mass,
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn index_of(&self, var: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::UnknownNode(var.to_string()))
    }

    pub fn cardinality(&self, var: &str) -> Result<usize> {
        Ok(self.cards[self.index_of(var)?])
    }

    /// Values of every variable at flat cell index `cell`.
    pub fn decode(&self, cell: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.cards)
            .map(|(&s, &k)| (cell / s) % k)
            .collect()
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    /// Mass of the cell with the given full assignment.
    pub fn cell(&self, values: &[usize]) -> f64 {
        self.mass[self.encode(values)]
    }

    fn resolve_event(&self, event: &[(&str, usize)]) -> Result<Vec<(usize, usize)>> {
        event
            .iter()
            .map(|&(name, value)| {
                let i = self.index_of(name)?;
                if value >= self.cards[i] {
                    return Err(Error::ValueOutOfRange {
                        node: name.to_string(),
                        value,
                        cardinality: self.cards[i],
                    });
                }
                Ok((i, value))
            })
            .collect()
    }

    fn cells_matching<'a>(
        &'a self,
        event: &'a [(usize, usize)],
    ) -> impl Iterator<Item = usize> + 'a {
        (0..self.mass.len()).filter(move |&c| {
            event
                .iter()
                .all(|&(i, v)| (c / self.strides[i]) % self.cards[i] == v)
        })
    }

    /// Probability of a (partial) assignment.
    pub fn prob(&self, event: &[(&str, usize)]) -> Result<f64> {
        let event = self.resolve_event(event)?;
        Ok(self.cells_matching(&event).map(|c| self.mass[c]).sum())
    }

    /// Marginal table over `keep`, in this table's variable order.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointTable> {
        let mut keep_idx = keep
            .iter()
            .map(|k| self.index_of(k.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        keep_idx.sort_unstable();
        keep_idx.dedup();
        let vars: Vec<String> = keep_idx.iter().map(|&i| self.vars[i].clone()).collect();
        let cards: Vec<usize> = keep_idx.iter().map(|&i| self.cards[i]).collect();
        let strides = strides_for(&cards);
        let mut mass = vec![0.0; cards.iter().product()];
        for (c, &m) in self.mass.iter().enumerate() {
            let target: usize = keep_idx
                .iter()
                .zip(&strides)
                .map(|(&i, s)| ((c / self.strides[i]) % self.cards[i]) * s)
                .sum();
            mass[target] += m;
        }
        Ok(JointTable {
            vars,
            cards,
            strides,
            mass,
        })
    }

    /// Sums out the listed variables.
    pub fn hide<S: AsRef<str>>(&self, hidden: &[S]) -> Result<JointTable> {
        for h in hidden {
            self.index_of(h.as_ref())?;
        }
        let keep: Vec<&str> = self
            .vars
            .iter()
            .map(String::as_str)
            .filter(|v| !hidden.iter().any(|h| h.as_ref() == *v))
            .collect();
        self.marginalize(&keep)
    }

    /// `E[target | given]`, with the target's levels `0..k` as its values.
    pub fn cond_mean(&self, target: &str, given: &[(&str, usize)]) -> Result<f64> {
        let k = self.cardinality(target)?;
        let values: Vec<f64> = (0..k).map(|v| v as f64).collect();
        self.cond_mean_with_values(target, given, &values)
    }

    /// `E[value(target) | given]` for an explicit value map.
    pub fn cond_mean_with_values(
        &self,
        target: &str,
        given: &[(&str, usize)],
        values: &[f64],
    ) -> Result<f64> {
        let t = self.index_of(target)?;
        if values.len() != self.cards[t] {
            return Err(Error::InvalidArgument(format!(
                "value map for `{target}` has {} entries, expected {}",
                values.len(),
                self.cards[t]
            )));
        }
        let event = self.resolve_event(given)?;
        let mut denom = 0.0;
        let mut num = 0.0;
        for c in self.cells_matching(&event) {
            let m = self.mass[c];
            denom += m;
            num += m * values[(c / self.strides[t]) % self.cards[t]];
        }
        if denom <= 0.0 {
            return Err(Error::ZeroProbability(render_event(given)));
        }
        Ok(num / denom)
    }

    pub fn mean(&self, target: &str) -> Result<f64> {
        self.cond_mean(target, &[])
    }

    /// Strict positivity of the marginal over `over`.
    pub fn check_positivity<S: AsRef<str>>(&self, over: &[S]) -> Result<Positivity> {
        let marginal = self.marginalize(over)?;
        let zero_cells = (0..marginal.len())
            .filter(|&c| marginal.mass[c] <= 0.0)
            .map(|c| {
                marginal
                    .vars
                    .iter()
                    .cloned()
                    .zip(marginal.decode(c))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        Ok(Positivity { zero_cells })
    }
}

pub(crate) fn render_event(event: &[(&str, usize)]) -> String {
    if event.is_empty() {
        return "(empty event)".into();
    }
    event
        .iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Outcome of a positivity check: the cells of the marginal with zero mass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Positivity {
    pub zero_cells: Vec<Vec<(String, usize)>>,
}

impl Positivity {
    pub fn holds(&self) -> bool {
        self.zero_cells.is_empty()
    }

    pub fn rendered_cells(&self) -> Vec<String> {
        self.zero_cells
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|(n, v)| format!("{n}={v}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    }
}

impl fmt::Display for Positivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds() {
            write!(f, "positivity holds")
        } else {
            write!(f, "zero cells: {}", self.rendered_cells().join("; "))
        }
    }
}
