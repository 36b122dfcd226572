//! Flat key-value reports in three renderings: `key=value` lines for
//! machines, CSV for plotting tools and an aligned table for people.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimands::{EstimandReport, Family, Functional};
use crate::sampling::{EstimateWithCi, FalsificationResult, Provenance};
use crate::scenarios::{RelationCheck, RelationExpectation};

/// Significant digits in structured and CSV output.
pub const STRUCTURED_DIGITS: usize = 12;
/// Significant digits in human-readable tables.
pub const TABLE_DIGITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Structured,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "structured" => Ok(Format::Structured),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Flag(bool),
    Text(String),
}

impl Value {
    fn render(&self, digits: usize) -> String {
        match self {
            Value::Num(v) => fmt_sig(*v, digits),
            Value::Int(v) => v.to_string(),
            Value::Flag(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }
}

/// `%g`-style rendering with `digits` significant digits: fixed notation for
/// decimal exponents in `-4..digits`, scientific otherwise, trailing zeros
/// removed.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific rendering has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Ordered key-value pairs. Keys are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value) {
        let key = key.into();
        debug_assert!(self.get(&key).is_none(), "duplicate report key {key}");
        self.entries.push((key, value));
    }

    pub fn num(&mut self, key: impl Into<String>, v: f64) {
        self.push(key, Value::Num(v));
    }

    pub fn flag(&mut self, key: impl Into<String>, b: bool) {
        self.push(key, Value::Flag(b));
    }

    pub fn text(&mut self, key: impl Into<String>, s: impl Into<String>) {
        self.push(key, Value::Text(s.into()));
    }

    pub fn int(&mut self, key: impl Into<String>, v: u64) {
        self.push(key, Value::Int(v));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn extend(&mut self, other: Report) {
        for (k, v) in other.entries {
            self.push(k, v);
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                let mut out = String::new();
                for (k, v) in &self.entries {
                    let _ = writeln!(out, "{k}={}", v.render(STRUCTURED_DIGITS));
                }
                out
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["key", "value"]).expect("in-memory write");
                for (k, v) in &self.entries {
                    w.write_record([k.as_str(), &v.render(STRUCTURED_DIGITS)])
                        .expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
            }
            Format::Text => {
                let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                let mut out = String::new();
                for (k, v) in &self.entries {
                    let _ = writeln!(out, "{k:<width$}  {}", v.render(TABLE_DIGITS));
                }
                out
            }
        }
    }

    /// Reads structured output back into text values.
    pub fn parse_structured(text: &str) -> Result<Vec<(String, String)>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse {
                        line: i + 1,
                        message: format!("expected key=value, got `{l}`"),
                    })
            })
            .collect()
    }
}

fn value_or_reason(r: &mut Report, key: String, v: &std::result::Result<f64, String>) {
    match v {
        Ok(x) => r.num(key, *x),
        Err(e) => r.text(key, format!("undefined ({e})")),
    }
}

/// Functionals, contrasts, weighting twins, positivity and, when present,
/// truths and per-family verdicts.
pub fn estimand_section(rep: &EstimandReport) -> Report {
    let mut r = Report::new();
    for e in rep.means.iter().chain(&rep.contrasts).chain(&rep.ipw) {
        value_or_reason(&mut r, e.functional.key(), &e.value);
    }
    if rep.positivity.holds() {
        r.text("positivity", "holds");
    } else {
        r.text(
            "positivity",
            format!("violated: {}", rep.positivity.rendered_cells().join(";")),
        );
    }
    if let Some(t) = &rep.truth {
        for (z, v) in t.y_z.iter().enumerate() {
            r.num(format!("truth.y_z{z}"), *v);
        }
        for (z, row) in t.y_za.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                r.num(format!("truth.y_z{z}a{a}"), *v);
            }
        }
        for (a, v) in t.y_a.iter().enumerate() {
            r.num(format!("truth.y_a{a}"), *v);
        }
        r.num("truth.itt", t.itt);
        r.num("truth.ppe", t.ppe);
        r.num("truth.ate", t.ate);
        for family in Family::ALL {
            if let Some(v) = rep.verdict(family) {
                r.flag(format!("verdict.{}", family.name()), v);
            }
        }
    }
    r
}

/// What the graph implies: exclusion, licensed families and whether each
/// effect needs assignment information.
pub fn expectation_section(e: &RelationExpectation) -> Report {
    let mut r = Report::new();
    r.flag("expected.exclusion", e.exclusion_holds);
    for family in Family::ALL {
        r.flag(
            format!("expected.licensed.{}", family.name()),
            e.is_licensed(family),
        );
    }
    r.flag(
        "expected.assignment_required.ppe",
        e.assignment_required_ppe,
    );
    r.flag(
        "expected.assignment_required.ate",
        e.assignment_required_ate,
    );
    r.flag(
        "expected.covariate_adjustment_needs_assignment",
        e.covariate_adjustment_needs_assignment,
    );
    r
}

pub fn relation_section(checks: &[RelationCheck]) -> Report {
    let mut r = Report::new();
    for c in checks {
        r.text(
            format!("relation.{}", c.name),
            if c.pass { "pass" } else { "fail" },
        );
        r.num(format!("relation.{}.observed", c.name), c.observed);
    }
    r.flag("relations.all_pass", checks.iter().all(|c| c.pass));
    r
}

pub fn provenance_section(p: &Provenance) -> Report {
    let mut r = Report::new();
    r.text("data.scenario", &p.scenario);
    r.int("data.seed", p.seed);
    r.int("data.n", p.n as u64);
    r.text("data.generator", &p.generator);
    r
}

/// Bootstrap summaries under `<key>.estimate`, `<key>.ci_low`, ...
pub fn bootstrap_section(results: &[(Functional, Result<EstimateWithCi>)]) -> Report {
    let mut r = Report::new();
    for (f, res) in results {
        let k = f.key();
        match res {
            Ok(e) => {
                r.num(format!("{k}.estimate"), e.point);
                r.num(format!("{k}.ci_low"), e.ci_low);
                r.num(format!("{k}.ci_high"), e.ci_high);
                r.num(format!("{k}.se"), e.se);
                r.int(format!("{k}.replicates"), e.replicates as u64);
                r.int(format!("{k}.failed"), e.failed as u64);
            }
            Err(e) => r.text(format!("{k}.estimate"), format!("undefined ({e})")),
        }
    }
    r
}

pub fn falsification_section(f: &FalsificationResult) -> Report {
    let mut r = Report::new();
    r.num("falsify.statistic", f.statistic);
    r.num("falsify.p_value", f.p_value);
    r.num("falsify.alpha", f.alpha);
    r.flag("falsify.reject", f.reject);
    r.int("falsify.replicates", f.replicates as u64);
    r.int("falsify.failed", f.failed as u64);
    r.num("falsify.phi_z_spread", f.decomposition.phi_z_spread);
    r.num("falsify.psi_chi_gap", f.decomposition.psi_chi_gap);
    for ((z, a), d) in &f.decomposition.contrasts {
        r.num(format!("falsify.contrast.z{z}a{a}"), *d);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.5, 12), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_sig(1.0 / 3.0, 4), "0.3333");
        assert_eq!(fmt_sig(-0.0123456, 4), "-0.01235");
        assert_eq!(fmt_sig(123456.0, 4), "1.235e+05");
        assert_eq!(fmt_sig(1.5e-7, 12), "1.5e-07");
        assert_eq!(fmt_sig(100.0, 4), "100");
        assert_eq!(fmt_sig(0.0, 4), "0");
        assert_eq!(fmt_sig(f64::NAN, 4), "nan");
        assert_eq!(fmt_sig(9.99995, 4), "10");
    }

    #[test]
    fn renderings() {
        let mut r = Report::new();
        r.num("delta_phi", 0.125);
        r.flag("verdict.phi", true);
        r.text("positivity", "holds");
        assert_eq!(
            r.render(Format::Structured),
            "delta_phi=0.125\nverdict.phi=true\npositivity=holds\n"
        );
        assert_eq!(
            r.render(Format::Csv),
            "key,value\ndelta_phi,0.125\nverdict.phi,true\npositivity,holds\n"
        );
        assert_eq!(
            r.render(Format::Text).lines().next().unwrap(),
            "delta_phi    0.125"
        );
        let parsed = Report::parse_structured(&r.render(Format::Structured)).unwrap();
        assert_eq!(parsed[1], ("verdict.phi".into(), "true".into()));
        assert!("json".parse::<Format>().is_err());
    }
}
