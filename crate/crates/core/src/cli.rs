//! Command-line front end. Parsing is separate from execution so commands can
//! be driven in-process: [`execute`] returns the rendered output and the exit
//! code instead of printing.
//!
//! Exit codes: 0 success, 1 rejection or a failed relation check, 2 usage
//! error, 3 degenerate data (empty strata).

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimands::{Family, Functional, ObservedLaw, Truth, IDENTIFICATION_TOLERANCE};
use crate::graph::{parse_graph, Dag, Label};
use crate::report::{self, Format, Report};
use crate::sampling::{self, bootstrap_many, falsification_test, simulate, TrialDataset};
use crate::scenarios::{self, ScenarioSpec};
use crate::scm::parse_scm;
use crate::LATENT;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "estimandlab",
    version,
    about = "Per-protocol effects and effects of treatment in trials with non-adherence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact functionals, truths, verdicts and relation checks for a structure.
    Analyze(AnalyzeArgs),
    /// Draw a dataset and bootstrap every plug-in estimate.
    Simulate(SimulateArgs),
    /// Answer a d-separation query on a graph or a single-world graph.
    Dsep(DsepArgs),
    /// Test whether phi(z, a) = psi(a) for all (z, a).
    Falsify(FalsifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Structured,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Structured => Format::Structured,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// structure1, structure2, structure7, structure8 or lattice:<edges>.
    #[arg(long, default_value = "structure1")]
    pub scenario: String,
    /// `canonical` or a path to a model file for the same graph.
    #[arg(long, default_value = "canonical")]
    pub preset: String,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, env = "ESTIMANDLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: u64,
    /// Write the dataset (and its provenance file) here.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DsepArgs {
    /// `A _||_ B [| C] [in <scenario> [do(V, ...)]]`; sets are comma separated.
    pub query: String,
    /// Graph file to query when the query names no scenario.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FalsifyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Dataset to test; when absent one is simulated from the scenario.
    #[arg(long, conflicts_with = "exact")]
    pub data: Option<PathBuf>,
    /// Use the exact observed law of the scenario instead of a sample.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, env = "ESTIMANDLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Rendered output and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyStrata(_)
        | Error::ZeroProbability(_)
        | Error::ZeroPropensity(_)
        | Error::DegenerateBootstrap(_) => EXIT_DEGENERATE,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command. Errors become a message on `stderr` with the
/// matching exit code.
pub fn execute(cli: &Cli) -> Outcome {
    let (result, output) = match &cli.command {
        Command::Analyze(a) => (cmd_analyze(a), &a.output),
        Command::Simulate(a) => (cmd_simulate(a), &a.output),
        Command::Dsep(a) => (cmd_dsep(a), &a.output),
        Command::Falsify(a) => (cmd_falsify(a), &a.output),
    };
    let (rep, code) = match result {
        Ok(ok) => ok,
        Err(e) => {
            return Outcome {
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
                code: exit_code(&e),
            };
        }
    };
    let rendered = rep.render(output.format.into());
    match &output.out {
        Some(path) => match fs::write(path, &rendered) {
            Ok(()) => Outcome {
                stdout: String::new(),
                stderr: String::new(),
                code,
            },
            Err(e) => Outcome {
                stdout: String::new(),
                stderr: format!("error: cannot write {}: {e}\n", path.display()),
                code: EXIT_USAGE,
            },
        },
        None => Outcome {
            stdout: rendered,
            stderr: String::new(),
            code,
        },
    }
}

/// Parses `args` (including the program name) and executes.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code,
                }
            }
        }
    }
}

fn load_scenario(a: &ScenarioArgs) -> Result<ScenarioSpec> {
    let base = scenarios::by_name(&a.scenario)?;
    if a.preset == "canonical" {
        return Ok(base);
    }
    let text = fs::read_to_string(&a.preset)?;
    base.with_scm(parse_scm(&text)?)
}

fn count(name: &str, v: u64) -> Result<usize> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("--{name} must be positive")));
    }
    usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("--{name} is too large")))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(Report, i32)> {
    let s = load_scenario(&a.scenario)?;
    let (est, checks) = scenarios::verify_relations(&s)?;
    if !est.positivity.holds() {
        return Err(Error::EmptyStrata(est.positivity.rendered_cells()));
    }
    let mut r = Report::new();
    r.text("scenario", &s.name);
    r.text("preset", &a.scenario.preset);
    r.extend(report::estimand_section(&est));
    r.extend(report::expectation_section(&scenarios::expected_relations(
        &s,
    )?));
    r.extend(report::relation_section(&checks));
    let code = if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_REJECTED
    };
    Ok((r, code))
}

/// Plug-in means and contrasts of every family.
fn plug_in_targets(kz: usize, ka: usize) -> Vec<Functional> {
    Family::ALL
        .iter()
        .flat_map(|f| {
            let mut v = f.members(kz, ka);
            v.push(f.contrast());
            v
        })
        .collect()
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(Report, i32)> {
    let n = count("n", a.n)?;
    let b = count("bootstrap", a.bootstrap)?;
    let s = load_scenario(&a.scenario)?;
    let d = simulate(&s.scm, n, a.seed, &s.name)?;
    if let Some(path) = &a.data {
        d.write(path)?;
    }
    let [kz, _, ka, _] = d.cards;
    let targets = plug_in_targets(kz, ka);
    let results = bootstrap_many(&d, &targets, b, a.seed)?;
    let mut r = Report::new();
    r.extend(report::provenance_section(
        d.provenance
            .as_ref()
            .expect("simulated data has provenance"),
    ));
    r.int("bootstrap.replicates", b as u64);
    let positivity = d.law().positivity();
    r.text(
        "positivity",
        if positivity.holds() {
            "holds".to_string()
        } else {
            format!("violated: {}", positivity.rendered_cells().join(";"))
        },
    );
    r.extend(report::bootstrap_section(
        &targets.into_iter().zip(results).collect::<Vec<_>>(),
    ));
    let t = Truth::from_scm(&s.scm)?;
    r.num("truth.itt", t.itt);
    r.num("truth.ppe", t.ppe);
    r.num("truth.ate", t.ate);
    Ok((r, EXIT_OK))
}

fn cmd_falsify(a: &FalsifyArgs) -> Result<(Report, i32)> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    let mut r = Report::new();
    if a.exact {
        let s = load_scenario(&a.scenario)?;
        let law = ObservedLaw::from_joint(&s.scm.observed_joint(&[LATENT])?)?;
        let statistic = sampling::falsification_statistic(&law)?;
        let dec = sampling::decompose(&law)?;
        let reject = statistic > IDENTIFICATION_TOLERANCE;
        r.text("data.scenario", &s.name);
        r.text("data.source", "exact");
        r.num("falsify.statistic", statistic);
        r.flag("falsify.reject", reject);
        r.num("falsify.phi_z_spread", dec.phi_z_spread);
        r.num("falsify.psi_chi_gap", dec.psi_chi_gap);
        for ((z, x), v) in dec.contrasts {
            r.num(format!("falsify.contrast.z{z}a{x}"), v);
        }
        return Ok((r, if reject { EXIT_REJECTED } else { EXIT_OK }));
    }
    let b = count("bootstrap", a.bootstrap)?;
    let d = match &a.data {
        Some(path) => TrialDataset::read(path)?,
        None => {
            let s = load_scenario(&a.scenario)?;
            simulate(&s.scm, count("n", a.n)?, a.seed, &s.name)?
        }
    };
    match &d.provenance {
        Some(p) => r.extend(report::provenance_section(p)),
        None => r.int("data.n", d.len() as u64),
    }
    let res = falsification_test(&d, b, a.seed, a.alpha)?;
    r.extend(report::falsification_section(&res));
    Ok((r, if res.reject { EXIT_REJECTED } else { EXIT_OK }))
}

/// A parsed d-separation query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DsepQuery {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub given: Vec<String>,
    pub scenario: Option<String>,
    pub intervene: Vec<String>,
}

/// Splits on commas and whitespace outside braces, so `Y^{z,a}` stays whole.
fn split_set(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    for c in s.chars() {
        match c {
            '{' => {
                depth += 1;
                cur.push(c);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' | ' ' | '\t' if depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn parse_query(q: &str) -> Result<DsepQuery> {
    let bad = |m: &str| Error::Parse {
        line: 1,
        message: format!("{m} in query `{q}`"),
    };
    let normalized = q.split_whitespace().collect::<Vec<_>>().join(" ");
    let (left, rest) = normalized
        .split_once("_||_")
        .ok_or_else(|| bad("missing `_||_`"))?;
    let (body, scope) = match rest.split_once(" in ") {
        Some((b, s)) => (b, Some(s.trim())),
        None => (rest, None),
    };
    let (right, given) = match body.split_once('|') {
        Some((r, g)) => (r, g),
        None => (body, ""),
    };
    let (scenario, intervene) = match scope {
        None => (None, Vec::new()),
        Some(scope) => {
            let (name, tail) = match scope.find(char::is_whitespace) {
                Some(i) => (&scope[..i], scope[i..].trim()),
                None => (scope, ""),
            };
            let name = if name.starts_with("do(") { "" } else { name };
            let tail = if name.is_empty() { scope } else { tail };
            let intervene = if tail.is_empty() {
                Vec::new()
            } else {
                let inner = tail
                    .strip_prefix("do(")
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| bad("expected `do(...)`"))?;
                split_set(inner)
            };
            ((!name.is_empty()).then(|| name.to_string()), intervene)
        }
    };
    let query = DsepQuery {
        left: split_set(left),
        right: split_set(right),
        given: split_set(given),
        scenario,
        intervene,
    };
    if query.left.is_empty() || query.right.is_empty() {
        return Err(bad("empty node set"));
    }
    Ok(query)
}

fn cmd_dsep(a: &DsepArgs) -> Result<(Report, i32)> {
    let q = parse_query(&a.query)?;
    let dag: Dag = match (&q.scenario, &a.graph) {
        (Some(name), _) => scenarios::by_name(name)?.dag().clone(),
        (None, Some(path)) => parse_graph(&fs::read_to_string(path)?)?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "query names no scenario and no --graph was given".into(),
            ));
        }
    };
    let mut r = Report::new();
    r.text("query", a.query.trim());
    let (separated, witness) = if q.intervene.is_empty() {
        for name in &q.left {
            if Label::parse(name)?.1.is_some() {
                return Err(Error::InvalidArgument(format!(
                    "`{name}` is counterfactual but nothing is intervened on"
                )));
            }
        }
        let sep = dag.d_separated(&q.left, &q.right, &q.given)?;
        let w = if sep {
            None
        } else {
            dag.open_path(&q.left, &q.right, &q.given)?
                .map(|p| p.to_string())
        };
        (sep, w)
    } else {
        let labels: Vec<(String, String)> = q
            .intervene
            .iter()
            .map(|v| (v.clone(), v.to_lowercase()))
            .collect();
        let swig = dag.swig(&labels)?;
        let [cf] = q.left.as_slice() else {
            return Err(Error::InvalidArgument(
                "single-world queries take one counterfactual on the left".into(),
            ));
        };
        let sep = swig.independent(cf, &q.right, &q.given)?;
        let w = if sep {
            None
        } else {
            swig.open_path(cf, &q.right, &q.given)?
        };
        (sep, w)
    };
    r.flag("separated", separated);
    if let Some(w) = witness {
        r.text("witness", w);
    }
    Ok((r, EXIT_OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_grammar() {
        let q = parse_query("A _||_ U | X in structure1").unwrap();
        assert_eq!(q.left, ["A"]);
        assert_eq!(q.right, ["U"]);
        assert_eq!(q.given, ["X"]);
        assert_eq!(q.scenario.as_deref(), Some("structure1"));
        assert!(q.intervene.is_empty());

        let q = parse_query("Y^{z,a} _||_ A | X, Z in structure1 do(Z,A)").unwrap();
        assert_eq!(q.left, ["Y^{z,a}"]);
        assert_eq!(q.given, ["X", "Z"]);
        assert_eq!(q.intervene, ["Z", "A"]);

        let q = parse_query("Y _||_ Z").unwrap();
        assert_eq!(q.scenario, None);
        assert!(q.given.is_empty());

        let q = parse_query("Y^a _||_ A | X in do(A)").unwrap();
        assert_eq!(q.scenario, None);
        assert_eq!(q.intervene, ["A"]);

        assert!(parse_query("A indep B").is_err());
        assert!(parse_query(" _||_ B").is_err());
        assert!(parse_query("A _||_ B in structure1 of(Z)").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::EmptyStrata(vec![])), EXIT_DEGENERATE);
        assert_eq!(exit_code(&Error::UnknownScenario("x".into())), EXIT_USAGE);
    }
}
