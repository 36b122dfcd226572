//! Simulated trial datasets, bootstrap intervals and the falsification test.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimands::{Functional, ObservedLaw};
use crate::rng::{StreamRng, GENERATOR_ID};
use crate::scm::DiscreteScm;
use crate::{ASSIGNMENT, COVARIATE, OUTCOME, TREATMENT};

/// Bootstrap runs need at least this many replicates.
pub const MIN_REPLICATES: usize = 100;

/// How a dataset was produced. Stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: String,
    pub seed: u64,
    pub n: usize,
    pub generator: String,
}

impl Provenance {
    pub fn to_text(&self) -> String {
        format!(
            "scenario={}\nseed={}\nn={}\ngenerator={}\n",
            self.scenario, self.seed, self.n, self.generator
        )
    }

    pub fn parse(text: &str) -> Result<Provenance> {
        let mut scenario = None;
        let mut seed = None;
        let mut n = None;
        let mut generator = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got `{line}`")))?;
            match k.trim() {
                "scenario" => scenario = Some(v.trim().to_string()),
                "seed" => {
                    seed = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| parse_err(format!("bad seed `{v}`")))?,
                    )
                }
                "n" => {
                    n = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| parse_err(format!("bad n `{v}`")))?,
                    )
                }
                "generator" => generator = Some(v.trim().to_string()),
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Parse {
            line: 0,
            message: format!("provenance lacks `{k}`"),
        };
        Ok(Provenance {
            scenario: scenario.ok_or_else(|| missing("scenario"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            n: n.ok_or_else(|| missing("n"))?,
            generator: generator.ok_or_else(|| missing("generator"))?,
        })
    }
}

/// Rows of `(z, x, a, y)` with per-variable level counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    pub rows: Vec<[u8; 4]>,
    pub cards: [usize; 4],
    pub provenance: Option<Provenance>,
}

impl TrialDataset {
    pub fn new(rows: Vec<[u8; 4]>, cards: [usize; 4]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }
        for row in &rows {
            for (v, k) in row.iter().zip(cards) {
                if *v as usize >= k {
                    return Err(Error::InvalidArgument(format!("value {v} outside 0..{k}")));
                }
            }
        }
        Ok(TrialDataset {
            rows,
            cards,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn cell(&self, row: &[u8; 4]) -> usize {
        let [_, kx, ka, ky] = self.cards;
        ((row[0] as usize * kx + row[1] as usize) * ka + row[2] as usize) * ky + row[3] as usize
    }

    fn n_cells(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_cells()];
        for row in &self.rows {
            counts[self.cell(row)] += 1;
        }
        counts
    }

    /// Empirical law of the rows.
    pub fn law(&self) -> ObservedLaw {
        ObservedLaw::from_counts(self.cards, &self.counts()).expect("non-empty dataset")
    }

    /// Counts of a with-replacement resample drawn from `rng`.
    fn resample_counts(&self, cells: &[u16], rng: &mut StreamRng) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_cells()];
        for _ in 0..cells.len() {
            counts[cells[rng.below(cells.len())] as usize] += 1;
        }
        counts
    }

    fn cell_column(&self) -> Vec<u16> {
        self.rows.iter().map(|r| self.cell(r) as u16).collect()
    }

    /// Writes `path` as CSV with header `z,x,a,y`, and the provenance (when
    /// present) to `path` with `.provenance` appended.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["z", "x", "a", "y"])?;
        for row in &self.rows {
            w.write_record(row.map(|v| v.to_string()))?;
        }
        w.flush()?;
        if let Some(p) = &self.provenance {
            fs::write(provenance_path(path), p.to_text())?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`TrialDataset::write`]. Level counts are
    /// inferred (at least two per variable); the provenance file is optional.
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r
            .headers()?
            .iter()
            .map(|h| h.trim().to_lowercase())
            .collect();
        if header != ["z", "x", "a", "y"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header z,x,a,y, got {}", header.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut row = [0u8; 4];
            for (slot, field) in row.iter_mut().zip(rec.iter()) {
                *slot = field.trim().parse().map_err(|_| Error::Parse {
                    line: i + 2,
                    message: format!("`{field}` is not a level"),
                })?;
            }
            if rec.len() != 4 {
                return Err(Error::Parse {
                    line: i + 2,
                    message: "expected 4 fields".into(),
                });
            }
            rows.push(row);
        }
        let mut cards = [2usize; 4];
        for row in &rows {
            for (k, v) in cards.iter_mut().zip(row) {
                *k = (*k).max(*v as usize + 1);
            }
        }
        let mut d = TrialDataset::new(rows, cards)?;
        let prov = provenance_path(path);
        if prov.exists() {
            d.provenance = Some(Provenance::parse(&fs::read_to_string(prov)?)?);
        }
        Ok(d)
    }
}

pub fn provenance_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".provenance");
    PathBuf::from(s)
}

/// Draws `n` units from `m` by ancestral sampling on stream 0 of `seed`.
/// Variables other than `Z, X, A, Y` are generated and then dropped.
pub fn simulate(m: &DiscreteScm, n: usize, seed: u64, scenario: &str) -> Result<TrialDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let dag = m.dag();
    let roles = [ASSIGNMENT, COVARIATE, TREATMENT, OUTCOME];
    let idx = roles
        .iter()
        .map(|r| dag.index_of(r))
        .collect::<Result<Vec<_>>>()?;
    let cards = m.cardinalities();
    let role_cards = [0, 1, 2, 3].map(|i| cards[idx[i]]);
    if role_cards.iter().any(|&k| k > u8::MAX as usize) {
        return Err(Error::InvalidArgument("levels must fit in a byte".into()));
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut values = vec![0usize; dag.len()];
    let mut parents = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        for &v in dag.topological_order() {
            parents.clear();
            parents.extend(dag.parent_indices(v).iter().map(|&p| values[p]));
            let cpt = &m.cpts()[v];
            values[v] = rng.categorical(cpt.row(cpt.row_index(&parents)));
        }
        rows.push([0, 1, 2, 3].map(|i| values[idx[i]] as u8));
    }
    let mut d = TrialDataset::new(rows, role_cards)?;
    d.provenance = Some(Provenance {
        scenario: scenario.to_string(),
        seed,
        n,
        generator: GENERATOR_ID.to_string(),
    });
    Ok(d)
}

/// Point estimate with a percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateWithCi {
    pub point: f64,
    /// 2.5% percentile, lowered to the point estimate if it lies above it.
    pub ci_low: f64,
    /// 97.5% percentile, raised to the point estimate if it lies below it.
    pub ci_high: f64,
    /// Standard deviation of the successful replicates.
    pub se: f64,
    pub replicates: usize,
    /// Replicates where the functional was undefined (an empty stratum).
    pub failed: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(point: f64, mut reps: Vec<f64>, failed: usize) -> Result<EstimateWithCi> {
    // fewer than half the replicates usable means the interval is meaningless
    if reps.len() < 2 || reps.len() < failed {
        return Err(Error::DegenerateBootstrap(failed));
    }
    reps.sort_by(f64::total_cmp);
    let n = reps.len() as f64;
    let mean = reps.iter().sum::<f64>() / n;
    let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EstimateWithCi {
        point,
        ci_low: quantile(&reps, 0.025).min(point),
        ci_high: quantile(&reps, 0.975).max(point),
        se: var.sqrt(),
        replicates: reps.len(),
        failed,
    })
}

fn check_replicates(b: usize) -> Result<()> {
    if b < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} bootstrap replicates required, got {b}"
        )));
    }
    Ok(())
}

/// Bootstrap laws, one per replicate; replicate `r` draws from stream `r + 1`.
fn replicate_laws<T, F>(d: &TrialDataset, b: usize, seed: u64, eval: F) -> Vec<T>
where
    T: Send,
    F: Fn(&ObservedLaw) -> T + Sync,
{
    let cells = d.cell_column();
    (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamRng::new(seed, r + 1);
            let counts = d.resample_counts(&cells, &mut rng);
            eval(&ObservedLaw::from_counts(d.cards, &counts).expect("resample is non-empty"))
        })
        .collect()
}

/// Percentile bootstrap for several functionals from shared resamples.
/// Each functional gets its own result; an undefined point estimate is an
/// error for that functional only.
pub fn bootstrap_many(
    d: &TrialDataset,
    fs: &[Functional],
    b: usize,
    seed: u64,
) -> Result<Vec<Result<EstimateWithCi>>> {
    check_replicates(b)?;
    let law = d.law();
    let reps = replicate_laws(d, b, seed, |l| {
        fs.iter().map(|&f| l.evaluate(f).ok()).collect::<Vec<_>>()
    });
    Ok(fs
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let point = law.evaluate(f)?;
            let ok: Vec<f64> = reps.iter().filter_map(|r| r[k]).collect();
            let failed = b - ok.len();
            if failed > 0 {
                info!("{f}: {failed} of {b} bootstrap replicates skipped for empty strata");
            }
            summarize(point, ok, failed)
        })
        .collect())
}

pub fn bootstrap(d: &TrialDataset, f: Functional, b: usize, seed: u64) -> Result<EstimateWithCi> {
    bootstrap_many(d, &[f], b, seed)?
        .pop()
        .expect("one functional requested")
}

/// Per-cell contrasts `phi(z, a) - psi(a)` in `(z, a)` order.
pub fn falsification_contrasts(law: &ObservedLaw) -> Result<Vec<f64>> {
    let [kz, _, ka, _] = law.cards();
    let mut out = Vec::with_capacity(kz * ka);
    for z in 0..kz {
        for a in 0..ka {
            out.push(law.phi(z, a)? - law.psi(a)?);
        }
    }
    Ok(out)
}

/// `max_{z,a} |phi(z, a) - psi(a)|`, zero exactly when the two functionals
/// agree everywhere.
pub fn falsification_statistic(law: &ObservedLaw) -> Result<f64> {
    Ok(falsification_contrasts(law)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max))
}

/// Where a discrepancy between `phi` and `psi` comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `max_a (max_z phi(z, a) - min_z phi(z, a))`; nonzero when assignment
    /// affects the outcome other than through treatment.
    pub phi_z_spread: f64,
    /// `max_a |psi(a) - chi(a)|`; nonzero when dropping assignment from the
    /// adjustment set leaves confounding.
    pub psi_chi_gap: f64,
    /// `phi(z, a) - psi(a)` per `(z, a)`.
    pub contrasts: Vec<((usize, usize), f64)>,
}

pub fn decompose(law: &ObservedLaw) -> Result<Decomposition> {
    let [kz, _, ka, _] = law.cards();
    let mut phi_z_spread: f64 = 0.0;
    let mut psi_chi_gap: f64 = 0.0;
    let mut contrasts = Vec::new();
    for a in 0..ka {
        let phis = (0..kz).map(|z| law.phi(z, a)).collect::<Result<Vec<_>>>()?;
        let hi = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = phis.iter().copied().fold(f64::INFINITY, f64::min);
        phi_z_spread = phi_z_spread.max(hi - lo);
        psi_chi_gap = psi_chi_gap.max((law.psi(a)? - law.chi(a)?).abs());
    }
    for z in 0..kz {
        for a in 0..ka {
            contrasts.push(((z, a), law.phi(z, a)? - law.psi(a)?));
        }
    }
    Ok(Decomposition {
        phi_z_spread,
        psi_chi_gap,
        contrasts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsificationResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub replicates: usize,
    pub failed: usize,
    pub decomposition: Decomposition,
}

/// Tests `phi(z, a) = psi(a)` for every `(z, a)`. The null distribution of
/// the max statistic is approximated by the recentered bootstrap
/// `max_k |D*_k - D_k|`; the p-value is the share of usable replicates at or
/// above the observed statistic.
pub fn falsification_test(
    d: &TrialDataset,
    b: usize,
    seed: u64,
    alpha: f64,
) -> Result<FalsificationResult> {
    check_replicates(b)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let law = d.law();
    let positivity = law.positivity();
    if !positivity.holds() {
        return Err(Error::EmptyStrata(positivity.rendered_cells()));
    }
    let observed = falsification_contrasts(&law)?;
    let statistic = observed.iter().copied().map(f64::abs).fold(0.0, f64::max);
    let reps = replicate_laws(d, b, seed, |l| {
        falsification_contrasts(l).ok().map(|c| {
            c.iter()
                .zip(&observed)
                .map(|(s, o)| (s - o).abs())
                .fold(0.0, f64::max)
        })
    });
    let usable: Vec<f64> = reps.into_iter().flatten().collect();
    let failed = b - usable.len();
    if failed > 0 {
        info!("falsification: {failed} of {b} bootstrap replicates skipped for empty strata");
    }
    if usable.len() < failed || usable.is_empty() {
        return Err(Error::DegenerateBootstrap(failed));
    }
    let exceed = usable.iter().filter(|&&t| t >= statistic).count();
    let p_value = exceed as f64 / usable.len() as f64;
    Ok(FalsificationResult {
        statistic,
        p_value,
        alpha,
        reject: p_value < alpha,
        replicates: usable.len(),
        failed,
        decomposition: decompose(&law)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{structure1, structure2};

    #[test]
    fn simulation_is_deterministic() {
        let m = structure1().scm;
        let a = simulate(&m, 500, 9, "structure1").unwrap();
        let b = simulate(&m, 500, 9, "structure1").unwrap();
        let c = simulate(&m, 500, 10, "structure1").unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rows, c.rows);
        assert_eq!(a.provenance.as_ref().unwrap().generator, GENERATOR_ID);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = simulate(&structure2().scm, 50, 1, "structure2").unwrap();
        d.write(&path).unwrap();
        assert_eq!(TrialDataset::read(&path).unwrap(), d);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("z,x,a,y\n"));
    }

    #[test]
    fn provenance_parsing() {
        let p = Provenance {
            scenario: "s".into(),
            seed: 3,
            n: 7,
            generator: "g".into(),
        };
        assert_eq!(Provenance::parse(&p.to_text()).unwrap(), p);
        assert!(Provenance::parse("seed=1\n").is_err());
        assert!(Provenance::parse("colour=red\n").is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.125), 0.5);
    }

    #[test]
    fn bootstrap_needs_enough_replicates() {
        let d = simulate(&structure2().scm, 200, 1, "structure2").unwrap();
        assert!(matches!(
            bootstrap(&d, Functional::DeltaGamma, 50, 1),
            Err(Error::InvalidArgument(_))
        ));
        let e = bootstrap(&d, Functional::DeltaGamma, 100, 1).unwrap();
        assert!(e.ci_low <= e.point && e.point <= e.ci_high);
        assert_eq!(e.replicates + e.failed, 100);
    }

    #[test]
    fn falsification_requires_positivity() {
        // nobody with z=0 takes treatment
        let rows = vec![
            [0, 0, 0, 0],
            [0, 1, 0, 1],
            [1, 0, 1, 1],
            [1, 1, 0, 0],
            [1, 1, 1, 0],
            [1, 0, 0, 1],
        ];
        let d = TrialDataset::new(rows, [2, 2, 2, 2]).unwrap();
        assert!(matches!(
            falsification_test(&d, 100, 1, 0.05),
            Err(Error::EmptyStrata(_))
        ));
    }
}
