//! Observed-data functionals over `(Z, X, A, Y)`.
//!
//! Plug-in (standardization) forms are canonical. Each has an inverse
//! probability weighted twin that must agree with it on any law where the
//! relevant strata have positive mass.
//!
//! | functional                 | expression                          | targets      |
//! |----------------------------|-------------------------------------|--------------|
//! | `gamma(z)`                 | `E[Y | Z=z]`                        | `E[Y^z]`     |
//! | `phi(z, a)`                | `E[ E[Y | Z, X, A=a] | Z=z ]`       | `E[Y^{z,a}]` |
//! | `chi(a)`                   | `E[ E[Y | Z, X, A=a] ]`             | `E[Y^a]`     |
//! | `psi(a)`                   | `E[ E[Y | X, A=a] ]`                | `E[Y^a]`     |
//! | `crude(a)`                 | `E[Y | A=a]`                        | `E[Y^a]`     |
//! | `arm_crude(z, a)`          | `E[Y | Z=z, A=a]`                   | `E[Y^{z,a}]` |
//! | `assignment_adjusted(a)`   | `E[ E[Y | Z, A=a] ]`                | `E[Y^a]`     |
//!
//! Contrasts compare level 1 with level 0 (`phi` compares `(1,1)` with `(0,0)`).

use std::fmt;

use log::info;

use crate::error::{Error, Result};
use crate::scm::{DiscreteScm, JointTable, Positivity};
use crate::{ASSIGNMENT, COVARIATE, OUTCOME, TREATMENT};

/// Identification verdicts compare functionals to truths at this tolerance.
pub const IDENTIFICATION_TOLERANCE: f64 = 1e-10;

/// Dense law over `(Z, X, A, Y)`, the common substrate of every functional.
#[derive(Debug, Clone)]
pub struct ObservedLaw {
    kz: usize,
    kx: usize,
    ka: usize,
    ky: usize,
    mass: Vec<f64>,
    y_values: Vec<f64>,
}

impl ObservedLaw {
    /// Marginalizes `j` onto `(Z, X, A, Y)`; any other variable is summed out.
    pub fn from_joint(j: &JointTable) -> Result<Self> {
        let y_values = (0..j.cardinality(OUTCOME)?).map(|v| v as f64).collect();
        Self::from_joint_with_values(j, y_values)
    }

    pub fn from_joint_with_values(j: &JointTable, y_values: Vec<f64>) -> Result<Self> {
        let order = [ASSIGNMENT, COVARIATE, TREATMENT, OUTCOME];
        let idx = order
            .iter()
            .map(|v| j.index_of(v))
            .collect::<Result<Vec<_>>>()?;
        let cards: Vec<usize> = idx.iter().map(|&i| j.cards()[i]).collect();
        if y_values.len() != cards[3] {
            return Err(Error::InvalidArgument(
                "outcome value map has the wrong length".into(),
            ));
        }
        let mut mass = vec![0.0; cards.iter().product()];
        for (c, &m) in j.mass().iter().enumerate() {
            let v = j.decode(c);
            let flat =
                ((v[idx[0]] * cards[1] + v[idx[1]]) * cards[2] + v[idx[2]]) * cards[3] + v[idx[3]];
            mass[flat] += m;
        }
        Ok(ObservedLaw {
            kz: cards[0],
            kx: cards[1],
            ka: cards[2],
            ky: cards[3],
            mass,
            y_values,
        })
    }

    /// Builds a law directly from per-cell counts in `(z, x, a, y)` order.
    pub fn from_counts(cards: [usize; 4], counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 || counts.len() != cards.iter().product::<usize>() {
            return Err(Error::InvalidArgument(
                "counts do not describe a sample".into(),
            ));
        }
        let n = total as f64;
        Ok(ObservedLaw {
            kz: cards[0],
            kx: cards[1],
            ka: cards[2],
            ky: cards[3],
            mass: counts.iter().map(|&c| c as f64 / n).collect(),
            y_values: (0..cards[3]).map(|v| v as f64).collect(),
        })
    }

    pub fn cards(&self) -> [usize; 4] {
        [self.kz, self.kx, self.ka, self.ky]
    }

    pub fn to_joint(&self) -> JointTable {
        JointTable::new(
            [ASSIGNMENT, COVARIATE, TREATMENT, OUTCOME]
                .map(String::from)
                .to_vec(),
            self.cards().to_vec(),
            self.mass.clone(),
        )
        .expect("law mass is normalized")
    }

    fn at(&self, z: usize, x: usize, a: usize) -> &[f64] {
        let start = ((z * self.kx + x) * self.ka + a) * self.ky;
        &self.mass[start..start + self.ky]
    }

    fn p_zxa(&self, z: usize, x: usize, a: usize) -> f64 {
        self.at(z, x, a).iter().sum()
    }

    /// `(P(z,x,a), sum_y y P(z,x,a,y))`
    fn moments_zxa(&self, z: usize, x: usize, a: usize) -> (f64, f64) {
        self.at(z, x, a)
            .iter()
            .zip(&self.y_values)
            .fold((0.0, 0.0), |(p, s), (&m, &y)| (p + m, s + m * y))
    }

    fn p_zx(&self, z: usize, x: usize) -> f64 {
        (0..self.ka).map(|a| self.p_zxa(z, x, a)).sum()
    }

    fn p_z(&self, z: usize) -> f64 {
        (0..self.kx).map(|x| self.p_zx(z, x)).sum()
    }

    fn p_x(&self, x: usize) -> f64 {
        (0..self.kz).map(|z| self.p_zx(z, x)).sum()
    }

    fn p_a(&self, a: usize) -> f64 {
        (0..self.kz)
            .flat_map(|z| (0..self.kx).map(move |x| (z, x)))
            .map(|(z, x)| self.p_zxa(z, x, a))
            .sum()
    }

    fn check_z(&self, z: usize) -> Result<()> {
        range("Z", z, self.kz)
    }

    fn check_a(&self, a: usize) -> Result<()> {
        range("A", a, self.ka)
    }

    fn ey_zxa(&self, z: usize, x: usize, a: usize) -> Result<f64> {
        let (p, s) = self.moments_zxa(z, x, a);
        if p > 0.0 {
            Ok(s / p)
        } else {
            Err(Error::ZeroProbability(format!("Z={z},X={x},A={a}")))
        }
    }

    fn ey_xa(&self, x: usize, a: usize) -> Result<f64> {
        let (p, s) = (0..self.kz)
            .map(|z| self.moments_zxa(z, x, a))
            .fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
        if p > 0.0 {
            Ok(s / p)
        } else {
            Err(Error::ZeroProbability(format!("X={x},A={a}")))
        }
    }

    fn ey_za(&self, z: usize, a: usize) -> Result<f64> {
        let (p, s) = (0..self.kx)
            .map(|x| self.moments_zxa(z, x, a))
            .fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
        if p > 0.0 {
            Ok(s / p)
        } else {
            Err(Error::ZeroProbability(format!("Z={z},A={a}")))
        }
    }

    /// `E[Y | Z=z]`
    pub fn gamma(&self, z: usize) -> Result<f64> {
        self.check_z(z)?;
        let pz = self.p_z(z);
        if pz <= 0.0 {
            return Err(Error::ZeroProbability(format!("Z={z}")));
        }
        let s: f64 = (0..self.kx)
            .flat_map(|x| (0..self.ka).map(move |a| (x, a)))
            .map(|(x, a)| self.moments_zxa(z, x, a).1)
            .sum();
        Ok(s / pz)
    }

    /// `sum_x P(x | z) E[Y | z, x, a]`
    pub fn phi(&self, z: usize, a: usize) -> Result<f64> {
        self.check_z(z)?;
        self.check_a(a)?;
        let pz = self.p_z(z);
        if pz <= 0.0 {
            return Err(Error::ZeroProbability(format!("Z={z}")));
        }
        let mut total = 0.0;
        for x in 0..self.kx {
            let pzx = self.p_zx(z, x);
            if pzx == 0.0 {
                info!("phi({z},{a}): skipping empty stratum Z={z},X={x}");
                continue;
            }
            total += pzx / pz * self.ey_zxa(z, x, a)?;
        }
        Ok(total)
    }

    /// `sum_{z,x} P(z, x) E[Y | z, x, a]`
    pub fn chi(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let mut total = 0.0;
        for z in 0..self.kz {
            for x in 0..self.kx {
                let pzx = self.p_zx(z, x);
                if pzx == 0.0 {
                    info!("chi({a}): skipping empty stratum Z={z},X={x}");
                    continue;
                }
                total += pzx * self.ey_zxa(z, x, a)?;
            }
        }
        Ok(total)
    }

    /// `sum_x P(x) E[Y | x, a]`
    pub fn psi(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let mut total = 0.0;
        for x in 0..self.kx {
            let px = self.p_x(x);
            if px == 0.0 {
                info!("psi({a}): skipping empty stratum X={x}");
                continue;
            }
            total += px * self.ey_xa(x, a)?;
        }
        Ok(total)
    }

    /// `E[Y | A=a]`
    pub fn crude(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let (p, s) = (0..self.kz)
            .flat_map(|z| (0..self.kx).map(move |x| (z, x)))
            .map(|(z, x)| self.moments_zxa(z, x, a))
            .fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
        if p > 0.0 {
            Ok(s / p)
        } else {
            Err(Error::ZeroProbability(format!("A={a}")))
        }
    }

    /// `E[Y | Z=z, A=a]`
    pub fn arm_crude(&self, z: usize, a: usize) -> Result<f64> {
        self.check_z(z)?;
        self.check_a(a)?;
        self.ey_za(z, a)
    }

    /// `sum_z P(z) E[Y | z, a]`
    pub fn assignment_adjusted(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let mut total = 0.0;
        for z in 0..self.kz {
            let pz = self.p_z(z);
            if pz == 0.0 {
                continue;
            }
            total += pz * self.ey_za(z, a)?;
        }
        Ok(total)
    }

    /// `E[ 1{Z=z} Y / P(Z=z) ]`
    pub fn ipw_gamma(&self, z: usize) -> Result<f64> {
        self.check_z(z)?;
        let pz = self.p_z(z);
        if pz <= 0.0 {
            return Err(Error::ZeroPropensity(format!("P(Z={z}) = 0")));
        }
        let mut total = 0.0;
        for x in 0..self.kx {
            for a in 0..self.ka {
                total += self.moments_zxa(z, x, a).1 / pz;
            }
        }
        Ok(total)
    }

    /// Weight denominators `P(A=a | z, x)`; errors if an occupied `(z, x)`
    /// stratum never receives `a`.
    fn propensity_zx(&self, z: usize, x: usize, a: usize) -> Result<Option<f64>> {
        let pzx = self.p_zx(z, x);
        if pzx == 0.0 {
            return Ok(None);
        }
        let e = self.p_zxa(z, x, a) / pzx;
        if e > 0.0 {
            Ok(Some(e))
        } else {
            Err(Error::ZeroPropensity(format!("P(A={a} | Z={z},X={x}) = 0")))
        }
    }

    /// `E[ 1{Z=z} 1{A=a} Y / (P(Z=z) P(A=a | Z, X)) ]`
    pub fn ipw_phi(&self, z: usize, a: usize) -> Result<f64> {
        self.check_z(z)?;
        self.check_a(a)?;
        let pz = self.p_z(z);
        if pz <= 0.0 {
            return Err(Error::ZeroPropensity(format!("P(Z={z}) = 0")));
        }
        let mut total = 0.0;
        for x in 0..self.kx {
            if let Some(e) = self.propensity_zx(z, x, a)? {
                total += self.moments_zxa(z, x, a).1 / (pz * e);
            }
        }
        Ok(total)
    }

    /// `E[ 1{A=a} Y / P(A=a | Z, X) ]`
    pub fn ipw_chi(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let mut total = 0.0;
        for z in 0..self.kz {
            for x in 0..self.kx {
                if let Some(e) = self.propensity_zx(z, x, a)? {
                    total += self.moments_zxa(z, x, a).1 / e;
                }
            }
        }
        Ok(total)
    }

    /// `E[ 1{A=a} Y / P(A=a | X) ]`
    pub fn ipw_psi(&self, a: usize) -> Result<f64> {
        self.check_a(a)?;
        let mut total = 0.0;
        for x in 0..self.kx {
            let px = self.p_x(x);
            if px == 0.0 {
                continue;
            }
            let pxa: f64 = (0..self.kz).map(|z| self.p_zxa(z, x, a)).sum();
            if pxa <= 0.0 {
                return Err(Error::ZeroPropensity(format!("P(A={a} | X={x}) = 0")));
            }
            let e = pxa / px;
            let s: f64 = (0..self.kz).map(|z| self.moments_zxa(z, x, a).1).sum();
            total += s / e;
        }
        Ok(total)
    }

    /// `P(A=a)`, exposed for diagnostics.
    pub fn treatment_share(&self, a: usize) -> f64 {
        self.p_a(a)
    }

    /// Strict positivity over `(Z, X, A)`.
    pub fn positivity(&self) -> Positivity {
        let mut zero_cells = Vec::new();
        for z in 0..self.kz {
            for x in 0..self.kx {
                for a in 0..self.ka {
                    if self.p_zxa(z, x, a) <= 0.0 {
                        zero_cells.push(vec![
                            (ASSIGNMENT.to_string(), z),
                            (COVARIATE.to_string(), x),
                            (TREATMENT.to_string(), a),
                        ]);
                    }
                }
            }
        }
        Positivity { zero_cells }
    }

    pub fn evaluate(&self, f: Functional) -> Result<f64> {
        use Functional::*;
        match f {
            Gamma(z) => self.gamma(z),
            Phi(z, a) => self.phi(z, a),
            Chi(a) => self.chi(a),
            Psi(a) => self.psi(a),
            Crude(a) => self.crude(a),
            ArmCrude(z, a) => self.arm_crude(z, a),
            AssignmentAdjusted(a) => self.assignment_adjusted(a),
            IpwGamma(z) => self.ipw_gamma(z),
            IpwPhi(z, a) => self.ipw_phi(z, a),
            IpwChi(a) => self.ipw_chi(a),
            IpwPsi(a) => self.ipw_psi(a),
            DeltaGamma => Ok(self.gamma(1)? - self.gamma(0)?),
            DeltaPhi => Ok(self.phi(1, 1)? - self.phi(0, 0)?),
            DeltaChi => Ok(self.chi(1)? - self.chi(0)?),
            DeltaPsi => Ok(self.psi(1)? - self.psi(0)?),
            DeltaCrude => Ok(self.crude(1)? - self.crude(0)?),
            DeltaArmCrude => Ok(self.arm_crude(1, 1)? - self.arm_crude(0, 0)?),
            DeltaAssignmentAdjusted => {
                Ok(self.assignment_adjusted(1)? - self.assignment_adjusted(0)?)
            }
        }
    }
}

fn range(var: &str, value: usize, card: usize) -> Result<()> {
    if value < card {
        Ok(())
    } else {
        Err(Error::ValueOutOfRange {
            node: var.to_string(),
            value,
            cardinality: card,
        })
    }
}

/// Selector for one scalar functional or contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    Gamma(usize),
    Phi(usize, usize),
    Chi(usize),
    Psi(usize),
    Crude(usize),
    ArmCrude(usize, usize),
    AssignmentAdjusted(usize),
    IpwGamma(usize),
    IpwPhi(usize, usize),
    IpwChi(usize),
    IpwPsi(usize),
    DeltaGamma,
    DeltaPhi,
    DeltaChi,
    DeltaPsi,
    DeltaCrude,
    DeltaArmCrude,
    DeltaAssignmentAdjusted,
}

impl Functional {
    /// The plug-in means and contrasts for binary assignment and treatment,
    /// in report order.
    pub fn binary_plug_ins() -> Vec<Functional> {
        use Functional::*;
        let mut out = vec![Gamma(0), Gamma(1), DeltaGamma];
        out.extend([Phi(0, 0), Phi(0, 1), Phi(1, 0), Phi(1, 1), DeltaPhi]);
        out.extend([Chi(0), Chi(1), DeltaChi, Psi(0), Psi(1), DeltaPsi]);
        out
    }

    /// Key used in flat reports, e.g. `phi.z1a0` or `delta_chi`.
    pub fn key(&self) -> String {
        use Functional::*;
        match *self {
            Gamma(z) => format!("gamma.z{z}"),
            Phi(z, a) => format!("phi.z{z}a{a}"),
            Chi(a) => format!("chi.a{a}"),
            Psi(a) => format!("psi.a{a}"),
            Crude(a) => format!("crude.a{a}"),
            ArmCrude(z, a) => format!("arm_crude.z{z}a{a}"),
            AssignmentAdjusted(a) => format!("assignment_adjusted.a{a}"),
            IpwGamma(z) => format!("ipw_gamma.z{z}"),
            IpwPhi(z, a) => format!("ipw_phi.z{z}a{a}"),
            IpwChi(a) => format!("ipw_chi.a{a}"),
            IpwPsi(a) => format!("ipw_psi.a{a}"),
            DeltaGamma => "delta_gamma".into(),
            DeltaPhi => "delta_phi".into(),
            DeltaChi => "delta_chi".into(),
            DeltaPsi => "delta_psi".into(),
            DeltaCrude => "delta_crude".into(),
            DeltaArmCrude => "delta_arm_crude".into(),
            DeltaAssignmentAdjusted => "delta_assignment_adjusted".into(),
        }
    }

    pub fn parse(key: &str) -> Result<Functional> {
        use Functional::*;
        let bad = || Error::InvalidArgument(format!("unknown functional `{key}`"));
        let simple = match key {
            "delta_gamma" => Some(DeltaGamma),
            "delta_phi" => Some(DeltaPhi),
            "delta_chi" => Some(DeltaChi),
            "delta_psi" => Some(DeltaPsi),
            "delta_crude" => Some(DeltaCrude),
            "delta_arm_crude" => Some(DeltaArmCrude),
            "delta_assignment_adjusted" => Some(DeltaAssignmentAdjusted),
            _ => None,
        };
        if let Some(f) = simple {
            return Ok(f);
        }
        let (name, idx) = key.split_once('.').ok_or_else(bad)?;
        let digits = |s: &str| -> Option<usize> { s.parse().ok() };
        let z_only = |s: &str| s.strip_prefix('z').and_then(digits);
        let a_only = |s: &str| s.strip_prefix('a').and_then(digits);
        let z_and_a = |s: &str| {
            let rest = s.strip_prefix('z')?;
            let (z, a) = rest.split_once('a')?;
            Some((digits(z)?, digits(a)?))
        };
        let f = match name {
            "gamma" => z_only(idx).map(Gamma),
            "ipw_gamma" => z_only(idx).map(IpwGamma),
            "phi" => z_and_a(idx).map(|(z, a)| Phi(z, a)),
            "ipw_phi" => z_and_a(idx).map(|(z, a)| IpwPhi(z, a)),
            "arm_crude" => z_and_a(idx).map(|(z, a)| ArmCrude(z, a)),
            "chi" => a_only(idx).map(Chi),
            "psi" => a_only(idx).map(Psi),
            "crude" => a_only(idx).map(Crude),
            "assignment_adjusted" => a_only(idx).map(AssignmentAdjusted),
            "ipw_chi" => a_only(idx).map(IpwChi),
            "ipw_psi" => a_only(idx).map(IpwPsi),
            _ => None,
        };
        f.ok_or_else(bad)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub fn gamma(j: &JointTable, z: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.gamma(z)
}

pub fn phi(j: &JointTable, z: usize, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.phi(z, a)
}

pub fn chi(j: &JointTable, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.chi(a)
}

pub fn psi(j: &JointTable, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.psi(a)
}

pub fn ipw_gamma(j: &JointTable, z: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.ipw_gamma(z)
}

pub fn ipw_phi(j: &JointTable, z: usize, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.ipw_phi(z, a)
}

pub fn ipw_chi(j: &JointTable, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.ipw_chi(a)
}

pub fn ipw_psi(j: &JointTable, a: usize) -> Result<f64> {
    ObservedLaw::from_joint(j)?.ipw_psi(a)
}

/// Counterfactual means and contrasts computed by exact intervention.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    /// `E[Y^z]` by z
    pub y_z: Vec<f64>,
    /// `E[Y^{z,a}]` by `[z][a]`
    pub y_za: Vec<Vec<f64>>,
    /// `E[Y^a]` by a
    pub y_a: Vec<f64>,
    pub itt: f64,
    pub ppe: f64,
    pub ate: f64,
}

impl Truth {
    pub fn from_scm(m: &DiscreteScm) -> Result<Truth> {
        let kz = m.cardinality(ASSIGNMENT)?;
        let ka = m.cardinality(TREATMENT)?;
        let y_z = (0..kz)
            .map(|z| m.counterfactual_mean(&[(ASSIGNMENT, z)], OUTCOME))
            .collect::<Result<Vec<_>>>()?;
        let y_za = (0..kz)
            .map(|z| {
                (0..ka)
                    .map(|a| m.counterfactual_mean(&[(ASSIGNMENT, z), (TREATMENT, a)], OUTCOME))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let y_a = (0..ka)
            .map(|a| m.counterfactual_mean(&[(TREATMENT, a)], OUTCOME))
            .collect::<Result<Vec<_>>>()?;
        Ok(Truth {
            itt: y_z[1] - y_z[0],
            ppe: y_za[1][1] - y_za[0][0],
            ate: y_a[1] - y_a[0],
            y_z,
            y_za,
            y_a,
        })
    }

    /// The counterfactual mean a functional is meant to identify.
    pub fn target(&self, f: Functional) -> Option<f64> {
        use Functional::*;
        match f {
            Gamma(z) | IpwGamma(z) => self.y_z.get(z).copied(),
            Phi(z, a) | IpwPhi(z, a) | ArmCrude(z, a) => {
                self.y_za.get(z).and_then(|r| r.get(a)).copied()
            }
            Chi(a) | Psi(a) | Crude(a) | AssignmentAdjusted(a) | IpwChi(a) | IpwPsi(a) => {
                self.y_a.get(a).copied()
            }
            DeltaGamma => Some(self.itt),
            DeltaPhi | DeltaArmCrude => Some(self.ppe),
            DeltaChi | DeltaPsi | DeltaCrude | DeltaAssignmentAdjusted => Some(self.ate),
        }
    }
}

/// Families of identifying functionals, each compared to its target as a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Gamma,
    Phi,
    Chi,
    Psi,
    Crude,
    ArmCrude,
    AssignmentAdjusted,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Gamma,
        Family::Phi,
        Family::Chi,
        Family::Psi,
        Family::Crude,
        Family::ArmCrude,
        Family::AssignmentAdjusted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::Phi => "phi",
            Family::Chi => "chi",
            Family::Psi => "psi",
            Family::Crude => "crude",
            Family::ArmCrude => "arm_crude",
            Family::AssignmentAdjusted => "assignment_adjusted",
        }
    }

    /// Every mean in the family for the given assignment/treatment levels.
    pub fn members(&self, kz: usize, ka: usize) -> Vec<Functional> {
        let za = || (0..kz).flat_map(move |z| (0..ka).map(move |a| (z, a)));
        match self {
            Family::Gamma => (0..kz).map(Functional::Gamma).collect(),
            Family::Phi => za().map(|(z, a)| Functional::Phi(z, a)).collect(),
            Family::Chi => (0..ka).map(Functional::Chi).collect(),
            Family::Psi => (0..ka).map(Functional::Psi).collect(),
            Family::Crude => (0..ka).map(Functional::Crude).collect(),
            Family::ArmCrude => za().map(|(z, a)| Functional::ArmCrude(z, a)).collect(),
            Family::AssignmentAdjusted => (0..ka).map(Functional::AssignmentAdjusted).collect(),
        }
    }

    pub fn contrast(&self) -> Functional {
        match self {
            Family::Gamma => Functional::DeltaGamma,
            Family::Phi => Functional::DeltaPhi,
            Family::Chi => Functional::DeltaChi,
            Family::Psi => Functional::DeltaPsi,
            Family::Crude => Functional::DeltaCrude,
            Family::ArmCrude => Functional::DeltaArmCrude,
            Family::AssignmentAdjusted => Functional::DeltaAssignmentAdjusted,
        }
    }

    /// Weighting twin of each member, where one exists.
    fn ipw_twin(f: Functional) -> Option<Functional> {
        use Functional::*;
        match f {
            Gamma(z) => Some(IpwGamma(z)),
            Phi(z, a) => Some(IpwPhi(z, a)),
            Chi(a) => Some(IpwChi(a)),
            Psi(a) => Some(IpwPsi(a)),
            _ => None,
        }
    }
}

/// One evaluated quantity in a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub functional: Functional,
    pub value: std::result::Result<f64, String>,
}

/// Every functional, contrast and weighting twin for one observed law, plus
/// counterfactual truths and identification verdicts when the generating
/// model is known.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimandReport {
    pub levels: (usize, usize),
    pub means: Vec<Entry>,
    pub contrasts: Vec<Entry>,
    pub ipw: Vec<Entry>,
    pub truth: Option<Truth>,
    pub positivity: Positivity,
}

impl EstimandReport {
    pub fn value(&self, f: Functional) -> Option<f64> {
        self.means
            .iter()
            .chain(&self.contrasts)
            .chain(&self.ipw)
            .find(|e| e.functional == f)
            .and_then(|e| e.value.as_ref().ok().copied())
    }

    /// True when every member of the family matches its counterfactual target
    /// within [`IDENTIFICATION_TOLERANCE`]. `None` without a truth.
    pub fn verdict(&self, family: Family) -> Option<bool> {
        let truth = self.truth.as_ref()?;
        let (kz, ka) = self.levels;
        Some(
            family
                .members(kz, ka)
                .into_iter()
                .all(|f| match (self.value(f), truth.target(f)) {
                    (Some(v), Some(t)) => (v - t).abs() <= IDENTIFICATION_TOLERANCE,
                    _ => false,
                }),
        )
    }

    /// Messages for every quantity that could not be evaluated.
    pub fn flags(&self) -> Vec<String> {
        self.means
            .iter()
            .chain(&self.contrasts)
            .chain(&self.ipw)
            .filter_map(|e| {
                e.value
                    .as_ref()
                    .err()
                    .map(|m| format!("{}: {m}", e.functional))
            })
            .collect()
    }
}

/// Evaluates every functional on an observed joint. Never fails on
/// positivity problems; affected quantities carry the error instead.
pub fn full_report(j: &JointTable) -> Result<EstimandReport> {
    let law = ObservedLaw::from_joint(j)?;
    Ok(report_for_law(&law, None))
}

/// Report for a generative model: latent variables are summed out and the
/// counterfactual truths are attached.
pub fn full_report_scm(m: &DiscreteScm) -> Result<EstimandReport> {
    let hidden: Vec<&str> = m
        .dag()
        .nodes()
        .iter()
        .map(String::as_str)
        .filter(|n| ![ASSIGNMENT, COVARIATE, TREATMENT, OUTCOME].contains(n))
        .collect();
    let law = ObservedLaw::from_joint(&m.observed_joint(&hidden)?)?;
    Ok(report_for_law(&law, Some(Truth::from_scm(m)?)))
}

pub fn report_for_law(law: &ObservedLaw, truth: Option<Truth>) -> EstimandReport {
    let [kz, _, ka, _] = law.cards();
    let eval = |f: Functional| Entry {
        functional: f,
        value: law.evaluate(f).map_err(|e| e.to_string()),
    };
    let mut means = Vec::new();
    let mut contrasts = Vec::new();
    let mut ipw = Vec::new();
    for family in Family::ALL {
        for f in family.members(kz, ka) {
            means.push(eval(f));
            if let Some(twin) = Family::ipw_twin(f) {
                ipw.push(eval(twin));
            }
        }
        contrasts.push(eval(family.contrast()));
    }
    EstimandReport {
        levels: (kz, ka),
        means,
        contrasts,
        ipw,
        truth,
        positivity: law.positivity(),
    }
}
