//! The testable implication phi(z, a) = psi(a): rarely rejected when it
//! holds, reliably rejected when an assignment-to-outcome path is open.

use estimandlab::sampling::{falsification_test, simulate};
use estimandlab::scenarios::{structure1, structure2};

fn main() -> estimandlab::Result<()> {
    for s in [structure2(), structure1()] {
        let mut rejected = 0;
        let runs = 20;
        for seed in 0..runs {
            let d = simulate(&s.scm, 100_000, seed, &s.name)?;
            if falsification_test(&d, 200, seed, 0.05)?.reject {
                rejected += 1;
            }
        }
        let d = simulate(&s.scm, 100_000, 99, &s.name)?;
        let r = falsification_test(&d, 200, 99, 0.05)?;
        println!(
            "{}: rejected {rejected}/{runs}; one run T={:.4} p={:.3}, phi z-spread {:.4}, |psi-chi| {:.4}",
            s.name, r.statistic, r.p_value, r.decomposition.phi_z_spread, r.decomposition.psi_chi_gap
        );
    }
    Ok(())
}
