//! Exact observed-data functionals next to the counterfactual means they are
//! meant to recover, for the two canonical structures.

use estimandlab::estimands::{full_report_scm, Family};
use estimandlab::scenarios::{structure1, structure2};

fn main() -> estimandlab::Result<()> {
    for s in [structure1(), structure2()] {
        let rep = full_report_scm(&s.scm)?;
        let t = rep.truth.as_ref().expect("model reports carry truths");
        println!(
            "{}: itt={:.4} ppe={:.4} ate={:.4}",
            s.name, t.itt, t.ppe, t.ate
        );
        for family in Family::ALL {
            let delta = rep.value(family.contrast()).unwrap_or(f64::NAN);
            let target = t_target(t, family);
            println!(
                "  delta_{:<20} {:>8.4}  (target {:.4}, identified: {})",
                family.name(),
                delta,
                target,
                rep.verdict(family).unwrap_or(false)
            );
        }
    }
    Ok(())
}

fn t_target(t: &estimandlab::estimands::Truth, family: Family) -> f64 {
    t.target(family.contrast()).expect("contrasts have targets")
}
