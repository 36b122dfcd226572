//! Without the X -> A and X -> Y arrows, the unadjusted treatment contrast is
//! unbiased, adjusting for X alone is biased, and adding Z repairs it.

use estimandlab::estimands::{full_report_scm, Functional};
use estimandlab::scenarios::{expected_relations, structure8};

fn main() -> estimandlab::Result<()> {
    let s = structure8();
    let rep = full_report_scm(&s.scm)?;
    let t = rep.truth.clone().expect("model reports carry truths");
    let e = expected_relations(&s)?;
    println!(
        "X-only adjustment needs assignment: {}",
        e.covariate_adjustment_needs_assignment
    );
    for a in 0..2 {
        let row = |f| rep.value(f).expect("positive canonical law");
        println!(
            "a={a}: E[Y^a]={:.6}  E[Y|A=a]={:.6}  psi={:.6}  chi={:.6}",
            t.y_a[a],
            row(Functional::Crude(a)),
            row(Functional::Psi(a)),
            row(Functional::Chi(a)),
        );
    }
    Ok(())
}
