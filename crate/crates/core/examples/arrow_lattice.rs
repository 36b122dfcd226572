//! Walks every sub-structure of the full trial graph and checks the relations
//! the graph implies against the exact canonical model.

use estimandlab::estimands::Family;
use estimandlab::scenarios::{all_lattice_members, expected_relations, verify_relations};

fn main() -> estimandlab::Result<()> {
    let mut failures = 0;
    for s in all_lattice_members() {
        let expect = expected_relations(&s)?;
        let (_, checks) = verify_relations(&s)?;
        let licensed: Vec<&str> = Family::ALL
            .iter()
            .filter(|f| expect.is_licensed(**f))
            .map(|f| f.name())
            .collect();
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({:.3e})", c.name, c.observed))
            .collect();
        failures += failed.len();
        println!(
            "{:<28} exclusion={:<5} licensed=[{}]{}",
            s.name,
            expect.exclusion_holds,
            licensed.join(","),
            if failed.is_empty() {
                String::new()
            } else {
                format!("  FAILED: {}", failed.join("; "))
            }
        );
    }
    println!("{failures} failed checks");
    Ok(())
}
