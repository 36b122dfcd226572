//! d-separation with open-path witnesses, and the single-world graphs used to
//! license each adjustment formula.

use estimandlab::graph::parse_graph;
use estimandlab::scenarios::{structure1, structure2};

fn main() -> estimandlab::Result<()> {
    let g = parse_graph(
        "nodes: Z X A U Y\n\
         Z -> X\nZ -> A\nX -> A\nX -> Y\nA -> Y\nU -> X\nU -> Y\n",
    )?;
    println!("A _||_ U        : {}", g.d_separated(&["A"], &["U"], &[])?);
    println!(
        "A _||_ U | X    : {}",
        g.d_separated(&["A"], &["U"], &["X"])?
    );
    if let Some(p) = g.open_path(&["A"], &["U"], &["X"])? {
        println!("  open path     : {p}");
    }

    let s1 = structure1();
    let za = s1.dag().swig(&[("Z", "z"), ("A", "a")])?;
    println!(
        "\nsplit graph for do(Z=z, A=a):\n{}",
        za.split_graph().to_text()
    );
    for l in za.random_nodes() {
        println!("  random node {l}");
    }
    println!(
        "Y^{{z,a}} _||_ Z          : {}",
        za.independent("Y", &["Z"], &[])?
    );
    println!(
        "Y^{{z,a}} _||_ A^z | X^z,Z : {}",
        za.independent("Y", &["A"], &["X", "Z"])?
    );

    for (name, s) in [("structure1", s1.clone()), ("structure2", structure2())] {
        let a = s.dag().swig(&[("A", "a")])?;
        let sep = a.independent("Y", &["A"], &["X"])?;
        print!("{name}: Y^a _||_ A | X : {sep}");
        match a.open_path("Y", &["A"], &["X"])? {
            Some(w) => println!("   via {w}"),
            None => println!(),
        }
    }
    Ok(())
}
