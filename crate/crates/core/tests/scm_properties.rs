mod common;

use common::{brute_do_mean, conditional_mutual_information, random_dag};
use estimandlab::rng::StreamRng;
use estimandlab::scm::{parse_scm, DiscreteScm};
use proptest::prelude::*;

fn arb_scm(max_nodes: usize) -> impl Strategy<Value = DiscreteScm> {
    (2..=max_nodes, any::<u64>(), 0.2f64..0.8).prop_map(|(n, seed, p)| {
        let mut rng = StreamRng::new(seed, 0);
        let dag = random_dag(&mut rng, n, p);
        let cards: Vec<usize> = (0..n).map(|_| 2 + rng.below(2)).collect();
        DiscreteScm::random(dag, &cards, &mut rng, 0.02).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn joint_mass_is_one(m in arb_scm(6)) {
        let total: f64 = m.exact_joint().mass().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intervention_is_idempotent_and_commutes(m in arb_scm(6), i in any::<usize>(), j in any::<usize>()) {
        let names = m.dag().nodes().to_vec();
        let (x, y) = (names[i % names.len()].as_str(), names[j % names.len()].as_str());
        let once = m.intervene(&[(x, 1)]).unwrap();
        prop_assert_eq!(once.intervene(&[(x, 1)]).unwrap(), once.clone());
        if x != y {
            let xy = once.intervene(&[(y, 0)]).unwrap();
            let yx = m.intervene(&[(y, 0)]).unwrap().intervene(&[(x, 1)]).unwrap();
            prop_assert_eq!(xy, yx);
        }
    }

    #[test]
    fn counterfactual_means_match_truncated_sum(m in arb_scm(6), i in any::<usize>(), v in 0usize..2) {
        let names = m.dag().nodes().to_vec();
        let x = names[i % names.len()].as_str();
        let target = names.iter().find(|n| n.as_str() != x).unwrap();
        let engine = m.counterfactual_mean(&[(x, v)], target).unwrap();
        prop_assert!((engine - brute_do_mean(&m, &[(x, v)], target)).abs() < 1e-12);
    }

    #[test]
    fn marginalization_commutes(m in arb_scm(6), i in any::<usize>(), j in any::<usize>()) {
        let j_all = m.exact_joint();
        let names = m.dag().nodes().to_vec();
        let (x, y) = (&names[i % names.len()], &names[j % names.len()]);
        prop_assume!(x != y && names.len() > 2);
        let a = j_all.hide(&[x]).unwrap().hide(&[y]).unwrap();
        let b = j_all.hide(&[y]).unwrap().hide(&[x]).unwrap();
        prop_assert_eq!(a.vars(), b.vars());
        for (p, q) in a.mass().iter().zip(b.mass()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn tower_property(m in arb_scm(5), i in any::<usize>()) {
        // E[E[T | S]] = E[T]
        let j = m.exact_joint();
        let names = m.dag().nodes().to_vec();
        let t = names.last().unwrap().as_str();
        let s = names[i % (names.len() - 1)].as_str();
        let k = m.cardinality(s).unwrap();
        let outer: f64 = (0..k)
            .map(|v| j.prob(&[(s, v)]).unwrap() * j.cond_mean(t, &[(s, v)]).unwrap())
            .sum();
        prop_assert!((outer - j.mean(t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn parents_screen_off_non_descendants(m in arb_scm(6)) {
        // local Markov property in the exact joint
        let dag = m.dag();
        let j = m.exact_joint();
        for v in dag.nodes() {
            let parents = dag.parents(v).unwrap();
            let desc = dag.descendants(v).unwrap();
            let others: Vec<&str> = dag.nodes().iter().map(String::as_str)
                .filter(|n| *n != v && !desc.contains(*n) && !parents.contains(n)).collect();
            if others.is_empty() { continue; }
            let cmi = conditional_mutual_information(&j, &[v], &others, &parents);
            prop_assert!(cmi.abs() <= 1e-10, "{v}: {cmi}");
        }
    }

    #[test]
    fn text_round_trip_is_exact(m in arb_scm(5)) {
        let back = parse_scm(&m.to_text()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn deterministic_tables_give_forced_counterfactuals() {
    let dag = estimandlab::graph::Dag::new(&["A", "B", "Y"], &[("A", "B"), ("B", "Y")]).unwrap();
    let m = DiscreteScm::binary(
        dag,
        &[("A", &[0.5]), ("B", &[1.0, 0.0]), ("Y", &[0.0, 1.0])],
    )
    .unwrap();
    // B = 1 - A and Y = B
    assert_eq!(m.counterfactual_mean(&[("A", 0)], "Y").unwrap(), 1.0);
    assert_eq!(m.counterfactual_mean(&[("A", 1)], "Y").unwrap(), 0.0);
    assert_eq!(m.counterfactual_mean(&[("B", 1)], "Y").unwrap(), 1.0);
}
