//! Independent oracles: path enumeration for d-separation, information
//! measures from exact joints and brute-force truncated factorization.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use estimandlab::graph::Dag;
use estimandlab::rng::StreamRng;
use estimandlab::scm::{DiscreteScm, JointTable};

/// d-separation by enumerating every simple path of the skeleton and testing
/// each for blocking. Exponential, so only for small graphs.
pub fn brute_dsep(g: &Dag, a: &[&str], b: &[&str], c: &[&str]) -> bool {
    let names: Vec<String> = g.nodes().to_vec();
    let n = names.len();
    let id = |s: &str| names.iter().position(|x| x == s).unwrap();
    let mut parents = vec![BTreeSet::new(); n];
    let mut children = vec![BTreeSet::new(); n];
    for (p, ch) in g.edges() {
        parents[id(&ch)].insert(id(&p));
        children[id(&p)].insert(id(&ch));
    }
    let given: BTreeSet<usize> = c.iter().map(|s| id(s)).collect();
    // collider is open iff it or a descendant is conditioned on
    let opens: Vec<bool> = (0..n)
        .map(|v| {
            let mut stack = vec![v];
            let mut seen = vec![false; n];
            while let Some(u) = stack.pop() {
                if given.contains(&u) {
                    return true;
                }
                for &w in &children[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            false
        })
        .collect();
    let targets: BTreeSet<usize> = b.iter().map(|s| id(s)).collect();
    for s in a.iter().map(|s| id(s)) {
        let mut path = vec![s];
        if open_path_exists(&mut path, &targets, &parents, &children, &given, &opens) {
            return false;
        }
    }
    true
}

fn open_path_exists(
    path: &mut Vec<usize>,
    targets: &BTreeSet<usize>,
    parents: &[BTreeSet<usize>],
    children: &[BTreeSet<usize>],
    given: &BTreeSet<usize>,
    opens: &[bool],
) -> bool {
    let last = *path.last().unwrap();
    let neighbours: BTreeSet<usize> = parents[last].union(&children[last]).copied().collect();
    for w in neighbours {
        if path.contains(&w) {
            continue;
        }
        path.push(w);
        let ok = path_is_open(path, parents, given, opens)
            && (targets.contains(&w)
                || open_path_exists(path, targets, parents, children, given, opens));
        path.pop();
        if ok {
            return true;
        }
    }
    false
}

fn path_is_open(
    path: &[usize],
    parents: &[BTreeSet<usize>],
    given: &BTreeSet<usize>,
    opens: &[bool],
) -> bool {
    // only the newest interior node needs checking; earlier ones were checked on the way
    if path.len() < 3 {
        return true;
    }
    let k = path.len() - 2;
    let (prev, mid, next) = (path[k - 1], path[k], path[k + 1]);
    let collider = parents[mid].contains(&prev) && parents[mid].contains(&next);
    if collider {
        opens[mid]
    } else {
        !given.contains(&mid)
    }
}

fn marginal(j: &JointTable, vars: &[&str]) -> HashMap<Vec<usize>, f64> {
    let idx: Vec<usize> = vars.iter().map(|v| j.index_of(v).unwrap()).collect();
    let mut out = HashMap::new();
    for (cell, &m) in j.mass().iter().enumerate() {
        let vals = j.decode(cell);
        *out.entry(idx.iter().map(|&i| vals[i]).collect())
            .or_insert(0.0) += m;
    }
    out
}

/// `I(A; B | C)` in nats.
pub fn conditional_mutual_information(j: &JointTable, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
    let cat = |x: &[&str], y: &[&str]| -> Vec<String> {
        x.iter().chain(y).map(|s| s.to_string()).collect()
    };
    let abc = cat(&cat(a, b).iter().map(String::as_str).collect::<Vec<_>>(), c);
    let abc: Vec<&str> = abc.iter().map(String::as_str).collect();
    let ac = cat(a, c);
    let ac: Vec<&str> = ac.iter().map(String::as_str).collect();
    let bc = cat(b, c);
    let bc: Vec<&str> = bc.iter().map(String::as_str).collect();
    let p_abc = marginal(j, &abc);
    let p_ac = marginal(j, &ac);
    let p_bc = marginal(j, &bc);
    let p_c = marginal(j, c);
    let (na, nb) = (a.len(), b.len());
    let mut total = 0.0;
    for (key, &p) in &p_abc {
        if p <= 0.0 {
            continue;
        }
        let ka: Vec<usize> = key[..na].iter().chain(&key[na + nb..]).copied().collect();
        let kb: Vec<usize> = key[na..].to_vec();
        let kc: Vec<usize> = key[na + nb..].to_vec();
        total += p * (p * p_c[&kc] / (p_ac[&ka] * p_bc[&kb])).ln();
    }
    total
}

/// `E[target]` under `do(set_to)` by summing the truncated product over every
/// joint assignment.
pub fn brute_do_mean(m: &DiscreteScm, set_to: &[(&str, usize)], target: &str) -> f64 {
    let dag = m.dag();
    let cards = m.cardinalities();
    let n = cards.len();
    let fixed: HashMap<usize, usize> = set_to
        .iter()
        .map(|&(v, x)| (dag.index_of(v).unwrap(), x))
        .collect();
    let t = dag.index_of(target).unwrap();
    let mut vals = vec![0usize; n];
    let mut total = 0.0;
    loop {
        if fixed.iter().all(|(&i, &x)| vals[i] == x) {
            let mut p = 1.0;
            for i in 0..n {
                if fixed.contains_key(&i) {
                    continue;
                }
                let pv: Vec<usize> = dag.parent_indices(i).iter().map(|&q| vals[q]).collect();
                p *= m.cpts()[i].prob(vals[i], &pv);
            }
            total += p * vals[t] as f64;
        }
        let mut d = 0;
        loop {
            if d == n {
                return total;
            }
            vals[d] += 1;
            if vals[d] < cards[d] {
                break;
            }
            vals[d] = 0;
            d += 1;
        }
    }
}

/// Random DAG on `n` nodes named `V0..`: each forward pair of a random
/// permutation gets an edge with probability `p`.
pub fn random_dag(rng: &mut StreamRng, n: usize, p: f64) -> Dag {
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.next_f64() < p {
                edges.push((names[order[i]].clone(), names[order[j]].clone()));
            }
        }
    }
    Dag::new(&names, &edges).unwrap()
}

/// Every subset of `pool` (as owned names).
pub fn subsets(pool: &[String]) -> Vec<Vec<String>> {
    (0u32..1 << pool.len())
        .map(|m| {
            (0..pool.len())
                .filter(|i| m & (1 << i) != 0)
                .map(|i| pool[i].clone())
                .collect()
        })
        .collect()
}

pub fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}
