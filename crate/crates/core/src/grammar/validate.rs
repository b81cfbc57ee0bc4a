use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::{Expr, Grammar};
use crate::expr_eval::{backprop, value, Env, Grad};

/// Structural diagnostics for a grammar. Failures are reported, not raised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub well_founded: bool,
    pub epsilon_deriving: Vec<bool>,
    /// Strongly connected components of the dependency graph, each sorted,
    /// ordered by smallest member.
    pub dependency_scc: Vec<Vec<usize>>,
    pub strongly_connected: bool,
    /// gcd of cycle lengths in the dependency graph equals 1. Heuristic only.
    pub aperiodic_hint: bool,
    /// Human-readable reasons when `well_founded` is false.
    pub problems: Vec<String>,
}

/// Whether `e` derives the empty word, given the nullable nonterminals `n`.
pub(crate) fn derives_eps(e: &Expr, n: &[bool]) -> bool {
    match e {
        Expr::Epsilon | Expr::Seq(_) => true,
        Expr::Atom(_) => false,
        Expr::NonTerm(j) => n[*j],
        Expr::Union(xs) => xs.iter().any(|x| derives_eps(x, n)),
        Expr::Product(xs) => xs.iter().all(|x| derives_eps(x, n)),
    }
}

/// Nonterminals that derive the empty word.
pub(crate) fn nullable(g: &Grammar) -> Vec<bool> {
    let mut n = vec![false; g.num_nonterminals()];
    loop {
        let mut changed = false;
        for (i, r) in g.rules().iter().enumerate() {
            if !n[i] && derives_eps(r, &n) {
                n[i] = true;
                changed = true;
            }
        }
        if !changed {
            return n;
        }
    }
}

fn seq_over_nullable(e: &Expr, n: &[bool], out: &mut bool) {
    match e {
        Expr::Seq(a) => {
            if derives_eps(a, n) {
                *out = true;
            }
            seq_over_nullable(a, n, out);
        }
        Expr::Union(xs) | Expr::Product(xs) => xs.iter().for_each(|x| seq_over_nullable(x, n, out)),
        _ => {}
    }
}

/// Constant terms `F(0)` of the system, i.e. the number of derivations of
/// the empty word per nonterminal. `None` when the iteration at `z = 0` does
/// not stabilise (infinitely many empty derivations).
pub(crate) fn constant_terms(g: &Grammar) -> Option<Vec<f64>> {
    let m = g.num_nonterminals();
    let w = vec![1.0; g.k()];
    let mut f = vec![0.0; m];
    for _ in 0..=m + 1 {
        let env = Env { f: &f, z: 0.0, w: &w };
        let next: Vec<f64> = g.rules().iter().map(|r| value(r, &env)).collect();
        if next == f {
            return Some(f);
        }
        if next.iter().any(|x| !x.is_finite()) {
            return None;
        }
        f = next;
    }
    None
}

/// Support of the Jacobian `dPhi/dF` at `(F(0), z = 0)`: `i -> j` when the
/// size-`n` coefficient of nonterminal `i` depends on the size-`n`
/// coefficient of `j`.
pub(crate) fn zero_jacobian_support(g: &Grammar, y0: &[f64]) -> Vec<Vec<usize>> {
    let w = vec![1.0; g.k()];
    let env = Env { f: y0, z: 0.0, w: &w };
    let mut grad = Grad::new(g.k());
    g.rules()
        .iter()
        .map(|r| {
            grad.clear();
            backprop(r, &env, 1.0, &mut grad);
            let mut js: Vec<usize> = grad.df.iter().filter(|(_, d)| *d != 0.0).map(|(j, _)| *j).collect();
            js.sort_unstable();
            js.dedup();
            js
        })
        .collect()
}

/// Topological order of a graph given as adjacency lists, dependencies
/// first; `None` when the graph has a cycle.
pub(crate) fn dependencies_first(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let m = adj.len();
    // Kahn's algorithm on the reversed graph.
    let mut outdeg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut rev = vec![Vec::new(); m];
    for (i, js) in adj.iter().enumerate() {
        for &j in js {
            rev[j].push(i);
        }
    }
    let mut queue: VecDeque<usize> = (0..m).filter(|&i| outdeg[i] == 0).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(j) = queue.pop_front() {
        order.push(j);
        for &i in &rev[j] {
            outdeg[i] -= 1;
            if outdeg[i] == 0 {
                queue.push_back(i);
            }
        }
    }
    (order.len() == m).then_some(order)
}

fn dependency_edges(g: &Grammar) -> Vec<Vec<usize>> {
    g.rules()
        .iter()
        .map(|r| {
            let mut js = Vec::new();
            r.for_each_nonterminal(&mut |j| js.push(j));
            js.sort_unstable();
            js.dedup();
            js
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn validate(g: &Grammar) -> ValidationReport {
    let m = g.num_nonterminals();
    let mut problems = Vec::new();
    let epsilon_deriving = nullable(g);

    let mut bad_seq = false;
    g.rules().iter().for_each(|r| seq_over_nullable(r, &epsilon_deriving, &mut bad_seq));
    if bad_seq {
        problems.push("a sequence is applied to an expression that derives the empty word".to_string());
    }
    let mut well_founded = !bad_seq;
    if well_founded {
        match constant_terms(g) {
            None => {
                well_founded = false;
                problems.push("the empty word has infinitely many derivations".to_string());
            }
            Some(y0) => {
                if dependencies_first(&zero_jacobian_support(g, &y0)).is_none() {
                    well_founded = false;
                    problems.push("the Jacobian at the origin is not nilpotent (unproductive recursion)".to_string());
                }
            }
        }
    }

    let adj = dependency_edges(g);
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..m).map(|_| graph.add_node(())).collect();
    for (i, js) in adj.iter().enumerate() {
        for &j in js {
            graph.add_edge(nodes[i], nodes[j], ());
        }
    }
    let mut comp_of = vec![0usize; m];
    let mut dependency_scc: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    dependency_scc.sort();
    for (ci, c) in dependency_scc.iter().enumerate() {
        for &i in c {
            comp_of[i] = ci;
        }
    }

    let mut reachable = vec![false; m];
    let mut stack = vec![g.axiom()];
    reachable[g.axiom()] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !reachable[j] {
                reachable[j] = true;
                stack.push(j);
            }
        }
    }
    let axiom_comp = comp_of[g.axiom()];
    let strongly_connected = (0..m).filter(|&i| reachable[i]).all(|i| comp_of[i] == axiom_comp);

    // Period of each reachable component with a cycle, via BFS levels.
    let mut period = 0usize;
    for c in dependency_scc.iter().filter(|c| reachable[c[0]]) {
        let ci = comp_of[c[0]];
        let mut level = vec![usize::MAX; m];
        level[c[0]] = 0;
        let mut queue = VecDeque::from([c[0]]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp_of[v] != ci {
                    continue;
                }
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                let diff = (level[u] + 1).abs_diff(level[v]);
                period = gcd(period, diff);
            }
        }
    }

    ValidationReport {
        well_founded,
        epsilon_deriving,
        dependency_scc,
        strongly_connected,
        aperiodic_hint: period == 1,
        problems,
    }
}
