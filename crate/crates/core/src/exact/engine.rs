use crate::grammar::{dependencies_first, derives_eps, nullable, Expr, Grammar};

use super::ExactError;

/// Coefficient domain for the truncated-series engine.
///
/// Elements are the coefficients `[z^n]` of a series; `atom` is the
/// coefficient of `z^1` contributed by one occurrence of a letter.
pub trait Semiring {
    type Elem: Clone;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn atom(&self, letter: usize) -> Self::Elem;
    fn is_zero(&self, x: &Self::Elem) -> bool;
    fn add_assign(&self, acc: &mut Self::Elem, x: &Self::Elem);
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Eps,
    Atom(usize),
    /// Root of a nonterminal's rule (nodes `0..m`).
    Rule(usize),
    Union(Vec<usize>),
    Prod(usize, usize),
    Seq(usize),
}

/// Grammar compiled to an arena with binary products, with the two
/// evaluation orders (size 0 and positive sizes).
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub nodes: Vec<Node>,
    order0: Vec<usize>,
    order: Vec<usize>,
}

impl Compiled {
    pub fn new(g: &Grammar) -> Result<Self, ExactError> {
        let m = g.num_nonterminals();
        let nt_nullable = nullable(g);
        let mut nodes: Vec<Node> = (0..m).map(|_| Node::Eps).collect();
        let mut null: Vec<bool> = nt_nullable.clone();
        fn compile(e: &Expr, nodes: &mut Vec<Node>, null: &mut Vec<bool>, ntn: &[bool]) -> usize {
            let (node, n) = match e {
                Expr::Epsilon => (Node::Eps, true),
                Expr::Atom(i) => (Node::Atom(*i), false),
                Expr::NonTerm(j) => return *j,
                Expr::Union(xs) => {
                    let cs: Vec<usize> = xs.iter().map(|x| compile(x, nodes, null, ntn)).collect();
                    (Node::Union(cs), derives_eps(e, ntn))
                }
                Expr::Product(xs) => {
                    // Right fold into binary nodes.
                    let mut acc = compile(&xs[xs.len() - 1], nodes, null, ntn);
                    for x in xs[..xs.len() - 1].iter().rev() {
                        let a = compile(x, nodes, null, ntn);
                        let n = null[a] && null[acc];
                        nodes.push(Node::Prod(a, acc));
                        null.push(n);
                        acc = nodes.len() - 1;
                    }
                    return acc;
                }
                Expr::Seq(a) => {
                    let c = compile(a, nodes, null, ntn);
                    (Node::Seq(c), true)
                }
            };
            nodes.push(node);
            null.push(n);
            nodes.len() - 1
        }
        for (j, r) in g.rules().iter().enumerate() {
            let root = compile(r, &mut nodes, &mut null, &nt_nullable);
            nodes[j] = Node::Rule(root);
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Seq(a) = node {
                if null[*a] {
                    return Err(ExactError::NotWellFounded(format!(
                        "sequence over an expression deriving the empty word (node {i})"
                    )));
                }
            }
        }
        let deps = |size0: bool| -> Vec<Vec<usize>> {
            nodes
                .iter()
                .map(|node| match node {
                    Node::Eps | Node::Atom(_) => vec![],
                    Node::Rule(r) => vec![*r],
                    Node::Union(cs) => cs.clone(),
                    Node::Prod(a, b) => {
                        if size0 {
                            vec![*a, *b]
                        } else {
                            let mut d = vec![];
                            if null[*b] {
                                d.push(*a);
                            }
                            if null[*a] {
                                d.push(*b);
                            }
                            d
                        }
                    }
                    Node::Seq(a) => {
                        if size0 {
                            vec![]
                        } else {
                            vec![*a]
                        }
                    }
                })
                .collect()
        };
        let mut d0 = deps(true);
        // At size 0 only nullable nodes matter; the others are zero.
        for (i, d) in d0.iter_mut().enumerate() {
            if !null[i] {
                d.clear();
            } else {
                d.retain(|&j| null[j]);
            }
        }
        let order0 = dependencies_first(&d0)
            .ok_or_else(|| ExactError::NotWellFounded("the empty word has infinitely many derivations".into()))?;
        let order = dependencies_first(&deps(false))
            .ok_or_else(|| ExactError::NotWellFounded("unproductive recursion".into()))?;
        Ok(Compiled { nodes, order0, order })
    }
}

/// Coefficients `[z^0..=z^n_max]` of every node.
pub(crate) struct Series<E> {
    pub coef: Vec<Vec<E>>,
    /// Sizes with a non-zero coefficient, ascending.
    pub support: Vec<Vec<usize>>,
}

impl<E> Series<E> {
    pub fn rule(&self, nt: usize) -> &[E] {
        &self.coef[nt]
    }
}

pub(crate) fn compute<S: Semiring>(c: &Compiled, ring: &S, n_max: usize) -> Series<S::Elem> {
    let len = c.nodes.len();
    let mut coef: Vec<Vec<S::Elem>> = vec![Vec::with_capacity(n_max + 1); len];
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); len];
    // Sum of x_i * y_(n-i) over the listed sizes i <= n.
    let conv = |sizes: &[usize], x: &[S::Elem], y: &[S::Elem], n: usize| {
        let mut acc = ring.zero();
        for &i in sizes.iter().take_while(|&&i| i <= n) {
            let b = &y[n - i];
            if !ring.is_zero(b) {
                ring.add_assign(&mut acc, &ring.mul(&x[i], b));
            }
        }
        acc
    };
    for n in 0..=n_max {
        for v in coef.iter_mut() {
            v.push(ring.zero());
        }
        let order = if n == 0 { &c.order0 } else { &c.order };
        for &v in order {
            let x = match &c.nodes[v] {
                Node::Eps if n == 0 => ring.one(),
                Node::Atom(l) if n == 1 => ring.atom(*l),
                Node::Eps | Node::Atom(_) => continue,
                Node::Rule(r) => coef[*r][n].clone(),
                Node::Union(cs) => {
                    let mut acc = ring.zero();
                    for &ch in cs {
                        if !ring.is_zero(&coef[ch][n]) {
                            ring.add_assign(&mut acc, &coef[ch][n]);
                        }
                    }
                    acc
                }
                Node::Prod(a, b) => {
                    let (a, b) = (*a, *b);
                    // Whichever factor is not yet known at size n has a zero
                    // partner there, so either walk is exact.
                    if support[a].len() <= support[b].len() {
                        conv(&support[a], &coef[a], &coef[b], n)
                    } else {
                        conv(&support[b], &coef[b], &coef[a], n)
                    }
                }
                Node::Seq(_) if n == 0 => ring.one(),
                // C_n = sum_{i >= 1} A_i C_(n-i); A_0 = 0 and C_n is still zero.
                Node::Seq(a) => conv(&support[*a], &coef[*a], &coef[v], n),
            };
            if !ring.is_zero(&x) {
                support[v].push(n);
            }
            coef[v][n] = x;
        }
    }
    Series { coef, support }
}
