use super::{Expr, Grammar, GrammarError};

struct Pointer<'a> {
    g: &'a Grammar,
    productive: Vec<bool>,
    positive: Vec<bool>,
    /// Index of the pointed copy of each original nonterminal.
    copy: Vec<usize>,
}

impl Pointer<'_> {
    fn nonempty(&self, e: &Expr) -> bool {
        match e {
            Expr::Epsilon | Expr::Atom(_) | Expr::Seq(_) => true,
            Expr::NonTerm(j) => self.productive[*j],
            Expr::Union(xs) => xs.iter().any(|x| self.nonempty(x)),
            Expr::Product(xs) => xs.iter().all(|x| self.nonempty(x)),
        }
    }

    /// Pointed version of `e`; `None` stands for the empty class.
    fn point(&self, e: &Expr) -> Option<Expr> {
        match e {
            Expr::Epsilon => None,
            Expr::Atom(_) => Some(e.clone()),
            Expr::NonTerm(j) => self.positive[*j].then(|| Expr::NonTerm(self.copy[*j])),
            Expr::Union(xs) => {
                let terms: Vec<Expr> = xs.iter().filter_map(|x| self.point(x)).collect();
                (!terms.is_empty()).then(|| Expr::union(terms))
            }
            Expr::Product(xs) => {
                if !xs.iter().all(|x| self.nonempty(x)) {
                    return None;
                }
                let terms: Vec<Expr> = (0..xs.len())
                    .filter_map(|i| {
                        let pi = self.point(&xs[i])?;
                        let factors = xs
                            .iter()
                            .enumerate()
                            .map(|(j, x)| if j == i { pi.clone() } else { x.clone() })
                            .filter(|x| *x != Expr::Epsilon)
                            .collect();
                        Some(Expr::product(factors))
                    })
                    .collect();
                (!terms.is_empty()).then(|| Expr::union(terms))
            }
            Expr::Seq(a) => {
                let pa = self.point(a)?;
                Some(Expr::Product(vec![e.clone(), pa, e.clone()]))
            }
        }
    }
}

fn renumber(e: &Expr, map: &[usize]) -> Expr {
    match e {
        Expr::NonTerm(j) => Expr::NonTerm(map[*j]),
        Expr::Union(xs) => Expr::Union(xs.iter().map(|x| renumber(x, map)).collect()),
        Expr::Product(xs) => Expr::Product(xs.iter().map(|x| renumber(x, map)).collect()),
        Expr::Seq(a) => Expr::seq(renumber(a, map)),
        Expr::Epsilon | Expr::Atom(_) => e.clone(),
    }
}

/// Grammar of the pointed class: its generating function is `z d/dz` of
/// the original one, so the size-`n` coefficient is multiplied by `n`.
/// Marks are not represented, so a pointed word spells as the original.
///
/// Pointed nonterminals get fresh names (`<name>_pt`, with digits added on
/// collision); only nonterminals reachable from the new axiom are kept.
pub fn point(g: &Grammar) -> Result<Grammar, GrammarError> {
    let m = g.num_nonterminals();
    let positive = g.has_nonempty_word();
    if !positive[g.axiom()] {
        return Err(GrammarError::EmptyPointed);
    }
    let p = Pointer {
        g,
        productive: g.productive(),
        positive: positive.clone(),
        copy: (m..2 * m).collect(),
    };
    // Indices 0..m: original rules; m..2m: pointed copies.
    let mut rules: Vec<Option<Expr>> = g.rules().iter().cloned().map(Some).collect();
    rules.extend(g.rules().iter().map(|r| p.point(r)));
    let axiom = p.copy[g.axiom()];

    let mut order = vec![axiom];
    let mut seen = vec![false; 2 * m];
    seen[axiom] = true;
    let mut i = 0;
    while i < order.len() {
        let r = rules[order[i]].as_ref().expect("reachable rules are non-empty");
        r.for_each_nonterminal(&mut |j| {
            if !seen[j] {
                seen[j] = true;
                order.push(j);
            }
        });
        i += 1;
    }

    let mut map = vec![usize::MAX; 2 * m];
    for (new, &old) in order.iter().enumerate() {
        map[old] = new;
    }
    let mut names: Vec<String> = Vec::with_capacity(order.len());
    for &old in &order {
        let name = if old < m {
            p.g.nonterminals()[old].clone()
        } else {
            let base = format!("{}_pt", g.nonterminals()[old - m]);
            let taken = |s: &str| g.nonterminals().iter().any(|n| n == s) || names.iter().any(|n| n == s);
            let mut name = base.clone();
            let mut suffix = 1;
            while taken(&name) {
                name = format!("{base}{suffix}");
                suffix += 1;
            }
            name
        };
        names.push(name);
    }
    let new_rules = order
        .iter()
        .map(|&old| renumber(rules[old].as_ref().unwrap(), &map))
        .collect();
    Grammar::new(g.alphabet().clone(), names, new_rules, 0)
}
