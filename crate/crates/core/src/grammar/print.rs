use std::fmt;

use super::{Expr, Grammar};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    Term,
    Factor,
}

struct Printer<'a> {
    g: &'a Grammar,
}

impl Printer<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr, ctx: Ctx) -> fmt::Result {
        match e {
            Expr::Epsilon => f.write_str("_"),
            Expr::Atom(i) => write!(f, "'{}'", self.g.alphabet.name(*i)),
            Expr::NonTerm(j) => f.write_str(&self.g.nonterminals[*j]),
            Expr::Union(xs) => {
                let paren = ctx != Ctx::Top;
                if paren {
                    f.write_str("(")?;
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    self.write(f, x, Ctx::Term)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Product(xs) => {
                // Nested products keep their parentheses so the tree shape survives a re-parse.
                let paren = ctx == Ctx::Factor;
                if paren {
                    f.write_str("(")?;
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    self.write(f, x, Ctx::Factor)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Seq(a) => {
                self.write(f, a, Ctx::Factor)?;
                f.write_str("*")
            }
        }
    }
}

/// Prints the grammar in the DSL accepted by [`super::parse_grammar`].
/// The axiom is printed first.
impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = Printer { g: self };
        let order = std::iter::once(self.axiom).chain((0..self.rules.len()).filter(|&i| i != self.axiom));
        for i in order {
            write!(f, "{} = ", self.nonterminals[i])?;
            p.write(f, &self.rules[i], Ctx::Top)?;
            f.write_str(";\n")?;
        }
        Ok(())
    }
}
