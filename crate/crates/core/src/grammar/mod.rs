//! Context-free specifications over a finite alphabet.
//!
//! A [`Grammar`] is a system of equations, one [`Expr`] per nonterminal.
//! Alternatives are written with [`Expr::Union`]; sequences are kept as a
//! first-class [`Expr::Seq`] construct rather than being desugared.

mod parse;
mod point;
mod print;
mod validate;

pub(crate) use validate::{dependencies_first, derives_eps, nullable};

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

pub use parse::parse_grammar;
pub use point::point;
pub use validate::{validate, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined nonterminal {0}")]
    UndefinedNonterminal(String),
    #[error("duplicate definition of nonterminal {0}")]
    DuplicateDefinition(String),
    #[error("duplicate letter {0} in alphabet")]
    DuplicateLetter(String),
    #[error("grammar defines no nonterminal")]
    Empty,
    #[error("invalid grammar structure: {0}")]
    Structure(String),
    #[error("pointed language is empty (the language contains only the empty word)")]
    EmptyPointed,
}

impl GrammarError {
    pub fn code(&self) -> &'static str {
        match self {
            GrammarError::Syntax { .. } => "syntax",
            GrammarError::UndefinedNonterminal(_) => "undefined_nonterminal",
            GrammarError::DuplicateDefinition(_) => "duplicate_definition",
            GrammarError::DuplicateLetter(_) => "duplicate_letter",
            GrammarError::Empty => "empty_grammar",
            GrammarError::Structure(_) => "invalid_structure",
            GrammarError::EmptyPointed => "empty_pointed",
        }
    }
}

/// Ordered set of letter names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(letters: impl IntoIterator<Item = S>) -> Result<Self, GrammarError> {
        let letters: Vec<String> = letters.into_iter().map(Into::into).collect();
        for (i, l) in letters.iter().enumerate() {
            if letters[..i].contains(l) {
                return Err(GrammarError::DuplicateLetter(l.clone()));
            }
        }
        Ok(Alphabet { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn name(&self, i: usize) -> &str {
        &self.letters[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l == name)
    }
}

/// Right-hand side of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Epsilon,
    Atom(usize),
    NonTerm(usize),
    Union(Vec<Expr>),
    Product(Vec<Expr>),
    Seq(Box<Expr>),
}

impl Expr {
    /// Union of `terms`, collapsing the degenerate one-term case.
    pub fn union(mut terms: Vec<Expr>) -> Expr {
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Union(terms)
        }
    }

    /// Product of `factors`, collapsing the degenerate cases.
    pub fn product(mut factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::Epsilon,
            1 => factors.pop().unwrap(),
            _ => Expr::Product(factors),
        }
    }

    pub fn seq(inner: Expr) -> Expr {
        Expr::Seq(Box::new(inner))
    }

    /// Calls `f` on every nonterminal index referenced by this expression.
    pub fn for_each_nonterminal(&self, f: &mut impl FnMut(usize)) {
        match self {
            Expr::Epsilon | Expr::Atom(_) => {}
            Expr::NonTerm(j) => f(*j),
            Expr::Union(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.for_each_nonterminal(f)),
            Expr::Seq(a) => a.for_each_nonterminal(f),
        }
    }

    /// Polynomial degree in the nonterminals; `None` when unbounded (a
    /// sequence over an expression that mentions a nonterminal).
    pub(crate) fn nonterminal_degree(&self) -> Option<usize> {
        match self {
            Expr::Epsilon | Expr::Atom(_) => Some(0),
            Expr::NonTerm(_) => Some(1),
            Expr::Union(xs) => xs
                .iter()
                .map(Expr::nonterminal_degree)
                .try_fold(0, |m, d| d.map(|d| m.max(d))),
            Expr::Product(xs) => xs
                .iter()
                .map(Expr::nonterminal_degree)
                .try_fold(0, |m, d| d.map(|d| m + d)),
            Expr::Seq(a) => match a.nonterminal_degree()? {
                0 => Some(0),
                _ => None,
            },
        }
    }

    fn check(&self, k: usize, m: usize) -> Result<(), GrammarError> {
        match self {
            Expr::Epsilon => Ok(()),
            Expr::Atom(i) if *i < k => Ok(()),
            Expr::Atom(i) => Err(GrammarError::Structure(format!("letter index {i} out of range"))),
            Expr::NonTerm(j) if *j < m => Ok(()),
            Expr::NonTerm(j) => Err(GrammarError::Structure(format!("nonterminal index {j} out of range"))),
            Expr::Union(xs) | Expr::Product(xs) => {
                if xs.len() < 2 {
                    return Err(GrammarError::Structure(
                        "union and product need at least two operands".into(),
                    ));
                }
                xs.iter().try_for_each(|x| x.check(k, m))
            }
            Expr::Seq(a) => a.check(k, m),
        }
    }
}

/// A context-free specification: one rule per nonterminal, plus an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    alphabet: Alphabet,
    nonterminals: Vec<String>,
    rules: Vec<Expr>,
    axiom: usize,
}

impl Grammar {
    pub fn new(
        alphabet: Alphabet,
        nonterminals: Vec<String>,
        rules: Vec<Expr>,
        axiom: usize,
    ) -> Result<Self, GrammarError> {
        if nonterminals.is_empty() {
            return Err(GrammarError::Empty);
        }
        if alphabet.is_empty() {
            return Err(GrammarError::Structure("alphabet must have at least one letter".into()));
        }
        if rules.len() != nonterminals.len() {
            return Err(GrammarError::Structure(format!(
                "{} rules for {} nonterminals",
                rules.len(),
                nonterminals.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, name) in nonterminals.iter().enumerate() {
            if seen.insert(name.as_str(), i).is_some() {
                return Err(GrammarError::DuplicateDefinition(name.clone()));
            }
        }
        if axiom >= nonterminals.len() {
            return Err(GrammarError::Structure(format!("axiom index {axiom} out of range")));
        }
        let (k, m) = (alphabet.len(), nonterminals.len());
        rules.iter().try_for_each(|r| r.check(k, m))?;
        Ok(Grammar {
            alphabet,
            nonterminals,
            rules,
            axiom,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of letters.
    pub fn k(&self) -> usize {
        self.alphabet.len()
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn rules(&self) -> &[Expr] {
        &self.rules
    }

    pub fn rule(&self, i: usize) -> &Expr {
        &self.rules[i]
    }

    pub fn axiom(&self) -> usize {
        self.axiom
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| n == name)
    }

    /// True when every rule is affine in the nonterminals, i.e. the
    /// generating function is rational.
    pub fn is_linear(&self) -> bool {
        self.rules
            .iter()
            .all(|r| matches!(r.nonterminal_degree(), Some(d) if d <= 1))
    }

    /// Renders a letter-index word with the alphabet's names.
    pub fn spell(&self, word: &[usize]) -> String {
        word.iter().map(|&i| self.alphabet.name(i)).collect()
    }

    /// Nonterminals whose language contains at least one word of positive
    /// length (least fixpoint).
    pub(crate) fn has_nonempty_word(&self) -> Vec<bool> {
        let productive = self.productive();
        let mut pos = vec![false; self.num_nonterminals()];
        loop {
            let mut changed = false;
            for i in 0..self.rules.len() {
                if !pos[i] && positive(&self.rules[i], &pos, &productive) {
                    pos[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return pos;
            }
        }
    }

    /// Nonterminals with a non-empty language (least fixpoint).
    pub(crate) fn productive(&self) -> Vec<bool> {
        let mut prod = vec![false; self.num_nonterminals()];
        loop {
            let mut changed = false;
            for i in 0..self.rules.len() {
                if !prod[i] && nonempty(&self.rules[i], &prod) {
                    prod[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return prod;
            }
        }
    }
}

fn nonempty(e: &Expr, prod: &[bool]) -> bool {
    match e {
        Expr::Epsilon | Expr::Atom(_) | Expr::Seq(_) => true,
        Expr::NonTerm(j) => prod[*j],
        Expr::Union(xs) => xs.iter().any(|x| nonempty(x, prod)),
        Expr::Product(xs) => xs.iter().all(|x| nonempty(x, prod)),
    }
}

fn positive(e: &Expr, pos: &[bool], prod: &[bool]) -> bool {
    match e {
        Expr::Epsilon => false,
        Expr::Atom(_) => true,
        Expr::NonTerm(j) => pos[*j],
        Expr::Union(xs) => xs.iter().any(|x| positive(x, pos, prod)),
        Expr::Product(xs) => {
            xs.iter().all(|x| nonempty(x, prod)) && xs.iter().any(|x| positive(x, pos, prod))
        }
        Expr::Seq(a) => positive(a, pos, prod),
    }
}
