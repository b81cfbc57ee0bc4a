use std::collections::HashMap;

use super::{Alphabet, Expr, Grammar, GrammarError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Letter(String),
    Eps,
    Eq,
    Pipe,
    Semi,
    LParen,
    RParen,
    Star,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, GrammarError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        let single = match c {
            '=' => Some(Tok::Eq),
            '|' => Some(Tok::Pipe),
            ';' => Some(Tok::Semi),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            bump(&mut chars);
            out.push(Spanned { tok, line: l0, column: c0 });
            continue;
        }
        if c.is_whitespace() {
            bump(&mut chars);
        } else if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
        } else if c == '\'' {
            bump(&mut chars);
            let mut name = String::new();
            loop {
                match chars.peek() {
                    Some('\'') => {
                        bump(&mut chars);
                        break;
                    }
                    Some('\n') | None => return Err(syntax(l0, c0, "unterminated letter literal")),
                    Some(_) => name.push(bump(&mut chars)),
                }
            }
            if name.is_empty() {
                return Err(syntax(l0, c0, "empty letter literal"));
            }
            out.push(Spanned { tok: Tok::Letter(name), line: l0, column: c0 });
        } else if c.is_alphanumeric() || c == '_' {
            let mut name = String::new();
            while chars.peek().is_some_and(|&c| c.is_alphanumeric() || c == '_') {
                name.push(bump(&mut chars));
            }
            if name.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(syntax(l0, c0, format!("identifier {name} starts with a digit")));
            }
            let tok = if name == "_" { Tok::Eps } else { Tok::Ident(name) };
            out.push(Spanned { tok, line: l0, column: c0 });
        } else {
            return Err(syntax(l0, c0, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

/// Expression with unresolved nonterminal names.
enum Raw {
    Eps,
    Letter(usize),
    Name(String),
    Union(Vec<Raw>),
    Product(Vec<Raw>),
    Seq(Box<Raw>),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    letters: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(s) => (s.line, s.column),
            None => (1, 1),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GrammarError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            let (l, c) = self.here();
            Err(syntax(l, c, format!("expected {what}")))
        }
    }

    fn letter(&mut self, name: String) -> usize {
        match self.letters.iter().position(|l| *l == name) {
            Some(i) => i,
            None => {
                self.letters.push(name);
                self.letters.len() - 1
            }
        }
    }

    fn expr(&mut self) -> Result<Raw, GrammarError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Raw::Union(terms) })
    }

    fn term(&mut self) -> Result<Raw, GrammarError> {
        let mut factors = Vec::new();
        while matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Letter(_) | Tok::Eps | Tok::LParen)
        ) {
            // A name followed by `=` starts the next rule: the previous one lacks its `;`.
            if matches!(self.peek(), Some(Tok::Ident(_)))
                && self.toks.get(self.pos + 1).map(|s| &s.tok) == Some(&Tok::Eq)
            {
                break;
            }
            factors.push(self.factor()?);
        }
        match factors.len() {
            0 => {
                let (l, c) = self.here();
                Err(syntax(l, c, "expected a letter, nonterminal, `_` or `(`"))
            }
            1 => Ok(factors.pop().unwrap()),
            _ => Ok(Raw::Product(factors)),
        }
    }

    fn factor(&mut self) -> Result<Raw, GrammarError> {
        let sp = self.toks[self.pos].clone();
        self.pos += 1;
        let mut base = match sp.tok {
            Tok::Ident(name) => Raw::Name(name),
            Tok::Letter(name) => Raw::Letter(self.letter(name)),
            Tok::Eps => Raw::Eps,
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                e
            }
            _ => unreachable!("factor called on a non-factor token"),
        };
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            base = Raw::Seq(Box::new(base));
        }
        Ok(base)
    }
}

fn resolve(raw: Raw, index: &HashMap<String, usize>) -> Result<Expr, GrammarError> {
    Ok(match raw {
        Raw::Eps => Expr::Epsilon,
        Raw::Letter(i) => Expr::Atom(i),
        Raw::Name(name) => match index.get(&name) {
            Some(&j) => Expr::NonTerm(j),
            None => return Err(GrammarError::UndefinedNonterminal(name)),
        },
        Raw::Union(xs) => Expr::Union(xs.into_iter().map(|x| resolve(x, index)).collect::<Result<_, _>>()?),
        Raw::Product(xs) => {
            Expr::Product(xs.into_iter().map(|x| resolve(x, index)).collect::<Result<_, _>>()?)
        }
        Raw::Seq(a) => Expr::Seq(Box::new(resolve(*a, index)?)),
    })
}

/// Parses the grammar DSL: `Name = expr ;` per nonterminal, first rule is
/// the axiom. `'x'` is a letter, `_` the empty word, `|` union,
/// juxtaposition product, postfix `*` sequence, `#` starts a comment.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        letters: Vec::new(),
    };
    let mut names: Vec<String> = Vec::new();
    let mut raws = Vec::new();
    let mut index = HashMap::new();
    while p.pos < p.toks.len() {
        let sp = p.toks[p.pos].clone();
        let Tok::Ident(name) = sp.tok else {
            return Err(syntax(sp.line, sp.column, "expected a nonterminal name"));
        };
        p.pos += 1;
        p.expect(Tok::Eq, "`=`")?;
        let rhs = p.expr()?;
        p.expect(Tok::Semi, "`;`")?;
        if index.insert(name.clone(), names.len()).is_some() {
            return Err(GrammarError::DuplicateDefinition(name));
        }
        names.push(name);
        raws.push(rhs);
    }
    if names.is_empty() {
        return Err(GrammarError::Empty);
    }
    let rules = raws
        .into_iter()
        .map(|r| resolve(r, &index))
        .collect::<Result<Vec<_>, _>>()?;
    let alphabet = if p.letters.is_empty() {
        // A letter-free grammar still needs a non-empty alphabet for weight vectors.
        Alphabet::new(["a"])?
    } else {
        Alphabet::new(p.letters)?
    };
    Grammar::new(alphabet, names, rules, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_words() {
        let g = parse_grammar("S = 'a' S | 'b' S | _;").unwrap();
        assert_eq!(g.num_nonterminals(), 1);
        assert_eq!(g.alphabet().letters(), ["a", "b"]);
        match g.rule(0) {
            Expr::Union(xs) => assert_eq!(xs.len(), 3),
            other => panic!("expected union, got {other:?}"),
        }
    }

    #[test]
    fn dyck() {
        let g = parse_grammar("D = _ | 'a' D 'b' D;").unwrap();
        assert_eq!(g.num_nonterminals(), 1);
        assert_eq!(
            g.rule(0),
            &Expr::Union(vec![
                Expr::Epsilon,
                Expr::Product(vec![Expr::Atom(0), Expr::NonTerm(0), Expr::Atom(1), Expr::NonTerm(0)]),
            ])
        );
    }

    #[test]
    fn undefined_nonterminal() {
        let err = parse_grammar("S = T;").unwrap_err();
        assert_eq!(err, GrammarError::UndefinedNonterminal("T".into()));
        assert_eq!(err.to_string(), "undefined nonterminal T");
    }

    #[test]
    fn duplicate_definition() {
        let err = parse_grammar("S = 'a'; S = 'b';").unwrap_err();
        assert_eq!(err, GrammarError::DuplicateDefinition("S".into()));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_grammar("S = 'a' |\n  ;").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, column: 3, .. }), "{err:?}");
        let err = parse_grammar("S = 'a").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 1, column: 5, .. }), "{err:?}");
        let err = parse_grammar("S = 'a' S = 'b';").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { .. }), "{err:?}");
        assert!(matches!(parse_grammar("S = ('a' ;"), Err(GrammarError::Syntax { .. })));
        assert!(matches!(parse_grammar("S = @;"), Err(GrammarError::Syntax { .. })));
    }

    #[test]
    fn comments_sequences_and_forward_references() {
        let g = parse_grammar(
            "# leading comment\nS = A* 'c' ; # trailing\nA = 'a' | 'b' B;\nB = _;",
        )
        .unwrap();
        assert_eq!(g.nonterminals(), ["S", "A", "B"]);
        assert_eq!(g.alphabet().letters(), ["c", "a", "b"]);
        assert_eq!(
            g.rule(0),
            &Expr::Product(vec![Expr::seq(Expr::NonTerm(1)), Expr::Atom(0)])
        );
    }

    #[test]
    fn multi_character_letters() {
        let g = parse_grammar("S = 'ab' | 'Z1';").unwrap();
        assert_eq!(g.alphabet().letters(), ["ab", "Z1"]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_grammar("  # nothing\n").unwrap_err(), GrammarError::Empty);
    }
}
