use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use crate::grammar::{Alphabet, Expr, Grammar};

use super::{pieces, Kind, Piece, TetrisError, MAX_WIDTH, MIN_WIDTH};

pub(crate) const BAND: usize = 4;

/// Occupancy of the top four rows of a partially disassembled board.
///
/// Bit `r * width + x` is column `x` of band row `r`, row 0 being the top.
/// Rows below the band are full. The top row always holds an occupied cell;
/// the flat boundary is the full band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Boundary {
    pub width: usize,
    pub bits: u64,
}

impl Boundary {
    pub fn flat(width: usize) -> Self {
        Boundary {
            width,
            bits: (1u64 << (BAND * width)) - 1,
        }
    }

    pub fn is_flat(&self) -> bool {
        *self == Boundary::flat(self.width)
    }

    pub fn occupied(&self, x: usize, r: usize) -> bool {
        self.bits >> (r * self.width + x) & 1 == 1
    }

    /// Upper-rightmost occupied cell `(x, r)`.
    pub fn anchor(&self) -> (usize, usize) {
        let w = self.width;
        for r in 0..BAND {
            for x in (0..w).rev() {
                if self.occupied(x, r) {
                    return (x, r);
                }
            }
        }
        unreachable!("a normalized boundary is never empty")
    }

    /// Cells `(x, r)` covered by `piece` when its anchor sits on this
    /// boundary's anchor, as a mask, if they all lie in the band.
    pub(crate) fn placement(&self, piece: &Piece) -> Option<(u64, [(usize, usize); 4])> {
        let (ax, ar) = self.anchor();
        let (px, py) = piece.anchor();
        let mut mask = 0u64;
        let mut cells = [(0, 0); 4];
        for (slot, &(cx, cy)) in piece.cells.iter().enumerate() {
            let x = ax as i64 + (cx - px) as i64;
            let r = ar as i64 - (cy - py) as i64;
            if x < 0 || x >= self.width as i64 || r >= BAND as i64 {
                return None;
            }
            let (x, r) = (x as usize, r as usize);
            cells[slot] = (x, r);
            mask |= 1u64 << (r * self.width + x);
        }
        Some((mask, cells))
    }

    /// Removes `mask` and shifts the band up until its top row is occupied
    /// again, filling from below. Returns the new boundary and the number of
    /// rows shifted.
    pub(crate) fn remove(&self, mask: u64) -> (Boundary, usize) {
        let w = self.width;
        let row = (1u64 << w) - 1;
        let mut bits = self.bits & !mask;
        let mut shifts = 0;
        while bits & row == 0 {
            bits = (bits >> w) | (row << ((BAND - 1) * w));
            shifts += 1;
        }
        (Boundary { width: w, bits }, shifts)
    }

    /// Every occupied component that does not reach the band's bottom row
    /// must be removed by pieces lying entirely inside it, so its size must
    /// be a multiple of 4.
    pub(crate) fn viable(&self) -> bool {
        let w = self.width;
        let mut seen = 0u64;
        for start in 0..BAND * w {
            if seen >> start & 1 == 1 || self.bits >> start & 1 == 0 {
                continue;
            }
            seen |= 1 << start;
            let mut stack = vec![start];
            let (mut size, mut grounded) = (0usize, false);
            while let Some(c) = stack.pop() {
                size += 1;
                let (x, r) = (c % w, c / w);
                grounded |= r == BAND - 1;
                let mut visit = |nc: usize| {
                    if seen >> nc & 1 == 0 && self.bits >> nc & 1 == 1 {
                        seen |= 1 << nc;
                        stack.push(nc);
                    }
                };
                if x + 1 < w {
                    visit(c + 1);
                }
                if x > 0 {
                    visit(c - 1);
                }
                if r + 1 < BAND {
                    visit(c + w);
                }
                if r > 0 {
                    visit(c - w);
                }
            }
            if !grounded && size % 4 != 0 {
                return false;
            }
        }
        true
    }
}

/// A canonical removal: `piece` (an index into [`pieces`]) taken off
/// `from` at its anchor, leading to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: usize,
    pub piece: usize,
    pub kind: Kind,
    pub to: usize,
}

/// Deterministic disassembly automaton; state 0 is the flat boundary,
/// which is both initial and final.
#[derive(Debug, Clone)]
pub struct Automaton {
    pub width: usize,
    pub states: Vec<Boundary>,
    /// Grouped by source state, in generation order.
    pub transitions: Vec<Transition>,
    out: Vec<Range<usize>>,
}

impl Automaton {
    fn new(width: usize, states: Vec<Boundary>, mut transitions: Vec<Transition>) -> Self {
        transitions.sort_by_key(|t| t.from);
        let mut out = vec![0..0; states.len()];
        let mut i = 0;
        for (s, range) in out.iter_mut().enumerate() {
            let start = i;
            while i < transitions.len() && transitions[i].from == s {
                i += 1;
            }
            *range = start..i;
        }
        Automaton {
            width,
            states,
            transitions,
            out,
        }
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn outgoing(&self, s: usize) -> &[Transition] {
        &self.transitions[self.out[s].clone()]
    }

    pub fn is_final(&self, s: usize) -> bool {
        s == 0
    }
}

/// Breadth-first construction from the flat boundary over canonical piece
/// removals, discarding non-viable boundaries.
pub fn build_automaton(w: usize) -> Result<Automaton, TetrisError> {
    if !(MIN_WIDTH..=MAX_WIDTH).contains(&w) {
        return Err(TetrisError::WidthOutOfRange(w));
    }
    let ps = pieces();
    let flat = Boundary::flat(w);
    let mut index: HashMap<u64, usize> = HashMap::from([(flat.bits, 0)]);
    let mut states = vec![flat];
    let mut queue = VecDeque::from([0usize]);
    let mut transitions = Vec::new();
    while let Some(s) = queue.pop_front() {
        let b = states[s];
        for (pi, piece) in ps.iter().enumerate() {
            let Some((mask, _)) = b.placement(piece) else { continue };
            if b.bits & mask != mask {
                continue;
            }
            let (next, _) = b.remove(mask);
            if !next.viable() {
                continue;
            }
            let t = *index.entry(next.bits).or_insert_with(|| {
                states.push(next);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            transitions.push(Transition {
                from: s,
                piece: pi,
                kind: piece.kind,
                to: t,
            });
        }
    }
    Ok(Automaton::new(w, states, transitions))
}

/// Merges states with identical weighted futures: the coarsest partition,
/// separating the final state, in which states of a block have the same
/// number of `kind`-labelled transitions into every block. This preserves
/// the number of accepted words of each composition, hence the grammar's
/// generating function.
///
/// Each block is represented by its first member; its transitions are
/// those of the representative, retargeted to blocks.
pub fn minimize(a: &Automaton) -> Automaton {
    let n = a.num_states();
    let mut block: Vec<usize> = (0..n).map(|s| usize::from(!a.is_final(s))).collect();
    let mut count = if n > 1 { 2 } else { 1 };
    loop {
        let mut ids: HashMap<(usize, Vec<(u8, usize)>), usize> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for s in 0..n {
            let mut sig: Vec<(u8, usize)> = a.outgoing(s).iter().map(|t| (t.kind as u8, block[t.to])).collect();
            sig.sort_unstable();
            let len = ids.len();
            next.push(*ids.entry((block[s], sig)).or_insert(len));
        }
        let new_count = ids.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut rep = vec![usize::MAX; count];
    for s in 0..n {
        if rep[block[s]] == usize::MAX {
            rep[block[s]] = s;
        }
    }
    let states = rep.iter().map(|&s| a.states[s]).collect();
    let block = &block;
    let transitions = rep
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| {
            a.outgoing(s).iter().map(move |t| Transition {
                from: b,
                to: block[t.to],
                ..*t
            })
        })
        .collect::<Vec<_>>();
    Automaton::new(a.width, states, transitions)
}

/// One nonterminal per state: `B_s = [eps if s is flat] | sum_t kind(t) B_to(t)`,
/// branches in the order of [`Automaton::outgoing`]. Letters are the seven
/// kinds; the axiom is the flat state.
pub fn to_grammar(a: &Automaton) -> Grammar {
    let alphabet = Alphabet::new(Kind::ALL.iter().map(|k| k.name())).expect("distinct kind names");
    let names = (0..a.num_states()).map(|s| format!("B{s}")).collect();
    let rules = (0..a.num_states())
        .map(|s| {
            let mut terms = Vec::new();
            if a.is_final(s) {
                terms.push(Expr::Epsilon);
            }
            for t in a.outgoing(s) {
                terms.push(Expr::Product(vec![Expr::Atom(t.kind.index()), Expr::NonTerm(t.to)]));
            }
            if terms.is_empty() {
                // A state with no way out: an unproductive rule, the empty language.
                terms.push(Expr::Product(vec![Expr::Atom(0), Expr::NonTerm(s)]));
            }
            Expr::union(terms)
        })
        .collect();
    Grammar::new(alphabet, names, rules, 0).expect("automaton grammars are well formed")
}
