use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::automaton::{Automaton, Boundary, Transition, BAND};
use super::{pieces, Kind, TetrisError};

/// A piece on the board; cells are `[x, y]` with the origin at the
/// bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedPiece {
    pub kind: Kind,
    pub rotation: u8,
    pub cells: [[usize; 2]; 4],
}

#[derive(Serialize, Deserialize)]
struct TessellationRepr {
    width: usize,
    height: usize,
    pieces: Vec<PlacedPiece>,
}

/// A perfect tiling of a `width x height` rectangle by tetrominoes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TessellationRepr", into = "TessellationRepr")]
pub struct Tessellation {
    width: usize,
    height: usize,
    pieces: Vec<PlacedPiece>,
    /// Piece index per cell, row-major from the bottom row.
    grid: Vec<usize>,
}

impl TryFrom<TessellationRepr> for Tessellation {
    type Error = TetrisError;
    fn try_from(r: TessellationRepr) -> Result<Self, TetrisError> {
        Tessellation::new(r.width, r.height, r.pieces)
    }
}

impl From<Tessellation> for TessellationRepr {
    fn from(t: Tessellation) -> Self {
        TessellationRepr {
            width: t.width,
            height: t.height,
            pieces: t.pieces,
        }
    }
}

impl Tessellation {
    /// Checks that every cell is covered exactly once and that each piece
    /// has the shape of its kind and rotation.
    /// Cells of each piece are reordered bottom row first, left to right.
    pub fn new(width: usize, height: usize, mut pieces_on_board: Vec<PlacedPiece>) -> Result<Self, TetrisError> {
        for p in pieces_on_board.iter_mut() {
            p.cells.sort_unstable_by_key(|c| (c[1], c[0]));
        }
        let invalid = |m: String| Err(TetrisError::InvalidTessellation(m));
        if 4 * pieces_on_board.len() != width * height {
            return invalid(format!(
                "{} pieces cannot cover {width} x {height} cells",
                pieces_on_board.len()
            ));
        }
        let shapes = pieces();
        let mut grid = vec![usize::MAX; width * height];
        for (id, p) in pieces_on_board.iter().enumerate() {
            let Some(shape) = shapes.iter().find(|s| s.kind == p.kind && s.rotation == p.rotation) else {
                return invalid(format!("piece {id}: {:?} has no rotation {}", p.kind, p.rotation));
            };
            let mx = p.cells.iter().map(|c| c[0]).min().unwrap();
            let my = p.cells.iter().map(|c| c[1]).min().unwrap();
            let mut rel: Vec<(i8, i8)> = p
                .cells
                .iter()
                .map(|c| ((c[0] - mx) as i8, (c[1] - my) as i8))
                .collect();
            rel.sort_unstable();
            if rel != shape.cells {
                return invalid(format!("piece {id} does not have the shape of {:?}/{}", p.kind, p.rotation));
            }
            for c in &p.cells {
                if c[0] >= width || c[1] >= height {
                    return invalid(format!("piece {id} leaves the board"));
                }
                let slot = &mut grid[c[1] * width + c[0]];
                if *slot != usize::MAX {
                    return invalid(format!("cell ({}, {}) is covered twice", c[0], c[1]));
                }
                *slot = id;
            }
        }
        Ok(Tessellation {
            width,
            height,
            pieces: pieces_on_board,
            grid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pieces(&self) -> &[PlacedPiece] {
        &self.pieces
    }

    /// Index of the piece covering `(x, y)`.
    pub fn piece_at(&self, x: usize, y: usize) -> usize {
        self.grid[y * self.width + x]
    }

    /// Number of pieces of each kind, in kind order.
    pub fn kind_counts(&self) -> [u64; 7] {
        let mut c = [0; 7];
        for p in &self.pieces {
            c[p.kind.index()] += 1;
        }
        c
    }
}

/// Rebuilds the board from a sequence of removals accepted by `a` (raw,
/// not minimized), starting and ending at the flat state.
pub(crate) fn assemble(a: &Automaton, removals: &[Transition]) -> Result<Tessellation, TetrisError> {
    let w = a.width;
    if (4 * removals.len()) % w != 0 {
        return Err(TetrisError::AreaMismatch {
            width: w,
            pieces: removals.len(),
        });
    }
    let height = 4 * removals.len() / w;
    let shapes = pieces();
    let mut b = Boundary::flat(w);
    let mut state = a.initial();
    // Board row of band row 0.
    let mut top = height as i64 - 1;
    let mut placed = Vec::with_capacity(removals.len());
    for t in removals {
        if t.from != state || a.states[state] != b {
            return Err(TetrisError::Replay(format!("removal from state {} while at state {state}", t.from)));
        }
        let piece = &shapes[t.piece];
        let (mask, cells) = b
            .placement(piece)
            .filter(|(m, _)| b.bits & m == *m)
            .ok_or_else(|| TetrisError::Replay(format!("piece {} does not fit state {state}", t.piece)))?;
        let mut abs = [[0usize; 2]; 4];
        for (slot, &(x, r)) in cells.iter().enumerate() {
            let y = top - r as i64;
            if y < 0 {
                return Err(TetrisError::Replay("piece below the board".into()));
            }
            abs[slot] = [x, y as usize];
        }
        placed.push(PlacedPiece {
            kind: piece.kind,
            rotation: piece.rotation,
            cells: abs,
        });
        let (next, shifts) = b.remove(mask);
        b = next;
        top -= shifts as i64;
        state = t.to;
    }
    if !a.is_final(state) || top != -1 {
        return Err(TetrisError::Replay("the removals do not end on the flat boundary".into()));
    }
    Tessellation::new(w, height, placed)
}

/// The canonical disassembly of `t`: repeatedly remove the piece covering
/// the upper-rightmost remaining cell. Returns the removals as transitions
/// of the raw automaton `a` for the same width.
pub fn disassemble(a: &Automaton, t: &Tessellation) -> Result<Vec<Transition>, TetrisError> {
    if a.width != t.width {
        return Err(TetrisError::Replay(format!("automaton width {} for a board of width {}", a.width, t.width)));
    }
    let shapes = pieces();
    let mut state = a.initial();
    let mut b = Boundary::flat(a.width);
    let mut top = t.height as i64 - 1;
    let mut out = Vec::with_capacity(t.pieces.len());
    while out.len() < t.pieces.len() {
        let (ax, ar) = b.anchor();
        let y = top - ar as i64;
        if y < 0 {
            return Err(TetrisError::Replay("anchor below the board".into()));
        }
        let id = t.piece_at(ax, y as usize);
        let mut want: Vec<(usize, usize)> = t.pieces[id]
            .cells
            .iter()
            .map(|c| (c[0], (top - c[1] as i64) as usize))
            .collect();
        want.sort_unstable();
        if want.iter().any(|&(_, r)| r >= BAND) {
            return Err(TetrisError::Replay(format!("piece {id} reaches below the band")));
        }
        let found = a.outgoing(state).iter().find(|tr| {
            b.placement(&shapes[tr.piece]).is_some_and(|(_, cells)| {
                let mut c = cells.to_vec();
                c.sort_unstable();
                c == want
            })
        });
        let Some(tr) = found else {
            return Err(TetrisError::Replay(format!("no transition removes piece {id} from state {state}")));
        };
        let (mask, _) = b.placement(&shapes[tr.piece]).unwrap();
        let (next, shifts) = b.remove(mask);
        b = next;
        top -= shifts as i64;
        state = tr.to;
        out.push(*tr);
    }
    if !a.is_final(state) || top != -1 {
        return Err(TetrisError::Replay("disassembly does not end on the flat boundary".into()));
    }
    Ok(out)
}

/// One step of an instance: drop piece `piece` into the listed cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub piece: usize,
    pub kind: Kind,
    pub rotation: u8,
    pub cells: [[usize; 2]; 4],
}

/// An order in which the pieces can be dropped to build the board.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSequence {
    pub width: usize,
    pub height: usize,
    pub placements: Vec<Placement>,
}

impl InstanceSequence {
    /// Replays the placements on an empty board: every piece lands on free
    /// cells with nothing above it in its columns, and rests on the floor or
    /// on a piece placed earlier. The final board must be full.
    pub fn verify(&self) -> Result<(), TetrisError> {
        let (w, h) = (self.width, self.height);
        let mut filled = vec![false; w * h];
        for (step, p) in self.placements.iter().enumerate() {
            let fail = |m: &str| Err(TetrisError::Replay(format!("step {step} (piece {}): {m}", p.piece)));
            let own = |x: usize, y: usize| p.cells.iter().any(|c| c[0] == x && c[1] == y);
            let mut supported = false;
            for c in &p.cells {
                let (x, y) = (c[0], c[1]);
                if x >= w || y >= h || filled[y * w + x] {
                    return fail("cell unavailable");
                }
                if (y + 1..h).any(|yy| filled[yy * w + x]) {
                    return fail("column above is blocked");
                }
                supported |= y == 0 || (!own(x, y - 1) && filled[(y - 1) * w + x]);
            }
            if !supported {
                return fail("piece floats");
            }
            for c in &p.cells {
                filled[c[1] * w + c[0]] = true;
            }
        }
        if filled.iter().all(|&f| f) {
            Ok(())
        } else {
            Err(TetrisError::Replay("board is not full after all placements".into()))
        }
    }
}

/// Orders the pieces so that every piece comes after the pieces directly
/// below any of its cells, then checks the order by replay.
pub fn extract_instance(t: &Tessellation) -> Result<InstanceSequence, TetrisError> {
    let mut g: DiGraph<usize, ()> = DiGraph::with_capacity(t.pieces.len(), 2 * t.pieces.len());
    let nodes: Vec<_> = (0..t.pieces.len()).map(|i| g.add_node(i)).collect();
    for y in 0..t.height.saturating_sub(1) {
        for x in 0..t.width {
            let (below, above) = (t.piece_at(x, y), t.piece_at(x, y + 1));
            if below != above {
                g.update_edge(nodes[below], nodes[above], ());
            }
        }
    }
    let order = toposort(&g, None).map_err(|c| TetrisError::CycleDetected(g[c.node_id()]))?;
    let seq = InstanceSequence {
        width: t.width,
        height: t.height,
        placements: order
            .into_iter()
            .map(|n| {
                let id = g[n];
                let p = &t.pieces[id];
                Placement {
                    piece: id,
                    kind: p.kind,
                    rotation: p.rotation,
                    cells: p.cells,
                }
            })
            .collect(),
    };
    seq.verify()?;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetris::build_automaton;

    fn o_piece(x: usize, y: usize) -> PlacedPiece {
        PlacedPiece {
            kind: Kind::O,
            rotation: 0,
            cells: [[x, y], [x + 1, y], [x, y + 1], [x + 1, y + 1]],
        }
    }

    #[test]
    fn coverage_is_checked() {
        assert!(Tessellation::new(2, 4, vec![o_piece(0, 0), o_piece(0, 2)]).is_ok());
        assert!(Tessellation::new(2, 4, vec![o_piece(0, 0), o_piece(0, 1)]).is_err());
        assert!(Tessellation::new(2, 2, vec![o_piece(1, 0)]).is_err());
        let bent = PlacedPiece {
            kind: Kind::O,
            rotation: 0,
            cells: [[0, 0], [1, 0], [2, 0], [3, 0]],
        };
        assert!(Tessellation::new(4, 1, vec![bent]).is_err());
        assert!(Tessellation::new(3, 0, vec![]).is_ok());
    }

    #[test]
    fn stacked_squares() {
        let t = Tessellation::new(2, 4, vec![o_piece(0, 2), o_piece(0, 0)]).unwrap();
        let inst = extract_instance(&t).unwrap();
        let order: Vec<usize> = inst.placements.iter().map(|p| p.piece).collect();
        assert_eq!(order, vec![1, 0]);
        let single = Tessellation::new(2, 2, vec![o_piece(0, 0)]).unwrap();
        assert_eq!(extract_instance(&single).unwrap().placements.len(), 1);
    }

    #[test]
    fn disassembly_round_trip() {
        let a = build_automaton(2).unwrap();
        let t = Tessellation::new(2, 4, vec![o_piece(0, 2), o_piece(0, 0)]).unwrap();
        let word = disassemble(&a, &t).unwrap();
        assert_eq!(word.iter().map(|t| t.kind).collect::<Vec<_>>(), vec![Kind::O, Kind::O]);
        let back = assemble(&a, &word).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_shape() {
        let t = Tessellation::new(2, 2, vec![o_piece(0, 0)]).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["width"], 2);
        assert_eq!(v["pieces"][0]["kind"], "O");
        assert_eq!(v["pieces"][0]["cells"][3], serde_json::json!([1, 1]));
        let back: Tessellation = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
        let bad = serde_json::json!({"width": 2, "height": 2, "pieces": []});
        assert!(serde_json::from_value::<Tessellation>(bad).is_err());
    }

    #[test]
    fn replay_rejects_floating_pieces() {
        let seq = InstanceSequence {
            width: 2,
            height: 4,
            placements: vec![
                Placement {
                    piece: 0,
                    kind: Kind::O,
                    rotation: 0,
                    cells: o_piece(0, 2).cells,
                },
                Placement {
                    piece: 1,
                    kind: Kind::O,
                    rotation: 0,
                    cells: o_piece(0, 0).cells,
                },
            ],
        };
        assert!(seq.verify().is_err());
    }
}
