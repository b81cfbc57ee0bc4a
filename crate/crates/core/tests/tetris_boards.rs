use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::PathBuf;

use multiboltz::exact::multivariate_coeffs;
use multiboltz::sampler::{RandomSource, ToleranceSpec};
use multiboltz::tetris::{
    build_automaton, disassemble, extract_instance, minimize, render_svg, tessellation_count, to_grammar, Kind,
    PlacedPiece, Tessellation, TetrisModel,
};
use multiboltz::tuner::TargetComposition;
use num_bigint::BigUint;
use proptest::prelude::*;

/// One-sided tetrominoes drawn with `y` pointing up, in kind order.
const SHAPES: [(Kind, [(i32, i32); 4]); 7] = [
    (Kind::Z, [(0, 1), (1, 1), (1, 0), (2, 0)]),
    (Kind::O, [(0, 0), (1, 0), (0, 1), (1, 1)]),
    (Kind::L, [(0, 0), (1, 0), (2, 0), (2, 1)]),
    (Kind::J, [(0, 1), (0, 0), (1, 0), (2, 0)]),
    (Kind::I, [(0, 0), (1, 0), (2, 0), (3, 0)]),
    (Kind::S, [(0, 0), (1, 0), (1, 1), (2, 1)]),
    (Kind::T, [(0, 0), (1, 0), (2, 0), (1, 1)]),
];

/// Every orientation of every shape, numbered by counter-clockwise quarter
/// turns with repeats skipped; cells sorted by `(y, x)` and shifted so the
/// first cell is at the origin.
fn orientations() -> Vec<(Kind, u8, Vec<(i32, i32)>)> {
    let mut out = Vec::new();
    for (kind, cells) in SHAPES {
        let mut seen = HashSet::new();
        let mut cur = cells.to_vec();
        for _ in 0..4 {
            let mut c = cur.clone();
            c.sort_by_key(|&(x, y)| (y, x));
            let (x0, y0) = c[0];
            let c: Vec<(i32, i32)> = c.iter().map(|&(x, y)| (x - x0, y - y0)).collect();
            if seen.insert(c.clone()) {
                out.push((kind, seen.len() as u8 - 1, c));
            }
            cur = cur.iter().map(|&(x, y)| (-y, x)).collect();
        }
    }
    out
}

/// Every tiling of the `w x h` rectangle: always cover the lowest, then
/// leftmost, empty cell.
fn brute_force(w: usize, h: usize) -> Vec<Vec<(Kind, [[usize; 2]; 4])>> {
    fn go(
        w: usize,
        h: usize,
        grid: &mut Vec<bool>,
        shapes: &[(Kind, u8, Vec<(i32, i32)>)],
        cur: &mut Vec<(Kind, [[usize; 2]; 4])>,
        out: &mut Vec<Vec<(Kind, [[usize; 2]; 4])>>,
    ) {
        let Some(first) = grid.iter().position(|&b| !b) else {
            out.push(cur.clone());
            return;
        };
        let (fx, fy) = ((first % w) as i32, (first / w) as i32);
        for (kind, _, cells) in shapes {
            let placed: Option<Vec<usize>> = cells
                .iter()
                .map(|&(dx, dy)| {
                    let (x, y) = (fx + dx, fy + dy);
                    (x >= 0 && (x as usize) < w && (y as usize) < h && !grid[y as usize * w + x as usize])
                        .then(|| y as usize * w + x as usize)
                })
                .collect();
            let Some(placed) = placed else { continue };
            for &c in &placed {
                grid[c] = true;
            }
            let mut cs = [[0usize; 2]; 4];
            for (slot, &c) in placed.iter().enumerate() {
                cs[slot] = [c % w, c / w];
            }
            cur.push((*kind, cs));
            go(w, h, grid, shapes, cur, out);
            cur.pop();
            for &c in &placed {
                grid[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(w, h, &mut vec![false; w * h], &orientations(), &mut Vec::new(), &mut out);
    out
}

fn to_tessellation(w: usize, h: usize, tiling: &[(Kind, [[usize; 2]; 4])]) -> Tessellation {
    let shapes = orientations();
    let pieces = tiling
        .iter()
        .map(|&(kind, cells)| {
            // Recover the rotation index from the normalized cell pattern.
            let mut c: Vec<(i32, i32)> = cells.iter().map(|&[x, y]| (x as i32, y as i32)).collect();
            c.sort_by_key(|&(x, y)| (y, x));
            let (x0, y0) = c[0];
            let c: Vec<(i32, i32)> = c.iter().map(|&(x, y)| (x - x0, y - y0)).collect();
            let rotation = shapes.iter().find(|s| s.0 == kind && s.2 == c).unwrap().1;
            PlacedPiece { kind, rotation, cells }
        })
        .collect();
    Tessellation::new(w, h, pieces).unwrap()
}

#[test]
fn counts_and_compositions_match_brute_force() {
    for (w, ns) in [(2usize, 1..=6usize), (3, 1..=6), (4, 1..=6)] {
        let g = to_grammar(&minimize(&build_automaton(w).unwrap()));
        for n in ns {
            if (4 * n) % w != 0 {
                assert_eq!(tessellation_count(w, n).unwrap(), BigUint::from(0u32));
                continue;
            }
            let tilings = brute_force(w, 4 * n / w);
            assert_eq!(tessellation_count(w, n).unwrap(), BigUint::from(tilings.len()), "w={w} n={n}");
            let mut profiles: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
            for t in &tilings {
                let mut p = vec![0u32; 7];
                for (k, _) in t {
                    p[k.index()] += 1;
                }
                *profiles.entry(p).or_default() += 1;
            }
            for (p, c) in profiles {
                let exact = multivariate_coeffs(&g, n, &p).unwrap().value;
                assert_eq!(exact, BigUint::from(c), "w={w} n={n} profile {p:?}");
            }
        }
    }
}

#[test]
fn disassembly_is_a_bijection_onto_accepting_paths() {
    for (w, h) in [(2, 8), (3, 8), (4, 6)] {
        let a = build_automaton(w).unwrap();
        let mut paths = HashSet::new();
        let tilings = brute_force(w, h);
        for t in &tilings {
            let tess = to_tessellation(w, h, t);
            let path = disassemble(&a, &tess).unwrap();
            assert_eq!(path.first().map(|t| t.from), Some(a.initial()));
            assert!(a.is_final(path.last().unwrap().to));
            for pair in path.windows(2) {
                assert_eq!(pair[0].to, pair[1].from);
            }
            assert!(paths.insert(path.iter().map(|t| (t.from, t.piece)).collect::<Vec<_>>()));
        }
        assert_eq!(paths.len(), tilings.len());
    }
}

#[test]
fn every_state_lies_on_a_flat_to_flat_path() {
    for w in 2..=6 {
        let a = build_automaton(w).unwrap();
        let n = a.num_states();
        let mut fwd = vec![false; n];
        let mut back = vec![false; n];
        let mut preds = vec![Vec::new(); n];
        for t in &a.transitions {
            preds[t.to].push(t.from);
        }
        let mut q = VecDeque::from([a.initial()]);
        fwd[a.initial()] = true;
        while let Some(s) = q.pop_front() {
            for t in a.outgoing(s) {
                if !fwd[t.to] {
                    fwd[t.to] = true;
                    q.push_back(t.to);
                }
            }
        }
        let mut q = VecDeque::from([a.initial()]);
        back[a.initial()] = true;
        while let Some(s) = q.pop_front() {
            for &p in &preds[s] {
                if !back[p] {
                    back[p] = true;
                    q.push_back(p);
                }
            }
        }
        assert!(fwd.iter().all(|&b| b), "w={w}: unreachable state");
        assert!(back.iter().all(|&b| b), "w={w}: dead state");
    }
}

#[test]
fn sampled_width_six_boards_are_playable() {
    let model = TetrisModel::new(6, 30, &TargetComposition::uniform(7)).unwrap();
    let tol = ToleranceSpec::new(0.0, 0.5, 1.0).unwrap();
    let mut rng = RandomSource::new(42);
    for _ in 0..100 {
        let s = model.sample(&mut rng, &tol).unwrap();
        let t = &s.tessellation;
        assert_eq!((t.width(), t.height()), (6, 20));
        let inst = extract_instance(t).unwrap();
        inst.verify().unwrap();
        assert_eq!(inst.placements.len(), 30);
        let back: Vec<Kind> = disassemble(model.automaton(), t).unwrap().iter().map(|t| t.kind).collect();
        assert_eq!(back, s.word);
    }
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/board_4x4.svg")
}

#[test]
fn svg_matches_golden_file() {
    // The 4 x 4 tiling using the most distinct kinds, first in search order.
    let tilings = brute_force(4, 4);
    let best = tilings
        .iter()
        .max_by_key(|t| t.iter().map(|p| p.0).collect::<HashSet<_>>().len())
        .unwrap();
    let svg = render_svg(&to_tessellation(4, 4, best));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &svg).unwrap();
    }
    assert_eq!(svg, std::fs::read_to_string(golden_path()).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Sampled boards survive a JSON round trip, disassemble to their own
    /// word, and replay as a valid drop order.
    #[test]
    fn sampled_boards_round_trip(seed in any::<u64>(), w in 3usize..=5) {
        let n = 4 * w;
        let model = TetrisModel::new(w, n, &TargetComposition::uniform(7)).unwrap();
        let tol = ToleranceSpec::new(0.0, 1.0, 1.0).unwrap();
        let s = model.sample(&mut RandomSource::new(seed), &tol).unwrap();
        let json = serde_json::to_string(&s.tessellation).unwrap();
        let back: Tessellation = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &s.tessellation);
        let kinds: Vec<Kind> = disassemble(model.automaton(), &back).unwrap().iter().map(|t| t.kind).collect();
        prop_assert_eq!(kinds, s.word.clone());
        prop_assert!(extract_instance(&back).unwrap().verify().is_ok());
        let counts = back.kind_counts();
        prop_assert_eq!(counts.iter().sum::<u64>() as usize, n);
    }
}
