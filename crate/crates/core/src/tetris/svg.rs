use std::fmt::Write;

use super::{Kind, Tessellation};

const CELL: usize = 20;
const MARGIN: usize = 2;

fn color(k: Kind) -> &'static str {
    match k {
        Kind::Z => "#e53935",
        Kind::O => "#fdd835",
        Kind::L => "#fb8c00",
        Kind::J => "#1e88e5",
        Kind::I => "#00acc1",
        Kind::S => "#43a047",
        Kind::T => "#8e24aa",
    }
}

/// SVG 1.1 drawing of the board: one square per cell colored by piece
/// kind, thick lines between different pieces, and a frame.
pub fn render_svg(t: &Tessellation) -> String {
    let (w, h) = (t.width(), t.height());
    let (pw, ph) = (w * CELL + 2 * MARGIN, h * CELL + 2 * MARGIN);
    // Pixel corner of board point (x, y), y pointing up.
    let px = |x: usize| MARGIN + x * CELL;
    let py = |y: usize| MARGIN + (h - y) * CELL;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{pw}" height="{ph}" viewBox="0 0 {pw} {ph}">"#
    );
    let _ = writeln!(s, r#"<g stroke="none">"#);
    for y in 0..h {
        for x in 0..w {
            let k = t.pieces()[t.piece_at(x, y)].kind;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                px(x),
                py(y + 1),
                color(k)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="3" stroke-linecap="square">"#);
    for y in 0..h {
        for x in 0..w {
            let id = t.piece_at(x, y);
            if x + 1 < w && t.piece_at(x + 1, y) != id {
                let _ = writeln!(
                    s,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
                    px(x + 1),
                    py(y + 1),
                    py(y)
                );
            }
            if y + 1 < h && t.piece_at(x, y + 1) != id {
                let _ = writeln!(
                    s,
                    r#"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}"/>"#,
                    px(x),
                    px(x + 1),
                    py(y + 1)
                );
            }
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black" stroke-width="3"/>"#,
        w * CELL,
        h * CELL
    );
    s.push_str("</svg>\n");
    s
}
