use serde::Serialize;

use super::{axiom_gradient, eval_newton, EvalPoint, GfSystem, OracleError, WeightVector};
use crate::expr_eval::{value, Env};
use crate::grammar::Expr;
use crate::linalg::{perron_bounds_from, Csr};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityKind {
    Pole,
    SquareRoot,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityEstimate<T> {
    /// Dominant singularity; `+inf` when the generating function is a
    /// polynomial.
    pub rho: T,
    pub kind: SingularityKind,
    /// Estimated `a` in `C(z) ~ (1 - z/rho)^(-a)`: 1 for a simple pole,
    /// -1/2 for a square-root singularity. NaN when not estimated.
    pub exponent_hint: T,
}

impl<T: Scalar> SingularityEstimate<T> {
    fn none() -> Self {
        SingularityEstimate {
            rho: T::infinity(),
            kind: SingularityKind::Unknown,
            exponent_hint: T::nan(),
        }
    }
}

fn positive_seq(e: &Expr, pos: &[bool]) -> bool {
    fn positive(e: &Expr, pos: &[bool]) -> bool {
        match e {
            Expr::Epsilon => false,
            Expr::Atom(_) => true,
            Expr::NonTerm(j) => pos[*j],
            Expr::Union(xs) | Expr::Product(xs) => xs.iter().any(|x| positive(x, pos)),
            Expr::Seq(a) => positive(a, pos),
        }
    }
    match e {
        Expr::Seq(a) => positive(a, pos) || positive_seq(a, pos),
        Expr::Union(xs) | Expr::Product(xs) => xs.iter().any(|x| positive_seq(x, pos)),
        _ => false,
    }
}

impl GfSystem {
    /// True when the language of the axiom is finite: no dependency cycle
    /// among active nonterminals and no sequence over a non-empty language.
    fn finite_language(&self) -> bool {
        let pos = self.grammar.has_nonempty_word();
        if self.active.iter().any(|&i| positive_seq(self.grammar.rule(i), &pos)) {
            return false;
        }
        let adj: Vec<Vec<usize>> = self
            .active
            .iter()
            .map(|&i| {
                let mut js = Vec::new();
                self.grammar.rule(i).for_each_nonterminal(&mut |j| {
                    if let Some(s) = self.slot[j] {
                        js.push(s);
                    }
                });
                js
            })
            .collect();
        crate::grammar::dependencies_first(&adj).is_some()
    }

    /// `J(z)` of an affine system `F = J(z) F + b(z)`, or `None` when a
    /// sequence argument has reached 1 (the system is then outside).
    fn affine_jacobian<T: Scalar>(&self, w: &WeightVector<T>, z: T) -> Option<Csr<T>> {
        let zeros = vec![T::zero(); self.grammar.num_nonterminals()];
        let env = Env {
            f: &zeros,
            z,
            w: w.as_slice(),
        };
        if self
            .active
            .iter()
            .any(|&i| !value(self.grammar.rule(i), &env).is_finite())
        {
            return None;
        }
        let p = EvalPoint { z, w: w.clone() };
        let lin = self.linearize(&zeros, &p, false);
        Some(Csr::from_triplets(
            lin.a.n,
            lin.a
                .iter()
                .filter_map(|(r, c, v)| {
                    let x = if r == c { T::one() - v } else { -v };
                    (x != T::zero()).then_some((r, c, x))
                })
                .collect(),
        ))
    }

    /// Spectral radius of `J(z)` minus 1 for an affine system (`+inf` past a
    /// sequence pole). With a finite `threshold` the power iteration stops
    /// once the sign is settled; `x` carries the iterate between calls.
    fn spectral_gap<T: Scalar>(&self, w: &WeightVector<T>, z: T, settle_sign: bool, x: &mut [T]) -> T {
        let Some(j) = self.affine_jacobian(w, z) else {
            return T::infinity();
        };
        let threshold = if settle_sign { T::one() } else { T::nan() };
        let (lo, hi) = perron_bounds_from(&j, threshold, T::epsilon() * T::of(16.0), 100_000, x);
        if hi < T::one() && settle_sign {
            hi - T::one()
        } else if lo > T::one() && settle_sign {
            lo - T::one()
        } else {
            (lo + hi) / T::of(2.0) - T::one()
        }
    }

    /// Whether `z` lies strictly inside the disc of convergence.
    fn inside<T: Scalar>(&self, w: &WeightVector<T>, z: T, tol: T) -> bool {
        if !self.linear {
            let p = EvalPoint { z, w: w.clone() };
            return eval_newton(self, &p, tol).is_ok();
        }
        // Affine system: converges iff every sequence argument is below 1
        // and the spectral radius of J(z) is below 1.
        let mut x = vec![T::one(); self.active.len()];
        self.spectral_gap(w, z, true, &mut x) < T::zero()
    }
}

/// Root of the increasing map `z -> lambda(J(z)) - 1` in `[lo, hi]` by
/// regula falsi with the Illinois modification, bisecting whenever the
/// interpolation is unusable. Returns the final bracket.
fn affine_root<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let two = T::of(2.0);
    let mut x = vec![T::one(); sys.active.len()];
    let mut flo = sys.spectral_gap(w, lo, false, &mut x);
    let mut fhi = sys.spectral_gap(w, hi, false, &mut x);
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mut c = if fhi.is_finite() && fhi > flo {
            hi - fhi * (hi - lo) / (fhi - flo)
        } else {
            (lo + hi) / two
        };
        // Keep the probe strictly inside, nudged off the endpoints.
        let guard = ((hi - lo) * T::of(1e-3)).max(tol / two);
        if !c.is_finite() {
            c = (lo + hi) / two;
        }
        c = c.max(lo + guard).min(hi - guard);
        if c <= lo || c >= hi {
            break;
        }
        let fc = sys.spectral_gap(w, c, false, &mut x);
        if fc.abs() <= T::epsilon() * T::of(64.0) {
            // At the noise floor of the eigenvalue estimate.
            return (c, c);
        }
        if fc < T::zero() {
            lo = c;
            flo = fc;
            if side == -1 {
                fhi = fhi / two;
            }
            side = -1;
        } else {
            hi = c;
            fhi = fc;
            if side == 1 {
                flo = flo / two;
            }
            side = 1;
        }
    }
    (lo, hi)
}

/// Dominant singularity `rho(w)` by bisection on membership in the domain
/// of convergence, then classification from the growth of `C'` on the
/// probes `rho (1 - 2^-j)`.
///
/// Linear (rational) systems locate the root of `lambda(J(z)) = 1` for the
/// spectral radius of the Jacobian, with bisection as a fallback; the
/// others bisect on convergence of Newton's iteration.
pub fn find_singularity<T: Scalar>(
    sys: &GfSystem,
    w: &WeightVector<T>,
    tol: T,
) -> Result<SingularityEstimate<T>, OracleError> {
    if w.len() != sys.k() {
        return Err(OracleError::DimensionMismatch {
            expected: sys.k(),
            got: w.len(),
        });
    }
    let Some((lo, hi)) = bracket_rho(sys, w, tol) else {
        return Ok(SingularityEstimate::none());
    };
    let eval_tol = super::default_tol::<T>();
    let two = T::of(2.0);
    let rho = (lo + hi) / two;
    let exponent = estimate_exponent(sys, w, rho, lo, hi - lo, eval_tol);
    let kind = classify(exponent);
    Ok(SingularityEstimate {
        rho,
        kind,
        exponent_hint: exponent,
    })
}

/// Dominant singularity alone, without classification (`+inf` when the
/// series is entire).
pub fn locate_rho<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, tol: T) -> Result<T, OracleError> {
    if w.len() != sys.k() {
        return Err(OracleError::DimensionMismatch {
            expected: sys.k(),
            got: w.len(),
        });
    }
    Ok(bracket_rho(sys, w, tol).map_or(T::infinity(), |(lo, hi)| (lo + hi) / T::of(2.0)))
}

/// Bracket `[lo, hi]` of width at most `tol` around the dominant
/// singularity, or `None` when there is none below `1e9`.
fn bracket_rho<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, tol: T) -> Option<(T, T)> {
    if sys.active.is_empty() || sys.finite_language() {
        return None;
    }
    let eval_tol = super::default_tol::<T>();
    let two = T::of(2.0);
    let (mut lo, mut hi) = (T::zero(), T::one());
    while sys.inside(w, hi, eval_tol) {
        lo = hi;
        hi = hi * two;
        if hi > T::of(1e9) {
            return None;
        }
    }
    if sys.linear {
        (lo, hi) = affine_root(sys, w, lo, hi, tol);
    }
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if sys.inside(w, mid, eval_tol) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

fn classify<T: Scalar>(a: T) -> SingularityKind {
    let a = a.as_f64();
    if !a.is_finite() {
        SingularityKind::Unknown
    } else if (a + 0.5).abs() < 0.2 {
        SingularityKind::SquareRoot
    } else if a > 0.5 && (a - a.round()).abs() < 0.2 {
        SingularityKind::Pole
    } else {
        SingularityKind::Unknown
    }
}

/// Least-squares slope of `log C'(z)` against `log(1 - z/rho)` gives
/// `-(a + 1)`.
fn estimate_exponent<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, rho: T, lo: T, width: T, tol: T) -> T {
    // The deepest probe keeps a safety margin over the bracket width.
    let margin = (width / rho).max(T::epsilon()) * T::of(1e3);
    // Rational functions show their pole slope early, and deep probes make
    // the iterative solves of large affine systems ill-conditioned.
    let depth = if sys.linear { 10.0 } else { 16.0 };
    let jmax = (-margin.log2()).floor().as_f64().min(depth) as i32;
    if jmax < 6 {
        return T::nan();
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in (jmax - 5)..=jmax {
        let d = T::of(2f64.powi(-j));
        let z = (rho * (T::one() - d)).min(lo);
        let p = EvalPoint { z, w: w.clone() };
        let Ok(r) = eval_newton(sys, &p, tol) else {
            return T::nan();
        };
        let Ok((dz, _)) = axiom_gradient(sys, &p, &r.values) else {
            return T::nan();
        };
        if !(dz > T::zero()) {
            return T::nan();
        }
        xs.push((T::one() - z / rho).ln());
        ys.push(dz.ln());
    }
    let n = T::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    -(sxy / sxx) - T::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    fn sing(src: &str, w: &[f64]) -> SingularityEstimate<f64> {
        let sys = GfSystem::new(parse_grammar(src).unwrap()).unwrap();
        find_singularity(&sys, &WeightVector::new(w.to_vec()).unwrap(), 1e-10).unwrap()
    }

    #[test]
    fn binary_pole() {
        let s = sing("S = 'a' S | 'b' S | _;", &[1.0, 1.0]);
        assert!((s.rho - 0.5).abs() < 1e-9, "{s:?}");
        assert_eq!(s.kind, SingularityKind::Pole, "{s:?}");
        let s = sing("S = 'a' S | 'b' S | _;", &[2.0, 1.0]);
        assert!((s.rho - 1.0 / 3.0).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn dyck_square_root() {
        let s = sing("D = _ | 'a' D 'b' D;", &[1.0, 1.0]);
        assert!((s.rho - 0.5).abs() < 1e-8, "{s:?}");
        assert_eq!(s.kind, SingularityKind::SquareRoot, "{s:?}");
    }

    #[test]
    fn sequence_pole() {
        let s = sing("S = ('a' | 'b' 'b')*;", &[1.0, 1.0]);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((s.rho - golden).abs() < 1e-9, "{s:?}");
        assert_eq!(s.kind, SingularityKind::Pole);
    }

    #[test]
    fn finite_language_has_no_singularity() {
        let s = sing("S = 'a' T | 'b'; T = 'c' | _;", &[1.0, 1.0, 1.0]);
        assert!(s.rho.is_infinite());
        assert_eq!(s.kind, SingularityKind::Unknown);
    }

    #[test]
    fn large_radius() {
        // rho = 4 for S = 1 + z S / 4
        let s = sing("S = 'a' S | _;", &[0.25]);
        assert!((s.rho - 4.0).abs() < 1e-8, "{s:?}");
    }
}
