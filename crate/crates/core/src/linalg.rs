//! Small linear-algebra kernels for the oracle: dense LU, CSR matrices,
//! Jacobi-preconditioned BiCGSTAB and Perron root bounds.

use crate::scalar::{norm_inf, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SolveFailure {
    Singular,
    NoConvergence,
}

/// Solves `a x = b` in place (`a` is row-major `n x n`, overwritten).
pub(crate) fn lu_solve<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> Result<(), SolveFailure> {
    debug_assert_eq!(a.len(), n * n);
    let scale = norm_inf(a).max(T::min_positive_value());
    let tiny = scale * T::epsilon() * T::of_usize(n.max(1));
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= tiny || !pmax.is_finite() {
            return Err(SolveFailure::Singular);
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            a[r * n + col] = T::zero();
            for c in col + 1..n {
                let v = a[col * n + c];
                a[r * n + c] -= f * v;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    Ok(())
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub(crate) struct Csr<T> {
    pub n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Builds an `n x n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, T)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<T> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn transpose(&self) -> Self {
        let t = self
            .iter()
            .map(|(r, c, v)| (c, r, v))
            .collect();
        Csr::from_triplets(self.n, t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col[k], self.val[k]))
        })
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut s = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yr = s;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for (r, c, v) in self.iter() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut a = vec![T::zero(); self.n * self.n];
        for (r, c, v) in self.iter() {
            a[r * self.n + c] += v;
        }
        a
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Jacobi-preconditioned BiCGSTAB for `a x = b`, stopping when
/// `|b - a x|_2 <= tol |b|_2`.
pub(crate) fn bicgstab<T: Scalar>(a: &Csr<T>, b: &[T], tol: T, max_iter: usize) -> Result<Vec<T>, SolveFailure> {
    let n = a.n;
    let dinv: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d == T::zero() { T::one() } else { T::one() / d })
        .collect();
    let precond = |v: &[T], out: &mut [T]| {
        for i in 0..n {
            out[i] = v[i] * dinv[i];
        }
    };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok(x);
    }
    let target = tol * bnorm;
    let mut r = b.to_vec();
    // A shadow residual with no zero entries: the common choice r0 = b
    // breaks down at once for sparse right-hand sides such as unit vectors.
    let scale = norm_inf(b);
    let r0: Vec<T> = (0..n)
        .map(|i| b[i] + scale * T::of(0.5 + (i as f64 * 0.618_033_988_749_895).fract()))
        .collect();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut phat = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut shat = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == T::zero() || !rho_new.is_finite() {
            return Err(SolveFailure::NoConvergence);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut phat);
        a.matvec(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v == T::zero() {
            return Err(SolveFailure::Singular);
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() <= target {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok(x);
        }
        precond(&s, &mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == T::zero() {
            return Err(SolveFailure::Singular);
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = dot(&r, &r).sqrt();
        if !rn.is_finite() {
            return Err(SolveFailure::NoConvergence);
        }
        if rn <= target {
            return Ok(x);
        }
        if omega == T::zero() {
            return Err(SolveFailure::NoConvergence);
        }
    }
    Err(SolveFailure::NoConvergence)
}

/// Collatz-Wielandt bounds `(lo, hi)` on the spectral radius of a
/// non-negative matrix `a`, from power iteration on `a + I` (the shift
/// makes every irreducible block primitive). Stops as soon as the bounds
/// exclude `threshold` (never for a NaN threshold), or when they are
/// within `rel_tol` of each other.
#[cfg(test)]
pub(crate) fn perron_bounds<T: Scalar>(a: &Csr<T>, threshold: T, rel_tol: T, max_iter: usize) -> (T, T) {
    let mut x = vec![T::one(); a.n];
    perron_bounds_from(a, threshold, rel_tol, max_iter, &mut x)
}

/// [`perron_bounds`] starting from the positive vector `x`, which is left
/// holding the last iterate (a warm start for nearby matrices).
pub(crate) fn perron_bounds_from<T: Scalar>(
    a: &Csr<T>,
    threshold: T,
    rel_tol: T,
    max_iter: usize,
    x: &mut [T],
) -> (T, T) {
    let n = a.n;
    if n == 0 {
        return (T::zero(), T::zero());
    }
    let mut y = vec![T::zero(); n];
    let (mut lo, mut hi) = (T::zero(), T::infinity());
    for _ in 0..max_iter {
        a.matvec(x, &mut y);
        let (mut l, mut h) = (T::infinity(), T::zero());
        for i in 0..n {
            y[i] += x[i];
            let ratio = y[i] / x[i];
            l = l.min(ratio);
            h = h.max(ratio);
        }
        lo = lo.max(l - T::one());
        hi = hi.min(h - T::one());
        let m = norm_inf(&y);
        for i in 0..n {
            // Keep strictly positive entries so the ratios stay defined.
            x[i] = (y[i] / m).max(T::min_positive_value());
        }
        if hi < threshold || lo > threshold || hi - lo <= rel_tol * hi.abs() {
            break;
        }
    }
    (lo, hi)
}
