//! Numerical evaluation and reverse-mode differentiation of rule
//! right-hand sides, shared by validation, the oracle and the sampler.

use crate::grammar::Expr;
use crate::scalar::Scalar;

pub(crate) struct Env<'a, T> {
    pub f: &'a [T],
    pub z: T,
    pub w: &'a [T],
}

/// Value of `e` at the point described by `env`. A sequence whose argument
/// reaches 1 evaluates to `+inf`.
pub(crate) fn value<T: Scalar>(e: &Expr, env: &Env<T>) -> T {
    match e {
        Expr::Epsilon => T::one(),
        Expr::Atom(i) => env.w[*i] * env.z,
        Expr::NonTerm(j) => env.f[*j],
        Expr::Union(xs) => xs.iter().map(|x| value(x, env)).sum(),
        Expr::Product(xs) => {
            let mut p = T::one();
            for x in xs {
                p *= value(x, env);
            }
            p
        }
        Expr::Seq(a) => {
            let a = value(a, env);
            if a >= T::one() {
                T::infinity()
            } else {
                T::one() / (T::one() - a)
            }
        }
    }
}

/// Partial derivatives of one rule, accumulated by [`backprop`].
#[derive(Debug, Clone)]
pub(crate) struct Grad<T> {
    /// `(j, dPhi/dF_j)` pairs; the same `j` may appear several times.
    pub df: Vec<(usize, T)>,
    pub dz: T,
    pub dw: Vec<T>,
}

impl<T: Scalar> Grad<T> {
    pub fn new(k: usize) -> Self {
        Grad {
            df: Vec::new(),
            dz: T::zero(),
            dw: vec![T::zero(); k],
        }
    }

    pub fn clear(&mut self) {
        self.df.clear();
        self.dz = T::zero();
        self.dw.iter_mut().for_each(|x| *x = T::zero());
    }
}

/// Adds `seed * d(e)/d(.)` to `grad` for every input of `e`.
pub(crate) fn backprop<T: Scalar>(e: &Expr, env: &Env<T>, seed: T, grad: &mut Grad<T>) {
    if seed == T::zero() {
        return;
    }
    match e {
        Expr::Epsilon => {}
        Expr::Atom(i) => {
            grad.dz += seed * env.w[*i];
            grad.dw[*i] += seed * env.z;
        }
        Expr::NonTerm(j) => grad.df.push((*j, seed)),
        Expr::Union(xs) => xs.iter().for_each(|x| backprop(x, env, seed, grad)),
        Expr::Product(xs) => {
            let vals: Vec<T> = xs.iter().map(|x| value(x, env)).collect();
            // suffix[i] = prod of vals[i..]
            let mut suffix = vec![T::one(); vals.len() + 1];
            for i in (0..vals.len()).rev() {
                suffix[i] = suffix[i + 1] * vals[i];
            }
            let mut prefix = T::one();
            for (i, x) in xs.iter().enumerate() {
                backprop(x, env, seed * prefix * suffix[i + 1], grad);
                prefix *= vals[i];
            }
        }
        Expr::Seq(a) => {
            let v = value(a, env);
            let d = T::one() - v;
            backprop(a, env, seed / (d * d), grad);
        }
    }
}
