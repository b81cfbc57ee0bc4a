//! Numerical oracle for weighted generating functions: evaluation by
//! fixed-point or Newton iteration, dominant singularities, and
//! expectations of size and letter counts under the Boltzmann model.

mod singularity;

use serde::Serialize;
use thiserror::Error;

use crate::expr_eval::{backprop, value, Env, Grad};
use crate::grammar::{validate, Grammar};
use crate::linalg::{bicgstab, lu_solve, Csr, SolveFailure};
use crate::scalar::{dist_inf, norm_inf, Scalar};

pub use singularity::{find_singularity, locate_rho, SingularityEstimate, SingularityKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("evaluation diverged after {iterations} iterations (point outside the convergence domain)")]
    Divergent { iterations: usize },
    #[error("no convergence within {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("singular Jacobian (Id - dPhi/dF is not invertible)")]
    SingularJacobian,
    #[error("generating function has no finite dominant singularity")]
    NoSingularity,
    #[error("grammar is not well-founded: {0}")]
    NotWellFounded(String),
    #[error("invalid evaluation point: {0}")]
    InvalidPoint(String),
    #[error("expected {expected} weights, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::Divergent { .. } => "divergent",
            OracleError::IterationLimit { .. } => "iteration_limit",
            OracleError::SingularJacobian => "singular_jacobian",
            OracleError::NoSingularity => "no_singularity",
            OracleError::NotWellFounded(_) => "not_well_founded",
            OracleError::InvalidPoint(_) => "invalid_point",
            OracleError::DimensionMismatch { .. } => "dimension_mismatch",
        }
    }
}

/// One strictly positive weight per letter.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector<T>(Vec<T>);

impl<T: Scalar> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self, OracleError> {
        if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x > T::zero())) {
            return Err(OracleError::InvalidPoint(format!("weight {x} is not a positive real")));
        }
        if w.is_empty() {
            return Err(OracleError::InvalidPoint("empty weight vector".into()));
        }
        Ok(WeightVector(w))
    }

    pub fn ones(k: usize) -> Self {
        WeightVector(vec![T::one(); k])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Index<usize> for WeightVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Boltzmann parameter `z` together with the letter weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPoint<T> {
    pub z: T,
    pub w: WeightVector<T>,
}

impl<T: Scalar> EvalPoint<T> {
    pub fn new(z: T, w: WeightVector<T>) -> Result<Self, OracleError> {
        if !(z.is_finite() && z >= T::zero()) {
            return Err(OracleError::InvalidPoint(format!("z = {z} must be a non-negative real")));
        }
        Ok(EvalPoint { z, w })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult<T> {
    /// `C_i(z, w)` per nonterminal (zero for nonterminals unreachable from
    /// the axiom or with an empty language).
    pub values: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    /// `|F - Phi(F)|_inf` at the returned values.
    pub residual: T,
}

/// Expected size and letter counts under the weighted Boltzmann model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationVector<T> {
    pub size_mean: T,
    pub letter_means: Vec<T>,
}

/// How linear systems `(Id - J) x = b` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Dense LU up to [`DENSE_LIMIT`] active nonterminals, sparse above.
    #[default]
    Auto,
    Dense,
    Sparse,
}

pub const DENSE_LIMIT: usize = 300;

/// The functional system `F = Phi(F, z, w)` of a well-founded grammar.
#[derive(Debug, Clone)]
pub struct GfSystem {
    grammar: Grammar,
    /// Nonterminals reachable from the axiom with a non-empty language;
    /// the others have the zero generating function and are skipped.
    active: Vec<usize>,
    /// Position of each nonterminal in `active`.
    slot: Vec<Option<usize>>,
    linear: bool,
    solver: LinearSolver,
    ceiling: f64,
    max_newton_iter: usize,
}

impl GfSystem {
    pub fn new(grammar: Grammar) -> Result<Self, OracleError> {
        let report = validate(&grammar);
        if !report.well_founded {
            return Err(OracleError::NotWellFounded(report.problems.join("; ")));
        }
        let productive = grammar.productive();
        let m = grammar.num_nonterminals();
        let mut seen = vec![false; m];
        let mut active = Vec::new();
        if productive[grammar.axiom()] {
            seen[grammar.axiom()] = true;
            active.push(grammar.axiom());
        }
        let mut i = 0;
        while i < active.len() {
            grammar.rule(active[i]).for_each_nonterminal(&mut |j| {
                if productive[j] && !seen[j] {
                    seen[j] = true;
                    active.push(j);
                }
            });
            i += 1;
        }
        let mut slot = vec![None; m];
        for (s, &i) in active.iter().enumerate() {
            slot[i] = Some(s);
        }
        let linear = grammar.is_linear();
        Ok(GfSystem {
            grammar,
            active,
            slot,
            linear,
            solver: LinearSolver::Auto,
            ceiling: 1e12,
            max_newton_iter: 200,
        })
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    /// Component bound above which an iteration is declared divergent.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn with_max_newton_iter(mut self, n: usize) -> Self {
        self.max_newton_iter = n;
        self
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn k(&self) -> usize {
        self.grammar.k()
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub(crate) fn check_point<T: Scalar>(&self, p: &EvalPoint<T>) -> Result<(), OracleError> {
        if p.w.len() != self.k() {
            return Err(OracleError::DimensionMismatch {
                expected: self.k(),
                got: p.w.len(),
            });
        }
        if !(p.z.is_finite() && p.z >= T::zero()) {
            return Err(OracleError::InvalidPoint(format!("z = {} must be a non-negative real", p.z)));
        }
        Ok(())
    }

    /// `Phi(F)` on the active nonterminals, written into `out` (full length).
    pub(crate) fn phi<T: Scalar>(&self, f: &[T], p: &EvalPoint<T>, out: &mut [T]) {
        let env = Env {
            f,
            z: p.z,
            w: p.w.as_slice(),
        };
        for &i in &self.active {
            out[i] = value(self.grammar.rule(i), &env);
        }
    }

    fn diverged<T: Scalar>(&self, f: &[T]) -> bool {
        let ceiling = T::of(self.ceiling);
        self.active.iter().any(|&i| !(f[i].is_finite() && f[i] <= ceiling))
    }

    /// `Id - dPhi/dF` on the active block, plus `dPhi/dz` and `dPhi/dw`
    /// (per active row) when requested.
    fn linearize<T: Scalar>(&self, f: &[T], p: &EvalPoint<T>, params: bool) -> Linearization<T> {
        let env = Env {
            f,
            z: p.z,
            w: p.w.as_slice(),
        };
        let n = self.active.len();
        let mut t = Vec::with_capacity(4 * n);
        let mut dz = Vec::new();
        let mut dw = Vec::new();
        let mut grad = Grad::new(self.k());
        for (r, &i) in self.active.iter().enumerate() {
            grad.clear();
            backprop(self.grammar.rule(i), &env, T::one(), &mut grad);
            t.push((r, r, T::one()));
            for &(j, d) in &grad.df {
                if let Some(c) = self.slot[j] {
                    t.push((r, c, -d));
                }
            }
            if params {
                dz.push(grad.dz);
                dw.push(grad.dw.clone());
            }
        }
        Linearization {
            a: Csr::from_triplets(n, t),
            dz,
            dw,
        }
    }

    fn use_dense(&self) -> bool {
        match self.solver {
            LinearSolver::Dense => true,
            LinearSolver::Sparse => false,
            LinearSolver::Auto => self.active.len() <= DENSE_LIMIT,
        }
    }

    fn solve<T: Scalar>(&self, a: &Csr<T>, mut b: Vec<T>) -> Result<Vec<T>, OracleError> {
        let n = a.n;
        if self.use_dense() {
            let mut d = a.to_dense();
            lu_solve(&mut d, n, &mut b).map_err(|_| OracleError::SingularJacobian)?;
            return Ok(b);
        }
        let tol = T::epsilon() * T::of(1e3);
        match bicgstab(a, &b, tol, 50 * n.max(200)) {
            Ok(x) => Ok(x),
            Err(SolveFailure::Singular) => Err(OracleError::SingularJacobian),
            Err(SolveFailure::NoConvergence) => {
                // Ill-conditioned near the singularity: fall back to LU when affordable.
                if n <= 2500 {
                    let mut d = a.to_dense();
                    lu_solve(&mut d, n, &mut b).map_err(|_| OracleError::SingularJacobian)?;
                    Ok(b)
                } else {
                    Err(OracleError::SingularJacobian)
                }
            }
        }
    }

    fn residual<T: Scalar>(&self, f: &[T], p: &EvalPoint<T>) -> T {
        let mut g = vec![T::zero(); f.len()];
        self.phi(f, p, &mut g);
        dist_inf(f, &g)
    }
}

struct Linearization<T> {
    a: Csr<T>,
    dz: Vec<T>,
    dw: Vec<Vec<T>>,
}

/// Iterates `F_0 = 0`, `F_{n+1} = Phi(F_n)` until two successive iterates
/// are within `tol`. Returns `F_n`, so `iterations` counts the iterates
/// needed and `residual` is exact.
pub fn eval_fixed_point<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    tol: T,
    max_iter: usize,
) -> Result<EvalResult<T>, OracleError> {
    sys.check_point(p)?;
    let m = sys.grammar.num_nonterminals();
    let mut f = vec![T::zero(); m];
    let mut g = vec![T::zero(); m];
    let mut last = T::infinity();
    for it in 0..max_iter {
        sys.phi(&f, p, &mut g);
        if sys.diverged(&g) {
            return Err(OracleError::Divergent { iterations: it + 1 });
        }
        let d = dist_inf(&f, &g);
        if d <= tol {
            return Ok(EvalResult {
                values: f,
                converged: true,
                iterations: it,
                residual: d,
            });
        }
        last = d;
        std::mem::swap(&mut f, &mut g);
    }
    Err(OracleError::IterationLimit {
        iterations: max_iter,
        residual: last.as_f64(),
    })
}

/// Newton iteration `F += (Id - dPhi/dF)^{-1} (Phi(F) - F)` from `F = 0`.
///
/// Inside the convergence domain the iterates increase monotonically to the
/// least fixed point, so a decreasing or negative component is treated as
/// divergence, as is any component above the system's ceiling.
pub fn eval_newton<T: Scalar>(sys: &GfSystem, p: &EvalPoint<T>, tol: T) -> Result<EvalResult<T>, OracleError> {
    sys.check_point(p)?;
    let m = sys.grammar.num_nonterminals();
    let mut f = vec![T::zero(); m];
    let mut g = vec![T::zero(); m];
    // Iterative solves near the singularity are only accurate to roughly
    // sqrt(eps) relative, so smaller decreases are treated as noise.
    let slack = T::epsilon().sqrt();
    let mut last = T::infinity();
    for it in 1..=sys.max_newton_iter {
        sys.phi(&f, p, &mut g);
        if sys.diverged(&g) {
            return Err(OracleError::Divergent { iterations: it });
        }
        let lin = sys.linearize(&f, p, false);
        let rhs: Vec<T> = sys.active.iter().map(|&i| g[i] - f[i]).collect();
        let delta = match sys.solve(&lin.a, rhs) {
            Ok(d) => d,
            Err(OracleError::SingularJacobian) if it > 1 => {
                // At the singularity itself the Jacobian degenerates; report it
                // as divergence so bisection treats the point as outside.
                return Err(OracleError::Divergent { iterations: it });
            }
            Err(e) => return Err(e),
        };
        let mut step = T::zero();
        for (s, &i) in sys.active.iter().enumerate() {
            let d = delta[s];
            if !d.is_finite() || d < -(tol + slack * f[i].abs()) {
                return Err(OracleError::Divergent { iterations: it });
            }
            f[i] += d;
            step = step.max(d.abs());
        }
        if sys.diverged(&f) {
            return Err(OracleError::Divergent { iterations: it });
        }
        // Below `tol`, or at the rounding floor of the current values when
        // those are too large for `tol` to be attainable. Ill-conditioned
        // solves raise the floor; a small step that stops shrinking marks it.
        let size = norm_inf(&f);
        let floor = T::epsilon() * T::of(64.0) * size;
        let stalled = step >= last && step <= slack * size;
        if step <= tol.max(floor) || stalled {
            let residual = sys.residual(&f, p);
            return Ok(EvalResult {
                values: f,
                converged: true,
                iterations: it,
                residual,
            });
        }
        last = step;
    }
    Err(OracleError::IterationLimit {
        iterations: sys.max_newton_iter,
        residual: last.as_f64(),
    })
}

/// Gradient of the axiom's generating function with respect to `z` and the
/// weights at a converged point, by one adjoint solve.
pub(crate) fn axiom_gradient<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    f: &[T],
) -> Result<(T, Vec<T>), OracleError> {
    let k = sys.k();
    if sys.active.is_empty() {
        return Ok((T::zero(), vec![T::zero(); k]));
    }
    let lin = sys.linearize(f, p, true);
    let mut e = vec![T::zero(); lin.a.n];
    e[0] = T::one(); // the axiom is the first active nonterminal
    let lambda = sys.solve(&lin.a.transpose(), e)?;
    let mut dz = T::zero();
    let mut dw = vec![T::zero(); k];
    for (r, l) in lambda.iter().enumerate() {
        dz += *l * lin.dz[r];
        for j in 0..k {
            dw[j] += *l * lin.dw[r][j];
        }
    }
    Ok((dz, dw))
}

/// `E[N] = z C'/C` and `E[N_i] = w_i (dC/dw_i)/C` at `p`.
pub fn expectations<T: Scalar>(sys: &GfSystem, p: &EvalPoint<T>) -> Result<ExpectationVector<T>, OracleError> {
    let r = eval_newton(sys, p, default_tol::<T>())?;
    expectations_at(sys, p, &r.values)
}

pub(crate) fn expectations_at<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    f: &[T],
) -> Result<ExpectationVector<T>, OracleError> {
    let c = f[sys.grammar.axiom()];
    let (dz, dw) = axiom_gradient(sys, p, f)?;
    if c == T::zero() {
        return Ok(ExpectationVector {
            size_mean: T::zero(),
            letter_means: vec![T::zero(); sys.k()],
        });
    }
    let letter_means: Vec<T> = dw.iter().zip(p.w.as_slice()).map(|(d, w)| *w * *d / c).collect();
    Ok(ExpectationVector {
        size_mean: p.z * dz / c,
        letter_means,
    })
}

/// Jacobian `dPhi/dF` over the active nonterminals (rows and columns in
/// active order), exposed for consistency checks.
pub fn jacobian<T: Scalar>(sys: &GfSystem, f: &[T], p: &EvalPoint<T>) -> (Vec<usize>, Vec<T>) {
    let lin = sys.linearize(f, p, false);
    let n = lin.a.n;
    let mut j = lin.a.to_dense();
    for (r, x) in j.iter_mut().enumerate() {
        *x = if r / n == r % n { T::one() - *x } else { -*x };
    }
    (sys.active.clone(), j)
}

/// Value tolerance used when callers do not supply one: about `1e-12`
/// in double precision, `1e-5` in single precision.
pub fn default_tol<T: Scalar>() -> T {
    T::epsilon().powf(T::of(0.75))
}
