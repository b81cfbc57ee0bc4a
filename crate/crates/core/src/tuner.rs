//! Weight tuning: choose the Boltzmann parameter and letter weights so
//! that the expected size and composition hit a target.

use serde::Serialize;
use thiserror::Error;

use crate::exact::{fixed_size_expectations, ExactError, ExactWeights};
use crate::grammar::Grammar;
use crate::linalg::lu_solve;
use crate::oracle::{
    expectations, find_singularity, locate_rho, EvalPoint, ExpectationVector, GfSystem, OracleError, WeightVector,
};
use crate::scalar::{norm_inf, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunerError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("singular Jacobian of the expectation map")]
    SingularJacobian,
    #[error("no convergence within {steps} steps (residual {residual:e})")]
    StepLimit { steps: usize, residual: f64 },
    #[error("expected size {n} is out of reach (largest reachable expectation {max:e})")]
    Unreachable { n: usize, max: f64 },
    #[error("starting point lies outside the convergence domain")]
    LeftDomain,
    #[error("invalid target composition: {0}")]
    InvalidTarget(String),
}

impl TunerError {
    pub fn code(&self) -> &'static str {
        match self {
            TunerError::Oracle(e) => e.code(),
            TunerError::Exact(e) => e.code(),
            TunerError::SingularJacobian => "singular_jacobian",
            TunerError::StepLimit { .. } => "step_limit",
            TunerError::Unreachable { .. } => "unreachable",
            TunerError::LeftDomain => "left_domain",
            TunerError::InvalidTarget(_) => "invalid_target",
        }
    }
}

/// Target letter frequencies, each in `(0, 1)`, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TargetComposition<T>(Vec<T>);

impl<T: Scalar> TargetComposition<T> {
    pub fn new(freqs: Vec<T>) -> Result<Self, TunerError> {
        if freqs.is_empty() {
            return Err(TunerError::InvalidTarget("no frequencies".into()));
        }
        if let Some(f) = freqs.iter().find(|f| !(**f > T::zero() && **f < T::one())) {
            if !(freqs.len() == 1 && *f == T::one()) {
                return Err(TunerError::InvalidTarget(format!("frequency {f} is not in (0, 1)")));
            }
        }
        let s: T = freqs.iter().copied().sum();
        let slack = T::of(1e-12).max(T::epsilon() * T::of_usize(4 * freqs.len()));
        if (s - T::one()).abs() > slack {
            return Err(TunerError::InvalidTarget(format!("frequencies sum to {s}, not 1")));
        }
        Ok(TargetComposition(freqs))
    }

    /// Rescales positive values to sum to 1.
    pub fn normalized(values: Vec<T>) -> Result<Self, TunerError> {
        let s: T = values.iter().copied().sum();
        if !(s > T::zero()) {
            return Err(TunerError::InvalidTarget("values must have a positive sum".into()));
        }
        Self::new(values.into_iter().map(|v| v / s).collect())
    }

    pub fn uniform(k: usize) -> Self {
        TargetComposition(vec![T::one() / T::of_usize(k); k])
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
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult<T> {
    pub x: T,
    pub w: WeightVector<T>,
    pub achieved: ExpectationVector<T>,
    /// `|n f* - E[N_i]|_inf` at the returned point.
    pub residual: T,
    pub steps: usize,
    pub dichotomy_events: usize,
}

/// Step and dichotomy budgets for [`tune_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuneLimits {
    pub max_steps: usize,
    pub max_dichotomies: usize,
}

impl Default for TuneLimits {
    fn default() -> Self {
        TuneLimits {
            max_steps: 200,
            max_dichotomies: 400,
        }
    }
}

fn letter_means<T: Scalar>(sys: &GfSystem, z: T, w: &[T]) -> Result<Vec<T>, OracleError> {
    let p = EvalPoint {
        z,
        w: WeightVector::new(w.to_vec())?,
    };
    Ok(expectations(sys, &p)?.letter_means)
}

/// Root `x_n` of `E_{x,w}[N] = n` in `[0, rho(w))`, by bisection on the
/// increasing map `x -> E_{x,w}[N]`; stops when `|E - n| <= tol n`.
pub fn solve_size<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, n: usize, tol: T) -> Result<T, TunerError> {
    let target = T::of_usize(n);
    if n == 0 {
        return Ok(T::zero());
    }
    let size_at = |x: T| -> Option<T> {
        let p = EvalPoint { z: x, w: w.clone() };
        expectations(sys, &p).ok().map(|e| e.size_mean)
    };
    let sing = find_singularity(sys, w, T::of(1e-13).max(T::epsilon() * T::of(8.0)))?;
    let (mut lo, mut hi);
    if sing.rho.is_finite() {
        lo = T::zero();
        hi = sing.rho;
    } else {
        // Polynomial generating function: bracket by doubling.
        lo = T::zero();
        hi = T::one();
        loop {
            match size_at(hi) {
                Some(e) if e < target => {
                    lo = hi;
                    hi = hi * T::of(2.0);
                    if hi > T::of(1e12) {
                        return Err(TunerError::Unreachable { n, max: e.as_f64() });
                    }
                }
                _ => break,
            }
        }
    }
    let mut best = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        match size_at(mid) {
            Some(e) => {
                best = best.max(e);
                if (e - target).abs() <= tol * target {
                    return Ok(mid);
                }
                if e < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Numerically outside (too close to the singularity).
            None => hi = mid,
        }
    }
    match size_at(lo) {
        Some(e) if (e - target).abs() <= tol * target => Ok(lo),
        _ => Err(TunerError::Unreachable {
            n,
            max: best.as_f64(),
        }),
    }
}

/// Centered finite-difference Jacobian `dE_i/dw_j` at fixed `z`, row-major.
fn expectation_jacobian<T: Scalar>(sys: &GfSystem, z: T, w: &[T]) -> Result<Vec<T>, OracleError> {
    let k = w.len();
    let mut jac = vec![T::zero(); k * k];
    let mut wp = w.to_vec();
    for j in 0..k {
        let h = T::of(1e-5) * w[j];
        wp[j] = w[j] + h;
        let up = letter_means(sys, z, &wp)?;
        wp[j] = w[j] - h;
        let down = letter_means(sys, z, &wp)?;
        wp[j] = w[j];
        for i in 0..k {
            jac[i * k + j] = (up[i] - down[i]) / (h + h);
        }
    }
    Ok(jac)
}

/// Damped Newton iteration on the weights at fixed `z0` ("tracking the
/// weights"): Newton steps aim at an intermediate target `c`, initially
/// `n f*`. A step that does not bring `E(w)` closer to `c`, leaves the
/// convergence domain or makes a weight non-positive is undone and
/// `c := (c + E(w)) / 2`. Once `c` is reached the target is reset to
/// `n f*`. Stops when `|n f* - E(w)|_inf < eps`.
///
/// All `k` weights are free: at fixed `z0` the size constraint
/// `sum_i E[N_i] = n` pins the overall scale, so `x_n = z0` for the result.
pub fn tune_weights<T: Scalar>(
    sys: &GfSystem,
    z0: T,
    w0: &WeightVector<T>,
    target: &TargetComposition<T>,
    n: usize,
    eps: T,
) -> Result<TuningResult<T>, TunerError> {
    tune_weights_with(sys, z0, w0, target, n, eps, TuneLimits::default())
}

pub fn tune_weights_with<T: Scalar>(
    sys: &GfSystem,
    z0: T,
    w0: &WeightVector<T>,
    target: &TargetComposition<T>,
    n: usize,
    eps: T,
    limits: TuneLimits,
) -> Result<TuningResult<T>, TunerError> {
    let k = sys.k();
    if target.len() != k || w0.len() != k {
        return Err(OracleError::DimensionMismatch {
            expected: k,
            got: if target.len() != k { target.len() } else { w0.len() },
        }
        .into());
    }
    let goal: Vec<T> = target.as_slice().iter().map(|f| *f * T::of_usize(n)).collect();
    let dist = |a: &[T], b: &[T]| norm_inf(&a.iter().zip(b).map(|(x, y)| *x - *y).collect::<Vec<_>>());
    let mut w = w0.as_slice().to_vec();
    let mut e = letter_means(sys, z0, &w).map_err(|err| match err {
        OracleError::Divergent { .. } => TunerError::LeftDomain,
        other => other.into(),
    })?;
    let mut c = goal.clone();
    let (mut steps, mut dichotomies) = (0usize, 0usize);
    while dist(&goal, &e) >= eps {
        if steps >= limits.max_steps || dichotomies >= limits.max_dichotomies {
            return Err(TunerError::StepLimit {
                steps,
                residual: dist(&goal, &e).as_f64(),
            });
        }
        let mut jac = expectation_jacobian(sys, z0, &w)?;
        let mut delta: Vec<T> = c.iter().zip(&e).map(|(a, b)| *a - *b).collect();
        lu_solve(&mut jac, k, &mut delta).map_err(|_| TunerError::SingularJacobian)?;
        let w_new: Vec<T> = w.iter().zip(&delta).map(|(a, d)| *a + *d).collect();
        let accepted = if w_new.iter().all(|x| *x > T::zero() && x.is_finite()) {
            match letter_means(sys, z0, &w_new) {
                Ok(e_new) if dist(&c, &e_new) < dist(&c, &e) => Some(e_new),
                Ok(_) | Err(OracleError::Divergent { .. } | OracleError::IterationLimit { .. }) => None,
                Err(OracleError::SingularJacobian) => None,
                Err(other) => return Err(other.into()),
            }
        } else {
            None
        };
        match accepted {
            Some(e_new) => {
                w = w_new;
                e = e_new;
                steps += 1;
                if c != goal && dist(&c, &e) < eps {
                    c = goal.clone();
                }
            }
            None => {
                dichotomies += 1;
                for (ci, ei) in c.iter_mut().zip(&e) {
                    *ci = (*ci + *ei) / T::of(2.0);
                }
            }
        }
    }
    let w = WeightVector::new(w)?;
    let achieved = expectations(sys, &EvalPoint { z: z0, w: w.clone() })?;
    let residual = dist(&goal, &achieved.letter_means);
    Ok(TuningResult {
        x: z0,
        w,
        achieved,
        residual,
        steps,
        dichotomy_events: dichotomies,
    })
}

/// `-w_i (d rho/d w_i) / rho` for every letter, with centered finite
/// differences of [`locate_rho`] in the log-weights.
pub fn asymptotic_frequencies<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>) -> Result<Vec<T>, TunerError> {
    let tol = T::of(1e-14).max(T::epsilon() * T::of(4.0));
    let rho = |w: &[T]| -> Result<T, TunerError> {
        let rho = locate_rho(sys, &WeightVector::new(w.to_vec())?, tol)?;
        if rho.is_finite() {
            Ok(rho)
        } else {
            Err(OracleError::NoSingularity.into())
        }
    };
    let h = T::of(1e-4);
    let mut out = Vec::with_capacity(w.len());
    let mut wp = w.as_slice().to_vec();
    for i in 0..w.len() {
        wp[i] = w[i] * h.exp();
        let up = rho(&wp)?.ln();
        wp[i] = w[i] * (-h).exp();
        let down = rho(&wp)?.ln();
        wp[i] = w[i];
        out.push(-(up - down) / (h + h));
    }
    Ok(out)
}

/// Weights whose asymptotic composition `-w_i (d rho/d w_i)/rho` equals
/// the target, with the last weight fixed to 1. Newton iteration in the
/// log-weights with a finite-difference Jacobian and step halving.
pub fn asymptotic_tune<T: Scalar>(
    sys: &GfSystem,
    target: &TargetComposition<T>,
    tol: T,
) -> Result<WeightVector<T>, TunerError> {
    let k = sys.k();
    if target.len() != k {
        return Err(OracleError::DimensionMismatch {
            expected: k,
            got: target.len(),
        }
        .into());
    }
    if k == 1 {
        return Ok(WeightVector::ones(1));
    }
    let f = target.as_slice();
    let free = k - 1;
    let residual = |u: &[T]| -> Result<Vec<T>, TunerError> {
        let mut w: Vec<T> = u.iter().map(|x| x.exp()).collect();
        w.push(T::one());
        let a = asymptotic_frequencies(sys, &WeightVector::new(w)?)?;
        Ok((0..free).map(|i| a[i] - f[i]).collect())
    };
    let mut u = vec![T::zero(); free];
    let mut r = residual(&u)?;
    for step in 0..100 {
        if norm_inf(&r) <= tol {
            let mut w: Vec<T> = u.iter().map(|x| x.exp()).collect();
            w.push(T::one());
            return Ok(WeightVector::new(w)?);
        }
        let h = T::of(1e-3);
        let mut jac = vec![T::zero(); free * free];
        let mut up = u.clone();
        for j in 0..free {
            up[j] = u[j] + h;
            let rp = residual(&up)?;
            up[j] = u[j] - h;
            let rm = residual(&up)?;
            up[j] = u[j];
            for i in 0..free {
                jac[i * free + j] = (rp[i] - rm[i]) / (h + h);
            }
        }
        let mut delta: Vec<T> = r.iter().map(|x| -*x).collect();
        lu_solve(&mut jac, free, &mut delta).map_err(|_| TunerError::SingularJacobian)?;
        let mut lambda = T::one();
        loop {
            let cand: Vec<T> = u.iter().zip(&delta).map(|(a, d)| *a + lambda * *d).collect();
            if let Ok(rc) = residual(&cand) {
                if norm_inf(&rc) < norm_inf(&r) {
                    u = cand;
                    r = rc;
                    break;
                }
            }
            lambda = lambda / T::of(2.0);
            if lambda < T::of(1e-6) {
                return Err(TunerError::StepLimit {
                    steps: step,
                    residual: norm_inf(&r).as_f64(),
                });
            }
        }
    }
    Err(TunerError::StepLimit {
        steps: 100,
        residual: norm_inf(&r).as_f64(),
    })
}

/// Exact `E_n[N_i]` under the weighted distribution on words of size `n`.
pub fn expected_composition_fixed_n<T: Scalar>(
    g: &Grammar,
    w: &WeightVector<T>,
    n: usize,
) -> Result<Vec<f64>, TunerError> {
    let w: Vec<f64> = w.as_slice().iter().map(|x| x.as_f64()).collect();
    Ok(fixed_size_expectations(g, &ExactWeights::from_f64(&w), n)?.1)
}
