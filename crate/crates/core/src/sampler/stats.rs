use serde::Serialize;

use crate::exact::weighted_coeffs;
use crate::oracle::{default_tol, eval_newton, EvalPoint, GfSystem, WeightVector};
use crate::scalar::Scalar;
use crate::tuner::solve_size;

use super::SamplerError;

/// Expected number of free draws for one exact-size success at `x_n`,
/// `C(x_n) / (P_n x_n^n)`, evaluated in log space. `+inf` when no word of
/// size `n` exists.
pub fn predict_exact_size_trials<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, n: usize) -> Result<f64, SamplerError> {
    let coeffs = weighted_coeffs(sys.grammar(), w, n)?;
    let pn = &coeffs.axiom_coeffs()[n];
    if pn.is_zero() {
        return Ok(f64::INFINITY);
    }
    if n == 0 {
        // x_0 = 0 and the only draw is the empty word.
        return Ok(1.0);
    }
    let x = solve_size(sys, w, n, T::of(1e-10).max(T::epsilon() * T::of(64.0)))?;
    let c = eval_newton(sys, &EvalPoint::new(x, w.clone())?, default_tol())?.values[sys.grammar().axiom()];
    Ok((c.as_f64().ln() - pn.ln() - n as f64 * x.as_f64().ln()).exp())
}

/// Empirical moments of occurrence vectors and the concentration surrogate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub emp_mean: Vec<f64>,
    /// Unbiased covariance, row-major `k x k`.
    pub emp_cov: Vec<Vec<f64>>,
    /// `1 / sqrt(lambda_max(emp_cov))`.
    pub kappa_lower: f64,
    /// `|emp_mean|_inf^sigma * kappa_lower`.
    pub sigma_condition_value: f64,
}

pub fn concentration_diagnostics(samples: &[Vec<u64>], sigma: f64) -> Result<TrialStats, SamplerError> {
    if samples.len() < 2 {
        return Err(SamplerError::InvalidArgument("at least two samples are needed".into()));
    }
    let k = samples[0].len();
    if samples.iter().any(|s| s.len() != k) {
        return Err(SamplerError::InvalidArgument("samples differ in length".into()));
    }
    let cnt = samples.len() as f64;
    let mut mean = vec![0.0; k];
    for s in samples {
        for (m, &x) in mean.iter_mut().zip(s) {
            *m += x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= cnt);
    let mut cov = vec![vec![0.0; k]; k];
    for s in samples {
        for i in 0..k {
            let di = s[i] as f64 - mean[i];
            for j in 0..=i {
                cov[i][j] += di * (s[j] as f64 - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            cov[i][j] /= cnt - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let lambda = lambda_max(&cov);
    if !(lambda > 0.0) {
        return Err(SamplerError::DegenerateCovariance);
    }
    let kappa_lower = 1.0 / lambda.sqrt();
    let mu = mean.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    Ok(TrialStats {
        emp_mean: mean,
        emp_cov: cov,
        kappa_lower,
        sigma_condition_value: mu.powf(sigma) * kappa_lower,
    })
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration, restarted from every basis vector so that no start is
/// orthogonal to the dominant eigenvector.
fn lambda_max(a: &[Vec<f64>]) -> f64 {
    let k = a.len();
    let mut best = 0.0f64;
    for start in 0..k {
        let mut v = vec![0.0; k];
        v[start] = 1.0;
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let y: Vec<f64> = (0..k).map(|i| (0..k).map(|j| a[i][j] * v[j]).sum()).collect();
            let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let next = norm;
            v = y.into_iter().map(|x| x / norm).collect();
            if (next - lambda).abs() <= 1e-14 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        best = best.max(lambda);
    }
    best
}
