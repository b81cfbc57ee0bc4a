use num_bigint::BigUint;
use serde::Serialize;

use crate::exact::{weighted_coeffs_exact, ExactWeights};
use crate::oracle::{EvalPoint, GfSystem, WeightVector};
use crate::sampler::{BoltzmannSampler, CompositionMap, RandomSource, SampleResult, ToleranceSpec};
use crate::tuner::{expected_composition_fixed_n, solve_size, tune_weights, TargetComposition, TuningResult};

use super::automaton::{build_automaton, minimize, to_grammar, Automaton, Transition};
use super::board::{assemble, Tessellation};
use super::{Kind, TetrisError};

fn check_area(w: usize, n: usize) -> Result<(), TetrisError> {
    if (4 * n) % w != 0 {
        return Err(TetrisError::AreaMismatch { width: w, pieces: n });
    }
    Ok(())
}

/// Exact expected share of each kind among the `n`-piece tessellations of
/// width `w`, uniformly weighted, in kind order.
pub fn piece_frequencies(w: usize, n: usize) -> Result<Vec<f64>, TetrisError> {
    check_area(w, n)?;
    let g = to_grammar(&minimize(&build_automaton(w)?));
    let e = expected_composition_fixed_n(&g, &WeightVector::<f64>::ones(7), n)?;
    Ok(e.into_iter().map(|x| x / n as f64).collect())
}

/// Number of tessellations of the `w x 4n/w` rectangle (0 when the area
/// does not divide).
pub fn tessellation_count(w: usize, n: usize) -> Result<BigUint, TetrisError> {
    let g = to_grammar(&minimize(&build_automaton(w)?));
    let table = weighted_coeffs_exact(&g, &ExactWeights::Unit(7), n)?;
    Ok(table.axiom_coeffs()[n].as_integer().cloned().unwrap_or_default())
}

/// A sampled board with the removal word it was generated from.
#[derive(Debug, Clone, Serialize)]
pub struct TessellationSample {
    pub tessellation: Tessellation,
    /// Piece kinds in canonical removal order.
    pub word: Vec<Kind>,
    pub stats: SampleResult,
}

/// Everything needed to sample `n`-piece tessellations of width `w` with a
/// target composition: the raw automaton, its grammar, weights tuned so
/// that the expected composition at `x_n` is `n` times the target, and the
/// branch table at that point.
#[derive(Debug, Clone)]
pub struct TetrisModel {
    width: usize,
    n: usize,
    automaton: Automaton,
    sys: GfSystem,
    target: TargetComposition<f64>,
    tuning: TuningResult<f64>,
    sampler: BoltzmannSampler,
}

impl TetrisModel {
    pub fn new(width: usize, n: usize, target: &TargetComposition<f64>) -> Result<Self, TetrisError> {
        check_area(width, n)?;
        let automaton = build_automaton(width)?;
        let sys = GfSystem::new(to_grammar(&automaton)).map_err(crate::tuner::TunerError::from)?;
        let ones = WeightVector::ones(7);
        let z0 = solve_size(&sys, &ones, n, 1e-12)?;
        let tuning = tune_weights(&sys, z0, &ones, target, n, 1e-9)?;
        let p = EvalPoint {
            z: tuning.x,
            w: tuning.w.clone(),
        };
        let sampler = BoltzmannSampler::new(&sys, &p)?;
        Ok(TetrisModel {
            width,
            n,
            automaton,
            sys,
            target: target.clone(),
            tuning,
            sampler,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn system(&self) -> &GfSystem {
        &self.sys
    }

    pub fn tuning(&self) -> &TuningResult<f64> {
        &self.tuning
    }

    pub fn with_trial_limit(mut self, limit: u64) -> Self {
        self.sampler = self.sampler.with_trial_limit(limit);
        self
    }

    /// One board of exactly `n` pieces whose kind counts lie in the windows
    /// of `tol` around `s f*`.
    pub fn sample(&self, rng: &mut RandomSource, tol: &ToleranceSpec) -> Result<TessellationSample, TetrisError> {
        let tol = ToleranceSpec { size_eps: 0.0, ..*tol };
        let m = CompositionMap::proportional(&self.target);
        let (stats, trace) = self.sampler.gamma3_traced(rng, self.n, &m, &tol)?;
        let removals = self.removals(&trace)?;
        let tessellation = assemble(&self.automaton, &removals)?;
        Ok(TessellationSample {
            tessellation,
            word: removals.iter().map(|t| t.kind).collect(),
            stats,
        })
    }

    /// Maps the union choices of a derivation to automaton transitions.
    /// Branch 0 of the flat state is the empty word; states with a single
    /// branch leave no choice in the trace.
    fn removals(&self, trace: &[u32]) -> Result<Vec<Transition>, TetrisError> {
        let a = &self.automaton;
        let mut out = Vec::with_capacity(self.n);
        let mut state = a.initial();
        let mut choices = trace.iter();
        loop {
            let eps = usize::from(a.is_final(state));
            let out_t = a.outgoing(state);
            let idx = if eps + out_t.len() > 1 {
                *choices
                    .next()
                    .ok_or_else(|| TetrisError::Replay("trace ended early".into()))? as usize
            } else {
                0
            };
            if idx < eps {
                break;
            }
            let t = out_t
                .get(idx - eps)
                .ok_or_else(|| TetrisError::Replay(format!("branch {idx} out of range at state {state}")))?;
            out.push(*t);
            state = t.to;
        }
        if choices.next().is_some() {
            return Err(TetrisError::Replay("trace has unused choices".into()));
        }
        Ok(out)
    }
}

/// Tunes a model and draws one board (see [`TetrisModel::sample`]).
pub fn sample_tessellation(
    w: usize,
    n: usize,
    target: &TargetComposition<f64>,
    tol: &ToleranceSpec,
    rng: &mut RandomSource,
) -> Result<TessellationSample, TetrisError> {
    TetrisModel::new(w, n, target)?.sample(rng, tol)
}
