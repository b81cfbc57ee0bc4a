//! Weighted Boltzmann sampling with size and composition rejection.

mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::ExactError;
use crate::expr_eval::{value, Env};
use crate::grammar::{point, Expr, GrammarError};
use crate::oracle::{
    default_tol, eval_newton, find_singularity, EvalPoint, GfSystem, OracleError, SingularityKind, WeightVector,
};
use crate::scalar::Scalar;
use crate::tuner::{solve_size, TargetComposition, TunerError};

pub use stats::{concentration_diagnostics, predict_exact_size_trials, TrialStats};

pub const DEFAULT_TRIAL_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Tuner(#[from] TunerError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("branch probability {value} at node {node} is outside [0, 1]")]
    NumericalInconsistency { node: usize, value: f64 },
    #[error("no success within {trials} trials")]
    TrialLimit { trials: u64 },
    #[error("empty tolerance window: {0}")]
    DegenerateWindow(String),
    #[error("empirical covariance is zero")]
    DegenerateCovariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SamplerError {
    pub fn code(&self) -> &'static str {
        match self {
            SamplerError::Oracle(e) => e.code(),
            SamplerError::Exact(e) => e.code(),
            SamplerError::Tuner(e) => e.code(),
            SamplerError::Grammar(e) => e.code(),
            SamplerError::NumericalInconsistency { .. } => "numerical_inconsistency",
            SamplerError::TrialLimit { .. } => "trial_limit",
            SamplerError::DegenerateWindow(_) => "degenerate_window",
            SamplerError::DegenerateCovariance => "degenerate_covariance",
            SamplerError::InvalidArgument(_) => "invalid_argument",
        }
    }
}

/// Seeded stream of uniforms on `[0, 1)` (ChaCha8).
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Size window `I(n, eps)` and occurrence windows `I(m, eps_c, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSpec {
    pub size_eps: f64,
    pub comp_eps: f64,
    pub sigma: f64,
}

impl ToleranceSpec {
    pub fn new(size_eps: f64, comp_eps: f64, sigma: f64) -> Result<Self, SamplerError> {
        if !(size_eps >= 0.0 && size_eps.is_finite()) || !(comp_eps >= 0.0 && comp_eps.is_finite()) {
            return Err(SamplerError::InvalidArgument("tolerances must be finite and non-negative".into()));
        }
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(SamplerError::InvalidArgument(format!("sigma = {sigma} is not in (0, 1]")));
        }
        Ok(ToleranceSpec {
            size_eps,
            comp_eps,
            sigma,
        })
    }

    /// Exact size and exact composition.
    pub fn exact() -> Self {
        ToleranceSpec {
            size_eps: 0.0,
            comp_eps: 0.0,
            sigma: 1.0,
        }
    }

    /// Integer sizes in `[n(1-eps), n(1+eps)]`.
    pub fn size_range(&self, n: usize) -> (usize, usize) {
        int_window(n as f64 * (1.0 - self.size_eps), n as f64 * (1.0 + self.size_eps), n as f64)
            .map(|(a, b)| (a as usize, b as usize))
            .unwrap_or((n, n))
    }

    /// Integer counts in `[m - m^sigma eps_c, m + m^sigma eps_c]`, if any.
    pub fn count_range(&self, m: f64) -> Option<(u64, u64)> {
        let r = m.max(0.0).powf(self.sigma) * self.comp_eps;
        int_window(m - r, m + r, m)
    }

    fn is_exact(&self) -> bool {
        self.size_eps == 0.0 && self.comp_eps == 0.0
    }
}

fn int_window(lo: f64, hi: f64, scale: f64) -> Option<(u64, u64)> {
    let slack = 1e-9 * scale.abs().max(1.0);
    let a = (lo - slack).ceil().max(0.0);
    let b = (hi + slack).floor();
    (a <= b).then_some((a as u64, b as u64))
}

/// Target occurrence counts `m_i(s) = s f_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionMap {
    freqs: Vec<f64>,
}

impl CompositionMap {
    pub fn proportional<T: Scalar>(target: &TargetComposition<T>) -> Self {
        CompositionMap {
            freqs: target.as_slice().iter().map(|f| f.as_f64()).collect(),
        }
    }

    /// Proportional to the given counts, so that `m(sum counts) = counts`.
    pub fn from_counts(counts: &[u64]) -> Result<Self, SamplerError> {
        let s: u64 = counts.iter().sum();
        if s == 0 {
            return Err(SamplerError::InvalidArgument("counts must not all be zero".into()));
        }
        Ok(CompositionMap {
            freqs: counts.iter().map(|&c| c as f64 / s as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn target(&self, i: usize, s: usize) -> f64 {
        self.freqs[i] * s as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleResult {
    pub word: Vec<usize>,
    pub size: usize,
    pub occurrences: Vec<u64>,
    /// Calls to the free sampler, aborted ones included.
    pub gamma2_trials: u64,
    /// Size-conforming words checked against the composition windows.
    pub gamma3_trials: u64,
    /// Free draws cut short once they exceeded the size cap.
    pub aborts_early: u64,
}

/// Outcome of one free draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Draw {
    Word(Vec<usize>),
    /// The word being built exceeded the size cap.
    Abort,
}

#[derive(Debug, Clone)]
enum Node {
    Eps,
    Atom(usize),
    Rule(usize),
    /// Children with cumulative branch probabilities.
    Union(Vec<usize>, Vec<f64>),
    Product(Vec<usize>),
    /// Argument and its generating-function value (the geometric parameter).
    Seq(usize, f64),
}

/// Branch probabilities of a grammar at one evaluation point, computed once
/// and shared by every draw.
#[derive(Debug, Clone)]
pub struct BoltzmannSampler {
    nodes: Vec<Node>,
    roots: Vec<usize>,
    axiom: usize,
    k: usize,
    axiom_value: f64,
    trial_limit: u64,
}

const PROB_SLACK: f64 = 1e-9;

impl BoltzmannSampler {
    pub fn new<T: Scalar>(sys: &GfSystem, p: &EvalPoint<T>) -> Result<Self, SamplerError> {
        let f = eval_newton(sys, p, default_tol())?.values;
        let g = sys.grammar();
        let env = Env {
            f: &f,
            z: p.z,
            w: p.w.as_slice(),
        };
        let mut nodes = Vec::new();
        let mut roots = Vec::with_capacity(g.num_nonterminals());
        for r in g.rules() {
            roots.push(compile(r, &env, &mut nodes)?);
        }
        let axiom_value = f[g.axiom()].as_f64();
        if !(axiom_value > 0.0 && axiom_value.is_finite()) {
            return Err(OracleError::InvalidPoint(format!("axiom value {axiom_value} is not positive")).into());
        }
        Ok(BoltzmannSampler {
            nodes,
            roots,
            axiom: g.axiom(),
            k: g.k(),
            axiom_value,
            trial_limit: DEFAULT_TRIAL_LIMIT,
        })
    }

    pub fn with_trial_limit(mut self, limit: u64) -> Self {
        self.trial_limit = limit.max(1);
        self
    }

    pub fn trial_limit(&self) -> u64 {
        self.trial_limit
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `C(z, w)` of the axiom at the sampler's point.
    pub fn axiom_value(&self) -> f64 {
        self.axiom_value
    }

    /// One free Boltzmann draw, aborted once more than `size_cap` letters
    /// have been emitted.
    pub fn gamma_free(&self, rng: &mut RandomSource, size_cap: usize) -> Draw {
        let mut word = Vec::new();
        match self.run(rng, size_cap, &mut word, None) {
            true => Draw::Word(word),
            false => Draw::Abort,
        }
    }

    /// Like [`gamma_free`](Self::gamma_free), also recording the index of
    /// the branch taken at every union, in derivation order.
    pub fn gamma_free_traced(&self, rng: &mut RandomSource, size_cap: usize) -> Option<(Vec<usize>, Vec<u32>)> {
        let mut word = Vec::new();
        let mut trace = Vec::new();
        self.run(rng, size_cap, &mut word, Some(&mut trace)).then_some((word, trace))
    }

    fn run(&self, rng: &mut RandomSource, cap: usize, word: &mut Vec<usize>, mut trace: Option<&mut Vec<u32>>) -> bool {
        let mut stack = vec![self.roots[self.axiom]];
        while let Some(v) = stack.pop() {
            match &self.nodes[v] {
                Node::Eps => {}
                Node::Atom(l) => {
                    word.push(*l);
                    if word.len() > cap {
                        return false;
                    }
                }
                Node::Rule(j) => stack.push(self.roots[*j]),
                Node::Union(children, cum) => {
                    let u = rng.uniform();
                    let i = cum.partition_point(|&c| c <= u).min(children.len() - 1);
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(i as u32);
                    }
                    stack.push(children[i]);
                }
                Node::Product(children) => stack.extend(children.iter().rev()),
                Node::Seq(a, q) => {
                    // Every item emits at least one letter, so a run longer
                    // than the remaining budget is already an abort.
                    let budget = cap - word.len();
                    let mut reps = 0usize;
                    while rng.uniform() < *q {
                        reps += 1;
                        if reps > budget {
                            return false;
                        }
                    }
                    stack.extend(std::iter::repeat_n(*a, reps));
                }
            }
        }
        true
    }

    /// Size rejection: free draws with cap `floor(n(1+eps))` until the size
    /// lies in `I(n, eps)`.
    pub fn gamma2_size(&self, rng: &mut RandomSource, n: usize, eps: f64) -> Result<SampleResult, SamplerError> {
        let tol = ToleranceSpec::new(eps, 0.0, 1.0)?;
        let mut counters = Counters::default();
        let word = self.size_loop(rng, n, &tol, &mut counters, None)?;
        Ok(self.finish(word, counters))
    }

    /// Composition rejection: size-conforming draws until every checked
    /// letter count lies in its window. With exact size and exact
    /// composition the last letter is implied and not checked.
    pub fn gamma3_composition(
        &self,
        rng: &mut RandomSource,
        n: usize,
        m: &CompositionMap,
        tol: &ToleranceSpec,
    ) -> Result<SampleResult, SamplerError> {
        self.compose(rng, n, m, tol, None)
    }

    /// [`gamma3_composition`](Self::gamma3_composition) that also returns
    /// the union choices of the accepted derivation.
    pub fn gamma3_traced(
        &self,
        rng: &mut RandomSource,
        n: usize,
        m: &CompositionMap,
        tol: &ToleranceSpec,
    ) -> Result<(SampleResult, Vec<u32>), SamplerError> {
        let mut trace = Vec::new();
        let r = self.compose(rng, n, m, tol, Some(&mut trace))?;
        Ok((r, trace))
    }

    fn compose(
        &self,
        rng: &mut RandomSource,
        n: usize,
        m: &CompositionMap,
        tol: &ToleranceSpec,
        mut trace: Option<&mut Vec<u32>>,
    ) -> Result<SampleResult, SamplerError> {
        if m.len() != self.k {
            return Err(SamplerError::InvalidArgument(format!(
                "composition map has {} letters, the grammar {}",
                m.len(),
                self.k
            )));
        }
        let windows = self.windows(n, m, tol)?;
        let (lo, _) = tol.size_range(n);
        let mut counters = Counters::default();
        loop {
            let word = self.size_loop(rng, n, tol, &mut counters, trace.as_deref_mut())?;
            counters.gamma3 += 1;
            let mut occ = vec![0u64; self.k];
            for &l in &word {
                occ[l] += 1;
            }
            if let Some(ws) = &windows[word.len() - lo] {
                if ws.iter().all(|&(i, a, b)| (a..=b).contains(&occ[i])) {
                    return Ok(self.finish(word, counters));
                }
            }
        }
    }

    /// Per admissible size, the `(letter, lo, hi)` count windows to check;
    /// `None` for sizes where no composition can be accepted.
    #[allow(clippy::type_complexity)]
    fn windows(
        &self,
        n: usize,
        m: &CompositionMap,
        tol: &ToleranceSpec,
    ) -> Result<Vec<Option<Vec<(usize, u64, u64)>>>, SamplerError> {
        let (lo, hi) = tol.size_range(n);
        let checked = if tol.is_exact() { self.k.saturating_sub(1) } else { self.k };
        let mut out = Vec::with_capacity(hi - lo + 1);
        for s in lo..=hi {
            let mut ws = Vec::with_capacity(self.k);
            let mut all = Vec::with_capacity(self.k);
            for i in 0..self.k {
                match tol.count_range(m.target(i, s)) {
                    Some((a, b)) => {
                        all.push((a, b));
                        if i < checked {
                            ws.push((i, a, b));
                        }
                    }
                    None if i < checked => {
                        all.clear();
                        break;
                    }
                    None => all.push((0, s as u64)),
                }
            }
            let feasible = all.len() == self.k && {
                let (a, b) = all.iter().fold((0u64, 0u64), |acc, w| (acc.0 + w.0, acc.1 + w.1));
                a <= s as u64 && s as u64 <= b
            };
            out.push(feasible.then_some(ws));
        }
        if out.iter().all(Option::is_none) {
            return Err(SamplerError::DegenerateWindow(format!(
                "no integer composition of a size in [{lo}, {hi}] fits the occurrence windows"
            )));
        }
        Ok(out)
    }

    fn size_loop(
        &self,
        rng: &mut RandomSource,
        n: usize,
        tol: &ToleranceSpec,
        counters: &mut Counters,
        mut trace: Option<&mut Vec<u32>>,
    ) -> Result<Vec<usize>, SamplerError> {
        let (lo, hi) = tol.size_range(n);
        let mut word = Vec::new();
        loop {
            if counters.gamma2 >= self.trial_limit {
                return Err(SamplerError::TrialLimit {
                    trials: counters.gamma2,
                });
            }
            counters.gamma2 += 1;
            word.clear();
            if let Some(t) = trace.as_deref_mut() {
                t.clear();
            }
            if !self.run(rng, hi, &mut word, trace.as_deref_mut()) {
                counters.aborts += 1;
            } else if word.len() >= lo {
                return Ok(word);
            }
        }
    }

    fn finish(&self, word: Vec<usize>, c: Counters) -> SampleResult {
        let mut occurrences = vec![0u64; self.k];
        for &l in &word {
            occurrences[l] += 1;
        }
        SampleResult {
            size: word.len(),
            word,
            occurrences,
            gamma2_trials: c.gamma2,
            gamma3_trials: c.gamma3,
            aborts_early: c.aborts,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    gamma2: u64,
    gamma3: u64,
    aborts: u64,
}

fn check_prob(node: usize, p: f64) -> Result<f64, SamplerError> {
    if p.is_finite() && (-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(SamplerError::NumericalInconsistency { node, value: p })
    }
}

fn compile<T: Scalar>(e: &Expr, env: &Env<T>, nodes: &mut Vec<Node>) -> Result<usize, SamplerError> {
    let node = match e {
        Expr::Epsilon => Node::Eps,
        Expr::Atom(i) => Node::Atom(*i),
        Expr::NonTerm(j) => Node::Rule(*j),
        Expr::Union(xs) => {
            let vals: Vec<f64> = xs.iter().map(|x| value(x, env).as_f64()).collect();
            let total: f64 = vals.iter().sum();
            let children = xs
                .iter()
                .map(|x| compile(x, env, nodes))
                .collect::<Result<Vec<_>, _>>()?;
            let here = nodes.len();
            let mut cum = Vec::with_capacity(vals.len());
            let mut acc = 0.0;
            for v in &vals {
                // An unreachable union (total 0) is never visited.
                let p = if total > 0.0 { v / total } else { 0.0 };
                acc += check_prob(here, p)?;
                cum.push(acc);
            }
            Node::Union(children, cum)
        }
        Expr::Product(xs) => Node::Product(
            xs.iter()
                .map(|x| compile(x, env, nodes))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Expr::Seq(a) => {
            let q = value(a, env).as_f64();
            let c = compile(a, env, nodes)?;
            if !(q < 1.0) {
                return Err(SamplerError::NumericalInconsistency {
                    node: nodes.len(),
                    value: q,
                });
            }
            Node::Seq(c, check_prob(nodes.len(), q)?)
        }
    };
    nodes.push(node);
    Ok(nodes.len() - 1)
}

/// System and parameter to use for size-targeted sampling: the grammar is
/// pointed once when its dominant singularity is of square-root type, and
/// `x` solves `E[N] = n` for the system that is returned.
#[derive(Debug, Clone)]
pub struct SizePlan<T> {
    pub sys: GfSystem,
    pub pointed: bool,
    pub kind: SingularityKind,
    pub x: T,
}

pub fn plan_size_sampling<T: Scalar>(sys: &GfSystem, w: &WeightVector<T>, n: usize) -> Result<SizePlan<T>, SamplerError> {
    let kind = find_singularity(sys, w, T::of(1e-12).max(T::epsilon() * T::of(8.0)))?.kind;
    let (target, pointed) = if kind == SingularityKind::SquareRoot {
        (GfSystem::new(point(sys.grammar())?)?, true)
    } else {
        (sys.clone(), false)
    };
    let x = solve_size(&target, w, n, T::of(1e-10).max(T::epsilon() * T::of(64.0)))?;
    Ok(SizePlan {
        sys: target,
        pointed,
        kind,
        x,
    })
}

/// Free draw at `p` (see [`BoltzmannSampler::gamma_free`]).
pub fn gamma_free<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    rng: &mut RandomSource,
    size_cap: usize,
) -> Result<Draw, SamplerError> {
    Ok(BoltzmannSampler::new(sys, p)?.gamma_free(rng, size_cap))
}

pub fn gamma2_size<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    rng: &mut RandomSource,
    n: usize,
    eps: f64,
) -> Result<SampleResult, SamplerError> {
    BoltzmannSampler::new(sys, p)?.gamma2_size(rng, n, eps)
}

pub fn gamma3_composition<T: Scalar>(
    sys: &GfSystem,
    p: &EvalPoint<T>,
    rng: &mut RandomSource,
    n: usize,
    m: &CompositionMap,
    tol: &ToleranceSpec,
) -> Result<SampleResult, SamplerError> {
    BoltzmannSampler::new(sys, p)?.gamma3_composition(rng, n, m, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const BINARY: &str = "S = 'a' S | 'b' S | _;";

    fn setup(src: &str, z: f64, w: Vec<f64>) -> (GfSystem, BoltzmannSampler) {
        let sys = GfSystem::new(parse_grammar(src).unwrap()).unwrap();
        let p = EvalPoint::new(z, WeightVector::new(w).unwrap()).unwrap();
        let s = BoltzmannSampler::new(&sys, &p).unwrap();
        (sys, s)
    }

    #[test]
    fn single_atom() {
        let (_, s) = setup("S = 'a';", 0.3, vec![1.0]);
        let mut rng = RandomSource::new(1);
        for _ in 0..10 {
            assert_eq!(s.gamma_free(&mut rng, 5), Draw::Word(vec![0]));
        }
    }

    #[test]
    fn binary_free_law() {
        let (_, s) = setup(BINARY, 0.25, vec![1.0, 1.0]);
        let mut rng = RandomSource::new(7);
        let draws = 100_000;
        let (mut empty, mut total) = (0usize, 0usize);
        for _ in 0..draws {
            let Draw::Word(w) = s.gamma_free(&mut rng, usize::MAX / 2) else {
                panic!("unexpected abort")
            };
            empty += w.is_empty() as usize;
            total += w.len();
        }
        let pe = empty as f64 / draws as f64;
        let mean = total as f64 / draws as f64;
        assert!((pe - 0.5).abs() < 0.005, "{pe}");
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn seq_grammar_and_abort() {
        let (_, s) = setup("S = ('a' | 'b')*;", 0.45, vec![1.0, 1.0]);
        let mut rng = RandomSource::new(3);
        let mut aborts = 0;
        for _ in 0..2000 {
            match s.gamma_free(&mut rng, 4) {
                Draw::Word(w) => assert!(w.len() <= 4),
                Draw::Abort => aborts += 1,
            }
        }
        // P(N > 4) = 0.9^5.
        let p = aborts as f64 / 2000.0;
        assert!((p - 0.9f64.powi(5)).abs() < 0.05, "{p}");
    }

    #[test]
    fn reproducible() {
        let (_, s) = setup(BINARY, 0.45, vec![1.0, 1.0]);
        let a = s.gamma2_size(&mut RandomSource::new(11), 30, 0.1).unwrap();
        let b = s.gamma2_size(&mut RandomSource::new(11), 30, 0.1).unwrap();
        assert_eq!(a, b);
        assert!((27..=33).contains(&a.size));
        assert_eq!(a.occurrences.iter().sum::<u64>() as usize, a.size);
    }

    #[test]
    fn empty_size_support_hits_limit() {
        let (_, s) = setup("D = _ | 'a' D 'b' D;", 0.45, vec![1.0, 1.0]);
        let s = s.with_trial_limit(5000);
        let e = s.gamma2_size(&mut RandomSource::new(1), 7, 0.0).unwrap_err();
        assert_eq!(e, SamplerError::TrialLimit { trials: 5000 });
    }

    #[test]
    fn exact_composition() {
        let (_, s) = setup(BINARY, 20.0 / 42.0, vec![1.0, 1.0]);
        let m = CompositionMap::from_counts(&[10, 10]).unwrap();
        let r = s
            .gamma3_composition(&mut RandomSource::new(5), 20, &m, &ToleranceSpec::exact())
            .unwrap();
        assert_eq!(r.occurrences, vec![10, 10]);
        assert!(r.gamma3_trials >= 1 && r.gamma2_trials >= r.gamma3_trials);
    }

    #[test]
    fn degenerate_windows() {
        let (_, s) = setup(BINARY, 0.45, vec![1.0, 1.0]);
        let m = CompositionMap::from_counts(&[1, 2]).unwrap();
        let e = s
            .gamma3_composition(&mut RandomSource::new(5), 10, &m, &ToleranceSpec::exact())
            .unwrap_err();
        assert_eq!(e.code(), "degenerate_window");
        // A size window wide enough to contain a multiple of 3 is fine.
        let tol = ToleranceSpec::new(0.2, 0.0, 1.0).unwrap();
        let r = s.gamma3_composition(&mut RandomSource::new(5), 10, &m, &tol).unwrap();
        assert_eq!(r.size % 3, 0);
        assert_eq!(r.occurrences[1], 2 * r.occurrences[0]);
    }

    #[test]
    fn windows_follow_sigma() {
        let t = ToleranceSpec::new(0.1, 3.0, 0.5).unwrap();
        assert_eq!(t.size_range(100), (90, 110));
        assert_eq!(t.count_range(50.0), Some((29, 71)));
        assert_eq!(ToleranceSpec::exact().count_range(2.5), None);
        assert!(ToleranceSpec::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rejects_points_outside() {
        let sys = GfSystem::new(parse_grammar(BINARY).unwrap()).unwrap();
        let p = EvalPoint::new(0.6, WeightVector::ones(2)).unwrap();
        assert!(BoltzmannSampler::new(&sys, &p).is_err());
    }

    #[test]
    fn traces_record_union_choices() {
        let (_, s) = setup(BINARY, 0.4, vec![1.0, 1.0]);
        let mut rng = RandomSource::new(9);
        let (word, trace) = s.gamma_free_traced(&mut rng, 1000).unwrap();
        assert_eq!(trace.len(), word.len() + 1);
        for (l, t) in word.iter().zip(&trace) {
            assert_eq!(*l as u32, *t);
        }
        assert_eq!(*trace.last().unwrap(), 2);
    }

    #[test]
    fn pointing_plan() {
        let dyck = GfSystem::new(parse_grammar("D = _ | 'a' D 'b' D;").unwrap()).unwrap();
        let plan = plan_size_sampling(&dyck, &WeightVector::<f64>::ones(2), 40).unwrap();
        assert!(plan.pointed);
        assert_eq!(plan.kind, SingularityKind::SquareRoot);
        let bin = GfSystem::new(parse_grammar(BINARY).unwrap()).unwrap();
        let plan = plan_size_sampling(&bin, &WeightVector::<f64>::ones(2), 40).unwrap();
        assert!(!plan.pointed);
        assert!((plan.x - 40.0 / 82.0).abs() < 1e-9);
    }
}
