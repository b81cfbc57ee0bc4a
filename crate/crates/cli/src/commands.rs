use std::collections::BTreeMap;

use multiboltz::exact::{multivariate_coeffs, weighted_coeffs_exact, ExactWeights};
use multiboltz::grammar::{parse_grammar, validate, Grammar};
use multiboltz::oracle::{
    eval_fixed_point, eval_newton, expectations, find_singularity, EvalPoint, GfSystem, WeightVector,
};
use multiboltz::sampler::{
    plan_size_sampling, predict_exact_size_trials, BoltzmannSampler, CompositionMap, SampleResult, ToleranceSpec,
};
use multiboltz::tetris::{build_automaton, minimize, to_grammar};
use multiboltz::tuner::{asymptotic_frequencies, asymptotic_tune, solve_size, tune_weights, TargetComposition};
use serde_json::{json, Value};

use crate::args::{EvalArgs, Method, SampleArgs, TuneArgs};
use crate::error::CliError;
use crate::runner::{run_samples, trial_limit};

const BINARY: &str = include_str!("../../../grammars/binary.gr");
const DYCK: &str = include_str!("../../../grammars/dyck.gr");
const MOTZKIN: &str = include_str!("../../../grammars/motzkin.gr");

/// Resolves a builtin name or reads and parses a grammar file.
pub fn load_grammar(source: &str) -> Result<Grammar, CliError> {
    let text = match source {
        "binary" => BINARY.to_string(),
        "dyck" => DYCK.to_string(),
        "motzkin" => MOTZKIN.to_string(),
        _ => {
            if let Some(w) = source.strip_prefix("tetris:") {
                let w: usize = w
                    .parse()
                    .map_err(|_| CliError::usage(format!("bad tetris width in {source:?}")))?;
                return Ok(to_grammar(&minimize(&build_automaton(w)?)));
            }
            std::fs::read_to_string(source).map_err(|e| CliError::domain("io", format!("{source}: {e}")))?
        }
    };
    Ok(parse_grammar(&text)?)
}

pub fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("--{flag}: {x:?} is not a number")))
        })
        .collect()
}

pub fn weights_or_ones(s: Option<&str>, k: usize) -> Result<WeightVector<f64>, CliError> {
    match s {
        None => Ok(WeightVector::ones(k)),
        Some(s) => {
            let w = parse_list("weights", s)?;
            if w.len() != k {
                return Err(CliError::domain(
                    "dimension_mismatch",
                    format!("{} weights for {k} letters", w.len()),
                ));
            }
            Ok(WeightVector::new(w)?)
        }
    }
}

pub fn target(s: &str, k: usize) -> Result<TargetComposition<f64>, CliError> {
    let f = parse_list("target", s)?;
    if f.len() != k {
        return Err(CliError::domain(
            "dimension_mismatch",
            format!("{} target frequencies for {k} letters", f.len()),
        ));
    }
    Ok(TargetComposition::new(f)?)
}

fn by_letter<T: Into<Value> + Copy>(g: &Grammar, xs: &[T]) -> Value {
    let m: serde_json::Map<String, Value> = g
        .alphabet()
        .letters()
        .iter()
        .zip(xs)
        .map(|(l, x)| (l.clone(), (*x).into()))
        .collect();
    Value::Object(m)
}

/// The per-sample record shared by all samplers.
pub fn sample_json(g: &Grammar, r: &SampleResult) -> Value {
    let occ: BTreeMap<&str, u64> = g
        .alphabet()
        .letters()
        .iter()
        .map(String::as_str)
        .zip(r.occurrences.iter().copied())
        .collect();
    json!({
        "word": r.word.iter().map(|&i| g.alphabet().name(i)).collect::<Vec<_>>(),
        "size": r.size,
        "occurrences": occ,
        "trials": {"gamma2": r.gamma2_trials, "gamma3": r.gamma3_trials},
    })
}

pub fn validate_cmd(source: &str) -> Result<Value, CliError> {
    let g = load_grammar(source)?;
    let report = validate(&g);
    let out = json!({
        "grammar": g.to_string(),
        "letters": g.alphabet().letters(),
        "nonterminals": g.nonterminals(),
        "axiom": g.nonterminals()[g.axiom()],
        "linear": g.is_linear(),
        "report": report,
    });
    if !report.well_founded {
        return Err(CliError::domain("not_well_founded", report.problems.join("; ")));
    }
    Ok(out)
}

pub fn eval_cmd(a: &EvalArgs) -> Result<Value, CliError> {
    let g = load_grammar(&a.grammar)?;
    let sys = GfSystem::new(g.clone())?;
    let w = weights_or_ones(a.weights.as_deref(), g.k())?;
    let p = EvalPoint::new(a.z, w)?;
    let r = match a.method {
        Method::Newton => eval_newton(&sys, &p, a.tol)?,
        Method::FixedPoint => eval_fixed_point(&sys, &p, a.tol, 1_000_000)?,
    };
    let e = expectations(&sys, &p).ok();
    let values: serde_json::Map<String, Value> = g
        .nonterminals()
        .iter()
        .zip(&r.values)
        .map(|(n, v)| (n.clone(), json!(v)))
        .collect();
    Ok(json!({
        "z": a.z,
        "weights": p.w.as_slice(),
        "method": match a.method { Method::Newton => "newton", Method::FixedPoint => "fixed-point" },
        "axiom_value": r.values[g.axiom()],
        "values": values,
        "converged": r.converged,
        "iterations": r.iterations,
        "residual": r.residual,
        "expectations": e.map(|e| json!({
            "size": e.size_mean,
            "letters": by_letter(&g, &e.letter_means),
        })),
    }))
}

pub fn sing_cmd(source: &str, weights: Option<&str>, tol: f64) -> Result<Value, CliError> {
    let g = load_grammar(source)?;
    let sys = GfSystem::new(g.clone())?;
    let w = weights_or_ones(weights, g.k())?;
    let s = find_singularity(&sys, &w, tol)?;
    Ok(json!({
        "weights": w.as_slice(),
        "rho": s.rho,
        "kind": s.kind,
        "exponent_hint": s.exponent_hint,
    }))
}

pub fn tune_cmd(a: &TuneArgs) -> Result<Value, CliError> {
    let g = load_grammar(&a.grammar)?;
    let sys = GfSystem::new(g.clone())?;
    let t = target(&a.target, g.k())?;
    if a.asymptotic {
        let w = asymptotic_tune(&sys, &t, a.tol)?;
        let f = asymptotic_frequencies(&sys, &w)?;
        return Ok(json!({
            "mode": "asymptotic",
            "letters": g.alphabet().letters(),
            "weights": w.as_slice(),
            "frequencies": f,
        }));
    }
    let n = a
        .n
        .ok_or_else(|| CliError::usage("--n is required unless --asymptotic is given"))?;
    let w0 = weights_or_ones(a.weights.as_deref(), g.k())?;
    let z0 = solve_size(&sys, &w0, n, 1e-12)?;
    let r = tune_weights(&sys, z0, &w0, &t, n, a.tol)?;
    Ok(json!({
        "mode": "fixed-size",
        "n": n,
        "letters": g.alphabet().letters(),
        "x": r.x,
        "weights": r.w.as_slice(),
        "achieved": {"size": r.achieved.size_mean, "letters": r.achieved.letter_means},
        "residual": r.residual,
        "steps": r.steps,
        "dichotomy_events": r.dichotomy_events,
    }))
}

pub fn sample_cmd(a: &SampleArgs) -> Result<Value, CliError> {
    let g = load_grammar(&a.grammar)?;
    let sys = GfSystem::new(g.clone())?;
    let limit = trial_limit()?;
    let w0 = weights_or_ones(a.weights.as_deref(), g.k())?;
    let (header, samples) = if let Some(ts) = &a.target {
        let t = target(ts, g.k())?;
        let tol = ToleranceSpec::new(a.eps, a.comp_eps, a.sigma)?;
        let z0 = solve_size(&sys, &w0, a.n, 1e-12)?;
        let r = tune_weights(&sys, z0, &w0, &t, a.n, 1e-9)?;
        let p = EvalPoint::new(r.x, r.w.clone())?;
        let s = BoltzmannSampler::new(&sys, &p)?.with_trial_limit(limit);
        let m = CompositionMap::proportional(&t);
        let samples = run_samples(a.count, a.jobs, a.seed, |rng| {
            Ok(s.gamma3_composition(rng, a.n, &m, &tol)?)
        })?;
        let header = json!({
            "mode": "composition",
            "x": r.x,
            "weights": r.w.as_slice(),
            "tolerance": {"eps": a.eps, "comp_eps": a.comp_eps, "sigma": a.sigma},
        });
        (header, samples)
    } else {
        ToleranceSpec::new(a.eps, 0.0, 1.0)?;
        let plan = plan_size_sampling(&sys, &w0, a.n)?;
        let p = EvalPoint::new(plan.x, w0.clone())?;
        let s = BoltzmannSampler::new(&plan.sys, &p)?.with_trial_limit(limit);
        let samples = run_samples(a.count, a.jobs, a.seed, |rng| Ok(s.gamma2_size(rng, a.n, a.eps)?))?;
        let header = json!({
            "mode": "size",
            "x": plan.x,
            "weights": w0.as_slice(),
            "pointed": plan.pointed,
            "tolerance": {"eps": a.eps},
        });
        (header, samples)
    };
    let mut out = header;
    out["n"] = json!(a.n);
    out["seed"] = json!(a.seed);
    out["jobs"] = json!(a.jobs);
    out["samples"] = samples.iter().map(|r| sample_json(&g, r)).collect();
    Ok(out)
}

pub fn count_cmd(source: &str, n: usize, profile: Option<&str>, weights: Option<&str>) -> Result<Value, CliError> {
    let g = load_grammar(source)?;
    if let Some(p) = profile {
        if weights.is_some() {
            return Err(CliError::usage("--profile and --weights are exclusive"));
        }
        let occ = p
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| CliError::usage(format!("--profile: {x:?} is not a count")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let c = multivariate_coeffs(&g, n, &occ)?;
        return Ok(json!({"n": n, "profile": c.occ, "count": c.value.to_string()}));
    }
    let w = match weights {
        None => ExactWeights::Unit(g.k()),
        Some(s) => ExactWeights::from_f64(weights_or_ones(Some(s), g.k())?.as_slice()),
    };
    let table = weighted_coeffs_exact(&g, &w, n)?;
    Ok(json!({"n": n, "count": table.axiom_coeffs()[n].to_string()}))
}

pub fn predict_cmd(source: &str, n: usize, weights: Option<&str>) -> Result<Value, CliError> {
    let g = load_grammar(source)?;
    let sys = GfSystem::new(g.clone())?;
    let w = weights_or_ones(weights, g.k())?;
    let t = predict_exact_size_trials(&sys, &w, n)?;
    Ok(json!({
        "n": n,
        "weights": w.as_slice(),
        "reachable": t.is_finite(),
        "expected_trials": t.is_finite().then_some(t),
    }))
}
