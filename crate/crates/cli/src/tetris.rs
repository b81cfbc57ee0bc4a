use std::path::Path;

use multiboltz::sampler::{RandomSource, ToleranceSpec};
use multiboltz::tetris::{
    build_automaton, extract_instance, minimize, piece_frequencies, render_svg, tessellation_count, Kind,
    Tessellation, TessellationSample, TetrisModel,
};
use multiboltz::tuner::TargetComposition;
use serde_json::{json, Value};

use crate::args::{TetrisRenderArgs, TetrisSampleArgs};
use crate::commands::target;
use crate::error::CliError;
use crate::runner::{run_samples, trial_limit};

fn by_kind<T: Into<Value> + Copy>(xs: &[T]) -> Value {
    Value::Object(Kind::ALL.iter().map(|k| (k.name().to_string(), xs[k.index()].into())).collect())
}

pub fn build(width: usize) -> Result<Value, CliError> {
    let a = build_automaton(width)?;
    let m = minimize(&a);
    Ok(json!({
        "width": width,
        "states": a.num_states(),
        "transitions": a.transitions.len(),
        "minimized_states": m.num_states(),
        "minimized_transitions": m.transitions.len(),
    }))
}

pub fn stats(width: usize, n: usize) -> Result<Value, CliError> {
    let f = piece_frequencies(width, n)?;
    let h = tessellation_count(width, n)?;
    let digits = h.to_string();
    Ok(json!({
        "width": width,
        "n": n,
        "height": 4 * n / width,
        "frequencies": by_kind(&f),
        "count": digits,
        "count_log10": log10_of_decimal(&digits),
    }))
}

/// `log10` of a non-negative decimal integer of any length.
fn log10_of_decimal(d: &str) -> Option<f64> {
    if d == "0" {
        return None;
    }
    let lead: f64 = d[..d.len().min(17)].parse().ok()?;
    Some(lead.log10() + (d.len() - d.len().min(17)) as f64)
}

fn sample_record(s: &TessellationSample) -> Result<Value, CliError> {
    let inst = extract_instance(&s.tessellation)?;
    Ok(json!({
        "word": s.word.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "size": s.stats.size,
        "occurrences": by_kind(&s.tessellation.kind_counts()),
        "trials": {"gamma2": s.stats.gamma2_trials, "gamma3": s.stats.gamma3_trials},
        "tessellation": s.tessellation,
        "instance": inst.placements,
    }))
}

pub fn sample(a: &TetrisSampleArgs) -> Result<Value, CliError> {
    let t = match &a.target {
        Some(s) => target(s, 7)?,
        None => TargetComposition::uniform(7),
    };
    if a.n == 0 {
        return Err(CliError::usage("--n must be positive"));
    }
    let comp_eps = a.comp_eps.unwrap_or(7.0 / a.n as f64);
    let tol = ToleranceSpec::new(0.0, comp_eps, a.sigma)?;
    let model = TetrisModel::new(a.width, a.n, &t)?.with_trial_limit(trial_limit()?);
    let boards = run_samples(a.count, a.jobs, a.seed, |rng| Ok(model.sample(rng, &tol)?))?;
    let mut records = Vec::with_capacity(boards.len());
    for (i, b) in boards.iter().enumerate() {
        if let Some(prefix) = &a.svg_prefix {
            std::fs::write(format!("{prefix}{i}.svg"), render_svg(&b.tessellation))?;
        }
        records.push(sample_record(b)?);
    }
    let tuning = model.tuning();
    Ok(json!({
        "width": a.width,
        "n": a.n,
        "seed": a.seed,
        "jobs": a.jobs,
        "target": by_kind(t.as_slice()),
        "x": tuning.x,
        "weights": by_kind(tuning.w.as_slice()),
        "tolerance": {"comp_eps": comp_eps, "sigma": a.sigma},
        "samples": records,
    }))
}

/// A tessellation stored on its own or inside `tetris sample` output.
fn read_tessellation(path: &Path, index: usize) -> Result<Tessellation, CliError> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let t = match v.get("samples") {
        Some(samples) => samples
            .get(index)
            .and_then(|s| s.get("tessellation"))
            .cloned()
            .ok_or_else(|| CliError::domain("invalid_input", format!("no sample {index} in {}", path.display())))?,
        None => v,
    };
    Ok(serde_json::from_value(t)?)
}

pub fn render(a: &TetrisRenderArgs) -> Result<Value, CliError> {
    let t = match (&a.input, a.width, a.n) {
        (Some(p), _, _) => read_tessellation(p, a.index)?,
        (None, Some(w), Some(n)) => {
            let model = TetrisModel::new(w, n, &TargetComposition::uniform(7))?.with_trial_limit(trial_limit()?);
            let tol = ToleranceSpec::new(0.0, 7.0 / n as f64, 1.0)?;
            model.sample(&mut RandomSource::new(a.seed), &tol)?.tessellation
        }
        _ => return Err(CliError::usage("give --input, or --width and --n")),
    };
    let svg = render_svg(&t);
    let mut out = json!({"width": t.width(), "height": t.height()});
    match &a.svg {
        Some(p) => {
            std::fs::write(p, &svg)?;
            out["svg_path"] = json!(p.display().to_string());
        }
        None => out["svg"] = json!(svg),
    }
    Ok(out)
}
