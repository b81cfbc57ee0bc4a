//! End-to-end acceptance checks. Each test prints one
//! `CRITERION <n> PASS|FAIL: ...` line before asserting.

use std::collections::HashMap;
use std::process::Command;
use std::time::{Duration, Instant};

use multiboltz::exact::enumerate_words;
use multiboltz::grammar::{parse_grammar, Grammar};
use multiboltz::oracle::{eval_fixed_point, eval_newton, find_singularity, EvalPoint, GfSystem, SingularityKind};
use multiboltz::sampler::{
    plan_size_sampling, predict_exact_size_trials, BoltzmannSampler, CompositionMap, RandomSource, ToleranceSpec,
};
use multiboltz::tetris::{
    build_automaton, disassemble, extract_instance, minimize, piece_frequencies, tessellation_count, Kind,
    TetrisModel,
};
use multiboltz::tuner::{asymptotic_tune, expected_composition_fixed_n, solve_size, tune_weights, TargetComposition};
use multiboltz::Weights;
use num_bigint::BigUint;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const BINARY: &str = "S = 'a' S | 'b' S | _;";
const DYCK: &str = "D = _ | 'a' D 'b' D;";

fn report(criterion: u32, checks: &[(String, bool)], elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let ok = in_time && checks.iter().all(|c| c.1);
    let mut parts: Vec<String> = checks
        .iter()
        .map(|(d, pass)| format!("{d}{}", if *pass { "" } else { " [x]" }))
        .collect();
    parts.push(format!(
        "{:.2}s of {}s{}",
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " [x]" }
    ));
    println!("CRITERION {criterion} {}: {}", if ok { "PASS" } else { "FAIL" }, parts.join("; "));
    assert!(ok, "criterion {criterion} failed");
}

fn sys(src: &str) -> GfSystem {
    GfSystem::new(parse_grammar(src).unwrap()).unwrap()
}

fn weights(w: &[f64]) -> Weights {
    Weights::new(w.to_vec()).unwrap()
}

fn chi_square_p(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((probs.len() - 1) as f64).unwrap().cdf(stat)
}

fn size_sampler(s: &GfSystem, w: &Weights, n: usize) -> BoltzmannSampler {
    let plan = plan_size_sampling(s, w, n).unwrap();
    BoltzmannSampler::new(&plan.sys, &EvalPoint::new(plan.x, w.clone()).unwrap()).unwrap()
}

fn word_index(g: &Grammar, n: usize) -> (Vec<Vec<usize>>, HashMap<Vec<usize>, usize>) {
    let words = enumerate_words(g, n).unwrap();
    let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    (words, index)
}

#[test]
fn criterion_1_closed_forms() {
    let start = Instant::now();
    let binary = sys(BINARY);
    let mut worst_bin = 0f64;
    for w in [[1.0, 1.0], [2.0, 1.0]] {
        let rho = 1.0 / (w[0] + w[1]);
        for i in 0..20 {
            let z = rho * i as f64 / 20.0;
            let p = EvalPoint::new(z, weights(&w)).unwrap();
            let exact = 1.0 / (1.0 - (w[0] + w[1]) * z);
            let nw = eval_newton(&binary, &p, 1e-14).unwrap().values[0];
            let fp = eval_fixed_point(&binary, &p, 1e-15, 1_000_000).unwrap().values[0];
            worst_bin = worst_bin.max(((nw - exact) / exact).abs()).max(((fp - exact) / exact).abs());
        }
    }
    let dyck = sys(DYCK);
    let mut worst_dyck = 0f64;
    for i in 1..=20 {
        let z = 0.5 * i as f64 / 21.0;
        let p = EvalPoint::new(z, weights(&[1.0, 1.0])).unwrap();
        let exact = (1.0 - (1.0 - 4.0 * z * z).sqrt()) / (2.0 * z * z);
        let nw = eval_newton(&dyck, &p, 1e-14).unwrap().values[0];
        let fp = eval_fixed_point(&dyck, &p, 1e-15, 1_000_000).unwrap().values[0];
        worst_dyck = worst_dyck.max(((nw - exact) / exact).abs()).max(((fp - exact) / exact).abs());
    }
    report(
        1,
        &[
            (format!("binary max rel err {worst_bin:.2e} < 1e-9"), worst_bin < 1e-9),
            (format!("dyck max rel err {worst_dyck:.2e} < 1e-8"), worst_dyck < 1e-8),
        ],
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_2_singularities() {
    let start = Instant::now();
    let tol = 1e-12;
    let b1 = find_singularity(&sys(BINARY), &weights(&[1.0, 1.0]), tol).unwrap();
    let b2 = find_singularity(&sys(BINARY), &weights(&[2.0, 1.0]), tol).unwrap();
    let d = find_singularity(&sys(DYCK), &weights(&[1.0, 1.0]), tol).unwrap();
    report(
        2,
        &[
            (format!("binary rho {:.9}", b1.rho), (b1.rho - 0.5).abs() < 1e-6),
            (format!("binary(2,1) rho {:.9}", b2.rho), (b2.rho - 1.0 / 3.0).abs() < 1e-6),
            (format!("dyck rho {:.9}", d.rho), (d.rho - 0.5).abs() < 1e-6),
            (
                format!("kinds {:?}/{:?}/{:?}", b1.kind, b2.kind, d.kind),
                b1.kind == SingularityKind::Pole
                    && b2.kind == SingularityKind::Pole
                    && d.kind == SingularityKind::SquareRoot,
            ),
        ],
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_3_tuning() {
    let start = Instant::now();
    let s = sys(BINARY);
    let n = 100;
    let target = TargetComposition::new(vec![0.7, 0.3]).unwrap();
    let z0 = solve_size(&s, &Weights::ones(2), n, 1e-12).unwrap();
    let t = tune_weights(&s, z0, &Weights::ones(2), &target, n, 1e-7).unwrap();
    let ratio = t.w[0] / t.w[1];
    let a = asymptotic_tune(&s, &target, 1e-10).unwrap();
    let share = a[0] / (a[0] + a[1]);
    report(
        3,
        &[
            (format!("residual {:.1e} < 1e-6", t.residual), t.residual < 1e-6),
            (format!("{} Newton steps <= 50", t.steps), t.steps <= 50),
            (format!("weight ratio {ratio:.8}"), (ratio - 7.0 / 3.0).abs() < 1e-5),
            (format!("asymptotic share {share:.8}"), (share - 0.7).abs() < 1e-4),
        ],
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_4_distributions() {
    let start = Instant::now();
    let g = parse_grammar(BINARY).unwrap();
    let s = sys(BINARY);

    // (a) Uniform over the 256 words of length 8.
    let (words, index) = word_index(&g, 8);
    let sampler = size_sampler(&s, &Weights::ones(2), 8);
    let mut rng = RandomSource::new(1);
    let mut obs = vec![0u64; words.len()];
    for _ in 0..200_000 {
        obs[index[&sampler.gamma2_size(&mut rng, 8, 0.0).unwrap().word]] += 1;
    }
    let pa = chi_square_p(&obs, &vec![1.0 / 256.0; 256]);

    // (b) Words of length 6 weighted 2^#a.
    let (words, index) = word_index(&g, 6);
    let w = weights(&[2.0, 1.0]);
    let sampler = size_sampler(&s, &w, 6);
    let probs: Vec<f64> = words
        .iter()
        .map(|word| 2f64.powi(word.iter().filter(|&&c| c == 0).count() as i32) / 3f64.powi(6))
        .collect();
    let mut obs = vec![0u64; words.len()];
    for _ in 0..100_000 {
        obs[index[&sampler.gamma2_size(&mut rng, 6, 0.0).unwrap().word]] += 1;
    }
    let pb = chi_square_p(&obs, &probs);

    // (c) Exact composition (4, 4): uniform over the 70 balanced words.
    let (all, _) = word_index(&g, 8);
    let words: Vec<Vec<usize>> = all.into_iter().filter(|w| w.iter().filter(|&&c| c == 0).count() == 4).collect();
    let index: HashMap<Vec<usize>, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let sampler = size_sampler(&s, &Weights::ones(2), 8);
    let m = CompositionMap::from_counts(&[4, 4]).unwrap();
    let mut obs = vec![0u64; words.len()];
    for _ in 0..50_000 {
        let r = sampler.gamma3_composition(&mut rng, 8, &m, &ToleranceSpec::exact()).unwrap();
        obs[index[&r.word]] += 1;
    }
    let pc = chi_square_p(&obs, &vec![1.0 / 70.0; 70]);
    report(
        4,
        &[
            (format!("uniform n=8 p={pa:.4}"), pa > 1e-3),
            (format!("weighted n=6 p={pb:.4}"), pb > 1e-3),
            (format!("composition (4,4) over {} words p={pc:.4}", words.len()), pc > 1e-3 && words.len() == 70),
        ],
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn mean_trials(sampler: &BoltzmannSampler, runs: usize, seed: u64, mut draw: impl FnMut(&BoltzmannSampler, &mut RandomSource) -> u64) -> f64 {
    let mut rng = RandomSource::new(seed);
    (0..runs).map(|_| draw(sampler, &mut rng) as f64).sum::<f64>() / runs as f64
}

#[test]
fn criterion_5_trial_laws() {
    let start = Instant::now();
    let s = sys(BINARY);
    let ones = Weights::ones(2);
    let half = CompositionMap::proportional(&TargetComposition::new(vec![0.5, 0.5]).unwrap());

    let predicted = predict_exact_size_trials(&s, &ones, 100).unwrap();
    let g2 = mean_trials(&size_sampler(&s, &ones, 100), 500, 2, |smp, rng| {
        smp.gamma2_size(rng, 100, 0.0).unwrap().gamma2_trials
    });

    // P(10 a's among 20 letters) = C(20, 10) / 2^20.
    let expected3 = 2f64.powi(20) / 184_756.0;
    let g3 = mean_trials(&size_sampler(&s, &ones, 20), 500, 3, |smp, rng| {
        smp.gamma3_composition(rng, 20, &half, &ToleranceSpec::exact()).unwrap().gamma3_trials
    });

    let window = ToleranceSpec::new(0.1, 1.0, 0.5).unwrap();
    let sigma_half: Vec<f64> = [100usize, 400, 1600]
        .iter()
        .map(|&n| {
            mean_trials(&size_sampler(&s, &ones, n), 400, 4, |smp, rng| {
                smp.gamma3_composition(rng, n, &half, &window).unwrap().gamma3_trials
            })
        })
        .collect();
    let spread = sigma_half.iter().cloned().fold(0.0, f64::max) / sigma_half.iter().cloned().fold(f64::MAX, f64::min);

    let exact_comp: Vec<f64> = [64usize, 256]
        .iter()
        .map(|&n| {
            mean_trials(&size_sampler(&s, &ones, n), 300, 5, |smp, rng| {
                smp.gamma3_composition(rng, n, &half, &ToleranceSpec::exact()).unwrap().gamma3_trials
            })
        })
        .collect();
    let growth = exact_comp[1] / exact_comp[0];
    report(
        5,
        &[
            (
                format!("gamma2 n=100 mean {g2:.1} vs predicted {predicted:.1}"),
                (g2 / predicted - 1.0).abs() <= 0.2,
            ),
            (format!("gamma3 n=20 mean {g3:.3} vs {expected3:.3}"), (g3 / expected3 - 1.0).abs() <= 0.15),
            (format!("sigma=1/2 trials {sigma_half:.3?} max/min {spread:.3}"), spread < 2.0),
            (format!("exact composition trials {exact_comp:.2?} ratio {growth:.3}"), (1.4..=2.8).contains(&growth)),
        ],
        start.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_6_automaton_sizes() {
    let raw = [(2usize, 4usize), (3, 55), (4, 80), (5, 1686), (6, 4247), (7, 41389), (8, 49206)];
    let min = [(4usize, 78usize), (5, 1646), (6, 4130), (7, 40099), (8, 47564)];
    let mut checks = Vec::new();
    let mut small = Duration::ZERO;
    let start = Instant::now();
    for (w, states) in raw {
        let t = Instant::now();
        let a = build_automaton(w).unwrap();
        let mut line = format!("w={w} {} states", a.num_states());
        let mut ok = a.num_states() == states;
        if let Some(&(_, m)) = min.iter().find(|(mw, _)| *mw == w) {
            let got = minimize(&a).num_states();
            line.push_str(&format!(", {got} minimized"));
            ok &= got == m;
        }
        if w <= 6 {
            small += t.elapsed();
        }
        checks.push((line, ok));
    }
    checks.push((format!("w<=6 in {:.2}s < 30s", small.as_secs_f64()), small < Duration::from_secs(30)));
    report(6, &checks, start.elapsed(), Duration::from_secs(600));
}

#[test]
fn criterion_7_tetris_statistics() {
    let start = Instant::now();
    let table = [7.90, 10.55, 20.42, 20.42, 17.00, 7.90, 15.81];
    let freqs = piece_frequencies(6, 105).unwrap();
    let mut checks: Vec<(String, bool)> = freqs
        .iter()
        .zip(table)
        .enumerate()
        .map(|(i, (f, t))| {
            let pct = 100.0 * f;
            (
                format!("{} {pct:.4}% vs {t:.2}%", Kind::from_index(i).unwrap().name()),
                (pct - t).abs() <= 0.01,
            )
        })
        .collect();
    let h = tessellation_count(6, 105).unwrap();
    let lo = BigUint::from(25u32) * BigUint::from(10u32).pow(70);
    let hi = BigUint::from(35u32) * BigUint::from(10u32).pow(70);
    let digits = h.to_string();
    checks.push((
        format!("h(6,105) = {}.{}e{}", &digits[..1], &digits[1..4], digits.len() - 1),
        lo <= h && h <= hi,
    ));
    let model = TetrisModel::new(6, 105, &TargetComposition::uniform(7)).unwrap();
    let achieved = expected_composition_fixed_n(model.system().grammar(), &model.tuning().w, 105).unwrap();
    let shares: Vec<f64> = achieved.iter().map(|e| e / 105.0).collect();
    checks.push((
        format!("tuned shares {shares:.5?}"),
        shares.iter().all(|s| (0.141..=0.145).contains(s)),
    ));
    report(7, &checks, start.elapsed(), Duration::from_secs(300));
}

#[test]
fn criterion_8_tetris_sampling() {
    let start = Instant::now();
    let model = TetrisModel::new(6, 105, &TargetComposition::uniform(7)).unwrap();
    let tol = ToleranceSpec::new(0.0, 1.0 / 15.0, 1.0).unwrap();
    let mut rng = RandomSource::new(2024);
    let (mut counts_ok, mut cover_ok, mut play_ok, mut word_ok) = (true, true, true, true);
    for _ in 0..15 {
        let s = model.sample(&mut rng, &tol).unwrap();
        let t = &s.tessellation;
        counts_ok &= t.kind_counts().iter().all(|c| (14..=16).contains(c));
        let mut seen = vec![0u8; 6 * 70];
        for p in t.pieces() {
            for c in &p.cells {
                seen[c[1] * 6 + c[0]] += 1;
            }
        }
        cover_ok &= (t.width(), t.height()) == (6, 70) && t.pieces().len() == 105 && seen.iter().all(|&c| c == 1);
        play_ok &= extract_instance(t).and_then(|i| i.verify()).is_ok();
        word_ok &= disassemble(model.automaton(), t)
            .map(|p| p.iter().map(|x| x.kind).collect::<Vec<_>>() == s.word)
            .unwrap_or(false);
    }
    report(
        8,
        &[
            ("15 boards with every count in 15+-1".into(), counts_ok),
            ("every cell covered once".into(), cover_ok),
            ("acyclic dependencies, replay-valid".into(), play_ok),
            ("disassembly gives back the word".into(), word_ok),
        ],
        start.elapsed(),
        Duration::from_secs(600),
    );
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_multiboltz")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_9_reproducible_output() {
    let start = Instant::now();
    let runs: [&[&str]; 3] = [
        &["--deterministic", "sample", "binary", "--n", "50", "--target", "0.3,0.7", "--count", "5", "--seed", "9"],
        &["--deterministic", "sample", "dyck", "--n", "40", "--eps", "0.1", "--count", "4", "--jobs", "2", "--seed", "3"],
        &["--deterministic", "tetris", "sample", "--width", "4", "--n", "12", "--count", "3", "--seed", "5"],
    ];
    let checks: Vec<(String, bool)> = runs
        .iter()
        .map(|args| {
            let a = run_cli(args);
            let b = run_cli(args);
            (format!("`{}` identical ({} bytes)", args[1..3].join(" "), a.len()), a == b && !a.is_empty())
        })
        .collect();
    report(9, &checks, start.elapsed(), Duration::from_secs(120));
}
