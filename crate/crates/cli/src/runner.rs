use std::thread;

use multiboltz::sampler::{RandomSource, DEFAULT_TRIAL_LIMIT};

use crate::error::CliError;

/// Trial budget per sample, overridable through `MULTIBOLTZ_MAX_TRIALS`.
pub fn trial_limit() -> Result<u64, CliError> {
    match std::env::var("MULTIBOLTZ_MAX_TRIALS") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&x| x > 0)
            .ok_or_else(|| CliError::usage(format!("MULTIBOLTZ_MAX_TRIALS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_TRIAL_LIMIT),
    }
}

/// Runs `draw` for samples `0..count` on `jobs` workers. Worker `j` takes
/// samples `j, j + jobs, ...` in turn with its own generator seeded by
/// `seed + j`, so the output depends on `jobs` but not on scheduling.
/// Results come back in sample order; the first failing sample wins.
pub fn run_samples<R, F>(count: usize, jobs: usize, seed: u64, draw: F) -> Result<Vec<R>, CliError>
where
    R: Send,
    F: Fn(&mut RandomSource) -> Result<R, CliError> + Sync,
{
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let jobs = jobs.min(count.max(1));
    let mut slots: Vec<Option<Result<R, CliError>>> = (0..count).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let draw = &draw;
                scope.spawn(move || {
                    let mut rng = RandomSource::new(seed.wrapping_add(j as u64));
                    let mut out = Vec::new();
                    for i in (j..count).step_by(jobs) {
                        let r = draw(&mut rng);
                        let failed = r.is_err();
                        out.push((i, r));
                        if failed {
                            break;
                        }
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sampling worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    let mut results = Vec::with_capacity(count);
    for slot in slots {
        // A worker only leaves slots empty after an error at a smaller
        // index, which is returned first.
        results.push(slot.expect("slots before the first error are filled")?);
    }
    Ok(results)
}
