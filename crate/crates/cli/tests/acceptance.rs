//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p annealgap-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use annealgap::experiment::{
    ground_truth_for, monte_carlo_trials, ExperimentConfig, TrialCase, POPULATION_LAMBDA,
};
use annealgap::lemma::{agd_upper_bound, verify_lemma, LemmaSetup};
use annealgap::optimizers::{
    annealed_gd, euler_oracle, gd_step, gradient_flow, large_step_size,
};
use annealgap::quadratic::{build_problem, level_set_extremes, Dataset};
use annealgap::DiagonalProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn two_dim_problem() -> DiagonalProblem {
    DiagonalProblem::from_spectra(vec![2.0 / 3.0, 1.0 / 3.0], vec![0.5, 0.5]).unwrap()
}

fn good_bad_table() -> Outcome {
    let p = two_dim_problem();
    let mut worst = 0.0f64;
    for eps in [1e-1f64, 1e-2, 1e-3] {
        let cases = [
            ([(1.5 * eps).sqrt(), 0.0], 0.75 * eps),
            ([0.0, (3.0 * eps).sqrt()], 1.5 * eps),
        ];
        for (delta, test) in cases {
            let errs = [
                rel_err(p.train_loss_of(&delta).unwrap(), eps),
                rel_err(p.population_loss_of(&delta).unwrap(), test),
            ];
            for e in errs {
                worst = worst.max(e);
            }
        }
    }
    let msg = format!("max relative error {worst:.3e} (tol 1e-12)");
    if worst <= 1e-12 { Ok(msg) } else { Err(msg) }
}

fn claim_ratio() -> Outcome {
    let (alpha, eps, k) = (0.01, 0.01, 10);
    let beta_star = ground_truth_for(alpha).unwrap();
    let dataset = Dataset::from_indices(&[0, 0, 1], &beta_star).unwrap();
    let (p, init) = build_problem(&dataset, &beta_star, &POPULATION_LAMBDA).unwrap();
    let d0 = &init.delta;
    let eta = large_step_size(&p);
    let gf = gradient_flow(d0, &p, eps, 2).unwrap();
    let agd = annealed_gd(d0, &p, eta, k, eps, 2).unwrap();
    let gf_loss = p.population_loss_of(&gf.final_state.delta).unwrap();
    let agd_loss = p.population_loss_of(&agd.final_state().delta).unwrap();
    let setup = LemmaSetup::new(d0, &p, 1, alpha, eps).unwrap();
    let bound = agd_upper_bound(d0, &setup, &p, k).unwrap();
    let ratio = gf_loss / agd_loss;

    let tol = 1e-9;
    let checks = [
        (eta == 1.5, "eta = 3/2"),
        (gf_loss >= 0.01485 * (1.0 - tol), "gf loss >= 0.01485"),
        (agd_loss <= 0.0075 * (1.0 + tol), "agd loss <= 0.0075"),
        (bound.decay_constant == 0.0 && bound.remainder == 0.0, "remainder exactly 0"),
        (ratio >= 1.98 * (1.0 - tol), "ratio >= 1.98"),
    ];
    let msg = format!("gf {gf_loss:.10}, agd {agd_loss:.10}, ratio {ratio:.8}, c {}", bound.decay_constant);
    match checks.iter().find(|(ok, _)| !ok) {
        None => Ok(msg),
        Some((_, what)) => Err(format!("{what} violated: {msg}")),
    }
}

fn claim_config(k_steps: usize) -> ExperimentConfig {
    ExperimentConfig { alpha: 0.01, epsilon: 0.01, k_steps, n: 3, seed: 7, trials: 10_000 }
}

fn event_probability() -> Outcome {
    let trials = monte_carlo_trials(&claim_config(10)).map_err(|e| e.to_string())?;
    let dup = trials.iter().filter(|t| t.case == TrialCase::Duplicated).count();
    let frac = dup as f64 / trials.len() as f64;
    let msg = format!("duplicated fraction {frac} over {} trials (want [0.737, 0.763])", trials.len());
    if (0.737..=0.763).contains(&frac) { Ok(msg) } else { Err(msg) }
}

fn degenerate_equality() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in [10, 11] {
        let trials = monte_carlo_trials(&claim_config(k)).map_err(|e| e.to_string())?;
        let degenerate: Vec<_> = trials.iter().filter(|t| t.case == TrialCase::Degenerate).collect();
        let max_gap = degenerate.iter().map(|t| (t.gf_loss - t.agd_loss).abs()).fold(0.0f64, f64::max);
        ok &= !degenerate.is_empty() && max_gap <= 1e-10;
        parts.push(format!("K={k}: {} degenerate trials, max |gap| {max_gap:.3e}", degenerate.len()));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

/// Componentwise error is measured against the largest component of the
/// closed-form residual; the strictly per-component figure is reported too.
fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_scaled, mut worst_component) = (0.0f64, 0.0f64);
    let mut cases = 0;
    while cases < 100 {
        let d = rng.random_range(1..=8);
        let gamma = sorted_desc((0..d).map(|_| rng.random_range(0.1..2.0)).collect());
        let lambda = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let delta0: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
        let p = DiagonalProblem::from_spectra(gamma, lambda).unwrap();
        if p.train_loss_of(&delta0).unwrap() <= eps {
            continue;
        }
        cases += 1;
        let exact = gradient_flow(&delta0, &p, eps, 2).unwrap().final_state.delta;
        let euler = euler_oracle(&delta0, &p, 1e-5, eps).unwrap().delta;
        let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (e, g) in euler.iter().zip(&exact) {
            worst_scaled = worst_scaled.max((e - g).abs() / scale);
            if *g != 0.0 {
                worst_component = worst_component.max(rel_err(*e, *g));
            }
        }
    }
    let msg = format!(
        "{cases} problems, max |euler - gf| / max|gf| = {worst_scaled:.3e} (tol 1e-4); \
         max per-component relative {worst_component:.3e}"
    );
    if worst_scaled <= 1e-4 { Ok(msg) } else { Err(msg) }
}

fn random_lemma_instance(rng: &mut ChaCha8Rng) -> (DiagonalProblem, Vec<f64>, LemmaSetup, usize) {
    loop {
        let d = rng.random_range(2..=8);
        let small_start = rng.random_range(1..d);
        let gamma_k = rng.random_range(0.1..1.0);
        let gap = rng.random_range(0.2..2.0);
        let mut gamma: Vec<f64> = (0..small_start)
            .map(|_| gamma_k * (1.0 + gap) * rng.random_range(1.0..3.0))
            .collect();
        gamma.push(gamma_k);
        gamma.extend((small_start + 1..d).map(|_| gamma_k * rng.random_range(0.3..1.0)));
        let mut gamma = sorted_desc(gamma);
        if small_start >= 2 && rng.random_bool(0.5) {
            gamma[1] = gamma[0];
        }
        let lambda = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let delta0: Vec<f64> = (0..d)
            .map(|_| rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let alpha = rng.random_range(0.05..0.9);
        let eps = 10f64.powf(rng.random_range(-8.0..-1.0));
        let k = rng.random_range(0..30);
        let p = DiagonalProblem::from_spectra(gamma, lambda).unwrap();
        if let Ok(setup) = LemmaSetup::new(&delta0, &p, small_start, alpha, eps) {
            return (p, delta0, setup, k);
        }
    }
}

fn lemma_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut accepted, mut drawn, mut failures) = (0, 0, Vec::new());
    let mut min_margin = f64::INFINITY;
    while accepted < 100 && drawn < 100_000 {
        drawn += 1;
        let (p, delta0, setup, k) = random_lemma_instance(&mut rng);
        let report = verify_lemma(&delta0, &p, &setup, k, 2).map_err(|e| e.to_string())?;
        if !report.applicable() {
            continue;
        }
        accepted += 1;
        min_margin = min_margin.min(report.stop_time / report.stop_time_lower);
        if !report.bounds_hold() {
            failures.push(format!("{:?}", report.verdicts));
        }
    }
    let msg = format!(
        "{accepted} instances passing both conditions (of {drawn} drawn), {} failures, \
         min T / T_lower {min_margin:.4}",
        failures.len()
    );
    if accepted == 100 && failures.is_empty() { Ok(msg) } else { Err(format!("{msg}: {failures:?}")) }
}

fn oscillation_contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked_steps = 0;
    for case in 0..100 {
        let d = rng.random_range(2..=8);
        let mut gamma = sorted_desc((0..d).map(|_| rng.random_range(0.1..2.0)).collect());
        if case % 2 == 0 {
            gamma[1] = gamma[0];
        }
        let p = DiagonalProblem::from_spectra(gamma.clone(), vec![1.0; d]).unwrap();
        let eta = 1.0 / gamma[0];
        let top = gamma[0];
        let c = gamma
            .iter()
            .filter(|&&g| g != top)
            .map(|g| (1.0 - 2.0 * g / top).powi(2))
            .fold(0.0f64, f64::max);
        let delta0: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut delta = delta0.clone();
        for t in 1..=40 {
            delta = gd_step(&delta, &p, eta).map_err(|e| e.to_string())?;
            checked_steps += 1;
            for i in 0..d {
                if gamma[i] == top {
                    if delta[i].abs() != delta0[i].abs() {
                        return Err(format!("case {case}: |delta_{i}| changed at step {t}"));
                    }
                } else if delta[i] * delta[i] > c.powi(t) * delta0[i] * delta0[i] * (1.0 + 1e-12) {
                    return Err(format!("case {case}: delta_{i}^2 above c^t bound at step {t}"));
                }
            }
        }
    }
    Ok(format!("100 problems x 40 steps ({checked_steps} steps): top magnitudes exact, tail within c^t"))
}

/// Brute force over a latitude/longitude grid of the unit sphere mapped onto
/// the level set `sum gamma_i delta_i^2 = eps`.
fn level_set_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(2..=3);
        let gamma = sorted_desc((0..d).map(|_| rng.random_range(0.1..2.0)).collect());
        let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..2.0)).collect();
        let eps = 10f64.powf(rng.random_range(-3.0..0.0));
        let p = DiagonalProblem::from_spectra(gamma.clone(), lambda).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut visit = |u: &[f64]| {
            let delta: Vec<f64> = u.iter().zip(&gamma).map(|(x, g)| x * (eps / g).sqrt()).collect();
            let pop = p.population_loss_of(&delta).unwrap();
            lo = lo.min(pop);
            hi = hi.max(pop);
        };
        const N: usize = 400;
        let step = std::f64::consts::PI / N as f64;
        if d == 2 {
            for a in 0..2 * N {
                let t = a as f64 * step;
                visit(&[t.cos(), t.sin()]);
            }
        } else {
            for a in 0..=N {
                let theta = a as f64 * step;
                for b in 0..2 * N {
                    let phi = b as f64 * step;
                    visit(&[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                }
            }
        }
        let e = level_set_extremes(eps, &p).unwrap();
        worst = worst.max(rel_err(lo, e.best)).max(rel_err(hi, e.worst));
    }
    let msg = format!("50 problems, max relative deviation {worst:.3e} (tol 1e-3)");
    if worst <= 1e-3 { Ok(msg) } else { Err(msg) }
}

fn run_claim(dir: &Path, seed: u64) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_annealgap"))
        .args(["claim", "--trials", "10000", "--seed", &seed.to_string(), "--out"])
        .arg(dir)
        .status()
        .map_err(|e| e.to_string())?;
    if status.code() == Some(0) { Ok(()) } else { Err(format!("claim exited with {status}")) }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dirs = ["a", "b", "other"].map(|d| tmp.path().join(d));
    run_claim(&dirs[0], 7)?;
    run_claim(&dirs[1], 7)?;
    run_claim(&dirs[2], 8)?;
    let read = |dir: &Path, name: &str| fs::read(dir.join(name)).map_err(|e| e.to_string());
    let mut bytes = 0;
    for name in ["claim_summary.json", "claim_trials.csv"] {
        let (a, b) = (read(&dirs[0], name)?, read(&dirs[1], name)?);
        if a != b {
            return Err(format!("{name} differs between identical runs"));
        }
        bytes += a.len();
    }
    if read(&dirs[0], "claim_trials.csv")? == read(&dirs[2], "claim_trials.csv")? {
        return Err("different seeds produced identical trials".into());
    }
    Ok(format!("two seed-7 runs byte-identical ({bytes} bytes of CSV/JSON); seed 8 differs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 good/bad table", good_bad_table),
        ("2 claim ratio", claim_ratio),
        ("3 event probability", event_probability),
        ("4 degenerate equality", degenerate_equality),
        ("5 oracle equivalence", oracle_equivalence),
        ("6 lemma bound suite", lemma_bounds),
        ("7 oscillation/contraction", oscillation_contraction),
        ("8 level-set extremes", level_set_brute_force),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
