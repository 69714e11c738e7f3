//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ucbq_core::diagnostics::{column_sum, unrolled_q, weight_peak_and_energy, weighted_inv_sqrt, OptimismBand};
use ucbq_core::harness::{ExperimentResults, PER_TOL};
use ucbq_core::learner::bonus_value;
use ucbq_core::solver::{policy_count, DEFAULT_ENUMERATION_CAP};
use ucbq_core::{
    brute_force_optimal, gridworld_1d, random_mdp, solve_optimal, Dims, Experiment,
    ExperimentConfig, InitialDist, Learner, RngStream, SpecialPair, StreamPurpose, Transition,
    Variant,
};

/// Draws with more than this many policies `A^(S*H)` are redrawn; the
/// largest cases (e.g. `3^16`) would take minutes to enumerate.
const ORACLE_POLICY_LIMIT: u128 = DEFAULT_ENUMERATION_CAP;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = RngStream::for_purpose(1, 0, StreamPurpose::Generator);
    let mut worst = 0.0f64;
    let mut largest = 0u128;
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 200 {
        seed += 1;
        let dims = Dims::new(1 + rng.below(4), 1 + rng.below(3), 1 + rng.below(4));
        let count = policy_count(dims).unwrap();
        if count > ORACLE_POLICY_LIMIT {
            continue;
        }
        let spec = random_mdp(seed, dims.num_states, dims.num_actions, dims.horizon);
        let bf = brute_force_optimal(&spec, DEFAULT_ENUMERATION_CAP).expect("within cap");
        let dp = solve_optimal(&spec);
        let dv = (0..=dims.horizon)
            .flat_map(|h| (0..dims.num_states).map(move |x| (h, x)))
            .map(|(h, x)| (bf.v(h, x) - dp.v(h, x)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dv);
        largest = largest.max(count);
        checked += 1;
    }
    outcome(
        worst <= 1e-9,
        format!("200 MDPs (up to {largest} policies), max |dV| = {worst:e}"),
    )
}

fn gridworld_ground_truth() -> Outcome {
    let opt = solve_optimal(&gridworld_1d());
    let v = opt.v_row(0);
    let q = opt.q_row(0, 0);
    let ok = [2.0, 3.0, 3.0].iter().zip(v).all(|(e, g)| (e - g).abs() <= 1e-12)
        && [1.0, 2.0].iter().zip(q).all(|(e, g)| (e - g).abs() <= 1e-12);
    outcome(ok, format!("V*_1 = {v:?}, Q*_1(x1, .) = {q:?}"))
}

fn weight_properties() -> Outcome {
    let tol = 1e-10;
    let mut failures = Vec::new();
    for horizon in [1usize, 3, 10] {
        let h = horizon as f64;
        for t in 1..=1000u64 {
            let tf = t as f64;
            let s = weighted_inv_sqrt(t, horizon);
            if s < 1.0 / tf.sqrt() - tol || s > 2.0 / tf.sqrt() + tol {
                failures.push(format!("(a) H={horizon} t={t}"));
            }
            let (peak, energy) = weight_peak_and_energy(t, horizon);
            if peak > 2.0 * h / tf + tol || energy > 2.0 * h / tf + tol {
                failures.push(format!("(b) H={horizon} t={t}"));
            }
        }
    }
    let mut worst_c: f64 = 0.0;
    let mut c_fail = 0;
    for horizon in [1usize, 3, 10] {
        let target = 1.0 + 1.0 / horizon as f64;
        for i in [1u64, 2, 10, 100] {
            let t_max = 10 * horizon as u64 * i + 10_000;
            let err = (column_sum(i, horizon, t_max) - target).abs();
            worst_c = worst_c.max(err);
            if err > 1e-6 {
                c_fail += 1;
                failures.push(format!("(c) H={horizon} i={i} err={err:.3e}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("(a), (b) over t <= 1000; (c) max err {worst_c:.3e}")
    } else {
        format!(
            "{} violations ({c_fail} in truncated (c), max err {worst_c:.3e}): {}",
            failures.len(),
            failures.iter().take(4).cloned().collect::<Vec<_>>().join(", ")
        )
    };
    outcome(failures.is_empty(), detail)
}

fn compact_update() -> Outcome {
    let spec = gridworld_1d();
    let opt = solve_optimal(&spec);
    let dims = spec.dims();
    let config = ExperimentConfig::gridworld_baseline();
    let mut rng = RngStream::new(11, 4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut learner = Learner::new(
            Variant::MaxOpt,
            dims,
            config.learner_params(),
            Some(&opt),
            Some(SpecialPair::default()),
        )
        .unwrap();
        let n = 1 + rng.below(300);
        let (mut targets, mut bonuses) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for t in 1..=n as u64 {
            let x_next = rng.below(dims.num_states);
            let r = rng.uniform();
            targets.push(r + learner.v(1, x_next));
            bonuses.push(bonus_value(config.c, dims.horizon, learner.log_term(), t).unwrap());
            learner
                .observe(&Transition { x: 0, a: 0, h: 0, r, x_next })
                .unwrap();
        }
        let closed = unrolled_q(dims.horizon, dims.horizon as f64, &targets, &bonuses);
        worst = worst.max((learner.q(0, 0, 0) - closed).abs());
    }
    outcome(worst <= 1e-9, format!("100 sequences, max |diff| = {worst:e}"))
}

fn frozenness(exp: &Experiment, results: &ExperimentResults) -> Outcome {
    let init = exp.new_learner(Variant::MaxOpt).unwrap();
    let special = exp.spec().dims().sa_index(0, 0, 0);
    let runs = results.runs_of(Variant::MaxOpt).unwrap();
    let changed: usize = runs
        .iter()
        .map(|run| {
            run.final_q
                .iter()
                .zip(init.q_table())
                .enumerate()
                .filter(|&(i, (a, b))| i != special && a.to_bits() != b.to_bits())
                .count()
        })
        .sum();
    outcome(
        changed == 0,
        format!("{} runs, {changed} entries changed outside [1][x1][a1]", runs.len()),
    )
}

fn optimism(exp: &Experiment, results: &ExperimentResults) -> Outcome {
    let learner = exp.new_learner(Variant::MaxOpt).unwrap();
    let q_star = exp.optimal().q(0, 0, 0);
    let band = OptimismBand::new(&learner, exp.config().episodes as u64 * 3).unwrap();
    let runs = results.runs_of(Variant::MaxOpt).unwrap();
    let (mut inside, mut total) = (0usize, 0usize);
    for run in runs {
        for snap in &run.special_trace {
            total += 1;
            if band.contains(snap.visits, snap.q - q_star) {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    outcome(
        frac >= 0.95,
        format!("{} runs, {inside}/{total} episodes inside the band ({frac:.4})", runs.len()),
    )
}

fn gridworld_ordering(results: &ExperimentResults) -> Outcome {
    let aggs = results.aggregates().unwrap();
    let summary = ucbq_core::regret_summary(&aggs, 0.05).unwrap();
    let row = |v: Variant| summary.rows.iter().find(|r| r.variant == v).unwrap();
    let (m, n, u) = (row(Variant::MaxOpt), row(Variant::MaxOptNoA2), row(Variant::Ucbh));
    let order = m.total_regret_mean < n.total_regret_mean && n.total_regret_mean < u.total_regret_mean;
    let conv = |r: &ucbq_core::harness::SummaryRow| r.converged_episode.unwrap_or(usize::MAX);
    let earlier = conv(m) < conv(n) && conv(m) < conv(u);
    let fmt_conv = |r: &ucbq_core::harness::SummaryRow| {
        r.converged_episode.map_or("never".to_string(), |k| k.to_string())
    };
    outcome(
        order && earlier,
        format!(
            "total regret MAXOPT {:.3} < MAXOPT_NO_A2 {:.3} < UCBH {:.3}: {order}; \
             converged at {} / {} / {}",
            m.total_regret_mean,
            n.total_regret_mean,
            u.total_regret_mean,
            fmt_conv(m),
            fmt_conv(n),
            fmt_conv(u)
        ),
    )
}

fn scaling(min_per: &mut f64) -> Outcome {
    let mut maxopt = Vec::new();
    let mut ucbh = Vec::new();
    for s in [3usize, 5, 8] {
        let config = ExperimentConfig {
            env: format!("chain:S={s},H=8"),
            variants: vec![Variant::Ucbh, Variant::MaxOpt],
            episodes: 20_000,
            num_runs: 10,
            initial_dist: Some(InitialDist::Fixed(0)),
            ..ExperimentConfig::gridworld_baseline()
        };
        let exp = Experiment::prepare(config).unwrap();
        let results = exp.run_all(jobs()).unwrap();
        track_min_per(&results, min_per);
        for agg in results.aggregates().unwrap() {
            match agg.variant {
                Variant::MaxOpt => maxopt.push(agg.total_regret_mean),
                Variant::Ucbh => ucbh.push(agg.total_regret_mean),
                Variant::MaxOptNoA2 => {}
            }
        }
    }
    let hi = maxopt.iter().copied().fold(f64::MIN, f64::max);
    let lo = maxopt.iter().copied().fold(f64::MAX, f64::min);
    let flat = hi < 1.5 * lo;
    let increasing = ucbh.windows(2).all(|w| w[0] < w[1]);
    outcome(
        flat && increasing,
        format!("chain H=8 K=20000, S=3/5/8: MAXOPT {maxopt:.1?} (ratio {:.3}), UCBH {ucbh:.1?}", hi / lo),
    )
}

fn track_min_per(results: &ExperimentResults, min_per: &mut f64) {
    for group in &results.variants {
        for run in &group.runs {
            for &per in &run.per_episode_regret {
                *min_per = min_per.min(per);
            }
        }
    }
}

fn reproducibility() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = root.join("configs/gridworld.json");
    let dir = tempfile::tempdir().unwrap();
    let mut raws = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ucbq"))
            .arg("run")
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .expect("spawn ucbq");
        if !status.status.success() {
            return outcome(false, format!("ucbq run failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        raws.push(std::fs::read(out.join("raw.csv")).unwrap());
    }
    outcome(
        raws[0] == raws[1],
        format!("raw.csv {} bytes, identical: {}", raws[0].len(), raws[0] == raws[1]),
    )
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored.
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n:>2} {:<4} {name} ({secs:.2}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o, secs));
    };

    let mut min_per = f64::INFINITY;
    record(1, "oracle equivalence", &mut oracle_equivalence);
    record(2, "gridworld ground truth", &mut gridworld_ground_truth);
    record(3, "learning-rate weight properties", &mut weight_properties);
    record(4, "compact-update equivalence", &mut compact_update);

    let gw = Experiment::prepare(ExperimentConfig::gridworld_baseline()).unwrap();
    let start = Instant::now();
    let gw_results = gw.run_all(jobs()).unwrap();
    let gw_secs = start.elapsed().as_secs_f64();
    track_min_per(&gw_results, &mut min_per);

    record(5, "MAXOPT frozenness", &mut || frozenness(&gw, &gw_results));
    record(6, "optimism band", &mut || optimism(&gw, &gw_results));
    record(7, "gridworld ordering and convergence", &mut || {
        let mut o = gridworld_ordering(&gw_results);
        o.detail = format!("{}; experiment {gw_secs:.2}s", o.detail);
        o
    });
    record(8, "chain scaling", &mut || scaling(&mut min_per));
    record(9, "non-negative PER", &mut || {
        outcome(min_per >= -PER_TOL, format!("min PER over acceptance runs = {min_per:e}"))
    });
    record(10, "reproducible raw CSV", &mut reproducibility);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (criteria {failed:?})")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
