//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion that is expected to hold does not.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cmw_core::adversary::{adversarial_environment, verify_equilibrium, worst_case_strategy};
use cmw_core::curvature::Curvature;
use cmw_core::experiments::{
    bound_battery, logistic_map_run, run_random_intervals, LogisticMapConfig, RandomIntervalConfig,
};
use cmw_core::hedge::HedgeState;
use cmw_core::solvers::{prune_dominated, solve_approx, solve_exact, solve_m2};
use cmw_core::{BoxConstraint, CmwConfig, CmwEngine, Distribution, SolverKind};

struct Outcome {
    passed: bool,
    detail: String,
    /// A criterion that cannot hold as stated; its line says FAIL but the
    /// run's exit status does not depend on it.
    known_false: bool,
}

fn ok(passed: bool, detail: String) -> Outcome {
    Outcome {
        passed,
        detail,
        known_false: false,
    }
}

fn unit_box(rng: &mut ChaCha8Rng, m: usize) -> BoxConstraint {
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            (a.min(b), a.max(b))
        })
        .unzip();
    BoxConstraint::new(lo, hi).unwrap()
}

fn weights(rng: &mut ChaCha8Rng, m: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(floor..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

// 1 and 2 share one battery
fn bounds(seed: u64) -> (Outcome, Outcome) {
    let start = Instant::now();
    let r = bound_battery(1000, seed, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let m_ok = r.games.iter().all(|g| (2..=10).contains(&g.m) && (10..=200).contains(&g.horizon));
    let adversary = r
        .games
        .iter()
        .filter(|g| g.kind == cmw_core::experiments::GameKind::Adversary)
        .count();
    let hedge = ok(
        r.hedge_violations == 0 && m_ok && adversary > 0 && secs < 60.0,
        format!(
            "1000 games ({adversary} against the adversary), {} violations, max regret/bound {:.4}, {secs:.1}s",
            r.hedge_violations, r.max_hedge_ratio
        ),
    );
    let cmw = ok(
        r.cmw_violations == 0 && r.claim_violations == 0 && r.range_violations == 0,
        format!(
            "{} bound violations, {} games with a step-size inequality broken, max regret/bound {:.4}",
            r.cmw_violations, r.claim_violations, r.max_cmw_ratio
        ),
    );
    (hedge, cmw)
}

/// `min` over a 1e-3 grid of distributions `p` of `max_corner l^T Q (l - q)`,
/// where `q` is the direction producing `p`. Evaluated from the definition:
/// `q_i - u^T q = (2/eps)(1 - p_i/u_i)`, shifted to sum to zero.
fn grid_minmax_m3(u: &[f64], eps: f64, bx: &BoxConstraint) -> f64 {
    let curv = Curvature::new(u.to_vec()).unwrap();
    let corners: Vec<(Vec<f64>, f64)> = (0..8)
        .map(|c| {
            let l = bx.corner(c);
            let ql = curv.apply(&l);
            let lql: f64 = l.iter().zip(&ql).map(|(a, b)| a * b).sum();
            (l, lql)
        })
        .collect();
    let n = 1000;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let p = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
            let y: Vec<f64> = (0..3).map(|k| 2.0 / eps * (1.0 - p[k] / u[k])).collect();
            let mean = y.iter().sum::<f64>() / 3.0;
            let q: Vec<f64> = y.iter().map(|v| v - mean).collect();
            // Q q = u * (q - u^T q)
            let uq: f64 = u.iter().zip(&q).map(|(a, b)| a * b).sum();
            let qq: Vec<f64> = (0..3).map(|k| u[k] * (q[k] - uq)).collect();
            let mut worst = f64::NEG_INFINITY;
            for (l, lql) in &corners {
                let v = lql - (l[0] * qq[0] + l[1] * qq[1] + l[2] * qq[2]);
                worst = worst.max(v);
            }
            best = best.min(worst);
        }
    }
    best
}

fn solvers(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut closed, mut approx_q, mut grid) = (0.0f64, 0.0f64, 0.0f64);
    let mut above_grid = 0;
    for n in 0..200 {
        let m = 2 + n % 2;
        // step at least 1 keeps the grid's slope, and so its error, under 2e-3
        let eps = rng.gen_range(1.0..4.0);
        let u = weights(&mut rng, m, 0.1);
        let mut b = unit_box(&mut rng, m);
        // the solver prunes dominated options first; the grid is over the
        // full game, so keep m=3 boxes where nothing is dominated
        while m == 3 && prune_dominated(&b).active.len() < 3 {
            b = unit_box(&mut rng, m);
        }
        let exact = solve_exact(&u, eps, &b).unwrap();
        if m == 2 {
            let c = solve_m2(&u, eps, &b).unwrap();
            let a = solve_approx(&u, eps, &b).unwrap();
            closed = closed.max((exact.value - c.value).abs());
            approx_q = approx_q.max((a.q[0] - c.q[0]).abs().max((a.q[1] - c.q[1]).abs()));
        } else {
            let g = grid_minmax_m3(&u, eps, &b);
            grid = grid.max((exact.value - g).abs());
            // the grid can only overestimate the minimum
            if exact.value > g + 1e-9 {
                above_grid += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok(
        closed <= 1e-9 && approx_q <= 1e-6 && grid <= 2e-3 && above_grid == 0 && secs < 120.0,
        format!(
            "m=2 closed form {closed:.1e}, approx q {approx_q:.1e}; m=3 grid {grid:.1e} \
             ({above_grid} above the grid minimum); {secs:.1}s"
        ),
    )
}

fn uniform_cube_value() -> Outcome {
    let mut lines = Vec::new();
    let (mut even_ok, mut odd_match) = (true, true);
    for m in 2..=8 {
        let u = vec![1.0 / m as f64; m];
        let b = BoxConstraint::uniform(m, 0.0, 1.0).unwrap();
        let r = solve_exact(&u, 1e-3, &b).unwrap().value;
        // variance of uniformly weighted 0/1 values peaks at k(m-k)/m^2
        let attainable = ((m / 2) * (m - m / 2)) as f64 / (m * m) as f64;
        if m % 2 == 0 {
            even_ok &= (r - 0.25).abs() <= 1e-7;
        } else {
            odd_match &= (r - attainable).abs() <= 1e-7;
        }
        lines.push(format!("m={m}: {r:.9}"));
    }
    Outcome {
        passed: false,
        known_false: even_ok && odd_match,
        detail: format!(
            "{}; 0.25 holds for even m only, odd m give floor(m/2)ceil(m/2)/m^2 {}",
            lines.join(", "),
            if odd_match { "as computed" } else { "MISMATCH" }
        ),
    }
}

fn equilibrium(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in 0..100 {
        let m = 2 + n % 4;
        let u = weights(&mut rng, m, 0.02);
        let b = unit_box(&mut rng, m);
        let eps = rng.gen_range(0.05..3.0);
        let (s, _) = worst_case_strategy(&u, eps, &b).unwrap();
        worst = worst.max(verify_equilibrium(&s, &u, eps, &b).unwrap().abs());
    }
    let b = BoxConstraint::uniform(2, 0.0, 1.0).unwrap();
    let (s, _) = worst_case_strategy(&[0.5, 0.5], 0.01, &b).unwrap();
    // corners 1 = (1, 0) and 2 = (0, 1)
    let split = (s.prob(1) - 0.5).abs().max((s.prob(2) - 0.5).abs());
    ok(
        worst <= 1e-6 && split <= 1e-6,
        format!("max gap {worst:.1e}; unit square split off by {split:.1e}"),
    )
}

fn intervals(m: usize, solver: SolverKind, need_negative_median: bool) -> Outcome {
    let cfg = RandomIntervalConfig {
        m,
        solver,
        ..RandomIntervalConfig::default()
    };
    let start = Instant::now();
    let pairs = run_random_intervals(&cfg, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let beats = pairs
        .iter()
        .filter(|p| p.cmw.summary.expected_cost < p.hedge.summary.expected_cost)
        .count();
    let regrets: Vec<f64> = pairs.iter().map(|p| p.cmw.summary.regret).collect();
    let med = cmw_core::experiments::median(&regrets);
    let passed = beats >= 95 && (!need_negative_median || med < 0.0) && secs < 600.0;
    ok(
        passed,
        format!("m={m} {solver}: beats hedge in {beats}/100, median regret {med:.3}, {secs:.1}s single-threaded"),
    )
}

fn logistic() -> Outcome {
    let base = LogisticMapConfig::default();
    let grid = base.grid();
    let endpoints = grid[0] == 3.0 && grid[49] == 3.9;
    let (mut ordered, mut in_set, mut worst_ratio) = (0, 0, 0.0f64);
    for seed in 0..20 {
        let cfg = LogisticMapConfig { seed, ..base.clone() };
        let pair = logistic_map_run(&cfg, 0).unwrap();
        let (best, cmw, mw) = (
            pair.cmw.summary.best_cost,
            pair.cmw.summary.expected_cost,
            pair.hedge.summary.expected_cost,
        );
        if best <= cmw && cmw <= 1.05 * mw {
            ordered += 1;
        }
        worst_ratio = worst_ratio.max(cmw / mw);
        // 0-based 30..=32 are the 31st to 33rd grid points
        if (30..=32).contains(&pair.cmw.summary.best_index) {
            in_set += 1;
        }
    }
    ok(
        endpoints && ordered == 20 && in_set >= 18,
        format!(
            "Best <= CMW <= 1.05 MW in {ordered}/20 seeds (max CMW/MW {worst_ratio:.3}), \
             best option among 31st-33rd in {in_set}/20, endpoints exact: {endpoints}"
        ),
    )
}

fn check_distribution(d: &Distribution, worst_sum: &mut f64, negative: &mut usize) {
    let s: f64 = d.probs().iter().sum();
    *worst_sum = worst_sum.max((s - 1.0).abs());
    *negative += d.probs().iter().filter(|&&p| p < 0.0).count();
}

fn invariants(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_eig = f64::INFINITY;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=12);
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powi(3)).collect();
        min_eig = min_eig.min(Curvature::from_weights(&w).unwrap().min_eigenvalue());
    }

    // every solver, oblivious and adversarial losses
    let (mut worst_sum, mut negative, mut steps) = (0.0f64, 0usize, 0usize);
    for (n, solver) in [SolverKind::ExactLp, SolverKind::ClosedFormM2, SolverKind::Approximate, SolverKind::Zero]
        .into_iter()
        .cycle()
        .take(40)
        .enumerate()
    {
        let m = if solver == SolverKind::ClosedFormM2 { 2 } else { rng.gen_range(2..=8) };
        let t = rng.gen_range(20..150);
        let mut e = CmwEngine::new(CmwConfig::new(m, t, 1.0, solver).unwrap()).unwrap();
        for _ in 0..t {
            let b = unit_box(&mut rng, m);
            let p = e.propose(&b).unwrap();
            check_distribution(&p.distribution, &mut worst_sum, &mut negative);
            let l = if n % 2 == 0 {
                (0..m).map(|i| rng.gen_range(b.lower()[i]..=b.upper()[i])).collect()
            } else {
                adversarial_environment(&p.outcome.weights, p.epsilon, &b, &mut rng)
                    .unwrap()
                    .into_inner()
            };
            e.observe(&p, &l).unwrap();
            steps += 1;
        }
    }

    // zero direction with hedge's step
    let mut identical = true;
    for _ in 0..50 {
        let m = rng.gen_range(2..=10);
        let t = rng.gen_range(10..200);
        let mut hedge = HedgeState::for_horizon(m, t, 1.0).unwrap();
        let mut cfg = CmwConfig::new(m, t, 1.0, SolverKind::Zero).unwrap();
        cfg.fixed_epsilon = Some(hedge.epsilon());
        let mut e = CmwEngine::new(cfg).unwrap();
        for _ in 0..t {
            let b = unit_box(&mut rng, m);
            let p = e.propose(&b).unwrap();
            identical &= p.distribution.probs() == hedge.distribution().probs();
            let l: Vec<f64> = (0..m).map(|i| rng.gen_range(b.lower()[i]..=b.upper()[i])).collect();
            e.observe(&p, &l).unwrap();
            hedge.observe(&l).unwrap();
        }
    }
    ok(
        min_eig >= -1e-10 && worst_sum <= 1e-12 && negative == 0 && identical,
        format!(
            "min eigenvalue {min_eig:.1e}; {steps} steps, max |sum p - 1| {worst_sum:.1e}, {negative} negative; \
             zero direction identical to hedge: {identical}"
        ),
    )
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_cmw"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "cmw {args:?} exited with {status}");
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 3] = [
        ("random-intervals", &["--m", "6", "--T", "60", "--trials", "4", "--seed", "7"]),
        ("adversarial", &["--m", "4", "--T", "40", "--trials", "3", "--seed", "3"]),
        ("logistic", &["--T", "80", "--trials", "2", "--seed", "5"]),
    ];
    let mut identical = 0;
    let mut files = 0;
    for (exp, flags) in runs {
        let first = tmp.path().join(format!("{exp}-a"));
        let mut args = vec!["run", exp, "--jobs", "3", "--out", first.to_str().unwrap()];
        args.extend_from_slice(flags);
        run_cli(&args);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
        // replay exactly as the manifest says, into a fresh directory
        let second = tmp.path().join(format!("{exp}-b"));
        let replay = manifest["replay"].as_str().unwrap().to_string();
        let mut words: Vec<&str> = replay.split_whitespace().skip(1).collect();
        let out_at = words.iter().position(|w| *w == "--out").unwrap();
        words[out_at + 1] = second.to_str().unwrap();
        run_cli(&words);
        let (a, b) = (csvs(&first), csvs(&second));
        files += a.len();
        if !a.is_empty() && a == b {
            identical += 1;
        }
    }
    ok(
        identical == 3,
        format!("{identical}/3 manifest replays byte-identical ({files} CSVs)"),
    )
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let timed = |n: usize, f: &dyn Fn() -> Outcome, results: &mut Vec<_>| {
        let s = Instant::now();
        let o = f();
        results.push((n, o, s.elapsed()));
    };
    let s = Instant::now();
    let (c1, c2) = bounds(2024);
    let d = s.elapsed();
    results.push((1, c1, d));
    results.push((2, c2, Duration::ZERO));
    timed(3, &|| solvers(3), &mut results);
    timed(4, &uniform_cube_value, &mut results);
    timed(5, &|| equilibrium(5), &mut results);
    timed(6, &|| intervals(10, SolverKind::ExactLp, true), &mut results);
    timed(7, &|| intervals(100, SolverKind::Approximate, false), &mut results);
    timed(8, &logistic, &mut results);
    timed(9, &|| invariants(9), &mut results);
    timed(10, &determinism, &mut results);

    let mut unexpected = 0;
    for (n, o, d) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if o.known_false { " [expected: does not hold for odd m]" } else { "" };
        println!("criterion {n:>2}: {tag}{note} - {} ({:.1}s)", o.detail, d.as_secs_f64());
        if !o.passed && !o.known_false {
            unexpected += 1;
        }
    }
    println!(
        "acceptance: {} passed, {} failed ({} unexpected), {:.1}s",
        results.iter().filter(|r| r.1.passed).count(),
        results.iter().filter(|r| !r.1.passed).count(),
        unexpected,
        total.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
