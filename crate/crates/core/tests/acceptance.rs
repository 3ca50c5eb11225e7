//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::HashSet;
use std::time::Instant;

use babyworld::env::{random_throughput, replay};
use babyworld::grid::{ObjKind, compute_reward};
use babyworld::harness::*;
use babyworld::lang::{Article, Body, Clause, CountConfig, Descriptor, Instruction, count_instructions, format_count};
use babyworld::levels::{LevelId, make_mission};
use babyworld::sample_eff::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal as Gauss};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failures += usize::from(!ok);
    }
}

fn language(r: &mut Report) {
    let n = count_instructions(&CountConfig::default());
    let shown = format_count(n);
    let three_sig = format!("{:.2e}", n as f64);

    let kinds = [ObjKind::Door, ObjKind::Key, ObjKind::Ball, ObjKind::Box];
    let movable = [ObjKind::Key, ObjKind::Ball, ObjKind::Box];
    let d = |k| Descriptor::new(Article::The, None, k, None);
    let mut clauses: Vec<Clause> = kinds.iter().map(|&k| Clause::GoTo(d(k))).collect();
    clauses.extend(movable.iter().map(|&k| Clause::Pickup(d(k))));
    clauses.push(Clause::Open(d(ObjKind::Door)));
    for &m in &movable {
        for &k in &kinds {
            clauses.push(Clause::PutNext(d(m), d(k)));
        }
    }
    let bodies: Vec<Body> = clauses
        .iter()
        .map(|&c| Body::Single(c))
        .chain(clauses.iter().flat_map(|&a| clauses.iter().map(move |&b| Body::And(a, b))))
        .collect();
    let mut sentences: HashSet<String> = clauses.iter().map(|&c| Instruction::Single(c).to_string()).collect();
    for &a in &bodies {
        for &b in &bodies {
            sentences.insert(Instruction::Then(a, b).to_string());
            sentences.insert(Instruction::After(a, b).to_string());
        }
    }
    let small = count_instructions(&CountConfig { articles: 1, color_options: 1, loc_options: 1, connectors: true });
    let ok = three_sig == "2.48e19" && shown.starts_with("2.483") && small == sentences.len() as u128;
    r.line(
        "language cardinality",
        ok,
        format!("{n} = {shown}; small grammar {small} vs {} enumerated", sentences.len()),
    );
}

fn competence(r: &mut Report) {
    let t = Instant::now();
    let mut detail = Vec::new();
    let mut ok = true;
    for level in LevelId::ALL {
        let results: Vec<(bool, bool, bool)> = (0..1000u64)
            .into_par_iter()
            .map(|seed| match make_mission(level, seed) {
                Err(_) => (false, false, false),
                Ok(m) => {
                    let witness = replay(&m, &m.witness).success;
                    let live = run_episode(&mut BotAgent::default(), &m);
                    (true, witness, live.success && live.actions == m.witness)
                }
            })
            .collect();
        let accepted = results.iter().filter(|x| x.0).count();
        let replayed = results.iter().filter(|x| x.0 && x.1).count();
        let live = results.iter().filter(|x| x.0 && x.2).count();
        ok &= accepted > 0 && replayed == accepted && live == accepted;
        if replayed != accepted || live != accepted || accepted < 1000 {
            detail.push(format!("{level} {live}/{replayed}/{accepted}"));
        }
    }
    let summary = if detail.is_empty() { "19 levels x 1000 seeds all solved and replayed".to_string() } else { detail.join(", ") };
    r.line("bot competence", ok, format!("{summary} ({:.0}s)", t.elapsed().as_secs_f64()));
}

fn demo_lengths(r: &mut Report) {
    let targets = [
        (LevelId::GoToObj, 5.18, 1.5, false),
        (LevelId::GoToRedBall, 5.38, 1.5, false),
        (LevelId::GoToLocal, 5.04, 1.5, false),
        (LevelId::GoToObjMaze, 70.8, 0.25, true),
        (LevelId::Open, 31.5, 0.25, true),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (level, target, tol, relative) in targets {
        let lens: Vec<usize> =
            (0..10_000u64).into_par_iter().filter_map(|s| make_mission(level, s).ok().map(|m| m.witness.len())).collect();
        let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
        let band = if relative { target * tol } else { tol };
        let good = (mean - target).abs() <= band;
        ok &= good;
        parts.push(format!("{level} {mean:.2} (target {target} +- {band:.2})"));
    }
    r.line("demo length calibration", ok, parts.join(", "));
}

fn throughput(r: &mut Report) {
    let t = random_throughput(LevelId::GoToObj, 200_000, 0).expect("GoToObj generates");
    let sps = t.steps_per_second();
    r.line("throughput", sps >= 3000.0, format!("{sps:.0} steps/s over {} steps, {} episodes", t.steps, t.episodes));
}

fn orthant(mean: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    // P(X < 0, Y > 0) by Simpson quadrature over x
    let std = Gauss::new(0.0, 1.0).unwrap();
    let (sx, sy) = (cov[0][0].sqrt(), cov[1][1].sqrt());
    let rho = cov[0][1] / (sx * sy);
    let (a, b) = (mean[0] - 12.0 * sx, 0.0f64.min(mean[0] + 12.0 * sx));
    let n = 20_000;
    let h = (b - a) / n as f64;
    let f = |x: f64| {
        let dens = (-(x - mean[0]).powi(2) / (2.0 * sx * sx)).exp() / (sx * (2.0 * std::f64::consts::PI).sqrt());
        let m = mean[1] + rho * sy / sx * (x - mean[0]);
        dens * (1.0 - std.cdf(-m / (sy * (1.0 - rho * rho).sqrt())))
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn estimator(r: &mut Report) {
    let t = Instant::now();
    let mut covered = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let x0: f64 = rng.random_range(10.0..14.0);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let records: Vec<(f64, f64)> = (0..46)
            .map(|i| {
                let x = 8.0 + 0.2 * i as f64;
                (x.exp2(), 100.0 - (x0 - x).exp2() + noise.sample(&mut rng))
            })
            .collect();
        match estimate_kmin(&records, 0.99, GRID_POINTS, MC_DRAWS, trial) {
            Ok(e) => covered += usize::from(e.interval.covers(&e.posterior.grid, x0.exp2())),
            Err(err) => println!("  trial {trial}: {err}"),
        }
    }

    let mut worst: f64 = 0.0;
    for (i, (mean, cov)) in [
        ([0.0, 0.0], [[1.0, 1.2], [1.2, 4.0]]),
        ([-0.4, 0.3], [[0.5, 0.2], [0.2, 0.3]]),
        ([-1.5, -0.2], [[1.0, -0.3], [-0.3, 1.0]]),
    ]
    .into_iter()
    .enumerate()
    {
        let draws = 200_000;
        let (counts, _) = first_crossing_counts(&mean, &[cov[0].to_vec(), cov[1].to_vec()], draws, 40 + i as u64);
        let p = orthant(mean, cov);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        worst = worst.max((counts[1] as f64 / draws as f64 - p).abs() / se);
    }
    r.line(
        "estimator correctness",
        covered >= 95 && worst <= 3.0,
        format!(
            "99% interval covers true k_min in {covered}/100 trials; 2-point bucket within {worst:.2} SE of orthant ({:.0}s)",
            t.elapsed().as_secs_f64()
        ),
    );
}

fn reward_and_smoothing(r: &mut Report) {
    let mut reward_ok = true;
    for max in [1u32, 2, 7, 64, 576, 1152, 10_000] {
        for n in 0..=max {
            let want = 1.0 - 0.9 * (n as f64 / max as f64);
            let got: f64 = compute_reward(n, max, true).unwrap();
            reward_ok &= (got - want).abs() <= 1e-12 && compute_reward::<f64>(n, max, false).unwrap() == 0.0;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut smooth_ok = true;
    for _ in 0..200 {
        let len = rng.random_range(0..300);
        let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..100.0)).collect();
        let got = smooth_success_curve(&raw);
        smooth_ok &= got.len() == raw.len();
        for i in 0..raw.len() {
            let w = &raw[i.saturating_sub(9)..=i];
            smooth_ok &= (got[i] - w.iter().sum::<f64>() / w.len() as f64).abs() < 1e-9;
        }
    }
    r.line(
        "reward and smoothing oracles",
        reward_ok && smooth_ok,
        format!("reward formula {}, window means {}", if reward_ok { "exact" } else { "mismatch" }, if smooth_ok { "match" } else { "mismatch" }),
    );
}

fn growth(r: &mut Report) {
    let cfg = GrowthConfig { max_rounds: 5, eval_episodes: 64, stop_rate: 1.1, ..GrowthConfig::default() };
    let trace = interactive_growth::<(), _>(LevelId::GoToObj, &cfg, |set| Ok(Box::new(ReplayAgent::new(set)) as Box<dyn AgentPort>))
        .expect("growth runs");
    let sizes: Vec<usize> = trace.points.iter().map(|p| p.0).collect();
    let expected: Vec<usize> = (0..5).map(|i| (1024.0 * 2f64.powf(i as f64 / 4.0)).round() as usize).collect();
    let mut only_failed = true;
    for i in 1..sizes.len() {
        let before = DemoSet { episodes: trace.dataset.episodes[..sizes[i - 1]].to_vec() };
        let mut agent = ReplayAgent::new(&before);
        for e in &trace.dataset.episodes[sizes[i - 1]..sizes[i]] {
            only_failed &= !run_episode(&mut agent, &make_mission(e.level, e.seed).unwrap()).success;
        }
    }
    r.line(
        "interactive growth schedule",
        sizes == expected && only_failed,
        format!("sizes {sizes:?} vs {expected:?}; increments all failed missions: {only_failed}"),
    );
}

fn main() {
    let mut r = Report { failures: 0 };
    language(&mut r);
    reward_and_smoothing(&mut r);
    throughput(&mut r);
    growth(&mut r);
    competence(&mut r);
    demo_lengths(&mut r);
    estimator(&mut r);
    if r.failures > 0 {
        println!("{} criteria failed", r.failures);
        std::process::exit(1);
    }
}
