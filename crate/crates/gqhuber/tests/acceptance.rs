//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gqhuber::config::{EnvPlan, ExperimentConfig, Plan};
use gqhuber::gqhuber_core::agent::{
    pairwise_grad_slice, pairwise_loss_slice, rollout_risk, RiskMetric,
};
use gqhuber::gqhuber_core::env::SabrHedgingEnv;
use gqhuber::gqhuber_core::loss::{c_gl, c_gl_grad, c_gla, huber};
use gqhuber::gqhuber_core::w1::{w1_closed, w1_quadrature};
use gqhuber::gqhuber_core::{Gaussian, LossSpec, LossVariant, NoiseStats};
use gqhuber::records::{read_records, Metric, Row};
use gqhuber::runner::{run_plan, run_single, write_outputs, RECORDS_FILE, SUMMARY_FILE};
use gqhuber::summary::read_summary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const THRESHOLDS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
/// sup_u |c_gl(u, b) − c_gla(u, b)| / b.
const GL_GLA_GAP: f64 = 0.166_630_941_175_372_6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load(name: &str) -> Plan {
    let path = config_path(name);
    ExperimentConfig::load(&path)
        .and_then(|c| c.resolve(path.parent().unwrap()))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn arm_rows<'a>(rows: &'a [Row], arm: &str, seed: u64) -> Vec<&'a Row> {
    rows.iter()
        .filter(|r| r.arm == arm && r.seed == seed)
        .collect()
}

fn seeds(plan: &Plan) -> Vec<u64> {
    (0..plan.seeds as u64).map(|r| plan.base_seed + r).collect()
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = Gaussian::new(rng.random_range(-5.0..5.0), rng.random_range(0.0..3.0)).unwrap();
        let q = Gaussian::new(rng.random_range(-5.0..5.0), rng.random_range(0.0..3.0)).unwrap();
        let d = (w1_closed(&p, &q).unwrap() - w1_quadrature(&p, &q, 1_000_000).unwrap()).abs();
        worst = worst.max(d);
    }
    let elapsed = started.elapsed();
    verdict(
        worst <= 1e-4 && elapsed < Duration::from_secs(5),
        format!("closed-form vs quadrature W1 over 100 pairs: max diff {worst:.2e} (<= 1e-4), {elapsed:.2?} (< 5 s)"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta: f64 = rng.random_range(-5.0..5.0);
        let y: f64 = rng.random_range(-5.0..5.0);
        let s1: f64 = rng.random_range(0.0..3.0);
        let s2: f64 = rng.random_range(0.0..3.0);
        let b = (s1 - s2).abs();
        let w = w1_closed(
            &Gaussian::new(theta, s1).unwrap(),
            &Gaussian::new(y, s2).unwrap(),
        )
        .unwrap();
        let d = (c_gl(y - theta, b).unwrap() - (w - b * (2.0 / std::f64::consts::PI).sqrt())).abs();
        worst = worst.max(d);
    }
    verdict(
        worst <= 1e-10,
        format!("c_gl equals shifted Gaussian W1 over 100 tuples: max diff {worst:.2e} (<= 1e-10)"),
    )
}

fn criterion_3() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for b in THRESHOLDS {
        let mut sandwich: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for i in 0..=200_000 {
            let u = -10.0 * b + 20.0 * b * i as f64 / 200_000.0;
            let gla = c_gla(u, b).unwrap();
            sandwich = sandwich.max((gla - huber(u, b).unwrap() / b).abs());
            gap = gap.max((c_gl(u, b).unwrap() - gla).abs());
        }
        pass &= sandwich <= 0.3 * b && gap <= GL_GLA_GAP * b * (1.0 + 1e-12);
        parts.push(format!("b={b}: {:.4}b/{:.4}b", sandwich / b, gap / b));
    }
    verdict(
        pass,
        format!(
            "|c_gla - huber/b| <= 0.3b and |c_gl - c_gla| <= {GL_GLA_GAP:.6}b ({})",
            parts.join(", ")
        ),
    )
}

fn criterion_4() -> Verdict {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut kernel_err: f64 = 0.0;
    for _ in 0..200 {
        let u: f64 = rng.random_range(-10.0..10.0);
        let b: f64 = rng.random_range(0.05..5.0);
        let fd = (c_gl(u + h, b).unwrap() - c_gl(u - h, b).unwrap()) / (2.0 * h);
        kernel_err = kernel_err.max((c_gl_grad(u, b).unwrap() - fd).abs());
    }
    let mut pair_err: f64 = 0.0;
    let mut checked = 0;
    while checked < 200 {
        let t = rng.random_range(0.1..2.0);
        let spec = match rng.random_range(0..4) {
            0 => LossSpec::qr(),
            1 => LossSpec::quantile_huber(t),
            2 => LossSpec::gl(t),
            _ => LossSpec::gla(t),
        };
        let n = rng.random_range(1..10);
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let near = pred.iter().any(|&th| {
            targets.iter().any(|&y| {
                let a = (y - th).abs();
                a < 1e-4 || (spec.variant != LossVariant::Qr && (a - spec.threshold).abs() < 1e-4)
            })
        });
        if near {
            continue;
        }
        let g = pairwise_grad_slice(&pred, &targets, &spec).unwrap();
        for i in 0..n {
            let mut up = pred.clone();
            let mut down = pred.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (pairwise_loss_slice(&up, &targets, &spec).unwrap()
                - pairwise_loss_slice(&down, &targets, &spec).unwrap())
                / (2.0 * h);
            pair_err = pair_err.max((g[i] - fd).abs());
        }
        checked += 1;
    }
    let mut max_slope: f64 = 0.0;
    for b in THRESHOLDS {
        for i in 0..=20_000 {
            let u = -10.0 + 20.0 * i as f64 / 20_000.0;
            max_slope = max_slope.max(c_gl_grad(u, b).unwrap().abs());
        }
    }
    verdict(
        kernel_err <= 1e-5 && pair_err <= 1e-5 && max_slope <= 1.0,
        format!(
            "finite differences: c_gl_grad {kernel_err:.2e}, pairwise_grad {pair_err:.2e} (<= 1e-5, 200 instances each); max |c_gl_grad| on grid {max_slope} (<= 1)"
        ),
    )
}

fn criterion_5() -> Verdict {
    let plan = load("chain.json");
    let seeds = seeds(&plan);
    let n_quantiles = match &plan.env {
        EnvPlan::Oracle {
            oracle_quantiles, ..
        } => oracle_quantiles.len(),
        EnvPlan::Sabr { .. } => 0,
    };
    let mut pass = n_quantiles == 32 && plan.train.epochs == 200;
    let mut parts = Vec::new();
    for (a, arm) in plan.arms.iter().enumerate() {
        let started = Instant::now();
        let best: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                run_single(&plan, a, s)
                    .unwrap()
                    .iter()
                    .filter_map(|r| r.w1_oracle)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let elapsed = started.elapsed();
        let worst = best.iter().copied().fold(0.0, f64::max);
        let ok = worst <= 0.05 && elapsed < Duration::from_secs(60);
        pass &= ok;
        parts.push(format!("{} min W1 {worst:.3} in {elapsed:.1?}", arm.name));
    }
    verdict(
        pass,
        format!(
            "every arm reaches W1 <= 0.05 on the +-1 chain (N={n_quantiles}, {} epochs, {} seeds, < 60 s per arm): {}",
            plan.train.epochs,
            seeds.len(),
            parts.join("; ")
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut stats = NoiseStats::new();
    for _ in 0..10_000 {
        let c1: f64 = rng.random_range(-3.0..3.0);
        let c2: f64 = rng.random_range(-3.0..3.0);
        let p: Vec<f64> = (0..32)
            .map(|_| c1 + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let t: Vec<f64> = (0..32)
            .map(|_| c2 + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        stats.observe_batch(&p, &t).unwrap();
    }
    let b = stats.current_b();
    verdict(
        (b - 0.4).abs() <= 0.02,
        format!("sigma 0.1 vs 0.5 over 10^4 batches gives b = {b:.4} (0.4 +- 0.02)"),
    )
}

fn criterion_7() -> Verdict {
    let plan = load("chain_sweep.json");
    let seeds = seeds(&plan);
    let started = Instant::now();
    let out = run_plan(&plan, None).unwrap();
    let elapsed = started.elapsed();
    let final_of = |arm: &str, m: Metric| -> f64 {
        let xs: Vec<f64> = seeds
            .iter()
            .map(|&s| arm_rows(&out.rows, arm, s).last().unwrap().get(m).unwrap())
            .collect();
        mean(&xs)
    };
    let grid: Vec<(f64, f64)> = plan
        .arms
        .iter()
        .filter(|a| a.loss.variant == LossVariant::QuantileHuber && !a.loss.adaptive)
        .map(|a| (a.loss.threshold, final_of(&a.name, Metric::W1Oracle)))
        .collect();
    let (k_star, best_w1) = grid
        .iter()
        .copied()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let adaptive = plan
        .arms
        .iter()
        .find(|a| a.loss.variant == LossVariant::QuantileHuber && a.loss.adaptive)
        .unwrap();
    let b = final_of(&adaptive.name, Metric::B);
    let w1 = final_of(&adaptive.name, Metric::W1Oracle);
    let (lo, hi) = (k_star / SQRT_2, k_star * SQRT_2);
    let checks = [
        out.failures.is_empty(),
        seeds.len() == 5,
        k_star != 1.0,
        (lo..=hi).contains(&b),
        w1 <= 1.1 * best_w1,
        elapsed < Duration::from_secs(600),
    ];
    let grid_text: Vec<String> = grid.iter().map(|(k, w)| format!("k={k}: {w:.3}")).collect();
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "k sweep W1 [{}], k* = {k_star} (!= 1); adaptive b = {b:.3} in [{lo:.3}, {hi:.3}]; adaptive W1 {w1:.3} <= 1.1 x {best_w1:.3}; {} seeds, {elapsed:.1?} (< 10 min)",
            grid_text.join(", "),
            seeds.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let plan = load("sabr.json");
    let seeds = seeds(&plan);
    let EnvPlan::Sabr {
        config,
        eval_episodes,
        eval_seed,
        eval_max_steps,
    } = &plan.env
    else {
        panic!("sabr.json must use the sabr environment");
    };
    let mut env = SabrHedgingEnv::new(config.clone()).unwrap();
    let idle = env.do_nothing_action();
    let baseline = rollout_risk(
        &mut env,
        |_| Ok(idle),
        *eval_episodes,
        *eval_seed,
        RiskMetric::Cvar95,
        *eval_max_steps,
    )
    .unwrap();
    let out = run_plan(&plan, None).unwrap();

    let mut improved = out.failures.is_empty();
    let mut parts = Vec::new();
    for arm in &plan.arms {
        let mut firsts = Vec::new();
        for &s in &seeds {
            let first = arm_rows(&out.rows, &arm.name, s)
                .iter()
                .find(|r| r.risk > baseline)
                .map(|r| r.epoch);
            improved &= first.is_some_and(|e| e <= 50);
            firsts.push(first.map_or("never".to_string(), |e| e.to_string()));
        }
        parts.push(format!("{} [{}]", arm.name, firsts.join(",")));
    }

    let find = |variant: LossVariant, adaptive: bool, threshold: Option<f64>| {
        plan.arms
            .iter()
            .find(|a| {
                a.loss.variant == variant
                    && a.loss.adaptive == adaptive
                    && threshold.map_or(true, |t| a.loss.threshold == t)
            })
            .unwrap()
            .name
            .clone()
    };
    let qh1 = find(LossVariant::QuantileHuber, false, Some(1.0));
    let gl = find(LossVariant::Gl, true, None);
    let mut qh_epochs = Vec::new();
    let mut gl_epochs = Vec::new();
    for &s in &seeds {
        let qh_rows = arm_rows(&out.rows, &qh1, s);
        let target = qh_rows.last().unwrap().risk;
        let reach = |rows: &[&Row]| {
            rows.iter()
                .find(|r| r.risk >= target)
                .map_or(f64::INFINITY, |r| r.epoch as f64)
        };
        qh_epochs.push(reach(&qh_rows));
        gl_epochs.push(reach(&arm_rows(&out.rows, &gl, s)));
    }
    let (qh_med, gl_med) = (median(qh_epochs), median(gl_epochs));
    let faster = gl_med <= qh_med;
    verdict(
        improved && faster && seeds.len() == 5,
        format!(
            "do-nothing CVaR95 {baseline:.3}; first epoch beating it per seed: {}; median epochs to reach {qh1} final CVaR95: {gl} {gl_med}, {qh1} {qh_med} (need {gl} <= {qh1})",
            parts.join(", ")
        ),
    )
}

fn criterion_9() -> Verdict {
    let plan = load("chain.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, workers) in dirs.iter().zip([Some(1), None]) {
        let out = run_plan(&plan, workers).unwrap();
        write_outputs(dir.path(), &plan, &out).unwrap();
    }
    let read = |i: usize, f: &str| std::fs::read(dirs[i].path().join(f)).unwrap();
    let identical = read(0, RECORDS_FILE) == read(1, RECORDS_FILE)
        && read(0, SUMMARY_FILE) == read(1, SUMMARY_FILE);

    let rows = read_records(&dirs[0].path().join(RECORDS_FILE)).unwrap();
    let summary = read_summary(&dirs[0].path().join(SUMMARY_FILE)).unwrap();
    let th = plan.threshold.as_ref().unwrap();
    let seeds = seeds(&plan);
    let mut mismatches = Vec::new();
    let mut w1_means = Vec::new();
    for (arm, s) in plan.arms.iter().zip(&summary) {
        let per_seed: Vec<Vec<&Row>> = seeds
            .iter()
            .map(|&sd| arm_rows(&rows, &arm.name, sd))
            .collect();
        let finals: Vec<&Row> = per_seed.iter().map(|rs| *rs.last().unwrap()).collect();
        for (m, got_mean, got_std) in [
            (Metric::Loss, s.final_loss_mean, s.final_loss_std),
            (
                Metric::W1Oracle,
                s.final_w1_oracle_mean,
                s.final_w1_oracle_std,
            ),
            (Metric::Risk, s.final_risk_mean, s.final_risk_std),
            (Metric::B, s.final_b_mean, s.final_b_std),
        ] {
            let xs: Vec<f64> = finals.iter().map(|r| r.get(m).unwrap()).collect();
            let mu = mean(&xs);
            let sd = (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64)
                .sqrt();
            if got_mean != Some(mu) || got_std != Some(sd) {
                mismatches.push(format!("{} {m}", arm.name));
            }
            if m == Metric::W1Oracle {
                w1_means.push(mu);
            }
        }
        let hits: Vec<f64> = per_seed
            .iter()
            .map(|rs| {
                rs.iter()
                    .find(|r| r.get(th.metric).is_some_and(|x| th.reached(x)))
                    .map_or(f64::INFINITY, |r| r.epoch as f64)
            })
            .collect();
        let reached = hits.iter().filter(|h| h.is_finite()).count();
        let med = median(hits);
        let expected_med = med.is_finite().then_some(med);
        if s.epochs_to_threshold_median != expected_med || s.threshold_reached != Some(reached) {
            mismatches.push(format!("{} threshold", arm.name));
        }
    }
    let mut order: Vec<usize> = (0..w1_means.len()).collect();
    order.sort_by(|&a, &b| w1_means[a].total_cmp(&w1_means[b]).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        if summary[i].rank != Some(rank + 1) {
            mismatches.push(format!("{} rank", summary[i].arm));
        }
    }
    verdict(
        identical && mismatches.is_empty() && rows.len() == plan.arms.len() * seeds.len() * plan.train.epochs,
        format!(
            "two runs of chain.json give byte-identical records.csv/summary.csv: {identical}; summary recomputed from {} records, mismatches: {}",
            rows.len(),
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Verdict); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (n, check) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let v = check();
        println!(
            "{} criterion {n}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
