//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness. The process fails when a criterion's outcome
//! differs from `EXPECTED`; known failures are listed there with the reason.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exploratory_stopping::boundary::{
    init_exponential, init_linear, uniform_knots, validate_initial, GridBoundary,
};
use exploratory_stopping::cli::{hjb_check, HjbConfig};
use exploratory_stopping::closed_form::{vanishing_sweep, ClosedFormSolution, Trend};
use exploratory_stopping::model_free::{
    learn_y_floor, run_spi, NeverStopObjective, SpiConfig, ZeroOrderConfig,
};
use exploratory_stopping::policy_eval::{evaluate_policy, AnalyticEstimator};
use exploratory_stopping::policy_iter::{run_pi, IterationTrace, PiOptions};
use exploratory_stopping::simulator::{
    stream_seed, MonteCarloEstimator, PathConfig, SimulatedFloorObjective, Simulator, StreamId,
};
use exploratory_stopping::{Model, ModelParams, ProfitModel};

const MU: f64 = 0.2;
const SIGMA: f64 = 0.2;
const RHO: f64 = 0.5;
const KAPPA: f64 = 5.0;
const THETA: f64 = 0.5;

/// Known outcome of each criterion; `false` marks an honest failure.
const EXPECTED: [(usize, bool, &str); 8] = [
    (1, true, ""),
    (2, true, ""),
    (3, true, ""),
    (
        4,
        false,
        "the exponential start lies below g_lambda near x = 0, violating (c); iterates can only move down",
    ),
    (
        5,
        false,
        "the boundary-row mixed difference sits half a cell below g_lambda, where u_xy is strictly positive; \
         the simulated values match the exact stencil",
    ),
    (
        6,
        false,
        "at M = 20 noise in the one-sided update ratchets the boundary below g_lambda after it gets close, \
         so the smoothed L1 trace turns upward",
    ),
    (
        7,
        false,
        "the y-stencil sits half a cell below the boundary, so the update can stop up to 1.5 cells above the \
         model-based root; near x = 0 the linear start rises about 0.1 per x-cell and the x-stencil straddles it",
    ),
    (
        8,
        false,
        "noiseless error decays like i^-4 once the central-difference bias dominates, not geometrically",
    ),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn model(lambda: f64) -> Model {
    Model::new(
        ModelParams {
            mu: MU,
            sigma: SIGMA,
            rho: RHO,
            kappa: KAPPA,
            lambda,
        },
        ProfitModel::power(1.0, THETA),
    )
    .unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (f(lo) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_1() -> Outcome {
    let m = model(0.5);
    let s = ClosedFormSolution::new(m.clone()).unwrap();
    let am = (-9.0 - 181f64.sqrt()) / 2.0;
    let p = 1.0 / (RHO - THETA * MU - 0.5 * THETA * (THETA - 1.0) * SIGMA * SIGMA);
    let closed = (KAPPA * -am / (p * (THETA - am))).powf(1.0 / THETA);
    // the free-boundary equation at the entropy-neutral level y = 1/e
    let by_bisection = bisect(
        |b| p * b.powf(THETA) * (THETA - am) / -am - KAPPA,
        1e-6,
        100.0,
    );
    let e_alpha = (s.alpha_minus() - am).abs();
    let e_closed = (s.b_star() - closed).abs();
    let e_bisect = (s.b_star() - by_bisection).abs();
    let e_sol = (s.b_lambda((-1f64).exp()).unwrap() - closed).abs();
    Outcome {
        pass: e_alpha <= 1e-10 && e_closed <= 1e-8 && e_bisect <= 1e-8 && e_sol <= 1e-8,
        detail: format!(
            "alpha_minus err {e_alpha:.1e}, b* = {:.10} (closed form err {e_closed:.1e}, bisection err {e_bisect:.1e})",
            s.b_star()
        ),
    }
}

fn criterion_2() -> Outcome {
    let s = ClosedFormSolution::new(model(0.5)).unwrap();
    let (r, _) = hjb_check(&s, &HjbConfig::default(), 5.0).unwrap();
    Outcome {
        pass: r.pass,
        detail: format!(
            "continuation |r| <= {:.1e}, stopping r <= {:.1e}, min V_y {:.1e}, smooth fit {:.1e}/{:.1e}",
            r.continuation_max_abs, r.stopping_max, r.min_dy, r.smooth_fit_dy_max, r.smooth_fit_dxy_max
        ),
    }
}

fn criterion_3() -> Outcome {
    let lambdas = [2.5, 1.0, 0.5, 0.1, 0.01];
    let e1 = (-1f64).exp();
    let t = vanishing_sweep(
        &ModelParams::reference(),
        &ProfitModel::power(1.0, THETA),
        &lambdas,
        &[1.0, 0.1, e1],
    )
    .unwrap();
    let top: Vec<f64> = t.rows_at(1.0).map(|r| r.gap).collect();
    let low: Vec<f64> = t.rows_at(0.1).map(|r| r.gap).collect();
    let mid = t.rows_at(e1).map(|r| r.gap.abs()).fold(0.0, f64::max);
    let top_ok = top.iter().all(|&g| g >= 0.0) && top.windows(2).all(|w| w[1] < w[0]);
    let low_ok = low.iter().all(|&g| g <= 0.0) && low.windows(2).all(|w| w[1].abs() < w[0].abs());
    Outcome {
        pass: top_ok && low_ok && mid <= 1e-8 && t.trends[0].1 == Trend::Decreasing,
        detail: format!(
            "gap at y=1 {:.3e} -> {:.3e}, at y=0.1 {:.3e} -> {:.3e}, |gap| at 1/e <= {mid:.1e}",
            top[0], top[4], low[0], low[4]
        ),
    }
}

struct PiCheck {
    ok: bool,
    summary: String,
}

fn check_pi_run(name: &str, g0: &GridBoundary, m: &Model, truth: &GridBoundary) -> PiCheck {
    let init = validate_initial(g0, m);
    let opts = PiOptions {
        max_iter: 30,
        ground_truth: Some(truth.clone()),
        allow_invalid_init: true,
        ..Default::default()
    };
    let t = run_pi(g0, m, &opts).unwrap();
    let monotone = t.is_pointwise_nonincreasing();
    let conditions = t.conditions.iter().flatten().all(|c| c.all_hold());
    let improvement = t.improvement_ok.iter().all(|b| *b == Some(true));
    let l1 = t.final_boundary().l1_distance(truth).unwrap();
    let ok = init.is_ok() && monotone && conditions && improvement && l1 < 1e-3;
    let mut failed = init.failed();
    if !conditions {
        failed.push("(c)/(d) along the run");
    }
    PiCheck {
        ok,
        summary: format!(
            "{name}: {} iters, L1 {l1:.2e}, monotone {monotone}, improvement {improvement}, failed {failed:?}",
            t.rows()
        ),
    }
}

fn criterion_4() -> Outcome {
    let m = model(0.5);
    let knots = uniform_knots(0.02, 5.0).unwrap();
    let truth = ClosedFormSolution::new(m.clone())
        .unwrap()
        .boundary_on(&knots)
        .unwrap();
    let lin = check_pi_run("linear", &init_linear(&m, &knots).unwrap(), &m, &truth);
    let exp = check_pi_run(
        "exponential",
        &init_exponential(&m, 0.75, &knots).unwrap(),
        &m,
        &truth,
    );
    Outcome {
        pass: lin.ok && exp.ok,
        detail: format!("{}; {}", lin.summary, exp.summary),
    }
}

/// Random nondecreasing boundary `y_f + (1 - y_f)(x/a)^p` capped at 1.
fn random_boundary(rng: &mut ChaCha8Rng, floor: f64, knots: &[f64]) -> GridBoundary {
    let a = rng.random_range(2.0..8.0);
    let p = rng.random_range(0.5..2.0);
    GridBoundary::from_fn(knots.to_vec(), |x| {
        (floor + (1.0 - floor) * (x / a).powf(p)).min(1.0)
    })
    .unwrap()
}

fn criterion_5() -> Outcome {
    let m = model(0.5);
    let sim = Simulator::new(&m);
    let knots = uniform_knots(0.02, 5.0).unwrap();
    let cfg = PathConfig {
        seed: 20_240_501,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_z = 0.0f64;
    for c in 0..10 {
        let g = random_boundary(&mut rng, m.y_floor(), &knots);
        let x = rng.random_range(0.1..5.0);
        let y = rng.random_range(0.05..1.0);
        let exact = evaluate_policy(&g, &m).unwrap().value_of(x, y);
        let id = StreamId { k: 0, i: c, j: 0 };
        let mc = sim.mc_value_at(x, y, &g, 10_000, &cfg, id).unwrap();
        worst_z = worst_z.max((mc.mean - exact).abs() / mc.stderr);
    }

    // per-path mixed differences at the boundary row of g_lambda
    let g = ClosedFormSolution::new(m.clone())
        .unwrap()
        .boundary_on(&knots)
        .unwrap();
    let (dx, dy) = (0.02, 0.02);
    let weights = sim.quadrature_weights(&cfg);
    let exact = evaluate_policy(&g, &m).unwrap();
    let mut worst_t = 0.0f64;
    let mut worst_stencil_z = 0.0f64;
    let mut t_stats = Vec::new();
    for &i in &[50usize, 100, 150, 200] {
        let jb = (g.values()[i] / dy + 1e-12).floor() as usize;
        let ys = [(jb - 1) as f64 * dy, jb as f64 * dy];
        let id = StreamId { k: 1, i: 0, j: 0 };
        let d: Vec<f64> = (0..10_000)
            .map(|m| {
                let path = sim.unit_path(&cfg, stream_seed(cfg.seed, id, m));
                let hi = sim.reward_profile(knots[i + 1], &ys, &g, &weights, &path);
                let lo = sim.reward_profile(knots[i - 1], &ys, &g, &weights, &path);
                ((hi[1] - lo[1]) - (hi[0] - lo[0])) / (2.0 * dx * dy)
            })
            .collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        // the same stencil applied to the exact value of g
        let v = |x: f64, y: f64| exact.value_of(x, y);
        let (xp, xm) = (knots[i + 1], knots[i - 1]);
        let stencil =
            ((v(xp, ys[1]) - v(xm, ys[1])) - (v(xp, ys[0]) - v(xm, ys[0]))) / (2.0 * dx * dy);
        t_stats.push(format!("{:.1}", mean / se));
        worst_t = worst_t.max((mean / se).abs());
        worst_stencil_z = worst_stencil_z.max(((mean - stencil) / se).abs());
    }
    Outcome {
        pass: worst_z <= 3.0 && worst_t <= 3.0,
        detail: format!(
            "max |z| over 10 draws {worst_z:.2}; boundary-row t at x=1,2,3,4: [{}]; \
             max |z| against the exact-value stencil {worst_stencil_z:.2}",
            t_stats.join(", ")
        ),
    }
}

/// Frozen final L1-to-truth of the exponential-start run at seed 0, M = 20.
const SPI_REGRESSION: f64 = 2.906731214011453e-1;

fn smoothed_monotone(l1: &[f64]) -> bool {
    let s: Vec<f64> = l1.windows(3).map(|w| (w[0] + w[1] + w[2]) / 3.0).collect();
    s.windows(2).all(|w| w[1] <= w[0])
}

fn stabilized_at(t: &IterationTrace) -> Option<usize> {
    t.l1_step.iter().position(|&s| s < 0.01).map(|k| k + 1)
}

fn criterion_6() -> Outcome {
    let m = model(0.5);
    let cfg = SpiConfig::default();
    let knots = cfg.knots().unwrap();
    let truth = ClosedFormSolution::new(m.clone())
        .unwrap()
        .boundary_on(&knots)
        .unwrap();
    let est = MonteCarloEstimator {
        sim: Simulator::new(&m),
        cfg: PathConfig::default(),
        paths: 20,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let mut frozen = f64::NAN;
    for (name, g0, budget) in [
        (
            "exponential",
            init_exponential(&m, 0.75, &knots).unwrap(),
            12,
        ),
        ("linear", init_linear(&m, &knots).unwrap(), 30),
    ] {
        let run = run_spi(&g0, &cfg, &est, m.y_floor(), Some(&truth)).unwrap();
        let mut l1: Vec<f64> = run.trace.l1_to_truth.iter().map(|v| v.unwrap()).collect();
        let last = run.trace.final_boundary().l1_distance(&truth).unwrap();
        l1.push(last);
        if name == "exponential" {
            frozen = last;
        }
        let trend = smoothed_monotone(&l1);
        let stable = stabilized_at(&run.trace);
        ok &= trend && stable.is_some_and(|k| k <= budget);
        let min = l1.iter().cloned().fold(f64::INFINITY, f64::min);
        parts.push(format!(
            "{name}: smoothed monotone {trend}, step < 0.01 at {stable:?}, L1 {:.3} -> min {min:.3} -> {last:.3}",
            l1[0]
        ));
    }
    let regression = (frozen - SPI_REGRESSION).abs() <= 1e-12 * SPI_REGRESSION;
    parts.push(format!(
        "regression {frozen:.15e} matches frozen {regression}"
    ));
    Outcome {
        pass: ok && regression,
        detail: parts.join("; "),
    }
}

fn criterion_7() -> Outcome {
    let m = model(0.5);
    let cfg = SpiConfig {
        max_iter: 30,
        ..Default::default()
    };
    let knots = cfg.knots().unwrap();
    let oracle = AnalyticEstimator { model: m.clone() };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g0) in [
        ("exponential", init_exponential(&m, 0.75, &knots).unwrap()),
        ("linear", init_linear(&m, &knots).unwrap()),
    ] {
        let spi = run_spi(&g0, &cfg, &oracle, m.y_floor(), None)
            .unwrap()
            .trace;
        let pi = run_pi(
            &g0,
            &m,
            &PiOptions {
                max_iter: 30,
                tol: 0.0,
                allow_invalid_init: true,
                sample_points: Vec::new(),
                ..Default::default()
            },
        )
        .unwrap();
        let n = spi.iterates.len().min(pi.iterates.len());
        // one cell: delta_y, or the rise of the model-based iterate across one x-cell
        let mut worst = (0, 0.0f64, 0.0f64);
        for k in 0..n {
            let rise = pi.iterates[k]
                .values()
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max);
            let tol = rise.max(cfg.delta_y);
            let gap = spi.iterates[k].sup_distance(&pi.iterates[k]).unwrap();
            ok &= gap <= tol;
            if gap / tol > worst.1 / worst.2.max(f64::MIN_POSITIVE) {
                worst = (k, gap, tol);
            }
        }
        parts.push(format!(
            "{name}: worst sup gap {:.4} against cell {:.4} at k={} over {n} iterates",
            worst.1, worst.2, worst.0
        ));
    }
    Outcome {
        pass: ok,
        detail: parts.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let m = model(2.5);
    let target = (-2f64).exp();
    let simulated = SimulatedFloorObjective {
        sim: Simulator::new(&m),
        cfg: PathConfig::default(),
        paths: 256,
    };
    let cfg = ZeroOrderConfig::default();
    let learned = learn_y_floor(&cfg, &simulated).unwrap();
    let err = (learned.y - target).abs();

    let exact = NeverStopObjective {
        kappa: KAPPA,
        rho: RHO,
        lambda: 2.5,
    };
    let run = learn_y_floor(&cfg, &exact).unwrap();
    let sq: Vec<f64> = run.steps.iter().map(|s| (s.y - target).powi(2)).collect();
    // geometric decay: every window of 50 steps shrinks the squared error by at least half
    let window = 50;
    let ratios: Vec<f64> = (window..sq.len())
        .step_by(window)
        .map(|i| sq[i] / sq[i - window])
        .collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let geometric = worst <= 0.5;
    Outcome {
        pass: !learned.diverged && err <= 1e-3 && geometric,
        detail: format!(
            "learned {:.6} (err {err:.1e}); noiseless sq err {:.1e} -> {:.1e}, worst 50-step ratio {worst:.2}",
            learned.y,
            sq[0],
            sq[sq.len() - 1]
        ),
    }
}

fn main() {
    let criteria: [(fn() -> Outcome, Duration); 8] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(10)),
        (criterion_3, Duration::from_secs(5)),
        (criterion_4, Duration::from_secs(120)),
        (criterion_5, Duration::from_secs(300)),
        (criterion_6, Duration::from_secs(900)),
        (criterion_7, Duration::from_secs(120)),
        (criterion_8, Duration::from_secs(60)),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut unexpected = Vec::new();
    for (n, (run, budget)) in criteria.iter().enumerate() {
        let n = n + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        println!(
            "criterion {n}: {} ({:.1}s of {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
        let (_, expected, reason) = EXPECTED[n - 1];
        if !pass && !expected {
            println!("  known failure: {reason}");
        }
        if pass != expected {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
