//! JSON run configuration and the experiment commands of `exstop`.
//!
//! Every command is a pure function of the configuration and seed; output files are
//! byte-identical across reruns unless `run.record_timing` is set.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::boundary::{
    fmt_f64, init_exponential, init_linear, uniform_knots, validate_initial, GridBoundary,
};
use crate::closed_form::{vanishing_sweep, ClosedFormSolution};
use crate::error::{Error, Result};
use crate::model::{Model, ModelParams, ProfitModel};
use crate::model_free::{
    learn_y_floor, run_spi, FloorObjective, NeverStopObjective, SpiConfig, ZeroOrderConfig,
};
use crate::policy_eval::{hjb_residual_fd, summarize_hjb, write_surface, Region};
use crate::policy_iter::{final_conditions, run_pi, sample_grid, IterationTrace, PiOptions};
use crate::simulator::{
    MonteCarloEstimator, PathConfig, SimMode, SimulatedFloorObjective, Simulator,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfitConfig {
    pub power_c: f64,
    pub power_theta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub profit: ProfitConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub delta_x: f64,
    pub delta_y: f64,
    pub x_bar: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            delta_x: 0.02,
            delta_y: 0.02,
            x_bar: 5.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    #[serde(rename = "M")]
    pub paths: usize,
    pub seed: u64,
    pub mode: SimMode,
    /// Sample the path minimum inside each time step.
    pub bridge: bool,
    /// Largest admissible discount factor at the horizon.
    pub tail: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            horizon: 30.0,
            paths: 20,
            seed: 0,
            mode: SimMode::CommonRandomNumbers,
            bridge: true,
            tail: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    Exponential { zeta: f64 },
    Linear,
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorSource {
    /// `exp(-1 - kappa rho / lambda)` from the model.
    Analytic,
    /// Learned by the zeroth-order scheme on the simulator.
    Learned,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloorConfig {
    pub y0: f64,
    pub c0: f64,
    pub eta: f64,
    pub max_iters: usize,
    #[serde(rename = "M_inner")]
    pub paths: usize,
    /// Use the exact objective instead of the simulator.
    pub noiseless: bool,
}

impl Default for FloorConfig {
    fn default() -> Self {
        FloorConfig {
            y0: 0.5,
            c0: 0.1,
            eta: 0.05,
            max_iters: 500,
            paths: 256,
            noiseless: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HjbConfig {
    pub x_min: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub tol: f64,
}

impl Default for HjbConfig {
    fn default() -> Self {
        HjbConfig {
            x_min: 0.05,
            nx: 200,
            ny: 100,
            h: 1e-3,
            tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub command: Option<String>,
    #[serde(rename = "K")]
    pub max_iter: usize,
    pub tol: f64,
    pub init: InitConfig,
    pub output: Option<PathBuf>,
    pub threads: usize,
    pub allow_invalid_init: bool,
    pub record_timing: bool,
    pub lambdas: Vec<f64>,
    pub sweep_y: Vec<f64>,
    pub spi_floor: FloorSource,
    pub write_surfaces: bool,
    pub floor: FloorConfig,
    pub hjb: HjbConfig,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            command: None,
            max_iter: 30,
            tol: 1e-6,
            init: InitConfig::Exponential { zeta: 0.75 },
            output: None,
            threads: 0,
            allow_invalid_init: false,
            record_timing: false,
            lambdas: vec![2.5, 1.0, 0.5, 0.1, 0.01],
            sweep_y: vec![1.0, (-1f64).exp(), 0.1],
            spi_floor: FloorSource::Analytic,
            write_surfaces: false,
            floor: FloorConfig::default(),
            hjb: HjbConfig::default(),
        }
    }
}

/// Full run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub run: RunBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::reference();
        RunConfig {
            model: ModelConfig {
                mu: p.mu,
                sigma: p.sigma,
                rho: p.rho,
                kappa: p.kappa,
                lambda: p.lambda,
                profit: ProfitConfig {
                    power_c: 1.0,
                    power_theta: 0.5,
                },
            },
            grid: GridConfig::default(),
            sim: SimConfig::default(),
            run: RunBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn model(&self) -> Result<Model> {
        let m = &self.model;
        Model::new(
            ModelParams {
                mu: m.mu,
                sigma: m.sigma,
                rho: m.rho,
                kappa: m.kappa,
                lambda: m.lambda,
            },
            ProfitModel::power(m.profit.power_c, m.profit.power_theta),
        )
    }

    pub fn knots(&self) -> Result<Vec<f64>> {
        uniform_knots(self.grid.delta_x, self.grid.x_bar)
    }

    pub fn spi_config(&self) -> SpiConfig {
        SpiConfig {
            delta_x: self.grid.delta_x,
            delta_y: self.grid.delta_y,
            x_bar: self.grid.x_bar,
            max_iter: self.run.max_iter,
            tol: self.run.tol,
            keep_tables: self.run.write_surfaces,
            record_timing: self.run.record_timing,
        }
    }

    pub fn path_config(&self) -> PathConfig {
        PathConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            seed: self.sim.seed,
            mode: self.sim.mode,
            bridge: self.sim.bridge,
        }
    }

    pub fn initial_boundary(&self, model: &Model, knots: &[f64]) -> Result<GridBoundary> {
        match &self.run.init {
            InitConfig::Exponential { zeta } => init_exponential(model, *zeta, knots),
            InitConfig::Linear => init_linear(model, knots),
            InitConfig::File(p) => {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "initial boundary file {} does not exist",
                        p.display()
                    )));
                }
                let g = GridBoundary::load(p)?;
                if g.knots() != knots {
                    return Err(Error::Config(format!(
                        "initial boundary file {} is not on the configured grid",
                        p.display()
                    )));
                }
                Ok(g)
            }
        }
    }

    fn y_levels(&self) -> Result<Vec<f64>> {
        self.spi_config().y_levels()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact boundary, value surface and constants.
    ClosedForm,
    /// Model-based policy iteration.
    Pi,
    /// Sample-based policy iteration on the simulator.
    Spi,
    /// Reflection level across a decreasing list of temperatures.
    Sweep,
    /// Zeroth-order learning of the boundary floor.
    LearnFloor,
    /// Finite-difference HJB verification of the exact value.
    HjbCheck,
}

impl Command {
    fn parse_name(s: &str) -> Result<Command> {
        Ok(match s {
            "closed-form" => Command::ClosedForm,
            "pi" => Command::Pi,
            "spi" => Command::Spi,
            "sweep" => Command::Sweep,
            "learn-floor" => Command::LearnFloor,
            "hjb-check" => Command::HjbCheck,
            other => return Err(Error::Config(format!("unknown command `{other}`"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Command::ClosedForm => "closed-form",
            Command::Pi => "pi",
            Command::Spi => "spi",
            Command::Sweep => "sweep",
            Command::LearnFloor => "learn-floor",
            Command::HjbCheck => "hjb-check",
        }
    }
}

/// Solver and learner for the entropy-regularized real option problem.
#[derive(Debug, Parser)]
#[command(name = "exstop", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// JSON configuration file; built-in reference settings when absent.
    #[arg(long, global = true, env = "EXSTOP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "EXSTOP_OUT")]
    pub out: Option<PathBuf>,
    /// Master seed for the simulator.
    #[arg(long, global = true, env = "EXSTOP_SEED")]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "EXSTOP_THREADS")]
    pub threads: Option<usize>,
}

/// Loads the configuration and applies flag overrides.
pub fn resolve(cli: &Cli) -> Result<(Command, RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.sim.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    let command = match (cli.command, &cfg.run.command) {
        (Some(c), _) => c,
        (None, Some(name)) => Command::parse_name(name)?,
        (None, None) => {
            return Err(Error::Config(
                "no command given on the command line or in run.command".into(),
            ))
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((command, cfg, out))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = resolve(&cli).and_then(|(command, cfg, out)| {
        if cfg.run.threads > 0 {
            // a global pool can only be installed once per process
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.run.threads)
                .build_global();
        }
        execute(command, &cfg, &out)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("exstop: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and writes its artifacts under `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    match command {
        Command::ClosedForm => cmd_closed_form(cfg, out),
        Command::Pi => cmd_pi(cfg, out),
        Command::Spi => cmd_spi(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
        Command::LearnFloor => cmd_learn_floor(cfg, out),
        Command::HjbCheck => cmd_hjb_check(cfg, out),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json(out: &Path, name: &str, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(out.join(name), s)?;
    Ok(())
}

pub fn cmd_closed_form(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sol = ClosedFormSolution::new(cfg.model()?)?;
    let knots = cfg.knots()?;
    sol.boundary_on(&knots)?
        .write_csv(create(out, "g_lambda.csv")?)?;
    let ys = cfg.y_levels()?;
    write_surface(
        create(out, "value_surface.csv")?,
        "v",
        &knots,
        &ys,
        |x, y| sol.value(x, y),
    )?;
    write_json(
        out,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "closed-form",
            "lambda": sol.params().lambda,
            "alpha_minus": sol.alpha_minus(),
            "alpha_plus": sol.alpha_plus(),
            "y_floor": sol.y_floor(),
            "b_star": sol.b_star(),
            "x_hat": sol.x_hat(),
        }),
    )
}

fn write_iterates(trace: &IterationTrace, out: &Path) -> Result<()> {
    for (k, g) in trace.iterates.iter().enumerate() {
        g.write_csv(create(out, &format!("boundary_{k}.csv"))?)?;
    }
    trace.write_csv(create(out, "trace.csv")?)
}

fn check_init(cfg: &RunConfig, g0: &GridBoundary, model: &Model) -> Result<serde_json::Value> {
    let report = validate_initial(g0, model);
    if !report.is_ok() && !cfg.run.allow_invalid_init {
        return Err(Error::Assumption(format!(
            "initial boundary fails {} ({} knots violate (c)); set run.allow_invalid_init to run anyway",
            report.failed().join(", "),
            report.c_violations.len()
        )));
    }
    Ok(serde_json::to_value(&report)?)
}

pub fn cmd_pi(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = cfg.model()?;
    let knots = cfg.knots()?;
    let truth = ClosedFormSolution::new(model.clone())?.boundary_on(&knots)?;
    let g0 = cfg.initial_boundary(&model, &knots)?;
    let init_report = check_init(cfg, &g0, &model)?;
    let opts = PiOptions {
        max_iter: cfg.run.max_iter,
        tol: cfg.run.tol,
        ground_truth: Some(truth.clone()),
        sample_points: sample_grid(cfg.grid.x_bar, 20, 10),
        improvement_tol: 1e-8,
        allow_invalid_init: true,
        record_timing: cfg.run.record_timing,
    };
    let trace = run_pi(&g0, &model, &opts)?;
    write_iterates(&trace, out)?;
    let last = final_conditions(&trace, &model)?;
    let final_g = trace.final_boundary();
    write_json(
        out,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "pi",
            "iterations": trace.rows(),
            "converged": trace.converged,
            "final_l1_to_truth": final_g.l1_distance(&truth)?,
            "final_sup_to_truth": final_g.sup_distance(&truth)?,
            "final_l1_step": trace.l1_step.last().copied(),
            "pointwise_nonincreasing": trace.is_pointwise_nonincreasing(),
            "improvement_all_ok": trace.improvement_ok.iter().all(|b| *b == Some(true)),
            "conditions_all_hold": trace.conditions.iter().flatten().all(|c| c.all_hold()) && last.all_hold(),
            "final_conditions": last,
            "flagged_knots": trace.flagged.iter().map(Vec::len).sum::<usize>(),
            "initial_conditions": init_report,
        }),
    )
}

fn learn_floor(cfg: &RunConfig, model: &Model) -> Result<crate::model_free::FloorRun> {
    let f = &cfg.run.floor;
    let zcfg = ZeroOrderConfig {
        y0: f.y0,
        c0: f.c0,
        eta: f.eta,
        max_iters: f.max_iters,
        ..Default::default()
    };
    let objective: Box<dyn FloorObjective> = if f.noiseless {
        Box::new(NeverStopObjective {
            kappa: model.params.kappa,
            rho: model.params.rho,
            lambda: model.params.lambda,
        })
    } else {
        Box::new(SimulatedFloorObjective {
            sim: Simulator::new(model),
            cfg: cfg.path_config(),
            paths: f.paths,
        })
    };
    learn_y_floor(&zcfg, objective.as_ref())
}

pub fn cmd_spi(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = cfg.model()?;
    let path_cfg = cfg.path_config();
    path_cfg.validate(model.params.rho, cfg.sim.tail)?;
    let spi = cfg.spi_config();
    let knots = spi.knots()?;
    let truth = ClosedFormSolution::new(model.clone())?.boundary_on(&knots)?;
    let g0 = cfg.initial_boundary(&model, &knots)?;
    let init_report = check_init(cfg, &g0, &model)?;
    let floor = match cfg.run.spi_floor {
        FloorSource::Analytic => model.y_floor(),
        FloorSource::Learned => {
            let run = learn_floor(cfg, &model)?;
            if run.diverged {
                return Err(Error::Numerical(
                    "floor learning hit the clamp guard".into(),
                ));
            }
            run.y
        }
    };
    let est = MonteCarloEstimator {
        sim: Simulator::new(&model),
        cfg: path_cfg,
        paths: cfg.sim.paths,
    };
    let run = run_spi(&g0, &spi, &est, floor, Some(&truth))?;
    write_iterates(&run.trace, out)?;
    for (k, t) in run.tables.iter().enumerate() {
        t.write_csv(create(out, &format!("u_bar_{k}.csv"))?)?;
    }
    let final_g = run.trace.final_boundary();
    write_json(
        out,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "spi",
            "seed": cfg.sim.seed,
            "paths": cfg.sim.paths,
            "mode": cfg.sim.mode,
            "floor": floor,
            "iterations": run.trace.rows(),
            "converged": run.trace.converged,
            "final_l1_to_truth": final_g.l1_distance(&truth)?,
            "final_sup_to_truth": final_g.sup_distance(&truth)?,
            "final_l1_step": run.trace.l1_step.last().copied(),
            "pointwise_nonincreasing": run.trace.is_pointwise_nonincreasing(),
            "initial_conditions": init_report,
        }),
    )
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = cfg.model()?;
    let table = vanishing_sweep(
        &model.params,
        &model.profit,
        &cfg.run.lambdas,
        &cfg.run.sweep_y,
    )?;
    let mut wr = csv::Writer::from_writer(create(out, "sweep.csv")?);
    wr.write_record(["lambda", "y", "b_lambda", "b_star", "gap"])?;
    for r in &table.rows {
        wr.write_record([
            fmt_f64(r.lambda),
            fmt_f64(r.y),
            fmt_f64(r.b_lambda),
            fmt_f64(r.b_star),
            fmt_f64(r.gap),
        ])?;
    }
    wr.flush()?;
    write_json(
        out,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "b_star": table.b_star,
            "trends_as_lambda_decreases": table.trends.iter().map(|(y, t)| json!({"y": y, "trend": t})).collect::<Vec<_>>(),
        }),
    )
}

pub fn cmd_learn_floor(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = cfg.model()?;
    cfg.path_config().validate(model.params.rho, cfg.sim.tail)?;
    let run = learn_floor(cfg, &model)?;
    run.write_csv(create(out, "floor_trace.csv")?)?;
    let target = model.y_floor();
    write_json(
        out,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "learn-floor",
            "learned": run.y,
            "target": target,
            "abs_error": (run.y - target).abs(),
            "iterations": run.steps.len(),
            "diverged": run.diverged,
            "noiseless": cfg.run.floor.noiseless,
        }),
    )?;
    if run.diverged {
        return Err(Error::Numerical(
            "floor iterate stayed on the clamp for 10 consecutive steps".into(),
        ));
    }
    Ok(())
}

/// Outcome of the HJB verification of the exact value.
#[derive(Clone, Debug, Serialize)]
pub struct HjbReport {
    pub continuation_max_abs: f64,
    pub stopping_max: f64,
    pub continuation_points: usize,
    pub stopping_points: usize,
    pub min_dy: f64,
    pub smooth_fit_dy_max: f64,
    pub smooth_fit_dxy_max: f64,
    pub pass: bool,
}

/// Residual, gradient-constraint and smooth-fit checks on the configured grid.
pub fn hjb_check(
    sol: &ClosedFormSolution,
    hc: &HjbConfig,
    x_bar: f64,
) -> Result<(HjbReport, Vec<crate::policy_eval::HjbPoint>)> {
    let xs: Vec<f64> = (1..=hc.nx)
        .map(|i| hc.x_min + (x_bar - hc.x_min) * i as f64 / hc.nx as f64)
        .collect();
    let ys: Vec<f64> = (0..hc.ny).map(|j| j as f64 / (hc.ny - 1) as f64).collect();
    let pts = hjb_residual_fd(
        sol.model(),
        |x, y| sol.value(x, y),
        |x| sol.g_lambda(x),
        &xs,
        &ys,
        hc.h,
    );
    let s = summarize_hjb(&pts);
    let mut min_dy = f64::INFINITY;
    for &x in &xs {
        for &y in ys.iter().filter(|&&y| y > 0.0) {
            min_dy = min_dy.min(sol.dy(x, y)?);
        }
    }
    let (mut fit_dy, mut fit_dxy) = (0.0f64, 0.0f64);
    for &x in xs.iter().filter(|&&x| sol.g_lambda(x) < 1.0) {
        let (vy, vxy) = sol.smooth_fit_fd(x);
        fit_dy = fit_dy.max(vy.abs());
        fit_dxy = fit_dxy.max(vxy.abs());
    }
    let pass = s.continuation_max_abs <= hc.tol
        && s.stopping_max <= hc.tol
        && min_dy >= -1e-8
        && fit_dy <= 1e-4
        && fit_dxy <= 1e-4;
    Ok((
        HjbReport {
            continuation_max_abs: s.continuation_max_abs,
            stopping_max: s.stopping_max,
            continuation_points: s.continuation_points,
            stopping_points: s.stopping_points,
            min_dy,
            smooth_fit_dy_max: fit_dy,
            smooth_fit_dxy_max: fit_dxy,
            pass,
        },
        pts,
    ))
}

pub fn cmd_hjb_check(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sol = ClosedFormSolution::new(cfg.model()?)?;
    let (report, pts) = hjb_check(&sol, &cfg.run.hjb, cfg.grid.x_bar)?;
    let mut wr = csv::Writer::from_writer(create(out, "hjb_residual.csv")?);
    wr.write_record(["x", "y", "region", "residual"])?;
    for p in &pts {
        let region = match p.region {
            Region::Continuation => "continuation",
            Region::Stopping => "stopping",
        };
        wr.write_record([
            fmt_f64(p.x),
            fmt_f64(p.y),
            region.to_string(),
            fmt_f64(p.residual),
        ])?;
    }
    wr.flush()?;
    let mut summary = serde_json::to_value(&report)?;
    summary["schema_version"] = json!(SCHEMA_VERSION);
    summary["command"] = json!(Command::HjbCheck.name());
    write_json(out, "hjb_check.json", &summary)?;
    if !report.pass {
        return Err(Error::Numerical(format!(
            "HJB verification failed: {report:?}"
        )));
    }
    Ok(())
}
