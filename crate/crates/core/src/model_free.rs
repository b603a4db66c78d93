//! Sample-based policy iteration and the zeroth-order learner for the y-floor.
//!
//! Nothing here reads the market parameters: value information arrives through
//! [`ValueEstimator`] and [`FloorObjective`] implementations.

use std::io::Write;
use std::time::Instant;

use crate::boundary::{fmt_f64, isotonic_project, GridBoundary};
use crate::error::{Error, Result};
use crate::policy_iter::IterationTrace;

/// Estimated values on an `(x, y)` grid, stored x-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl ValueTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, mean: Vec<f64>, stderr: Vec<f64>) -> Self {
        assert_eq!(mean.len(), xs.len() * ys.len());
        assert_eq!(stderr.len(), mean.len());
        ValueTable {
            xs,
            ys,
            mean,
            stderr,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mean[i * self.ys.len() + j]
    }

    pub fn stderr_at(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.ys.len() + j]
    }

    /// Writes `x,y,u_bar,stderr`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "u_bar", "stderr"])?;
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &y) in self.ys.iter().enumerate() {
                wr.write_record([
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64(self.get(i, j)),
                    fmt_f64(self.stderr_at(i, j)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Source of value tables for a given boundary.
pub trait ValueEstimator: Sync {
    /// Values of the reflection policy `g` at every `(x, y)` node; `iteration` selects fresh randomness.
    fn estimate(
        &self,
        g: &GridBoundary,
        xs: &[f64],
        ys: &[f64],
        iteration: usize,
    ) -> Result<ValueTable>;
}

/// Grid and iteration budget for sample-based policy iteration.
#[derive(Clone, Debug)]
pub struct SpiConfig {
    pub delta_x: f64,
    pub delta_y: f64,
    pub x_bar: f64,
    pub max_iter: usize,
    /// Stop once `l1(g_k, g_{k+1}) < tol`; zero runs all iterations.
    pub tol: f64,
    /// Keep every value table in the result.
    pub keep_tables: bool,
    pub record_timing: bool,
}

impl Default for SpiConfig {
    fn default() -> Self {
        SpiConfig {
            delta_x: 0.02,
            delta_y: 0.02,
            x_bar: 5.0,
            max_iter: 25,
            tol: 0.0,
            keep_tables: false,
            record_timing: false,
        }
    }
}

impl SpiConfig {
    pub fn knots(&self) -> Result<Vec<f64>> {
        crate::boundary::uniform_knots(self.delta_x, self.x_bar)
    }

    /// Rows `0, delta_y, ..., 1`.
    pub fn y_levels(&self) -> Result<Vec<f64>> {
        let n = (1.0 / self.delta_y).round();
        if !(self.delta_y > 0.0) || n < 2.0 || (n * self.delta_y - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "1/delta_y must be an integer >= 2, got delta_y = {}",
                self.delta_y
            )));
        }
        let n = n as usize;
        Ok((0..=n).map(|j| j as f64 / n as f64).collect())
    }
}

/// Value table for `g` on the configured grid.
pub fn estimate_value_grid(
    g: &GridBoundary,
    cfg: &SpiConfig,
    estimator: &dyn ValueEstimator,
    iteration: usize,
) -> Result<ValueTable> {
    let ys = cfg.y_levels()?;
    estimator.estimate(g, g.knots(), &ys, iteration)
}

/// Mixed difference `(D_x u(i, j) - D_x u(i, j-1)) / delta_y`.
///
/// `D_x` is central for interior columns and backward in the last column.
pub fn mixed_difference(t: &ValueTable, i: usize, j: usize) -> Result<f64> {
    let (nx, ny) = (t.xs.len(), t.ys.len());
    if i == 0 || i >= nx || j == 0 || j >= ny {
        return Err(Error::Domain(format!(
            "mixed difference needs 0 < i < {nx} and 0 < j < {ny}, got ({i}, {j})"
        )));
    }
    let (ip, im) = if i + 1 < nx {
        (i + 1, i - 1)
    } else {
        (i, i - 1)
    };
    let dx = t.xs[ip] - t.xs[im];
    let dy = t.ys[j] - t.ys[j - 1];
    let dxu = |j: usize| t.get(ip, j) - t.get(im, j);
    Ok((dxu(j) - dxu(j - 1)) / (dx * dy))
}

/// One sample-based update of the boundary from a value table on its knots.
pub fn spi_update(g: &GridBoundary, table: &ValueTable, floor: f64) -> Result<GridBoundary> {
    if table.xs.as_slice() != g.knots() {
        return Err(Error::GridMismatch(
            "value table columns differ from the boundary knots".into(),
        ));
    }
    let ny = table.ys.len();
    let dy = table.ys[1] - table.ys[0];
    let mut raw = g.values().to_vec();
    #[allow(clippy::needless_range_loop)]
    for i in 1..g.len() {
        let gi = g.values()[i];
        let jb = ((gi / dy + 1e-12).floor() as usize).min(ny - 1);
        if jb < 1 {
            continue;
        }
        let d = |j: usize| mixed_difference(table, i, j);
        if d(jb)? >= 0.0 {
            continue;
        }
        raw[i] = floor;
        for j in (1..jb).rev() {
            let lo = d(j)?;
            if lo >= 0.0 {
                // D(j) sits at the midpoint of rows j-1 and j
                let hi = d(j + 1)?;
                let y0 = table.ys[j] - 0.5 * dy;
                raw[i] = (y0 + dy * lo / (lo - hi)).min(gi);
                break;
            }
        }
    }
    raw[0] = floor;
    let projected = isotonic_project(&raw);
    let values: Vec<f64> = projected
        .iter()
        .zip(g.values())
        .map(|(&p, &old)| p.min(old).max(floor))
        .collect();
    GridBoundary::new(g.knots().to_vec(), values)
}

/// Trace of a sample-based run plus the value tables when requested.
#[derive(Clone, Debug)]
pub struct SpiRun {
    pub trace: IterationTrace,
    pub tables: Vec<ValueTable>,
}

/// Alternates value estimation and [`spi_update`], pinning `g(0)` to `floor`.
pub fn run_spi(
    g0: &GridBoundary,
    cfg: &SpiConfig,
    estimator: &dyn ValueEstimator,
    floor: f64,
    ground_truth: Option<&GridBoundary>,
) -> Result<SpiRun> {
    let knots = cfg.knots()?;
    if g0.knots() != knots.as_slice() {
        return Err(Error::GridMismatch(
            "initial boundary is not on the configured grid".into(),
        ));
    }
    let mut trace = IterationTrace {
        iterates: vec![g0.clone()],
        ..Default::default()
    };
    let mut tables = Vec::new();
    let mut g = g0.clone();
    for k in 0..cfg.max_iter {
        let start = Instant::now();
        let table = estimate_value_grid(&g, cfg, estimator, k).map_err(|e| e.at_iteration(k))?;
        let next = spi_update(&g, &table, floor).map_err(|e| e.at_iteration(k))?;
        let l1 = g.l1_distance(&next)?;
        trace.l1_to_truth.push(match ground_truth {
            Some(t) => Some(g.l1_distance(t)?),
            None => None,
        });
        trace.l1_step.push(l1);
        trace.sup_step.push(g.sup_distance(&next)?);
        trace.improvement_ok.push(None);
        trace.conditions.push(None);
        trace.flagged.push(Vec::new());
        trace.seconds.push(if cfg.record_timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        });
        if cfg.keep_tables {
            tables.push(table);
        }
        trace.iterates.push(next.clone());
        g = next;
        if l1 < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(SpiRun { trace, tables })
}

/// Objective `J(0, y)` of the never-stop policy started at `x = 0`.
pub trait FloorObjective: Sync {
    /// `query` numbers the evaluations so that noisy objectives can draw fresh randomness.
    fn evaluate(&self, y: f64, query: usize) -> Result<f64>;
}

/// Exact `J(0, y) = -kappa y - (lambda/rho) y ln y`, for noise-free runs.
#[derive(Clone, Copy, Debug)]
pub struct NeverStopObjective {
    pub kappa: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl FloorObjective for NeverStopObjective {
    fn evaluate(&self, y: f64, _query: usize) -> Result<f64> {
        let ylny = if y > 0.0 { y * y.ln() } else { 0.0 };
        Ok(-self.kappa * y - self.lambda / self.rho * ylny)
    }
}

/// Settings of the two-point zeroth-order learner.
#[derive(Clone, Debug)]
pub struct ZeroOrderConfig {
    pub y0: f64,
    pub c0: f64,
    /// Base step; iteration `i` uses `eta / sqrt(i)`.
    pub eta: f64,
    pub max_iters: usize,
    /// Iterates are kept in `[margin, 1 - margin]`.
    pub margin: f64,
}

impl Default for ZeroOrderConfig {
    fn default() -> Self {
        ZeroOrderConfig {
            y0: 0.5,
            c0: 0.1,
            eta: 0.05,
            max_iters: 500,
            margin: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FloorStep {
    pub i: usize,
    pub y: f64,
    /// Two-point slope estimate `(u+ - u-) / (2 eps)`.
    pub estimate: f64,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct FloorRun {
    pub y: f64,
    pub steps: Vec<FloorStep>,
    /// Set when the iterate sat on the clamp for 10 consecutive steps.
    pub diverged: bool,
}

impl FloorRun {
    /// Writes `i,y_i,estimate,eps_i`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "y_i", "estimate", "eps_i"])?;
        for s in &self.steps {
            wr.write_record([
                s.i.to_string(),
                fmt_f64(s.y),
                fmt_f64(s.estimate),
                fmt_f64(s.eps),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

const CLAMP_LIMIT: usize = 10;

/// Two-point ascent on `y -> J(0, y)` towards its stationary point.
pub fn learn_y_floor(cfg: &ZeroOrderConfig, objective: &dyn FloorObjective) -> Result<FloorRun> {
    if !(cfg.y0 > 0.0 && cfg.y0 < 1.0) {
        return Err(Error::Config(format!(
            "y0 must lie in (0,1), got {}",
            cfg.y0
        )));
    }
    if !(cfg.c0 > 0.0 && cfg.eta > 0.0 && cfg.margin > 0.0 && cfg.margin < 0.5) {
        return Err(Error::Config(
            "c0, eta and margin must be positive (margin < 0.5)".into(),
        ));
    }
    let mut y = cfg.y0;
    let mut steps = Vec::with_capacity(cfg.max_iters);
    let mut clamped = 0;
    let mut diverged = false;
    for i in 1..=cfg.max_iters {
        let eps = y.min(1.0 - y).min(cfg.c0 / i as f64);
        let up = objective.evaluate(y + eps, 2 * i)?;
        let down = objective.evaluate(y - eps, 2 * i + 1)?;
        let estimate = (up - down) / (2.0 * eps);
        steps.push(FloorStep {
            i,
            y,
            estimate,
            eps,
        });
        let next = y + cfg.eta / (i as f64).sqrt() * estimate;
        let bounded = next.clamp(cfg.margin, 1.0 - cfg.margin);
        if !bounded.is_finite() {
            return Err(Error::Numerical(format!(
                "floor iterate became {next} at step {i}"
            )));
        }
        clamped = if bounded != next { clamped + 1 } else { 0 };
        y = bounded;
        if clamped >= CLAMP_LIMIT {
            diverged = true;
            break;
        }
    }
    Ok(FloorRun { y, steps, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_from(xs: Vec<f64>, ys: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> ValueTable {
        let mean: Vec<f64> = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        let n = mean.len();
        ValueTable::new(xs, ys, mean, vec![0.0; n])
    }

    #[test]
    fn mixed_difference_of_bilinear_is_exact() {
        let xs: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = (0..=10).map(|j| 0.1 * j as f64).collect();
        let t = table_from(xs, ys, |x, y| 3.0 * x * y + x * x - y);
        for i in 1..=10 {
            for j in 1..10 {
                assert!((mixed_difference(&t, i, j).unwrap() - 3.0).abs() < 1e-9);
            }
        }
        assert!(mixed_difference(&t, 0, 3).is_err());
        assert!(mixed_difference(&t, 3, 0).is_err());
    }

    #[test]
    fn mixed_difference_order_independent() {
        let xs: Vec<f64> = (0..=6).map(|i| 0.5 * i as f64).collect();
        let ys: Vec<f64> = (0..=6).map(|j| j as f64 / 6.0).collect();
        let t = table_from(xs, ys, |x, y| (x * y).sin() + x.exp() * y * y);
        let (i, j) = (3, 4);
        let dy = |i: usize| t.get(i, j) - t.get(i, j - 1);
        let swapped =
            (dy(i + 1) - dy(i - 1)) / ((t.xs[i + 1] - t.xs[i - 1]) * (t.ys[j] - t.ys[j - 1]));
        assert!((mixed_difference(&t, i, j).unwrap() - swapped).abs() < 1e-12);
    }

    #[test]
    fn spi_update_outputs_monotone_below_previous() {
        let knots: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
        let g = GridBoundary::from_fn(knots.clone(), |x| (0.2 + 0.2 * x).min(1.0)).unwrap();
        let ys: Vec<f64> = (0..=50).map(|j| j as f64 / 50.0).collect();
        // u_xy = 0.1 + 0.1 x - y vanishes along y = 0.1 + 0.1 x
        let t = table_from(knots, ys, |x, y| {
            0.1 * x * y + 0.05 * x * x * y - 0.5 * x * y * y
        });
        let up = spi_update(&g, &t, 0.1).unwrap();
        assert!(up.values().windows(2).all(|w| w[0] <= w[1]));
        for (a, b) in up.values().iter().zip(g.values()) {
            assert!(a <= b && *a >= 0.1);
        }
        assert_eq!(up.floor(), 0.1);
        for i in 1..9 {
            let target = 0.1 + 0.1 * up.knots()[i];
            assert!((up.values()[i] - target).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn floor_learner_noise_free() {
        let obj = NeverStopObjective {
            kappa: 5.0,
            rho: 0.5,
            lambda: 2.5,
        };
        let run = learn_y_floor(&ZeroOrderConfig::default(), &obj).unwrap();
        assert!(!run.diverged);
        assert!((run.y - (-2f64).exp()).abs() < 1e-6);
        let start = ZeroOrderConfig {
            y0: 0.99,
            ..Default::default()
        };
        let run = learn_y_floor(&start, &obj).unwrap();
        assert!((run.y - (-2f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn two_point_estimate_vanishes_at_stationary_point() {
        let obj = NeverStopObjective {
            kappa: 5.0,
            rho: 0.5,
            lambda: 2.5,
        };
        let ys = (-2f64).exp();
        for &eps in &[1e-2, 5e-3] {
            let est = (obj.evaluate(ys + eps, 0).unwrap() - obj.evaluate(ys - eps, 0).unwrap())
                / (2.0 * eps);
            // third derivative of J is lambda/(rho y^2)
            assert!(est.abs() < 5.0 / ys.powi(2) * eps * eps);
        }
    }

    struct Runaway;
    impl FloorObjective for Runaway {
        fn evaluate(&self, y: f64, _q: usize) -> Result<f64> {
            Ok(100.0 * y)
        }
    }

    #[test]
    fn clamp_guard_stops_runaway() {
        let run = learn_y_floor(&ZeroOrderConfig::default(), &Runaway).unwrap();
        assert!(run.diverged);
        assert!(run.steps.len() < 50);
    }
}
