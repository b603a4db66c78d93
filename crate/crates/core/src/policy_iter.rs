//! Model-based policy iteration on the reflection boundary.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{dominance_margin, fmt_f64, GridBoundary};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::policy_eval::{evaluate_policy, SemiAnalyticValue};

/// Step of the downward scan for a sign change of `u_xy`.
pub const SCAN_STEP: f64 = 0.002;
/// Relative width at which the root bisection stops.
const ROOT_RTOL: f64 = 1e-15;
const MONOTONE_REPAIR_TOL: f64 = 1e-9;

/// New boundary and the knots where no root was found above the floor.
#[derive(Clone, Debug)]
pub struct UpdateOutcome {
    pub boundary: GridBoundary,
    pub flagged: Vec<usize>,
}

fn update_knot(v: &SemiAnalyticValue, x: f64, gx: f64, floor: f64) -> (f64, bool) {
    let d = |y: f64| v.dxy_unchecked(x, y);
    if d(gx) >= 0.0 {
        return (gx, false);
    }
    let mut hi = gx;
    while hi - SCAN_STEP > floor {
        let lo = hi - SCAN_STEP;
        if d(lo) >= 0.0 {
            return (root(&d, lo, hi), false);
        }
        hi = lo;
    }
    let lo = floor * (1.0 + 1e-12);
    if lo < hi && d(lo) >= 0.0 {
        return (root(&d, lo, hi), false);
    }
    (floor, true)
}

/// Bisection for a function that is nonnegative at `lo` and negative at `hi`.
fn root(d: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > ROOT_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Moves each knot down to the largest zero of `u_xy` below it when `u_xy < 0` there.
pub fn update_boundary(v: &SemiAnalyticValue, g: &GridBoundary) -> Result<UpdateOutcome> {
    let floor = v.model().y_floor();
    let knots = g.knots();
    let results: Vec<(f64, bool)> = (1..g.len())
        .into_par_iter()
        .map(|i| update_knot(v, knots[i], g.values()[i], floor))
        .collect();
    let mut values = Vec::with_capacity(g.len());
    values.push(floor);
    let mut flagged = Vec::new();
    for (i, (y, flag)) in results.into_iter().enumerate() {
        if flag {
            flagged.push(i + 1);
        }
        values.push(y);
    }
    // root tolerance can leave sub-tolerance inversions between neighbours
    for i in 1..values.len() {
        if values[i] < values[i - 1] {
            if values[i - 1] - values[i] > MONOTONE_REPAIR_TOL {
                return Err(Error::Numerical(format!(
                    "updated boundary decreases at knot {i} by {}",
                    values[i - 1] - values[i]
                )));
            }
            values[i] = values[i - 1];
        }
    }
    Ok(UpdateOutcome {
        boundary: GridBoundary::new(knots.to_vec(), values)?,
        flagged,
    })
}

/// Induction conditions checked at one iterate.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConditionRecord {
    /// Strictly increasing on `[0, x_hat]`.
    pub a: bool,
    /// `g(0) = y^lambda`.
    pub b: bool,
    /// `g >= g_lambda` on the knots in `[0, x_hat]`.
    pub c: bool,
    /// `u_xy(x, g(x)) <= 0` on the knots in `(0, x_hat]`.
    pub d: bool,
    /// Largest change of the finite-difference slope between neighbouring panels.
    pub slope_variation: f64,
    pub c_violations: usize,
    pub d_violations: usize,
}

impl ConditionRecord {
    pub fn all_hold(&self) -> bool {
        self.a && self.b && self.c && self.d
    }
}

pub fn check_iteration_conditions(
    g: &GridBoundary,
    v: &SemiAnalyticValue,
    model: &Model,
) -> ConditionRecord {
    let knots = g.knots();
    let vals = g.values();
    let last = g.last_active_index();
    let a = vals[..=last].windows(2).all(|w| w[1] > w[0]);
    let b = (g.floor() - model.y_floor()).abs() <= 1e-10;
    let scale = -model.alpha_minus() * (model.params.kappa + model.entropy_scale());
    let c_violations = (0..=last)
        .filter(|&i| dominance_margin(model, knots[i], vals[i]) < -1e-10 * scale)
        .count();
    let d_violations = (1..=last)
        .filter(|&i| {
            let tol = 1e-9 * model.h_prime(knots[i]).max(1.0);
            v.dxy_unchecked(knots[i], vals[i]) > tol
        })
        .count();
    let slopes: Vec<f64> = knots
        .windows(2)
        .zip(vals.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let slope_variation = slopes
        .windows(2)
        .map(|s| (s[1] - s[0]).abs())
        .fold(0.0, f64::max);
    ConditionRecord {
        a,
        b,
        c: c_violations == 0,
        d: d_violations == 0,
        slope_variation,
        c_violations,
        d_violations,
    }
}

/// Per-iteration record shared by the model-based and sample-based drivers.
///
/// Row `k` describes the step from `iterates[k]` to `iterates[k + 1]`.
#[derive(Clone, Debug, Default)]
pub struct IterationTrace {
    pub iterates: Vec<GridBoundary>,
    pub l1_to_truth: Vec<Option<f64>>,
    pub l1_step: Vec<f64>,
    pub sup_step: Vec<f64>,
    pub improvement_ok: Vec<Option<bool>>,
    pub conditions: Vec<Option<ConditionRecord>>,
    pub flagged: Vec<Vec<usize>>,
    pub seconds: Vec<f64>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn rows(&self) -> usize {
        self.l1_step.len()
    }

    pub fn final_boundary(&self) -> &GridBoundary {
        self.iterates.last().unwrap()
    }

    /// Every consecutive pair satisfies `g_{k+1} <= g_k` at every knot.
    pub fn is_pointwise_nonincreasing(&self) -> bool {
        self.iterates.windows(2).all(|w| {
            w[1].values()
                .iter()
                .zip(w[0].values())
                .all(|(new, old)| new <= old)
        })
    }

    /// Writes `iter,l1_to_truth,l1_step,sup_step,improvement_ok,seconds`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "iter",
            "l1_to_truth",
            "l1_step",
            "sup_step",
            "improvement_ok",
            "seconds",
        ])?;
        for k in 0..self.rows() {
            wr.write_record([
                k.to_string(),
                self.l1_to_truth[k].map(fmt_f64).unwrap_or_default(),
                fmt_f64(self.l1_step[k]),
                fmt_f64(self.sup_step[k]),
                self.improvement_ok[k]
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                fmt_f64(self.seconds[k]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Options for [`run_pi`].
#[derive(Clone, Debug)]
pub struct PiOptions {
    pub max_iter: usize,
    /// Stop once `l1(g_k, g_{k+1}) < tol`.
    pub tol: f64,
    pub ground_truth: Option<GridBoundary>,
    /// Points `(x, y)` on which value improvement is checked.
    pub sample_points: Vec<(f64, f64)>,
    pub improvement_tol: f64,
    /// Run even when the start fails the admissibility check.
    pub allow_invalid_init: bool,
    /// Record wall-clock seconds per iteration (otherwise zeros, for reproducible output).
    pub record_timing: bool,
}

impl Default for PiOptions {
    fn default() -> Self {
        PiOptions {
            max_iter: 30,
            tol: 1e-6,
            ground_truth: None,
            sample_points: sample_grid(5.0, 20, 10),
            improvement_tol: 1e-8,
            allow_invalid_init: false,
            record_timing: false,
        }
    }
}

/// `nx x ny` points on `(0, x_bar] x (0, 1]`.
pub fn sample_grid(x_bar: f64, nx: usize, ny: usize) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(nx * ny);
    for i in 1..=nx {
        for j in 1..=ny {
            v.push((x_bar * i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    v
}

/// Alternates policy evaluation and boundary update.
pub fn run_pi(g0: &GridBoundary, model: &Model, opts: &PiOptions) -> Result<IterationTrace> {
    if !opts.allow_invalid_init {
        let r = crate::boundary::validate_initial(g0, model);
        if !r.is_ok() {
            return Err(Error::Assumption(format!(
                "initial boundary fails {}",
                r.failed().join(", ")
            )));
        }
    }
    let mut trace = IterationTrace {
        iterates: vec![g0.clone()],
        ..Default::default()
    };
    let mut g = g0.clone();
    let mut v = evaluate_policy(&g, model).map_err(|e| e.at_iteration(0))?;
    for k in 0..opts.max_iter {
        let start = Instant::now();
        let cond = check_iteration_conditions(&g, &v, model);
        let up = update_boundary(&v, &g).map_err(|e| e.at_iteration(k))?;
        let g_next = up.boundary;
        let v_next = evaluate_policy(&g_next, model).map_err(|e| e.at_iteration(k + 1))?;
        let improved = opts
            .sample_points
            .iter()
            .all(|&(x, y)| v_next.value_of(x, y) >= v.value_of(x, y) - opts.improvement_tol);
        let l1 = g.l1_distance(&g_next)?;
        trace.l1_to_truth.push(match &opts.ground_truth {
            Some(t) => Some(g.l1_distance(t)?),
            None => None,
        });
        trace.l1_step.push(l1);
        trace.sup_step.push(g.sup_distance(&g_next)?);
        trace.improvement_ok.push(Some(improved));
        trace.conditions.push(Some(cond));
        trace.flagged.push(up.flagged);
        trace.seconds.push(if opts.record_timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        });
        trace.iterates.push(g_next.clone());
        g = g_next;
        v = v_next;
        if l1 < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Conditions at the final iterate, which has no row of its own in the trace.
pub fn final_conditions(trace: &IterationTrace, model: &Model) -> Result<ConditionRecord> {
    let g = trace.final_boundary();
    let v = evaluate_policy(g, model)?;
    Ok(check_iteration_conditions(g, &v, model))
}
