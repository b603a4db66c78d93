//! Semi-analytic value of a reflection policy with an arbitrary grid boundary.
//!
//! Below the boundary the value is `A(y) x^a + H(x) y - kappa y - (lambda/rho) y ln y`
//! with `A'(y) = N(y) g^{-1}(y)^{-a}`, `N(y) = kappa + (lambda/rho)(1 + ln y) - H(g^{-1}(y))`
//! and `A(g(0)) = 0`. Above the boundary the value is flat in `y`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{fmt_f64, GridBoundary};
use crate::closed_form::gauss_legendre;
use crate::error::{Error, Result};
use crate::model::{xlogx, Model};
use crate::model_free::{ValueEstimator, ValueTable};

/// Value of the reflection policy at a fixed boundary.
#[derive(Clone, Debug)]
pub struct SemiAnalyticValue {
    boundary: GridBoundary,
    model: Model,
    levels: Vec<f64>,
    a_levels: Vec<f64>,
}

/// Builds the coefficient table `A` for the boundary `g`.
pub fn evaluate_policy(g: &GridBoundary, model: &Model) -> Result<SemiAnalyticValue> {
    if !(model.params.lambda > 0.0) {
        return Err(Error::Domain("policy evaluation needs lambda > 0".into()));
    }
    let mut levels: Vec<f64> = g.values().to_vec();
    levels.dedup();
    let mut v = SemiAnalyticValue {
        boundary: g.clone(),
        model: model.clone(),
        levels: Vec::new(),
        a_levels: Vec::new(),
    };
    let mut a = Vec::with_capacity(levels.len());
    let mut acc = 0.0;
    a.push(0.0);
    for w in levels.windows(2) {
        acc += v.panel(w[0], w[1]);
        a.push(acc);
    }
    if !acc.is_finite() {
        return Err(Error::Numerical(
            "coefficient integral is not finite".into(),
        ));
    }
    v.levels = levels;
    v.a_levels = a;
    Ok(v)
}

impl SemiAnalyticValue {
    pub fn boundary(&self) -> &GridBoundary {
        &self.boundary
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn numerator(&self, y: f64, z: f64) -> f64 {
        let m = &self.model;
        m.params.kappa + m.entropy_scale() * (1.0 + y.ln()) - m.h(z)
    }

    /// `A'(y)`; zero below `g(0)`.
    pub fn a_prime(&self, y: f64) -> f64 {
        if y <= self.boundary.floor() {
            return 0.0;
        }
        let z = self.boundary.inverse_unchecked(y);
        self.numerator(y, z) * z.powf(-self.model.alpha_minus())
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        gauss_legendre().integrate(a, b, |u| self.a_prime(u))
    }

    /// `A(y)`; zero below `g(0)` and clamped to the top of the boundary.
    pub fn a(&self, y: f64) -> f64 {
        if y <= self.levels[0] {
            return 0.0;
        }
        let y = y.min(*self.levels.last().unwrap());
        let k = self.levels.partition_point(|&u| u <= y) - 1;
        if y == self.levels[k] {
            return self.a_levels[k];
        }
        self.a_levels[k] + self.panel(self.levels[k], y)
    }

    fn branch(&self, x: f64, y: f64) -> f64 {
        let m = &self.model;
        let a = self.a(y);
        let homog = if a == 0.0 {
            0.0
        } else {
            a * x.powf(m.alpha_minus())
        };
        homog + m.h(x) * y - m.params.kappa * y - m.entropy_scale() * xlogx(y)
    }

    /// `u(x, min(y, g(x)))`.
    pub fn value_of(&self, x: f64, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.branch(x, y.min(self.boundary.eval(x)))
    }

    fn check_below(&self, x: f64, y: f64) -> Result<()> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("derivatives need x > 0, got {x}")));
        }
        let g = self.boundary.eval(x);
        if y > g + 1e-12 {
            return Err(Error::Domain(format!(
                "({x}, {y}) lies above the boundary g(x) = {g}"
            )));
        }
        Ok(())
    }

    /// `u_y(x, y)` on or below the boundary.
    pub fn dy(&self, x: f64, y: f64) -> Result<f64> {
        self.check_below(x, y)?;
        let m = &self.model;
        Ok(self.a_prime(y) * x.powf(m.alpha_minus()) + m.h(x)
            - m.params.kappa
            - m.entropy_scale() * (1.0 + y.ln()))
    }

    /// `u_xy(x, y) = a A'(y) x^(a-1) + H'(x)` on or below the boundary.
    pub fn dxy(&self, x: f64, y: f64) -> Result<f64> {
        self.check_below(x, y)?;
        Ok(self.dxy_unchecked(x, y))
    }

    pub(crate) fn dxy_unchecked(&self, x: f64, y: f64) -> f64 {
        let m = &self.model;
        let am = m.alpha_minus();
        if y <= self.boundary.floor() {
            return m.h_prime(x);
        }
        let z = self.boundary.inverse_unchecked(y);
        // a N (z/x)^(-a) / x, written to avoid overflow of x^a for small x
        am * self.numerator(y, z) * (z / x).powf(-am) / x + m.h_prime(x)
    }

    /// Finite-difference HJB residual on `xs x ys`.
    pub fn hjb_residual(&self, xs: &[f64], ys: &[f64], h: f64) -> Vec<HjbPoint> {
        hjb_residual_fd(
            &self.model,
            |x, y| self.value_of(x, y),
            |x| self.boundary.eval(x),
            xs,
            ys,
            h,
        )
    }

    /// Writes `x,y,u` rows in x-major order.
    pub fn write_surface<W: Write>(&self, w: W, xs: &[f64], ys: &[f64]) -> Result<()> {
        write_surface(w, "u", xs, ys, |x, y| self.value_of(x, y))
    }
}

pub(crate) fn write_surface<W: Write>(
    w: W,
    column: &str,
    xs: &[f64],
    ys: &[f64],
    f: impl Fn(f64, f64) -> f64,
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", column])?;
    for &x in xs {
        for &y in ys {
            wr.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(f(x, y))])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Continuation,
    Stopping,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HjbPoint {
    pub x: f64,
    pub y: f64,
    pub region: Region,
    /// `0.5 sigma^2 x^2 u_xx + mu x u_x - rho u + (pi(x) - rho kappa) y - lambda y ln y`.
    pub residual: f64,
}

/// Central-difference HJB residual of `value` with boundary `g`.
///
/// Points within `2h` of the boundary, or whose x-stencil straddles it, are skipped.
pub fn hjb_residual_fd(
    model: &Model,
    value: impl Fn(f64, f64) -> f64 + Sync,
    g: impl Fn(f64) -> f64 + Sync,
    xs: &[f64],
    ys: &[f64],
    h: f64,
) -> Vec<HjbPoint> {
    let p = &model.params;
    let region = |x: f64, y: f64| {
        if y <= g(x) {
            Region::Continuation
        } else {
            Region::Stopping
        }
    };
    xs.par_iter()
        .flat_map_iter(|&x| {
            let value = &value;
            let g = &g;
            ys.iter().filter_map(move |&y| {
                let r = region(x, y);
                if (y - g(x)).abs() <= 2.0 * h || region(x - h, y) != r || region(x + h, y) != r {
                    return None;
                }
                let (vm, v0, vp) = (value(x - h, y), value(x, y), value(x + h, y));
                let vx = (vp - vm) / (2.0 * h);
                let vxx = (vp - 2.0 * v0 + vm) / (h * h);
                let residual = 0.5 * p.sigma * p.sigma * x * x * vxx + p.mu * x * vx - p.rho * v0
                    + (model.profit_rate(x) - p.rho * p.kappa) * y
                    - p.lambda * xlogx(y);
                Some(HjbPoint {
                    x,
                    y,
                    region: r,
                    residual,
                })
            })
        })
        .collect()
}

/// Largest residual magnitude in the continuation region and largest residual in the stopping region.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct HjbSummary {
    pub continuation_max_abs: f64,
    pub stopping_max: f64,
    pub continuation_points: usize,
    pub stopping_points: usize,
}

pub fn summarize_hjb(points: &[HjbPoint]) -> HjbSummary {
    let mut s = HjbSummary {
        stopping_max: f64::NEG_INFINITY,
        ..Default::default()
    };
    for p in points {
        match p.region {
            Region::Continuation => {
                s.continuation_points += 1;
                s.continuation_max_abs = s.continuation_max_abs.max(p.residual.abs());
            }
            Region::Stopping => {
                s.stopping_points += 1;
                s.stopping_max = s.stopping_max.max(p.residual);
            }
        }
    }
    s
}

/// Noise-free value tables from the semi-analytic evaluation.
#[derive(Clone, Debug)]
pub struct AnalyticEstimator {
    pub model: Model,
}

impl ValueEstimator for AnalyticEstimator {
    fn estimate(
        &self,
        g: &GridBoundary,
        xs: &[f64],
        ys: &[f64],
        _iteration: usize,
    ) -> Result<ValueTable> {
        let v = evaluate_policy(g, &self.model)?;
        let mean: Vec<f64> = xs
            .par_iter()
            .flat_map_iter(|&x| {
                let v = &v;
                ys.iter().map(move |&y| v.value_of(x, y))
            })
            .collect();
        Ok(ValueTable::new(
            xs.to_vec(),
            ys.to_vec(),
            mean,
            vec![0.0; xs.len() * ys.len()],
        ))
    }
}
