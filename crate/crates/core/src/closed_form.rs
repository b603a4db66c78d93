//! Exact solution of the entropy-regularized problem: the optimal reflection
//! boundary `g_lambda`, its inverse `b_lambda`, the coefficient `A2` and the value.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::boundary::GridBoundary;
use crate::error::{Error, Result};
use crate::model::{xlogx, Model, ModelParams, ProfitModel};

const DEFAULT_TABLE_INTERVALS: usize = 2000;

pub(crate) fn gauss_legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16.try_into().unwrap()))
}

/// Cached closed-form objects for one model with `lambda > 0`.
#[derive(Clone, Debug)]
pub struct ClosedFormSolution {
    model: Model,
    y_floor: f64,
    x_hat: f64,
    b_star: f64,
    nodes: Vec<f64>,
    a2_nodes: Vec<f64>,
}

impl ClosedFormSolution {
    pub fn new(model: Model) -> Result<Self> {
        Self::with_resolution(model, DEFAULT_TABLE_INTERVALS)
    }

    /// Builds the `A2` table with `intervals` panels on `[y^lambda, 1]`.
    pub fn with_resolution(model: Model, intervals: usize) -> Result<Self> {
        if !(model.params.lambda > 0.0) {
            return Err(Error::Domain(
                "closed form needs lambda > 0; use the classical boundary for lambda = 0".into(),
            ));
        }
        if intervals == 0 {
            return Err(Error::Config("A2 table needs at least one interval".into()));
        }
        let y_floor = model.y_floor();
        let b_star = model.classical_boundary()?;
        let x_hat = model.solve_free_boundary(model.params.kappa + model.entropy_scale())?;
        let mut sol = ClosedFormSolution {
            model,
            y_floor,
            x_hat,
            b_star,
            nodes: Vec::new(),
            a2_nodes: Vec::new(),
        };
        // quadratic grading concentrates panels next to the floor
        let span = 1.0 - y_floor;
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|k| {
                let s = k as f64 / intervals as f64;
                y_floor + span * s * s
            })
            .collect();
        nodes[intervals] = 1.0;
        let mut a2 = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        a2.push(0.0);
        for w in nodes.windows(2) {
            acc += sol.a2_panel(w[0], w[1])?;
            a2.push(acc);
        }
        sol.nodes = nodes;
        sol.a2_nodes = a2;
        Ok(sol)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> &ModelParams {
        &self.model.params
    }

    pub fn alpha_minus(&self) -> f64 {
        self.model.roots.alpha_minus
    }

    pub fn alpha_plus(&self) -> f64 {
        self.model.roots.alpha_plus
    }

    /// `y^lambda`, the boundary value at `x = 0`.
    pub fn y_floor(&self) -> f64 {
        self.y_floor
    }

    /// Smallest `x` with `g_lambda(x) = 1`.
    pub fn x_hat(&self) -> f64 {
        self.x_hat
    }

    /// Classical threshold `b*`.
    pub fn b_star(&self) -> f64 {
        self.b_star
    }

    /// Optimal reflection boundary.
    pub fn g_lambda(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.y_floor;
        }
        let l = self.model.entropy_scale();
        let e = (self.model.free_boundary_lhs(x) - self.model.params.kappa - l) / l;
        e.exp().min(1.0)
    }

    /// `g_lambda` sampled at the given knots.
    pub fn boundary_on(&self, knots: &[f64]) -> Result<GridBoundary> {
        GridBoundary::from_fn(knots.to_vec(), |x| self.g_lambda(x))
    }

    /// Boundary level at which the weight `y` is reflected; 0 below the floor.
    pub fn b_lambda(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::Domain(format!("b_lambda needs y in (0,1], got {y}")));
        }
        if y < self.y_floor {
            return Ok(0.0);
        }
        self.model.solve_free_boundary(
            self.model.params.kappa + self.model.entropy_scale() * (1.0 + y.ln()),
        )
    }

    /// Numerator `kappa + (lambda/rho)(1 + ln u) - H(b)` of the `A2` integrand.
    fn a2_integrand(&self, u: f64) -> Result<f64> {
        if u <= self.y_floor {
            return Ok(0.0);
        }
        let b = self.b_lambda(u)?;
        let n =
            self.model.params.kappa + self.model.entropy_scale() * (1.0 + u.ln()) - self.model.h(b);
        Ok(n * b.powf(-self.alpha_minus()))
    }

    fn a2_panel(&self, a: f64, b: f64) -> Result<f64> {
        let mut err = None;
        let v = gauss_legendre().integrate(a, b, |u| match self.a2_integrand(u) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `A2(y)` for `y` in `[y^lambda, 1]`.
    pub fn a2(&self, y: f64) -> Result<f64> {
        if !(y >= self.y_floor && y <= 1.0) {
            return Err(Error::Domain(format!(
                "A2 needs y in [{}, 1], got {y}",
                self.y_floor
            )));
        }
        let k = self.nodes.partition_point(|&u| u <= y).saturating_sub(1);
        let base = self.a2_nodes[k];
        if y == self.nodes[k] {
            return Ok(base);
        }
        Ok(base + self.a2_panel(self.nodes[k], y)?)
    }

    /// `F(x, y) = A2(y) x^alpha_- + H(x) y - kappa y - (lambda/rho) y ln y`.
    fn f(&self, x: f64, y: f64) -> f64 {
        let m = &self.model;
        let a2 = self.a2(y).unwrap_or(0.0);
        let homog = if a2 == 0.0 {
            0.0
        } else {
            a2 * x.powf(self.alpha_minus())
        };
        homog + m.h(x) * y - m.params.kappa * y - m.entropy_scale() * xlogx(y)
    }

    /// `A2'(y)`; zero at and below the floor.
    pub fn a2_prime(&self, y: f64) -> Result<f64> {
        self.a2_integrand(y)
    }

    /// `V_y(x, y)`; zero above the boundary.
    pub fn dy(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Domain(format!(
                "V_y needs x > 0 and y > 0, got ({x}, {y})"
            )));
        }
        if y > self.g_lambda(x) {
            return Ok(0.0);
        }
        let m = &self.model;
        Ok(self.a2_prime(y)? * x.powf(self.alpha_minus()) + m.h(x)
            - m.params.kappa
            - m.entropy_scale() * (1.0 + y.ln()))
    }

    /// `V_xy(x, y)`; zero above the boundary.
    pub fn dxy(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Domain(format!(
                "V_xy needs x > 0 and y > 0, got ({x}, {y})"
            )));
        }
        if y > self.g_lambda(x) {
            return Ok(0.0);
        }
        let am = self.alpha_minus();
        Ok(am * self.a2_prime(y)? * x.powf(am - 1.0) + self.model.h_prime(x))
    }

    /// Value of the regularized problem at `(x, y)`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let m = &self.model;
        if y < self.y_floor {
            return m.h(x) * y - m.params.kappa * y - m.entropy_scale() * xlogx(y);
        }
        self.f(x, y.min(self.g_lambda(x)))
    }

    /// One-sided finite-difference estimates of `(V_y, V_xy)` at `(x, g_lambda(x))`.
    /// Both stencils are second order and point into the continuation region; the
    /// y-step is proportional to `g_lambda(x)`, which sets the curvature scale.
    pub fn smooth_fit_fd(&self, x: f64) -> (f64, f64) {
        let hx = 1e-5 * x.max(1e-3);
        let y0 = self.g_lambda(x);
        let hy = 1e-4 * y0;
        let back = |f: &dyn Fn(f64) -> f64| {
            (3.0 * f(y0) - 4.0 * f(y0 - hy) + f(y0 - 2.0 * hy)) / (2.0 * hy)
        };
        let vx = |y: f64| {
            (-3.0 * self.value(x, y) + 4.0 * self.value(x + hx, y) - self.value(x + 2.0 * hx, y))
                / (2.0 * hx)
        };
        let vy = back(&|y| self.value(x, y));
        let vxy = back(&vx);
        (vy, vxy)
    }
}

/// Monotonicity of a sequence read in the order of decreasing `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Constant,
    Increasing,
    Decreasing,
    Mixed,
}

fn trend(v: &[f64], tol: f64) -> Trend {
    let mut up = false;
    let mut down = false;
    for w in v.windows(2) {
        if w[1] > w[0] + tol {
            up = true;
        } else if w[1] < w[0] - tol {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub y: f64,
    pub b_lambda: f64,
    pub b_star: f64,
    /// Signed difference `b_lambda(y) - b*`.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub b_star: f64,
    pub rows: Vec<SweepRow>,
    /// For each `y`, how `b_lambda(y)` moves as `lambda` decreases.
    pub trends: Vec<(f64, Trend)>,
}

impl SweepTable {
    pub fn rows_at(&self, y: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.y == y)
    }
}

/// `b_lambda(y)` over a decreasing list of temperatures, next to `b*`.
pub fn vanishing_sweep(
    params: &ModelParams,
    profit: &ProfitModel,
    lambdas: &[f64],
    ys: &[f64],
) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda list is empty".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("lambdas must be strictly decreasing".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Config("lambdas must be positive".into()));
    }
    let base = Model::new(*params, profit.clone())?;
    let b_star = base.classical_boundary()?;
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    for &y in ys {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::Domain(format!(
                "sweep level y must be in (0,1], got {y}"
            )));
        }
        let mut seq = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let m = base.with_lambda(lambda)?;
            // b_lambda only needs the free-boundary solver, not the A2 table
            let b = if y < m.y_floor() {
                0.0
            } else {
                m.solve_free_boundary(m.params.kappa + m.entropy_scale() * (1.0 + y.ln()))?
            };
            seq.push(b);
            rows.push(SweepRow {
                lambda,
                y,
                b_lambda: b,
                b_star,
                gap: b - b_star,
            });
        }
        trends.push((y, trend(&seq, 1e-12 * b_star)));
    }
    Ok(SweepTable {
        b_star,
        rows,
        trends,
    })
}
