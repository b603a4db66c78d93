//! Piecewise-linear reflection boundaries on a knot grid.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Model, ProfitModel};

/// Uniform knots `0, x_bar/N, ..., x_bar` with `N = round(x_bar / delta_x)`.
pub fn uniform_knots(delta_x: f64, x_bar: f64) -> Result<Vec<f64>> {
    if !(delta_x > 0.0 && x_bar > 0.0) {
        return Err(Error::Config(format!(
            "grid needs positive delta_x and x_bar, got {delta_x}, {x_bar}"
        )));
    }
    let n = (x_bar / delta_x).round();
    if n < 1.0 || ((n * delta_x - x_bar) / x_bar).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "x_bar = {x_bar} is not a whole multiple of delta_x = {delta_x}"
        )));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| x_bar * i as f64 / n as f64).collect())
}

/// Nondecreasing map `g: [0, x_bar] -> (0, 1]`, linear between knots.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBoundary {
    knots: Vec<f64>,
    values: Vec<f64>,
    x_hat: f64,
}

impl GridBoundary {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Domain(format!(
                "boundary needs at least two knots and one value per knot ({} knots, {} values)",
                knots.len(),
                values.len()
            )));
        }
        if knots[0] != 0.0 {
            return Err(Error::Domain(format!(
                "first knot must be 0, got {}",
                knots[0]
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("knots must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::Domain(format!("boundary value {v} outside (0,1]")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Domain(format!(
                "boundary decreases between knots {} and {} ({} > {})",
                i,
                i + 1,
                values[i],
                values[i + 1]
            )));
        }
        let x_hat = values
            .iter()
            .position(|&v| v == 1.0)
            .map_or(f64::INFINITY, |i| knots[i]);
        Ok(GridBoundary {
            knots,
            values,
            x_hat,
        })
    }

    /// Samples `f` at the knots.
    pub fn from_fn(knots: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = knots.iter().map(|&x| f(x)).collect();
        GridBoundary::new(knots, values)
    }

    pub fn constant(knots: Vec<f64>, level: f64) -> Result<Self> {
        let values = vec![level; knots.len()];
        GridBoundary::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn x_bar(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Smallest knot with value 1, or `+inf`.
    pub fn x_hat(&self) -> f64 {
        self.x_hat
    }

    /// `g(0)`.
    pub fn floor(&self) -> f64 {
        self.values[0]
    }

    /// Index of the last knot inside `[0, x_hat]`.
    pub fn last_active_index(&self) -> usize {
        self.knots
            .iter()
            .rposition(|&x| x <= self.x_hat)
            .unwrap_or(self.knots.len() - 1)
    }

    /// Linear interpolation, clamped to `g(0)` and `g(x_bar)` outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        let (g0, g1) = (self.values[i - 1], self.values[i]);
        if x == x0 {
            return g0;
        }
        g0 + (g1 - g0) * (x - x0) / (x1 - x0)
    }

    /// Smallest `x` with `g(x) >= y`, for `y` in `[g(0), g(x_bar)]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let n = self.values.len();
        if y < self.values[0] {
            return Err(Error::BelowFloor {
                y,
                floor: self.values[0],
            });
        }
        if y > self.values[n - 1] {
            return Err(Error::Domain(format!(
                "y = {y} is above the boundary's maximum {} on the grid",
                self.values[n - 1]
            )));
        }
        Ok(self.inverse_unchecked(y))
    }

    /// [`GridBoundary::inverse`] without range checks; clamps to the grid.
    pub(crate) fn inverse_unchecked(&self, y: f64) -> f64 {
        let i = self.values.partition_point(|&v| v < y);
        if i == 0 {
            return 0.0;
        }
        if i >= self.values.len() {
            return self.x_bar();
        }
        let (g0, g1) = (self.values[i - 1], self.values[i]);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        x0 + (y - g0) / (g1 - g0) * (x1 - x0)
    }

    fn check_same_grid(&self, other: &GridBoundary) -> Result<()> {
        if self.knots != other.knots {
            return Err(Error::GridMismatch(format!(
                "boundaries have different knot sets ({} vs {} knots)",
                self.knots.len(),
                other.knots.len()
            )));
        }
        Ok(())
    }

    /// Trapezoid-weighted L1 distance on a shared grid.
    pub fn l1_distance(&self, other: &GridBoundary) -> Result<f64> {
        self.check_same_grid(other)?;
        let d: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self
            .knots
            .windows(2)
            .zip(d.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum())
    }

    /// Largest knotwise difference on a shared grid.
    pub fn sup_distance(&self, other: &GridBoundary) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Writes `x,g` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "g"])?;
        for (x, g) in self.knots.iter().zip(&self.values) {
            wr.write_record([fmt_f64(*x), fmt_f64(*g)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "g" {
            return Err(Error::Config(format!(
                "boundary CSV header must be `x,g`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number `{s}` in boundary CSV: {e}")))
            };
            knots.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        GridBoundary::new(knots, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Decimal with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Exponential start: `min(exp(rho P c (zeta - a) x^zeta / (-a lambda) - (rho/lambda)(kappa + lambda/rho)), 1)`.
pub fn init_exponential(model: &Model, zeta: f64, knots: &[f64]) -> Result<GridBoundary> {
    let (c, theta) = power_profit(model, "exponential")?;
    if !(zeta > theta && zeta < 1.0) {
        return Err(Error::Config(format!(
            "zeta must lie in (theta, 1) = ({theta}, 1), got {zeta}"
        )));
    }
    let p = model.power_constant().unwrap();
    let a = model.alpha_minus();
    let (rho, lambda, kappa) = (model.params.rho, model.params.lambda, model.params.kappa);
    check_positive_lambda(lambda)?;
    let scale = rho * p * c * (zeta - a) / (-a * lambda);
    let shift = (rho / lambda) * (kappa + lambda / rho);
    GridBoundary::from_fn(knots.to_vec(), |x| {
        (scale * x.powf(zeta) - shift).exp().min(1.0)
    })
}

/// Linear start from `(0, y^lambda)` to `(x1, 1)`, capped at 1.
pub fn init_linear(model: &Model, knots: &[f64]) -> Result<GridBoundary> {
    let (_, theta) = power_profit(model, "linear")?;
    check_positive_lambda(model.params.lambda)?;
    let a = model.alpha_minus();
    let l = model.entropy_scale();
    let x1 = linear_init_endpoint(model.params.kappa, l, theta, a);
    let y0 = model.y_floor();
    GridBoundary::from_fn(knots.to_vec(), |x| (y0 + (1.0 - y0) * x / x1).min(1.0))
}

/// `x1 = 0.5 (-a (kappa + lambda/rho) / (theta - a))^(-theta)`.
pub fn linear_init_endpoint(kappa: f64, entropy_scale: f64, theta: f64, alpha_minus: f64) -> f64 {
    0.5 * (-alpha_minus * (kappa + entropy_scale) / (theta - alpha_minus)).powf(-theta)
}

fn power_profit(model: &Model, which: &str) -> Result<(f64, f64)> {
    match model.profit {
        ProfitModel::Power { c, theta } => Ok((c, theta)),
        ProfitModel::Custom(_) => Err(Error::Config(format!(
            "the {which} initialization is defined for power profits only"
        ))),
    }
}

fn check_positive_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain("initializations need lambda > 0".into()))
    }
}

/// Result of checking a starting boundary.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct InitialReport {
    /// Strictly increasing on `[0, x_hat]`.
    pub a: bool,
    /// `g(0) = y^lambda`.
    pub b: bool,
    /// `g >= g_lambda` on the knots in `[0, x_hat]`.
    pub c: bool,
    /// Knots where the inequality in `c` fails.
    pub c_violations: Vec<usize>,
}

impl InitialReport {
    pub fn is_ok(&self) -> bool {
        self.a && self.b && self.c
    }

    pub fn failed(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.a {
            v.push("(a) strictly increasing");
        }
        if !self.b {
            v.push("(b) g(0) = y-floor");
        }
        if !self.c {
            v.push("(c) above the optimal boundary");
        }
        v
    }
}

/// `-a (kappa + (lambda/rho) ln g + lambda/rho) + a H(x) - x H'(x)` at one knot.
pub fn dominance_margin(model: &Model, x: f64, g: f64) -> f64 {
    let a = model.alpha_minus();
    let l = model.entropy_scale();
    let xhp = if x == 0.0 { 0.0 } else { x * model.h_prime(x) };
    -a * (model.params.kappa + l * g.ln() + l) + a * model.h(x) - xhp
}

/// Checks the three admissibility conditions on a starting boundary.
pub fn validate_initial(g: &GridBoundary, model: &Model) -> InitialReport {
    let last = g.last_active_index();
    let vals = g.values();
    let a = vals[..=last].windows(2).all(|w| w[1] > w[0]);
    let b = (g.floor() - model.y_floor()).abs() <= 1e-10;
    let scale = -model.alpha_minus() * (model.params.kappa + model.entropy_scale());
    let c_violations: Vec<usize> = (0..=last)
        .filter(|&i| dominance_margin(model, g.knots()[i], vals[i]) < -1e-10 * scale)
        .collect();
    InitialReport {
        a,
        b,
        c: c_violations.is_empty(),
        c_violations,
    }
}

/// L2 projection onto nondecreasing sequences (pool adjacent violators).
pub fn isotonic_project(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, n) in blocks {
        out.extend(std::iter::repeat_n(s / n as f64, n));
    }
    out
}
