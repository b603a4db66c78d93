//! Market parameters, profit specifications, the characteristic roots of the
//! GBM generator, the resolvent `H` and the classical free boundary `b*`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift, volatility, discount rate, exit payoff and entropy temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl ModelParams {
    /// Parameters used throughout the numerical study, with `lambda = 0.5`.
    pub fn reference() -> Self {
        ModelParams {
            mu: 0.2,
            sigma: 0.2,
            rho: 0.5,
            kappa: 5.0,
            lambda: 0.5,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        ModelParams { lambda, ..self }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied profit rate together with its resolvent and the resolvent's derivative.
#[derive(Clone)]
pub struct CustomProfit {
    pub profit: RealFn,
    pub resolvent: RealFn,
    pub resolvent_derivative: RealFn,
}

impl CustomProfit {
    pub fn new(
        profit: impl Fn(f64) -> f64 + Send + Sync + 'static,
        resolvent: impl Fn(f64) -> f64 + Send + Sync + 'static,
        resolvent_derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomProfit {
            profit: Arc::new(profit),
            resolvent: Arc::new(resolvent),
            resolvent_derivative: Arc::new(resolvent_derivative),
        }
    }
}

impl fmt::Debug for CustomProfit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomProfit(..)")
    }
}

/// Profit rate `pi(x)`.
#[derive(Clone, Debug)]
pub enum ProfitModel {
    /// `pi(x) = c * x^theta`.
    Power {
        c: f64,
        theta: f64,
    },
    Custom(CustomProfit),
}

impl ProfitModel {
    pub fn power(c: f64, theta: f64) -> Self {
        ProfitModel::Power { c, theta }
    }

    /// Profit rate at `x`.
    pub fn rate(&self, x: f64) -> f64 {
        match self {
            ProfitModel::Power { c, theta } => c * x.powf(*theta),
            ProfitModel::Custom(p) => (p.profit)(x),
        }
    }
}

/// Roots of `0.5 sigma^2 a (a - 1) + mu a - rho = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
}

/// Outcome of [`validate`]; empty `violations` means the inputs are admissible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Points at which the Custom resolvent is probed.
fn probe_points() -> impl Iterator<Item = f64> {
    (0..=120).map(|k| 1e-3 * 10f64.powf(k as f64 / 20.0))
}

/// Checks the standing assumptions on parameters and profit.
pub fn validate(params: &ModelParams, profit: &ProfitModel) -> ValidationReport {
    let mut v = Vec::new();
    let finite = [
        params.mu,
        params.sigma,
        params.rho,
        params.kappa,
        params.lambda,
    ];
    if finite.iter().any(|p| !p.is_finite()) {
        v.push("parameters must be finite".to_string());
    }
    if params.rho <= params.mu {
        v.push(format!("rho <= mu ({} <= {})", params.rho, params.mu));
    }
    if params.sigma <= 0.0 {
        v.push(format!("sigma <= 0 ({})", params.sigma));
    }
    if params.kappa <= 0.0 {
        v.push(format!("kappa <= 0 ({})", params.kappa));
    }
    if params.lambda < 0.0 {
        v.push(format!("lambda < 0 ({})", params.lambda));
    }
    match profit {
        ProfitModel::Power { c, theta } => {
            if *c <= 0.0 {
                v.push(format!("power coefficient c <= 0 ({c})"));
            }
            if !(*theta > 0.0 && *theta < 1.0) {
                v.push(format!("theta not in (0,1) ({theta})"));
            }
            if power_denominator(params, *theta) <= 0.0 {
                v.push("rho + sigma^2 theta (1 - theta)/2 - theta mu <= 0".to_string());
            }
        }
        ProfitModel::Custom(p) => {
            let h0 = (p.resolvent)(0.0);
            if h0.abs() > 1e-12 {
                v.push(format!("custom resolvent H(0) = {h0} != 0"));
            }
            let mut prev = f64::NEG_INFINITY;
            for x in probe_points() {
                let d = (p.resolvent_derivative)(x);
                if !(d >= 0.0) {
                    v.push(format!("custom resolvent derivative negative at x = {x}"));
                    break;
                }
                if !(x * d > prev) {
                    v.push(format!("x H'(x) not strictly increasing at x = {x}"));
                    break;
                }
                prev = x * d;
            }
        }
    }
    ValidationReport { violations: v }
}

fn power_denominator(params: &ModelParams, theta: f64) -> f64 {
    params.rho + 0.5 * params.sigma * params.sigma * theta * (1.0 - theta) - theta * params.mu
}

/// Characteristic roots by the cancellation-free quadratic formula.
pub fn characteristic_roots(params: &ModelParams) -> Result<CharacteristicRoots> {
    if !(params.sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {}",
            params.sigma
        )));
    }
    let a = 0.5 * params.sigma * params.sigma;
    let b = params.mu - a;
    let c = -params.rho;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Domain(
            "characteristic equation has complex roots".into(),
        ));
    }
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc.sqrt());
    let r1 = q / a;
    let r2 = c / q;
    Ok(CharacteristicRoots {
        alpha_minus: r1.min(r2),
        alpha_plus: r1.max(r2),
    })
}

/// Resolvent constant `P` of the power profit.
pub fn power_resolvent_constant(params: &ModelParams, theta: f64) -> Result<f64> {
    let d = power_denominator(params, theta);
    if d <= 0.0 {
        return Err(Error::Assumption(format!(
            "resolvent denominator {d} is not positive"
        )));
    }
    Ok(1.0 / d)
}

/// `H(x)`, the expected discounted profit from `x`.
pub fn resolvent(profit: &ProfitModel, params: &ModelParams, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("resolvent needs x >= 0, got {x}")));
    }
    match profit {
        ProfitModel::Power { c, theta } => {
            Ok(power_resolvent_constant(params, *theta)? * c * x.powf(*theta))
        }
        ProfitModel::Custom(p) => Ok((p.resolvent)(x)),
    }
}

/// `H'(x)` for `x > 0`.
pub fn resolvent_derivative(profit: &ProfitModel, params: &ModelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "resolvent derivative needs x > 0, got {x}"
        )));
    }
    match profit {
        ProfitModel::Power { c, theta } => {
            Ok(theta * power_resolvent_constant(params, *theta)? * c * x.powf(theta - 1.0))
        }
        ProfitModel::Custom(p) => Ok((p.resolvent_derivative)(x)),
    }
}

/// Classical stopping threshold `b*`.
pub fn classical_boundary(params: &ModelParams, profit: &ProfitModel) -> Result<f64> {
    Model::new(*params, profit.clone())?.classical_boundary()
}

/// Bisection for an increasing function with `f(lo) <= 0 <= f(hi)`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const BRACKET_LIMIT: f64 = 1e12;

/// Validated parameters, profit and the cached characteristic roots.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: ModelParams,
    pub profit: ProfitModel,
    pub roots: CharacteristicRoots,
    power_p: Option<f64>,
}

impl Model {
    /// Validates the inputs and caches the roots.
    pub fn new(params: ModelParams, profit: ProfitModel) -> Result<Model> {
        let report = validate(&params, &profit);
        if !report.is_ok() {
            return Err(Error::Assumption(report.violations.join("; ")));
        }
        let roots = characteristic_roots(&params)?;
        let power_p = match profit {
            ProfitModel::Power { theta, .. } => Some(power_resolvent_constant(&params, theta)?),
            ProfitModel::Custom(_) => None,
        };
        Ok(Model {
            params,
            profit,
            roots,
            power_p,
        })
    }

    /// The paper's numerical setting: reference parameters with `pi(x) = sqrt(x)`.
    pub fn reference(lambda: f64) -> Result<Model> {
        Model::new(
            ModelParams::reference().with_lambda(lambda),
            ProfitModel::power(1.0, 0.5),
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Model> {
        Model::new(self.params.with_lambda(lambda), self.profit.clone())
    }

    pub fn alpha_minus(&self) -> f64 {
        self.roots.alpha_minus
    }

    /// `lambda / rho`.
    pub fn entropy_scale(&self) -> f64 {
        self.params.lambda / self.params.rho
    }

    /// Resolvent constant `P` when the profit is a power function.
    pub fn power_constant(&self) -> Option<f64> {
        self.power_p
    }

    pub fn profit_rate(&self, x: f64) -> f64 {
        self.profit.rate(x)
    }

    pub fn h(&self, x: f64) -> f64 {
        match (&self.profit, self.power_p) {
            (ProfitModel::Power { c, theta }, Some(p)) => p * c * x.powf(*theta),
            (ProfitModel::Custom(cp), _) => (cp.resolvent)(x),
            _ => unreachable!(),
        }
    }

    /// `H'(x)`; infinite at `x = 0` for the power profit.
    pub fn h_prime(&self, x: f64) -> f64 {
        match (&self.profit, self.power_p) {
            (ProfitModel::Power { c, theta }, Some(p)) => theta * p * c * x.powf(theta - 1.0),
            (ProfitModel::Custom(cp), _) => (cp.resolvent_derivative)(x),
            _ => unreachable!(),
        }
    }

    /// `x H'(x) / (-alpha_-) + H(x)`, the left side of the free-boundary equation.
    pub fn free_boundary_lhs(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.h(0.0);
        }
        match (&self.profit, self.power_p) {
            (ProfitModel::Power { c, theta }, Some(p)) => {
                let am = self.roots.alpha_minus;
                p * c * x.powf(*theta) * (theta - am) / (-am)
            }
            _ => x * self.h_prime(x) / (-self.roots.alpha_minus) + self.h(x),
        }
    }

    /// Solves `free_boundary_lhs(x) = rhs`; returns 0 when `rhs` is at or below `lhs(0)`.
    pub fn solve_free_boundary(&self, rhs: f64) -> Result<f64> {
        if rhs <= self.free_boundary_lhs(0.0) {
            return Ok(0.0);
        }
        if let (ProfitModel::Power { c, theta }, Some(p)) = (&self.profit, self.power_p) {
            let am = self.roots.alpha_minus;
            return Ok((rhs * (-am) / (p * c * (theta - am))).powf(1.0 / theta));
        }
        self.bisect_free_boundary(rhs)
    }

    /// Generic bisection on the free-boundary equation, with geometric bracket growth.
    pub fn bisect_free_boundary(&self, rhs: f64) -> Result<f64> {
        let f = |x: f64| self.free_boundary_lhs(x) - rhs;
        if f(0.0) >= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > BRACKET_LIMIT {
                return Err(Error::BoundaryOutsideDomain(BRACKET_LIMIT));
            }
        }
        let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
        Ok(bisect(f, lo, hi, 1e-12 * hi))
    }

    /// Classical threshold `b*` solving `free_boundary_lhs(x) = kappa`.
    pub fn classical_boundary(&self) -> Result<f64> {
        self.solve_free_boundary(self.params.kappa)
    }

    /// `y^lambda = exp(-1 - kappa rho / lambda)`; zero when `lambda = 0`.
    pub fn y_floor(&self) -> f64 {
        if self.params.lambda == 0.0 {
            return 0.0;
        }
        (-1.0 - self.params.kappa * self.params.rho / self.params.lambda).exp()
    }
}

/// `y ln y` with the continuous extension `0 ln 0 = 0`.
pub fn xlogx(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        y * y.ln()
    }
}
