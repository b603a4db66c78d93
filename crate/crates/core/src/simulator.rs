//! GBM paths, the weight process of a reflection policy and the discounted reward.
//!
//! Randomness is counter-based: the path with indices `(k, i, j, m)` is drawn from a
//! ChaCha8 stream seeded by a SplitMix64 hash of `(seed, k, i, j, m)`, so results do
//! not depend on the number of worker threads.
//!
//! Boundaries are nondecreasing, so the running minimum of `g(X)` over a step is `g`
//! at the path minimum over that step. With `bridge` set, that minimum is drawn from
//! its exact conditional law given the step endpoints; otherwise the path is only
//! monitored at grid times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::GridBoundary;
use crate::error::{Error, Result};
use crate::model::{xlogx, Model, ProfitModel};
use crate::model_free::{FloorObjective, ValueEstimator, ValueTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Every grid node draws its own paths.
    Independent,
    /// All grid nodes share one ensemble of unit paths per iteration.
    CommonRandomNumbers,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathConfig {
    pub dt: f64,
    /// Truncation time of the reward integral.
    pub horizon: f64,
    pub seed: u64,
    pub mode: SimMode,
    /// Sample the path minimum inside each step.
    pub bridge: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            dt: 0.01,
            horizon: 30.0,
            seed: 0,
            mode: SimMode::CommonRandomNumbers,
            bridge: true,
        }
    }
}

impl PathConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Checks the step and that `exp(-rho horizon) <= tail`.
    pub fn validate(&self, rho: f64, tail: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.horizon > 0.0) || self.steps() == 0 {
            return Err(Error::Config(format!(
                "need 0 < dt <= horizon, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if (-rho * self.horizon).exp() > tail {
            return Err(Error::Config(format!(
                "horizon {} leaves a discount tail above {tail}; need horizon >= {}",
                self.horizon,
                tail.recip().ln() / rho
            )));
        }
        Ok(())
    }
}

/// Indices of an iteration and grid node; combined with the path index to seed a stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StreamId {
    pub k: u64,
    pub i: u64,
    pub j: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of path `m` at node `id` under master `seed`.
pub fn stream_seed(seed: u64, id: StreamId, m: u64) -> u64 {
    [id.k, id.i, id.j, m]
        .iter()
        .fold(splitmix64(seed), |h, &v| splitmix64(h ^ splitmix64(v)))
}

/// Unit-start path `X^1` on the time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitPath {
    /// `X_t` at grid times, starting at 1.
    pub x: Vec<f64>,
    /// Minimum of `X` over the step ending at each grid time; `low[0] = 1`.
    pub low: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct UnitPathEnsemble {
    pub paths: Vec<UnitPath>,
}

impl UnitPathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Environment for reflection policies: draws paths and returns discounted rewards.
#[derive(Clone, Debug)]
pub struct Simulator {
    mu: f64,
    sigma: f64,
    rho: f64,
    kappa: f64,
    lambda: f64,
    profit: ProfitModel,
}

impl Simulator {
    pub fn new(model: &Model) -> Self {
        let p = &model.params;
        Simulator {
            mu: p.mu,
            sigma: p.sigma,
            rho: p.rho,
            kappa: p.kappa,
            lambda: p.lambda,
            profit: model.profit.clone(),
        }
    }

    /// Unit-start path drawn exactly in law, `X_{t+dt} = X_t exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z)`.
    ///
    /// The step minimum of `ln X` given endpoints `a, b` is
    /// `(a + b - sqrt((b - a)^2 - 2 sigma^2 dt ln U)) / 2` with `U` uniform.
    pub fn unit_path(&self, cfg: &PathConfig, key: u64) -> UnitPath {
        let n = cfg.steps();
        let drift = (self.mu - 0.5 * self.sigma * self.sigma) * cfg.dt;
        let var = self.sigma * self.sigma * cfg.dt;
        let vol = var.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let mut x = Vec::with_capacity(n + 1);
        let mut low = Vec::with_capacity(n + 1);
        let mut log_x = 0.0f64;
        x.push(1.0);
        low.push(1.0);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let next = log_x + drift + vol * z;
            let end = next.exp();
            x.push(end);
            if cfg.bridge {
                let u: f64 = 1.0 - rng.random::<f64>();
                let d = next - log_x;
                let m = 0.5 * (log_x + next - (d * d - 2.0 * var * u.ln()).sqrt());
                low.push(m.exp().min(end));
            } else {
                low.push(end);
            }
            log_x = next;
        }
        UnitPath { x, low }
    }

    /// `m` unit paths for iteration `k`.
    pub fn ensemble(&self, cfg: &PathConfig, m: usize, k: u64) -> UnitPathEnsemble {
        let id = StreamId { k, i: 0, j: 0 };
        let paths = (0..m as u64)
            .into_par_iter()
            .map(|p| self.unit_path(cfg, stream_seed(cfg.seed, id, p)))
            .collect();
        UnitPathEnsemble { paths }
    }

    /// Trapezoid weights times the discount factor.
    pub fn quadrature_weights(&self, cfg: &PathConfig) -> Vec<f64> {
        let n = cfg.steps();
        (0..=n)
            .map(|s| {
                let w = if s == 0 || s == n {
                    0.5 * cfg.dt
                } else {
                    cfg.dt
                };
                w * (-self.rho * s as f64 * cfg.dt).exp()
            })
            .collect()
    }

    /// Discounted reward of the reflection policy `g` from `(x, y)` along `x * path`.
    pub fn simulate_reward(
        &self,
        x: f64,
        y: f64,
        g: &GridBoundary,
        weights: &[f64],
        path: &UnitPath,
    ) -> f64 {
        let mut running = f64::INFINITY;
        let mut acc = 0.0;
        for ((w, &u), &lo) in weights.iter().zip(&path.x).zip(&path.low) {
            let xt = x * u;
            running = running.min(g.eval(x * lo));
            let yt = y.min(running);
            acc +=
                w * ((self.profit.rate(xt) - self.rho * self.kappa) * yt - self.lambda * xlogx(yt));
        }
        acc
    }

    /// Weight process `Y_t = min(y, min_{s<=t} g(X_s))` along `x * path`.
    pub fn weight_path(&self, x: f64, y: f64, g: &GridBoundary, path: &UnitPath) -> Vec<f64> {
        let mut running = f64::INFINITY;
        path.low
            .iter()
            .map(|&lo| {
                running = running.min(g.eval(x * lo));
                y.min(running)
            })
            .collect()
    }

    /// Rewards from `(x, y)` for every `y` in `ys` along one path, via prefix sums.
    pub fn reward_profile(
        &self,
        x: f64,
        ys: &[f64],
        g: &GridBoundary,
        weights: &[f64],
        path: &UnitPath,
    ) -> Vec<f64> {
        let n = path.x.len();
        let mut running = Vec::with_capacity(n);
        let mut c1 = Vec::with_capacity(n + 1);
        let mut c2 = Vec::with_capacity(n + 1);
        let mut c3 = Vec::with_capacity(n + 1);
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        let mut gmin = f64::INFINITY;
        c1.push(0.0);
        c2.push(0.0);
        c3.push(0.0);
        for ((w, &u), &lo) in weights.iter().zip(&path.x).zip(&path.low) {
            let xt = x * u;
            gmin = gmin.min(g.eval(x * lo));
            running.push(gmin);
            let net = self.profit.rate(xt) - self.rho * self.kappa;
            s1 += w * net;
            s2 += w;
            s3 += w * (net * gmin - self.lambda * xlogx(gmin));
            c1.push(s1);
            c2.push(s2);
            c3.push(s3);
        }
        ys.iter()
            .map(|&y| {
                // Y = y before the first time the running minimum drops below y
                let j = running.partition_point(|&r| r >= y);
                y * c1[j] - self.lambda * xlogx(y) * c2[j] + (c3[n] - c3[j])
            })
            .collect()
    }

    /// Monte Carlo value from `(x, y)` with `m` paths drawn for node `id`.
    pub fn mc_value_at(
        &self,
        x: f64,
        y: f64,
        g: &GridBoundary,
        m: usize,
        cfg: &PathConfig,
        id: StreamId,
    ) -> Result<McEstimate> {
        if m < 2 {
            return Err(Error::Config(format!("need at least 2 paths, got {m}")));
        }
        let weights = self.quadrature_weights(cfg);
        let rewards: Vec<f64> = (0..m as u64)
            .into_par_iter()
            .map(|p| {
                let path = self.unit_path(cfg, stream_seed(cfg.seed, id, p));
                self.simulate_reward(x, y, g, &weights, &path)
            })
            .collect();
        Ok(McEstimate::from_samples(&rewards))
    }

    pub fn mc_value(
        &self,
        x: f64,
        y: f64,
        g: &GridBoundary,
        m: usize,
        cfg: &PathConfig,
    ) -> Result<McEstimate> {
        self.mc_value_at(x, y, g, m, cfg, StreamId::default())
    }
}

/// Monte Carlo value tables for sample-based policy iteration.
#[derive(Clone, Debug)]
pub struct MonteCarloEstimator {
    pub sim: Simulator,
    pub cfg: PathConfig,
    pub paths: usize,
}

impl MonteCarloEstimator {
    fn common(&self, g: &GridBoundary, xs: &[f64], ys: &[f64], k: usize) -> ValueTable {
        let ens = self.sim.ensemble(&self.cfg, self.paths, k as u64);
        let weights = self.sim.quadrature_weights(&self.cfg);
        let m = self.paths as f64;
        let cols: Vec<(Vec<f64>, Vec<f64>)> = xs
            .par_iter()
            .map(|&x| {
                let mut sum = vec![0.0; ys.len()];
                let mut sq = vec![0.0; ys.len()];
                for path in &ens.paths {
                    let r = self.sim.reward_profile(x, ys, g, &weights, path);
                    for (j, v) in r.into_iter().enumerate() {
                        sum[j] += v;
                        sq[j] += v * v;
                    }
                }
                let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
                let se = sq
                    .iter()
                    .zip(&mean)
                    .map(|(q, mu)| ((q / m - mu * mu).max(0.0) * m / (m - 1.0) / m).sqrt())
                    .collect();
                (mean, se)
            })
            .collect();
        let mut mean = Vec::with_capacity(xs.len() * ys.len());
        let mut stderr = Vec::with_capacity(xs.len() * ys.len());
        for (mu, se) in cols {
            mean.extend(mu);
            stderr.extend(se);
        }
        ValueTable::new(xs.to_vec(), ys.to_vec(), mean, stderr)
    }

    fn independent(&self, g: &GridBoundary, xs: &[f64], ys: &[f64], k: usize) -> ValueTable {
        let weights = self.sim.quadrature_weights(&self.cfg);
        let nodes: Vec<(usize, usize)> = (0..xs.len())
            .flat_map(|i| (0..ys.len()).map(move |j| (i, j)))
            .collect();
        let est: Vec<McEstimate> = nodes
            .par_iter()
            .map(|&(i, j)| {
                let id = StreamId {
                    k: k as u64,
                    i: i as u64,
                    j: j as u64,
                };
                let rewards: Vec<f64> = (0..self.paths as u64)
                    .map(|p| {
                        let path = self
                            .sim
                            .unit_path(&self.cfg, stream_seed(self.cfg.seed, id, p));
                        self.sim.simulate_reward(xs[i], ys[j], g, &weights, &path)
                    })
                    .collect();
                McEstimate::from_samples(&rewards)
            })
            .collect();
        ValueTable::new(
            xs.to_vec(),
            ys.to_vec(),
            est.iter().map(|e| e.mean).collect(),
            est.iter().map(|e| e.stderr).collect(),
        )
    }
}

impl ValueEstimator for MonteCarloEstimator {
    fn estimate(
        &self,
        g: &GridBoundary,
        xs: &[f64],
        ys: &[f64],
        iteration: usize,
    ) -> Result<ValueTable> {
        if self.paths < 2 {
            return Err(Error::Config(format!(
                "need at least 2 paths, got {}",
                self.paths
            )));
        }
        Ok(match self.cfg.mode {
            SimMode::CommonRandomNumbers => self.common(g, xs, ys, iteration),
            SimMode::Independent => self.independent(g, xs, ys, iteration),
        })
    }
}

/// Simulated `J(0, y)` under the never-stop policy.
#[derive(Clone, Debug)]
pub struct SimulatedFloorObjective {
    pub sim: Simulator,
    pub cfg: PathConfig,
    pub paths: usize,
}

impl FloorObjective for SimulatedFloorObjective {
    fn evaluate(&self, y: f64, query: usize) -> Result<f64> {
        let never = GridBoundary::constant(vec![0.0, 1.0], 1.0)?;
        let id = StreamId {
            k: query as u64,
            i: 0,
            j: 0,
        };
        Ok(self
            .sim
            .mc_value_at(0.0, y, &never, self.paths, &self.cfg, id)?
            .mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::uniform_knots;

    fn sim() -> (Model, Simulator) {
        let m = Model::reference(0.5).unwrap();
        let s = Simulator::new(&m);
        (m, s)
    }

    #[test]
    fn origin_with_trivial_boundary_pays_minus_kappa() {
        let (_, s) = sim();
        let cfg = PathConfig::default();
        let g = GridBoundary::constant(vec![0.0, 1.0], 1.0).unwrap();
        let path = s.unit_path(&cfg, 1);
        let r = s.simulate_reward(0.0, 1.0, &g, &s.quadrature_weights(&cfg), &path);
        let exact = -5.0 * (1.0 - (-0.5f64 * 30.0).exp());
        // trapezoid error of the discount integral is O(dt^2)
        assert!((r - exact).abs() < 1e-4, "{r} vs {exact}");
    }

    #[test]
    fn origin_with_partial_weight() {
        let (m, s) = sim();
        let cfg = PathConfig::default();
        let g = GridBoundary::constant(vec![0.0, 1.0], 1.0).unwrap();
        let path = s.unit_path(&cfg, 7);
        let y = 0.3;
        let r = s.simulate_reward(0.0, y, &g, &s.quadrature_weights(&cfg), &path);
        let exact = -5.0 * y - m.entropy_scale() * xlogx(y);
        assert!((r - exact).abs() < 1e-4);
    }

    #[test]
    fn weight_process_nonincreasing_and_below_boundary() {
        let (m, s) = sim();
        let k = uniform_knots(0.02, 5.0).unwrap();
        let g = crate::boundary::init_linear(&m, &k).unwrap();
        let path = s.unit_path(&PathConfig::default(), 3);
        let x = 0.15;
        let w = s.weight_path(x, 0.9, &g, &path);
        assert!(w.windows(2).all(|p| p[1] <= p[0]));
        for (yt, &u) in w.iter().zip(&path.x) {
            assert!(*yt <= g.eval(x * u));
            assert!(*yt <= 0.9);
        }
    }

    #[test]
    fn profile_matches_direct_reward() {
        let (m, s) = sim();
        let cfg = PathConfig::default();
        let k = uniform_knots(0.02, 5.0).unwrap();
        let g = crate::boundary::init_linear(&m, &k).unwrap();
        let w = s.quadrature_weights(&cfg);
        let ys: Vec<f64> = (0..=20).map(|j| j as f64 / 20.0).collect();
        for key in 0..4 {
            let path = s.unit_path(&cfg, key);
            for &x in &[0.05, 0.2, 1.0] {
                let prof = s.reward_profile(x, &ys, &g, &w, &path);
                for (j, &y) in ys.iter().enumerate() {
                    let direct = s.simulate_reward(x, y, &g, &w, &path);
                    assert!((prof[j] - direct).abs() < 1e-9 * (1.0 + direct.abs()));
                }
            }
        }
    }

    #[test]
    fn scaling_is_exact() {
        let (_, s) = sim();
        let cfg = PathConfig::default();
        let path = s.unit_path(&cfg, 11);
        let scaled: Vec<f64> = path.x.iter().map(|u| 2.5 * u).collect();
        for (a, u) in scaled.iter().zip(&path.x) {
            assert_eq!(*a, 2.5 * u);
        }
        assert_eq!(path.x[0], 1.0);
        // the step minimum lies below both endpoints
        for (s, lo) in path.low.iter().enumerate().skip(1) {
            assert!(*lo <= path.x[s] && *lo <= path.x[s - 1]);
        }
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let (_, s) = sim();
        let cfg = PathConfig::default();
        let a = stream_seed(5, StreamId { k: 1, i: 2, j: 3 }, 4);
        assert_eq!(a, stream_seed(5, StreamId { k: 1, i: 2, j: 3 }, 4));
        assert_ne!(a, stream_seed(5, StreamId { k: 1, i: 3, j: 2 }, 4));
        assert_ne!(a, stream_seed(6, StreamId { k: 1, i: 2, j: 3 }, 4));
        assert_eq!(s.unit_path(&cfg, a), s.unit_path(&cfg, a));
    }

    #[test]
    fn mc_value_is_thread_count_independent() {
        let (m, s) = sim();
        let k = uniform_knots(0.02, 5.0).unwrap();
        let g = crate::boundary::init_linear(&m, &k).unwrap();
        let cfg = PathConfig {
            seed: 42,
            ..Default::default()
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| s.mc_value(1.0, 0.5, &g, 64, &cfg).unwrap());
        let b = four.install(|| s.mc_value(1.0, 0.5, &g, 64, &cfg).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn reward_envelope() {
        let (m, s) = sim();
        let cfg = PathConfig::default();
        let k = uniform_knots(0.02, 5.0).unwrap();
        let g = crate::boundary::init_linear(&m, &k).unwrap();
        let w = s.quadrature_weights(&cfg);
        let bound = -5.0 - 0.5 / (std::f64::consts::E * 0.5);
        for key in 0..50 {
            let path = s.unit_path(&cfg, key);
            assert!(s.simulate_reward(0.5, 1.0, &g, &w, &path) >= bound);
        }
    }

    #[test]
    fn bridge_minimum_matches_first_passage_law() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let (_, s) = sim();
        let cfg = PathConfig {
            dt: 1.0,
            horizon: 1.0,
            ..Default::default()
        };
        let (nu, sig, h) = (0.2 - 0.02, 0.2, 0.15);
        let phi = Normal::new(0.0, 1.0).unwrap();
        let exact = phi.cdf((-h - nu) / sig)
            + (-2.0 * nu * h / (sig * sig)).exp() * phi.cdf((-h + nu) / sig);
        let n = 20_000;
        let hits = (0..n)
            .filter(|&k| s.unit_path(&cfg, k).low[1].ln() <= -h)
            .count() as f64;
        let p = hits / n as f64;
        let sd = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * sd, "{p} vs {exact}");
    }

    #[test]
    fn horizon_tail_check() {
        let cfg = PathConfig::default();
        assert!(cfg.validate(0.5, 1e-4).is_ok());
        let short = PathConfig {
            horizon: 5.0,
            ..cfg
        };
        assert!(short.validate(0.5, 1e-4).is_err());
    }
}
