//! Euler discretization of the joint (X, Y) dynamics.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::ReturnSeries;
use crate::model::{ModelKind, ModelSpec};
use crate::rng::{stream_rng, TAG_SIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Value(f64),
    /// Draw `y0` from the stationary latent law.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub spec: ModelSpec,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub y0: InitialState,
}

impl SimConfig {
    /// Daily steps from a stationary start.
    pub fn new(spec: ModelSpec, n_steps: usize, seed: u64) -> Self {
        Self {
            spec,
            n_steps,
            dt: 1.0,
            seed,
            y0: InitialState::Stationary,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_y0(mut self, y0: InitialState) -> Self {
        self.y0 = y0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if let InitialState::Value(y) = self.y0 {
            if !y.is_finite() || (self.spec.kind == ModelKind::Heston && y < 0.0) {
                return Err(Error::InvalidParameter(format!("invalid initial latent value {y}")));
            }
        }
        Ok(())
    }
}

/// A simulated trajectory. All three series have `n_steps + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub config: SimConfig,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SimPath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Zero-mean increments `X(t+1) - X(t)`; entry `t` was driven by `sigma[t]`.
    pub fn returns(&self) -> ReturnSeries {
        let dx = self.x.windows(2).map(|w| w[1] - w[0]).collect();
        ReturnSeries::zero_mean(dx, format!("sim-{}-seed{}", self.config.spec.kind, self.config.seed))
    }

    /// True volatility aligned with [`SimPath::returns`].
    pub fn driving_vol(&self) -> &[f64] {
        &self.sigma[..self.sigma.len().saturating_sub(1)]
    }
}

/// Number of steps covering ten relaxation times `1/alpha`.
pub fn default_burn_in(spec: &ModelSpec) -> usize {
    (10.0 / spec.alpha()).ceil() as usize
}

/// One Euler step. Heston draws that land below zero are reflected.
#[inline]
pub fn step(spec: &ModelSpec, x: f64, y: f64, dt: f64, eps1: f64, eps2: f64) -> Result<(f64, f64)> {
    let sqrt_dt = dt.sqrt();
    let x_next = x + spec.f(y)? * eps1 * sqrt_dt;
    let mut y_next = y - spec.g(y) * dt + spec.h(y)? * eps2 * sqrt_dt;
    if spec.kind == ModelKind::Heston && y_next < 0.0 {
        y_next = -y_next;
    }
    Ok((x_next, y_next))
}

pub fn sample_stationary<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> f64 {
    match spec.kind {
        ModelKind::ExpOu | ModelKind::Ou => {
            let sd = spec.stationary_scale().sqrt();
            Normal::new(spec.fixed_point(), sd)
                .expect("positive standard deviation")
                .sample(rng)
        }
        ModelKind::Heston => Gamma::new(spec.heston_shape(), spec.stationary_scale())
            .expect("positive gamma parameters")
            .sample(rng),
    }
}

pub fn simulate_path(config: &SimConfig) -> Result<SimPath> {
    config.validate()?;
    let spec = &config.spec;
    let mut rng = stream_rng(config.seed, TAG_SIM);
    let y0 = match config.y0 {
        InitialState::Value(y) => y,
        InitialState::Stationary => sample_stationary(spec, &mut rng),
    };

    let n = config.n_steps + 1;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let (mut xc, mut yc) = (0.0, y0);
    x.push(xc);
    y.push(yc);
    sigma.push(spec.volatility(yc)?);
    for _ in 0..config.n_steps {
        let eps1: f64 = rng.sample(StandardNormal);
        let eps2: f64 = rng.sample(StandardNormal);
        (xc, yc) = step(spec, xc, yc, config.dt, eps1, eps2)?;
        x.push(xc);
        y.push(yc);
        sigma.push(spec.volatility(yc)?);
    }
    Ok(SimPath {
        config: *config,
        x,
        y,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_point_without_noise_is_identity() {
        let ou = ModelSpec::dji(ModelKind::Ou);
        assert_eq!(step(&ou, 0.3, ou.m(), 1.0, 0.0, 0.0).unwrap(), (0.3, ou.m()));
        let expou = ModelSpec::dji(ModelKind::ExpOu);
        assert_eq!(step(&expou, -1.0, 0.0, 1.0, 0.0, 0.0).unwrap(), (-1.0, 0.0));
        let heston = ModelSpec::dji(ModelKind::Heston);
        assert_eq!(
            step(&heston, 0.0, heston.m(), 1.0, 0.0, 0.0).unwrap(),
            (0.0, heston.m())
        );
    }

    #[test]
    fn step_examples() {
        let expou = ModelSpec::dji(ModelKind::ExpOu);
        let (_, y) = step(&expou, 0.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(y, 4.7e-2);
        let ou = ModelSpec::dji(ModelKind::Ou);
        let (_, y) = step(&ou, 0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(y, 6e-4, max_relative = 1e-14);
    }

    #[test]
    fn heston_reflects() {
        let heston = ModelSpec::dji(ModelKind::Heston);
        let (_, y) = step(&heston, 0.0, 1e-6, 1.0, 0.0, -10.0).unwrap();
        assert!(y > 0.0);
        let want = -(1e-6 - heston.g(1e-6) + heston.k() * 1e-3 * -10.0);
        assert_relative_eq!(y, want, max_relative = 1e-14);
    }

    #[test]
    fn zero_steps() {
        let cfg = SimConfig::new(ModelSpec::dji(ModelKind::Ou), 0, 1).with_y0(InitialState::Value(0.02));
        let p = simulate_path(&cfg).unwrap();
        assert_eq!(
            (p.x.clone(), p.y.clone(), p.sigma.clone()),
            (vec![0.0], vec![0.02], vec![0.02])
        );
        assert!(p.returns().dx.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in ModelKind::ALL {
            let cfg = SimConfig::new(ModelSpec::dji(kind), 500, 99);
            let a = simulate_path(&cfg).unwrap();
            let b = simulate_path(&cfg).unwrap();
            assert_eq!(a, b);
            let c = simulate_path(&SimConfig { seed: 100, ..cfg }).unwrap();
            assert_ne!(a.x, c.x);
        }
    }

    #[test]
    fn sigma_is_volatility_of_y() {
        for kind in ModelKind::ALL {
            let spec = ModelSpec::dji(kind);
            let p = simulate_path(&SimConfig::new(spec, 2000, 5)).unwrap();
            assert_eq!(p.len(), 2001);
            for (y, s) in p.y.iter().zip(&p.sigma) {
                assert_eq!(*s, spec.volatility(*y).unwrap());
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let spec = ModelSpec::dji(ModelKind::Heston);
        assert!(simulate_path(&SimConfig::new(spec, 10, 1).with_dt(0.0)).is_err());
        assert!(simulate_path(&SimConfig::new(spec, 10, 1).with_y0(InitialState::Value(-1.0))).is_err());
    }

    #[test]
    fn heston_stays_nonnegative_over_a_million_steps() {
        let spec = ModelSpec::dji(ModelKind::Heston);
        let p = simulate_path(&SimConfig::new(spec, 1_000_000, 17)).unwrap();
        assert!(p.y.iter().all(|&y| y >= 0.0));
    }

    #[test]
    fn ou_abs_mean_matches_folded_normal() {
        let spec = ModelSpec::dji(ModelKind::Ou);
        let p = simulate_path(&SimConfig::new(spec, 1_000_000, 23)).unwrap();
        let mean = p.sigma.iter().sum::<f64>() / p.sigma.len() as f64;
        let (mu, sd) = (spec.m(), spec.stationary_scale().sqrt());
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = |z: f64| 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
        let folded = sd * 2.0 * phi(mu / sd) + mu * (1.0 - 2.0 * cdf(-mu / sd));
        assert!((mean / folded - 1.0).abs() < 0.02, "mean {mean} folded {folded}");
    }

    #[test]
    fn ou_relaxes_from_off_equilibrium_start() {
        // E[Y_n] - m = (1 - alpha)^n (y0 - m) under the Euler map.
        let spec = ModelSpec::dji(ModelKind::Ou);
        let n_paths = 4000;
        let horizon = 20;
        let mut acc = 0.0;
        for seed in 0..n_paths {
            let cfg = SimConfig::new(spec, horizon, seed).with_y0(InitialState::Value(0.0));
            acc += simulate_path(&cfg).unwrap().y[horizon];
        }
        let mean = acc / n_paths as f64;
        let want = spec.m() * (1.0 - (1.0 - spec.alpha()).powi(horizon as i32));
        let se = spec.k() * (horizon as f64).sqrt() / (n_paths as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "mean {mean} want {want}");
    }

    #[test]
    fn returns_are_gaussian_at_frozen_latent() {
        for kind in ModelKind::ALL {
            let spec = ModelSpec::dji(kind);
            let y = spec.fixed_point().max(1e-5);
            let dt = 0.5;
            let mut rng = stream_rng(3, 0);
            let n = 200_000;
            let zs: Vec<f64> = (0..n)
                .map(|_| {
                    let e1: f64 = rng.sample(StandardNormal);
                    let e2: f64 = rng.sample(StandardNormal);
                    let (x1, _) = step(&spec, 0.0, y, dt, e1, e2).unwrap();
                    x1 / (spec.f(y).unwrap() * dt.sqrt())
                })
                .collect();
            let mean = zs.iter().sum::<f64>() / n as f64;
            let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n as f64;
            let kurt = zs.iter().map(|z| (z - mean).powi(4)).sum::<f64>() / n as f64 / (var * var);
            assert!(mean.abs() < 4.0 / (n as f64).sqrt());
            assert!((var - 1.0).abs() < 0.015);
            assert!((kurt - 3.0).abs() < 0.05);
        }
    }

    #[test]
    fn burn_in_covers_ten_relaxation_times() {
        assert_eq!(default_burn_in(&ModelSpec::dji(ModelKind::Ou)), 200);
        assert_eq!(default_burn_in(&ModelSpec::dji(ModelKind::ExpOu)), 5495);
    }
}
