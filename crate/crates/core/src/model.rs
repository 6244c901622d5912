//! The three stochastic volatility models.
//!
//! Each model drives the volatility through a latent diffusion
//!
//! ```text
//! dX = f(Y) dW1
//! dY = -g(Y) dt + h(Y) dW2
//! ```
//!
//! | model  | f(y)     | g(y)       | h(y)     |
//! |--------|----------|------------|----------|
//! | expOU  | m e^y    | a y        | k        |
//! | OU     | y        | a (y - m)  | k        |
//! | Heston | sqrt(y)  | a (y - m)  | k sqrt(y)|
//!
//! All parameters are in daily units. For Heston, `m` is a variance level.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    ExpOu,
    Ou,
    Heston,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::ExpOu, ModelKind::Ou, ModelKind::Heston];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ExpOu => "expou",
            ModelKind::Ou => "ou",
            ModelKind::Heston => "heston",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "expou" => Ok(ModelKind::ExpOu),
            "ou" => Ok(ModelKind::Ou),
            "heston" => Ok(ModelKind::Heston),
            other => Err(Error::InvalidParameter(format!(
                "unknown model `{other}` (expected expou, ou or heston)"
            ))),
        }
    }
}

/// Volatility-of-volatility `k`, reversion rate `alpha` and normal level `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub k: f64,
    pub alpha: f64,
    pub m: f64,
}

impl ModelParams {
    pub fn new(k: f64, alpha: f64, m: f64) -> Result<Self> {
        for (name, v) in [("k", k), ("alpha", alpha), ("m", m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { k, alpha, m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: ModelParams,
}

const PRESET_EXPOU: &str = include_str!("../presets/dji-expou.conf");
const PRESET_OU: &str = include_str!("../presets/dji-ou.conf");
const PRESET_HESTON: &str = include_str!("../presets/dji-heston.conf");

impl ModelSpec {
    pub fn new(kind: ModelKind, k: f64, alpha: f64, m: f64) -> Result<Self> {
        Ok(Self {
            kind,
            params: ModelParams::new(k, alpha, m)?,
        })
    }

    /// Dow Jones parameters for the given model, in daily units.
    pub fn dji(kind: ModelKind) -> Self {
        let text = match kind {
            ModelKind::ExpOu => PRESET_EXPOU,
            ModelKind::Ou => PRESET_OU,
            ModelKind::Heston => PRESET_HESTON,
        };
        ModelConfig::parse(text)
            .and_then(|c| c.resolve())
            .expect("bundled preset is valid")
    }

    /// Looks up a bundled preset by name, e.g. `dji-heston`.
    pub fn preset(name: &str) -> Result<Self> {
        let kind = name
            .strip_prefix("dji-")
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?
            .parse::<ModelKind>()
            .map_err(|_| Error::Config(format!("unknown preset `{name}`")))?;
        Ok(Self::dji(kind))
    }

    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn m(&self) -> f64 {
        self.params.m
    }

    /// Maps the latent value to the volatility.
    #[inline]
    pub fn f(&self, y: f64) -> Result<f64> {
        match self.kind {
            ModelKind::ExpOu => Ok(self.params.m * y.exp()),
            ModelKind::Ou => Ok(y),
            ModelKind::Heston => {
                if y < 0.0 {
                    Err(Error::Domain(format!("heston f(y) needs y >= 0, got {y}")))
                } else {
                    Ok(y.sqrt())
                }
            }
        }
    }

    #[inline]
    pub fn f_inv(&self, v: f64) -> Result<f64> {
        match self.kind {
            ModelKind::ExpOu => {
                if v > 0.0 {
                    Ok((v / self.params.m).ln())
                } else {
                    Err(Error::Domain(format!("expou f^-1(v) needs v > 0, got {v}")))
                }
            }
            ModelKind::Ou | ModelKind::Heston if v < 0.0 => {
                Err(Error::Domain(format!("{} f^-1(v) needs v >= 0, got {v}", self.kind)))
            }
            ModelKind::Ou => Ok(v),
            ModelKind::Heston => Ok(v * v),
        }
    }

    /// Restoring drift; the latent process moves by `-g(y) dt`.
    #[inline]
    pub fn g(&self, y: f64) -> f64 {
        match self.kind {
            ModelKind::ExpOu => self.params.alpha * y,
            ModelKind::Ou | ModelKind::Heston => self.params.alpha * (y - self.params.m),
        }
    }

    #[inline]
    pub fn h(&self, y: f64) -> Result<f64> {
        match self.kind {
            ModelKind::ExpOu | ModelKind::Ou => Ok(self.params.k),
            ModelKind::Heston => {
                if y < 0.0 {
                    Err(Error::Domain(format!("heston h(y) needs y >= 0, got {y}")))
                } else {
                    Ok(self.params.k * y.sqrt())
                }
            }
        }
    }

    /// Observable volatility: `|f(y)|`. Only differs from `f` for OU with negative `y`.
    #[inline]
    pub fn volatility(&self, y: f64) -> Result<f64> {
        self.f(y).map(f64::abs)
    }

    /// Zero of the drift `g`.
    pub fn fixed_point(&self) -> f64 {
        match self.kind {
            ModelKind::ExpOu => 0.0,
            ModelKind::Ou | ModelKind::Heston => self.params.m,
        }
    }

    /// `k^2 / 2 alpha`: the stationary variance of the Gaussian models and
    /// the Gamma scale of Heston.
    pub fn stationary_scale(&self) -> f64 {
        self.params.k * self.params.k / (2.0 * self.params.alpha)
    }

    /// Shape of the Heston stationary Gamma law, `2 alpha m / k^2`.
    pub fn heston_shape(&self) -> f64 {
        2.0 * self.params.alpha * self.params.m / (self.params.k * self.params.k)
    }

    pub fn stationary_latent_mean(&self) -> f64 {
        self.fixed_point()
    }

    pub fn stationary_latent_variance(&self) -> f64 {
        match self.kind {
            ModelKind::ExpOu | ModelKind::Ou => self.stationary_scale(),
            ModelKind::Heston => self.heston_shape() * self.stationary_scale().powi(2),
        }
    }

    /// Expected stationary volatility `sigma_s`, used to make MFPT thresholds dimensionless.
    pub fn stationary_vol_mean(&self) -> f64 {
        let ModelParams { k, alpha, m } = self.params;
        match self.kind {
            ModelKind::ExpOu => m * (k * k / (4.0 * alpha)).exp(),
            ModelKind::Ou => m,
            ModelKind::Heston => {
                let nu = self.heston_shape();
                self.stationary_scale().sqrt() * (ln_gamma(nu + 0.5) - ln_gamma(nu)).exp()
            }
        }
    }

    /// Stationary probability density of the latent variable.
    pub fn stationary_latent_density(&self, y: f64) -> Result<f64> {
        match self.kind {
            ModelKind::ExpOu | ModelKind::Ou => {
                let var = self.stationary_scale();
                let z = y - self.fixed_point();
                Ok((-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
            }
            ModelKind::Heston => {
                if y < 0.0 {
                    return Err(Error::Domain(format!(
                        "heston stationary density needs y >= 0, got {y}"
                    )));
                }
                let nu = self.heston_shape();
                let theta = self.stationary_scale();
                if y == 0.0 {
                    return Ok(if nu < 1.0 {
                        f64::INFINITY
                    } else if nu == 1.0 {
                        1.0 / theta
                    } else {
                        0.0
                    });
                }
                let ln_p = (nu - 1.0) * y.ln() - y / theta - ln_gamma(nu) - nu * theta.ln();
                Ok(ln_p.exp())
            }
        }
    }

    /// Stationary cumulative distribution of the latent variable.
    pub fn stationary_latent_cdf(&self, y: f64) -> f64 {
        match self.kind {
            ModelKind::ExpOu | ModelKind::Ou => {
                let sd = self.stationary_scale().sqrt();
                0.5 * erfc(-(y - self.fixed_point()) / (sd * std::f64::consts::SQRT_2))
            }
            ModelKind::Heston => {
                if y <= 0.0 {
                    0.0
                } else {
                    gamma_lr(self.heston_shape(), y / self.stationary_scale())
                }
            }
        }
    }

    /// Flat `key = value` rendering, readable by [`ModelConfig::parse`].
    pub fn to_config_string(&self) -> String {
        format!(
            "model = {}\nk = {:e}\nalpha = {:e}\nm = {:e}\n",
            self.kind, self.params.k, self.params.alpha, self.params.m
        )
    }
}

/// A possibly partial model configuration read from flags or a flat
/// `key = value` file. Later sources override earlier ones through [`ModelConfig::overlay`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut cfg = ModelConfig::default();
        for (key, value) in &map {
            match key.as_str() {
                "model" => cfg.kind = Some(value.parse()?),
                "k" => cfg.k = Some(parse_number(key, value)?),
                "alpha" => cfg.alpha = Some(parse_number(key, value)?),
                "m" => cfg.m = Some(parse_number(key, value)?),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        Self {
            kind: Some(spec.kind),
            k: Some(spec.params.k),
            alpha: Some(spec.params.alpha),
            m: Some(spec.params.m),
        }
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: &ModelConfig) -> Self {
        Self {
            kind: other.kind.or(self.kind),
            k: other.k.or(self.k),
            alpha: other.alpha.or(self.alpha),
            m: other.m.or(self.m),
        }
    }

    pub fn resolve(&self) -> Result<ModelSpec> {
        let kind = self.kind.ok_or_else(|| Error::Config("no model given".into()))?;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("parameter `{name}` missing for model {kind}")))
        };
        ModelSpec::new(kind, need(self.k, "k")?, need(self.alpha, "alpha")?, need(self.m, "m")?)
    }
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}` is not a number: `{value}`")))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}
