//! Volatility estimators.
//!
//! Three baselines (`gbm`, `prop`, `decon`) and the maximum-likelihood filter
//! (`ml`). The filter slides a causal window of `s` returns over the series.
//! For each window it draws `I` Gaussian realizations of the return noise,
//! deconvolves the returns with each one to obtain a candidate latent path,
//! and keeps the candidate with the largest truncated path log-likelihood
//!
//! ```text
//! -1/2 sum [dX(t) / f(Y(t))]^2  -  1/2 sum [(Y(t+1) - Y(t)) / h(Y(t)) + g(Y(t)) / h(Y(t))]^2
//! ```
//!
//! (daily step, normalization and Jacobian terms dropped). The estimate at
//! time `t` is the volatility of the winning candidate at the window end.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::rng::{derive_seed, stream_rng, StreamRng, DEFAULT_SEED, TAG_ARTIFICIAL, TAG_DECON, TAG_WINDOW};

/// Noise draws smaller than this in magnitude are redrawn before deconvolution.
pub const MIN_ABS_NOISE: f64 = 1e-12;

/// Mean of `|N(0,1)|`, i.e. `sqrt(2/pi)`.
pub const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

/// Zero-mean daily log-return increments.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dx: Vec<f64>,
    pub label: String,
    /// Date of each increment, when the series came from dated prices.
    pub dates: Option<Vec<String>>,
}

impl ReturnSeries {
    pub fn new(dx: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = dx.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("return {i} is not finite: {}", dx[i])));
        }
        Ok(Self {
            dx,
            label: label.into(),
            dates: None,
        })
    }

    /// Removes the sample mean.
    pub fn zero_mean(mut dx: Vec<f64>, label: impl Into<String>) -> Self {
        if !dx.is_empty() {
            let mean = dx.iter().sum::<f64>() / dx.len() as f64;
            dx.iter_mut().for_each(|v| *v -= mean);
        }
        Self {
            dx,
            label: label.into(),
            dates: None,
        }
    }

    pub fn with_dates(mut self, dates: Vec<String>) -> Result<Self> {
        if dates.len() != self.dx.len() {
            return Err(Error::Validation(format!(
                "{} dates for {} returns",
                dates.len(),
                self.dx.len()
            )));
        }
        self.dates = Some(dates);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Gbm,
    Prop,
    Decon,
    Ml,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Gbm => "gbm",
            EstimatorKind::Prop => "prop",
            EstimatorKind::Decon => "decon",
            EstimatorKind::Ml => "ml",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gbm" => Ok(EstimatorKind::Gbm),
            "prop" => Ok(EstimatorKind::Prop),
            "decon" => Ok(EstimatorKind::Decon),
            "ml" => Ok(EstimatorKind::Ml),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator `{other}` (expected gbm, prop, decon or ml)"
            ))),
        }
    }
}

/// A per-day volatility estimate aligned with its source [`ReturnSeries`].
///
/// Index `t` refers to return `t`. The first `start` entries are absent
/// (the ML filter needs a full window before it can report).
#[derive(Debug, Clone, PartialEq)]
pub struct VolSeries {
    pub estimator: EstimatorKind,
    pub spec: Option<ModelSpec>,
    pub start: usize,
    pub values: Vec<f64>,
    pub dates: Option<Vec<String>>,
}

impl VolSeries {
    pub fn new(estimator: EstimatorKind, spec: Option<ModelSpec>, start: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(format!(
                "volatility {} must be finite and non-negative, got {}",
                start + i,
                values[i]
            )));
        }
        if estimator == EstimatorKind::Ml && spec.is_none() {
            return Err(Error::Validation("ml volatility requires a model spec".into()));
        }
        Ok(Self {
            estimator,
            spec,
            start,
            values,
            dates: None,
        })
    }

    /// Total length including absent leading entries.
    pub fn len(&self) -> usize {
        self.start + self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.start).and_then(|i| self.values.get(i).copied())
    }

    /// Present values with their indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.start + i, v))
    }

    pub(crate) fn inherit_dates(mut self, returns: &ReturnSeries) -> Self {
        self.dates = returns.dates.clone();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlConfig {
    /// Window length `s` in days.
    pub window: usize,
    /// Candidates drawn per window, `I`.
    pub iterations: usize,
    pub seed: u64,
    /// Lower bound applied to `|dX / dW1|` before inverting `f`.
    pub vol_floor: f64,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            window: 10,
            iterations: 100_000,
            seed: DEFAULT_SEED,
            vol_floor: 1e-6,
        }
    }
}

impl MlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "window must be >= 2, got {}",
                self.window
            )));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.vol_floor.is_finite() && self.vol_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "vol_floor must be positive, got {}",
                self.vol_floor
            )));
        }
        Ok(())
    }
}

/// Constant-volatility estimate `sqrt(<dX^2> / dt)` with `dt` one day.
pub fn sigma_gbm(returns: &ReturnSeries) -> Result<f64> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    Ok((returns.dx.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
}

/// `|dX(t)| / <|dW1|>`.
pub fn sigma_prop(returns: &ReturnSeries) -> VolSeries {
    let values = returns.dx.iter().map(|v| v.abs() / MEAN_ABS_NORMAL).collect();
    VolSeries {
        estimator: EstimatorKind::Prop,
        spec: None,
        start: 0,
        values,
        dates: returns.dates.clone(),
    }
}

/// `|dX / dW|` for a single noise realization.
#[inline]
pub fn deconvolve(dx: f64, dw: f64) -> f64 {
    (dx / dw).abs()
}

#[inline]
fn draw_noise(rng: &mut StreamRng) -> f64 {
    loop {
        let e: f64 = rng.sample(StandardNormal);
        if e.abs() >= MIN_ABS_NOISE {
            return e;
        }
    }
}

/// `|dX(t) / dW1(t)|` with one fresh standard normal per day.
pub fn sigma_decon(returns: &ReturnSeries, seed: u64) -> VolSeries {
    let mut rng = stream_rng(seed, TAG_DECON);
    let values = returns
        .dx
        .iter()
        .map(|&dx| deconvolve(dx, draw_noise(&mut rng)))
        .collect();
    VolSeries {
        estimator: EstimatorKind::Decon,
        spec: None,
        start: 0,
        values,
        dates: returns.dates.clone(),
    }
}

/// Fills `out` with the candidate latent path `f^-1(max(|dX/dW|, floor))`.
/// Returns how many points hit the floor.
#[inline]
fn fill_candidate(returns: &[f64], spec: &ModelSpec, noise: &[f64], vol_floor: f64, out: &mut [f64]) -> Result<usize> {
    let mut floored = 0;
    for ((o, &dx), &dw) in out.iter_mut().zip(returns).zip(noise) {
        let mut v = deconvolve(dx, dw);
        if v < vol_floor {
            v = vol_floor;
            floored += 1;
        }
        *o = spec.f_inv(v)?;
    }
    Ok(floored)
}

/// Candidate latent path for one window and one noise realization.
pub fn candidate_path(returns: &[f64], spec: &ModelSpec, noise: &[f64], vol_floor: f64) -> Result<Vec<f64>> {
    if returns.len() != noise.len() {
        return Err(Error::InvalidParameter(format!(
            "window of {} returns with {} noise draws",
            returns.len(),
            noise.len()
        )));
    }
    if !(vol_floor > 0.0) {
        return Err(Error::InvalidParameter("vol_floor must be positive".into()));
    }
    if let Some(dw) = noise.iter().find(|dw| dw.abs() < MIN_ABS_NOISE) {
        return Err(Error::InvalidParameter(format!("noise draw {dw} too close to zero")));
    }
    let mut out = vec![0.0; returns.len()];
    fill_candidate(returns, spec, noise, vol_floor, &mut out)?;
    Ok(out)
}

/// Truncated path log-likelihood, accumulated term by term. Returns `None`
/// as soon as the running total drops below `bound`; all terms are
/// non-positive so such a path can no longer win.
#[inline]
fn score_bounded(y: &[f64], returns: &[f64], spec: &ModelSpec, bound: f64) -> Result<Option<f64>> {
    let mut total = 0.0;
    for (tau, &dx) in returns.iter().enumerate() {
        let y0 = y[tau];
        let f = spec.f(y0)?;
        let h = spec.h(y0)?;
        if h == 0.0 || f == 0.0 {
            return Err(Error::SingularLikelihood(format!("f or h vanishes at y = {y0}")));
        }
        let e1 = dx / f;
        let e2 = (y[tau + 1] - y0) / h + spec.g(y0) / h;
        total -= 0.5 * (e1 * e1 + e2 * e2);
        if total < bound {
            return Ok(None);
        }
    }
    Ok(Some(total))
}

/// Log-probability score of a latent path given the returns, up to terms
/// that do not depend on the path. `y_path` has one more entry than
/// `returns`; return `t` pairs with `y_path[t]` and the latent increment
/// `y_path[t+1] - y_path[t]`. Larger is more probable.
pub fn log_likelihood(y_path: &[f64], returns: &[f64], spec: &ModelSpec) -> Result<f64> {
    if y_path.len() != returns.len() + 1 {
        return Err(Error::InvalidParameter(format!(
            "latent path of length {} needs {} returns, got {}",
            y_path.len(),
            y_path.len().saturating_sub(1),
            returns.len()
        )));
    }
    Ok(score_bounded(y_path, returns, spec, f64::NEG_INFINITY)?.expect("unbounded score"))
}

/// The sequence of candidate latent paths drawn for one window.
///
/// [`estimate_window`] consumes exactly this stream, so replaying it with
/// the same seed reproduces every candidate the search considered.
pub struct CandidateStream<'a> {
    returns: &'a [f64],
    spec: ModelSpec,
    vol_floor: f64,
    rng: StreamRng,
    noise: Vec<f64>,
}

impl<'a> CandidateStream<'a> {
    pub fn new(returns: &'a [f64], spec: &ModelSpec, vol_floor: f64, seed: u64) -> Self {
        Self {
            returns,
            spec: *spec,
            vol_floor,
            rng: stream_rng(seed, TAG_WINDOW),
            noise: vec![0.0; returns.len()],
        }
    }

    /// Writes the next candidate into `out`, returning the number of floored points.
    pub fn fill_next(&mut self, out: &mut [f64]) -> Result<usize> {
        for e in self.noise.iter_mut() {
            *e = draw_noise(&mut self.rng);
        }
        fill_candidate(self.returns, &self.spec, &self.noise, self.vol_floor, out)
    }
}

impl Iterator for CandidateStream<'_> {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut out = vec![0.0; self.returns.len()];
        Some(self.fill_next(&mut out).map(|_| out))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    /// Winning latent path, one entry per return in the window.
    pub path: Vec<f64>,
    pub score: f64,
    /// Index of the winner in the candidate stream.
    pub winner: usize,
    pub floored_points: usize,
    pub rejected: usize,
}

/// Best of `cfg.iterations` candidates for one window of `cfg.window` returns.
/// Ties go to the earliest candidate.
pub fn estimate_window(returns: &[f64], spec: &ModelSpec, cfg: &MlConfig, seed: u64) -> Result<WindowEstimate> {
    cfg.validate()?;
    if returns.len() != cfg.window {
        return Err(Error::InvalidParameter(format!(
            "window holds {} returns, expected {}",
            returns.len(),
            cfg.window
        )));
    }
    let scored = &returns[..returns.len() - 1];
    let mut stream = CandidateStream::new(returns, spec, cfg.vol_floor, seed);
    let mut candidate = vec![0.0; returns.len()];
    let mut best = vec![0.0; returns.len()];
    let mut best_score = f64::NEG_INFINITY;
    let mut winner = None;
    let mut floored_points = 0;
    let mut rejected = 0;

    for i in 0..cfg.iterations {
        floored_points += stream.fill_next(&mut candidate)?;
        match score_bounded(&candidate, scored, spec, best_score) {
            Ok(Some(score)) if winner.is_none() || score > best_score => {
                best_score = score;
                winner = Some(i);
                best.copy_from_slice(&candidate);
            }
            Ok(_) => {}
            Err(Error::SingularLikelihood(_)) => rejected += 1,
            Err(e) => return Err(e),
        }
    }

    let winner =
        winner.ok_or_else(|| Error::EstimationFailed(format!("all {} candidates were singular", cfg.iterations)))?;
    Ok(WindowEstimate {
        path: best,
        score: best_score,
        winner,
        floored_points,
        rejected,
    })
}

/// Counters accumulated over an [`estimate_series`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MlDiagnostics {
    pub windows: usize,
    pub candidate_points: usize,
    pub floored_points: usize,
    pub rejected_candidates: usize,
}

impl MlDiagnostics {
    pub fn floored_fraction(&self) -> f64 {
        if self.candidate_points == 0 {
            0.0
        } else {
            self.floored_points as f64 / self.candidate_points as f64
        }
    }
}

/// Seed of the window ending at index `t`.
pub fn window_seed(master: u64, t: usize) -> u64 {
    derive_seed(master, t as u64)
}

/// Causal ML volatility: `sigma(t)` comes from the window `[t-s+1, t]`.
pub fn estimate_series(returns: &ReturnSeries, spec: &ModelSpec, cfg: &MlConfig) -> Result<VolSeries> {
    estimate_series_with_diagnostics(returns, spec, cfg).map(|(v, _)| v)
}

/// As [`estimate_series`], also reporting floor and rejection counts.
///
/// Windows run on the current rayon pool; the output does not depend on
/// the number of threads.
pub fn estimate_series_with_diagnostics(
    returns: &ReturnSeries,
    spec: &ModelSpec,
    cfg: &MlConfig,
) -> Result<(VolSeries, MlDiagnostics)> {
    cfg.validate()?;
    let s = cfg.window;
    let n = returns.len();
    if n < s {
        return Err(Error::InsufficientData { needed: s, got: n });
    }
    let dx = &returns.dx;
    let windows: Vec<WindowEstimate> = (s - 1..n)
        .into_par_iter()
        .map(|t| estimate_window(&dx[t + 1 - s..=t], spec, cfg, window_seed(cfg.seed, t)))
        .collect::<Result<_>>()?;

    let mut diag = MlDiagnostics {
        windows: windows.len(),
        candidate_points: windows.len() * cfg.iterations * s,
        ..Default::default()
    };
    let mut values = Vec::with_capacity(windows.len());
    for w in &windows {
        diag.floored_points += w.floored_points;
        diag.rejected_candidates += w.rejected;
        values.push(spec.volatility(w.path[s - 1])?);
    }
    let vol = VolSeries::new(EstimatorKind::Ml, Some(*spec), s - 1, values)?.inherit_dates(returns);
    Ok((vol, diag))
}

/// `sigma(t) * eps(t)` for every present `t`. Entry `i` of the result
/// corresponds to index `vol.start + i`.
pub fn artificial_returns(vol: &VolSeries, seed: u64) -> ReturnSeries {
    let mut rng = stream_rng(seed, TAG_ARTIFICIAL);
    let dx = vol
        .values
        .iter()
        .map(|&s| {
            let e: f64 = rng.sample(StandardNormal);
            s * e
        })
        .collect();
    ReturnSeries {
        dx,
        label: format!("artificial-{}", vol.estimator),
        dates: vol.dates.as_ref().map(|d| d[vol.start..].to_vec()),
    }
}
