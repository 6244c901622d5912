//! Diagnostics: densities, correlations, leverage, first-passage times,
//! predictive median regressions and the variance-reduction ratio.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::VolSeries;
use crate::table::{fmt_f64, fmt_opt, AnalysisTable};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinScale {
    Linear,
    Log,
}

impl FromStr for BinScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(BinScale::Linear),
            "log" => Ok(BinScale::Log),
            other => Err(Error::InvalidParameter(format!("unknown bin scale `{other}`"))),
        }
    }
}

impl fmt::Display for BinScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinScale::Linear => "linear",
            BinScale::Log => "log",
        })
    }
}

/// Normalized histogram. Densities are per unit of the sample value, in
/// both linear and log binning.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub scale: BinScale,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
    /// Samples that fell outside the binned range.
    pub outside: usize,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| match self.scale {
                BinScale::Linear => 0.5 * (w[0] + w[1]),
                BinScale::Log => (w[0] * w[1]).sqrt(),
            })
            .collect()
    }

    pub fn to_table(&self) -> AnalysisTable {
        let mut t = AnalysisTable::new("pdf", &["center", "lower", "upper", "count", "density"])
            .with_meta("scale", self.scale)
            .with_meta("bins", self.counts.len())
            .with_meta("samples", self.counts.iter().sum::<usize>() + self.outside)
            .with_meta("outside", self.outside);
        for (i, c) in self.centers().into_iter().enumerate() {
            t.push_row(vec![
                fmt_f64(c),
                fmt_f64(self.edges[i]),
                fmt_f64(self.edges[i + 1]),
                self.counts[i].to_string(),
                fmt_f64(self.density[i]),
            ]);
        }
        t
    }
}

/// Histogram over the sample range.
pub fn pdf(samples: &[f64], bins: usize, scale: BinScale) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        match scale {
            BinScale::Linear => (lo - 0.5, hi + 0.5),
            BinScale::Log => (lo / std::f64::consts::E, hi * std::f64::consts::E),
        }
    };
    pdf_in_range(samples, bins, scale, lo, hi)
}

/// Histogram over `[lo, hi]`; the top edge is inclusive.
pub fn pdf_in_range(samples: &[f64], bins: usize, scale: BinScale, lo: f64, hi: f64) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Validation(format!("non-finite sample {x}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    if scale == BinScale::Log {
        if let Some(x) = samples.iter().find(|&&x| x <= 0.0) {
            return Err(Error::Domain(format!(
                "log-scale histogram needs positive samples, got {x}"
            )));
        }
        if lo <= 0.0 {
            return Err(Error::Domain("log-scale range must be positive".into()));
        }
    }
    let to_axis = |x: f64| match scale {
        BinScale::Linear => x,
        BinScale::Log => x.ln(),
    };
    let (a, b) = (to_axis(lo), to_axis(hi));
    let width = (b - a) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| {
            let u = if i == bins { b } else { a + width * i as f64 };
            match scale {
                BinScale::Linear => u,
                BinScale::Log => u.exp(),
            }
        })
        .collect();
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    for &x in samples {
        if x < lo || x > hi {
            outside += 1;
            continue;
        }
        let idx = (((to_axis(x) - a) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let inside = (samples.len() - outside) as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| {
            if inside > 0.0 {
                c as f64 / (inside * (w[1] - w[0]))
            } else {
                0.0
            }
        })
        .collect();
    Ok(Histogram {
        scale,
        edges,
        counts,
        density,
        outside,
    })
}

/// Normalized autocorrelation `C(tau)` for `tau = 0..=max_lag`, using the
/// biased `1/N` estimator at every lag.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: n,
        });
    }
    let mu = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - mu).collect();
    let c0 = centered.iter().map(|x| x * x).sum::<f64>();
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|lag| {
            if lag == 0 {
                return 1.0;
            }
            let c: f64 = centered[lag..].iter().zip(&centered).map(|(a, b)| a * b).sum();
            c / c0
        })
        .collect())
}

pub fn acf_table(acf: &[f64]) -> AnalysisTable {
    let mut t = AnalysisTable::new("acf", &["lag", "c"])
        .with_meta("max_lag", acf.len().saturating_sub(1))
        .with_meta("normalization", "biased-1/N");
    for (lag, c) in acf.iter().enumerate() {
        t.push_row(vec![lag.to_string(), fmt_f64(*c)]);
    }
    t
}

/// Exponential decay rate of an autocorrelation curve: minus the
/// least-squares slope of `ln C(tau)` against `tau` over `0..=fit_lags`.
pub fn decay_rate(acf: &[f64], fit_lags: usize) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = acf
        .iter()
        .take(fit_lags + 1)
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(lag, &c)| (lag as f64, c.ln()))
        .unzip();
    Ok(-fit_line(&xs, &ys)?.slope)
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when only two points were fitted.
    pub slope_se: f64,
    pub n: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let (xs, ys) = (&xs[..n], &ys[..n]);
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ssr / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RegressionFit {
        slope,
        intercept,
        slope_se,
        n,
    })
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeveragePoint {
    pub lag: i64,
    pub value: f64,
    /// Standard error assuming uncorrelated products.
    pub std_err: f64,
    pub count: usize,
}

/// `L(tau) = <dX(t) sigma(t+tau)^2> / <sigma^2>^2` for `tau` in
/// `-max_lag..=max_lag`. `dx` and `sigma` are aligned day by day.
pub fn leverage(dx: &[f64], sigma: &[f64], max_lag: usize) -> Result<Vec<LeveragePoint>> {
    let n = dx.len();
    if sigma.len() != n {
        return Err(Error::InvalidParameter(format!(
            "returns and volatility are not aligned: {} vs {}",
            n,
            sigma.len()
        )));
    }
    if n <= max_lag {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: n,
        });
    }
    let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    let norm = mean(&sq).powi(2);
    if !(norm > 0.0) {
        return Err(Error::Degenerate("volatility is identically zero".into()));
    }
    let max_lag = max_lag as i64;
    Ok((-max_lag..=max_lag)
        .map(|lag| {
            let (d, s) = if lag >= 0 {
                let l = lag as usize;
                (&dx[..n - l], &sq[l..])
            } else {
                let l = (-lag) as usize;
                (&dx[l..], &sq[..n - l])
            };
            let prods: Vec<f64> = d.iter().zip(s).map(|(a, b)| a * b).collect();
            let m = mean(&prods);
            let se = (variance(&prods) / prods.len() as f64).sqrt();
            LeveragePoint {
                lag,
                value: m / norm,
                std_err: se / norm,
                count: prods.len(),
            }
        })
        .collect())
}

pub fn leverage_table(points: &[LeveragePoint]) -> AnalysisTable {
    let max_lag = points.iter().map(|p| p.lag).max().unwrap_or(0);
    let mut t = AnalysisTable::new("leverage", &["lag", "l", "std_err", "count"]).with_meta("max_lag", max_lag);
    for p in points {
        t.push_row(vec![
            p.lag.to_string(),
            fmt_f64(p.value),
            fmt_f64(p.std_err),
            p.count.to_string(),
        ]);
    }
    t
}

/// Start indices below `lambda` and the number of steps until `|dX|` next
/// reaches `lambda`; `None` when the series ends first (censored).
pub fn passage_times(abs_dx: &[f64], lambda: f64) -> Vec<(usize, Option<usize>)> {
    let mut next_hit: Option<usize> = None;
    let mut out = Vec::new();
    for t in (0..abs_dx.len()).rev() {
        if abs_dx[t] >= lambda {
            next_hit = Some(t);
        } else {
            out.push((t, next_hit.map(|h| h - t)));
        }
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfptStatus {
    Ok,
    /// Threshold below every sample: nothing starts below it.
    NoStarts,
    /// Every start runs off the end of the series.
    AllCensored,
}

impl fmt::Display for MfptStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MfptStatus::Ok => "ok",
            MfptStatus::NoStarts => "no-starts",
            MfptStatus::AllCensored => "all-censored",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfptPoint {
    /// Dimensionless threshold `lambda / sigma_s`.
    pub l: f64,
    pub lambda: f64,
    pub mfpt: Option<f64>,
    pub completed: usize,
    pub censored: usize,
    /// Days with `|dX| >= lambda`.
    pub exceedances: usize,
    pub status: MfptStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfptCurve {
    pub sigma_s: f64,
    pub points: Vec<MfptPoint>,
}

/// 30 logarithmically spaced thresholds on `[0.1, 10]`.
pub fn default_thresholds() -> Vec<f64> {
    log_grid(0.1, 10.0, 30)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Mean first-passage time of `|dX|` above `lambda = L * sigma_s`, for each `L`.
///
/// Every day below the threshold is a start. Starts that never see a
/// crossing are censored: counted, but left out of the mean.
pub fn mfpt(abs_dx: &[f64], sigma_s: f64, thresholds: &[f64]) -> Result<MfptCurve> {
    mfpt_pooled(&[abs_dx], sigma_s, thresholds)
}

/// As [`mfpt`], pooling passages from independent series. No passage
/// crosses from one series into the next.
pub fn mfpt_pooled(segments: &[&[f64]], sigma_s: f64, thresholds: &[f64]) -> Result<MfptCurve> {
    if !(sigma_s.is_finite() && sigma_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_s must be positive, got {sigma_s}"
        )));
    }
    if thresholds.iter().any(|&l| !(l > 0.0)) || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "thresholds must be positive and ascending".into(),
        ));
    }
    let points = thresholds
        .iter()
        .map(|&l| {
            let lambda = l * sigma_s;
            let mut total = 0usize;
            let mut completed = 0;
            let mut censored = 0;
            let mut exceedances = 0;
            for abs_dx in segments {
                let mut next_hit: Option<usize> = None;
                for t in (0..abs_dx.len()).rev() {
                    if abs_dx[t] >= lambda {
                        next_hit = Some(t);
                        exceedances += 1;
                    } else if let Some(h) = next_hit {
                        total += h - t;
                        completed += 1;
                    } else {
                        censored += 1;
                    }
                }
            }
            let status = match (completed, censored) {
                (0, 0) => MfptStatus::NoStarts,
                (0, _) => MfptStatus::AllCensored,
                _ => MfptStatus::Ok,
            };
            MfptPoint {
                l,
                lambda,
                mfpt: (completed > 0).then(|| total as f64 / completed as f64),
                completed,
                censored,
                exceedances,
                status,
            }
        })
        .collect();
    Ok(MfptCurve { sigma_s, points })
}

impl MfptCurve {
    pub fn to_table(&self) -> AnalysisTable {
        let mut t = AnalysisTable::new(
            "mfpt",
            &["l", "lambda", "mfpt", "completed", "censored", "exceedances", "status"],
        )
        .with_meta("sigma_s", fmt_f64(self.sigma_s))
        .with_meta("start_set", "all-days-below-threshold")
        .with_meta("censoring", "excluded-from-mean");
        for p in &self.points {
            t.push_row(vec![
                fmt_f64(p.l),
                fmt_f64(p.lambda),
                fmt_opt(p.mfpt),
                p.completed.to_string(),
                p.censored.to_string(),
                p.exceedances.to_string(),
                p.status.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerLawRange {
    BelowOne,
    AboveOne,
}

/// Points resting on fewer crossings than this are left out of power-law fits.
pub const MIN_EXCEEDANCES: usize = 10;

impl MfptPoint {
    /// Enough crossings, and completed passages outnumber censored ones.
    pub fn is_reliable(&self) -> bool {
        self.mfpt.is_some() && self.completed >= self.censored && self.exceedances >= MIN_EXCEEDANCES
    }
}

/// `MFPT ~ c L^beta`: least squares of `ln MFPT` on `ln L` within the range.
/// The slope is `beta`.
pub fn power_law_fit(curve: &MfptCurve, range: PowerLawRange) -> Result<RegressionFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter(|p| match range {
            PowerLawRange::BelowOne => p.l < 1.0,
            PowerLawRange::AboveOne => p.l > 1.0,
        })
        .filter(|p| p.is_reliable())
        .map(|p| (p.l.ln(), p.mfpt.unwrap().ln()))
        .unzip();
    fit_line(&xs, &ys)
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBin {
    pub center: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
}

/// Per-bin medians and quartiles of `ln|dX|` against `ln sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMedianCurve {
    pub bins: Vec<MedianBin>,
    pub min_count: usize,
}

impl BinnedMedianCurve {
    pub fn to_table(&self, fit: &RegressionFit) -> AnalysisTable {
        let mut t = AnalysisTable::new("median-regression", &["ln_sigma", "median", "q1", "q3", "count"])
            .with_meta("min_count", self.min_count)
            .with_meta("slope", fmt_f64(fit.slope))
            .with_meta("intercept", fmt_f64(fit.intercept))
            .with_meta("slope_se", fmt_f64(fit.slope_se));
        for b in &self.bins {
            t.push_row(vec![
                fmt_f64(b.center),
                fmt_f64(b.median),
                fmt_f64(b.q1),
                fmt_f64(b.q3),
                b.count.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MedianRegressionConfig {
    pub n_bins: usize,
    pub min_count: usize,
}

impl Default for MedianRegressionConfig {
    fn default() -> Self {
        Self {
            n_bins: 20,
            min_count: 30,
        }
    }
}

/// Bins the pairs by `ln sigma`, takes medians of `ln|dX|` per bin and fits
/// a line through the bin medians.
pub fn conditional_median_regression(
    ln_sigma: &[f64],
    ln_abs_dx: &[f64],
    cfg: MedianRegressionConfig,
) -> Result<(BinnedMedianCurve, RegressionFit)> {
    if ln_sigma.len() != ln_abs_dx.len() {
        return Err(Error::InvalidParameter("regression inputs are not aligned".into()));
    }
    if cfg.n_bins < 2 {
        return Err(Error::InvalidParameter("need at least two bins".into()));
    }
    if ln_sigma.iter().chain(ln_abs_dx).any(|v| !v.is_finite()) {
        return Err(Error::Validation("regression inputs must be finite".into()));
    }
    if ln_sigma.is_empty() {
        return Err(Error::InsufficientData { needed: 2, got: 0 });
    }
    let (lo, hi) = ln_sigma
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if !(lo < hi) {
        return Err(Error::Degenerate("all points fall in one bin".into()));
    }
    let width = (hi - lo) / cfg.n_bins as f64;
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); cfg.n_bins];
    for (&x, &y) in ln_sigma.iter().zip(ln_abs_dx) {
        let idx = (((x - lo) / width) as usize).min(cfg.n_bins - 1);
        buckets[idx].push(y);
    }
    let mut bins = Vec::new();
    for (i, mut ys) in buckets.into_iter().enumerate() {
        if ys.len() < cfg.min_count.max(1) {
            continue;
        }
        ys.sort_by(f64::total_cmp);
        bins.push(MedianBin {
            center: lo + width * (i as f64 + 0.5),
            median: quantile_sorted(&ys, 0.5),
            q1: quantile_sorted(&ys, 0.25),
            q3: quantile_sorted(&ys, 0.75),
            count: ys.len(),
        });
    }
    if bins.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} bin(s) hold at least {} points",
            bins.len(),
            cfg.min_count
        )));
    }
    let xs: Vec<f64> = bins.iter().map(|b| b.center).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.median).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok((
        BinnedMedianCurve {
            bins,
            min_count: cfg.min_count,
        },
        fit,
    ))
}

/// `(ln sigma(t), ln|dX(t+h)|)` for every `t` where both are defined.
/// Zero returns and zero volatilities are skipped.
pub fn predictive_pairs(dx: &[f64], sigma: &[f64], h: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if dx.len() != sigma.len() {
        return Err(Error::InvalidParameter("returns and volatility are not aligned".into()));
    }
    if h < 1 || h >= dx.len() {
        return Err(Error::InvalidParameter(format!("horizon {h} outside 1..{}", dx.len())));
    }
    Ok((0..dx.len() - h)
        .filter(|&t| sigma[t] > 0.0 && dx[t + h] != 0.0)
        .map(|t| (sigma[t].ln(), dx[t + h].abs().ln()))
        .unzip())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub h: usize,
    pub gamma: f64,
    pub slope_se: f64,
}

/// Slope `gamma(h)` of the conditional median of `ln|dX(t+h)|` on `ln sigma(t)`.
pub fn gamma_horizon_scan(
    dx: &[f64],
    sigma: &[f64],
    horizons: &[usize],
    cfg: MedianRegressionConfig,
) -> Result<Vec<GammaPoint>> {
    horizons
        .iter()
        .map(|&h| {
            let (x, y) = predictive_pairs(dx, sigma, h)?;
            let (_, fit) = conditional_median_regression(&x, &y, cfg)?;
            Ok(GammaPoint {
                h,
                gamma: fit.slope,
                slope_se: fit.slope_se,
            })
        })
        .collect()
}

pub fn gamma_table(scan: &[GammaPoint]) -> AnalysisTable {
    let mut t = AnalysisTable::new("gamma-scan", &["h", "gamma", "slope_se"]).with_meta("horizons", scan.len());
    for p in scan {
        t.push_row(vec![p.h.to_string(), fmt_f64(p.gamma), fmt_f64(p.slope_se)]);
    }
    t
}

/// `gamma(h) = a ln h + b`, optionally fitted separately below and above a split horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaFit {
    Single(RegressionFit),
    Split {
        split_h: f64,
        short: RegressionFit,
        long: RegressionFit,
    },
}

impl GammaFit {
    pub fn to_table(&self) -> AnalysisTable {
        let mut t = AnalysisTable::new("gamma-loglinear", &["segment", "a", "b", "a_se", "points"]);
        let mut row = |name: &str, f: &RegressionFit| {
            t.push_row(vec![
                name.to_string(),
                fmt_f64(f.slope),
                fmt_f64(f.intercept),
                fmt_f64(f.slope_se),
                f.n.to_string(),
            ])
        };
        match self {
            GammaFit::Single(f) => row("all", f),
            GammaFit::Split { short, long, .. } => {
                row("short", short);
                row("long", long);
            }
        }
        if let GammaFit::Split { split_h, .. } = self {
            t.set_meta("split_h", split_h);
        }
        t
    }
}

/// Fits `gamma = a ln h + b`. With a split, horizons `h < split_h` form the
/// short segment and `h >= split_h` the long one.
pub fn fit_gamma_loglinear(scan: &[(f64, f64)], split_h: Option<f64>) -> Result<GammaFit> {
    let fit = |pts: &[&(f64, f64)], segment: &str| -> Result<RegressionFit> {
        let xs: Vec<f64> = pts.iter().map(|(h, _)| h.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, g)| *g).collect();
        fit_line(&xs, &ys).map_err(|e| match e {
            Error::InsufficientData { needed, got } => {
                Error::InvalidParameter(format!("{segment} segment has {got} horizon(s), need {needed}"))
            }
            other => other,
        })
    };
    if scan.iter().any(|(h, _)| !(*h > 0.0)) {
        return Err(Error::InvalidParameter("horizons must be positive".into()));
    }
    match split_h {
        None => Ok(GammaFit::Single(fit(&scan.iter().collect::<Vec<_>>(), "single")?)),
        Some(split) => {
            let (short, long): (Vec<_>, Vec<_>) = scan.iter().partition(|(h, _)| *h < split);
            Ok(GammaFit::Split {
                split_h: split,
                short: fit(&short, "short")?,
                long: fit(&long, "long")?,
            })
        }
    }
}

/// `Var(sigma_est) / Var(sigma_decon)` over the indices both series cover.
pub fn variance_ratio(est: &VolSeries, decon: &VolSeries) -> Result<f64> {
    let start = est.start.max(decon.start);
    let end = est.len().min(decon.len());
    if end < start + 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: end.saturating_sub(start),
        });
    }
    let a: Vec<f64> = (start..end).map(|t| est.get(t).unwrap()).collect();
    let b: Vec<f64> = (start..end).map(|t| decon.get(t).unwrap()).collect();
    let vb = variance(&b);
    if !(vb > 0.0) {
        return Err(Error::Degenerate("deconvolved volatility has zero variance".into()));
    }
    Ok(variance(&a) / vb)
}
