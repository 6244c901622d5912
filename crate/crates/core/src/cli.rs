//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 bad input data, 3 failed computation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::estimator::{
    artificial_returns, estimate_series_with_diagnostics, sigma_decon, sigma_gbm, sigma_prop, EstimatorKind, MlConfig,
    ReturnSeries, VolSeries,
};
use crate::io::{load_prices, load_series, to_returns, TableSeries};
use crate::model::{ModelConfig, ModelKind, ModelSpec};
use crate::rng::DEFAULT_SEED;
use crate::sim::{simulate_path, InitialState, SimConfig, SimPath};
use crate::stats::{
    self, acf_table, fit_gamma_loglinear, gamma_horizon_scan, gamma_table, leverage_table, log_grid, BinScale,
    MedianRegressionConfig,
};
use crate::table::{fmt_f64, parse_f64_field, AnalysisTable};

/// Below this many candidates per window the estimate is mostly noise.
pub const LOW_ITERATIONS: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "volfilter",
    version,
    about = "Stochastic volatility simulation and maximum-likelihood filtering"
)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "VOLFILTER_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads for window-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a (X, Y) path and write it as a table.
    Simulate(SimulateArgs),
    /// Estimate the volatility of a return series.
    Estimate(EstimateArgs),
    /// Densities, autocorrelation, leverage or first-passage times.
    Analyze(AnalyzeArgs),
    /// Predictive median regressions of future return amplitude on volatility.
    Predict(PredictArgs),
    /// Variance of ML estimates relative to deconvolved ones, per model.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// expou, ou or heston.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Named parameter set, e.g. dji-expou.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` file with model, k, alpha, m.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
}

impl ModelArgs {
    fn is_empty(&self) -> bool {
        self.model.is_none()
            && self.preset.is_none()
            && self.config.is_none()
            && self.k.is_none()
            && self.alpha.is_none()
            && self.m.is_none()
    }

    /// Flags override the config file, which overrides the preset. Parameters
    /// still missing come from the DJI preset of the chosen model.
    pub fn resolve(&self) -> Result<ModelSpec, CliError> {
        let mut cfg = ModelConfig::default();
        if let Some(p) = &self.preset {
            cfg = cfg.overlay(&ModelConfig::from_spec(&ModelSpec::preset(p)?));
        }
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg = cfg.overlay(&ModelConfig::parse(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?);
        }
        cfg = cfg.overlay(&ModelConfig {
            kind: self.model,
            k: self.k,
            alpha: self.alpha,
            m: self.m,
        });
        let kind = cfg
            .kind
            .ok_or_else(|| CliError::Usage("no model given: pass --model, --preset or --config".into()))?;
        Ok(ModelConfig::from_spec(&ModelSpec::dji(kind)).overlay(&cfg).resolve()?)
    }
}

#[derive(Debug, Clone, Args)]
#[group(id = "input", multiple = false)]
pub struct InputArgs {
    /// CSV with `date` and `close` columns.
    #[arg(long, group = "input")]
    pub prices: Option<PathBuf>,
    /// Return table written by this tool.
    #[arg(long, group = "input")]
    pub returns: Option<PathBuf>,
    /// Simulated path table; its returns are used.
    #[arg(long, group = "input")]
    pub sim: Option<PathBuf>,
}

enum Input {
    Returns(ReturnSeries),
    Sim(SimPath),
}

impl Input {
    fn returns(&self) -> ReturnSeries {
        match self {
            Input::Returns(r) => r.clone(),
            Input::Sim(p) => p.returns(),
        }
    }
}

impl InputArgs {
    fn load(&self) -> Result<Input, CliError> {
        Ok(if let Some(p) = &self.prices {
            Input::Returns(to_returns(&load_prices(p)?)?)
        } else if let Some(p) = &self.returns {
            Input::Returns(load_series(p)?)
        } else if let Some(p) = &self.sim {
            Input::Sim(load_series(p)?)
        } else {
            return Err(CliError::Usage("no input: pass --prices, --returns or --sim".into()));
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct MlArgs {
    /// Window length s in days.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Candidate paths I per window.
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,
    /// Lower bound on |dX/dW| before inverting f.
    #[arg(long, default_value_t = 1e-6)]
    pub vol_floor: f64,
}

impl MlArgs {
    fn config(&self, seed: u64) -> Result<MlConfig, CliError> {
        let cfg = MlConfig {
            window: self.window,
            iterations: self.iterations,
            seed,
            vol_floor: self.vol_floor,
        };
        cfg.validate()?;
        if cfg.iterations < LOW_ITERATIONS {
            eprintln!(
                "warning: --iterations {} is far below the recommended 100000; estimates will be noisy",
                cfg.iterations
            );
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Initial latent value; drawn from the stationary law when omitted.
    #[arg(long)]
    pub y0: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "ml")]
    pub estimator: EstimatorKind,
    #[command(flatten)]
    pub ml: MlArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    Pdf,
    Acf,
    Leverage,
    Mfpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// The volatility series.
    Vol,
    Returns,
    AbsReturns,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Volatility table; defaults to the true volatility of a `--sim` input.
    #[arg(long)]
    pub vol: Option<PathBuf>,
    /// One or more analyses.
    #[arg(long, value_delimiter = ',', required = true)]
    pub what: Vec<Analysis>,
    /// Series for pdf and acf.
    #[arg(long, value_enum, default_value = "vol")]
    pub series: Target,
    #[arg(long, default_value_t = 500)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value = "linear")]
    pub scale: BinScale,
    /// Replace returns by sigma(t) * eps(t) built from the volatility series.
    #[arg(long)]
    pub artificial: bool,
    /// Stationary volatility for MFPT thresholds; taken from the model when one is given.
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub l_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub l_max: f64,
    #[arg(long, default_value_t = 30)]
    pub l_count: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output file for a single analysis (stdout when omitted).
    #[arg(short, long, conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// Directory receiving `<analysis>.tsv` for each analysis.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Volatility table; defaults to the true volatility of a `--sim` input.
    #[arg(long)]
    pub vol: Option<PathBuf>,
    /// Fit a precomputed `h`/`gamma` table instead of scanning horizons.
    #[arg(long, conflicts_with = "input")]
    pub gamma_table: Option<PathBuf>,
    /// `a..b` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "1..100")]
    pub horizons: String,
    /// Horizons below this form the short segment of the log-linear fit.
    #[arg(long, default_value_t = 7.0, conflicts_with = "no_split")]
    pub split_h: f64,
    /// Fit a single log-linear segment.
    #[arg(long)]
    pub no_split: bool,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value_t = 30)]
    pub min_count: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Models to compare, each with its DJI parameters.
    #[arg(long, value_delimiter = ',', default_value = "expou,ou,heston")]
    pub models: Vec<ModelKind>,
    #[command(flatten)]
    pub ml: MlArgs,
    /// Use the deconvolved series in place of the ML one (ratio 1).
    #[arg(long)]
    pub force_equal: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_data_error() => 2,
            CliError::Lib(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cli.threads)))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Estimate(a) => cmd_estimate(a, cli.seed),
        Command::Analyze(a) => cmd_analyze(a, cli.seed),
        Command::Predict(a) => cmd_predict(a),
        Command::Compare(a) => cmd_compare(a, cli.seed),
    })
}

fn emit(table: &AnalysisTable, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => table.save(p)?,
        None => print!("{}", table.render()),
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs, seed: u64) -> Result<(), CliError> {
    let spec = a.model.resolve()?;
    let mut cfg = SimConfig::new(spec, a.steps, seed).with_dt(a.dt);
    if let Some(y) = a.y0 {
        cfg = cfg.with_y0(InitialState::Value(y));
    }
    emit(&simulate_path(&cfg)?.to_table(), a.out.as_deref())
}

pub fn cmd_estimate(a: &EstimateArgs, seed: u64) -> Result<(), CliError> {
    let returns = a.input.load()?.returns();
    let mut vol = match a.estimator {
        EstimatorKind::Gbm => {
            let s = sigma_gbm(&returns)?;
            VolSeries::new(EstimatorKind::Gbm, None, 0, vec![s; returns.len()])?
        }
        EstimatorKind::Prop => sigma_prop(&returns),
        EstimatorKind::Decon => sigma_decon(&returns, seed),
        EstimatorKind::Ml => {
            let spec = a.model.resolve()?;
            let cfg = a.ml.config(seed)?;
            let (vol, diag) = estimate_series_with_diagnostics(&returns, &spec, &cfg)?;
            let mut t = vol.to_table();
            t.set_meta("window", cfg.window);
            t.set_meta("iterations", cfg.iterations);
            t.set_meta("seed", cfg.seed);
            t.set_meta("vol_floor", fmt_f64(cfg.vol_floor));
            t.set_meta("floored_fraction", fmt_f64(diag.floored_fraction()));
            t.set_meta("rejected_candidates", diag.rejected_candidates);
            return emit(&t, a.out.as_deref());
        }
    };
    vol.dates = returns.dates.clone();
    let mut t = vol.to_table();
    if a.estimator == EstimatorKind::Decon {
        t.set_meta("seed", seed);
    }
    emit(&t, a.out.as_deref())
}

fn load_vol(vol: Option<&Path>, input: &Input) -> Result<Option<VolSeries>, CliError> {
    if let Some(p) = vol {
        return Ok(Some(load_series(p)?));
    }
    match input {
        Input::Sim(path) => Ok(Some(VolSeries::new(
            EstimatorKind::Prop,
            Some(path.config.spec),
            0,
            path.driving_vol().to_vec(),
        )?)),
        Input::Returns(_) => Ok(None),
    }
}

/// Returns and volatility restricted to the indices where both exist.
fn aligned(returns: &ReturnSeries, vol: &VolSeries) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if vol.len() != returns.len() {
        return Err(Error::Validation(format!(
            "volatility has {} entries, returns have {}",
            vol.len(),
            returns.len()
        ))
        .into());
    }
    Ok((returns.dx[vol.start..].to_vec(), vol.values.clone()))
}

pub fn cmd_analyze(a: &AnalyzeArgs, seed: u64) -> Result<(), CliError> {
    if a.what.len() > 1 && a.out_dir.is_none() {
        return Err(CliError::Usage("several analyses need --out-dir".into()));
    }
    let input = a.input.load()?;
    let mut returns = input.returns();
    let vol = load_vol(a.vol.as_deref(), &input)?;
    let need_vol = || {
        vol.as_ref()
            .ok_or_else(|| CliError::Usage("this analysis needs a volatility series: pass --vol".into()))
    };
    if a.artificial {
        let v = need_vol()?;
        let mut art = artificial_returns(v, seed);
        let mut dx = vec![0.0; v.start];
        dx.append(&mut art.dx);
        returns = ReturnSeries::new(dx, art.label)?;
    }

    for what in &a.what {
        let mut table = match what {
            Analysis::Pdf | Analysis::Acf => {
                let data: Vec<f64> = match a.series {
                    Target::Vol => need_vol()?.values.clone(),
                    Target::Returns => returns.dx[vol.as_ref().map_or(0, |v| v.start)..].to_vec(),
                    Target::AbsReturns => returns.dx[vol.as_ref().map_or(0, |v| v.start)..]
                        .iter()
                        .map(|v| v.abs())
                        .collect(),
                };
                let mut t = if *what == Analysis::Pdf {
                    stats::pdf(&data, a.bins, a.scale)?.to_table()
                } else {
                    acf_table(&stats::autocorrelation(&data, a.max_lag)?)
                };
                t.set_meta("series", format!("{:?}", a.series).to_lowercase());
                t
            }
            Analysis::Leverage => {
                let (dx, sigma) = aligned(&returns, need_vol()?)?;
                leverage_table(&stats::leverage(&dx, &sigma, a.max_lag)?)
            }
            Analysis::Mfpt => {
                let start = vol.as_ref().map_or(0, |v| v.start);
                let abs: Vec<f64> = returns.dx[start..].iter().map(|v| v.abs()).collect();
                let (sigma_s, source) = if let Some(s) = a.sigma_s {
                    (s, "flag")
                } else if !a.model.is_empty() {
                    (a.model.resolve()?.stationary_vol_mean(), "model")
                } else if let Some(spec) = vol.as_ref().and_then(|v| v.spec) {
                    (spec.stationary_vol_mean(), "model")
                } else {
                    (sigma_gbm(&returns)?, "sample-rms")
                };
                let ls = log_grid(a.l_min, a.l_max, a.l_count);
                let mut t = stats::mfpt(&abs, sigma_s, &ls)?.to_table();
                t.set_meta("sigma_s_source", source);
                t
            }
        };
        table.set_meta("input", &returns.label);
        table.set_meta("artificial", a.artificial);
        if a.artificial {
            table.set_meta("seed", seed);
        }
        let out = match &a.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Some(dir.join(format!("{}.tsv", format!("{what:?}").to_lowercase())))
            }
            None => a.out.clone(),
        };
        emit(&table, out.as_deref())?;
    }
    Ok(())
}

/// `a..b` inclusive, or `h1,h2,...`.
pub fn parse_horizons(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad horizon list `{text}`"));
    let hs: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|h| h.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if hs.is_empty() || hs.contains(&0) {
        return Err(bad());
    }
    Ok(hs)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<(), CliError> {
    let split = (!a.no_split).then_some(a.split_h);
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let scan: Vec<(f64, f64)> = if let Some(path) = &a.gamma_table {
        let t = AnalysisTable::load(path)?;
        let (hc, gc) = match (t.column_index("h"), t.column_index("gamma")) {
            (Some(h), Some(g)) => (h, g),
            _ => return Err(Error::Schema(format!("{}: need `h` and `gamma` columns", path.display())).into()),
        };
        t.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok((
                    parse_f64_field(&r[hc], i + 1, "h")?,
                    parse_f64_field(&r[gc], i + 1, "gamma")?,
                ))
            })
            .collect::<Result<_, Error>>()?
    } else {
        let input = a.input.load()?;
        let returns = input.returns();
        let vol = load_vol(a.vol.as_deref(), &input)?
            .ok_or_else(|| CliError::Usage("prediction needs a volatility series: pass --vol".into()))?;
        let (dx, sigma) = aligned(&returns, &vol)?;
        let cfg = MedianRegressionConfig {
            n_bins: a.bins,
            min_count: a.min_count,
        };
        let horizons = parse_horizons(&a.horizons)?;

        let (x, y) = stats::predictive_pairs(&dx, &sigma, horizons[0])?;
        let (curve, fit) = stats::conditional_median_regression(&x, &y, cfg)?;
        let mut t = curve.to_table(&fit);
        t.set_meta("h", horizons[0]);
        t.save(a.out_dir.join("median-regression.tsv"))?;

        let points = gamma_horizon_scan(&dx, &sigma, &horizons, cfg)?;
        let mut t = gamma_table(&points);
        t.set_meta("estimator", vol.estimator);
        t.save(a.out_dir.join("gamma.tsv"))?;
        points.iter().map(|p| (p.h as f64, p.gamma)).collect()
    };
    fit_gamma_loglinear(&scan, split)?
        .to_table()
        .save(a.out_dir.join("gamma-fit.tsv"))?;
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs, seed: u64) -> Result<(), CliError> {
    let returns = a.input.load()?.returns();
    let cfg = a.ml.config(seed)?;
    let decon = sigma_decon(&returns, seed);
    let mut t = AnalysisTable::new("compare", &["model", "ratio", "var_est", "var_decon", "points"])
        .with_meta("input", &returns.label)
        .with_meta("window", cfg.window)
        .with_meta("iterations", cfg.iterations)
        .with_meta("seed", seed)
        .with_meta("force_equal", a.force_equal);
    for &kind in &a.models {
        let spec = ModelSpec::dji(kind);
        let est = if a.force_equal {
            decon.clone()
        } else {
            estimate_series_with_diagnostics(&returns, &spec, &cfg)?.0
        };
        let ratio = stats::variance_ratio(&est, &decon)?;
        let common = |v: &VolSeries| -> Vec<f64> {
            let start = est.start.max(decon.start);
            (start..v.len()).filter_map(|i| v.get(i)).collect()
        };
        let var = |xs: Vec<f64>| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
        };
        let points = est.len() - est.start.max(decon.start);
        t.push_row(vec![
            kind.to_string(),
            fmt_f64(ratio),
            fmt_f64(var(common(&est))),
            fmt_f64(var(common(&decon))),
            points.to_string(),
        ]);
    }
    emit(&t, a.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons() {
        assert_eq!(parse_horizons("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_horizons("1, 3,9").unwrap(), vec![1, 3, 9]);
        assert!(parse_horizons("0..3").is_err());
        assert!(parse_horizons("x").is_err());
    }

    #[test]
    fn precedence_flags_over_config_over_preset() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("m.conf");
        fs::write(&cfg, "k = 0.5\nalpha = 0.25\n").unwrap();
        let args = ModelArgs {
            preset: Some("dji-ou".into()),
            config: Some(cfg),
            alpha: Some(0.125),
            ..Default::default()
        };
        let spec = args.resolve().unwrap();
        assert_eq!(spec.kind, ModelKind::Ou);
        assert_eq!((spec.k(), spec.alpha(), spec.m()), (0.5, 0.125, 1.2e-2));
    }

    #[test]
    fn model_defaults_to_preset_parameters() {
        let args = ModelArgs {
            model: Some(ModelKind::Heston),
            ..Default::default()
        };
        assert_eq!(args.resolve().unwrap(), ModelSpec::dji(ModelKind::Heston));
        assert!(matches!(ModelArgs::default().resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
