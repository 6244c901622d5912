//! Maximum-likelihood volatility filtering for stochastic volatility models.
//!
//! Three models are supported, all of the form
//!
//! ```text
//! dX = f(Y) dW1
//! dY = -g(Y) dt + h(Y) dW2
//! ```
//!
//! with `(f, g, h)` equal to `(m e^y, alpha y, k)` for expOU,
//! `(y, alpha (y - m), k)` for OU and `(sqrt(y), alpha (y - m), k sqrt(y))`
//! for Heston. The crate simulates these models, estimates the hidden
//! volatility from a return series, and computes the diagnostics used to
//! judge the estimate: densities, autocorrelations, leverage, first-passage
//! times and predictive regressions.
//!
//! ```
//! use volfilter::{estimate_series, simulate_path, MlConfig, ModelKind, ModelSpec, SimConfig};
//!
//! let spec = ModelSpec::dji(ModelKind::Ou);
//! let path = simulate_path(&SimConfig::new(spec, 200, 7)).unwrap();
//! let cfg = MlConfig { iterations: 200, ..MlConfig::default() };
//! let vol = estimate_series(&path.returns(), &spec, &cfg).unwrap();
//! assert_eq!(vol.start, cfg.window - 1);
//! assert_eq!(vol.len(), 200);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod io;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod table;

pub use error::{Error, Result};
pub use estimator::{
    artificial_returns, estimate_series, estimate_series_with_diagnostics, log_likelihood, sigma_decon, sigma_gbm,
    sigma_prop, EstimatorKind, MlConfig, ReturnSeries, VolSeries,
};
pub use io::{load_prices, load_series, save_series, to_returns, PriceSeries, TableSeries};
pub use model::{ModelConfig, ModelKind, ModelSpec};
pub use rng::DEFAULT_SEED;
pub use sim::{simulate_path, InitialState, SimConfig, SimPath};
pub use table::AnalysisTable;
