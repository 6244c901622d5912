//! How well today's estimated volatility predicts the size of future
//! returns: the slope gamma(h) of the median regression of ln|dX(t+h)| on
//! ln sigma(t), and its log-linear decay with h.
//!
//! cargo run --release --example predictive_power [iterations]

use volfilter::stats::{fit_gamma_loglinear, gamma_horizon_scan, GammaFit};
use volfilter::{estimate_series, simulate_path, MlConfig, ModelKind, ModelSpec, SimConfig};

fn main() -> volfilter::Result<()> {
    let iterations = std::env::args().nth(1).map_or(2000, |s| s.parse().expect("iterations"));
    let spec = ModelSpec::dji(ModelKind::ExpOu);
    let path = simulate_path(&SimConfig::new(spec, 20_000, 21))?;
    let returns = path.returns();
    let cfg = MlConfig {
        iterations,
        ..MlConfig::default()
    };
    let ml = estimate_series(&returns, &spec, &cfg)?;
    let dx = &returns.dx[ml.start..];

    let horizons: Vec<usize> = (1..=60).collect();
    let scan = gamma_horizon_scan(dx, &ml.values, &horizons, Default::default())?;
    for p in scan.iter().filter(|p| [1, 2, 5, 10, 20, 40, 60].contains(&p.h)) {
        println!("h = {:>2}: gamma = {:.3} +- {:.3}", p.h, p.gamma, p.slope_se);
    }

    let pts: Vec<(f64, f64)> = scan.iter().map(|p| (p.h as f64, p.gamma)).collect();
    if let GammaFit::Split { short, long, split_h } = fit_gamma_loglinear(&pts, Some(7.0))? {
        println!(
            "h <  {split_h}: gamma = {:.3} ln h + {:.3}",
            short.slope, short.intercept
        );
        println!("h >= {split_h}: gamma = {:.3} ln h + {:.3}", long.slope, long.intercept);
    }
    Ok(())
}
