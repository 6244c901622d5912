//! Volatility autocorrelation and return-volatility leverage, on the true
//! volatility of a simulated path and on its ML estimate.
//!
//! cargo run --release --example correlations [iterations]

use volfilter::stats::{autocorrelation, decay_rate, leverage};
use volfilter::{estimate_series, simulate_path, MlConfig, ModelKind, ModelSpec, SimConfig};

fn main() -> volfilter::Result<()> {
    let iterations = std::env::args().nth(1).map_or(2000, |s| s.parse().expect("iterations"));
    let spec = ModelSpec::dji(ModelKind::Ou);
    let path = simulate_path(&SimConfig::new(spec, 20_000, 5))?;
    let returns = path.returns();
    let ml = estimate_series(
        &returns,
        &spec,
        &MlConfig {
            iterations,
            ..MlConfig::default()
        },
    )?;

    let true_acf = autocorrelation(path.driving_vol(), 100)?;
    let ml_acf = autocorrelation(&ml.values, 100)?;
    println!("alpha = {}", spec.alpha());
    println!("decay rate, true volatility: {:.4}", decay_rate(&true_acf, 40)?);
    println!("decay rate, ml estimate:     {:.4}", decay_rate(&ml_acf, 40)?);
    for lag in [0, 1, 5, 10, 20, 50, 100] {
        println!("  C({lag:>3}) true {:.3}  ml {:.3}", true_acf[lag], ml_acf[lag]);
    }

    // Independent noise and volatility carry no leverage.
    let lev = leverage(&returns.dx[ml.start..], &ml.values, 10)?;
    println!("\nleverage L(tau) of ml volatility, in standard errors:");
    for p in lev.iter().filter(|p| p.lag % 2 == 0) {
        println!("  tau {:>3}: {:+.2}", p.lag, p.value / p.std_err);
    }
    Ok(())
}
