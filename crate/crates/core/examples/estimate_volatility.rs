//! Filters the volatility of a simulated expOU path with every estimator and
//! reports how closely each one follows the true volatility.
//!
//! cargo run --release --example estimate_volatility [iterations]

use volfilter::stats::{pearson, variance_ratio};
use volfilter::{
    estimate_series_with_diagnostics, sigma_decon, sigma_gbm, sigma_prop, simulate_path, MlConfig, ModelKind,
    ModelSpec, SimConfig,
};

fn main() -> volfilter::Result<()> {
    let iterations = std::env::args().nth(1).map_or(5000, |s| s.parse().expect("iterations"));
    let spec = ModelSpec::dji(ModelKind::ExpOu);
    let path = simulate_path(&SimConfig::new(spec, 3000, 11))?;
    let returns = path.returns();
    let truth = path.driving_vol();

    let cfg = MlConfig {
        iterations,
        ..MlConfig::default()
    };
    let (ml, diag) = estimate_series_with_diagnostics(&returns, &spec, &cfg)?;
    let decon = sigma_decon(&returns, 11);
    let prop = sigma_prop(&returns);
    let s = ml.start;

    println!("gbm constant volatility: {:.4e}", sigma_gbm(&returns)?);
    for (name, v) in [
        ("ml", &ml.values[..]),
        ("prop", &prop.values[s..]),
        ("decon", &decon.values[s..]),
    ] {
        println!("{name:>5}: corr with true volatility {:.3}", pearson(v, &truth[s..])?);
    }
    println!("Var(ml)/Var(decon) = {:.3e}", variance_ratio(&ml, &decon)?);
    println!("candidate points floored: {:.2e}", diag.floored_fraction());

    println!("\n   t\ttrue\tml\tdecon");
    for t in (s..returns.len()).step_by(300) {
        println!(
            "{t:>4}\t{:.4}\t{:.4}\t{:.4}",
            truth[t],
            ml.get(t).unwrap(),
            decon.get(t).unwrap()
        );
    }
    Ok(())
}
