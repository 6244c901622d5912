//! Loads a daily price file, builds zero-mean returns and reports the
//! variance reduction of the ML filter over deconvolution for each model.
//!
//! cargo run --release --example index_comparison [prices.csv] [iterations]
//!
//! Without arguments it uses the synthetic price sample shipped with the crate.

use std::path::PathBuf;

use volfilter::stats::variance_ratio;
use volfilter::{estimate_series, load_prices, sigma_decon, to_returns, MlConfig, ModelKind, ModelSpec};

fn main() -> volfilter::Result<()> {
    let mut args = std::env::args().skip(1);
    let file = args.next().map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic-prices.csv"),
        PathBuf::from,
    );
    let iterations = args.next().map_or(5000, |s| s.parse().expect("iterations"));

    let prices = load_prices(&file)?;
    let returns = to_returns(&prices)?;
    println!(
        "{}: {} prices from {} to {}",
        prices.label,
        prices.len(),
        prices.dates[0],
        prices.dates[prices.len() - 1]
    );

    let decon = sigma_decon(&returns, 1);
    let cfg = MlConfig {
        iterations,
        ..MlConfig::default()
    };
    println!("model\tVar(ml)/Var(decon)");
    for kind in ModelKind::ALL {
        let ml = estimate_series(&returns, &ModelSpec::dji(kind), &cfg)?;
        println!("{kind}\t{:.3e}", variance_ratio(&ml, &decon)?);
    }
    Ok(())
}
