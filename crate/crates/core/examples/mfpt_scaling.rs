//! Mean first-passage times of artificial returns built from ML volatility,
//! with power-law exponents below and above the stationary volatility.
//!
//! cargo run --release --example mfpt_scaling [iterations]

use volfilter::stats::{default_thresholds, mfpt_pooled, power_law_fit, PowerLawRange};
use volfilter::{artificial_returns, estimate_series, simulate_path, MlConfig, ModelKind, ModelSpec, SimConfig};

fn main() -> volfilter::Result<()> {
    let iterations = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("iterations"));
    for kind in ModelKind::ALL {
        let spec = ModelSpec::dji(kind);
        let mut series = Vec::new();
        for seed in 0..5 {
            let path = simulate_path(&SimConfig::new(spec, 5000, seed))?;
            let cfg = MlConfig {
                iterations,
                seed,
                ..MlConfig::default()
            };
            let ml = estimate_series(&path.returns(), &spec, &cfg)?;
            series.push(
                artificial_returns(&ml, seed)
                    .dx
                    .iter()
                    .map(|v| v.abs())
                    .collect::<Vec<_>>(),
            );
        }
        let segments: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        let curve = mfpt_pooled(&segments, spec.stationary_vol_mean(), &default_thresholds())?;
        let below = power_law_fit(&curve, PowerLawRange::BelowOne)?;
        let above = power_law_fit(&curve, PowerLawRange::AboveOne)?;
        println!(
            "{kind}: beta(L<1) = {:.2} +- {:.2}, beta(L>1) = {:.2} +- {:.2}",
            below.slope, below.slope_se, above.slope, above.slope_se
        );
        for p in curve.points.iter().step_by(5) {
            let t = p.mfpt.map_or("NA".to_string(), |m| format!("{m:.1}"));
            println!("  L = {:6.3}  MFPT = {t:>8}  censored {}", p.l, p.censored);
        }
    }
    Ok(())
}
