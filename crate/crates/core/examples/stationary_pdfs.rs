//! Compares the histogram of simulated volatility with the stationary
//! density implied by each model.
//!
//! cargo run --release --example stationary_pdfs

use volfilter::stats::{pdf, BinScale};
use volfilter::{simulate_path, ModelKind, ModelSpec, SimConfig};

fn main() -> volfilter::Result<()> {
    for kind in ModelKind::ALL {
        let spec = ModelSpec::dji(kind);
        let burn = volfilter::sim::default_burn_in(&spec);
        let path = simulate_path(&SimConfig::new(spec, 400_000 + burn, 3))?;
        let latent = &path.y[burn..];
        let hist = pdf(latent, 12, BinScale::Linear)?;

        println!("{kind}: latent density, simulated vs stationary (bin averages)");
        for ((c, d), w) in hist.centers().iter().zip(&hist.density).zip(hist.edges.windows(2)) {
            let exact = (spec.stationary_latent_cdf(w[1]) - spec.stationary_latent_cdf(w[0])) / (w[1] - w[0]);
            println!("  y = {c:+.4e}  sim {d:10.4}  exact {exact:10.4}");
        }
        let sigma = &path.sigma[burn..];
        let mean = sigma.iter().sum::<f64>() / sigma.len() as f64;
        println!(
            "  <sigma> = {mean:.4e}, stationary {:.4e}\n",
            spec.stationary_vol_mean()
        );
    }
    Ok(())
}
