//! Simulates each model at its DJI parameters and summarizes the paths.
//!
//! cargo run --release --example simulate_models [steps] [seed]

use volfilter::{simulate_path, ModelKind, ModelSpec, SimConfig};

fn main() -> volfilter::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(100_000, |s| s.parse().expect("steps"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    println!("model\tsigma_s\tmean sigma\tsd sigma\tmax sigma\tsd dX");
    for kind in ModelKind::ALL {
        let spec = ModelSpec::dji(kind);
        let path = simulate_path(&SimConfig::new(spec, steps, seed))?;
        let sigma = path.driving_vol();
        let n = sigma.len() as f64;
        let mean = sigma.iter().sum::<f64>() / n;
        let sd = (sigma.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        let max = sigma.iter().cloned().fold(0.0, f64::max);
        let dx = path.returns().dx;
        let sd_dx = (dx.iter().map(|v| v * v).sum::<f64>() / dx.len() as f64).sqrt();
        println!(
            "{kind}\t{:.3e}\t{mean:.3e}\t{sd:.3e}\t{max:.3e}\t{sd_dx:.3e}",
            spec.stationary_vol_mean()
        );
    }
    Ok(())
}
