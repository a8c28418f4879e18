//! Monte Carlo outage curve of a 2×2 MMSE receiver and its fitted slope.
//!
//! Run with `cargo run --release --example flat_outage_slope`.

use mdl::channels::SystemConfig;
use mdl::fitters::{compare, estimate_slope, SnrWindow};
use mdl::formulas::diversity_flat;
use mdl::simkit::{outage_sweep, snr_grid, SweepOptions};

fn main() -> mdl::Result<()> {
    let config = SystemConfig::flat(2, 2, 10.0);
    let grid = snr_grid(30.0, 44.0, 2.0)?;
    let sweep = outage_sweep(&config, &grid, &SweepOptions::fixed(200_000), 1)?;
    print!("{}", sweep.to_csv()?);

    let predicted = diversity_flat(config.rate, config.m, config.n).value as f64;
    let estimate = estimate_slope(&sweep, SnrWindow::new(30.0, 44.0))?;
    let verdict = compare(&estimate, predicted, 0.3)?;
    println!(
        "d_hat = {:.3} ± {:.3}, predicted {predicted}, pass = {}",
        verdict.d_hat, verdict.stderr, verdict.pass
    );
    Ok(())
}
