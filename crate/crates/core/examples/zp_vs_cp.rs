//! Single-antenna block transmission over a two-tap channel: zero padding
//! keeps diversity ν+1 at every rate while cyclic prefix loses it at high rate.
//!
//! Run with `cargo run --release --example zp_vs_cp`.

use mdl::channels::SystemConfig;
use mdl::cli::predicted_diversity;
use mdl::fitters::{estimate_slope, SnrWindow};
use mdl::simkit::{outage_sweep, snr_grid, EarlyStop, SweepOptions};

fn main() -> mdl::Result<()> {
    let options = SweepOptions::fixed(50_000).with_early_stop(EarlyStop {
        target_hits: 200,
        ceiling: 1_000_000,
    });
    let cases = [
        (SystemConfig::zp(1, 1, 1, 4, 1.0), 10.0, 20.0),
        (SystemConfig::zp(1, 1, 1, 4, 3.0), 18.0, 30.0),
        (SystemConfig::cp(1, 1, 1, 4, 1.0), 14.0, 30.0),
        (SystemConfig::cp(1, 1, 1, 4, 3.0), 26.0, 40.0),
    ];
    for (config, lo, hi) in cases {
        let sweep = outage_sweep(&config, &snr_grid(lo, hi, 2.0)?, &options, 4)?;
        let est = estimate_slope(&sweep, SnrWindow::all())?;
        println!(
            "{:?} R = {}: d_hat = {:.2} over [{lo}, {hi}] dB, formula {}",
            config.scheme,
            config.rate,
            est.d_hat,
            predicted_diversity(&config)?.value
        );
    }
    Ok(())
}
