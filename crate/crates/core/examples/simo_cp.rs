//! Cyclic-prefix SIMO: the diversity N·min(ν+1, ⌊2^{−R}L_d⌋+1) drops from
//! 4 to 2 as the rate rises.
//!
//! Run with `cargo run --release --example simo_cp`.

use mdl::channels::SystemConfig;
use mdl::fitters::{local_slope, HIT_FLOOR};
use mdl::formulas::diversity_cp_simo;
use mdl::simkit::{outage_sweep, snr_grid, EarlyStop, SweepOptions};

fn main() -> mdl::Result<()> {
    let options = SweepOptions::fixed(200_000).with_early_stop(EarlyStop {
        target_hits: 200,
        ceiling: 2_000_000,
    });
    for (rate, lo, hi) in [(1.0, 4.0, 12.0), (3.0, 14.0, 24.0)] {
        let config = SystemConfig::cp(1, 2, 1, 2, rate);
        let sweep = outage_sweep(&config, &snr_grid(lo, hi, 2.0)?, &options, 5)?;
        let est = local_slope(&sweep.points, HIT_FLOOR)?;
        println!(
            "R = {rate}: slope between the last two points {:.2}, formula {}",
            est.d_hat,
            diversity_cp_simo(rate, 2, 1, 2)?.value
        );
    }
    Ok(())
}
