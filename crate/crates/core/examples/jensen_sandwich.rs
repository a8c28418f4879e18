//! Per-realization sandwich: the Jensen lower event implies outage, which
//! implies the Jensen upper event.
//!
//! Run with `cargo run --release --example jensen_sandwich`.

use mdl::channels::SystemConfig;
use mdl::simkit::{jensen_upper_sweep, outage_sweep, sandwich_check, snr_grid, SweepOptions};

fn main() -> mdl::Result<()> {
    for config in [SystemConfig::flat(2, 2, 4.0), SystemConfig::flat(3, 2, 4.0), SystemConfig::mac(2, 4, 2, 5.0)] {
        let report = sandwich_check(&config, 10_000, 1)?;
        println!(
            "{:?} M={} N={} K={}: {} draws, {} outages, {} violations",
            config.scheme, config.m, config.n, config.k, report.trials, report.outages, report.violations
        );
    }

    let config = SystemConfig::flat(2, 2, 4.0);
    let grid = snr_grid(0.0, 20.0, 5.0)?;
    let options = SweepOptions::fixed(20_000);
    let outage = outage_sweep(&config, &grid, &options, 2)?;
    let upper = jensen_upper_sweep(&config, &grid, &options, 2)?;
    println!("snr_db  outage      upper bound");
    for (o, u) in outage.points.iter().zip(&upper.points) {
        println!("{:>6}  {:<10.3e}  {:<10.3e}", o.snr_db, o.p_hat, u.p_hat);
    }
    Ok(())
}
