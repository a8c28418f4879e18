//! Two-user multiple access channel: per-user outage curves on shared draws
//! next to the closed-form diversity bounds.
//!
//! Run with `cargo run --release --example mac_users`.

use mdl::channels::SystemConfig;
use mdl::formulas::diversity_mac_bounds;
use mdl::simkit::{mac_user_sweeps, snr_grid, SweepOptions};

fn main() -> mdl::Result<()> {
    let config = SystemConfig::mac(2, 4, 2, 2.0);
    let (lo, hi) = diversity_mac_bounds(config.rate, config.m, config.n, config.k);
    println!("bounds: {} ≤ d ≤ {}", lo.value, hi.value);

    let grid = snr_grid(0.0, 12.0, 3.0)?;
    let users = mac_user_sweeps(&config, &grid, &SweepOptions::fixed(50_000), 6)?;
    println!("snr_db  user 0      user 1");
    for (i, snr) in grid.iter().enumerate() {
        println!("{snr:>6}  {:<10.3e}  {:<10.3e}", users[0].points[i].p_hat, users[1].points[i].p_hat);
    }
    Ok(())
}
