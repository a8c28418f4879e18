//! Uncoded QPSK symbol error rate and outage probability fall with the same
//! slope when the outage diversity is 1.
//!
//! Run with `cargo run --release --example ser_vs_outage`.

use mdl::channels::SystemConfig;
use mdl::fitters::{estimate_slope, SnrWindow};
use mdl::simkit::{outage_sweep, ser_sweep, snr_grid, SweepOptions};

fn main() -> mdl::Result<()> {
    // Two QPSK streams carry 4 bits per channel use.
    let config = SystemConfig::flat(2, 2, 4.0);
    let grid = snr_grid(20.0, 40.0, 4.0)?;
    let options = SweepOptions::fixed(100_000);
    let ser = ser_sweep(&config, &grid, &options, 7)?;
    let outage = outage_sweep(&config, &grid, &options, 7)?;

    println!("snr_db  ser         outage");
    for (s, o) in ser.points.iter().zip(&outage.points) {
        println!("{:>6}  {:<10.3e}  {:<10.3e}", s.snr_db, s.p_hat, o.p_hat);
    }
    let d_ser = estimate_slope(&ser, SnrWindow::all())?.d_hat;
    let d_out = estimate_slope(&outage, SnrWindow::all())?.d_hat;
    println!("slope: SER {d_ser:.3}, outage {d_out:.3}");
    Ok(())
}
