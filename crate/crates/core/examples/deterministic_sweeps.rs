//! A sweep is fully determined by its config and master seed: the CSV is
//! byte-identical whatever the worker count.
//!
//! Run with `cargo run --release --example deterministic_sweeps`.

use mdl::channels::SystemConfig;
use mdl::simkit::{outage_sweep, snr_grid, trial_seed, EarlyStop, SweepOptions};

fn main() -> mdl::Result<()> {
    let config = SystemConfig::flat(2, 2, 4.0);
    let grid = snr_grid(0.0, 30.0, 5.0)?;
    let run = |threads| {
        let options = SweepOptions::fixed(10_000)
            .with_early_stop(EarlyStop {
                target_hits: 200,
                ceiling: 200_000,
            })
            .with_threads(threads);
        outage_sweep(&config, &grid, &options, 42).and_then(|r| r.to_csv())
    };
    let one = run(1)?;
    let eight = run(8)?;
    print!("{one}");
    println!("1 vs 8 workers identical: {}", one == eight);
    println!("seed of trial 0 at point 0: {:#018x}", trial_seed(42, 0));
    Ok(())
}
