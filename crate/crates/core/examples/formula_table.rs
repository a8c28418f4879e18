//! Closed-form diversity orders for every channel model.
//!
//! Run with `cargo run --example formula_table`.

use mdl::formulas::{
    diversity_cp, diversity_cp_simo, diversity_flat, diversity_mac_bounds, diversity_separate, diversity_zp_bounds,
    diversity_zp_siso, flat_rate_thresholds,
};

fn main() -> mdl::Result<()> {
    println!("Flat fading, M = N = 3, joint encoding");
    for t in flat_rate_thresholds(3, 3) {
        println!(
            "  threshold R = {:.5}: d = {} just below, {} at or above",
            t.rate, t.diversity_below, t.diversity_at_or_above
        );
    }
    for rate in [1.0, 1.5, 2.0, 3.0, 4.5, 4.8, 5.0, 10.0] {
        println!("  R = {rate:>4}: d = {}", diversity_flat(rate, 3, 3).value);
    }
    println!("  separate encoding: d = {}", diversity_separate(3, 3)?.value);

    println!("\nMultiple access, K = 2 users with M = 2, N = 4");
    for rate in [1.0, 2.0, 4.0] {
        let (lo, hi) = diversity_mac_bounds(rate, 2, 4, 2);
        println!("  R = {rate}: {} ≤ d ≤ {}", lo.value, hi.value);
    }

    println!("\nZero padding, ν = 1, L_d = 4");
    println!("  SISO: d = {} at every rate", diversity_zp_siso(1).value);
    for rate in [1.0, 3.0] {
        let (lo, hi) = diversity_zp_bounds(rate, 2, 2, 1, 4);
        println!("  M = N = 2, R = {rate}: {} ≤ d ≤ {}", lo.value, hi.value);
    }

    println!("\nCyclic prefix");
    for rate in [1.0, 2.0, 3.0] {
        let d = diversity_cp(rate, 2, 2, 1, 2)?;
        println!("  M = N = 2, ν = 1, L_d = 2, R = {rate}: d = {} ({:?})", d.value, d.bound);
    }
    for rate in [1.0, 3.0] {
        println!(
            "  SIMO N = 2, ν = 1, L_d = 2, R = {rate}: d = {}",
            diversity_cp_simo(rate, 2, 1, 2)?.value
        );
    }
    Ok(())
}
