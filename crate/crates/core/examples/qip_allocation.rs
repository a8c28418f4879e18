//! The balanced integer allocation that minimizes Σ n_k² under Σ n_k = Ω,
//! checked against exhaustive enumeration.
//!
//! Run with `cargo run --example qip_allocation`.

use mdl::formulas::{qip_bruteforce, qip_solve};

fn main() -> mdl::Result<()> {
    for (total, parts) in [(5, 3), (6, 3), (0, 4), (11, 4)] {
        let closed = qip_solve(total, parts)?;
        let brute = qip_bruteforce(total, parts)?;
        println!(
            "Ω = {total:>2}, ℓ = {parts}: allocation {:?}, objective {} (enumeration {})",
            closed.allocation, closed.objective, brute.objective
        );
    }
    let s = qip_solve(9, 2)?;
    println!("Ω = 9 over 2 slots exceeds a cap of 4: {}", s.exceeds_cap(4));
    Ok(())
}
