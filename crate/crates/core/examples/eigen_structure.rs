//! Eigenvalue structure of a Wishart matrix: Sturmian interlacing of nested
//! principal submatrices and the SNR exponents of its eigenvalues.
//!
//! Run with `cargo run --example eigen_structure`.

use mdl::channels::sample_flat;
use mdl::numkernel::{hermitian_eig, sturmian_check};
use mdl::receivers::eigen_exponents;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = sample_flat(6, 6, &mut rng).matrix.gram();
    let report = sturmian_check(&g, 5)?;
    println!(
        "interlacing over {} eigenvalue pairs: {}",
        report.pairs_checked,
        if report.passed { "holds" } else { "violated" }
    );

    let eig = hermitian_eig(&g)?;
    println!("eigenvalues: {:.4?}", eig.eigenvalues);
    let rho = 1e4;
    let exps = eigen_exponents(&eig.eigenvalues, rho)?;
    println!(
        "exponents at ρ = {rho:e}: {:.3?} ({} above one)",
        exps.alphas, exps.count_above_one
    );
    Ok(())
}
