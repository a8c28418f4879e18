//! A cyclic-prefix block channel is block-diagonalized by DFTs:
//! H_eq = Q_Rx^H · diag(B_0, …, B_{L−1}) · Q_Tx.
//!
//! Run with `cargo run --example cp_diagonalization`.

use mdl::channels::{block_diagonal, build_cp, build_zp, cp_frequency_blocks, sample_isi};
use mdl::numkernel::{augmented_dft, gram_eigenvalues};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, n, nu, l_d) = (2, 2, 1, 4);
    let taps = sample_isi(m, n, nu, &mut rng);

    let h_cp = build_cp(&taps, l_d)?.matrix;
    let blocks = cp_frequency_blocks(&taps, l_d)?;
    let rebuilt = augmented_dft(l_d, n)?
        .adjoint()
        .matmul(&block_diagonal(&blocks))?
        .matmul(&augmented_dft(l_d, m)?)?;
    println!("‖H_eq − Q_Rx^H Λ Q_Tx‖_F = {:.2e}", h_cp.sub(&rebuilt)?.frobenius_norm());

    let mut per_bin: Vec<f64> = blocks.iter().map(gram_eigenvalues).collect::<mdl::Result<Vec<_>>>()?.concat();
    per_bin.sort_by(|a, b| b.total_cmp(a));
    println!("eig(H_eq^H H_eq)      = {:.4?}", gram_eigenvalues(&h_cp)?);
    println!("∪ eig(B_k^H B_k)      = {per_bin:.4?}");

    let h_zp = build_zp(&taps, l_d)?.matrix;
    println!("zero-padded channel is {}×{}", h_zp.rows(), h_zp.cols());
    Ok(())
}
