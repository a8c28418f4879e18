//! Randomized invariants across the library, driven by proptest.

use mdl::channels::{build_cp, build_zp, cp_frequency_blocks, sample_flat, sample_isi};
use mdl::formulas::{
    cp_omega, diversity_cp, diversity_cp_simo, diversity_flat, diversity_mac_bounds, diversity_zp_bounds, qip_solve,
};
use mdl::numkernel::{
    augmented_dft, check_interlacing, gram_eigenvalues, hermitian_eig, inverse_diagonal_pd, resolvent_diagonal,
    solve_pd, ComplexMatrix, INTERLACE_SLACK,
};
use mdl::receivers::{mmse_sinr, mutual_info, outage_indicator, zf_sinr};
use mdl::simkit::{trial_seed, wilson_interval};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gram(seed: u64, order: usize, rows: usize) -> ComplexMatrix {
    sample_flat(order, rows, &mut rng(seed)).matrix.gram()
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eig_reconstructs_and_preserves_trace(seed: u64, order in 1usize..9, rows in 1usize..10) {
        let a = gram(seed, order, rows);
        let e = hermitian_eig(&a).unwrap();
        let scale = a.frobenius_norm();
        prop_assert!(e.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-10 * scale);
        let unitarity = e.eigenvectors.adjoint().matmul(&e.eigenvectors).unwrap()
            .sub(&ComplexMatrix::identity(order)).unwrap().frobenius_norm();
        prop_assert!(unitarity <= 1e-10);
        let sum: f64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - a.trace().re).abs() <= 1e-10 * a.trace().re.abs().max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gram_eigenvalues_are_nonnegative(seed: u64, m in 1usize..6, n in 1usize..6) {
        let h = sample_flat(m, n, &mut rng(seed)).matrix;
        prop_assert!(gram_eigenvalues(&h).unwrap().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn dft_is_unitary(len in 1usize..65, size in 1usize..4) {
        let q = augmented_dft(len, size).unwrap();
        let err = q.matmul(&q.adjoint()).unwrap().sub(&ComplexMatrix::identity(len * size)).unwrap();
        prop_assert!(err.frobenius_norm() <= 1e-12 * ((len * size) as f64).sqrt().max(1.0) * 10.0);
    }

    #[test]
    fn resolvent_matches_explicit_inverse(seed: u64, m in 1usize..6, n in 1usize..6, rho in 0.01f64..1e4) {
        let g = gram(seed, m, n);
        let diag = resolvent_diagonal(&g, rho).unwrap();
        let a = ComplexMatrix::identity(m).add(&g.scale(Complex64::new(rho, 0.0))).unwrap();
        let inv = solve_pd(&a, &ComplexMatrix::identity(m)).unwrap();
        for (k, d) in diag.iter().enumerate() {
            prop_assert!(*d > 0.0 && *d <= 1.0 + 1e-12);
            prop_assert!((d - inv[(k, k)].re).abs() <= 1e-9);
        }
        prop_assert_eq!(inverse_diagonal_pd(&a).unwrap().len(), m);
    }

    #[test]
    fn leading_principal_submatrices_interlace(seed: u64, order in 2usize..9) {
        let a = gram(seed, order, order + 1);
        let outer = hermitian_eig(&a).unwrap().eigenvalues;
        let inner = hermitian_eig(&a.leading_principal(order - 1)).unwrap().eigenvalues;
        prop_assert_eq!(check_interlacing(&outer, &inner, INTERLACE_SLACK), None);
    }

    #[test]
    fn mmse_dominates_zf_and_grows_with_snr(seed: u64, m in 1usize..5, extra in 0usize..3, rho in 0.1f64..1e3) {
        let h = sample_flat(m, m + extra, &mut rng(seed)).matrix;
        let mmse = mmse_sinr(&h, rho).unwrap();
        let zf = zf_sinr(&h, rho).unwrap();
        let mmse_hi = mmse_sinr(&h, 2.0 * rho).unwrap();
        for k in 0..m {
            prop_assert!(mmse.0[k] >= zf.0[k] * (1.0 - 1e-9));
            prop_assert!(mmse_hi.0[k] >= mmse.0[k]);
        }
    }

    #[test]
    fn outage_is_monotone_in_rate(seed: u64, m in 1usize..4, rho in 0.1f64..1e3, r1 in 0.0f64..12.0, dr in 0.0f64..4.0) {
        let h = sample_flat(m, m, &mut rng(seed)).matrix;
        let info = mutual_info(&mmse_sinr(&h, rho).unwrap(), 1);
        prop_assert!(info >= 0.0);
        if outage_indicator(info, r1) {
            prop_assert!(outage_indicator(info, r1 + dr));
        }
    }

    #[test]
    fn cp_trace_and_singular_values(seed: u64, m in 1usize..3, n in 1usize..3, nu in 0usize..3, extra in 0usize..3) {
        let l_d = nu + 1 + extra;
        let taps = sample_isi(m, n, nu, &mut rng(seed));
        let h_eq = build_cp(&taps, l_d).unwrap().matrix;
        let energy: f64 = taps.iter().map(|t| t.frobenius_norm().powi(2)).sum();
        prop_assert!((h_eq.gram().trace().re - l_d as f64 * energy).abs() <= 1e-10 * energy.max(1.0) * l_d as f64);
        let blocks = cp_frequency_blocks(&taps, l_d).unwrap();
        let union = sorted_desc(blocks.iter().flat_map(|b| gram_eigenvalues(b).unwrap()).collect());
        let lhs = gram_eigenvalues(&h_eq).unwrap();
        for (a, b) in lhs.iter().zip(&union) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        // The DC bin is the plain sum of taps.
        let dc = taps.iter().skip(1).fold(taps[0].clone(), |acc, t| acc.add(t).unwrap());
        prop_assert!(blocks[0].max_abs_diff(&dc).unwrap() <= 1e-12);
    }

    #[test]
    fn memoryless_block_channels_are_block_diagonal(seed: u64, m in 1usize..4, n in 1usize..4, l_d in 1usize..5) {
        let taps = sample_isi(m, n, 0, &mut rng(seed));
        for h_eq in [build_zp(&taps, l_d).unwrap().matrix, build_cp(&taps, l_d).unwrap().matrix] {
            prop_assert_eq!(h_eq.shape(), (n * l_d, m * l_d));
            for r in 0..l_d {
                for c in 0..l_d {
                    let block = h_eq.block(r * n, c * m, n, m);
                    let expect = if r == c { taps[0].clone() } else { ComplexMatrix::zeros(n, m) };
                    prop_assert_eq!(block, expect);
                }
            }
        }
    }

    #[test]
    fn zp_diagonal_blocks_equal_tap_energy(seed: u64, m in 1usize..4, n in 1usize..4, nu in 0usize..4, extra in 0usize..3) {
        let l_d = nu + 1 + extra;
        let taps = sample_isi(m, n, nu, &mut rng(seed));
        let g = build_zp(&taps, l_d).unwrap().matrix.gram();
        let d = taps.iter().skip(1).fold(taps[0].gram(), |acc, t| acc.add(&t.gram()).unwrap());
        for b in 0..l_d {
            prop_assert!(g.block(b * m, b * m, m, m).max_abs_diff(&d).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn flat_diversity_is_bounded_and_nonincreasing(m in 1usize..7, n in 1usize..7, r in 0.01f64..30.0, dr in 0.0f64..5.0) {
        let d = diversity_flat(r, m, n).value;
        prop_assert!(d <= (m * n) as u64);
        prop_assert!(diversity_flat(r + dr, m, n).value <= d);
    }

    #[test]
    fn mac_bounds_are_ordered(m in 1usize..4, n in 1usize..9, k in 1usize..4, r in 0.01f64..20.0) {
        let (lo, hi) = diversity_mac_bounds(r, m, n, k);
        prop_assert!(lo.value <= hi.value);
    }

    #[test]
    fn zp_bounds_are_ordered(m in 1usize..4, extra_n in 0usize..3, nu in 0usize..3, extra_l in 1usize..4, r in 0.01f64..20.0) {
        // The transcribed bounds are only guaranteed ordered for N ≥ M.
        let n = m + extra_n;
        let l_d = nu + extra_l;
        let (lo, hi) = diversity_zp_bounds(r, m, n, nu, l_d);
        prop_assert!(lo.value <= hi.value, "lo {} hi {}", lo.value, hi.value);
    }

    #[test]
    fn cp_matches_qip_objective(m in 1usize..4, n in 1usize..4, nu in 0usize..3, r in 0.01f64..12.0) {
        let l_d = nu + 1;
        let omega = cp_omega(r, m, l_d);
        let qip = qip_solve(omega as u32, l_d).unwrap();
        let d = diversity_cp(r, m, n, nu, l_d).unwrap().value;
        prop_assert_eq!(d, qip.objective + (n.abs_diff(m) as u64) * omega);
    }

    #[test]
    fn siso_cp_agrees_with_simo_formula(nu in 0usize..4, r in 0.01f64..8.0) {
        let l_d = nu + 1;
        let x = (-r).exp2() * l_d as f64;
        prop_assume!((x - x.round()).abs() > 1e-6);
        prop_assert_eq!(
            diversity_cp(r, 1, 1, nu, l_d).unwrap().value,
            diversity_cp_simo(r, 1, nu, l_d).unwrap().value
        );
    }

    #[test]
    fn qip_allocations_are_balanced(total in 0u32..200, parts in 1usize..20) {
        let s = qip_solve(total, parts).unwrap();
        prop_assert_eq!(s.allocation.iter().sum::<u32>(), total);
        let lo = *s.allocation.iter().min().unwrap();
        let hi = *s.allocation.iter().max().unwrap();
        prop_assert!(hi - lo <= 1);
        prop_assert_eq!(s.objective, s.allocation.iter().map(|&a| (a as u64).pow(2)).sum::<u64>());
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let hits = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(hits, trials);
        let p = hits as f64 / trials as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn trial_seed_is_a_function(master: u64, index: u64) {
        prop_assert_eq!(trial_seed(master, index), trial_seed(master, index));
        prop_assert_ne!(trial_seed(master, index), trial_seed(master, index.wrapping_add(1)));
    }
}
