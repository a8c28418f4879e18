//! Linear MMSE/ZF equalization, mutual information and outage events.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channels::{complex_gaussian, ReceiverKind};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, resolvent_diagonal, solve_pd, ComplexMatrix};

/// ZF refuses channels whose eigenvalue spread exceeds this ratio.
pub const ZF_RANK_TOL: f64 = 1e-12;

/// Per-stream output SINRs (linear).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrVector(pub Vec<f64>);

impl SinrVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// MMSE SINRs `γ_k = 1/[(I + ρ H^H H)^{-1}]_kk − 1`.
pub fn mmse_sinr(h: &ComplexMatrix, rho: f64) -> Result<SinrVector> {
    let r = mmse_resolvent(h, rho)?;
    Ok(SinrVector(r.iter().map(|&d| (1.0 / d - 1.0).max(0.0)).collect()))
}

/// Diagonal of the MMSE resolvent `(I + ρ H^H H)^{-1}`.
pub fn mmse_resolvent(h: &ComplexMatrix, rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {rho}")));
    }
    resolvent_diagonal(&h.gram(), rho)
}

/// ZF SINRs `γ_k = ρ / [(H^H H)^{-1}]_kk`.
pub fn zf_sinr(h: &ComplexMatrix, rho: f64) -> Result<SinrVector> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {rho}")));
    }
    if h.rows() < h.cols() {
        return Err(Error::RankDeficient(0.0));
    }
    let g = h.gram();
    let eig = hermitian_eig(&g)?.eigenvalues;
    let (max, min) = (eig[0], *eig.last().expect("nonempty"));
    if !(max > 0.0) || min < ZF_RANK_TOL * max {
        return Err(Error::RankDeficient(if max > 0.0 { min / max } else { 0.0 }));
    }
    let inv = solve_pd(&g, &ComplexMatrix::identity(g.rows()))?;
    Ok(SinrVector((0..g.rows()).map(|k| rho / inv[(k, k)].re).collect()))
}

/// SINRs for the configured receiver. A rank-deficient channel under ZF
/// yields all-zero SINRs, i.e. a certain outage.
pub fn receiver_sinr(kind: ReceiverKind, h: &ComplexMatrix, rho: f64) -> Result<SinrVector> {
    match kind {
        ReceiverKind::Mmse => mmse_sinr(h, rho),
        ReceiverKind::Zf => match zf_sinr(h, rho) {
            Err(Error::RankDeficient(_)) => Ok(SinrVector(vec![0.0; h.cols()])),
            other => other,
        },
    }
}

/// `I = (1/L_d) Σ_k log₂(1 + γ_k)` in bits/s/Hz.
pub fn mutual_info(sinrs: &SinrVector, block_len: usize) -> f64 {
    sinrs.0.iter().map(|&g| log2_1p(g)).sum::<f64>() / block_len as f64
}

/// Outage is the strict event `I < R`.
pub fn outage_indicator(info: f64, rate: f64) -> bool {
    info < rate
}

/// Sum rate of user `user` (0-based) over its `M` streams of a stacked MAC SINR vector.
pub fn mac_user_rate(sinrs: &SinrVector, user: usize, m: usize) -> Result<f64> {
    let users = sinrs.len() / m.max(1);
    if m == 0 || user >= users {
        return Err(Error::Domain(format!(
            "user index {user} out of range for {users} users"
        )));
    }
    let streams = &sinrs.0[user * m..(user + 1) * m];
    Ok(streams.iter().map(|&g| log2_1p(g)).sum())
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Outage of user `user` (0-based) in a MAC, jointly equalized over all `KM` streams.
pub fn mac_user_outage(h: &ComplexMatrix, rho: f64, rate: f64, user: usize, m: usize) -> Result<bool> {
    let sinrs = mmse_sinr(h, rho)?;
    Ok(outage_indicator(mac_user_rate(&sinrs, user, m)?, rate))
}

/// Exponents `α_k = −ln λ_k / ln ρ` and the count of entries above one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenExponents {
    pub alphas: Vec<f64>,
    pub count_above_one: usize,
}

pub fn eigen_exponents(eigenvalues: &[f64], rho: f64) -> Result<EigenExponents> {
    if !(rho > 1.0) {
        return Err(Error::Domain(format!("exponent base needs rho > 1, got {rho}")));
    }
    if eigenvalues.iter().any(|&l| l < 0.0) {
        return Err(Error::Domain("eigenvalues must be nonnegative".into()));
    }
    let log_rho = rho.ln();
    let alphas: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| if l == 0.0 { f64::INFINITY } else { -l.ln() / log_rho })
        .collect();
    let count_above_one = alphas.iter().filter(|&&a| a > 1.0).count();
    Ok(EigenExponents {
        alphas,
        count_above_one,
    })
}

/// Necessary condition for outage: `Σ_k 1/(1+ρλ_k) ≥ M·2^{−R/M} − (M−N)⁺`
/// over the `min(M, N)` nonzero eigenvalue slots of `H^H H`.
pub fn jensen_upper_event(eigenvalues: &[f64], rho: f64, rate: f64, m: usize, n: usize) -> bool {
    jensen_upper_with_deficit(eigenvalues, rho, rate, m, m.saturating_sub(n))
}

/// MAC form of [`jensen_upper_event`]: the rate term uses the per-user `M` while
/// the zero-eigenvalue deficit is `(KM − N)⁺`.
pub fn mac_jensen_upper_event(eigenvalues: &[f64], rho: f64, rate: f64, m: usize, k: usize, n: usize) -> bool {
    jensen_upper_with_deficit(eigenvalues, rho, rate, m, (k * m).saturating_sub(n))
}

fn jensen_upper_with_deficit(eigenvalues: &[f64], rho: f64, rate: f64, m: usize, deficit: usize) -> bool {
    let lhs: f64 = eigenvalues.iter().map(|&l| 1.0 / (1.0 + rho * l)).sum();
    lhs >= m as f64 * (-rate / m as f64).exp2() - deficit as f64
}

/// Sufficient condition for outage, from resolvent diagonal entries of the
/// streams sharing one codeword: `M·log₂[(1/M) Σ_k 1/r_k] < R`.
pub fn jensen_lower_from_resolvent(resolvent: &[f64], rate: f64) -> bool {
    let m = resolvent.len() as f64;
    let mean_inverse = resolvent.iter().map(|r| 1.0 / r).sum::<f64>() / m;
    m * mean_inverse.log2() < rate
}

pub fn jensen_lower_event(h: &ComplexMatrix, rho: f64, rate: f64) -> Result<bool> {
    Ok(jensen_lower_from_resolvent(&mmse_resolvent(h, rho)?, rate))
}

/// Unit-energy QPSK points, in index order.
pub const QPSK: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Nearest constellation point; ties go to the lowest index.
pub fn slice(z: Complex64, constellation: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in constellation.iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Sends one QPSK vector through `y = √ρ H x + n`, MMSE-equalizes, slices
/// every stream and returns the number of symbol errors.
pub fn detect_streams<R: Rng + ?Sized>(h: &ComplexMatrix, rho: f64, rng: &mut R) -> Result<usize> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {rho}")));
    }
    let m = h.cols();
    let tx: Vec<usize> = (0..m).map(|_| rng.random_range(0..QPSK.len())).collect();
    let x: Vec<Complex64> = tx.iter().map(|&i| QPSK[i]).collect();
    let sqrt_rho = rho.sqrt();
    let y: Vec<Complex64> = h
        .mul_vec(&x)?
        .into_iter()
        .map(|v| v * sqrt_rho + complex_gaussian(rng))
        .collect();

    // x̂ = (ρ^{-1} I + H^H H)^{-1} H^H y / √ρ
    let mut a = h.gram();
    for i in 0..m {
        a[(i, i)] += 1.0 / rho;
    }
    let hy = h.adjoint().mul_vec(&y)?;
    let rhs = ComplexMatrix::from_row_major(m, 1, hy.iter().map(|z| z / sqrt_rho).collect())?;
    let est = solve_pd(&a, &rhs)?;
    Ok((0..m).filter(|&k| slice(est[(k, 0)], &QPSK) != tx[k]).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::sample_flat;
    use crate::numkernel::gram_eigenvalues;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag12() -> ComplexMatrix {
        ComplexMatrix::from_diag(&[1.0, 2.0])
    }

    #[test]
    fn scalar_mmse_is_rho_gain() {
        let h = ComplexMatrix::identity(1);
        let g = mmse_sinr(&h, 3.0).unwrap();
        assert!((g.0[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_mmse_and_zf_coincide() {
        let mmse = mmse_sinr(&diag12(), 1.0).unwrap();
        let zf = zf_sinr(&diag12(), 1.0).unwrap();
        for (a, b) in mmse.0.iter().zip([1.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in zf.0.iter().zip([1.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_zf() {
        let h = ComplexMatrix::from_diag(&[2.0]);
        assert!((zf_sinr(&h, 1.0).unwrap().0[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zf_rejects_rank_deficient() {
        let h = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(matches!(zf_sinr(&h, 1.0), Err(Error::RankDeficient(_))));
        let wide = ComplexMatrix::zeros(1, 2);
        assert!(matches!(zf_sinr(&wide, 1.0), Err(Error::RankDeficient(_))));
        let out = receiver_sinr(ReceiverKind::Zf, &h, 1.0).unwrap();
        assert_eq!(out.0, vec![0.0, 0.0]);
    }

    #[test]
    fn mmse_dominates_zf_on_tall_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let h = sample_flat(2, 4, &mut rng).matrix;
            let m = mmse_sinr(&h, 10.0).unwrap();
            let z = zf_sinr(&h, 10.0).unwrap();
            for (a, b) in m.0.iter().zip(&z.0) {
                assert!(a + 1e-9 >= *b);
            }
        }
    }

    #[test]
    fn mutual_info_examples() {
        assert!((mutual_info(&SinrVector(vec![3.0]), 1) - 2.0).abs() < 1e-12);
        let two = mutual_info(&SinrVector(vec![1.0, 4.0]), 1);
        assert!((two - (1.0 + 5f64.log2())).abs() < 1e-12);
        assert_eq!(mutual_info(&SinrVector(vec![0.0, 0.0]), 1), 0.0);
        assert!((mutual_info(&SinrVector(vec![3.0, 3.0]), 2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn outage_boundary_is_strict() {
        let info = 1.0 + 5f64.log2();
        assert!(!outage_indicator(info, 3.0));
        assert!(outage_indicator(info, 4.0));
        assert!(!outage_indicator(2.0, 2.0));
    }

    #[test]
    fn mac_single_user_matches_point_to_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let h = sample_flat(2, 2, &mut rng).matrix;
            let p2p = outage_indicator(mutual_info(&mmse_sinr(&h, 20.0).unwrap(), 1), 4.0);
            assert_eq!(mac_user_outage(&h, 20.0, 4.0, 0, 2).unwrap(), p2p);
        }
        assert!(mac_user_outage(&diag12(), 1.0, 1.0, 1, 2).is_err());
    }

    #[test]
    fn eigen_exponent_examples() {
        let e = eigen_exponents(&[1.0], 100.0).unwrap();
        assert_eq!((e.alphas[0], e.count_above_one), (0.0, 0));
        let e = eigen_exponents(&[1e-4], 100.0).unwrap();
        assert!((e.alphas[0] - 2.0).abs() < 1e-12);
        assert_eq!(e.count_above_one, 1);
        let e = eigen_exponents(&[1e-1, 1e-3], 100.0).unwrap();
        assert!((e.alphas[0] - 0.5).abs() < 1e-12 && (e.alphas[1] - 1.5).abs() < 1e-12);
        assert_eq!(e.count_above_one, 1);
        let e = eigen_exponents(&[0.0], 10.0).unwrap();
        assert!(e.alphas[0].is_infinite() && e.count_above_one == 1);
        assert!(matches!(eigen_exponents(&[1.0], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jensen_upper_examples() {
        // M > N with R large makes the right-hand side negative.
        assert!(jensen_upper_event(&[1e12, 1e12], 1e3, 40.0, 3, 2));
        // LHS 2 ≥ 2·2^{-1} = 1.
        assert!(jensen_upper_event(&[0.0, 0.0], 10.0, 2.0, 2, 2));
    }

    #[test]
    fn jensen_lower_examples() {
        // (1/2)(2 + 5) = 3.5 and 2·log₂3.5 ≈ 3.615 < 4.
        assert!(jensen_lower_event(&diag12(), 1.0, 4.0).unwrap());
        assert!(!jensen_lower_event(&diag12(), 1.0, 3.6).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let h = sample_flat(1, 2, &mut rng).matrix;
            let out = outage_indicator(mutual_info(&mmse_sinr(&h, 5.0).unwrap(), 1), 2.0);
            assert_eq!(jensen_lower_event(&h, 5.0, 2.0).unwrap(), out);
        }
    }

    #[test]
    fn sandwich_holds_per_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2_000 {
            let h = sample_flat(2, 2, &mut rng).matrix;
            let rho = 30.0;
            let out = outage_indicator(mutual_info(&mmse_sinr(&h, rho).unwrap(), 1), 3.0);
            let lower = jensen_lower_event(&h, rho, 3.0).unwrap();
            let upper = jensen_upper_event(&gram_eigenvalues(&h).unwrap(), rho, 3.0, 2, 2);
            assert!(!lower || out);
            assert!(!out || upper);
        }
    }

    #[test]
    fn slicer_ties_pick_lowest_index() {
        assert_eq!(slice(Complex64::new(0.0, 0.0), &QPSK), 0);
        assert_eq!(slice(Complex64::new(-1.0, -0.2), &QPSK), 2);
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = ComplexMatrix::from_real_rows(&[&[1.0, 0.3], &[-0.2, 0.9]]).unwrap();
        let errors: usize = (0..1_000).map(|_| detect_streams(&h, 1e12, &mut rng).unwrap()).sum();
        assert_eq!(errors, 0);
    }

    #[test]
    fn zero_channel_guesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = ComplexMatrix::zeros(2, 2);
        let trials = 20_000;
        let errors: usize = (0..trials).map(|_| detect_streams(&h, 10.0, &mut rng).unwrap()).sum();
        let rate = errors as f64 / (2 * trials) as f64;
        assert!((rate - 0.75).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = sample_flat(3, 3, &mut rng).matrix;
        let c = 2.5;
        let a = mmse_sinr(&h, 7.0).unwrap();
        let b = mmse_sinr(&h.scale(Complex64::new(c, 0.0)), 7.0 / (c * c)).unwrap();
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).abs() <= 1e-9 * x.max(1.0));
        }
    }
}
