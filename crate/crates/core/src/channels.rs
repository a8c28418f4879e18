//! Channel sampling and construction of the equivalent channel matrices for
//! flat, multiple-access, zero-padded and cyclic-prefix transmission.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{augmented_dft, ComplexMatrix};

/// Transmission scheme, which fixes the shape of the equivalent channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Flat,
    Mac,
    Zp,
    Cp,
}

/// Joint encoding spreads one codeword over every stream; separate encoding
/// gives each transmit antenna its own codeword at rate `R/M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Joint,
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    #[default]
    Mmse,
    Zf,
}

/// Whether a DFT precoder `Q_Tx^H` is composed into the cyclic-prefix channel.
/// `None` is single-carrier transmission over the bare block-circulant matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpPrecoding {
    #[default]
    None,
    Dft,
}

fn default_users() -> usize {
    1
}

/// One experiment: antenna counts, channel memory, scheme and target rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas per user.
    #[serde(rename = "M")]
    pub m: usize,
    /// Receive antennas.
    #[serde(rename = "N")]
    pub n: usize,
    /// Users (1 for point-to-point).
    #[serde(rename = "K", default = "default_users")]
    pub k: usize,
    /// Channel memory (taps − 1).
    #[serde(default)]
    pub nu: usize,
    /// Data block length.
    #[serde(rename = "L_d", default = "default_users")]
    pub l_d: usize,
    pub scheme: Scheme,
    /// Target spectral efficiency in bits/s/Hz.
    #[serde(rename = "R")]
    pub rate: f64,
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(default)]
    pub receiver: ReceiverKind,
    #[serde(default)]
    pub cp_precoding: CpPrecoding,
}

impl SystemConfig {
    pub fn flat(m: usize, n: usize, rate: f64) -> Self {
        Self {
            m,
            n,
            k: 1,
            nu: 0,
            l_d: 1,
            scheme: Scheme::Flat,
            rate,
            encoding: Encoding::Joint,
            receiver: ReceiverKind::Mmse,
            cp_precoding: CpPrecoding::None,
        }
    }

    pub fn mac(m: usize, n: usize, k: usize, rate: f64) -> Self {
        Self {
            k,
            scheme: Scheme::Mac,
            ..Self::flat(m, n, rate)
        }
    }

    pub fn zp(m: usize, n: usize, nu: usize, l_d: usize, rate: f64) -> Self {
        Self {
            nu,
            l_d,
            scheme: Scheme::Zp,
            ..Self::flat(m, n, rate)
        }
    }

    pub fn cp(m: usize, n: usize, nu: usize, l_d: usize, rate: f64) -> Self {
        Self {
            scheme: Scheme::Cp,
            ..Self::zp(m, n, nu, l_d, rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("M", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::config("N", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("K", "must be at least 1"));
        }
        if self.l_d == 0 {
            return Err(Error::config("L_d", "must be at least 1"));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::config("R", "must be a finite positive rate"));
        }
        match self.scheme {
            Scheme::Zp | Scheme::Cp if self.l_d < self.nu + 1 => Err(Error::config(
                "L_d",
                format!("block length {} is shorter than nu + 1 = {}", self.l_d, self.nu + 1),
            )),
            Scheme::Flat | Scheme::Mac if self.nu != 0 => {
                Err(Error::config("nu", "flat and mac channels have no memory"))
            }
            Scheme::Flat | Scheme::Zp | Scheme::Cp if self.k != 1 => {
                Err(Error::config("K", "only the mac scheme has multiple users"))
            }
            _ => Ok(()),
        }
    }

    /// Total number of equalizer output streams.
    pub fn streams(&self) -> usize {
        match self.scheme {
            Scheme::Flat => self.m,
            Scheme::Mac => self.m * self.k,
            Scheme::Zp | Scheme::Cp => self.m * self.l_d,
        }
    }

    /// Normalization applied to the summed per-stream rates.
    pub fn block_len(&self) -> usize {
        match self.scheme {
            Scheme::Flat | Scheme::Mac => 1,
            Scheme::Zp | Scheme::Cp => self.l_d,
        }
    }
}

/// One random draw of the effective channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Effective channel seen by the equalizer.
    pub matrix: ComplexMatrix,
    /// ISI taps `H_0 … H_ν` for frequency-selective schemes.
    pub taps: Option<Vec<ComplexMatrix>>,
    pub scheme: Scheme,
    /// Seed of the trial that produced this draw, when known.
    pub seed: Option<u64>,
}

impl ChannelRealization {
    pub fn flat(matrix: ComplexMatrix) -> Self {
        Self {
            matrix,
            taps: None,
            scheme: Scheme::Flat,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// One CN(0, 1) sample: independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng) * std).collect();
    ComplexMatrix::from_row_major(rows, cols, data).expect("shape is consistent")
}

/// i.i.d. Rayleigh flat channel `H` of size `N × M`.
pub fn sample_flat<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ChannelRealization {
    ChannelRealization::flat(gaussian_matrix(n, m, 1.0, rng))
}

/// Stacks per-user channels into `[H_1 H_2 … H_K]`.
pub fn stack_mac(user_channels: &[ComplexMatrix]) -> Result<ChannelRealization> {
    let Some(first) = user_channels.first() else {
        return Err(Error::Dimension("MAC needs at least one user".into()));
    };
    if user_channels.iter().any(|h| h.shape() != first.shape()) {
        return Err(Error::Dimension("all user channels must share one shape".into()));
    }
    Ok(ChannelRealization {
        matrix: ComplexMatrix::hstack(user_channels)?,
        taps: None,
        scheme: Scheme::Mac,
        seed: None,
    })
}

/// Draws `K` independent `N × M` user channels and stacks them.
pub fn sample_mac<R: Rng + ?Sized>(m: usize, n: usize, k: usize, rng: &mut R) -> ChannelRealization {
    let users: Vec<_> = (0..k).map(|_| gaussian_matrix(n, m, 1.0, rng)).collect();
    stack_mac(&users).expect("users share a shape")
}

/// ISI taps `H_0 … H_ν`, each `N × M` with per-entry variance `1/(ν+1)`.
pub fn sample_isi<R: Rng + ?Sized>(m: usize, n: usize, nu: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let std = (1.0 / (nu + 1) as f64).sqrt();
    (0..=nu).map(|_| gaussian_matrix(n, m, std, rng)).collect()
}

fn tap_shape(taps: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let Some(first) = taps.first() else {
        return Err(Error::Domain("at least one channel tap is required".into()));
    };
    if taps.iter().any(|t| t.shape() != first.shape()) {
        return Err(Error::Dimension("all taps must share one shape".into()));
    }
    Ok(first.shape())
}

/// Tall banded block-Toeplitz channel of zero-padded transmission,
/// `N(L_d+ν) × M L_d`, with block `(r, c) = H_{r−c}` for `0 ≤ r−c ≤ ν`.
pub fn build_zp(taps: &[ComplexMatrix], l_d: usize) -> Result<ChannelRealization> {
    let (n, m) = tap_shape(taps)?;
    if l_d == 0 {
        return Err(Error::Domain("block length must be at least 1".into()));
    }
    let nu = taps.len() - 1;
    let mut h = ComplexMatrix::zeros(n * (l_d + nu), m * l_d);
    for c in 0..l_d {
        for (i, tap) in taps.iter().enumerate() {
            h.set_block((c + i) * n, c * m, tap);
        }
    }
    Ok(ChannelRealization {
        matrix: h,
        taps: Some(taps.to_vec()),
        scheme: Scheme::Zp,
        seed: None,
    })
}

/// Block-circulant channel of cyclic-prefix transmission, `N L_d × M L_d`,
/// generated by the block column `[H_0; H_1; …; H_ν; 0; …; 0]`.
pub fn build_cp(taps: &[ComplexMatrix], l_d: usize) -> Result<ChannelRealization> {
    let (n, m) = tap_shape(taps)?;
    let nu = taps.len() - 1;
    if l_d < nu + 1 {
        return Err(Error::Domain(format!(
            "block length {l_d} is shorter than the channel memory plus one ({})",
            nu + 1
        )));
    }
    let mut h = ComplexMatrix::zeros(n * l_d, m * l_d);
    for c in 0..l_d {
        for (i, tap) in taps.iter().enumerate() {
            h.set_block(((c + i) % l_d) * n, c * m, tap);
        }
    }
    Ok(ChannelRealization {
        matrix: h,
        taps: Some(taps.to_vec()),
        scheme: Scheme::Cp,
        seed: None,
    })
}

/// Cyclic-prefix channel with a DFT precoder composed in: `H_eq · Q_Tx^H`.
pub fn build_cp_precoded(taps: &[ComplexMatrix], l_d: usize) -> Result<ChannelRealization> {
    let mut real = build_cp(taps, l_d)?;
    let m = taps[0].cols();
    let q_tx = augmented_dft(l_d, m)?;
    real.matrix = real.matrix.matmul(&q_tx.adjoint())?;
    Ok(real)
}

/// Frequency-domain blocks `B_k = Σ_i H_i exp(−j2πik/L_d)` for `k = 0 … L_d−1`.
pub fn cp_frequency_blocks(taps: &[ComplexMatrix], l_d: usize) -> Result<Vec<ComplexMatrix>> {
    let (n, m) = tap_shape(taps)?;
    if l_d == 0 {
        return Err(Error::Domain("block length must be at least 1".into()));
    }
    Ok((0..l_d)
        .map(|k| {
            let mut b = ComplexMatrix::zeros(n, m);
            for (i, tap) in taps.iter().enumerate() {
                let angle = -2.0 * PI * ((i * k) % l_d) as f64 / l_d as f64;
                let w = Complex64::from_polar(1.0, angle);
                b = b.add(&tap.scale(w)).expect("same shape");
            }
            b
        })
        .collect())
}

/// Block-diagonal `Λ = diag(B_1, …, B_{L_d})`.
pub fn block_diagonal(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let (n, m) = blocks.first().map_or((0, 0), ComplexMatrix::shape);
    let mut out = ComplexMatrix::zeros(n * blocks.len(), m * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        out.set_block(k * n, k * m, b);
    }
    out
}

/// Result of comparing the `L1`-point frequency samples of a SIMO channel
/// against the decimated `L2`-point samples.
#[derive(Debug, Clone, Serialize)]
pub struct ResamplingReport {
    pub passed: bool,
    pub max_error: f64,
    pub decimation: usize,
}

pub const RESAMPLING_TOL: f64 = 1e-10;

/// Verifies that the `L1`-point frequency samples of `taps` equal the
/// `L2`-point samples at bins `0, T, 2T, …` where `L2 = T·L1`.
pub fn dft_resampling_check(taps_simo: &[Vec<Complex64>], l1: usize, l2: usize) -> Result<ResamplingReport> {
    let Some(first) = taps_simo.first() else {
        return Err(Error::Domain("at least one tap is required".into()));
    };
    if taps_simo.iter().any(|t| t.len() != first.len()) {
        return Err(Error::Dimension("taps must share one length".into()));
    }
    if l1 == 0 || !l2.is_multiple_of(l1) {
        return Err(Error::Domain(format!("{l2} is not a multiple of {l1}")));
    }
    if l1 < taps_simo.len() {
        return Err(Error::Domain(format!(
            "L1 = {l1} is shorter than the tap count {}",
            taps_simo.len()
        )));
    }
    let decimation = l2 / l1;
    let taps: Vec<ComplexMatrix> = taps_simo
        .iter()
        .map(|t| ComplexMatrix::from_row_major(t.len(), 1, t.clone()))
        .collect::<Result<_>>()?;
    let coarse = cp_frequency_blocks(&taps, l1)?;
    let fine = cp_frequency_blocks(&taps, l2)?;
    let max_error = coarse
        .iter()
        .enumerate()
        .map(|(q, b)| b.max_abs_diff(&fine[decimation * q]).expect("same shape"))
        .fold(0.0, f64::max);
    Ok(ResamplingReport {
        passed: max_error <= RESAMPLING_TOL,
        max_error,
        decimation,
    })
}

/// Draws a channel for `config` and returns the effective matrix seen by the equalizer.
pub fn sample_realization<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    match config.scheme {
        Scheme::Flat => Ok(sample_flat(config.m, config.n, rng)),
        Scheme::Mac => Ok(sample_mac(config.m, config.n, config.k, rng)),
        Scheme::Zp => build_zp(&sample_isi(config.m, config.n, config.nu, rng), config.l_d),
        Scheme::Cp => {
            let taps = sample_isi(config.m, config.n, config.nu, rng);
            match config.cp_precoding {
                CpPrecoding::None => build_cp(&taps, config.l_d),
                CpPrecoding::Dft => build_cp_precoded(&taps, config.l_d),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar(z: Complex64) -> ComplexMatrix {
        ComplexMatrix::from_row_major(1, 1, vec![z]).unwrap()
    }

    #[test]
    fn flat_scalar_power_is_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| sample_flat(1, 1, &mut rng).matrix[(0, 0)].norm_sqr())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn flat_2x2_frobenius_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| sample_flat(2, 2, &mut rng).matrix.frobenius_norm().powi(2))
            .sum::<f64>()
            / draws as f64;
        assert!((mean / 4.0 - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_flat(3, 2, &mut ChaCha8Rng::seed_from_u64(9)).matrix;
        let b = sample_flat(3, 2, &mut ChaCha8Rng::seed_from_u64(9)).matrix;
        assert_eq!(a, b);
        assert_eq!(a.shape(), (2, 3));
        let t1 = sample_isi(1, 2, 2, &mut ChaCha8Rng::seed_from_u64(4));
        let t2 = sample_isi(1, 2, 2, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 3);
    }

    #[test]
    fn isi_single_tap_is_flat() {
        let taps = sample_isi(2, 2, 0, &mut ChaCha8Rng::seed_from_u64(5));
        let flat = sample_flat(2, 2, &mut ChaCha8Rng::seed_from_u64(5)).matrix;
        assert_eq!(taps, vec![flat]);
    }

    #[test]
    fn isi_two_tap_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| {
                sample_isi(1, 1, 1, &mut rng)
                    .iter()
                    .map(|t| t[(0, 0)].norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn stack_mac_examples() {
        let h = ComplexMatrix::identity(2);
        assert_eq!(stack_mac(std::slice::from_ref(&h)).unwrap().matrix, h);
        let stacked = stack_mac(&[h.clone(), h.scale(c(2.0))]).unwrap().matrix;
        let expect = ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 2.0, 0.0], &[0.0, 1.0, 0.0, 2.0]]).unwrap();
        assert_eq!(stacked, expect);
        assert!(matches!(
            stack_mac(&[h, ComplexMatrix::identity(3)]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn stack_mac_columns_belong_to_owner() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let users: Vec<_> = (0..3).map(|_| sample_flat(2, 4, &mut rng).matrix).collect();
        let stacked = stack_mac(&users).unwrap().matrix;
        for j in 0..6 {
            assert_eq!(stacked.column(j), users[j / 2].column(j % 2));
        }
    }

    #[test]
    fn zp_two_tap_transcription() {
        let (h0, h1) = (Complex64::new(0.3, 0.1), Complex64::new(-0.7, 0.4));
        let z = c(0.0);
        let h = build_zp(&[scalar(h0), scalar(h1)], 2).unwrap().matrix;
        let expect = ComplexMatrix::from_rows(&[vec![h0, z], vec![h1, h0], vec![z, h1]]).unwrap();
        assert_eq!(h, expect);
    }

    #[test]
    fn zp_and_cp_without_memory_are_block_diagonal() {
        let h0 = sample_flat(2, 3, &mut ChaCha8Rng::seed_from_u64(8)).matrix;
        let bd = block_diagonal(&[h0.clone(), h0.clone(), h0.clone()]);
        assert_eq!(build_zp(std::slice::from_ref(&h0), 3).unwrap().matrix, bd);
        assert_eq!(build_cp(&[h0], 3).unwrap().matrix, bd);
    }

    #[test]
    fn cp_two_tap_circulant() {
        let (h0, h1) = (Complex64::new(1.0, 0.5), Complex64::new(0.2, -0.3));
        let z = c(0.0);
        let h = build_cp(&[scalar(h0), scalar(h1)], 3).unwrap().matrix;
        let expect = ComplexMatrix::from_rows(&[vec![h0, z, h1], vec![h1, h0, z], vec![z, h1, h0]]).unwrap();
        assert_eq!(h, expect);
    }

    #[test]
    fn cp_rejects_short_blocks_and_empty_taps() {
        let t = vec![ComplexMatrix::identity(1); 3];
        assert!(matches!(build_cp(&t, 2), Err(Error::Domain(_))));
        assert!(matches!(build_zp(&[], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn frequency_blocks_small_cases() {
        let taps = sample_isi(2, 2, 2, &mut ChaCha8Rng::seed_from_u64(10));
        let blocks = cp_frequency_blocks(&taps, 4).unwrap();
        let dc = taps.iter().fold(ComplexMatrix::zeros(2, 2), |acc, t| acc.add(t).unwrap());
        assert!(blocks[0].max_abs_diff(&dc).unwrap() < 1e-15);
        let single = cp_frequency_blocks(&taps[..1], 3).unwrap();
        assert!(single.iter().all(|b| *b == taps[0]));
    }

    #[test]
    fn resampling_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let taps: Vec<Vec<Complex64>> = (0..2).map(|_| vec![complex_gaussian(&mut rng)]).collect();
        assert!(dft_resampling_check(&taps, 2, 2).unwrap().passed);
        assert!(dft_resampling_check(&taps, 2, 4).unwrap().passed);
        let taps: Vec<Vec<Complex64>> = (0..3)
            .map(|_| (0..2).map(|_| complex_gaussian(&mut rng)).collect())
            .collect();
        let r = dft_resampling_check(&taps, 3, 9).unwrap();
        assert!(r.passed && r.decimation == 3);
        assert!(matches!(dft_resampling_check(&taps, 3, 8), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = SystemConfig::cp(1, 1, 2, 2, 1.0);
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "L_d"),
            other => panic!("unexpected {other:?}"),
        }
        cfg.l_d = 3;
        assert!(cfg.validate().is_ok());
        cfg.rate = 0.0;
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "R"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn realization_shapes_follow_scheme() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let shape = |cfg: SystemConfig, rng: &mut ChaCha8Rng| sample_realization(&cfg, rng).unwrap().matrix.shape();
        assert_eq!(shape(SystemConfig::flat(2, 3, 1.0), &mut rng), (3, 2));
        assert_eq!(shape(SystemConfig::mac(2, 4, 3, 1.0), &mut rng), (4, 6));
        assert_eq!(shape(SystemConfig::zp(2, 3, 1, 4, 1.0), &mut rng), (15, 8));
        assert_eq!(shape(SystemConfig::cp(2, 3, 1, 4, 1.0), &mut rng), (12, 8));
    }
}
