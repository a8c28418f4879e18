//! Randomized property suites behind `mdl verify`.
//!
//! Each suite draws its inputs from a seeded stream, checks one structural
//! identity on every draw and reports the number of draws that failed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{
    block_diagonal, build_cp, build_zp, complex_gaussian, cp_frequency_blocks, dft_resampling_check, sample_flat,
    sample_isi, SystemConfig,
};
use crate::error::Result;
use crate::formulas::{qip_bruteforce, qip_solve, QIP_BRUTE_MAX_PARTS, QIP_BRUTE_MAX_TOTAL};
use crate::numkernel::{augmented_dft, gram_eigenvalues, hermitian_eig, sturmian_check, ComplexMatrix};
use crate::receivers::{mmse_sinr, zf_sinr};
use crate::simkit::{sandwich_check, trial_seed};

/// ‖H_eq − Q_Rx^H Λ Q_Tx‖_F bound for the cyclic-prefix diagonalization.
pub const CP_RECONSTRUCTION_TOL: f64 = 1e-10;
/// Eigenvalue multiset agreement for the cyclic-prefix diagonalization.
pub const CP_EIGEN_TOL: f64 = 1e-8;
/// Zero-padding diagonal-block identity tolerance.
pub const ZP_BLOCK_TOL: f64 = 1e-10;
/// Relative slack for `γ_mmse ≥ γ_zf`.
pub const MMSE_ZF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySpec {
    pub master_seed: u64,
    pub sandwich_trials: u64,
    pub sturmian_draws: usize,
    pub cp_draws: usize,
    pub zp_draws: usize,
    pub resampling_draws: usize,
    pub mmse_zf_draws: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            master_seed: 0x5eed,
            sandwich_trials: 10_000,
            sturmian_draws: 1_000,
            cp_draws: 1_000,
            zp_draws: 1_000,
            resampling_draws: 100,
            mmse_zf_draws: 1_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: u64,
    pub violations: u64,
    /// Largest observed error for tolerance-based suites.
    pub max_error: Option<f64>,
    pub detail: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            violations: 0,
            max_error: None,
            detail: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            if self.detail.is_none() {
                self.detail = Some(detail());
            }
        }
    }

    fn observe_error(&mut self, err: f64) {
        self.max_error = Some(self.max_error.map_or(err, |m| m.max(err)));
    }
}

fn suite_rng(master: u64, suite: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, suite))
}

/// Flat and MAC configurations used for the sandwich suite.
pub fn sandwich_configs() -> Vec<SystemConfig> {
    vec![
        SystemConfig::flat(2, 2, 4.0),
        SystemConfig::flat(2, 3, 6.0),
        SystemConfig::flat(3, 2, 4.0),
        SystemConfig::mac(2, 4, 2, 5.0),
    ]
}

pub fn sandwich_suite(trials: u64, master: u64) -> Result<Vec<SuiteOutcome>> {
    sandwich_configs()
        .iter()
        .map(|cfg| {
            let report = sandwich_check(cfg, trials, master)?;
            let mut out = SuiteOutcome::new(format!(
                "sandwich {:?} M={} N={} K={} R={}",
                cfg.scheme, cfg.m, cfg.n, cfg.k, cfg.rate
            ));
            out.cases = report.trials;
            out.violations = report.violations;
            out.detail = Some(match &report.first_failure {
                Some(f) => format!("first failure at trial {} (seed {:#x}): {:?}", f.trial, f.seed, f.kind),
                None => format!("{} outage events observed", report.outages),
            });
            Ok(out)
        })
        .collect()
}

fn random_gram(rng: &mut ChaCha8Rng, order: usize) -> ComplexMatrix {
    let rows = rng.random_range(1..=order + 2);
    sample_flat(order, rows, rng).matrix.gram()
}

pub fn sturmian_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 1);
    let mut out = SuiteOutcome::new("sturmian interlacing");
    for i in 0..draws {
        let order = 2 + i % 7;
        let g = random_gram(&mut rng, order);
        let report = sturmian_check(&g, order - 1)?;
        out.record(report.passed, || format!("draw {i}: {:?}", report.first_violation));
    }
    Ok(out)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn cp_diagonalization_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 2);
    let mut out = SuiteOutcome::new("cp block-circulant diagonalization");
    for i in 0..draws {
        let m = rng.random_range(1..=2);
        let n = rng.random_range(1..=2);
        let nu = rng.random_range(0..=2);
        let l_d = nu + 1 + rng.random_range(0..=2);
        let taps = sample_isi(m, n, nu, &mut rng);
        let h_eq = build_cp(&taps, l_d)?.matrix;
        let blocks = cp_frequency_blocks(&taps, l_d)?;
        let q_rx = augmented_dft(l_d, n)?;
        let q_tx = augmented_dft(l_d, m)?;
        let rebuilt = &(&q_rx.adjoint() * &block_diagonal(&blocks)) * &q_tx;
        let recon = h_eq.sub(&rebuilt)?.frobenius_norm();

        let lhs = gram_eigenvalues(&h_eq)?;
        let rhs = sorted_desc(
            blocks
                .iter()
                .map(gram_eigenvalues)
                .collect::<Result<Vec<_>>>()?
                .concat(),
        );
        let eig_err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.observe_error(recon.max(eig_err));
        out.record(recon <= CP_RECONSTRUCTION_TOL && eig_err <= CP_EIGEN_TOL, || {
            format!("draw {i} (M={m} N={n} nu={nu} L_d={l_d}): reconstruction {recon:.3e}, eigenvalues {eig_err:.3e}")
        });
    }
    Ok(out)
}

pub fn zp_block_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 3);
    let mut out = SuiteOutcome::new("zp diagonal-block identity");
    for i in 0..draws {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        let nu = rng.random_range(0..=3);
        let l_d = nu + 1 + rng.random_range(0..=2);
        let taps = sample_isi(m, n, nu, &mut rng);
        let gram = build_zp(&taps, l_d)?.matrix.gram();
        let d = taps
            .iter()
            .fold(ComplexMatrix::zeros(m, m), |acc, t| acc.add(&t.gram()).expect("same shape"));
        let err = (0..l_d)
            .map(|b| gram.block(b * m, b * m, m, m).max_abs_diff(&d).expect("same shape"))
            .fold(0.0, f64::max);
        out.observe_error(err);
        out.record(err <= ZP_BLOCK_TOL, || format!("draw {i}: block error {err:.3e}"));
    }
    Ok(out)
}

pub fn qip_suite() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("qip closed form vs enumeration");
    for total in 0..=QIP_BRUTE_MAX_TOTAL {
        for parts in 1..=QIP_BRUTE_MAX_PARTS {
            let a = qip_solve(total, parts)?;
            let b = qip_bruteforce(total, parts)?;
            out.record(a == b, || format!("Ω={total} ℓ={parts}: {a:?} vs {b:?}"));
        }
    }
    Ok(out)
}

/// `(L1, L2)` pairs exercised by the resampling suite.
pub const RESAMPLING_PAIRS: [(usize, usize); 3] = [(2, 4), (3, 9), (4, 8)];

pub fn resampling_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 4);
    let mut out = SuiteOutcome::new("dft resampling subset identity");
    for i in 0..draws {
        for (l1, l2) in RESAMPLING_PAIRS {
            for n in 1..=2 {
                let taps_count = rng.random_range(1..=l1);
                let taps: Vec<Vec<Complex64>> = (0..taps_count)
                    .map(|_| (0..n).map(|_| complex_gaussian(&mut rng)).collect())
                    .collect();
                let r = dft_resampling_check(&taps, l1, l2)?;
                out.observe_error(r.max_error);
                out.record(r.passed, || format!("draw {i} ({l1},{l2}) N={n}: error {:.3e}", r.max_error));
            }
        }
    }
    Ok(out)
}

pub fn mmse_zf_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 5);
    let mut out = SuiteOutcome::new("mmse dominates zf");
    for i in 0..draws {
        let m = rng.random_range(1..=4);
        let n = m + rng.random_range(0..=2);
        let rho = 10f64.powf(rng.random_range(-1.0..4.0));
        let h = sample_flat(m, n, &mut rng).matrix;
        let mmse = mmse_sinr(&h, rho)?;
        let zf = zf_sinr(&h, rho)?;
        let ok = mmse
            .values()
            .iter()
            .zip(zf.values())
            .all(|(a, b)| *a >= b - MMSE_ZF_TOL * b.abs().max(1.0));
        out.record(ok, || format!("draw {i}: mmse {mmse:?} zf {zf:?}"));
    }
    Ok(out)
}

/// Sanity check that the eigensolver reproduces its input, used as a smoke suite.
pub fn eigensolver_suite(draws: usize, master: u64) -> Result<SuiteOutcome> {
    let mut rng = suite_rng(master, 6);
    let mut out = SuiteOutcome::new("hermitian eigensolver reconstruction");
    for i in 0..draws {
        let order = 1 + i % 8;
        let g = random_gram(&mut rng, order);
        let e = hermitian_eig(&g)?;
        let err = e.reconstruct().sub(&g)?.frobenius_norm() / g.frobenius_norm().max(f64::MIN_POSITIVE);
        out.observe_error(err);
        out.record(err <= 1e-10, || format!("draw {i}: relative error {err:.3e}"));
    }
    Ok(out)
}

/// Runs every suite.
pub fn run_all(spec: &VerifySpec) -> Result<Vec<SuiteOutcome>> {
    let seed = spec.master_seed;
    let mut all = sandwich_suite(spec.sandwich_trials, seed)?;
    all.push(sturmian_suite(spec.sturmian_draws, seed)?);
    all.push(cp_diagonalization_suite(spec.cp_draws, seed)?);
    all.push(zp_block_suite(spec.zp_draws, seed)?);
    all.push(qip_suite()?);
    all.push(resampling_suite(spec.resampling_draws, seed)?);
    all.push(mmse_zf_suite(spec.mmse_zf_draws, seed)?);
    all.push(eigensolver_suite(spec.sturmian_draws, seed)?);
    Ok(all)
}
