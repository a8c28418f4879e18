//! Deterministic parallel Monte Carlo engine.
//!
//! Every trial owns a ChaCha8 stream seeded by [`trial_seed`] from the master
//! seed and a global trial index, so a sweep is a pure function of
//! `(config, grid, options, master_seed)` whatever the worker count. Workers
//! only produce integer hit counts, which are summed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_flat, sample_realization, Encoding, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::numkernel::gram_eigenvalues;
use crate::receivers::{
    detect_streams, jensen_lower_from_resolvent, jensen_upper_event, mac_jensen_upper_event, mmse_resolvent,
    outage_indicator, receiver_sinr, SinrVector,
};

pub const ENGINE_VERSION: &str = concat!("mdl-simkit/", env!("CARGO_PKG_VERSION"));

/// Trials per work item. Fixed so that batching never depends on thread count.
const BATCH: u64 = 4096;
/// Trials at different grid points are separated by this index stride.
const POINT_STRIDE: u64 = 1 << 40;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const WILSON_Z: f64 = 1.96;

/// Stateless SplitMix64-style mix of `master ⊕ γ·index`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_rng(master: u64, point: usize, trial: u64) -> (u64, ChaCha8Rng) {
    let seed = trial_seed(master, point as u64 * POINT_STRIDE + trial);
    (seed, ChaCha8Rng::seed_from_u64(seed))
}

/// 95% Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0).min(p) };
    let hi = if hits == trials { 1.0 } else { (center + half).min(1.0).max(p) };
    (lo, hi)
}

pub fn db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Evenly spaced grid `start, start+step, …` up to and including `stop`.
pub fn snr_grid(start_db: f64, stop_db: f64, step_db: f64) -> Result<Vec<f64>> {
    if !(step_db > 0.0) || !start_db.is_finite() || !stop_db.is_finite() || stop_db < start_db {
        return Err(Error::config("snr", "grid needs step > 0 and stop >= start"));
    }
    let count = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start_db + i as f64 * step_db).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub rho: f64,
    /// Channel realizations drawn at this point.
    pub trials: u64,
    /// Outage events, or symbol errors for SER sweeps.
    pub hits: u64,
    /// Opportunities per trial (1 for outage, streams for SER).
    pub per_trial: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SweepPoint {
    pub fn new(snr_db: f64, trials: u64, hits: u64, per_trial: u64) -> Self {
        let opportunities = trials * per_trial;
        let p_hat = if opportunities == 0 {
            0.0
        } else {
            hits as f64 / opportunities as f64
        };
        let (ci_low, ci_high) = wilson_interval(hits, opportunities);
        Self {
            snr_db,
            rho: db_to_linear(snr_db),
            trials,
            hits,
            per_trial,
            p_hat,
            ci_low,
            ci_high,
        }
    }
}

/// What a sweep counts per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Outage,
    SymbolError,
    /// Probability of the Jensen upper-bound event (an upper bound on outage).
    JensenUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SystemConfig,
    pub metric: Metric,
    pub points: Vec<SweepPoint>,
    pub master_seed: u64,
    pub engine: String,
}

impl SweepResult {
    /// Index pairs `(i, i+1)` where the estimate rises with SNR beyond CI overlap.
    pub fn monotonicity_violations(&self) -> Vec<(usize, usize)> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].ci_low > w[0].ci_high)
            .map(|(i, _)| (i, i + 1))
            .collect()
    }

    /// CSV with the fixed column order `snr_db,trials,hits,p_hat,ci_low,ci_high`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                p.snr_db.to_string(),
                p.trials.to_string(),
                p.hits.to_string(),
                format!("{:e}", p.p_hat),
                format!("{:e}", p.ci_low),
                format!("{:e}", p.ci_high),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub const CSV_HEADER: [&str; 6] = ["snr_db", "trials", "hits", "p_hat", "ci_low", "ci_high"];

/// Early stopping: after the base trials, keep adding blocks of the same
/// size until `target_hits` events are seen or `ceiling` trials are spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub target_hits: u64,
    pub ceiling: u64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            target_hits: 200,
            ceiling: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub trials_per_point: u64,
    pub early_stop: Option<EarlyStop>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepOptions {
    pub fn fixed(trials_per_point: u64) -> Self {
        Self {
            trials_per_point,
            ..Self::default()
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_early_stop(mut self, early_stop: EarlyStop) -> Self {
        self.early_stop = Some(early_stop);
        self
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Counts events over trials `[start, end)` of grid point `point`.
fn count_range<F>(start: u64, end: u64, master: u64, point: usize, trial: &F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    let first = start / BATCH;
    let last = end.div_ceil(BATCH);
    (first..last)
        .into_par_iter()
        .map(|b| {
            let lo = (b * BATCH).max(start);
            let hi = ((b + 1) * BATCH).min(end);
            let mut hits = 0;
            for t in lo..hi {
                let (_, mut rng) = trial_rng(master, point, t);
                hits += trial(&mut rng)?;
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn run_point<F>(options: &SweepOptions, master: u64, point: usize, trial: &F) -> Result<(u64, u64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    let base = options.trials_per_point;
    let mut trials = base;
    let mut hits = count_range(0, base, master, point, trial)?;
    if let Some(stop) = options.early_stop {
        while hits < stop.target_hits && trials < stop.ceiling {
            let next = (trials + base).min(stop.ceiling);
            hits += count_range(trials, next, master, point, trial)?;
            trials = next;
        }
    }
    Ok((trials, hits))
}

fn run_sweep<F>(
    config: &SystemConfig,
    metric: Metric,
    grid_db: &[f64],
    options: &SweepOptions,
    master_seed: u64,
    per_trial: u64,
    trial: F,
) -> Result<SweepResult>
where
    F: Fn(&mut ChaCha8Rng, f64) -> Result<u64> + Sync + Send,
{
    if options.trials_per_point == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let mut grid = grid_db.to_vec();
    grid.sort_by(f64::total_cmp);
    let points = with_pool(options.threads, || {
        grid.iter()
            .enumerate()
            .map(|(i, &snr_db)| {
                let rho = db_to_linear(snr_db);
                let (trials, hits) = run_point(options, master_seed, i, &|rng: &mut ChaCha8Rng| trial(rng, rho))?;
                Ok(SweepPoint::new(snr_db, trials, hits, per_trial))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SweepResult {
        config: config.clone(),
        metric,
        points,
        master_seed,
        engine: ENGINE_VERSION.to_string(),
    })
}

fn bits(sinrs: impl Iterator<Item = f64>) -> f64 {
    sinrs.map(f64::ln_1p).sum::<f64>() / std::f64::consts::LN_2
}

/// Whether one realization is in outage under the configured encoding.
/// For a MAC only the first user's codeword is tested.
pub fn outage_event(config: &SystemConfig, sinrs: &SinrVector) -> bool {
    let l = config.block_len() as f64;
    let m = config.m;
    let g = match config.scheme {
        Scheme::Mac => &sinrs.values()[..m],
        _ => sinrs.values(),
    };
    match config.encoding {
        Encoding::Joint => outage_indicator(bits(g.iter().copied()) / l, config.rate),
        // Antenna `a` carries its own codeword across the block: streams a, a+M, a+2M, …
        Encoding::Separate => (0..m).any(|a| {
            let info = bits(g.iter().skip(a).step_by(m).copied()) / l;
            outage_indicator(info, config.rate / m as f64)
        }),
    }
}

fn outage_trial(config: &SystemConfig, rng: &mut ChaCha8Rng, rho: f64) -> Result<u64> {
    let h = sample_realization(config, rng)?;
    let sinrs = receiver_sinr(config.receiver, &h.matrix, rho)?;
    Ok(outage_event(config, &sinrs) as u64)
}

/// Empirical outage probability on each grid point.
pub fn outage_sweep(config: &SystemConfig, grid_db: &[f64], options: &SweepOptions, master_seed: u64) -> Result<SweepResult> {
    config.validate()?;
    run_sweep(config, Metric::Outage, grid_db, options, master_seed, 1, |rng, rho| {
        outage_trial(config, rng, rho)
    })
}

/// Probability of the Jensen upper-bound event, flat or MAC only.
pub fn jensen_upper_sweep(
    config: &SystemConfig,
    grid_db: &[f64],
    options: &SweepOptions,
    master_seed: u64,
) -> Result<SweepResult> {
    config.validate()?;
    if !matches!(config.scheme, Scheme::Flat | Scheme::Mac) {
        return Err(Error::config("scheme", "the Jensen bound curve is defined for flat and mac"));
    }
    run_sweep(config, Metric::JensenUpper, grid_db, options, master_seed, 1, |rng, rho| {
        let h = sample_realization(config, rng)?;
        let eig = nonzero_eigen_slots(&h.matrix)?;
        let upper = match config.scheme {
            Scheme::Mac => mac_jensen_upper_event(&eig, rho, config.rate, config.m, config.k, config.n),
            _ => jensen_upper_event(&eig, rho, config.rate, config.m, config.n),
        };
        Ok(upper as u64)
    })
}

/// Uncoded QPSK symbol error rate through the MMSE equalizer, flat scheme only.
pub fn ser_sweep(config: &SystemConfig, grid_db: &[f64], options: &SweepOptions, master_seed: u64) -> Result<SweepResult> {
    config.validate()?;
    if config.scheme != Scheme::Flat {
        return Err(Error::config("scheme", "SER sweeps are defined for the flat scheme only"));
    }
    run_sweep(config, Metric::SymbolError, grid_db, options, master_seed, config.m as u64, |rng, rho| {
        let h = sample_flat(config.m, config.n, rng);
        Ok(detect_streams(&h.matrix, rho, rng)? as u64)
    })
}

/// Per-user outage sweeps of a MAC, every user counted on the same draws.
pub fn mac_user_sweeps(config: &SystemConfig, grid_db: &[f64], options: &SweepOptions, master_seed: u64) -> Result<Vec<SweepResult>> {
    config.validate()?;
    if config.scheme != Scheme::Mac {
        return Err(Error::config("scheme", "per-user sweeps need the mac scheme"));
    }
    (0..config.k)
        .map(|user| {
            run_sweep(config, Metric::Outage, grid_db, options, master_seed, 1, |rng, rho| {
                let h = sample_realization(config, rng)?;
                let sinrs = receiver_sinr(config.receiver, &h.matrix, rho)?;
                let rate = crate::receivers::mac_user_rate(&sinrs, user, config.m)?;
                Ok(outage_indicator(rate, config.rate) as u64)
            })
        })
        .collect()
}

/// The `min(rows, cols)` largest eigenvalues of `H^H H`.
fn nonzero_eigen_slots(h: &crate::numkernel::ComplexMatrix) -> Result<Vec<f64>> {
    let mut eig = gram_eigenvalues(h)?;
    eig.truncate(h.rows().min(h.cols()));
    Ok(eig)
}

/// The three events evaluated on one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SandwichObservation {
    pub lower: bool,
    pub outage: bool,
    pub upper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The lower-bound event held without an outage.
    LowerWithoutOutage,
    /// An outage occurred outside the upper-bound event.
    OutageWithoutUpper,
}

impl SandwichObservation {
    /// Checks `lower ⇒ outage ⇒ upper`.
    pub fn violation(&self) -> Option<ViolationKind> {
        if self.lower && !self.outage {
            Some(ViolationKind::LowerWithoutOutage)
        } else if self.outage && !self.upper {
            Some(ViolationKind::OutageWithoutUpper)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichFailure {
    pub trial: u64,
    pub seed: u64,
    pub user: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub trials: u64,
    pub snr_db: f64,
    pub violations: u64,
    pub outages: u64,
    pub first_failure: Option<SandwichFailure>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluates the sandwich on one realization for every user (one user for flat).
pub fn sandwich_observations(config: &SystemConfig, h: &crate::numkernel::ComplexMatrix, rho: f64) -> Result<Vec<SandwichObservation>> {
    let resolvent = mmse_resolvent(h, rho)?;
    let eig = nonzero_eigen_slots(h)?;
    let m = config.m;
    let users = if config.scheme == Scheme::Mac { config.k } else { 1 };
    Ok((0..users)
        .map(|u| {
            let block = &resolvent[u * m..(u + 1) * m];
            let info: f64 = block.iter().map(|r| -r.log2()).sum();
            let upper = if config.scheme == Scheme::Mac {
                mac_jensen_upper_event(&eig, rho, config.rate, m, config.k, config.n)
            } else {
                jensen_upper_event(&eig, rho, config.rate, m, config.n)
            };
            SandwichObservation {
                lower: jensen_lower_from_resolvent(block, config.rate),
                outage: outage_indicator(info, config.rate),
                upper,
            }
        })
        .collect())
}

/// SNR at which the sandwich harness runs unless told otherwise. Chosen where
/// outage at typical rates is neither certain nor negligible.
pub const SANDWICH_SNR_DB: f64 = 10.0;

/// Counts per-realization violations of `lower ⇒ outage ⇒ upper`.
pub fn sandwich_check(config: &SystemConfig, trials: u64, master_seed: u64) -> Result<SandwichReport> {
    sandwich_check_at(config, trials, master_seed, SANDWICH_SNR_DB)
}

pub fn sandwich_check_at(config: &SystemConfig, trials: u64, master_seed: u64, snr_db: f64) -> Result<SandwichReport> {
    config.validate()?;
    if !matches!(config.scheme, Scheme::Flat | Scheme::Mac) || config.encoding != Encoding::Joint {
        return Err(Error::config("scheme", "sandwich checks need a flat or mac scheme with joint encoding"));
    }
    let rho = db_to_linear(snr_db);
    let mut report = SandwichReport {
        trials,
        snr_db,
        violations: 0,
        outages: 0,
        first_failure: None,
    };
    for t in 0..trials {
        let (seed, mut rng) = trial_rng(master_seed, 0, t);
        let h = sample_realization(config, &mut rng)?;
        for (user, obs) in sandwich_observations(config, &h.matrix, rho)?.into_iter().enumerate() {
            report.outages += obs.outage as u64;
            if let Some(kind) = obs.violation() {
                report.violations += 1;
                report.first_failure.get_or_insert(SandwichFailure { trial: t, seed, user, kind });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 11), trial_seed(7, 11));
        assert_ne!(trial_seed(7, 11), trial_seed(7, 12));
        assert_ne!(trial_seed(7, 11), trial_seed(8, 11));
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(snr_grid(0.0, 10.0, 5.0).unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(snr_grid(0.0, 0.0, 1.0).unwrap(), vec![0.0]);
        assert!(snr_grid(0.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = SystemConfig::flat(1, 1, 1.0);
        assert!(outage_sweep(&cfg, &[0.0], &SweepOptions::fixed(0), 1).is_err());
    }

    #[test]
    fn invalid_config_fails_before_trials() {
        let mut cfg = SystemConfig::flat(1, 1, 1.0);
        cfg.m = 0;
        match outage_sweep(&cfg, &[0.0], &SweepOptions::fixed(10), 1) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "M"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ser_requires_flat() {
        let cfg = SystemConfig::zp(1, 1, 1, 2, 1.0);
        assert!(matches!(
            ser_sweep(&cfg, &[0.0], &SweepOptions::fixed(10), 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn early_stop_extends_until_target() {
        let cfg = SystemConfig::flat(1, 1, 1.0);
        let opts = SweepOptions::fixed(1_000).with_early_stop(EarlyStop {
            target_hits: 200,
            ceiling: 50_000,
        });
        let r = outage_sweep(&cfg, &[20.0], &opts, 3).unwrap();
        let p = &r.points[0];
        // P_out ≈ 1e-2 at 20 dB, so roughly 20k trials are needed.
        assert!(p.hits >= 200 || p.trials == 50_000);
        assert!(p.trials > 1_000 && p.trials.is_multiple_of(1_000));
    }

    #[test]
    fn separate_encoding_outage_per_antenna() {
        let mut cfg = SystemConfig::flat(2, 2, 2.0);
        cfg.encoding = Encoding::Separate;
        // Each antenna needs log₂(1+γ) ≥ 1, i.e. γ ≥ 1.
        assert!(!outage_event(&cfg, &SinrVector(vec![1.0, 3.0])));
        assert!(outage_event(&cfg, &SinrVector(vec![0.9, 30.0])));
        cfg.encoding = Encoding::Joint;
        assert!(!outage_event(&cfg, &SinrVector(vec![0.9, 30.0])));
    }

    #[test]
    fn sandwich_rejects_crafted_violation() {
        let obs = SandwichObservation {
            lower: false,
            outage: true,
            upper: jensen_upper_event(&[1e9, 1e9], 1e3, 4.0, 2, 2),
        };
        assert_eq!(obs.violation(), Some(ViolationKind::OutageWithoutUpper));
        let obs = SandwichObservation {
            lower: true,
            outage: false,
            upper: true,
        };
        assert_eq!(obs.violation(), Some(ViolationKind::LowerWithoutOutage));
    }
}
