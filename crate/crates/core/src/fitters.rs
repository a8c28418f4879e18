//! Diversity-order estimation from sweep data.
//!
//! The diversity order is the negative slope of `log₁₀ P` against
//! `log₁₀ ρ`, fitted by least squares over a user-chosen SNR window.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simkit::{db_to_linear, SweepPoint, SweepResult};

/// Points with fewer events than this are left out of a fit.
pub const HIT_FLOOR: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrWindow {
    pub lo_db: f64,
    pub hi_db: f64,
}

impl SnrWindow {
    pub fn new(lo_db: f64, hi_db: f64) -> Self {
        Self { lo_db, hi_db }
    }

    pub fn all() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn contains(&self, snr_db: f64) -> bool {
        (self.lo_db..=self.hi_db).contains(&snr_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeOptions {
    pub hit_floor: u64,
    /// Weight each point by its hit count (inverse variance of `log p̂`).
    pub weighted: bool,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        Self {
            hit_floor: HIT_FLOOR,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub d_hat: f64,
    pub stderr: f64,
    /// SNR span of the points that entered the fit.
    pub window: SnrWindow,
    pub points_used: usize,
}

/// Least-squares fit of `y = a + b·x` with optional weights; returns `(b, stderr(b))`.
fn ols(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let n = xs.len();
    if n <= 2 {
        return (slope, 0.0);
    }
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - my - slope * (x - mx)).powi(2))
        .sum();
    // Weights are rescaled to sum to n so the residual variance is comparable.
    let scale = n as f64 / sw;
    let sigma2 = rss * scale / (n - 2) as f64;
    (slope, (sigma2 / (sxx * scale)).sqrt())
}

/// Fits the diversity order over `window`, skipping points below the hit floor.
pub fn estimate_slope(sweep: &SweepResult, window: SnrWindow) -> Result<SlopeEstimate> {
    estimate_slope_with(&sweep.points, window, SlopeOptions::default())
}

pub fn estimate_slope_with(points: &[SweepPoint], window: SnrWindow, options: SlopeOptions) -> Result<SlopeEstimate> {
    let used: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| window.contains(p.snr_db) && p.hits >= options.hit_floor && p.hits > 0 && p.p_hat > 0.0)
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} point(s) in [{}, {}] dB reach the hit floor of {} events; need at least 2",
            used.len(),
            window.lo_db,
            window.hi_db,
            options.hit_floor
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| db_to_linear(p.snr_db).log10()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.p_hat.log10()).collect();
    let ws: Vec<f64> = used
        .iter()
        .map(|p| if options.weighted { p.hits as f64 } else { 1.0 })
        .collect();
    let (slope, stderr) = ols(&xs, &ys, &ws);
    Ok(SlopeEstimate {
        d_hat: -slope,
        stderr,
        // Record the span actually fitted so an open window stays finite.
        window: SnrWindow::new(used[0].snr_db, used[used.len() - 1].snr_db),
        points_used: used.len(),
    })
}

/// Slope between the last two points that clear the hit floor.
pub fn local_slope(points: &[SweepPoint], hit_floor: u64) -> Result<SlopeEstimate> {
    let mut qualifying: Vec<&SweepPoint> = points.iter().filter(|p| p.hits >= hit_floor && p.hits > 0).collect();
    if qualifying.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fewer than 2 points reach the hit floor of {hit_floor} events"
        )));
    }
    let tail = qualifying.split_off(qualifying.len() - 2);
    let tail: Vec<SweepPoint> = tail.into_iter().cloned().collect();
    estimate_slope_with(
        &tail,
        SnrWindow::new(tail[0].snr_db, tail[1].snr_db),
        SlopeOptions { hit_floor, weighted: false },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub d_hat: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub delta: f64,
    pub window: SnrWindow,
    pub pass: bool,
}

/// Passes iff `|d̂ − predicted| ≤ tol`.
pub fn compare(estimate: &SlopeEstimate, predicted: f64, tol: f64) -> Result<Verdict> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let delta = (estimate.d_hat - predicted).abs();
    Ok(Verdict {
        d_hat: estimate.d_hat,
        stderr: estimate.stderr,
        predicted,
        tolerance: tol,
        delta,
        window: estimate.window,
        pass: delta <= tol,
    })
}

/// Reads a sweep CSV (`snr_db,trials,hits,p_hat,ci_low,ci_high`) back into points.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != crate::simkit::CSV_HEADER {
        return Err(Error::config("csv", format!("unexpected header {headers:?}")));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::config(crate::simkit::CSV_HEADER[i], e.to_string()))
            };
            let mut p = SweepPoint::new(field(0)?, field(1)? as u64, field(2)? as u64, 1);
            p.p_hat = field(3)?;
            p.ci_low = field(4)?;
            p.ci_high = field(5)?;
            Ok(p)
        })
        .collect()
}
