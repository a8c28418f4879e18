//! Closed-form diversity orders of linear MMSE receivers and the quadratic
//! integer program behind the cyclic-prefix exponent.
//!
//! Every formula applies `⌈·⌉` or `⌊·⌋` to expressions of the form
//! `M·2^{−R/M}`. Those are exact when `R/M` is an integer (a power of two);
//! otherwise a value within [`SNAP_TOL`] of an integer is snapped to it first
//! so rounding noise cannot move a diversity order across a discontinuity.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub const SNAP_TOL: f64 = 1e-9;

/// Largest `Ω` accepted by [`qip_bruteforce`].
pub const QIP_BRUTE_MAX_TOTAL: u32 = 12;
/// Largest `ℓ` accepted by [`qip_bruteforce`].
pub const QIP_BRUTE_MAX_PARTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaTag {
    FlatJoint,
    FlatJointFloorForm,
    FlatSeparate,
    MacLower,
    MacUpper,
    ZpLower,
    ZpUpper,
    ZpSiso,
    Cp,
    CpSimo,
}

/// Whether a value is the exact exponent or one side of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Exact,
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityValue {
    pub value: u64,
    #[serde(rename = "formula_tag")]
    pub formula: FormulaTag,
    pub bound: Bound,
    pub inputs: BTreeMap<&'static str, f64>,
}

impl DiversityValue {
    fn new(value: u64, formula: FormulaTag, bound: Bound, inputs: &[(&'static str, f64)]) -> Self {
        Self {
            value,
            formula,
            bound,
            inputs: inputs.iter().copied().collect(),
        }
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP_TOL {
        r
    } else {
        x
    }
}

fn ceil_snapped(x: f64) -> u64 {
    snap(x).ceil().max(0.0) as u64
}

fn floor_snapped(x: f64) -> u64 {
    snap(x).floor().max(0.0) as u64
}

/// `scale · 2^{−R/M}`, exact when `R/M` is an integer.
pub fn scaled_pow2(scale: f64, rate: f64, m: usize) -> f64 {
    let e = rate / m as f64;
    if e.fract() == 0.0 && e.abs() < 1000.0 {
        scale * 2f64.powi(-(e as i32))
    } else {
        scale * (-e).exp2()
    }
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

fn abs_diff(a: usize, b: usize) -> u64 {
    a.abs_diff(b) as u64
}

/// `S = ⌈(M·2^{−R/M} − (M−N)⁺)⁺⌉`: the number of eigen-exponents that must
/// exceed one for an outage.
pub fn flat_s(rate: f64, m: usize, n: usize) -> u64 {
    ceil_snapped(positive_part(
        scaled_pow2(m as f64, rate, m) - m.saturating_sub(n) as f64,
    ))
}

/// Diversity of the MMSE receiver with joint spatial encoding over a flat
/// Rayleigh channel: `S² + |N−M|·S`.
pub fn diversity_flat(rate: f64, m: usize, n: usize) -> DiversityValue {
    let s = flat_s(rate, m, n);
    DiversityValue::new(
        s * s + abs_diff(n, m) * s,
        FormulaTag::FlatJoint,
        Bound::Exact,
        &[("R", rate), ("M", m as f64), ("N", n as f64)],
    )
}

/// Floor-form upper bound `⌊(M·2^{−R/M} + 1 − (M−N)⁺)⁺⌋² + |N−M|·⌊…⌋`.
/// Agrees with [`diversity_flat`] except where `M·2^{−R/M}` is an integer.
pub fn diversity_flat_upper_at_integer_points(rate: f64, m: usize, n: usize) -> DiversityValue {
    let f = floor_snapped(positive_part(
        scaled_pow2(m as f64, rate, m) + 1.0 - m.saturating_sub(n) as f64,
    ));
    DiversityValue::new(
        f * f + abs_diff(n, m) * f,
        FormulaTag::FlatJointFloorForm,
        Bound::Upper,
        &[("R", rate), ("M", m as f64), ("N", n as f64)],
    )
}

/// True where `M·2^{−R/M}` is an integer, i.e. where the ceiling and floor
/// forms of the flat diversity may disagree.
pub fn is_flat_discontinuity(rate: f64, m: usize) -> bool {
    let x = snap(scaled_pow2(m as f64, rate, m));
    x.fract() == 0.0
}

/// A rate at which the flat diversity changes value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateThreshold {
    pub rate: f64,
    /// Diversity for rates at or above the threshold (up to the next one).
    pub diversity_at_or_above: u64,
    /// Diversity just below the threshold.
    pub diversity_below: u64,
}

/// Rates `R_s = M·log₂(M / (s + (M−N)⁺))` where `S` steps from `s+1` down to `s`,
/// sorted ascending.
pub fn flat_rate_thresholds(m: usize, n: usize) -> Vec<RateThreshold> {
    let deficit = m.saturating_sub(n);
    let s_max = m.min(n);
    let first = if deficit > 0 { 0 } else { 1 };
    let d = |s: u64| s * s + abs_diff(n, m) * s;
    let mut out: Vec<_> = (first..s_max)
        .map(|s| RateThreshold {
            rate: m as f64 * (m as f64 / (s + deficit) as f64).log2(),
            diversity_at_or_above: d(s as u64),
            diversity_below: d(s as u64 + 1),
        })
        .collect();
    out.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    out
}

/// Separate encoding: `N − M + 1` (defined for `N ≥ M`).
pub fn diversity_separate(m: usize, n: usize) -> Result<DiversityValue> {
    if n < m {
        return Err(Error::Domain(format!(
            "separate-encoding diversity needs N >= M, got M={m}, N={n}"
        )));
    }
    Ok(DiversityValue::new(
        (n - m + 1) as u64,
        FormulaTag::FlatSeparate,
        Bound::Exact,
        &[("M", m as f64), ("N", n as f64)],
    ))
}

/// Per-user diversity bounds `(d_L, d_U)` in a `K`-user MAC.
///
/// The upper bound keeps `(M−N)⁺`, not `(KM−N)⁺`, inside the ceiling.
pub fn diversity_mac_bounds(rate: f64, m: usize, n: usize, k: usize) -> (DiversityValue, DiversityValue) {
    let deficit = m.saturating_sub(n) as f64;
    let weight = abs_diff(n, k * m);
    let s_l = ceil_snapped(positive_part(scaled_pow2(m as f64, rate, m) - deficit));
    let s_u = ceil_snapped(positive_part(scaled_pow2((k * m) as f64, rate, k * m) - deficit));
    let inputs = [("R", rate), ("M", m as f64), ("N", n as f64), ("K", k as f64)];
    (
        DiversityValue::new(s_l * s_l + weight * s_l, FormulaTag::MacLower, Bound::Lower, &inputs),
        DiversityValue::new(s_u * s_u + weight * s_u, FormulaTag::MacUpper, Bound::Upper, &inputs),
    )
}

/// Zero-padding diversity bounds `(lower, upper)`.
pub fn diversity_zp_bounds(rate: f64, m: usize, n: usize, nu: usize, l_d: usize) -> (DiversityValue, DiversityValue) {
    let x = scaled_pow2(m as f64, rate, m);
    let weight = abs_diff((nu + 1) * n, m);
    let f = floor_snapped(positive_part(x + 1.0 - m.saturating_sub(n) as f64));
    let q = positive_part(x - (m * l_d - m) as f64);
    let c = ceil_snapped(q);
    let inputs = [
        ("R", rate),
        ("M", m as f64),
        ("N", n as f64),
        ("nu", nu as f64),
        ("L_d", l_d as f64),
    ];
    (
        DiversityValue::new(c * c + weight * c, FormulaTag::ZpLower, Bound::Lower, &inputs),
        DiversityValue::new(f * f + weight * f, FormulaTag::ZpUpper, Bound::Upper, &inputs),
    )
}

/// Single-antenna zero-padded ISI channel: full multipath diversity `ν + 1`
/// at every rate.
pub fn diversity_zp_siso(nu: usize) -> DiversityValue {
    DiversityValue::new((nu + 1) as u64, FormulaTag::ZpSiso, Bound::Exact, &[("nu", nu as f64)])
}

/// `Ω = ⌈M·L_d·2^{−R/M}⌉`.
pub fn cp_omega(rate: f64, m: usize, l_d: usize) -> u64 {
    ceil_snapped(scaled_pow2((m * l_d) as f64, rate, m))
}

/// Cyclic-prefix diversity `d_cp = Ω(2u+1) − u·L_d(u+1) + |N−M|·Ω` with
/// `u = ⌊Ω/L_d⌋`. Exact for `L_d = ν+1`; an upper bound for longer blocks.
pub fn diversity_cp(rate: f64, m: usize, n: usize, nu: usize, l_d: usize) -> Result<DiversityValue> {
    if l_d < nu + 1 {
        return Err(Error::Domain(format!(
            "cyclic prefix needs L_d >= nu + 1, got L_d={l_d}, nu={nu}"
        )));
    }
    let omega = cp_omega(rate, m, l_d);
    let l = l_d as u64;
    let u = omega / l;
    let value = omega * (2 * u + 1) - u * l * (u + 1) + abs_diff(n, m) * omega;
    let bound = if l_d == nu + 1 { Bound::Exact } else { Bound::Upper };
    Ok(DiversityValue::new(
        value,
        FormulaTag::Cp,
        bound,
        &[
            ("R", rate),
            ("M", m as f64),
            ("N", n as f64),
            ("nu", nu as f64),
            ("L_d", l_d as f64),
        ],
    ))
}

/// SIMO cyclic-prefix diversity `N·min(ν+1, ⌊2^{−R}·L_d⌋ + 1)`.
pub fn diversity_cp_simo(rate: f64, n: usize, nu: usize, l_d: usize) -> Result<DiversityValue> {
    if l_d < nu + 1 {
        return Err(Error::Domain(format!(
            "cyclic prefix needs L_d >= nu + 1, got L_d={l_d}, nu={nu}"
        )));
    }
    let f = floor_snapped(scaled_pow2(l_d as f64, rate, 1)) + 1;
    Ok(DiversityValue::new(
        n as u64 * f.min(nu as u64 + 1),
        FormulaTag::CpSimo,
        Bound::Exact,
        &[("R", rate), ("N", n as f64), ("nu", nu as f64), ("L_d", l_d as f64)],
    ))
}

/// Minimizer of `Σ n_k²` over nonnegative integers with `Σ n_k = Ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QipSolution {
    pub allocation: Vec<u32>,
    pub objective: u64,
}

impl QipSolution {
    /// True if some entry exceeds the per-variable cap `n_k ≤ cap` that the
    /// relaxed problem drops.
    pub fn exceeds_cap(&self, cap: u32) -> bool {
        self.allocation.iter().any(|&n| n > cap)
    }
}

/// Closed-form QIP optimum: `t = ℓ(u+1) − Ω` entries equal `u = ⌊Ω/ℓ⌋`, the
/// remaining `ℓ − t` entries equal `u + 1`.
pub fn qip_solve(total: u32, parts: usize) -> Result<QipSolution> {
    if parts == 0 {
        return Err(Error::Domain("QIP needs at least one variable".into()));
    }
    let l = parts as u64;
    let omega = total as u64;
    let u = omega / l;
    let t = l * (u + 1) - omega;
    let remainder = omega - u * l;
    let allocation = (0..l)
        .map(|i| if i < t { u as u32 } else { u as u32 + 1 })
        .collect();
    Ok(QipSolution {
        allocation,
        objective: l * u * u + 2 * u * remainder + remainder,
    })
}

/// Exhaustive QIP search over all compositions of `Ω` into `ℓ` parts.
/// Returns the minimizer with entries sorted ascending.
pub fn qip_bruteforce(total: u32, parts: usize) -> Result<QipSolution> {
    if parts == 0 || parts > QIP_BRUTE_MAX_PARTS || total > QIP_BRUTE_MAX_TOTAL {
        return Err(Error::Domain(format!(
            "brute force is limited to 1 <= parts <= {QIP_BRUTE_MAX_PARTS} and total <= {QIP_BRUTE_MAX_TOTAL}"
        )));
    }
    let mut best: Option<QipSolution> = None;
    let mut current = vec![0u32; parts];
    enumerate(&mut current, 0, total, &mut |v| {
        let objective: u64 = v.iter().map(|&x| (x as u64) * (x as u64)).sum();
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(QipSolution {
                allocation: v.to_vec(),
                objective,
            });
        }
    });
    let mut best = best.expect("at least one composition exists");
    best.allocation.sort_unstable();
    Ok(best)
}

fn enumerate(current: &mut [u32], idx: usize, remaining: u32, visit: &mut impl FnMut(&[u32])) {
    if idx + 1 == current.len() {
        current[idx] = remaining;
        visit(current);
        return;
    }
    for v in 0..=remaining {
        current[idx] = v;
        enumerate(current, idx + 1, remaining - v, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_three_by_three_table() {
        assert_eq!(diversity_flat(5.0, 3, 3).value, 1);
        assert_eq!(diversity_flat(3.0, 3, 3).value, 4);
        assert_eq!(diversity_flat(1.0, 3, 3).value, 9);
    }

    #[test]
    fn flat_vanishing_rate_is_full_diversity() {
        for (m, n) in [(1, 1), (2, 3), (3, 3), (4, 2), (2, 5)] {
            let expect = if n >= m { m * n } else { n * n + (m - n) * n };
            assert_eq!(diversity_flat(1e-9, m, n).value, expect as u64, "M={m} N={n}");
        }
    }

    #[test]
    fn three_by_three_thresholds() {
        let t = flat_rate_thresholds(3, 3);
        assert_eq!(t.len(), 2);
        assert!((t[0].rate - 3.0 * 1.5f64.log2()).abs() < 1e-12);
        assert!((t[1].rate - 3.0 * 3f64.log2()).abs() < 1e-12);
        assert_eq!((t[0].diversity_below, t[0].diversity_at_or_above), (9, 4));
        assert_eq!((t[1].diversity_below, t[1].diversity_at_or_above), (4, 1));
        assert_eq!(diversity_flat(t[1].rate, 3, 3).value, 1);
    }

    #[test]
    fn wide_channel_can_lose_all_diversity() {
        // M=3, N=2: S=0 once 3·2^{−R/3} ≤ 1.
        let t = flat_rate_thresholds(3, 2);
        assert_eq!(t.last().unwrap().diversity_at_or_above, 0);
        assert_eq!(diversity_flat(10.0, 3, 2).value, 0);
    }

    #[test]
    fn floor_form_at_integer_points() {
        assert!(is_flat_discontinuity(2.0, 2));
        assert_eq!(diversity_flat(2.0, 2, 2).value, 1);
        assert_eq!(diversity_flat_upper_at_integer_points(2.0, 2, 2).value, 4);
        assert!(!is_flat_discontinuity(3.0, 3));
        assert_eq!(diversity_flat_upper_at_integer_points(3.0, 3, 3).value, 4);
        assert_eq!(diversity_flat_upper_at_integer_points(0.7, 1, 1).value, 1);
    }

    #[test]
    fn snapping_survives_rounding_noise() {
        // 3·log₂3 is irrational; just above it S must already be 1.
        let r = 3.0 * 3f64.log2();
        assert_eq!(diversity_flat(r - 1e-6, 3, 3).value, 4);
        assert_eq!(diversity_flat(r, 3, 3).value, 1);
    }

    #[test]
    fn separate_encoding() {
        assert_eq!(diversity_separate(2, 2).unwrap().value, 1);
        assert_eq!(diversity_separate(2, 4).unwrap().value, 3);
        assert_eq!(diversity_separate(1, 1).unwrap().value, 1);
        assert!(matches!(diversity_separate(3, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn mac_bounds() {
        let (l, u) = diversity_mac_bounds(2.0, 2, 4, 2);
        assert_eq!((l.value, u.value), (1, 9));
        for r in [0.5, 1.3, 2.0, 4.0, 7.5] {
            let (l, u) = diversity_mac_bounds(r, 2, 3, 1);
            let flat = diversity_flat(r, 2, 3).value;
            assert_eq!((l.value, u.value), (flat, flat));
        }
    }

    #[test]
    fn zp_bounds() {
        // L_d = 1 and a non-integer M·2^{−R/M}: the bounds meet.
        let (l, u) = diversity_zp_bounds(1.3, 2, 2, 0, 1);
        assert_eq!(l.value, u.value);
        for r in [2.0, 2.5, 5.0] {
            assert_eq!(diversity_zp_bounds(r, 2, 3, 1, 2).0.value, 0);
        }
        // M=N=1, ν=2, small R: ⌊2^{−R}+1⌋ = 1 so the upper bound is 1 + 2 = 3.
        assert_eq!(diversity_zp_bounds(0.2, 1, 1, 2, 3).1.value, 3);
    }

    #[test]
    fn zp_siso_is_memory_plus_one() {
        assert_eq!(diversity_zp_siso(0).value, 1);
        assert_eq!(diversity_zp_siso(1).value, 2);
        assert_eq!(diversity_zp_siso(3).value, 4);
    }

    #[test]
    fn cp_examples() {
        let d = diversity_cp(2.0, 2, 2, 1, 2).unwrap();
        assert_eq!((d.value, d.bound), (2, Bound::Exact));
        assert_eq!(qip_solve(2, 2).unwrap().objective, 2);
        // R → 0: Ω = M·L_d, u = M.
        let (m, n, l_d) = (2, 3, 3);
        let d = diversity_cp(1e-9, m, n, 2, l_d).unwrap();
        assert_eq!(d.value as usize, m * m * l_d + (n - m) * m * l_d);
        assert_eq!(diversity_cp(1.0, 1, 1, 1, 3).unwrap().bound, Bound::Upper);
        assert!(diversity_cp(1.0, 1, 1, 2, 2).is_err());
    }

    #[test]
    fn cp_siso_small_omega_equals_omega() {
        // M=N=1 and Ω < L_d gives u = 0 and d_cp = Ω.
        for r in [0.5, 1.3, 2.2, 3.0] {
            let omega = cp_omega(r, 1, 4);
            assert!(omega < 4);
            assert_eq!(diversity_cp(r, 1, 1, 3, 4).unwrap().value, omega);
        }
    }

    #[test]
    fn cp_simo_examples() {
        assert_eq!(diversity_cp_simo(1.0, 2, 1, 2).unwrap().value, 4);
        assert_eq!(diversity_cp_simo(3.0, 2, 1, 2).unwrap().value, 2);
        for (r, nu, l_d) in [(1.0f64, 1, 4), (3.0, 1, 4), (0.5, 2, 5), (2.0, 3, 8)] {
            let expect = 1 + nu.min(((-r).exp2() * l_d as f64).floor() as usize);
            assert_eq!(diversity_cp_simo(r, 1, nu, l_d).unwrap().value, expect as u64);
        }
    }

    #[test]
    fn qip_examples() {
        let s = qip_solve(5, 3).unwrap();
        assert_eq!((s.allocation.clone(), s.objective), (vec![1, 2, 2], 9));
        assert_eq!(qip_solve(0, 4).unwrap().allocation, vec![0; 4]);
        let s = qip_solve(6, 3).unwrap();
        assert_eq!((s.allocation, s.objective), (vec![2, 2, 2], 12));
        assert!(qip_solve(3, 0).is_err());
        assert!(qip_solve(5, 3).unwrap().exceeds_cap(1));
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(qip_bruteforce(5, 3).unwrap().objective, 9);
        let s = qip_bruteforce(1, 1).unwrap();
        assert_eq!((s.allocation, s.objective), (vec![1], 1));
        assert!(qip_bruteforce(13, 2).is_err());
        assert!(qip_bruteforce(4, 7).is_err());
    }

    #[test]
    fn closed_form_matches_enumeration() {
        for total in 0..=QIP_BRUTE_MAX_TOTAL {
            for parts in 1..=QIP_BRUTE_MAX_PARTS {
                let a = qip_solve(total, parts).unwrap();
                let b = qip_bruteforce(total, parts).unwrap();
                assert_eq!(a, b, "Ω={total} ℓ={parts}");
            }
        }
    }
}
