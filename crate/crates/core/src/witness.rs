//! The assembled witness
//!
//! ```text
//! T(x) = δ + ((1 - δ)/Λ) Σ_{j<=s} λ^j G_{n,d_j}(x),
//! ```
//!
//! its numerical scan for negativity, and the asymptotic parameter formulas
//! (evaluated in log space, since `n = d*^{k^8}` has no machine representation).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{AveragingScheme, SchemeVerdict};
use crate::error::{Error, Result};
use crate::kernels::{build_surrogate, PolyKind, SparseCosinePolynomial};
use crate::poly::OddIntPolynomial;

/// Default number of golden-section steps per bracket.
pub const DEFAULT_REFINE_ITERS: u32 = 60;
/// Number of worst grid points that get refined.
pub const REFINE_CANDIDATES: usize = 32;
/// Default acceptance threshold for a desk-scale scan.
pub const DESK_MIN_THRESHOLD: f64 = -1e-3;

pub const DESK_CAVEAT: &str = "desk mode: moduli and n are far below the sizes that carry \
the positivity proof; the scan minimum is numerical evidence only";

/// Asymptotic parameters, all as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParameters {
    pub k: u32,
    pub delta: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub ln_dstar: f64,
    /// `n = d*^{k^8}`.
    pub n_exponent: f64,
    pub ln_n: f64,
    /// `Q = α_k d*^{1.5 k^6}`.
    pub q_exponent: f64,
    pub ln_q: f64,
    /// `R = d*^{k^8 - k^7 + k^5 - 2.5 k^4}`.
    pub r_exponent: f64,
    pub ln_r: f64,
    pub q_below_r: bool,
    /// `c₅ (k + k^8) δ^{-k}`, the predicted order of `log N`.
    pub ln_n_predicted: f64,
    /// `δ (log N)^{1/k}` at the predicted `N`.
    pub delta_scaled: f64,
}

pub fn asymptotic_parameters(delta: f64, f: &OddIntPolynomial, c5: f64, c6: f64, c7: f64) -> Result<AsymptoticParameters> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} not in (0, 1)")));
    }
    if !(c5 > 0.0 && c6 > 0.0 && c7 > 0.0) {
        return Err(Error::InvalidParameter("c5, c6, c7 must be positive".into()));
    }
    let k = f.degree() as u32;
    let kf = k as f64;
    let lead = f.leading() as f64;
    let c8 = 2.0 * (lead + 1.0) * c5.max(c6).max(c7) / c5;
    let ln_dstar = c8.ln() + c5 * delta.powi(-(k as i32));
    let n_exponent = kf.powi(8);
    let q_exponent = 1.5 * kf.powi(6);
    let r_exponent = kf.powi(8) - kf.powi(7) + kf.powi(5) - 2.5 * kf.powi(4);
    let ln_q = lead.ln() + q_exponent * ln_dstar;
    let ln_r = r_exponent * ln_dstar;
    let ln_n_predicted = c5 * (kf + kf.powi(8)) * delta.powi(-(k as i32));
    Ok(AsymptoticParameters {
        k,
        delta,
        c5,
        c6,
        c7,
        c8,
        ln_dstar,
        n_exponent,
        ln_n: n_exponent * ln_dstar,
        q_exponent,
        ln_q,
        r_exponent,
        ln_r,
        q_below_r: ln_q < ln_r,
        ln_n_predicted,
        delta_scaled: delta * ln_n_predicted.powf(1.0 / kf),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid_points: usize,
    pub grid_min: f64,
    pub grid_argmin: f64,
    pub refined_min: f64,
    pub argmin: f64,
    /// Set when the grid is coarser than four points per period of the top
    /// frequency.
    pub coarse_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub delta: f64,
    pub b0: f64,
    pub coeff_sum: f64,
    pub max_frequency: u64,
    pub term_count: usize,
    /// Terms before merging equal frequencies across moduli.
    pub raw_term_count: usize,
    pub n: u64,
    pub moduli: Vec<String>,
    /// Scheme moduli dropped because they admit no surrogate term at this `n`.
    pub dropped_moduli: usize,
    pub spectrum_ok: bool,
    pub scan: Option<ScanResult>,
    pub min_threshold: f64,
    pub scheme_verdict: Option<SchemeVerdict>,
    pub desk_mode: bool,
    pub caveat: Option<String>,
}

impl WitnessReport {
    pub fn record_scan(&mut self, scan: ScanResult) {
        self.scan = Some(scan);
    }

    /// Passes when all structural checks hold and, if scanned, the refined
    /// minimum clears the threshold.
    pub fn pass(&self) -> bool {
        let structural = self.b0 == self.delta
            && (self.coeff_sum - 1.0).abs() <= 1e-12
            && self.spectrum_ok;
        let scan_ok = self
            .scan
            .is_none_or(|s| s.refined_min >= self.min_threshold);
        let scheme_ok = self.scheme_verdict.is_none_or(|v| v.pass);
        structural && scan_ok && scheme_ok
    }
}

/// Assembles `T` from every modulus of the scheme. Each `d_j` must admit at
/// least one surrogate term at size `n`.
pub fn build_witness(
    f: &OddIntPolynomial,
    delta: f64,
    scheme: &AveragingScheme,
    n: u64,
) -> Result<(SparseCosinePolynomial, WitnessReport)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} not in (0, 1)")));
    }
    let scale = (1.0 - delta) / scheme.big_lambda;
    let mut terms: BTreeMap<u64, f64> = BTreeMap::new();
    let mut raw = 0;
    let mut moduli_u64 = Vec::with_capacity(scheme.moduli.len());
    for (j, d) in scheme.moduli.iter().enumerate() {
        let empty = || Error::EmptySurrogate {
            n,
            d: d.to_string(),
        };
        let d = d.to_u64().ok_or_else(empty)?;
        let g = build_surrogate(f, n, d)?;
        let w = scale * scheme.lambda.powi(j as i32);
        raw += g.terms.len();
        for (freq, c) in g.terms {
            *terms.entry(freq).or_insert(0.0) += w * c;
        }
        moduli_u64.push(d);
    }
    let t = SparseCosinePolynomial::new(delta, terms, PolyKind::Witness);
    let report = WitnessReport {
        delta,
        b0: t.b0,
        coeff_sum: t.coeff_sum(),
        max_frequency: t.max_frequency(),
        term_count: t.terms.len(),
        raw_term_count: raw,
        n,
        moduli: moduli_u64.iter().map(|d| d.to_string()).collect(),
        dropped_moduli: 0,
        spectrum_ok: spectrum_contained(&t, f, &moduli_u64),
        scan: None,
        min_threshold: DESK_MIN_THRESHOLD,
        scheme_verdict: None,
        desk_mode: false,
        caveat: None,
    };
    Ok((t, report))
}

/// The desk witness: the scheme built for `δ`, truncated to the moduli that
/// fit `n`, then assembled. The report carries the desk caveat.
pub fn desk_witness(
    f: &OddIntPolynomial,
    delta: f64,
    n: u64,
    c0: f64,
    cap_log2: u32,
) -> Result<(SparseCosinePolynomial, WitnessReport, AveragingScheme)> {
    let full = AveragingScheme::build(delta, f, c0, cap_log2)?;
    let (scheme, dropped) = full.truncate_for(f, n);
    let (t, mut report) = build_witness(f, delta, &scheme, n)?;
    report.dropped_moduli = dropped;
    report.desk_mode = true;
    report.caveat = Some(DESK_CAVEAT.to_string());
    Ok((t, report, scheme))
}

/// Smallest `x >= 1` with `f(x) >= v`, by bisection on the monotone tail.
fn preimage(f: &OddIntPolynomial, v: u64, start: u64) -> Option<u64> {
    let target = BigInt::from(v);
    let (mut lo, mut hi) = (start.max(1), start.max(1));
    while f.eval(&BigInt::from(hi)) < target {
        hi = hi.checked_mul(2)?;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if f.eval(&BigInt::from(mid)) < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (f.eval(&BigInt::from(lo)) == target).then_some(lo)
}

/// Every frequency is `f(x)` for an integer `x` divisible by some modulus.
pub fn spectrum_contained(t: &SparseCosinePolynomial, f: &OddIntPolynomial, moduli: &[u64]) -> bool {
    let start = f.monotone_start(1);
    let skipped = f.skipped_prefix(1);
    t.terms.keys().all(|&freq| {
        let mut xs: Vec<u64> = skipped
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == BigInt::from(freq))
            .map(|(i, _)| i as u64 + 1)
            .collect();
        xs.extend(preimage(f, freq, start));
        xs.iter().any(|x| moduli.iter().any(|d| x % d == 0))
    })
}

fn golden_min(t: &SparseCosinePolynomial, lo: f64, hi: f64, iters: u32) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let ev = |x: f64| t.eval(x.rem_euclid(1.0));
    let (mut fc, mut fd) = (ev(c), ev(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ev(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ev(d);
        }
    }
    if fc < fd {
        (fc, c.rem_euclid(1.0))
    } else {
        (fd, d.rem_euclid(1.0))
    }
}

/// Golden-section minima around the `count` lowest points of an `m`-point
/// grid, as `(value, x)` in grid order of the starting points.
pub fn refined_minima(
    t: &SparseCosinePolynomial,
    grid_points: usize,
    count: usize,
    refine_iters: u32,
) -> Vec<(f64, f64)> {
    let m = grid_points as f64;
    t.grid_lowest(grid_points, count)
        .par_iter()
        .map(|&(i, v)| {
            let x = i as f64 / m;
            let (rv, rx) = golden_min(t, x - 1.0 / m, x + 1.0 / m, refine_iters);
            if rv < v {
                (rv, rx)
            } else {
                (v, x)
            }
        })
        .collect()
}

/// Grid scan plus golden-section refinement around the worst grid points.
pub fn scan_min(t: &SparseCosinePolynomial, grid_points: usize, refine_iters: u32) -> ScanResult {
    assert!(grid_points >= 2);
    let m = grid_points as f64;
    let worst = t.grid_lowest(grid_points, 1);
    let (grid_min, grid_argmin) = (worst[0].1, worst[0].0 as f64 / m);
    let (mut refined_min, mut argmin) = (grid_min, grid_argmin);
    for (v, x) in refined_minima(t, grid_points, REFINE_CANDIDATES, refine_iters) {
        if v < refined_min {
            refined_min = v;
            argmin = x;
        }
    }
    ScanResult {
        grid_points,
        grid_min,
        grid_argmin,
        refined_min,
        argmin,
        coarse_grid: (grid_points as u128) < 4 * t.max_frequency() as u128,
    }
}

/// Smallest `δ` with `δ + (1 - δ) g_min >= threshold`, where `g_min` is the
/// minimum of the averaged surrogate (the witness at `δ = 0`).
pub fn smallest_passing_delta(g_min: f64, threshold: f64) -> f64 {
    if g_min >= threshold {
        return 0.0;
    }
    (threshold - g_min) / (1.0 - g_min)
}

/// Desk-scale `(N, δ)` point: the averaged surrogate over the given moduli is
/// scanned once and the smallest passing `δ` is read off in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: u64,
    pub max_frequency: u64,
    pub g_min: f64,
    pub delta: f64,
    /// `δ (ln N)^{1/k}`.
    pub delta_scaled: f64,
}

pub fn scaling_point(
    f: &OddIntPolynomial,
    scheme: &AveragingScheme,
    n: u64,
    grid_points: usize,
    threshold: f64,
) -> Result<ScalingPoint> {
    // Any δ gives the same averaged surrogate; build at a placeholder and strip b0.
    let (mut t, _) = build_witness(f, 0.5, scheme, n)?;
    t.b0 = 0.0;
    for c in t.terms.values_mut() {
        *c *= 2.0;
    }
    let scan = scan_min(&t, grid_points, DEFAULT_REFINE_ITERS);
    let delta = smallest_passing_delta(scan.refined_min, threshold);
    let nmax = t.max_frequency();
    Ok(ScalingPoint {
        n,
        max_frequency: nmax,
        g_min: scan.refined_min,
        delta,
        delta_scaled: delta * (nmax as f64).ln().powf(1.0 / f.degree() as f64),
    })
}

/// `T(0) = 1` when all coefficients sum to one; a cheap sanity hook.
pub fn value_at_zero(t: &SparseCosinePolynomial) -> f64 {
    t.eval(0.0)
}
