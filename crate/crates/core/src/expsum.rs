//! Complete exponential sums `S_d(af, q) = Σ_{s<q} e(a f(d s) / q)`.
//!
//! For odd `f` the summands for `s` and `q - s` are complex conjugates, so the
//! sum is real. [`reduced_sum`] accumulates the pairs with signed residues in
//! `(-q/2, q/2]`; since `sin` is odd the imaginary parts cancel to exactly
//! zero, which is reported back as `residual_imag`.

use std::f64::consts::TAU;

use num_integer::Integer;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::poly::OddIntPolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompleteSumResult {
    pub value: f64,
    pub q: u64,
    pub a: i64,
    pub d: u64,
    pub residual_imag: f64,
}

/// `a * f(d s) mod q` as a signed residue in `(-q/2, q/2]`.
fn signed_phase(f: &OddIntPolynomial, d: u64, a_mod: u64, s: u64, q: u64) -> i64 {
    let ds = ((d % q) as u128 * s as u128 % q as u128) as u64;
    let r = (f.eval_mod(ds, q) as u128 * a_mod as u128 % q as u128) as u64;
    if 2 * r > q {
        r as i64 - q as i64
    } else {
        r as i64
    }
}

/// `S(af, q)`.
pub fn complete_sum(f: &OddIntPolynomial, a: i64, q: u64) -> CompleteSumResult {
    reduced_sum(f, 1, a, q)
}

/// `S_d(af, q)`, the complete sum over multiples of `d`.
pub fn reduced_sum(f: &OddIntPolynomial, d: u64, a: i64, q: u64) -> CompleteSumResult {
    assert!(q >= 1 && d >= 1);
    let a_mod = a.rem_euclid(q as i64) as u64;
    let qf = q as f64;
    let mut re = 1.0; // s = 0
    let mut im = 0.0;
    let half = (q - 1) / 2;
    for s in 1..=half {
        let r1 = signed_phase(f, d, a_mod, s, q);
        let r2 = signed_phase(f, d, a_mod, q - s, q);
        debug_assert_eq!((r1 + r2).rem_euclid(q as i64), 0);
        let t1 = TAU * r1 as f64 / qf;
        let t2 = TAU * r2 as f64 / qf;
        re += t1.cos() + t2.cos();
        // r1 = r2 = q/2 is its own negative; its sine is zero in exact arithmetic.
        if 2 * r1.unsigned_abs() != q {
            im += t1.sin() + t2.sin();
        }
    }
    if q.is_multiple_of(2) && q > 1 {
        // Self-paired: 2r ≡ 0, so the term is exactly ±1.
        let r = signed_phase(f, d, a_mod, q / 2, q);
        re += if r == 0 { 1.0 } else { -1.0 };
    }
    CompleteSumResult {
        value: re,
        q,
        a,
        d,
        residual_imag: im,
    }
}

/// Naive complex accumulation in index order with phases in `[0, q)`. Used as
/// a reference for the paired sum; its imaginary part is only approximately 0.
pub fn reference_sum(f: &OddIntPolynomial, d: u64, a: i64, q: u64) -> Complex64 {
    let a_mod = a.rem_euclid(q as i64) as u64;
    (0..q)
        .map(|s| {
            let ds = ((d % q) as u128 * s as u128 % q as u128) as u64;
            let r = (f.eval_mod(ds, q) as u128 * a_mod as u128 % q as u128) as f64;
            Complex64::from_polar(1.0, TAU * r / q as f64)
        })
        .sum()
}

/// `S_d(af, q)` for `a = 0..q`, in one pass. The values agree with
/// [`reduced_sum`] to rounding but are not paired, so they carry a tiny
/// imaginary residue that is dropped here.
pub fn reduced_sums_all(f: &OddIntPolynomial, d: u64, q: u64) -> Vec<f64> {
    assert!(q >= 1 && d >= 1);
    all_sums_mod(f, d, q, &mut FftPlanner::new())
        .into_iter()
        .map(|z| z.re)
        .collect()
}

/// Shared tables for every `a` at one `(d, q)`: the values `f(ds) mod q` and
/// `cos`, `sin` of `2π r/q` for `0 <= r <= q/2`.
struct SweepTables {
    q: u64,
    values: Vec<u64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl SweepTables {
    fn new(f: &OddIntPolynomial, d: u64, q: u64) -> Self {
        let dq = d % q;
        let values = (0..q)
            .map(|s| f.eval_mod((dq as u128 * s as u128 % q as u128) as u64, q))
            .collect();
        let half = q / 2 + 1;
        let qf = q as f64;
        SweepTables {
            q,
            values,
            cos: (0..half).map(|r| (TAU * r as f64 / qf).cos()).collect(),
            sin: (0..half).map(|r| (TAU * r as f64 / qf).sin()).collect(),
        }
    }

    fn product(&self, a_mod: u64, s: u64) -> u64 {
        let v = self.values[s as usize];
        if self.q <= u32::MAX as u64 {
            v * a_mod % self.q
        } else {
            (v as u128 * a_mod as u128 % self.q as u128) as u64
        }
    }

    /// `a f(ds) mod q` as a signed residue in `(-q/2, q/2]`.
    fn phase(&self, a_mod: u64, s: u64) -> i64 {
        let q = self.q;
        let r = self.product(a_mod, s);
        if 2 * r > q {
            r as i64 - q as i64
        } else {
            r as i64
        }
    }

    fn cos_sin(&self, r: i64) -> (f64, f64) {
        let i = r.unsigned_abs() as usize;
        (self.cos[i], if r < 0 { -self.sin[i] } else { self.sin[i] })
    }

    fn paired(&self, a: u64, d: u64) -> CompleteSumResult {
        let q = self.q;
        let mut re = 1.0;
        let mut im = 0.0;
        for s in 1..=(q - 1) / 2 {
            let r1 = self.phase(a, s);
            let r2 = self.phase(a, q - s);
            let (c1, s1) = self.cos_sin(r1);
            let (c2, s2) = self.cos_sin(r2);
            re += c1 + c2;
            if 2 * r1.unsigned_abs() != q {
                im += s1 + s2;
            }
        }
        if q.is_multiple_of(2) && q > 1 {
            re += if self.phase(a, q / 2) == 0 { 1.0 } else { -1.0 };
        }
        CompleteSumResult {
            value: re,
            q,
            a: a as i64,
            d,
            residual_imag: im,
        }
    }

    /// Unpaired sum; `unit[r] = e(r/q)` over the full period, with no
    /// symmetry built in.
    fn reference(&self, a: u64, unit: &[Complex64]) -> Complex64 {
        (0..self.q).map(|s| unit[self.product(a, s) as usize]).sum()
    }
}

/// [`reduced_sum`] for `a = 0..q`, with the same pairing, sharing the value
/// and trigonometric tables across `a`.
pub fn reduced_sums_paired(f: &OddIntPolynomial, d: u64, q: u64) -> Vec<CompleteSumResult> {
    assert!(q >= 1 && d >= 1);
    let t = SweepTables::new(f, d, q);
    (0..q).map(|a| t.paired(a, d)).collect()
}

/// [`reference_sum`] for `a = 0..q`: unpaired accumulation in index order.
pub fn reference_sums_all(f: &OddIntPolynomial, d: u64, q: u64) -> Vec<Complex64> {
    assert!(q >= 1 && d >= 1);
    let t = SweepTables::new(f, d, q);
    let unit: Vec<Complex64> = (0..q)
        .map(|r| Complex64::from_polar(1.0, TAU * r as f64 / q as f64))
        .collect();
    (0..q).map(|a| t.reference(a, &unit)).collect()
}

/// One row of a Chen–Nechaev sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub q: u64,
    /// `max_a |S(af,q)| / (gcd(c(af),q)^{1/k} q^{1-1/k})` over `a` coprime to `q`.
    pub max_ratio: f64,
    pub argmax_a: u64,
    /// Running maximum over all moduli up to `q`.
    pub running_c0: f64,
}

/// `S_d(af, q)` for every residue `a`, via the value histogram of
/// `f(ds) mod q` and one length-`q` DFT.
fn all_sums_mod(f: &OddIntPolynomial, d: u64, q: u64, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut hist = vec![Complex64::new(0.0, 0.0); q as usize];
    let dq = d % q;
    for s in 0..q {
        let ds = (dq as u128 * s as u128 % q as u128) as u64;
        hist[f.eval_mod(ds, q) as usize].re += 1.0;
    }
    // Unnormalized inverse transform: X[a] = Σ_r h[r] e(a r / q).
    planner.plan_fft_inverse(q as usize).process(&mut hist);
    hist
}

fn ratio_row(f: &OddIntPolynomial, q: u64, planner: &mut FftPlanner<f64>) -> (u64, f64, u64) {
    let k = f.degree() as f64;
    let sums = all_sums_mod(f, 1, q, planner);
    // gcd(c(af), q) = gcd(c(f), q) for a coprime to q.
    let g = (f.content() % q).gcd(&q).max(1) as f64;
    let scale = g.powf(1.0 / k) * (q as f64).powf(1.0 - 1.0 / k);
    let mut best = (0.0f64, 1u64);
    for a in 1..q {
        if a.gcd(&q) != 1 {
            continue;
        }
        let r = sums[a as usize].norm() / scale;
        if r > best.0 {
            best = (r, a);
        }
    }
    (q, best.0, best.1)
}

/// Per-modulus maximum ratios for `2 <= q <= q_max`.
pub fn c0_sweep(f: &OddIntPolynomial, q_max: u64) -> Vec<RatioRow> {
    let rows: Vec<(u64, f64, u64)> = (2..=q_max)
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, q| ratio_row(f, q, planner))
        .collect();
    let mut running = 0.0f64;
    rows.into_iter()
        .map(|(q, max_ratio, argmax_a)| {
            running = running.max(max_ratio);
            RatioRow {
                q,
                max_ratio,
                argmax_a,
                running_c0: running,
            }
        })
        .collect()
}

/// Empirical value of the implicit constant in
/// `|S(f,q)| <= c0 (c(f),q)^{1/k} q^{1-1/k}`: the maximum ratio over
/// `2 <= q <= q_max` and `a` coprime to `q`.
pub fn estimate_c0(f: &OddIntPolynomial, q_max: u64) -> f64 {
    assert!(q_max >= 2);
    c0_sweep(f, q_max)
        .last()
        .map(|r| r.running_c0)
        .unwrap_or(0.0)
}

/// Maximum of [`estimate_c0`] over several polynomials of one degree.
pub fn estimate_c0_for_degree(polys: &[OddIntPolynomial], q_max: u64) -> f64 {
    polys
        .iter()
        .map(|f| estimate_c0(f, q_max))
        .fold(0.0, f64::max)
}
