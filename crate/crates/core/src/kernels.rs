//! Sparse cosine polynomials, the normed Fejér kernel and the surrogate
//! `G_{n,d}` whose spectrum lies in `{f(dj)}`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expsum::reduced_sum;
use crate::poly::OddIntPolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyKind {
    Fejer,
    Surrogate,
    Witness,
}

impl fmt::Display for PolyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolyKind::Fejer => "fejer",
            PolyKind::Surrogate => "surrogate",
            PolyKind::Witness => "witness",
        })
    }
}

/// `b0 + Σ c_f cos(2π f x)` over finitely many positive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCosinePolynomial {
    pub b0: f64,
    pub terms: BTreeMap<u64, f64>,
    pub meta: PolyKind,
}

/// `frac(freq * x)` computed exactly for the double `x`, folded to
/// `[-1/2, 1/2]`. Only the cosine of the phase is ever needed, so the sign of
/// `x` is dropped.
pub fn phase(freq: u64, x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 || freq == 0 {
        return 0.0;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac_bits = bits & ((1u64 << 52) - 1);
    // x = mant * 2^e exactly.
    let (mant, e) = if exp == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp - 1075)
    };
    if e >= 0 {
        return 0.0;
    }
    let shift = (-e) as u32;
    let prod = freq as u128 * mant as u128;
    let fr = if shift >= 128 {
        prod as f64 * 2f64.powi(-(shift as i32))
    } else {
        let low = prod & ((1u128 << shift) - 1);
        low as f64 * 2f64.powi(-(shift as i32))
    };
    if fr > 0.5 {
        fr - 1.0
    } else {
        fr
    }
}

/// Closed form of the normed Fejér kernel,
/// `F_n(x) = (sin(π n x) / (n sin(π x)))^2`.
pub fn fejer_value(n: u64, x: f64) -> f64 {
    let px = phase(1, x);
    if px == 0.0 {
        return 1.0;
    }
    let num = (PI * phase(n, x)).sin();
    let den = n as f64 * (PI * px).sin();
    (num / den).powi(2)
}

impl SparseCosinePolynomial {
    pub fn new(b0: f64, terms: BTreeMap<u64, f64>, meta: PolyKind) -> Self {
        SparseCosinePolynomial { b0, terms, meta }
    }

    pub fn max_frequency(&self) -> u64 {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn coeff_sum(&self) -> f64 {
        self.b0 + self.terms.values().sum::<f64>()
    }

    /// Value at a double `x`, with each `freq * x` reduced exactly mod 1.
    pub fn eval(&self, x: f64) -> f64 {
        self.b0
            + self
                .terms
                .iter()
                .map(|(&f, &c)| c * (TAU * phase(f, x)).cos())
                .sum::<f64>()
    }

    /// Value at `a / q`, reducing `freq * a` modulo `q` in integers.
    pub fn eval_rational(&self, a: i64, q: u64) -> f64 {
        self.eval_near_rational(a, q, 0.0)
    }

    /// Value at `a / q + kappa`.
    pub fn eval_near_rational(&self, a: i64, q: u64, kappa: f64) -> f64 {
        let a_mod = a.rem_euclid(q as i64) as u128;
        let qf = q as f64;
        let sign = if kappa < 0.0 { -1.0 } else { 1.0 };
        self.b0
            + self
                .terms
                .iter()
                .map(|(&f, &c)| {
                    let r = (f as u128 % q as u128 * a_mod % q as u128) as f64 / qf;
                    let t = r + sign * phase(f, kappa);
                    c * (TAU * t).cos()
                })
                .sum::<f64>()
    }

    /// Values on the uniform grid `i / m`, `0 <= i < m`.
    pub fn eval_grid(&self, m: usize) -> Vec<f64> {
        assert!(m > 0);
        let grid = GridCos::new(m as u64);
        let terms = self.grid_terms(m as u64);
        let mut out = vec![0.0; m];
        out.par_chunks_mut(GRID_CHUNK)
            .enumerate()
            .for_each(|(ci, slice)| self.grid_chunk(&grid, &terms, (ci * GRID_CHUNK) as u64, slice));
        out
    }

    /// The `count` smallest grid values as `(index, value)`, ordered by value
    /// then index. Streams over the grid without storing it.
    pub fn grid_lowest(&self, m: usize, count: usize) -> Vec<(usize, f64)> {
        assert!(m > 0 && count > 0);
        let grid = GridCos::new(m as u64);
        let terms = self.grid_terms(m as u64);
        let chunks = m.div_ceil(GRID_CHUNK);
        let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        let mut all: Vec<(usize, f64)> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|ci| {
                let start = ci * GRID_CHUNK;
                let mut buf = vec![0.0; GRID_CHUNK.min(m - start)];
                self.grid_chunk(&grid, &terms, start as u64, &mut buf);
                let mut local: Vec<(usize, f64)> =
                    buf.into_iter().enumerate().map(|(i, v)| (start + i, v)).collect();
                if local.len() > count {
                    local.select_nth_unstable_by(count - 1, cmp);
                    local.truncate(count);
                }
                local
            })
            .collect();
        all.sort_by(cmp);
        all.truncate(count);
        all
    }

    fn grid_terms(&self, m: u64) -> Vec<(u64, f64)> {
        self.terms.iter().map(|(&f, &c)| (f % m, c)).collect()
    }

    /// Fills `out[i]` with the value at `(start + i) / m`, tracking each phase
    /// as an integer mod `m`.
    fn grid_chunk(&self, grid: &GridCos, terms: &[(u64, f64)], start: u64, out: &mut [f64]) {
        let m = grid.m;
        let mut idx: Vec<u64> = terms
            .iter()
            .map(|&(f, _)| (f as u128 * start as u128 % m as u128) as u64)
            .collect();
        for v in out.iter_mut() {
            let mut acc = self.b0;
            for (t, &(f, c)) in idx.iter_mut().zip(terms.iter()) {
                acc += c * grid.cos(*t);
                *t += f;
                if *t >= m {
                    *t -= m;
                }
            }
            *v = acc;
        }
    }
}

const GRID_CHUNK: usize = 1 << 14;

/// `cos(2π t/m)` from two tables of about `√m` entries each, via the angle
/// addition formula on `t = hi·2^shift + lo`.
struct GridCos {
    m: u64,
    shift: u32,
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
}

impl GridCos {
    fn new(m: u64) -> Self {
        let shift = (64 - m.leading_zeros()).div_ceil(2);
        let at = |t: u64| {
            let a = TAU * t as f64 / m as f64;
            (a.cos(), a.sin())
        };
        let coarse = (0..=(m >> shift)).map(|h| at(h << shift)).collect();
        let fine = (0..1u64 << shift).map(at).collect();
        GridCos {
            m,
            shift,
            coarse,
            fine,
        }
    }

    #[inline]
    fn cos(&self, t: u64) -> f64 {
        let (ch, sh) = self.coarse[(t >> self.shift) as usize];
        let (cl, sl) = self.fine[(t & ((1 << self.shift) - 1)) as usize];
        ch * cl - sh * sl
    }
}

/// The normed Fejér kernel `F_n`, with `F_n(0) = 1` and `F_n >= 0`.
pub fn fejer(n: u64) -> SparseCosinePolynomial {
    assert!(n >= 1);
    let nf = n as f64;
    let terms = (1..n)
        .map(|j| (j, 2.0 * (nf - j as f64) / (nf * nf)))
        .collect();
    SparseCosinePolynomial::new(1.0 / nf, terms, PolyKind::Fejer)
}

/// Weights `α_k k d^k j^{k-1} (1/n - α_k (dj)^k / n^2)` keyed by `f(dj)`.
fn surrogate_weights(f: &OddIntPolynomial, n: u64, d: u64) -> Result<Vec<(u64, f64)>> {
    let k = f.degree() as u32;
    let lead = f.leading() as u128;
    let nf = n as f64;
    let mut out = Vec::new();
    let mut j = f.monotone_start(d);
    loop {
        let t = (d as u128)
            .checked_mul(j as u128)
            .and_then(|dj| dj.checked_pow(k))
            .and_then(|p| p.checked_mul(lead));
        let t = match t {
            Some(t) if t <= n as u128 => t,
            _ => break,
        };
        let freq = f
            .eval_i128(d as i128 * j as i128)
            .and_then(|v| u64::try_from(v).ok())
            .ok_or(Error::Overflow("evaluating a surrogate frequency"))?;
        // α_k k d^k j^{k-1} = k t / j, and 1/n - t/n^2 = (n - t) / n^2.
        let w = k as f64 * t as f64 * (n as u128 - t) as f64 / (j as f64 * nf * nf);
        j += 1;
        if w == 0.0 {
            // a_k (dj)^k = n exactly: zero weight, no term.
            continue;
        }
        if let Some(&(prev, _)) = out.last() {
            assert!(freq > prev, "frequency collision at f({d}*{})", j - 1);
        }
        out.push((freq, w));
    }
    if out.is_empty() {
        return Err(Error::EmptySurrogate {
            n,
            d: d.to_string(),
        });
    }
    Ok(out)
}

/// Normalizing constant `K` of `G_{n,d}`, i.e. `2 Σ` of the raw weights.
#[allow(non_snake_case)]
pub fn surrogate_norm_K(f: &OddIntPolynomial, n: u64, d: u64) -> Result<f64> {
    Ok(2.0 * surrogate_weights(f, n, d)?.iter().map(|w| w.1).sum::<f64>())
}

/// The surrogate `G_{n,d}`: zero free coefficient, positive coefficients at
/// the frequencies `f(dj)`, and `G_{n,d}(0) = 1`.
pub fn build_surrogate(f: &OddIntPolynomial, n: u64, d: u64) -> Result<SparseCosinePolynomial> {
    let w = surrogate_weights(f, n, d)?;
    let norm = 2.0 * w.iter().map(|w| w.1).sum::<f64>();
    let terms = w
        .into_iter()
        .map(|(freq, wj)| (freq, 2.0 * wj / norm))
        .collect();
    Ok(SparseCosinePolynomial::new(0.0, terms, PolyKind::Surrogate))
}

/// `G_{n,d}(a/q + κ) - S_d(af,q) F_n(κ) / q`.
pub fn major_arc_residual(
    f: &OddIntPolynomial,
    n: u64,
    d: u64,
    a: i64,
    q: u64,
    kappa: f64,
) -> Result<f64> {
    let g = build_surrogate(f, n, d)?;
    Ok(major_arc_residual_with(&g, f, n, d, a, q, kappa))
}

/// As [`major_arc_residual`] with a prebuilt surrogate.
pub fn major_arc_residual_with(
    g: &SparseCosinePolynomial,
    f: &OddIntPolynomial,
    n: u64,
    d: u64,
    a: i64,
    q: u64,
    kappa: f64,
) -> f64 {
    let s = reduced_sum(f, d, a, q).value;
    g.eval_near_rational(a, q, kappa) - s / q as f64 * fejer_value(n, kappa)
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    freq: String,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    b0: f64,
    terms: Vec<TermJson>,
    meta: PolyKind,
}

impl Serialize for SparseCosinePolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            b0: self.b0,
            terms: self
                .terms
                .iter()
                .map(|(f, &c)| TermJson {
                    freq: f.to_string(),
                    coeff: c,
                })
                .collect(),
            meta: self.meta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseCosinePolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolyJson::deserialize(d)?;
        let mut terms = BTreeMap::new();
        for t in raw.terms {
            let f: u64 = t
                .freq
                .parse()
                .map_err(|e| D::Error::custom(format!("frequency {:?}: {e}", t.freq)))?;
            if f == 0 {
                return Err(D::Error::custom("frequency 0 belongs in b0"));
            }
            if terms.insert(f, t.coeff).is_some() {
                return Err(D::Error::custom(format!("duplicate frequency {f}")));
            }
        }
        Ok(SparseCosinePolynomial::new(raw.b0, terms, raw.meta))
    }
}
