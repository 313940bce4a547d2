//! Major/minor arc classification of points on the circle.
//!
//! `x` lies on the major arcs `M(Q, R)` if `|x - a/q| <= 1/(qR)` for some
//! reduced `a/q` with `q <= Q`. The smallest such `q` has `||qx||` below every
//! smaller denominator, so it is a best approximation of the second kind and
//! therefore a continued-fraction convergent; only convergents are scanned.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArcLocation {
    Major { a: u64, q: u64, kappa: f64 },
    Minor,
}

impl ArcLocation {
    pub fn is_major(&self) -> bool {
        matches!(self, ArcLocation::Major { .. })
    }
}

fn check_cutoffs(cut_q: u64, cut_r: f64) -> Result<()> {
    if cut_q < 1 || !cut_r.is_finite() || cut_r <= cut_q as f64 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= Q < R, got Q = {cut_q}, R = {cut_r}"
        )));
    }
    Ok(())
}

/// Classifies a double `x` in `[0, 1)`, taken as the exact dyadic rational it
/// represents.
pub fn classify(x: f64, cut_q: u64, cut_r: f64) -> Result<ArcLocation> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} not in [0, 1)")));
    }
    let xr = BigRational::from_float(x).expect("finite");
    classify_exact(&xr, cut_q, cut_r)
}

/// Classifies the rational `num / den` in `[0, 1)`.
pub fn classify_rational(num: u64, den: u64, cut_q: u64, cut_r: f64) -> Result<ArcLocation> {
    if den == 0 || num >= den {
        return Err(Error::InvalidParameter(format!("{num}/{den} not in [0, 1)")));
    }
    classify_exact(
        &BigRational::new(BigInt::from(num), BigInt::from(den)),
        cut_q,
        cut_r,
    )
}

fn classify_exact(x: &BigRational, cut_q: u64, cut_r: f64) -> Result<ArcLocation> {
    check_cutoffs(cut_q, cut_r)?;
    let inv_r = BigRational::from_float(cut_r).expect("finite").recip();
    let qmax = BigInt::from(cut_q);

    // Convergents h/k of x.
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    loop {
        let a_i = rest.floor().to_integer();
        let h_next = &a_i * &h + &h_prev;
        let k_next = &a_i * &k + &k_prev;
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        if k > qmax {
            break;
        }
        if let Some(hit) = test_denominator(x, &k, &inv_r) {
            return Ok(hit);
        }
        let frac = &rest - BigRational::from_integer(a_i);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    Ok(ArcLocation::Minor)
}

/// Tries both integers next to `q x`; returns the closer admissible one.
fn test_denominator(x: &BigRational, q: &BigInt, inv_r: &BigRational) -> Option<ArcLocation> {
    let qx = x * BigRational::from_integer(q.clone());
    let lo = qx.floor().to_integer();
    let hi = qx.ceil().to_integer();
    let mut best: Option<(BigRational, BigInt)> = None;
    for a in [lo, hi] {
        if !a.gcd(q).is_one() {
            continue;
        }
        let dist = (&qx - BigRational::from_integer(a.clone())).abs();
        if &dist <= inv_r && best.as_ref().is_none_or(|(d, _)| &dist < d) {
            best = Some((dist, a));
        }
    }
    best.map(|(_, a)| {
        let kappa = x - BigRational::new(a.clone(), q.clone());
        ArcLocation::Major {
            a: a.to_u64().unwrap(),
            q: q.to_u64().unwrap(),
            kappa: kappa.to_f64().unwrap(),
        }
    })
}
