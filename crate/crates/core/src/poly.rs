//! Odd integer polynomials `f(x) = α_k x^k + ... + α_1 x` with every even
//! coefficient zero and `α_k > 0`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct OddIntPolynomial {
    /// `coeffs[i]` is the coefficient of `x^i`; `coeffs[0]` is always zero.
    coeffs: Vec<i64>,
    least_index: usize,
    content: u64,
}

impl OddIntPolynomial {
    /// Builds a polynomial from the coefficients of `x, x^2, x^3, ...` in that
    /// order, so `[2, 0, 3]` is `3x^3 + 2x`.
    pub fn new(low_to_high: &[i64]) -> Result<Self> {
        if low_to_high.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        let mut coeffs = Vec::with_capacity(low_to_high.len() + 1);
        coeffs.push(0);
        coeffs.extend_from_slice(low_to_high);
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        for (power, &value) in coeffs.iter().enumerate() {
            if power % 2 == 0 && value != 0 {
                return Err(Error::EvenCoefficient { power, value });
            }
        }
        let degree = coeffs.len() - 1;
        if degree == 0 {
            return Err(Error::EmptyPolynomial);
        }
        let leading = coeffs[degree];
        if leading <= 0 {
            return Err(Error::NonPositiveLeading(leading));
        }
        if degree < 3 {
            return Err(Error::DegreeTooSmall(degree));
        }
        Ok(Self::from_power_indexed(coeffs))
    }

    fn from_power_indexed(coeffs: Vec<i64>) -> Self {
        let least_index = coeffs.iter().position(|&c| c != 0).unwrap();
        let content = coeffs
            .iter()
            .filter(|&&c| c != 0)
            .fold(0u64, |g, &c| g.gcd(&c.unsigned_abs()));
        OddIntPolynomial {
            coeffs,
            least_index,
            content,
        }
    }

    /// The monomial `beta * x^k`.
    pub fn monomial(beta: i64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::DegreeTooSmall(0));
        }
        let mut c = vec![0; k];
        c[k - 1] = beta;
        Self::new(&c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Smallest power with a nonzero coefficient.
    pub fn least_index(&self) -> usize {
        self.least_index
    }

    /// gcd of the nonzero coefficients.
    pub fn content(&self) -> u64 {
        self.content
    }

    pub fn leading(&self) -> i64 {
        self.coeffs[self.degree()]
    }

    pub fn coeff(&self, power: usize) -> i64 {
        self.coeffs.get(power).copied().unwrap_or(0)
    }

    /// Coefficients of `x, x^2, ...`, the CLI literal order.
    pub fn low_to_high(&self) -> &[i64] {
        &self.coeffs[1..]
    }

    pub fn is_monomial(&self) -> bool {
        self.least_index == self.degree()
    }

    /// Exact value `f(x)`.
    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + BigInt::from(c);
        }
        acc
    }

    /// `f(x)` when it fits in an `i128`.
    pub fn eval_i128(&self, x: i128) -> Option<i128> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc.checked_mul(x)?.checked_add(c as i128)?;
        }
        Some(acc)
    }

    /// `f(x) mod q` in `[0, q)`, computed without overflow for any `x`.
    pub fn eval_mod(&self, x: u64, q: u64) -> u64 {
        let qq = q as i128;
        let xr = (x % q) as i128;
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = (acc * xr + (c as i128).rem_euclid(qq)) % qq;
        }
        acc as u64
    }

    /// `g(x) = f(d x)`.
    pub fn dilate(&self, d: u64) -> Result<Self> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut dp: i128 = 1;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                dp = dp
                    .checked_mul(d as i128)
                    .ok_or(Error::Overflow("dilating"))?;
            }
            let v = (c as i128)
                .checked_mul(dp)
                .filter(|v| i64::try_from(*v).is_ok())
                .ok_or(Error::Overflow("dilating"))?;
            out.push(v as i64);
        }
        Ok(Self::from_power_indexed(out))
    }

    /// First index `j0 >= 1` such that `f(d j) >= 1` and `f(d j)` strictly
    /// increases for every `j >= j0`.
    pub fn monotone_start(&self, d: u64) -> u64 {
        let k = self.degree() as f64;
        let lead = self.leading() as f64;
        // For x >= bound, f(x) > 0 and f'(x) > 0.
        let tail: f64 = self.coeffs[..self.degree()]
            .iter()
            .map(|&c| (c as f64).abs())
            .sum();
        let dtail: f64 = self.coeffs[..self.degree()]
            .iter()
            .enumerate()
            .map(|(i, &c)| i as f64 * (c as f64).abs())
            .sum();
        let bound = 1.0 + (tail / lead).max(dtail / (k * lead)).max(1.0);
        let jmax = (bound / d as f64).ceil() as u64 + 1;
        let mut j0 = 1;
        for j in 1..=jmax {
            let here = self.eval_i128(d as i128 * j as i128);
            let next = self.eval_i128(d as i128 * (j as i128 + 1));
            let ok = match (here, next) {
                (Some(h), Some(n)) => h >= 1 && n > h,
                _ => true,
            };
            if !ok {
                j0 = j + 1;
            }
        }
        j0
    }

    /// The increasing values `f(d j) <= n` for `j >= monotone_start(d)`.
    pub fn values_up_to(&self, n: u64, d: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut j = self.monotone_start(d);
        loop {
            match self.eval_i128(d as i128 * j as i128) {
                Some(v) if v <= n as i128 => out.push(v as u64),
                _ => break,
            }
            j += 1;
        }
        out
    }

    /// Values `f(d j)` skipped by the monotone-prefix rule, for diagnostics.
    pub fn skipped_prefix(&self, d: u64) -> Vec<BigInt> {
        (1..self.monotone_start(d))
            .map(|j| self.eval(&BigInt::from(d as u128 * j as u128)))
            .collect()
    }
}

impl TryFrom<Vec<i64>> for OddIntPolynomial {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<OddIntPolynomial> for Vec<i64> {
    fn from(p: OddIntPolynomial) -> Self {
        p.low_to_high().to_vec()
    }
}

impl FromStr for OddIntPolynomial {
    type Err = Error;

    /// Comma-separated coefficients of `x, x^2, ...`, e.g. `"2,0,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&coeffs)
    }
}

impl fmt::Display for OddIntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (power, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mag = BigInt::from(c).abs();
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            if !first {
                write!(f, " ")?;
            }
            let body = match (mag == BigInt::from(1), power) {
                (true, 1) => "x".to_string(),
                (true, p) => format!("x^{p}"),
                (false, 1) => format!("{mag}x"),
                (false, p) => format!("{mag}x^{p}"),
            };
            if first {
                write!(f, "{sign}{body}")?;
            } else {
                write!(f, "{sign} {body}")?;
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> OddIntPolynomial {
        OddIntPolynomial::new(c).unwrap()
    }

    #[test]
    fn construction() {
        let cube = p(&[0, 0, 1]);
        assert_eq!((cube.degree(), cube.least_index(), cube.content()), (3, 3, 1));
        let f = p(&[2, 0, 3]);
        assert_eq!((f.degree(), f.least_index(), f.content()), (3, 1, 1));
        assert_eq!(p(&[6, 0, 9, 0, 0]).content(), 3);
        assert_eq!(f.to_string(), "3x^3 + 2x");
        assert_eq!(p(&[-1, 0, 1]).to_string(), "x^3 - x");
    }

    #[test]
    fn rejects_invalid() {
        assert!(matches!(
            OddIntPolynomial::new(&[0, 1, 0]),
            Err(Error::EvenCoefficient { power: 2, .. })
        ));
        assert!(matches!(
            OddIntPolynomial::new(&[0, 0, -1]),
            Err(Error::NonPositiveLeading(-1))
        ));
        assert!(matches!(
            OddIntPolynomial::new(&[1]),
            Err(Error::DegreeTooSmall(1))
        ));
        assert!(matches!(
            OddIntPolynomial::new(&[]),
            Err(Error::EmptyPolynomial)
        ));
        assert!("1,x,3".parse::<OddIntPolynomial>().is_err());
        assert_eq!("2,0,3".parse::<OddIntPolynomial>().unwrap(), p(&[2, 0, 3]));
    }

    #[test]
    fn evaluation() {
        let cube = p(&[0, 0, 1]);
        assert_eq!(cube.eval(&BigInt::from(10)), BigInt::from(1000));
        assert_eq!(cube.eval(&BigInt::from(-7)), BigInt::from(-343));
        assert_eq!(p(&[2, 0, 3]).eval(&BigInt::from(2)), BigInt::from(28));
        let big = p(&[0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let x = BigInt::from(1_000_000_000i64);
        assert_eq!(big.eval(&x), BigInt::from(10).pow(81));
        assert_eq!(cube.eval_mod(4, 9), 1);
        assert_eq!(p(&[-1, 0, 1]).eval_mod(1, 5), 0);
    }

    #[test]
    fn dilation() {
        let g = p(&[0, 0, 1]).dilate(2).unwrap();
        assert_eq!(g.low_to_high(), &[0, 0, 8]);
        assert_eq!(g.content(), 8);
        let f = p(&[2, 0, 3]);
        assert_eq!(f.dilate(1).unwrap(), f);
        let g = f.dilate(3).unwrap();
        assert_eq!(g.low_to_high(), &[6, 0, 81]);
        assert_eq!(g.content(), 3);
        assert!(g.content() <= 3 * 2u64.pow(3));
    }

    #[test]
    fn values() {
        let cube = p(&[0, 0, 1]);
        assert_eq!(cube.values_up_to(30, 1), vec![1, 8, 27]);
        assert_eq!(cube.values_up_to(30, 2), vec![8]);
        let g = p(&[-1, 0, 1]);
        assert_eq!(g.monotone_start(1), 2);
        assert_eq!(g.values_up_to(30, 1), vec![6, 24]);
        assert_eq!(g.skipped_prefix(1), vec![BigInt::from(0)]);
        // x^5 - 5x^3 + x: f(1) = -3, f(2) = -6, f(3) = 111.
        let h = p(&[1, 0, -5, 0, 1]);
        assert_eq!(h.monotone_start(1), 3);
    }

    fn corpus() -> Vec<OddIntPolynomial> {
        [
            &[0, 0, 1][..],
            &[0, 0, 0, 0, 1],
            &[2, 0, 3],
            &[-1, 0, 1],
            &[0, 0, 4, 0, 6],
            &[5, 0, -3, 0, 0, 0, 2],
            &[0, 0, 12],
        ]
        .iter()
        .map(|c| p(c))
        .collect()
    }

    #[test]
    fn content_bounds_after_dilation() {
        for f in corpus() {
            let l = f.least_index() as u32;
            let k = f.degree() as u32;
            let al = f.coeff(f.least_index()).unsigned_abs() as u128;
            for d in 1..=50u64 {
                let g = f.dilate(d).unwrap();
                let bound = (d as u128).pow(l) * al.pow(k);
                assert!(g.content() as u128 <= bound, "{f} d={d}");
                if f.content() == 1 {
                    let sharp = (d as u128).pow(l) * (d.gcd(&(al as u64)) as u128).pow(k - l);
                    assert!(g.content() as u128 <= sharp, "{f} d={d}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn oddness(
            a1 in -50i64..50, a3 in 1i64..50, a5 in 0i64..20,
            x in -1_000_000_000i64..1_000_000_000,
        ) {
            let f = p(&[a1, 0, a3, 0, a5]);
            let bx = BigInt::from(x);
            prop_assert_eq!(f.eval(&-bx.clone()), -f.eval(&bx));
        }

        #[test]
        fn eval_mod_agrees_with_exact(
            a1 in -50i64..50, a3 in 1i64..50, x in 0u64..1_000_000, q in 1u64..10_000,
        ) {
            let f = p(&[a1, 0, a3]);
            let exact = f.eval(&BigInt::from(x)).mod_floor(&BigInt::from(q));
            prop_assert_eq!(BigInt::from(f.eval_mod(x, q)), exact);
        }
    }
}
