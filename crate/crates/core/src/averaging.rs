//! Averaging over dilations: moduli `1 = d_0 | d_1 | ... | d_s` and weights
//! `λ^j` such that for every modulus `q`
//!
//! ```text
//! (1/Λ) Σ_j λ^j τ(d_j, q) >= -δ,      Λ = 1 + λ + ... + λ^s,
//! ```
//!
//! where `τ(d, q)` is 1 if `q | d^l` and `max(-α r^{-β}, -1)` otherwise, with
//! `r = q / gcd(q, d^l)`.
//!
//! The moduli are products of prime-power ladders. Primes below the threshold
//! `p*` climb `a* j`; a prime `p` with `p*^t <= p < p*^{t+1}` climbs
//! `floor(j / t)`. Everything here works from factorizations, so the moduli
//! themselves (which are enormous) are only materialized for reporting.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::OddIntPolynomial;
use crate::primes::{is_prime, Sieve};
use crate::CMP_SLACK;

/// `τ(d, q)` for an explicit modulus `d`.
pub fn tau(d: &BigUint, q: u64, alpha: f64, beta: f64, l: u32) -> f64 {
    // gcd(q, d^l) by peeling gcd(rest, d) at most l times.
    let mut rest = q;
    for _ in 0..l {
        if rest == 1 {
            break;
        }
        let dm = (d % rest).to_u64().unwrap();
        let g = rest.gcd(&dm);
        if g == 1 {
            break;
        }
        rest /= g;
    }
    tau_from_r(rest, alpha, beta)
}

/// `τ` given `r = q / gcd(q, d^l)`.
pub fn tau_from_r(r: u64, alpha: f64, beta: f64) -> f64 {
    if r == 1 {
        1.0
    } else {
        (-alpha * (r as f64).powf(-beta)).max(-1.0)
    }
}

/// `τ*(p^j, p^k)`, unclipped.
pub fn tau_star_prime_power(p: u64, j: u32, k: u32, alpha: f64, beta: f64, l: u32) -> f64 {
    if k <= j * l {
        1.0
    } else {
        -alpha * (p as f64).powf(-beta * (k - j * l) as f64)
    }
}

/// `τ(p^j, p^k)`, clipped at -1.
pub fn tau_prime_power(p: u64, j: u32, k: u32, alpha: f64, beta: f64, l: u32) -> f64 {
    tau_star_prime_power(p, j, k, alpha, beta, l).max(-1.0)
}

/// Smallest prime `p` with `2^{-β} >= (α + 1) / (α + p^β)`.
pub fn threshold_pstar(alpha: f64, beta: f64) -> u64 {
    let lambda = 2f64.powf(-beta);
    let mut p = 2u64;
    loop {
        if is_prime(p) && lambda >= (alpha + 1.0) / (alpha + (p as f64).powf(beta)) {
            return p;
        }
        p += 1;
    }
}

/// Right-hand side of the small-prime condition at `p = 2`, `μ = λ`.
pub fn astar_rhs(alpha: f64, beta: f64) -> f64 {
    let lambda = 2f64.powf(-beta);
    (alpha * lambda * (1.0 - lambda) + 2.0 * lambda - 1.0) / (lambda * (2.0 * lambda - 1.0))
}

/// Smallest `a >= 1` with `2^{β a l} >= astar_rhs(α, β)`.
pub fn threshold_astar(alpha: f64, beta: f64, l: u32) -> u32 {
    let rhs = astar_rhs(alpha, beta);
    let mut a = 1u32;
    while 2f64.powf(beta * (a * l) as f64) < rhs {
        a += 1;
    }
    a
}

/// Largest `t` with `base^t <= p`.
fn floor_log(p: u64, base: u64) -> u32 {
    let mut t = 0;
    let mut acc = base as u128;
    while acc <= p as u128 {
        t += 1;
        acc *= base as u128;
    }
    t
}

/// Exponent of `p` in `d_j` for a ladder with thresholds `(p*, a*)`.
fn ladder_exponent(p: u64, j: u32, pstar: u64, astar: u32) -> u32 {
    if p < pstar {
        astar * j
    } else {
        j / floor_log(p, pstar)
    }
}

/// Exponents `a_0 <= ... <= a_s` of the prime `p` in the moduli.
pub fn exponents_for_prime(p: u64, s: u32, alpha: f64, beta: f64, l: u32) -> Vec<u32> {
    let pstar = threshold_pstar(alpha, beta);
    let astar = threshold_astar(alpha, beta, l);
    (0..=s).map(|j| ladder_exponent(p, j, pstar, astar)).collect()
}

/// `c₂ = max{2, a*} log₂ p*`.
pub fn c2(alpha: f64, beta: f64, l: u32) -> f64 {
    let pstar = threshold_pstar(alpha, beta);
    let astar = threshold_astar(alpha, beta, l);
    (astar.max(2) as f64) * (pstar as f64).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimeLadder {
    pub p: u64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingScheme {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// `Λ = Σ_{j<=s} λ^j`.
    pub big_lambda: f64,
    pub s: u32,
    /// Least index `l` of the polynomial; moduli enter `τ` through `d^l`.
    pub l: u32,
    pub pstar: u64,
    pub astar: u32,
    pub c2: f64,
    pub c3: f64,
    /// Measured `t log m / m` for the `t` primes up to `m = 2^s`.
    pub c4: f64,
    pub c1: f64,
    #[serde(with = "biguint_strings")]
    pub moduli: Vec<BigUint>,
    pub prime_exponents: Vec<PrimeLadder>,
    /// True for the full-ladder moduli, whose exponents follow the ladder
    /// formula for every prime (including the implicit zero ladder past `2^s`).
    pub recipe: bool,
}

mod biguint_strings {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|d| d.to_str_radix(10)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|s| BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom(s)))
            .collect()
    }
}

/// Result of an exhaustive sweep over moduli `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeVerdict {
    pub q_max: u64,
    pub worst_q: u64,
    pub worst_value: f64,
    pub delta: f64,
    pub pass: bool,
}

fn geometric(lambda: f64, s: u32) -> f64 {
    (0..=s).map(|j| lambda.powi(j as i32)).sum()
}

impl AveragingScheme {
    /// Builds the scheme for `δ` from the polynomial and the constant `c₀`.
    /// `cap_log2` bounds `s`, since all primes up to `2^s` are enumerated.
    pub fn build(delta: f64, f: &OddIntPolynomial, c0: f64, cap_log2: u32) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} not in (0, 1)")));
        }
        if !c0.is_finite() || c0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("c0 = {c0} must be positive and finite")));
        }
        let alpha = c0 * f.coeff(f.least_index()).unsigned_abs() as f64;
        let beta = 1.0 / f.degree() as f64;
        let l = f.least_index() as u32;
        let lambda = 2f64.powf(-beta);
        let c3 = ((1.0 + alpha) / (1.0 - lambda)).max(alpha / lambda);
        let target = delta / c3;
        let mut s = 0u32;
        while lambda.powi(s as i32 + 1) > target {
            s += 1;
            if s > cap_log2 {
                return Err(Error::SchemeTooLarge { s, cap_log2 });
            }
        }
        let pstar = threshold_pstar(alpha, beta);
        let astar = threshold_astar(alpha, beta, l);
        let m = 1u64 << s;
        let primes: Vec<u64> = Sieve::new(m as usize).primes().collect();
        let prime_exponents: Vec<PrimeLadder> = primes
            .iter()
            .map(|&p| PrimeLadder {
                p,
                exponents: (0..=s).map(|j| ladder_exponent(p, j, pstar, astar)).collect(),
            })
            .collect();
        let moduli = moduli_from_ladders(&prime_exponents, s);
        let t = primes.len() as f64;
        let c4 = if m >= 2 { t * (m as f64).ln() / m as f64 } else { 0.0 };
        let c2 = (astar.max(2) as f64) * (pstar as f64).log2();
        let c1 = c2 * c3.powf(1.0 / beta) * c4 / 2f64.ln();
        Ok(AveragingScheme {
            delta,
            alpha,
            beta,
            lambda,
            big_lambda: geometric(lambda, s),
            s,
            l,
            pstar,
            astar,
            c2,
            c3,
            c4,
            c1,
            moduli,
            prime_exponents,
            recipe: true,
        })
    }

    /// A scheme with caller-chosen moduli, which must form a divisor chain
    /// starting at 1. Used for desk-scale experiments.
    pub fn from_moduli(delta: f64, f: &OddIntPolynomial, c0: f64, moduli: &[u64]) -> Result<Self> {
        if moduli.first() != Some(&1) {
            return Err(Error::InvalidParameter("moduli must start at 1".into()));
        }
        for w in moduli.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "moduli must increase by divisibility, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let alpha = c0 * f.coeff(f.least_index()).unsigned_abs() as f64;
        let beta = 1.0 / f.degree() as f64;
        let l = f.least_index() as u32;
        let lambda = 2f64.powf(-beta);
        let s = moduli.len() as u32 - 1;
        let mut primes: Vec<u64> = moduli
            .iter()
            .flat_map(|&d| crate::primes::factorize(d).into_iter().map(|(p, _)| p))
            .collect();
        primes.sort_unstable();
        primes.dedup();
        let prime_exponents = primes
            .iter()
            .map(|&p| PrimeLadder {
                p,
                exponents: moduli
                    .iter()
                    .map(|&d| {
                        let mut e = 0;
                        let mut x = d;
                        while x % p == 0 {
                            x /= p;
                            e += 1;
                        }
                        e
                    })
                    .collect(),
            })
            .collect();
        Ok(AveragingScheme {
            delta,
            alpha,
            beta,
            lambda,
            big_lambda: geometric(lambda, s),
            s,
            l,
            pstar: threshold_pstar(alpha, beta),
            astar: threshold_astar(alpha, beta, l),
            c2: f64::NAN,
            c3: ((1.0 + alpha) / (1.0 - lambda)).max(alpha / lambda),
            c4: f64::NAN,
            c1: f64::NAN,
            moduli: moduli.iter().map(|&d| BigUint::from(d)).collect(),
            prime_exponents,
            recipe: false,
        })
    }

    pub fn m(&self) -> u64 {
        1u64 << self.s
    }

    /// Exponent of the prime `p` in `d_j`.
    pub fn exponent(&self, p: u64, j: u32) -> u32 {
        if self.recipe {
            if p > self.m() {
                0
            } else {
                ladder_exponent(p, j, self.pstar, self.astar)
            }
        } else {
            self.prime_exponents
                .binary_search_by_key(&p, |e| e.p)
                .map(|i| self.prime_exponents[i].exponents[j as usize])
                .unwrap_or(0)
        }
    }

    /// `τ(d_j, q)` from the factorization of `q`.
    pub fn tau_j(&self, j: u32, q_factors: &[(u64, u32)]) -> f64 {
        let mut r: u64 = 1;
        for &(p, e) in q_factors {
            let have = self.l * self.exponent(p, j);
            if e > have {
                r *= p.pow(e - have);
            }
        }
        tau_from_r(r, self.alpha, self.beta)
    }

    /// `(1/Λ) Σ_j λ^j τ(d_j, q)`.
    pub fn averaged(&self, q_factors: &[(u64, u32)]) -> f64 {
        (0..=self.s)
            .map(|j| self.lambda.powi(j as i32) * self.tau_j(j, q_factors))
            .sum::<f64>()
            / self.big_lambda
    }

    /// `(1/Λ) Σ_j λ^j τ(p^{a_j}, p^k)` for one prime power.
    pub fn prime_restricted(&self, p: u64, k: u32) -> f64 {
        (0..=self.s)
            .map(|j| {
                self.lambda.powi(j as i32)
                    * tau_prime_power(p, self.exponent(p, j), k, self.alpha, self.beta, self.l)
            })
            .sum::<f64>()
            / self.big_lambda
    }

    /// The prime of the reduction step: a prime of `r = q / gcd(q, d_m^l)` for
    /// the last index `m` with `q ∤ d_m^l`, or any prime of `q` when `q`
    /// divides every `d_j^l`. Returns `(p, v_p(q))`, or `None` for `q = 1`.
    pub fn reduction_prime(&self, q_factors: &[(u64, u32)]) -> Option<(u64, u32)> {
        let first = *q_factors.first()?;
        let divides = |j: u32| {
            q_factors
                .iter()
                .all(|&(p, e)| e <= self.l * self.exponent(p, j))
        };
        let last_bad = (0..=self.s).rev().find(|&j| !divides(j));
        match last_bad {
            None => Some(first),
            Some(m) => q_factors
                .iter()
                .find(|&&(p, e)| e > self.l * self.exponent(p, m))
                .copied(),
        }
    }

    /// Natural logarithm of `d_s`.
    pub fn ln_ds(&self) -> f64 {
        self.prime_exponents
            .iter()
            .map(|pl| pl.exponents[self.s as usize] as f64 * (pl.p as f64).ln())
            .sum()
    }

    /// The prefix of moduli whose surrogate has at least one term at size `n`,
    /// i.e. `α_k d^k <= n`, with `Λ` renormalized over the kept indices.
    pub fn truncate_for(&self, f: &OddIntPolynomial, n: u64) -> (Self, usize) {
        let k = f.degree() as u32;
        let lead = BigUint::from(f.leading() as u64);
        let nb = BigUint::from(n);
        let keep = self
            .moduli
            .iter()
            .take_while(|d| &lead * d.pow(k) <= nb)
            .count()
            .max(1);
        let mut out = self.clone();
        let dropped = self.moduli.len() - keep;
        out.moduli.truncate(keep);
        out.s = keep as u32 - 1;
        out.big_lambda = geometric(self.lambda, out.s);
        for pl in &mut out.prime_exponents {
            pl.exponents.truncate(keep);
        }
        out.prime_exponents.retain(|pl| pl.exponents.iter().any(|&e| e > 0));
        out.recipe = false;
        (out, dropped)
    }

    /// Exhaustive check of the averaged bound for every `1 <= q <= q_max`.
    pub fn verify(&self, q_max: u64) -> SchemeVerdict {
        let sieve = Sieve::new(q_max as usize);
        let chunk = 4096u64;
        let (worst_value, worst_q) = (0..q_max.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk + 1;
                let hi = ((c + 1) * chunk).min(q_max);
                (lo..=hi)
                    .map(|q| (self.averaged(&sieve.factorize(q)), q))
                    .fold((f64::INFINITY, 0), min_pair)
            })
            .reduce(|| (f64::INFINITY, 0), min_pair);
        SchemeVerdict {
            q_max,
            worst_q,
            worst_value,
            delta: self.delta,
            pass: worst_value >= -self.delta - CMP_SLACK,
        }
    }
}

fn min_pair(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1 && b.1 != 0) || a.1 == 0 {
        b
    } else {
        a
    }
}

fn moduli_from_ladders(ladders: &[PrimeLadder], s: u32) -> Vec<BigUint> {
    (0..=s as usize)
        .into_par_iter()
        .map(|j| {
            let mut acc = BigUint::one();
            for pl in ladders {
                let e = pl.exponents[j];
                if e > 0 {
                    acc *= BigUint::from(pl.p).pow(e);
                }
            }
            acc
        })
        .collect()
}

/// Worst margin of `Σ_{j<=s} μ^j τ*(p^j, p^k) + μ^{s+1}/(1-μ)` over
/// `1 <= s <= s_max`, `1 <= k <= 8 l s`. Nonnegative (up to rounding) when
/// `1 > μ >= (α+1)/(α+p^β)`.
pub fn large_prime_margin(p: u64, mu: f64, alpha: f64, beta: f64, l: u32, s_max: u32) -> f64 {
    let mut worst = f64::INFINITY;
    for s in 1..=s_max {
        for k in 1..=8 * l * s {
            let lhs: f64 = (0..=s)
                .map(|j| mu.powi(j as i32) * tau_star_prime_power(p, j, k, alpha, beta, l))
                .sum();
            worst = worst.min(lhs + mu.powi(s as i32 + 1) / (1.0 - mu));
        }
    }
    worst
}

/// Same shape with the clipped `τ` and exponents `a j`; nonnegative when
/// `p^{β a l} >= (α p^{-β}(1-μ) + 2μ - 1)/(μ(2μ - 1))`.
pub fn small_prime_margin(p: u64, a: u32, mu: f64, alpha: f64, beta: f64, l: u32, s_max: u32) -> f64 {
    let mut worst = f64::INFINITY;
    for s in 1..=s_max {
        for k in 1..=8 * l * s {
            let lhs: f64 = (0..=s)
                .map(|j| mu.powi(j as i32) * tau_prime_power(p, a * j, k, alpha, beta, l))
                .sum();
            worst = worst.min(lhs + mu.powi(s as i32 + 1) / (1.0 - mu));
        }
    }
    worst
}

/// Ladder check for one prime: worst margin of
/// `Σ λ^j τ(p^{a_j}, p^k) + (1+α) λ^{s+1}/(1-λ)` over `k <= 8 l s`, and
/// whether `p^{a_s} < 2^{c₂ s}`.
pub fn ladder_margin(p: u64, s: u32, alpha: f64, beta: f64, l: u32) -> (f64, bool) {
    let lambda = 2f64.powf(-beta);
    let a = exponents_for_prime(p, s, alpha, beta, l);
    let mut worst = f64::INFINITY;
    for k in 1..=8 * l * s {
        let lhs: f64 = (0..=s)
            .map(|j| lambda.powi(j as i32) * tau_prime_power(p, a[j as usize], k, alpha, beta, l))
            .sum();
        worst = worst.min(lhs + (1.0 + alpha) * lambda.powi(s as i32 + 1) / (1.0 - lambda));
    }
    let size_ok = (p as f64).log2() * (a[s as usize] as f64) < c2(alpha, beta, l) * s as f64;
    (worst, size_ok)
}

/// Check of the reduction step for one `q`: the prime-restricted sum at the
/// reduction prime bounds the full sum from below, term by term.
pub fn reduction_holds(scheme: &AveragingScheme, q_factors: &[(u64, u32)]) -> bool {
    let Some((p, k)) = scheme.reduction_prime(q_factors) else {
        return scheme.averaged(q_factors) == 1.0;
    };
    (0..=scheme.s).all(|j| {
        let full = scheme.tau_j(j, q_factors);
        let restricted =
            tau_prime_power(p, scheme.exponent(p, j), k, scheme.alpha, scheme.beta, scheme.l);
        full >= restricted - CMP_SLACK
    }) && scheme.averaged(q_factors) >= scheme.prime_restricted(p, k) - CMP_SLACK
}

/// `true` when every modulus divides the next.
pub fn is_divisor_chain(moduli: &[BigUint]) -> bool {
    moduli.windows(2).all(|w| (&w[1] % &w[0]).is_zero())
}
