//! Lower bounds on `γ⁺` for spectra `{β j^k}`.
//!
//! For a prime `p ≡ 1 (mod k)` the reduced residues mod `p` split into the `k`
//! cosets of the subgroup of `k`-th powers. With `A_m = Σ_{a∈Q_m} cos(2πa/p)`
//! one has `Σ A_m = -1` and `Σ A_m² = p - s`, `s = (p-1)/k`. Summing a feasible
//! `T` over the class with the most negative sum `A = -c` gives
//!
//! ```text
//! u = b₀ + Σ_{j>0, p|j} b_{βj^k} >= c / (s + c).
//! ```
//!
//! The expected class bound `c >= √(s/(k-2))` would turn this into
//! `u >= 1/(1 + √(s(k-2))) >= 1/√p` once `1 + √(s(k-2)) <= √p`. That class
//! bound does not hold for every prime (for `k = 3` it already fails at
//! `p = 19`), so [`build_classes`] reports it as an error, while
//! [`residue_classes`] returns the system with the flag cleared. The aggregate
//! [`gamma_lower_bound`] only uses primes where the computed `c/(s + c)` itself
//! reaches `1/√p`.

use std::f64::consts::TAU;

use num_integer::Roots;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SparseCosinePolynomial;
use crate::poly::OddIntPolynomial;
use crate::primes::{inv_mod, is_prime, pow_mod, primes_up_to, totient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueClassSystem {
    pub p: u64,
    pub k: u32,
    pub beta_coeff: u64,
    pub s: u64,
    /// Cosets of the `k`-th powers, each sorted, ordered by smallest element.
    pub classes: Vec<Vec<u64>>,
    pub sums: Vec<f64>,
    pub negative_index: usize,
    /// `√(s/(k-2))`.
    pub bound: f64,
    /// `β^{-1} Q_neg mod p`: at these points `cos(2π β j^k a/p)` sums to
    /// `A_neg` over the class for every `j` prime to `p`.
    pub points: Vec<u64>,
    /// `min A_m <= -√(s/(k-2))`.
    pub class_bound_holds: bool,
}

impl ResidueClassSystem {
    pub fn negative_sum(&self) -> f64 {
        self.sums[self.negative_index]
    }

    /// `c/(s + c)` with `c = -min A_m`: the bound on `u` this prime yields.
    pub fn per_prime_bound(&self) -> f64 {
        let c = -self.negative_sum();
        c / (self.s as f64 + c)
    }

    /// Index of the class containing the residue `a` (prime to `p`).
    pub fn class_of(&self, a: u64) -> usize {
        let a = a % self.p;
        self.classes
            .iter()
            .position(|c| c.binary_search(&a).is_ok())
            .expect("residue prime to p")
    }
}

/// `1 + √(s(k-2)) <= √p`.
pub fn usable(p: u64, k: u32) -> bool {
    if k < 3 || p % k as u64 != 1 {
        return false;
    }
    let s = (p - 1) / k as u64;
    1.0 + ((s * (k as u64 - 2)) as f64).sqrt() <= (p as f64).sqrt()
}

/// `Σ_{a∈class} cos(2πa/p)`, pairing `a` with `p - a`.
fn class_sum(class: &[u64], p: u64) -> f64 {
    class
        .iter()
        .filter(|&&a| 2 * a < p)
        .map(|&a| 2.0 * (TAU * a as f64 / p as f64).cos())
        .sum()
}

/// The class system with the class bound checked: a violation is an error.
pub fn build_classes(p: u64, k: u32, beta: u64) -> Result<ResidueClassSystem> {
    let sys = residue_classes(p, k, beta)?;
    if !sys.class_bound_holds {
        return Err(Error::BoundViolated(format!(
            "min class sum {} above -sqrt(s/(k-2)) = {} at p = {p}, k = {k}",
            sys.negative_sum(),
            -sys.bound
        )));
    }
    Ok(sys)
}

/// The class system; the class bound is recorded, not enforced.
pub fn residue_classes(p: u64, k: u32, beta: u64) -> Result<ResidueClassSystem> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("k = {k} must be odd and >= 3")));
    }
    if !is_prime(p) || p % k as u64 != 1 {
        return Err(Error::InvalidParameter(format!("p = {p} must be a prime = 1 mod {k}")));
    }
    if beta == 0 || beta >= p {
        return Err(Error::InvalidParameter(format!("beta = {beta} must lie in [1, p)")));
    }
    let s = (p - 1) / k as u64;
    let mut seen = vec![false; p as usize];
    let mut classes: Vec<Vec<u64>> = Vec::new();
    let powers: Vec<u64> = {
        let mut h: Vec<u64> = (1..p).map(|j| pow_mod(j, k as u64, p)).collect();
        h.sort_unstable();
        h.dedup();
        h
    };
    debug_assert_eq!(powers.len() as u64, s);
    for a in 1..p {
        if seen[a as usize] {
            continue;
        }
        let mut coset: Vec<u64> = powers.iter().map(|&h| a * h % p).collect();
        coset.sort_unstable();
        for &c in &coset {
            seen[c as usize] = true;
        }
        classes.push(coset);
    }
    let sums: Vec<f64> = classes.iter().map(|c| class_sum(c, p)).collect();
    let negative_index = (0..sums.len())
        .min_by(|&i, &j| sums[i].total_cmp(&sums[j]))
        .unwrap();
    let bound = (s as f64 / (k - 2) as f64).sqrt();
    let class_bound_holds = sums[negative_index] <= -bound + 1e-9;
    let binv = inv_mod(beta, p).expect("beta prime to p");
    let mut points: Vec<u64> = classes[negative_index]
        .iter()
        .map(|&a| a * binv % p)
        .collect();
    points.sort_unstable();
    Ok(ResidueClassSystem {
        p,
        k,
        beta_coeff: beta,
        s,
        classes,
        sums,
        negative_index,
        bound,
        points,
        class_bound_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeCheck {
    pub p: u64,
    /// `b₀ + Σ_{j>0, p|j} b_{βj^k}`.
    pub lhs: f64,
    /// `1/√p`.
    pub rhs: f64,
    /// `1/(1 + √(s(k-2)))`, the intermediate bound of the expected chain.
    pub intermediate: f64,
    /// `c/(s + c)` from the computed class sums; `lhs` must reach it for a
    /// feasible `T`.
    pub class_bound: f64,
    pub class_bound_holds: bool,
    /// `Σ_i T(a_i/p)` over the negative-class points; nonnegative for a
    /// feasible `T`.
    pub point_sum: f64,
    /// Whether `T` is nonnegative at every class point.
    pub feasible_at_points: bool,
    pub pass: bool,
}

/// `j` with `β j^k = freq`, if any.
fn kth_root_index(freq: u64, beta: u64, k: u32) -> Option<u64> {
    if !freq.is_multiple_of(beta) {
        return None;
    }
    let v = freq / beta;
    let r = v.nth_root(k);
    (r.checked_pow(k) == Some(v)).then_some(r)
}

pub fn prime_inequality_check(
    t: &SparseCosinePolynomial,
    f: &OddIntPolynomial,
    p: u64,
) -> Result<PrimeCheck> {
    if !f.is_monomial() {
        return Err(Error::InvalidParameter("the check needs f = beta x^k".into()));
    }
    let k = f.degree() as u32;
    let beta = f.leading() as u64;
    if !usable(p, k) || !is_prime(p) || beta >= p {
        return Err(Error::InvalidParameter(format!(
            "p = {p} is not admissible for k = {k}, beta = {beta}"
        )));
    }
    let sys = residue_classes(p, k, beta)?;
    let mut lhs = t.b0;
    for (&freq, &c) in &t.terms {
        let j = kth_root_index(freq, beta, k).ok_or_else(|| {
            Error::InvalidParameter(format!("frequency {freq} is not beta j^k"))
        })?;
        if j % p == 0 {
            lhs += c;
        }
    }
    let values: Vec<f64> = sys
        .points
        .iter()
        .map(|&a| t.eval_rational(a as i64, p))
        .collect();
    let point_sum: f64 = values.iter().sum();
    let rhs = 1.0 / (p as f64).sqrt();
    let intermediate = 1.0 / (1.0 + ((sys.s * (k as u64 - 2)) as f64).sqrt());
    Ok(PrimeCheck {
        p,
        lhs,
        rhs,
        intermediate,
        class_bound: sys.per_prime_bound(),
        class_bound_holds: sys.class_bound_holds,
        point_sum,
        feasible_at_points: values.iter().all(|&v| v >= -1e-12),
        pass: lhs >= rhs - 1e-9,
    })
}

/// Admissible primes up to `m`.
pub fn usable_primes(k: u32, m: u64) -> Vec<u64> {
    primes_up_to(m).into_iter().filter(|&p| usable(p, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub n: u64,
    pub k: u32,
    pub bound: f64,
    /// Cutoff `m` attaining the bound.
    pub m: u64,
    pub theta: f64,
    pub r_sum: f64,
    /// `φ(k)`, for the asymptotic comparison `1/(φ(k) log n)`.
    pub phi_k: u64,
    pub asymptotic: f64,
    /// Primes up to `m_cap` that enter the sums.
    pub primes_used: usize,
    /// Primes passing `1 + √(s(k-2)) <= √p` whose computed class sums still
    /// fall short of `1/√p`; they are left out.
    pub primes_excluded: Vec<u64>,
}

/// `max_m (R(m) - log n)/θ(m)` over admissible primes, clipped at 0, where
/// `θ(m) = Σ log p` and `R(m) = Σ log p/√p`.
///
/// Each prime contributes `b₀ + Σ_{p|j} b_j >= 1/√p`, checked here from its
/// class sums. Weighting by `log p` and using `Σ_{p|j} log p <= log j <= log n`
/// for `j > 0` gives `θ(m) b₀ + log n >= R(m)`.
pub fn gamma_lower_bound(n: u64, k: u32, m_cap: u64) -> Result<LowerBound> {
    if k < 3 || k.is_multiple_of(2) || n < 2 {
        return Err(Error::InvalidParameter(format!("need odd k >= 3 and n >= 2, got k = {k}, n = {n}")));
    }
    let ln_n = (n as f64).ln();
    let mut theta = 0.0;
    let mut r = 0.0;
    let mut best = LowerBound {
        n,
        k,
        bound: 0.0,
        m: 0,
        theta: 0.0,
        r_sum: 0.0,
        phi_k: totient(k as u64),
        asymptotic: 1.0 / (totient(k as u64) as f64 * ln_n),
        primes_used: 0,
        primes_excluded: Vec::new(),
    };
    let checked: Vec<(u64, bool)> = usable_primes(k, m_cap)
        .par_iter()
        .map(|&p| {
            let sys = residue_classes(p, k, 1).expect("admissible prime");
            (p, sys.per_prime_bound() >= 1.0 / (p as f64).sqrt())
        })
        .collect();
    for (p, ok) in checked {
        if !ok {
            best.primes_excluded.push(p);
            continue;
        }
        best.primes_used += 1;
        let lp = (p as f64).ln();
        let rp = lp / (p as f64).sqrt();
        theta += lp;
        r += rp;
        let v = (r - ln_n) / theta;
        if v > best.bound {
            best.bound = v;
            best.m = p;
            best.theta = theta;
            best.r_sum = r;
        }
    }
    Ok(best)
}
