//! Prime sieving and small-integer factorization.

/// Smallest-prime-factor table for `0..=limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let p = i as u32;
                let mut m = i;
                while m <= limit {
                    if spf[m] == 0 {
                        spf[m] = p;
                    }
                    m += i;
                }
            }
        }
        Sieve { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..self.spf.len())
            .filter(move |&i| self.spf[i] as usize == i)
            .map(|i| i as u64)
    }

    /// Prime factorization as `(p, e)` pairs in increasing order of `p`.
    ///
    /// Falls back to trial division past the table.
    pub fn factorize(&self, n: u64) -> Vec<(u64, u32)> {
        if (n as usize) < self.spf.len() {
            let mut out: Vec<(u64, u32)> = Vec::new();
            let mut m = n as usize;
            while m > 1 {
                let p = self.spf[m] as usize;
                let mut e = 0;
                while m.is_multiple_of(p) {
                    m /= p;
                    e += 1;
                }
                out.push((p as u64, e));
            }
            out
        } else {
            factorize(n)
        }
    }
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    Sieve::new(limit as usize).primes().collect()
}

/// Trial-division factorization.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// `base^exp mod m` with 128-bit intermediates.
pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `m` via the extended Euclidean algorithm.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}
