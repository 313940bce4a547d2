//! Acceptance run: one PASS/FAIL line per criterion at its pinned tolerance.
//!
//! Criteria that cannot be met are listed in `EXPECTED_FAILURES` together
//! with the reason. The target exits nonzero when the observed set of
//! failures differs from that list in either direction, so an unexpected
//! regression and an unexpected recovery both show up.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vdc_core::averaging::{
    exponents_for_prime, large_prime_margin, ladder_margin, small_prime_margin, tau, threshold_astar,
    threshold_pstar,
};
use vdc_core::expsum::{c0_sweep, complete_sum, estimate_c0, reduced_sums_all, reduced_sums_paired, reference_sums_all};
use vdc_core::kernels::{build_surrogate, fejer, surrogate_norm_K};
use vdc_core::lowerbound::{gamma_lower_bound, prime_inequality_check, residue_classes, usable_primes};
use vdc_core::oracles::diffset::{forbidden_differences, is_diff_avoiding};
use vdc_core::oracles::{gamma_plus_bracket, max_diff_avoiding, CERTIFY_TOL};
use vdc_core::primes::primes_up_to;
use vdc_core::witness::{desk_witness, scaling_point, scan_min, DEFAULT_REFINE_ITERS, DESK_MIN_THRESHOLD};
use vdc_core::{AveragingScheme, OddIntPolynomial};

/// Criteria that fail by analysis, not by defect.
///
/// 8: the scheme for δ = 0.3 has `s = 17` and `d₁` already contains every
///    prime below `2^17`, so at `n = 10⁶` only `d₀ = 1` fits and the witness
///    is `0.3 + 0.7 G`, whose minimum is about -0.14.
/// 10: the class bound `min A_m <= -√(s/(k-2))` is false for `k = 3` at
///    several primes (first at `p = 19`); the two identities hold.
const EXPECTED_FAILURES: &[u32] = &[8, 10];

const CAP_LOG2: u32 = 24;

fn corpus() -> Vec<OddIntPolynomial> {
    [vec![0i64, 0, 1], vec![0, 0, 0, 0, 1], vec![2, 0, 3]]
        .iter()
        .map(|c| OddIntPolynomial::new(c).unwrap())
        .collect()
}

fn cube() -> OddIntPolynomial {
    OddIntPolynomial::new(&[0, 0, 1]).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Values shared between criteria.
struct Shared {
    c0: f64,
}

fn criterion_1() -> Outcome {
    let mut worst_paired = 0.0f64;
    let mut worst_reference = 0.0f64;
    let mut count = 0u64;
    for f in corpus() {
        for d in 1..=20u64 {
            for q in 1..=500u64 {
                let paired = reduced_sums_paired(&f, d, q);
                let reference = reference_sums_all(&f, d, q);
                for (p, r) in paired.iter().zip(&reference) {
                    worst_paired = worst_paired.max(p.residual_imag.abs());
                    worst_reference = worst_reference.max(r.im.abs());
                    count += 1;
                }
            }
        }
    }
    outcome(
        worst_paired == 0.0 && worst_reference <= 1e-9,
        format!("{count} sums; paired |imag| max {worst_paired:e}, reference |imag| max {worst_reference:.3e}"),
    )
}

/// Direct summation with exact integer values and a floating phase.
fn naive_sum(coeffs: &[i64], a: i64, q: u64) -> f64 {
    (0..q as i128)
        .map(|s| {
            let mut v: i128 = 0;
            for &c in coeffs.iter().rev() {
                v = v * s + c as i128;
            }
            v *= s;
            let r = (a as i128 * v).rem_euclid(q as i128);
            (TAU * r as f64 / q as f64).cos()
        })
        .sum()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    for _ in 0..10_000 {
        let k = [3usize, 5, 7][rng.gen_range(0..3)];
        let mut coeffs = vec![0i64; k];
        for j in (0..k).step_by(2) {
            coeffs[j] = rng.gen_range(-10..=10);
        }
        coeffs[k - 1] = rng.gen_range(1..=10);
        let f = OddIntPolynomial::new(&coeffs).unwrap();
        let q = rng.gen_range(1..=10_000u64);
        let a = rng.gen_range(-(q as i64)..=q as i64);
        let got = complete_sum(&f, a, q).value;
        let want = naive_sum(&coeffs, a, q);
        let err = (got - want).abs() / want.abs().max(1.0);
        if err > worst {
            worst = err;
            worst_case = format!("f = {coeffs:?}, a = {a}, q = {q}");
        }
    }
    outcome(worst <= 1e-10, format!("worst relative error {worst:.3e} ({worst_case})"))
}

fn criterion_3(shared: &mut Shared) -> Outcome {
    let rows = c0_sweep(&cube(), 5000);
    let max_over = |lo: u64, hi: u64| {
        rows.iter()
            .filter(|r| r.q > lo && r.q <= hi)
            .max_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio))
            .unwrap()
    };
    let low = max_over(0, 2500);
    let high = max_over(2500, 5000);
    shared.c0 = rows.last().unwrap().running_c0;
    outcome(
        shared.c0.is_finite() && high.max_ratio <= 1.1 * low.max_ratio,
        format!(
            "c0 = {:.5} (q = {}, a = {}); max on (2500, 5000] = {:.5} at q = {}",
            shared.c0, low.q, low.argmax_a, high.max_ratio, high.q
        ),
    )
}

fn criterion_4(shared: &Shared) -> Outcome {
    let f = cube();
    let (alpha, beta, l) = (shared.c0, 1.0 / 3.0, 3);
    let mut worst = f64::INFINITY;
    let mut at = (0, 0, 0);
    let mut count = 0u64;
    for d in [1u64, 2, 3, 4, 6, 8, 12] {
        let dl = num_bigint::BigUint::from(d);
        for q in 1..=2000u64 {
            let t = tau(&dl, q, alpha, beta, l);
            let sums = reduced_sums_all(&f, d, q);
            for a in 0..q {
                if a.gcd(&q) != 1 {
                    continue;
                }
                count += 1;
                let margin = sums[a as usize] / q as f64 - t;
                if margin < worst {
                    worst = margin;
                    at = (d, q, a);
                }
            }
        }
    }
    outcome(
        worst >= -1e-9,
        format!("{count} triples; smallest S/q - tau = {worst:.4e} at (d, q, a) = {at:?}"),
    )
}

fn criterion_5() -> Outcome {
    let mut fejer_min = f64::INFINITY;
    for n in 1..=256 {
        let m = fejer(n).eval_grid(100_000).into_iter().fold(f64::INFINITY, f64::min);
        fejer_min = fejer_min.min(m);
    }
    let mut norm_err = 0.0f64;
    for f in corpus() {
        for d in 1..=5u64 {
            for n in [1_000u64, 10_000, 100_000, 1_000_000] {
                if let Ok(g) = build_surrogate(&f, n, d) {
                    norm_err = norm_err.max((g.eval(0.0) - 1.0).abs());
                }
            }
        }
    }
    // The drift is a lattice-point error and oscillates; the band is [0, 1],
    // i.e. |K - 1| <= d n^{-1/k} at every octave.
    let mut band_max = 0.0f64;
    for f in corpus() {
        let k = f.degree() as f64;
        for d in 1..=3u64 {
            for i in 0..7 {
                let n = 1_000_000u64 << i;
                let kk = surrogate_norm_K(&f, n, d).unwrap();
                band_max = band_max.max((kk - 1.0).abs() * (n as f64).powf(1.0 / k) / d as f64);
            }
        }
    }
    outcome(
        fejer_min >= -1e-12 && norm_err <= 1e-12 && band_max <= 1.0,
        format!("Fejer grid min {fejer_min:.3e}; |G(0) - 1| max {norm_err:.3e}; drift band max {band_max:.4}"),
    )
}

fn criterion_6(shared: &Shared) -> Outcome {
    let primes = primes_up_to(1000);
    let mut failures = 0u32;
    let mut checks = 0u32;
    let mut worst = f64::INFINITY;
    let polys = [
        (cube(), shared.c0),
        (OddIntPolynomial::new(&[2, 0, 3]).unwrap(), estimate_c0(&OddIntPolynomial::new(&[2, 0, 3]).unwrap(), 2000)),
        (OddIntPolynomial::new(&[0, 0, 0, 0, 1]).unwrap(), estimate_c0(&OddIntPolynomial::new(&[0, 0, 0, 0, 1]).unwrap(), 2000)),
    ];
    for (f, c0) in &polys {
        let alpha = c0 * f.coeff(f.least_index()).unsigned_abs() as f64;
        let beta = 1.0 / f.degree() as f64;
        let l = f.least_index() as u32;
        let mu = 2f64.powf(-beta);
        let pstar = threshold_pstar(alpha, beta);
        let astar = threshold_astar(alpha, beta, l);
        for &p in &primes {
            let mut margins = Vec::new();
            if p >= pstar {
                margins.push(large_prime_margin(p, mu, alpha, beta, l, 8));
            }
            margins.push(small_prime_margin(p, astar, mu, alpha, beta, l, 8));
            for s in 1..=8 {
                let (m, size_ok) = ladder_margin(p, s, alpha, beta, l);
                margins.push(m);
                checks += 1;
                if !size_ok || exponents_for_prime(p, s, alpha, beta, l).windows(2).any(|w| w[0] > w[1]) {
                    failures += 1;
                }
            }
            for m in margins {
                checks += 1;
                worst = worst.min(m);
                if m < -1e-12 {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checks} suite checks over 3 polynomials; {failures} failures; worst margin {worst:.4e}"),
    )
}

fn criterion_7(shared: &Shared) -> Outcome {
    let f = cube();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.5, 0.4, 0.3] {
        let t0 = Instant::now();
        let scheme = AveragingScheme::build(delta, &f, shared.c0, CAP_LOG2).unwrap();
        let v = scheme.verify(1_000_000);
        pass &= v.worst_value >= -delta - 1e-12;
        parts.push(format!(
            "delta {delta}: s = {}, worst {:.4} at q = {} ({:.1?})",
            scheme.s,
            v.worst_value,
            v.worst_q,
            t0.elapsed()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8_and_11(shared: &Shared) -> (Outcome, Outcome) {
    let f = cube();
    let (t, mut report, _) = desk_witness(&f, 0.3, 1_000_000, shared.c0, CAP_LOG2).unwrap();
    let scan = scan_min(&t, 8_000_000, DEFAULT_REFINE_ITERS);
    report.record_scan(scan);
    let nonneg = t.terms.values().all(|&c| c >= 0.0);
    let structural = report.b0 == 0.3 && (report.coeff_sum - 1.0).abs() <= 1e-12 && nonneg && report.spectrum_ok;
    let c8 = outcome(
        structural && scan.refined_min >= DESK_MIN_THRESHOLD && report.caveat.is_some(),
        format!(
            "b0 = {}, coefficient sum - 1 = {:.1e}, {} terms, moduli {:?} ({} dropped), spectrum ok {}; \
             refined min {:.5} at x = {:.6} (threshold {DESK_MIN_THRESHOLD}); caveat {}",
            report.b0,
            report.coeff_sum - 1.0,
            report.term_count,
            report.moduli,
            report.dropped_moduli,
            report.spectrum_ok,
            scan.refined_min,
            scan.argmin,
            if report.caveat.is_some() { "flagged" } else { "missing" }
        ),
    );
    let mut pass = true;
    let mut parts = Vec::new();
    let mut infeasible = Vec::new();
    for p in usable_primes(3, 100) {
        let c = prime_inequality_check(&t, &f, p).unwrap();
        pass &= c.pass;
        if !c.feasible_at_points {
            infeasible.push(p);
        }
        parts.push(format!("{p}: {:.4} >= {:.4}", c.lhs, c.rhs));
    }
    let c11 = outcome(
        pass,
        format!(
            "{}; witness negative at class points for p in {infeasible:?}",
            parts.join(", ")
        ),
    );
    (c8, c11)
}

fn criterion_9(shared: &Shared) -> Outcome {
    let f = cube();
    let scheme = AveragingScheme::from_moduli(0.3, &f, shared.c0, &[1]).unwrap();
    let mut values = Vec::new();
    let mut parts = Vec::new();
    for n in [10_000u64, 100_000, 1_000_000, 10_000_000] {
        let sp = scaling_point(&f, &scheme, n, 8 * n as usize, DESK_MIN_THRESHOLD).unwrap();
        values.push(sp.delta_scaled);
        parts.push(format!("N = {}: delta {:.4}, scaled {:.4}", sp.max_frequency, sp.delta, sp.delta_scaled));
    }
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    outcome(lo > 0.0 && hi / lo <= 3.0, format!("{}; band ratio {:.3}", parts.join(", "), hi / lo))
}

fn criterion_10() -> Outcome {
    let mut identity_err = 0.0f64;
    let mut structure_ok = true;
    let mut bound_failures = Vec::new();
    let mut systems = 0;
    for k in [3u32, 5] {
        for p in primes_up_to(300).into_iter().filter(|p| p % k as u64 == 1) {
            let sys = residue_classes(p, k, 1).unwrap();
            systems += 1;
            let sum: f64 = sys.sums.iter().sum();
            let sq: f64 = sys.sums.iter().map(|a| a * a).sum();
            identity_err = identity_err.max((sum + 1.0).abs()).max((sq - (p - sys.s) as f64).abs());
            let mut all: Vec<u64> = sys.classes.concat();
            all.sort_unstable();
            structure_ok &= sys.classes.len() == k as usize
                && sys.classes.iter().all(|c| c.len() as u64 == sys.s)
                && all == (1..p).collect::<Vec<_>>()
                && sys.classes.iter().all(|c| c.iter().all(|&a| c.binary_search(&(p - a)).is_ok()));
            let min = sys.sums.iter().cloned().fold(f64::INFINITY, f64::min);
            if min > -sys.bound + 1e-9 {
                bound_failures.push(format!("(k={k}, p={p}: {min:.3} vs {:.3})", -sys.bound));
            }
        }
    }
    let seven = residue_classes(7, 3, 1).unwrap();
    let mut a7 = seven.sums.clone();
    a7.sort_by(|a, b| b.total_cmp(a));
    let example_ok = a7
        .iter()
        .zip([1.2470, -0.4450, -1.8019])
        .all(|(x, y)| (x - y).abs() <= 1e-3);
    outcome(
        identity_err <= 1e-9 && structure_ok && bound_failures.is_empty() && example_ok,
        format!(
            "{systems} systems; identity error max {identity_err:.2e}; structure ok {structure_ok}; \
             p = 7 sums {a7:.4?}; class bound violated at {}",
            if bound_failures.is_empty() { "none".to_string() } else { bound_failures.join(" ") }
        ),
    )
}

fn criterion_12(shared: &Shared) -> Outcome {
    let single = gamma_plus_bracket(&[1], 64).unwrap();
    let cubes: Vec<u64> = (1..=10u64).map(|j| j.pow(3)).collect();
    let bracket = gamma_plus_bracket(&cubes, 4096).unwrap();
    // The desk witness at n = 1000 on the same spectrum, at the smallest δ
    // for which it scans nonnegative.
    let f = cube();
    let scheme = AveragingScheme::from_moduli(0.3, &f, shared.c0, &[1]).unwrap();
    let desk = scaling_point(&f, &scheme, 1000, 64_000, CERTIFY_TOL).unwrap();
    let lower = gamma_lower_bound(1000, 3, 100_000).unwrap();
    let pass = (single.lower - 0.5).abs() <= 1e-6
        && (single.upper - 0.5).abs() <= 1e-6
        && bracket.lower <= desk.delta + 1e-6
        && lower.bound <= bracket.upper;
    outcome(
        pass,
        format!(
            "{{1}}: [{:.6}, {:.6}]; cubes <= 1000: [{:.5}, {:.5}] (certified {}), desk b0 {:.5}; \
             lower bound {:.5} (m = {})",
            single.lower, single.upper, bracket.lower, bracket.upper, bracket.certified, desk.delta, lower.bound, lower.m
        ),
    )
}

/// Exhaustive maximum over all subsets of `{1..n}`.
fn exhaustive(diffs: &[u64], n: u64) -> u32 {
    (0u64..1 << n)
        .filter(|&m| diffs.iter().all(|&d| m & (m >> d) == 0))
        .map(|m| m.count_ones())
        .max()
        .unwrap()
}

fn criterion_13() -> Outcome {
    let f = cube();
    let ten = max_diff_avoiding(&f, 10, 64).unwrap();
    let ten_ok = ten.size == 5 && is_diff_avoiding(&ten.witness, &forbidden_differences(&f, 10));
    let forty = max_diff_avoiding(&f, 40, 64).unwrap();
    let mut mismatches = Vec::new();
    for n in 1..=24u64 {
        let want = exhaustive(&forbidden_differences(&f, n), n);
        if forty.profile[n as usize - 1] != want {
            mismatches.push(n);
        }
    }
    let mut witnesses_ok = true;
    for n in 1..=40 {
        let r = max_diff_avoiding(&f, n, 64).unwrap();
        witnesses_ok &= r.size == forty.profile[n as usize - 1]
            && r.witness.len() as u32 == r.size
            && is_diff_avoiding(&r.witness, &forbidden_differences(&f, n));
    }
    let sizes: Vec<u32> = [8u64, 16, 32, 64]
        .iter()
        .map(|&n| max_diff_avoiding(&f, n, 64).unwrap().size)
        .collect();
    let density: Vec<f64> = sizes.iter().zip([8.0, 16.0, 32.0, 64.0]).map(|(&s, n)| s as f64 / n).collect();
    let monotone = density.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        ten_ok && mismatches.is_empty() && witnesses_ok && monotone,
        format!(
            "size(10) = {} via {:?}; oracle mismatches at N <= 24: {mismatches:?}; sizes at 8/16/32/64 = {sizes:?}, density {density:?}",
            ten.size, ten.witness
        ),
    )
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored.
    let mut shared = Shared { c0: 0.0 };
    let mut results: Vec<(u32, Outcome, f64)> = Vec::new();
    let mut run = |id: u32, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        println!(
            "criterion {id}: {} {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, o, secs));
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut || criterion_3(&mut shared));
    let shared = shared;
    run(4, &mut || criterion_4(&shared));
    run(5, &mut criterion_5);
    run(6, &mut || criterion_6(&shared));
    run(7, &mut || criterion_7(&shared));
    let mut c11 = None;
    run(8, &mut || {
        let (c8, eleven) = criterion_8_and_11(&shared);
        c11 = Some(eleven);
        c8
    });
    run(9, &mut || criterion_9(&shared));
    run(10, &mut criterion_10);
    run(11, &mut || c11.take().unwrap());
    run(12, &mut || criterion_12(&shared));
    run(13, &mut criterion_13);

    let failed: BTreeSet<u32> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    let expected: BTreeSet<u32> = EXPECTED_FAILURES.iter().copied().collect();
    println!(
        "acceptance: {} PASS, {} FAIL {:?}; expected failures {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed,
        expected
    );
    if failed == expected {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failure set differs from the expected list");
        ExitCode::FAILURE
    }
}
