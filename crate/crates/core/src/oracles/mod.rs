//! Independent ground truth for the construction.
//!
//! [`gamma_plus_bracket`] brackets `γ⁺` for a finite spectrum with a
//! point-constrained LP, and [`diffset`] computes exact maximum
//! difference-avoiding sets.

pub mod diffset;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{phase, PolyKind, SparseCosinePolynomial};
use crate::witness::{refined_minima, scan_min, DEFAULT_REFINE_ITERS, REFINE_CANDIDATES};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};

pub use diffset::{max_diff_avoiding, DiffSetResult};

/// Constraint-tightening rounds before giving up on the gap.
pub const MAX_ROUNDS: u32 = 40;
/// A scanned minimum at or above this counts as nonnegative.
pub const CERTIFY_TOL: f64 = -1e-12;
/// Tightening stops once `upper - lower` is this small.
pub const BRACKET_GAP: f64 = 1e-6;
/// Interior-point tolerances; the bracket itself does not depend on them,
/// since the primal is rescaled and the duals are repaired.
const LP_TOL: f64 = 1e-10;
const LP_MAX_ITER: u32 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaBracket {
    pub spectrum: Vec<u64>,
    /// `1 - Σy` for a dual-feasible `y` of the LP that imposes `T >= 0` only
    /// at finitely many points. Any finite point set relaxes `T >= 0`, so this
    /// is a lower bound on `γ⁺`.
    pub lower: f64,
    /// `b₀` of a polynomial that passed the scan (after shifting, if needed).
    pub upper: f64,
    /// Size of the initial uniform grid on `[0, 1)`.
    pub grid_points: usize,
    /// Constraint points in the final LP: the half grid plus added minima.
    pub constraint_points: usize,
    pub rounds: u32,
    /// True when the LP optimizer itself scanned nonnegative; false when the
    /// upper value comes from the shifted optimizer.
    pub certified: bool,
    pub scan_min: f64,
    /// The polynomial behind `upper`.
    pub witness: SparseCosinePolynomial,
}

/// Optimum of the point LP `max Σ b_d` subject to `Σ b_d (1 - cos 2π d x) <= 1`
/// at the given points and `Σ b_d <= 1`.
struct PointLp {
    /// Coefficients, scaled so that every constraint holds exactly.
    b: Vec<f64>,
    /// Objective of a dual-feasible vector: an upper bound on the LP value
    /// that does not rely on the primal being optimal.
    dual_bound: f64,
}

fn point_lp(spectrum: &[u64], rows: &[Vec<f64>]) -> Result<PointLp> {
    let n = spectrum.len();
    let m = rows.len() + 1;
    // Clarabel form: A x + s = b with s >= 0. Rows: the points, Σb <= 1, then
    // -x <= 0.
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::with_capacity((m + 1) * n);
    let mut nzval = Vec::with_capacity((m + 1) * n);
    colptr.push(0);
    for j in 0..n {
        for (i, row) in rows.iter().enumerate() {
            if row[j] != 0.0 {
                rowval.push(i);
                nzval.push(row[j]);
            }
        }
        rowval.extend([m - 1, m + j]);
        nzval.extend([1.0, -1.0]);
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(m + n, n, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((n, n));
    let q = vec![-1.0; n];
    let mut rhs = vec![1.0; m];
    rhs.resize(m + n, 0.0);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(LP_MAX_ITER)
        .tol_gap_abs(LP_TOL)
        .tol_gap_rel(LP_TOL)
        .tol_feas(LP_TOL)
        .build()
        .expect("valid solver settings");
    let mut solver = DefaultSolver::new(&p, &q, &a, &rhs, &[NonnegativeConeT(m + n)], settings)
        .map_err(|e| Error::InvalidParameter(format!("LP setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    if !matches!(sol.status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
        return Err(Error::InvalidParameter(format!("LP solver stopped: {:?}", sol.status)));
    }
    let x: Vec<f64> = sol.x.iter().map(|&v| v.max(0.0)).collect();
    // The constraints are homogeneous in b, so dividing by the worst row
    // restores exact feasibility.
    let worst = rows
        .iter()
        .map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
        .chain(std::iter::once(x.iter().sum()))
        .fold(1.0, f64::max);
    let b = x.iter().map(|&v| v / worst).collect();
    // y >= 0 with Aᵀy >= 1 bounds the primal by Σy.
    let y: Vec<f64> = sol.z[..m].iter().map(|&v| v.max(0.0)).collect();
    let cover = (0..n)
        .map(|j| rows.iter().zip(&y).map(|(row, yi)| row[j] * yi).sum::<f64>() + y[m - 1])
        .fold(f64::INFINITY, f64::min);
    if cover <= 0.0 {
        return Err(Error::InvalidParameter("LP duals are degenerate".into()));
    }
    let dual_bound = y.iter().sum::<f64>() / cover;
    Ok(PointLp { b, dual_bound })
}

/// Constraint row `1 - cos 2π d x` for each frequency.
fn row_at(spectrum: &[u64], x: f64) -> Vec<f64> {
    spectrum.iter().map(|&d| 1.0 - (TAU * phase(d, x)).cos()).collect()
}

/// Rows for the uniform grid points `i/m`, `1 <= i <= m/2` (the rest follow
/// by symmetry), with phases reduced exactly.
fn grid_rows(spectrum: &[u64], m: usize) -> Vec<Vec<f64>> {
    (1..=m / 2)
        .map(|i| {
            spectrum
                .iter()
                .map(|&d| {
                    let r = (d as u128 * i as u128 % m as u128) as f64 / m as f64;
                    1.0 - (TAU * r).cos()
                })
                .collect()
        })
        .collect()
}

fn polynomial(spectrum: &[u64], b: &[f64]) -> SparseCosinePolynomial {
    let terms: BTreeMap<u64, f64> = spectrum
        .iter()
        .zip(b)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&d, &c)| (d, c))
        .collect();
    let b0 = 1.0 - terms.values().sum::<f64>();
    SparseCosinePolynomial::new(b0, terms, PolyKind::Witness)
}

/// Brackets `γ⁺` for the given spectrum.
///
/// The LP starts from the uniform grid with `grid_points` points. Each round
/// scans the optimizer and adds its refined local minima as constraints,
/// which tightens the relaxation exactly where it is violated. This stops
/// when the optimizer scans nonnegative, the bracket is narrower than
/// [`BRACKET_GAP`], or [`MAX_ROUNDS`] is reached.
pub fn gamma_plus_bracket(spectrum: &[u64], grid_points: usize) -> Result<GammaBracket> {
    let mut spec = spectrum.to_vec();
    spec.sort_unstable();
    spec.dedup();
    if spec.is_empty() || spec[0] == 0 || spec.len() != spectrum.len() {
        return Err(Error::InvalidParameter(
            "spectrum must be nonempty distinct positive integers".into(),
        ));
    }
    let top = *spec.last().unwrap();
    let m = grid_points.max(2);
    let scan_grid = (64 * top as usize).max(2 * m);
    let mut rows = grid_rows(&spec, m);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let lp = point_lp(&spec, &rows)?;
        let t = polynomial(&spec, &lp.b);
        let scan = scan_min(&t, scan_grid, DEFAULT_REFINE_ITERS);
        let lower = (1.0 - lp.dual_bound).max(0.0);
        let certified = scan.refined_min >= CERTIFY_TOL;
        let witness = if certified {
            t.clone()
        } else {
            // (T + μ)/(1 + μ) with μ = -min is nonnegative at every scanned point.
            let mu = -scan.refined_min;
            let terms = t.terms.iter().map(|(&d, &c)| (d, c / (1.0 + mu))).collect();
            SparseCosinePolynomial::new((t.b0 + mu) / (1.0 + mu), terms, PolyKind::Witness)
        };
        if certified || witness.b0 - lower <= BRACKET_GAP || rounds == MAX_ROUNDS {
            return Ok(GammaBracket {
                spectrum: spec,
                lower,
                upper: witness.b0,
                grid_points: m,
                constraint_points: rows.len(),
                rounds,
                certified,
                scan_min: scan.refined_min,
                witness,
            });
        }
        let mut added: Vec<f64> = refined_minima(&t, scan_grid, REFINE_CANDIDATES, DEFAULT_REFINE_ITERS)
            .into_iter()
            .filter(|&(v, _)| v < 0.0)
            .map(|(_, x)| x)
            .collect();
        added.sort_by(f64::total_cmp);
        added.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        rows.extend(added.into_iter().map(|x| row_at(&spec, x)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_frequency() {
        let g = gamma_plus_bracket(&[1], 64).unwrap();
        assert!((g.lower - 0.5).abs() < 1e-9);
        assert!((g.upper - 0.5).abs() < 1e-9);
        assert!(g.certified);
        // Frequency 3 alone behaves the same way.
        let g = gamma_plus_bracket(&[3], 64).unwrap();
        assert!((g.lower - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_frequencies() {
        let g = gamma_plus_bracket(&[1, 2], 64).unwrap();
        assert!(g.lower <= 0.5 + 1e-6);
        assert!(g.lower >= 1.0 / 3.0 - 1e-6);
        assert!(g.lower <= g.upper + 1e-9);
        // F_3 normalized has b0 = 1/3 with spectrum {1, 2}.
        assert!((g.lower - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(gamma_plus_bracket(&[], 16).is_err());
        assert!(gamma_plus_bracket(&[0, 1], 16).is_err());
        assert!(gamma_plus_bracket(&[2, 2], 16).is_err());
    }

    #[test]
    fn bracket_is_ordered_for_cubes() {
        let cubes: Vec<u64> = (1..=10).map(|j: u64| j.pow(3)).collect();
        let g = gamma_plus_bracket(&cubes, 4096).unwrap();
        assert!(g.lower <= g.upper + 1e-9);
        assert!((0.0..=1.0).contains(&g.lower));
        assert!((g.witness.coeff_sum() - 1.0).abs() < 1e-12);
        assert!(g.witness.terms.values().all(|&c| c >= 0.0));
    }
}
