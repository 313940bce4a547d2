//! Nonnegative, normed cosine polynomials whose spectrum lies in the values
//! of an odd integer polynomial.
//!
//! The crate builds the objects of the construction bottom-up and keeps an
//! independent check next to each of them:
//!
//! * [`poly`]: odd integer polynomials, exact evaluation, content, dilation.
//! * [`expsum`]: complete exponential sums `S_d(af, q)` and the empirical
//!   Chen–Nechaev constant.
//! * [`kernels`]: the normed Fejér kernel and the surrogate `G_{n,d}`.
//! * [`arcs`]: major/minor arc classification.
//! * [`averaging`]: the moduli `d_0 | d_1 | ... | d_s` and weights `λ^j`
//!   that make the averaged major-arc bound at least `-δ`.
//! * [`witness`]: the assembled polynomial `T(x)` and its numerical scan.
//! * [`oracles`]: a grid-LP bracket for `γ⁺(n)` and exact difference-avoiding
//!   sets.
//! * [`lowerbound`]: k-th power residue classes and the lower bound on `γ⁺`.

pub mod arcs;
pub mod averaging;
pub mod error;
pub mod expsum;
pub mod kernels;
pub mod lowerbound;
pub mod oracles;
pub mod poly;
pub mod primes;
pub mod witness;

pub use arcs::{classify, classify_rational, ArcLocation};
pub use averaging::{AveragingScheme, SchemeVerdict};
pub use error::{Error, Result};
pub use expsum::CompleteSumResult;
pub use kernels::{PolyKind, SparseCosinePolynomial};
pub use lowerbound::ResidueClassSystem;
pub use oracles::GammaBracket;
pub use poly::OddIntPolynomial;
pub use witness::WitnessReport;

/// Absolute slack used by every inequality check on floating-point bounds.
pub const CMP_SLACK: f64 = 1e-12;
