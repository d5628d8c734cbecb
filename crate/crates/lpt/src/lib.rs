//! Quasinormal modes of 1-d open wave problems and their corrections by
//! logarithmic perturbation theory.
//!
//! The wave equation is `φ'' = (V(x) − ω²) φ` with purely outgoing conditions
//! `φ ~ e^{±iωx}` as `x → ±∞`. Eigenvalues satisfy `Im ω < 0`.
//!
//! Module map:
//! - [`potentials`]: piecewise potentials, exponential tails, perturbations.
//! - [`riccati`]: outgoing integration, shooting, stored profiles.
//! - [`born_tail`]: tail-region log-derivatives (Born terms, exact series).
//! - [`lpt`]: generalized norm, matrix elements, order-n shifts.
//! - [`oracles`]: closed forms used as references.
//! - [`scenarios`]: step+bump sweeps and the Pöschl–Teller demo.

// `!(x > 0.0)` rejects NaN along with the out-of-range values; indexed loops
// mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod born_tail;
pub mod error;
pub mod exec;
pub mod lpt;
pub mod ode;
pub mod oracles;
pub mod potentials;
pub mod quad;
pub mod riccati;
pub mod roots;
pub mod scenarios;
pub mod taylor;

pub use error::{LptError, Result};
pub use num_complex::Complex64;

/// Shorthand used throughout.
pub type C64 = Complex64;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
