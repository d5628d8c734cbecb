//! Logarithmic perturbation theory on a stored QNM profile.
//!
//! With `V = V₀ + μV₁`, `ω = Σ μⁿωₙ` and `f = Σ μⁿfₙ`, each order follows from
//! ωₙ = ⟨φ₀|Vₙ|φ₀⟩ / (2ω₀⟨φ₀|φ₀⟩), where the generalized norm and the matrix
//! elements carry surface terms at the ends of the profile so that they are
//! finite and independent of where the ends are placed.

mod contour;
mod exact_shift;
mod explicit;
mod norm;
mod orders;
mod subtraction;

pub use contour::rotated_contour_me;
pub use exact_shift::{wronskian_shift, WronskianShift};
pub use explicit::second_order_explicit;
pub use norm::{generalized_norm, generalized_norm_with, GeneralizedNorm, NormOptions, SubtractMode};
pub use orders::{
    effective_potential, matrix_element, order_shift, perturb, susceptibility, wavefunction_correction,
    wavefunction_correction_from_right, Diagnostics, LptOptions, LptProblem, MatrixElement, OrderData,
    PerturbationResult,
};
pub use subtraction::{asymptotic_subtraction, AsymptoticSubtraction};

use crate::born_tail::{MatchData, Side, SideModel};
use crate::riccati::{LeftEnd, LogDerivProfile};
use crate::{LptError, Result};

/// Match data at the ends of `profile` for the given side models.
pub fn match_data(profile: &LogDerivProfile, left: &SideModel, right: &SideModel) -> Result<MatchData> {
    let w = profile.omega;
    let left = match (profile.left_end, left) {
        (LeftEnd::Origin(_), SideModel::Origin) => None,
        (LeftEnd::Origin(_), _) | (LeftEnd::Open, SideModel::Origin) => {
            return Err(LptError::UnsupportedConfiguration("left side model does not match the profile's left end".into()))
        }
        (LeftEnd::Open, m) => m.side_match(Side::Left, w)?,
    };
    if matches!(right, SideModel::Origin) {
        return Err(LptError::UnsupportedConfiguration("the right end cannot be a symmetry origin".into()));
    }
    let right = right.side_match(Side::Right, w)?;
    for (m, x) in [(left, profile.lo()), (right, profile.hi())] {
        if let Some(m) = m {
            if (m.at - x).abs() > 1e-12 * (1.0 + x.abs()) {
                return Err(LptError::InvalidArgument(format!("match radius {} differs from profile end {x}", m.at)));
            }
        }
    }
    Ok(MatchData { left, right })
}

pub(crate) fn digits_lost(parts: &[f64], value: f64) -> f64 {
    let m = parts.iter().copied().fold(0.0, f64::max);
    if value == 0.0 {
        return if m == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (m / value).log10().max(0.0)
}
