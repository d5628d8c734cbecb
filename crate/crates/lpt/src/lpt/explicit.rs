use super::norm::GeneralizedNorm;
use crate::potentials::PotentialSpec;
use crate::quad::{integrate_breaks, QuadOptions};
use crate::riccati::{LeftEnd, LogDerivProfile, Parity};
use crate::{LptError, Result, C64, I};

const INNER: QuadOptions = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 4000 };
const OUTER: QuadOptions = QuadOptions { rel_tol: 1e-12, abs_tol: 1e-300, max_intervals: 4000 };

/// ω₂ from the double-integral form on the half line `[0, a]` with φ₀(0) = 0
/// and both V₀ and V₁ vanishing beyond `a`:
///
/// ω₂ = (2ω₀N)⁻¹ ∫₀ᵃ W(y)Ψ₂(y)F(y) dy − ω₁²/(2ω₀) + iω₁²φ₀²(a)/(4ω₀²N),
///
/// with W = (V₁ − 2ω₀ω₁)φ₀², F(y) = ∫₀ʸ W and Ψ₂(y) = −2∫_y^a φ₀⁻².
/// Evaluated by nested adaptive quadrature on the profile's dense output.
pub fn second_order_explicit(
    profile: &LogDerivProfile,
    v1: &PotentialSpec,
    norm: &GeneralizedNorm,
    omega1: C64,
    a: f64,
) -> Result<C64> {
    if profile.left_end != LeftEnd::Origin(Parity::Odd) || profile.lo() != 0.0 {
        return Err(LptError::UnsupportedConfiguration("explicit second order needs the half line with φ(0) = 0".into()));
    }
    let (s0, s1) = (profile.potential().support(), v1.support());
    if s0.1 > a + 1e-12 || s1.1 > a + 1e-12 || profile.hi() < a || profile.potential().tail(1).is_some() {
        return Err(LptError::UnsupportedConfiguration(format!(
            "explicit second order needs V₀ and V₁ to vanish beyond a = {a}"
        )));
    }
    let w0 = profile.omega;
    let mut breaks: Vec<f64> = profile.panels.iter().map(|p| p.a).collect();
    breaks.retain(|&x| x > 0.0 && x < a);
    breaks.extend(profile.potential().breakpoints().into_iter().chain(v1.breakpoints()).filter(|&x| x > 0.0 && x < a));
    breaks.push(0.0);
    breaks.push(a);
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup();

    let w = |y: f64| (v1.eval(y) - 2.0 * w0 * omega1) * profile.phi_sq_at(y);
    let inner = |lo: f64, hi: f64, g: &mut dyn FnMut(f64) -> C64| -> Result<C64> {
        let mut pts = vec![lo];
        pts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
        pts.push(hi);
        Ok(integrate_breaks(&mut |x| g(x), &pts, INNER)?.value)
    };
    let mut failure: Option<LptError> = None;
    let mut outer = |y: f64| -> C64 {
        let f = inner(0.0, y, &mut |x| w(x));
        let psi = inner(y, a, &mut |x| 1.0 / profile.phi_sq_at(x));
        match (f, psi) {
            (Ok(f), Ok(psi)) => w(y) * (-2.0 * psi) * f,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                C64::default()
            }
        }
    };
    let double = integrate_breaks(&mut outer, &breaks, OUTER)?.value;
    if let Some(e) = failure {
        return Err(e);
    }
    let n = norm.value;
    Ok(double / (2.0 * w0 * n) - omega1 * omega1 / (2.0 * w0) + I * omega1 * omega1 * profile.phi_sq_at(a) / (4.0 * w0 * w0 * n))
}
