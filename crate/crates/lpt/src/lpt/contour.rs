use crate::quad::{integrate, QuadOptions};
use crate::{LptError, Result, C64};

const CHUNK: f64 = 1.0;
const U_MAX: f64 = 200.0;

/// ∫ du e^{iθ} φ₀²(ue^{iθ}) V(ue^{iθ}) over the whole line `x = ue^{iθ}`,
/// `u ∈ (−∞, ∞)`. Both evaluators must be analytic in the sectors swept
/// between the real axis and the ray.
pub fn rotated_contour_me(v: &dyn Fn(C64) -> C64, phi_sq: &dyn Fn(C64) -> C64, theta: f64) -> Result<C64> {
    let e = C64::from_polar(1.0, theta);
    let g = |u: f64| {
        let z = e * u;
        e * phi_sq(z) * v(z)
    };
    Ok(half_ray(&g, 1.0, theta)? + half_ray(&g, -1.0, theta)?)
}

fn half_ray(g: &dyn Fn(f64) -> C64, dir: f64, theta: f64) -> Result<C64> {
    let opts = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 2000 };
    let mut total = C64::default();
    let mut u = 0.0;
    let mut quiet = 0;
    let mut growing = 0;
    let mut last = f64::INFINITY;
    while u < U_MAX {
        let (a, b) = (u, u + CHUNK);
        let piece = integrate(|t| g(dir * t), a, b, opts)?.value;
        if !piece.is_finite() {
            return Err(LptError::BadAngle { theta, u: b });
        }
        total += piece;
        let m = piece.norm();
        growing = if m > last && u > 4.0 { growing + 1 } else { 0 };
        if growing >= 6 {
            return Err(LptError::BadAngle { theta, u: b });
        }
        quiet = if m <= 1e-17 * total.norm() { quiet + 1 } else { 0 };
        if quiet >= 2 {
            return Ok(total);
        }
        last = m;
        u = b;
    }
    Err(LptError::BadAngle { theta, u })
}
