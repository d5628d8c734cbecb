//! Closed-form references: complex Γ and B, the Pöschl–Teller width
//! perturbation, and the square-step bundle.

use crate::riccati::step_root;
use crate::{c, LptError, Result, C64, I};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn pole_check(z: C64) -> Result<()> {
    let r = z.re.round();
    if r <= 0.0 && (z - c(r, 0.0)).norm() < 1e-14 * (1.0 + r.abs()) {
        return Err(LptError::GammaPole(r as i64));
    }
    Ok(())
}

/// Γ(z) by the Lanczos approximation, reflected for Re z < 1/2.
pub fn complex_gamma(z: C64) -> Result<C64> {
    pole_check(z)?;
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Ok(PI / (s * complex_gamma(1.0 - z)?));
    }
    let z = z - 1.0;
    let mut x = c(LANCZOS_P[0], 0.0);
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * ((z + 0.5) * t.ln() - t).exp() * x)
}

pub fn complex_beta(a: C64, b: C64) -> Result<C64> {
    let ga = complex_gamma(a)?;
    let gb = complex_gamma(b)?;
    match complex_gamma(a + b) {
        Ok(gab) => Ok(ga * gb / gab),
        Err(LptError::GammaPole(_)) => Ok(c(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

/// Pöschl–Teller `V₀ cosh⁻² x` (b = 1) with the width family
/// `V₀ cosh⁻²((1+μ)x)`, for the two lowest states.
#[derive(Clone, Debug)]
pub struct PtExact {
    pub j: u32,
    pub v0: f64,
    pub sigma: f64,
    /// +1 or −1: sign of Re ω₀.
    pub branch: f64,
    pub omega0: C64,
    pub omega1: C64,
    /// Full-line generalized norm with φ₀ normalized to φ₀(x) ~ cosh^{iω}x.
    pub norm: C64,
    /// Full-line ⟨φ₀|V₁|φ₀⟩.
    pub matrix_element: C64,
    /// Outgoing amplitude: φ₀ ≈ A e^{iω₀x} for x → ∞.
    pub amplitude: C64,
}

pub fn pt_exact(j: u32, v0: f64, branch: f64) -> Result<PtExact> {
    if v0 <= 0.25 {
        return Err(LptError::RegimeViolation(format!("Pöschl–Teller needs V₀ > 1/4, got {v0}")));
    }
    if j > 1 {
        return Err(LptError::InvalidArgument(format!("closed forms exist for j = 0, 1 only (got {j})")));
    }
    let s = if branch < 0.0 { -1.0 } else { 1.0 };
    let sigma = (v0 - 0.25).sqrt();
    let jh = j as f64 + 0.5;
    let omega0 = c(s * sigma, -jh);
    let omega1 = c(-s / (4.0 * sigma), -jh);
    let is = I * (s * sigma);
    let sqpi = PI.sqrt();
    let (norm, me) = if j == 0 {
        let norm = complex_beta(c(0.5, 0.0), -0.5 - is)?;
        let me = -sqpi * v0 * complex_gamma(0.5 - is)? / ((0.5 - is) * complex_gamma(1.0 - is)?);
        (norm, me)
    } else {
        let norm = complex_beta(c(1.5, 0.0), -1.5 - is)?;
        let bracket = complex_beta(c(1.5, 0.0), -0.5 - is)?
            - sqpi * complex_gamma(-0.5 - is)? / ((0.5 + is) * complex_gamma(-is)?);
        (norm, v0 / (is - 0.5) * bracket)
    };
    let amplitude = (-I * omega0 * std::f64::consts::LN_2).exp();
    Ok(PtExact { j, v0, sigma, branch: s, omega0, omega1, norm, matrix_element: me, amplitude })
}

/// `ln cosh z` continued from the real axis, valid for any Re z (even in z).
pub fn log_cosh(z: C64) -> C64 {
    let z = if z.re < 0.0 { -z } else { z };
    z - std::f64::consts::LN_2 + (1.0 + (-2.0 * z).exp()).ln()
}

/// `tanh z` written to avoid overflow.
pub fn tanh_c(z: C64) -> C64 {
    let (z, s) = if z.re < 0.0 { (-z, -1.0) } else { (z, 1.0) };
    let e = (-2.0 * z).exp();
    (1.0 - e) / (1.0 + e) * s
}

/// `sech² z` written to avoid overflow.
pub fn sech2_c(z: C64) -> C64 {
    let z = if z.re < 0.0 { -z } else { z };
    let e = (-2.0 * z).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

impl PtExact {
    pub fn phi0(&self, x: C64) -> C64 {
        let base = (I * self.omega0 * log_cosh(x)).exp();
        if self.j == 0 {
            base
        } else {
            tanh_c(x) * base
        }
    }

    pub fn phi0_sq(&self, x: C64) -> C64 {
        let p = self.phi0(x);
        p * p
    }

    pub fn dphi0(&self, x: C64) -> C64 {
        let t = tanh_c(x);
        let base = (I * self.omega0 * log_cosh(x)).exp();
        if self.j == 0 {
            I * self.omega0 * t * base
        } else {
            (sech2_c(x) + I * self.omega0 * t * t) * base
        }
    }

    pub fn v0_at(&self, x: C64) -> C64 {
        self.v0 * sech2_c(x)
    }

    /// V₁(x) = −2V₀ x sinh x / cosh³ x.
    pub fn v1_at(&self, x: C64) -> C64 {
        -2.0 * self.v0 * x * tanh_c(x) * sech2_c(x)
    }
}

/// Square step `V₀` on `|x| < b`, odd sector (half line with φ(0) = 0), with
/// φ₀ = sin qx inside and sin qb e^{iω₀(x−b)} outside (A = 1).
#[derive(Clone, Debug)]
pub struct StepExact {
    pub v0: f64,
    pub b: f64,
    pub a: f64,
    pub q: C64,
    pub omega0: C64,
    pub norm: C64,
}

pub fn step_exact(v0: f64, b: f64, a: f64, root_index: u32) -> Result<StepExact> {
    if !(v0 > 0.0 && b > 0.0 && a > b) {
        return Err(LptError::InvalidArgument(format!("need V₀ > 0 and 0 < b < a (V₀={v0}, b={b}, a={a})")));
    }
    let (q, omega0) = step_root(v0, b, root_index)?;
    let qb = q * b;
    let norm = b / 2.0 * (1.0 - (2.0 * qb).sin() / (2.0 * qb) - qb.sin().powi(2) * qb.tan() / qb);
    Ok(StepExact { v0, b, a, q, omega0, norm })
}

impl StepExact {
    pub fn phi0(&self, x: f64) -> C64 {
        if x <= self.b {
            (self.q * x).sin()
        } else {
            (self.q * self.b).sin() * (I * self.omega0 * (x - self.b)).exp()
        }
    }

    pub fn dphi0(&self, x: f64) -> C64 {
        if x <= self.b {
            self.q * (self.q * x).cos()
        } else {
            I * self.omega0 * self.phi0(x)
        }
    }

    /// Ψ₂(y) = −2∫_y^a φ₀⁻² dx.
    pub fn psi2(&self, y: f64) -> C64 {
        let (q, w, b, a) = (self.q, self.omega0, self.b, self.a);
        let s2 = (q * b).sin().powi(2);
        let cc = I / (w * s2);
        if y < b {
            2.0 / q * ((q * b).cos() / (q * b).sin() - (q * y).cos() / (q * y).sin())
                + cc * (1.0 - (-2.0 * I * w * (a - b)).exp())
        } else {
            cc * ((-2.0 * I * w * (y - b)).exp() - (-2.0 * I * w * (a - b)).exp())
        }
    }

    /// ∫_{lo}^{hi} φ₀² dx in closed form.
    pub fn int_phi0_sq(&self, lo: f64, hi: f64) -> C64 {
        let (q, w, b) = (self.q, self.omega0, self.b);
        let inner = |x: f64| x / 2.0 - (2.0 * q * x).sin() / (4.0 * q);
        let outer = |x: f64| (q * b).sin().powi(2) * (2.0 * I * w * (x - b)).exp() / (2.0 * I * w);
        let mut s = c(0.0, 0.0);
        if lo < b {
            s += inner(hi.min(b)) - inner(lo);
        }
        if hi > b {
            s += outer(hi) - outer(lo.max(b));
        }
        s
    }

    /// First-order shift for a unit bump on (x₀ − w/2, x₀ + w/2).
    pub fn bump_first_order(&self, x0: f64, w: f64) -> C64 {
        self.int_phi0_sq(x0 - w / 2.0, x0 + w / 2.0) / (2.0 * self.omega0 * self.norm)
    }
}
