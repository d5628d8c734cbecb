use crate::born_tail::Side;
use crate::riccati::{LogDerivProfile, TailPiece};
use crate::{c, LptError, Result, C64, I};

/// Removal of the growing part `A²e^{2iωy} Σ_{j≤m} s_j e^{−jαy}` of φ₀² over
/// `[c, L]` on one side (`y` the outward coordinate), with its integral added
/// back in closed form. `s_j` are the coefficients of the squared tail
/// series; `m = 0` subtracts `A²e^{2iωy}` only.
#[derive(Clone, Debug)]
pub struct AsymptoticSubtraction {
    pub side: Side,
    pub amplitude: C64,
    pub omega: C64,
    pub alpha: f64,
    /// Coefficients of `S² = Σ s_j E^j`.
    pub s: Vec<C64>,
    pub order: usize,
    /// Inner end of the subtracted range (x coordinate).
    pub from: f64,
    /// Outer end (x coordinate, the profile end).
    pub to: f64,
}

fn squared(d: &[C64]) -> Vec<C64> {
    let n = d.len();
    let mut s = vec![c(0.0, 0.0); 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            s[i + j] += d[i] * d[j];
        }
    }
    s
}

/// Set up the subtraction for `side` of `profile` over `[from, L]`, checking
/// the supplied amplitude against the profile's tail amplitude.
pub fn asymptotic_subtraction(
    profile: &LogDerivProfile,
    side: Side,
    amplitude: C64,
    from: f64,
    order: usize,
) -> Result<AsymptoticSubtraction> {
    let t = profile
        .tail(side)
        .ok_or_else(|| LptError::UnsupportedConfiguration("subtraction needs a tail region on that side".into()))?;
    let found = t.amplitude();
    if (found - amplitude).norm() > 1e-6 * found.norm() {
        return Err(LptError::BadAmplitude { given: amplitude, found });
    }
    let to = if side == Side::Right { profile.hi() } else { profile.lo() };
    Ok(AsymptoticSubtraction {
        side,
        amplitude: found,
        omega: profile.omega,
        alpha: t.outgoing.alpha,
        s: squared(&t.outgoing.d),
        order,
        from,
        to,
    })
}

impl AsymptoticSubtraction {
    fn kappa(&self, j: usize) -> C64 {
        2.0 * I * self.omega - self.alpha * j as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = if self.from < self.to { (self.from, self.to) } else { (self.to, self.from) };
        x >= a && x <= b
    }

    /// Subtracted term at `x`.
    pub fn subtracted(&self, x: f64) -> C64 {
        let y = self.side.outward(x);
        let a2 = self.amplitude * self.amplitude;
        (0..=self.order.min(self.s.len() - 1))
            .map(|j| a2 * self.s[j] * (self.kappa(j) * y).exp())
            .sum()
    }

    /// `φ₀² − subtracted` evaluated without cancellation in the tail region.
    pub fn modified_tail(&self, tail: &TailPiece, x: f64) -> C64 {
        let y = self.side.outward(x);
        let e = (-self.alpha * y).exp();
        let mut p = c(1.0, 0.0);
        let mut rest = c(0.0, 0.0);
        for (j, &sj) in self.s.iter().enumerate() {
            if j > self.order {
                rest += sj * p;
            }
            p *= e;
        }
        let a2 = tail.c_out * tail.c_out;
        a2 * (2.0 * I * self.omega * y).exp() * rest + self.cross(tail, x)
    }

    fn cross(&self, tail: &TailPiece, x: f64) -> C64 {
        let u = tail.outgoing.phi(x);
        let v = tail.incoming.phi(x);
        2.0 * tail.c_out * tail.c_in * u * v + tail.c_in * tail.c_in * v * v
    }

    /// ∫ of the subtracted term over `[from, to]`, split into the outer-end
    /// and inner-end pieces.
    pub fn integral_terms(&self) -> (C64, C64) {
        let a2 = self.amplitude * self.amplitude;
        let (yo, yi) = (self.side.outward(self.to), self.side.outward(self.from));
        let mut upper = c(0.0, 0.0);
        let mut lower = c(0.0, 0.0);
        for j in 0..=self.order.min(self.s.len() - 1) {
            let k = self.kappa(j);
            upper += a2 * self.s[j] * (k * yo).exp() / k;
            lower += a2 * self.s[j] * (k * yi).exp() / k;
        }
        (upper, lower)
    }

    /// Outer-end surface term of the norm plus the outer piece of the
    /// compensating integral, combined so the leading growth cancels
    /// analytically. `r_prime` is `D′ − i` in the outward frame.
    pub fn combined_surface(&self, tail: &TailPiece, r_prime: C64) -> C64 {
        let w = self.omega;
        let y = self.side.outward(self.to);
        let e = (-self.alpha * y).exp();
        let mut p = c(1.0, 0.0);
        let mut s2m1 = c(0.0, 0.0);
        let mut low = c(0.0, 0.0);
        for (j, &sj) in self.s.iter().enumerate() {
            if j >= 1 {
                s2m1 += sj * p;
                if j <= self.order {
                    low += sj * p / self.kappa(j);
                }
            }
            p *= e;
        }
        let s2 = 1.0 + s2m1;
        let bracket = (r_prime * s2 + I * s2m1) / (2.0 * w) + low;
        let a2 = tail.c_out * tail.c_out;
        a2 * (2.0 * I * w * y).exp() * bracket + (I + r_prime) * self.cross(tail, self.to) / (2.0 * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use crate::scenarios::{pt_problem, PtConfig};

    fn setup() -> (LogDerivProfile, AsymptoticSubtraction) {
        let p = pt_problem(&PtConfig { j: 1, ..PtConfig::default() }).unwrap();
        let t = p.profile.tail(Side::Right).unwrap();
        let s = asymptotic_subtraction(&p.profile, Side::Right, t.amplitude(), t.junction, 2).unwrap();
        (p.profile, s)
    }

    #[test]
    fn modified_tail_is_the_difference() {
        let (prof, s) = setup();
        let t = prof.tail(Side::Right).unwrap();
        for x in [t.junction, 0.5 * (t.junction + prof.hi()), prof.hi()] {
            let direct = prof.phi_sq_at(x) - s.subtracted(x);
            let scale = prof.phi_sq_at(x).norm();
            assert!((direct - s.modified_tail(t, x)).norm() < 1e-9 * scale, "x={x}");
        }
    }

    #[test]
    fn integral_terms_match_quadrature() {
        let (_, s) = setup();
        let (upper, lower) = s.integral_terms();
        let opts = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 2000 };
        let q = integrate(|x| s.subtracted(x), s.from, s.to, opts).unwrap().value;
        assert!(((upper - lower) - q).norm() < 1e-11 * q.norm());
        assert!(s.contains(s.from) && s.contains(s.to) && !s.contains(s.to + 1.0));
    }

    #[test]
    fn wrong_amplitude_and_missing_tail_are_rejected() {
        let (prof, s) = setup();
        let r = asymptotic_subtraction(&prof, Side::Right, 2.0 * s.amplitude, s.from, 2);
        assert!(matches!(r, Err(LptError::BadAmplitude { .. })));
        let r = asymptotic_subtraction(&prof, Side::Left, s.amplitude, 0.0, 2);
        assert!(matches!(r, Err(LptError::UnsupportedConfiguration(_))));
    }
}
