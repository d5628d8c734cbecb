use super::digits_lost;
use super::subtraction::{asymptotic_subtraction, AsymptoticSubtraction};
use crate::born_tail::{MatchData, Side};
use crate::riccati::{LogDerivProfile, PanelKind};
use crate::{c, LptError, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubtractMode {
    Off,
    /// Subtract when the raw evaluation loses more than `auto_threshold` digits.
    Auto,
    Always,
}

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    pub subtract: SubtractMode,
    /// Highest power of `e^{−αy}` removed along with `A²e^{2iωy}`.
    pub order: usize,
    pub auto_threshold: f64,
    /// Digits lost beyond which the norm is refused.
    pub limit: f64,
    /// Largest tolerated incoming admixture in the profile's tails.
    pub max_incoming: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { subtract: SubtractMode::Auto, order: 2, auto_threshold: 4.0, limit: 12.0, max_incoming: 1e-6 }
    }
}

/// ⟨φ₀|φ₀⟩ = ∫φ₀² + (1/2ω₀)[D₊′φ₀²(L₊) − D₋′φ₀²(L₋)].
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedNorm {
    pub value: C64,
    pub integral_part: C64,
    pub surface_part: C64,
    pub l_minus: f64,
    pub l_plus: f64,
    pub digits_lost: f64,
    /// Digits lost by the plain evaluation, whether or not it was used.
    pub raw_digits_lost: f64,
    /// Scale for degeneracy tests: ∫ of the absolute integrand actually
    /// evaluated (φ₀², or φ₀² minus its asymptotic part) and the largest
    /// surface piece.
    pub abs_integral: f64,
    pub subtracted: bool,
}

pub(crate) fn check_converged(profile: &LogDerivProfile, m: &MatchData, max_incoming: f64) -> Result<()> {
    for (side, present, name) in [(Side::Left, m.left.is_some(), "left"), (Side::Right, m.right.is_some(), "right")] {
        if let (true, Some(t)) = (present, profile.tail(side)) {
            let fraction = t.incoming_fraction();
            if !(fraction <= max_incoming) {
                return Err(LptError::NotConverged { side: name, fraction });
            }
        }
    }
    Ok(())
}

/// Raw surface combination for the norm.
pub(crate) fn raw_surface(profile: &LogDerivProfile, m: &MatchData) -> C64 {
    let w = profile.omega;
    let mut s = c(0.0, 0.0);
    if let Some(r) = m.right {
        s += r.d_prime * profile.phi_sq_at(profile.hi()) / (2.0 * w);
    }
    if let Some(l) = m.left {
        s -= l.d_prime * profile.phi_sq_at(profile.lo()) / (2.0 * w);
    }
    s
}

pub fn generalized_norm(profile: &LogDerivProfile, m: &MatchData) -> Result<GeneralizedNorm> {
    generalized_norm_with(profile, m, &NormOptions::default())
}

pub fn generalized_norm_with(profile: &LogDerivProfile, m: &MatchData, opts: &NormOptions) -> Result<GeneralizedNorm> {
    check_converged(profile, m, opts.max_incoming)?;
    let phi2 = profile.phi_sq_nodes();
    let (integral, abs_integral) = profile.integrate(&phi2)?;
    let surface = raw_surface(profile, m);
    let raw = integral + surface;
    let raw_digits = digits_lost(&[integral.norm(), surface.norm()], raw.norm());
    let want = match opts.subtract {
        SubtractMode::Off => false,
        SubtractMode::Always => true,
        SubtractMode::Auto => raw_digits > opts.auto_threshold,
    };
    let mut out = GeneralizedNorm {
        value: raw,
        integral_part: integral,
        surface_part: surface,
        l_minus: profile.lo(),
        l_plus: profile.hi(),
        digits_lost: raw_digits,
        raw_digits_lost: raw_digits,
        abs_integral: abs_integral.max(surface.norm()),
        subtracted: false,
    };
    if want {
        if let Some(sub) = subtracted(profile, m, opts.order)? {
            out.value = sub.integral + sub.surface;
            out.integral_part = sub.integral;
            out.surface_part = sub.surface;
            out.digits_lost = digits_lost(&sub.parts, out.value.norm());
            out.abs_integral = sub.parts.iter().copied().fold(sub.abs, f64::max);
            out.subtracted = true;
        }
    }
    if out.digits_lost > opts.limit {
        return Err(LptError::PrecisionExhausted { digits_lost: out.digits_lost });
    }
    Ok(out)
}

struct Subtracted {
    integral: C64,
    surface: C64,
    /// Magnitudes of all summed pieces.
    parts: Vec<f64>,
    /// ∫|integrand|.
    abs: f64,
}

/// `None` when no side has a tail to subtract.
fn subtracted(profile: &LogDerivProfile, m: &MatchData, order: usize) -> Result<Option<Subtracted>> {
    let mut subs: Vec<(AsymptoticSubtraction, C64)> = Vec::new();
    for (side, sm) in [(Side::Left, m.left), (Side::Right, m.right)] {
        let (Some(sm), Some(t)) = (sm, profile.tail(side)) else { continue };
        // interior panels are sized for φ₀, not for e^{2iωx}, so start at the junction
        let sub = asymptotic_subtraction(profile, side, t.amplitude(), t.junction, order)?;
        subs.push((sub, side.sign() * sm.d_prime_excess));
    }
    if subs.is_empty() {
        return Ok(None);
    }
    let rule = profile.rule();
    let mut samples = Vec::with_capacity(profile.node_count());
    for p in &profile.panels {
        let mid = 0.5 * (p.a + p.b);
        let sub = subs.iter().map(|s| &s.0).find(|s| s.contains(mid));
        for (i, phi) in p.phi.iter().enumerate() {
            let x = p.node(rule, i);
            samples.push(match (sub, p.kind) {
                (Some(s), PanelKind::Tail(side)) if side == s.side => s.modified_tail(profile.tail(side).unwrap(), x),
                (Some(s), _) => phi * phi - s.subtracted(x),
                (None, _) => phi * phi,
            });
        }
    }
    let (integral, abs) = profile.integrate(&samples)?;
    let mut surface = c(0.0, 0.0);
    let mut parts = vec![integral.norm()];
    for (s, r_prime) in &subs {
        let top = s.combined_surface(profile.tail(s.side).unwrap(), *r_prime);
        let (_, lower) = s.integral_terms();
        surface += top - lower;
        parts.push(top.norm());
        parts.push(lower.norm());
    }
    // sides without a tail keep their plain surface term
    let plain = MatchData {
        left: m.left.filter(|_| !subs.iter().any(|s| s.0.side == Side::Left)),
        right: m.right.filter(|_| !subs.iter().any(|s| s.0.side == Side::Right)),
    };
    let rest = raw_surface(profile, &plain);
    surface += rest;
    parts.push(rest.norm());
    Ok(Some(Subtracted { integral, surface, parts, abs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::born_tail::SideModel;
    use crate::lpt::match_data;
    use crate::scenarios::{pt_problem, step_profile, PtConfig, StepBumpConfig};

    #[test]
    fn step_norm_is_the_same_with_or_without_subtraction() {
        let (ex, _, prof) = step_profile(&StepBumpConfig::default(), vec![]).unwrap();
        let md = match_data(&prof, &SideModel::Origin, &SideModel::Free { at: prof.hi() }).unwrap();
        for mode in [SubtractMode::Off, SubtractMode::Always] {
            let n = generalized_norm_with(&prof, &md, &NormOptions { subtract: mode, ..NormOptions::default() }).unwrap();
            assert_eq!(n.subtracted, mode == SubtractMode::Always);
            assert!((n.value * ex.q * ex.q - ex.norm).norm() < 1e-11 * ex.norm.norm(), "{mode:?} {} vs {} {:?}", n.value * ex.q * ex.q, ex.norm, md);
            assert!((n.value - n.integral_part - n.surface_part).norm() <= 1e-15 * n.abs_integral);
        }
    }

    #[test]
    fn auto_mode_switches_on_lost_digits() {
        for (j, expect) in [(0, false), (1, true)] {
            let p = pt_problem(&PtConfig { j, ..PtConfig::default() }).unwrap();
            let md = match_data(&p.profile, &p.left, &p.right).unwrap();
            let n = generalized_norm(&p.profile, &md).unwrap();
            assert_eq!(n.subtracted, expect, "j={j}");
            assert!(n.abs_integral >= n.value.norm());
        }
    }
}
