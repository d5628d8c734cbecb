//! Outgoing log-derivatives in exponential tail regions.
//!
//! For `V = V₀Σc_k e^{−kαy}` the outgoing solution is exactly
//! `φ = e^{iωy} Σ d_k e^{−kαy}` with `d₀ = 1` and
//! `d_k = V₀/(αk(αk − 2iω)) Σ_{m<k} d_m c_{k−m}`.
//! The recursion is written over [`Scalar`] so that ω- and μ-derivatives come
//! from [`Jet`] arithmetic.

use crate::potentials::{TailDescriptor, TailExpansion, TailFamily};
use crate::taylor::{Jet, Scalar};
use crate::{c, LptError, Result, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 on the right, −1 on the left.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    /// Outward distance coordinate.
    pub fn outward(self, x: f64) -> f64 {
        self.sign() * x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSolution {
    pub alpha: f64,
    pub d: Vec<C64>,
    pub omega: C64,
    pub side: Side,
}

fn resonance_guard(k: usize, alpha: f64, omega: C64) -> Result<()> {
    let gap = (c(alpha * k as f64, 0.0) - 2.0 * I * omega).norm();
    if gap < 1e-8 * omega.norm().max(1.0) {
        return Err(LptError::ResonantDenominator { k, gap });
    }
    Ok(())
}

/// Series coefficients for generic scalars. `v[j−1]` is the full tail
/// coefficient of `e^{−jαy}` (scale already applied).
pub fn series_coefficients_s<S: Scalar>(alpha: &S, v: &[S], omega: &S, k_max: usize) -> Result<Vec<S>> {
    let mut d = Vec::with_capacity(k_max + 1);
    d.push(S::lift(c(1.0, 0.0)));
    for k in 1..=k_max {
        resonance_guard(k, alpha.value().re, omega.value())?;
        let ak = alpha.clone() * S::lift(c(k as f64, 0.0));
        let den = ak.clone() * (ak - S::lift(2.0 * I) * omega.clone());
        let mut s = S::lift(c(0.0, 0.0));
        for m in 0..k {
            if let Some(vj) = v.get(k - m - 1) {
                s = s + d[m].clone() * vj.clone();
            }
        }
        d.push(s / den);
    }
    Ok(d)
}

/// `R(y) = f(y) − iω = −α Σ k d_k E^k / Σ d_k E^k` with `E = e^{−αy}`;
/// kept separate so `D′ − i` is available without cancellation.
pub fn series_remainder_s<S: Scalar>(alpha: &S, d: &[S], y: f64) -> Result<S> {
    let e = (-(alpha.clone()) * S::lift(c(y, 0.0))).exp_s();
    let mut p = S::lift(c(1.0, 0.0));
    let mut num = S::lift(c(0.0, 0.0));
    let mut den = S::lift(c(0.0, 0.0));
    let mut mag = 0.0;
    for (k, dk) in d.iter().enumerate() {
        let t = dk.clone() * p.clone();
        mag += t.value().norm();
        if k > 0 {
            num = num + t.clone() * S::lift(c(k as f64, 0.0));
        }
        den = den + t;
        p = p * e.clone();
    }
    if den.value().norm() <= 1e-12 * mag {
        return Err(LptError::PoleInTail { x: y });
    }
    Ok(-(alpha.clone()) * num / den)
}

/// `f(y) = Σ(iω − αk)d_k E^k / Σ d_k E^k` with `E = e^{−αy}`.
pub fn series_logderiv_s<S: Scalar>(alpha: &S, d: &[S], omega: &S, y: f64) -> Result<S> {
    Ok(S::lift(I) * omega.clone() + series_remainder_s(alpha, d, y)?)
}

pub fn series_coefficients(tail: &TailExpansion, omega: C64, k_max: usize) -> Result<SeriesSolution> {
    let v: Vec<C64> = tail.coeffs.iter().map(|&ck| ck * tail.scale).collect();
    let d = series_coefficients_s(&c(tail.alpha, 0.0), &v, &omega, k_max)?;
    Ok(SeriesSolution { alpha: tail.alpha, d, omega, side: Side::Right })
}

impl SeriesSolution {
    pub fn mirrored(mut self) -> Self {
        self.side = match self.side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        self
    }

    /// `Σ d_k e^{−kαy}` at outward distance `y`.
    pub fn sum(&self, y: f64) -> C64 {
        let e = (-self.alpha * y).exp();
        self.d.iter().rev().fold(c(0.0, 0.0), |acc, &dk| acc * e + dk)
    }

    /// φ(x) with unit amplitude: `e^{iωy} Σ d_k e^{−kαy}`, y outward.
    pub fn phi(&self, x: f64) -> C64 {
        let y = self.side.outward(x);
        (I * self.omega * y).exp() * self.sum(y)
    }

    /// φ′(x) (derivative in x, not y).
    pub fn dphi(&self, x: f64) -> C64 {
        let y = self.side.outward(x);
        let e = (-self.alpha * y).exp();
        let mut p = c(1.0, 0.0);
        let mut s = c(0.0, 0.0);
        for (k, &dk) in self.d.iter().enumerate() {
            s += (I * self.omega - self.alpha * k as f64) * dk * p;
            p *= e;
        }
        (I * self.omega * y).exp() * s * self.side.sign()
    }

    /// Smallest truncation at which the remaining terms are negligible at `y`
    /// (relative `tau`), capped at the available order.
    pub fn auto_terms(&self, y: f64, tau: f64) -> usize {
        let e = (-self.alpha * y).exp();
        let mut p = 1.0;
        for (k, dk) in self.d.iter().enumerate() {
            if k > 0 && dk.norm() * p < tau {
                return k;
            }
            p *= e;
        }
        self.d.len()
    }
}

/// Log-derivative `φ′/φ` in x at `x` from an exact series solution.
pub fn series_logderiv(sol: &SeriesSolution, x: f64) -> Result<C64> {
    let y = sol.side.outward(x);
    let f = series_logderiv_s(&c(sol.alpha, 0.0), &sol.d, &sol.omega, y)?;
    Ok(f * sol.side.sign())
}

/// Born iteration to `order ∈ {0, 1, 2}` (right side).
pub fn born_logderiv(tail: &TailExpansion, omega: C64, x: f64, order: usize) -> Result<C64> {
    if order > 2 {
        return Err(LptError::InvalidArgument(format!("Born order {order} not supported (max 2)")));
    }
    let gamma = -omega.im;
    if gamma >= (order + 1) as f64 * tail.alpha {
        return Err(LptError::UnsupportedConfiguration(format!(
            "Born order {order} needs γ < {}α (γ = {gamma})",
            order + 1
        )));
    }
    let mut f = I * omega;
    if order == 0 {
        return Ok(f);
    }
    let gap1 = (c(tail.alpha, 0.0) - 2.0 * I * omega).norm();
    let vx = tail.eval(x).norm();
    if vx >= gap1 {
        return Err(LptError::TailRegionTooClose { x, v: vx, gap: gap1 });
    }
    let k = tail.coeffs.len();
    let mut a = Vec::with_capacity(k);
    for j in 1..=k {
        resonance_guard(j, tail.alpha, omega)?;
        let aj = tail.alpha * j as f64;
        a.push(-tail.scale * tail.coeffs[j - 1] / (aj - 2.0 * I * omega));
    }
    for (j, &aj) in a.iter().enumerate() {
        f += aj * (-tail.alpha * (j + 1) as f64 * x).exp();
    }
    if order == 2 {
        for (j, &aj) in a.iter().enumerate() {
            for (l, &al) in a.iter().enumerate() {
                let s = tail.alpha * (j + l + 2) as f64;
                resonance_guard(j + l + 2, tail.alpha, omega)?;
                f += aj * al / (s - 2.0 * I * omega) * (-s * x).exp();
            }
        }
    }
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchSource {
    TailSeries,
    Born,
    Exact,
    FreeWave,
}

/// Outgoing log-derivative data for one side at the matching radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideMatch {
    pub side: Side,
    pub at: f64,
    pub d: C64,
    /// ∂D/∂ω at ω₀.
    pub d_prime: C64,
    /// ∂²D/∂ω² at ω₀.
    pub d_second: C64,
    /// `D′ ∓ i`, the departure from the free-wave value, computed directly.
    pub d_prime_excess: C64,
    pub source: MatchSource,
}

impl SideMatch {
    pub fn free(side: Side, at: f64, omega: C64) -> Self {
        let s = side.sign();
        SideMatch {
            side,
            at,
            d: I * omega * s,
            d_prime: I * s,
            d_second: c(0.0, 0.0),
            d_prime_excess: c(0.0, 0.0),
            source: MatchSource::FreeWave,
        }
    }
}

/// `D_±` at both ends; `None` marks a symmetry origin instead of an
/// outgoing end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchData {
    pub left: Option<SideMatch>,
    pub right: Option<SideMatch>,
}

/// Remainder `f − iω` at outward distance `y` for a tail, as a jet in ω.
fn tail_remainder_omega_jet(tail: &TailDescriptor, omega: C64, y: f64, k_max: usize, order: usize) -> Result<Jet> {
    let w = Jet::variable(omega, order);
    let a = Jet::constant(c(tail.alpha, 0.0));
    let v: Vec<Jet> = tail.coeffs.iter().map(|&ck| Jet::constant(ck * tail.scale)).collect();
    let d = series_coefficients_s(&a, &v, &w, k_max)?;
    series_remainder_s(&a, &d, y)
}

/// Right-side match data from the tail series, with term-wise ω-derivatives.
pub fn matchdata_from_tail(tail: &TailExpansion, omega0: C64, l: f64, k_max: usize) -> Result<SideMatch> {
    side_match_from_tail(Side::Right, tail, omega0, l, k_max)
}

pub fn side_match_from_tail(side: Side, tail: &TailExpansion, omega0: C64, at: f64, k_max: usize) -> Result<SideMatch> {
    let y = side.outward(at);
    let r = tail_remainder_omega_jet(tail, omega0, y, k_max, 2)?;
    let s = side.sign();
    Ok(SideMatch {
        side,
        at,
        d: (I * omega0 + r.coeff(0)) * s,
        d_prime: (I + r.derivative(1)) * s,
        d_second: r.derivative(2) * s,
        d_prime_excess: r.derivative(1) * s,
        source: MatchSource::TailSeries,
    })
}

/// What lies beyond one end of the LPT domain.
#[derive(Clone, Debug, PartialEq)]
pub enum SideModel {
    /// Symmetry point with imposed parity: no surface terms.
    Origin,
    /// Potential (and perturbation) vanish beyond `at`.
    Free { at: f64 },
    /// Exponential tail beyond `at`, possibly deformed by the perturbation.
    Tail { at: f64, family: TailFamily, k_max: usize },
}

impl SideModel {
    pub fn at(&self) -> Option<f64> {
        match self {
            SideModel::Origin => None,
            SideModel::Free { at } | SideModel::Tail { at, .. } => Some(*at),
        }
    }

    pub fn side_match(&self, side: Side, omega0: C64) -> Result<Option<SideMatch>> {
        match self {
            SideModel::Origin => Ok(None),
            SideModel::Free { at } => Ok(Some(SideMatch::free(side, *at, omega0))),
            SideModel::Tail { at, family, k_max } => {
                Ok(Some(side_match_from_tail(side, &family.base, omega0, *at, *k_max)?))
            }
        }
    }

    /// Δₙ: the μⁿ coefficient of `D(ω₀ + Σ_{1≤i<n} μⁱωᵢ; μ)`, computed by
    /// composing jets in μ. `omegas` holds ω₀ … ω_{n−1}.
    pub fn delta(&self, side: Side, n: usize, omegas: &[C64]) -> Result<C64> {
        if n == 0 || omegas.len() < n {
            return Err(LptError::MissingDerivative { order: n });
        }
        match self {
            SideModel::Origin | SideModel::Free { .. } => Ok(c(0.0, 0.0)),
            SideModel::Tail { at, family, k_max } => {
                if family.is_fixed() {
                    return Ok(c(0.0, 0.0));
                }
                let mut w = vec![c(0.0, 0.0); n + 1];
                w[..n].copy_from_slice(&omegas[..n]);
                let w = Jet::from_coeffs(w);
                let mut a = vec![c(family.base.alpha, 0.0); 2];
                a[1] = c(family.alpha_rate, 0.0);
                let a = Jet::from_coeffs(a);
                let v: Vec<Jet> = (0..*k_max)
                    .map(|k| {
                        let base = family.base.coeffs.get(k).copied().unwrap_or_default() * family.base.scale;
                        let rate = family.coeff_rate.get(k).copied().unwrap_or_default();
                        Jet::from_coeffs(vec![base, rate])
                    })
                    .collect();
                let d = series_coefficients_s(&a, &v, &w, *k_max)?;
                let f = series_logderiv_s(&a, &d, &w, side.outward(*at))?;
                Ok(f.coeff(n) * side.sign())
            }
        }
    }
}

/// Δₙ from the double expansion `D(ω; μ) = Σ_k μᵏ D_k(ω)`.
/// `series[k][m]` is the m-th ω-derivative of D_k at ω₀; `lower` holds
/// ω₁ … ω_{n−1}. Δ₁ = D₁ and Δ₂ = D₂ + ω₁D₁′ + ½ω₁²D₀″ are special cases.
pub fn delta_n(n: usize, series: &[Vec<C64>], lower: &[C64]) -> Result<C64> {
    if n == 0 {
        return Err(LptError::InvalidArgument("Δₙ is defined for n ≥ 1".into()));
    }
    if lower.len() + 1 < n {
        return Err(LptError::MissingDerivative { order: n });
    }
    // δω(μ) = Σ_{1≤i<n} ωᵢμⁱ
    let mut dw = vec![c(0.0, 0.0); n + 1];
    dw[1..n].copy_from_slice(&lower[..n - 1]);
    let dw = Jet::from_coeffs(dw);
    let mut total = c(0.0, 0.0);
    for k in 0..=n {
        // μᵏ D_k(ω₀ + δω): needs the μ^{n−k} coefficient of D_k(ω₀ + δω)
        let need = n - k;
        let dk = series.get(k);
        let mut pow = Jet::constant(c(1.0, 0.0));
        let mut fact = 1.0;
        let mut acc = c(0.0, 0.0);
        for m in 0..=need {
            if m > 0 {
                pow = &pow * &dw;
                fact *= m as f64;
            }
            let coeff = pow.coeff(need);
            if coeff.norm() == 0.0 || (k == 0 && m <= 1) {
                continue;
            }
            let deriv = dk.and_then(|v| v.get(m)).ok_or(LptError::MissingDerivative { order: m })?;
            acc += *deriv / fact * coeff;
        }
        total += acc;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::pt_tail_expansion;

    fn sigma() -> f64 {
        4.75f64.sqrt()
    }

    #[test]
    fn trivial_orders() {
        let t = pt_tail_expansion(5.0, 1.0, 4).unwrap();
        let w = c(sigma(), -0.5);
        assert_eq!(born_logderiv(&t, w, 5.0, 0).unwrap(), I * w);
        let s = series_coefficients(&t, w, 0).unwrap();
        assert_eq!(s.d, vec![c(1.0, 0.0)]);
        assert_eq!(series_logderiv(&s, 3.0).unwrap(), I * w);
    }

    #[test]
    fn single_exponential_born_first_order() {
        let t = TailDescriptor::new(2.0, vec![c(1.0, 0.0)], 1.0).unwrap();
        let w = c(1.0, -0.5);
        let f = born_logderiv(&t, w, 4.0, 1).unwrap();
        // α − 2iω = 1 − 2i
        let expect = I * w - (-8.0f64).exp() / c(1.0, -2.0);
        assert!((f - expect).norm() < 1e-16);
    }

    #[test]
    fn first_series_coefficient() {
        let t = pt_tail_expansion(5.0, 1.0, 4).unwrap();
        let w = c(sigma(), -0.5);
        let s = series_coefficients(&t, w, 4).unwrap();
        let expect = 5.0 * 4.0 / (2.0 * (2.0 - 2.0 * I * w));
        assert!((s.d[1] - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn series_matches_pt_ground_state() {
        let t = pt_tail_expansion(5.0, 1.0, 4).unwrap();
        let w = c(sigma(), -0.5);
        let s = series_coefficients(&t, w, 4).unwrap();
        let x = 5.0f64;
        let f = series_logderiv(&s, x).unwrap();
        let exact = I * w * x.tanh();
        assert!((f - exact).norm() < 20.0 * (-10.0 * x).exp() + 1e-15, "{}", (f - exact).norm());
        let fl = series_logderiv(&s.clone().mirrored(), -x).unwrap();
        assert!((fl + exact).norm() < 20.0 * (-10.0 * x).exp() + 1e-15);
    }

    #[test]
    fn series_solves_wave_equation() {
        let t = pt_tail_expansion(5.0, 1.0, 30).unwrap();
        let w = c(sigma(), -1.5);
        let s = series_coefficients(&t, w, 30).unwrap();
        for &x in &[5.0, 6.5, 8.0] {
            let h = 1e-4;
            let d2 = (s.dphi(x + h) - s.dphi(x - h)) / (2.0 * h);
            let v = 5.0 / x.cosh().powi(2);
            let res = d2 - (v - w * w) * s.phi(x);
            assert!(res.norm() < 1e-7 * s.phi(x).norm());
        }
    }

    #[test]
    fn born_second_order_agrees_with_series() {
        let t = pt_tail_expansion(5.0, 1.0, 6).unwrap();
        let w = c(sigma(), -0.5);
        let s = series_coefficients(&t, w, 12).unwrap();
        for &x in &[3.0, 4.0, 5.0] {
            let fb = born_logderiv(&t, w, x, 2).unwrap();
            let fs = series_logderiv(&s, x).unwrap();
            assert!((fb - fs).norm() < 2e4 * (-6.0 * x).exp(), "x={x}: {}", (fb - fs).norm());
        }
    }

    #[test]
    fn born_validity_and_guards() {
        let t = pt_tail_expansion(5.0, 1.0, 4).unwrap();
        let w = c(sigma(), -0.5);
        assert!(matches!(born_logderiv(&t, w, 0.0, 1), Err(LptError::TailRegionTooClose { .. })));
        // 2iω = α·k exactly for ω = −i·αk/2
        let res = series_coefficients(&t, c(0.0, -2.0), 4);
        assert!(matches!(res, Err(LptError::ResonantDenominator { k: 2, .. })));
    }

    #[test]
    fn match_derivatives_by_finite_difference() {
        let t = pt_tail_expansion(5.0, 1.0, 4).unwrap();
        let w = c(sigma(), -1.5);
        let m = matchdata_from_tail(&t, w, 5.0, 4).unwrap();
        let h = 1e-6;
        let f = |z: C64| series_logderiv(&series_coefficients(&t, z, 4).unwrap(), 5.0).unwrap();
        let fd = (f(w + h) - f(w - h)) / (2.0 * h);
        assert!((m.d_prime - fd).norm() < 1e-8);
        // D′ − i shrinks like e^{−2L}
        let r4 = (matchdata_from_tail(&t, w, 4.0, 4).unwrap().d_prime - I).norm();
        let r6 = (matchdata_from_tail(&t, w, 6.0, 4).unwrap().d_prime - I).norm();
        assert!((r4 / r6).ln() / 2.0 > 1.8);
    }

    #[test]
    fn free_side() {
        let w = c(3.0, -0.2);
        let m = SideMatch::free(Side::Left, -2.0, w);
        assert_eq!(m.d, -I * w);
        assert_eq!(m.d_prime, -I);
    }

    #[test]
    fn delta_synthetic() {
        // D₂=1, ω₁=2i, D₁′=3, D₀″=0.5 → 6i
        let series = vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)], vec![c(0.0, 0.0), c(3.0, 0.0)], vec![c(1.0, 0.0)]];
        let d2 = delta_n(2, &series, &[c(0.0, 2.0)]).unwrap();
        assert!((d2 - c(0.0, 6.0)).norm() < 1e-15);
        let d1 = delta_n(1, &series, &[]).unwrap();
        assert_eq!(d1, c(0.0, 0.0));
        assert!(matches!(delta_n(3, &series, &[c(1.0, 0.0), c(1.0, 0.0)]), Err(LptError::MissingDerivative { .. })));
    }

    #[test]
    fn untouched_tail_has_no_delta() {
        let t = pt_tail_expansion(5.0, 1.0, 6).unwrap();
        let m = SideModel::Tail { at: 5.0, family: TailFamily::fixed(t), k_max: 6 };
        assert_eq!(m.delta(Side::Right, 2, &[c(2.0, -0.5), c(0.1, 0.0)]).unwrap(), c(0.0, 0.0));
        assert_eq!(SideModel::Free { at: 1.0 }.delta(Side::Left, 1, &[c(1.0, 0.0)]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn width_family_delta_matches_exact_log_derivative() {
        // f(x; μ) = (1+μ) i ω(μ) tanh((1+μ)x) for j = 0 at fixed ω = ω₀ gives D₁
        let t = pt_tail_expansion(5.0, 1.0, 12).unwrap();
        let fam = TailFamily { base: t, alpha_rate: 2.0, coeff_rate: vec![] };
        let m = SideModel::Tail { at: 5.0, family: fam, k_max: 12 };
        let w0 = c(sigma(), -0.5);
        let d1 = m.delta(Side::Right, 1, &[w0]).unwrap();
        // exact: the outgoing solution of cosh⁻²((1+μ)x) at frequency ω is a
        // hypergeometric function; compare against a μ-finite difference of
        // the same series instead
        let h = 1e-6;
        let f = |mu: f64| {
            let tt = TailDescriptor { alpha: 2.0 * (1.0 + mu), ..pt_tail_expansion(5.0, 1.0, 12).unwrap() };
            series_logderiv(&series_coefficients(&tt, w0, 12).unwrap(), 5.0).unwrap()
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!((d1 - fd).norm() < 1e-8 * fd.norm().max(1.0));
    }
}
