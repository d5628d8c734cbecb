use super::norm::{generalized_norm_with, GeneralizedNorm, NormOptions};
use super::{digits_lost, match_data};
use crate::born_tail::{MatchData, Side, SideModel};
use crate::potentials::PotentialSpec;
use crate::riccati::{count_real_nodes, LeftEnd, LogDerivProfile};
use crate::{c, LptError, Result, C64};

/// ⟨φ₀|Vₙ|φ₀⟩ with its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixElement {
    pub value: C64,
    pub integral_part: C64,
    pub surface_part: C64,
    pub digits_lost: f64,
}

/// ∫Vₙφ₀² + [−Δ₊ₙφ₀²(L₊) + Δ₋ₙφ₀²(L₋)] with `vn` sampled at the profile's
/// node slots.
pub fn matrix_element(vn: &[C64], profile: &LogDerivProfile, delta_plus: C64, delta_minus: C64) -> Result<MatrixElement> {
    let phi2 = profile.phi_sq_nodes();
    if vn.len() != phi2.len() {
        return Err(LptError::GridMismatch { expected: phi2.len(), got: vn.len() });
    }
    let prod: Vec<C64> = vn.iter().zip(&phi2).map(|(v, p)| v * p).collect();
    let (integral, _) = profile.integrate(&prod)?;
    let mut surface = -delta_plus * profile.phi_sq_at(profile.hi());
    if delta_minus != c(0.0, 0.0) {
        surface += delta_minus * profile.phi_sq_at(profile.lo());
    }
    let value = integral + surface;
    Ok(MatrixElement {
        value,
        integral_part: integral,
        surface_part: surface,
        digits_lost: digits_lost(&[integral.norm(), surface.norm()], value.norm()),
    })
}

/// ωₙ = ⟨φ₀|Vₙ|φ₀⟩ / (2ω₀⟨φ₀|φ₀⟩).
pub fn order_shift(me: C64, norm: &GeneralizedNorm, omega0: C64) -> Result<C64> {
    if !(norm.value.norm() >= 1e-10 * norm.abs_integral) {
        return Err(LptError::DegenerateNorm { value: norm.value });
    }
    Ok(me / (2.0 * omega0 * norm.value))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderData {
    pub n: usize,
    pub omega: C64,
    /// fₙ at the profile's node slots.
    pub f: Vec<C64>,
    /// Vₙ at the profile's node slots.
    pub vn: Vec<C64>,
    pub delta_plus: C64,
    pub delta_minus: C64,
    pub matrix_element: MatrixElement,
    /// Relative disagreement of the two boundary conditions on Fₙ = fₙφ₀².
    pub boundary_mismatch: f64,
}

/// Vₙ = −Σ_{i=1}^{n−1}(fᵢf_{n−i} + ωᵢω_{n−i}); `lower` holds orders 1 … n−1.
pub fn effective_potential(lower: &[OrderData], n: usize) -> Result<Vec<C64>> {
    if n < 2 || lower.len() < n - 1 {
        return Err(LptError::MissingDerivative { order: n.saturating_sub(1) });
    }
    let len = lower[0].f.len();
    if let Some(bad) = lower[..n - 1].iter().find(|o| o.f.len() != len) {
        return Err(LptError::GridMismatch { expected: len, got: bad.f.len() });
    }
    let mut v = vec![c(0.0, 0.0); len];
    for i in 1..n {
        let (a, b) = (&lower[i - 1], &lower[n - i - 1]);
        let w = a.omega * b.omega;
        for (k, vk) in v.iter_mut().enumerate() {
            *vk -= a.f[k] * b.f[k] + w;
        }
    }
    Ok(v)
}

/// Boundary data `(Δₙ, D₀′)` at one end.
pub type EndData = Option<(C64, C64)>;

fn divide_by_phi2(profile: &LogDerivProfile, big_f: &[C64]) -> Vec<C64> {
    let origin = matches!(profile.left_end, LeftEnd::Origin(_));
    let lo = profile.lo();
    let rule = profile.rule();
    let mut out = Vec::with_capacity(big_f.len());
    let mut k = 0;
    for p in &profile.panels {
        for (i, phi) in p.phi.iter().enumerate() {
            let x = p.node(rule, i);
            let p2 = phi * phi;
            // at a symmetry origin Fₙ vanishes at least as fast as φ₀²
            out.push(if (origin && x == lo) || p2 == c(0.0, 0.0) { c(0.0, 0.0) } else { big_f[k] / p2 });
            k += 1;
        }
    }
    out
}

fn source(profile: &LogDerivProfile, vn: &[C64], omega_n: C64) -> Result<Vec<C64>> {
    let phi2 = profile.phi_sq_nodes();
    if vn.len() != phi2.len() {
        return Err(LptError::GridMismatch { expected: phi2.len(), got: vn.len() });
    }
    let shift = 2.0 * profile.omega * omega_n;
    Ok(vn.iter().zip(&phi2).map(|(v, p)| (v - shift) * p).collect())
}

fn left_running(profile: &LogDerivProfile, src: &[C64], omega_n: C64, left: EndData) -> Result<Vec<C64>> {
    let start = match left {
        Some((dm, dp)) => (omega_n * dp + dm) * profile.phi_sq_at(profile.lo()),
        None => c(0.0, 0.0),
    };
    profile.cumulative(src, start)
}

fn right_running(profile: &LogDerivProfile, src: &[C64], omega_n: C64, right: (C64, C64)) -> Result<Vec<C64>> {
    let end = (omega_n * right.1 + right.0) * profile.phi_sq_at(profile.hi());
    let run = profile.cumulative(src, c(0.0, 0.0))?;
    let total = *run.last().unwrap();
    Ok(run.into_iter().map(|r| end - (total - r)).collect())
}

/// fₙ from fₙφ₀² = [ωₙD₋′ + Δ₋ₙ]φ₀²(L₋) + ∫_{L₋}^x (Vₙ − 2ω₀ωₙ)φ₀², together
/// with the relative mismatch against the condition at L₊. With `left` =
/// `None` the left end is a symmetry origin where fₙφ₀² = 0.
pub fn wavefunction_correction(
    profile: &LogDerivProfile,
    vn: &[C64],
    omega_n: C64,
    left: EndData,
    right: EndData,
) -> Result<(Vec<C64>, f64)> {
    let src = source(profile, vn, omega_n)?;
    let run = left_running(profile, &src, omega_n, left)?;
    let mut mismatch = 0.0;
    if let Some((dp, d0)) = right {
        let expect = (omega_n * d0 + dp) * profile.phi_sq_at(profile.hi());
        let got = *run.last().unwrap();
        let scale = got.norm().max(expect.norm()).max(profile.integrate(&src)?.1);
        mismatch = if scale == 0.0 { 0.0 } else { (got - expect).norm() / scale };
    }
    Ok((divide_by_phi2(profile, &run), mismatch))
}

/// The mirrored form, integrated inward from L₊.
pub fn wavefunction_correction_from_right(
    profile: &LogDerivProfile,
    vn: &[C64],
    omega_n: C64,
    right: (C64, C64),
) -> Result<Vec<C64>> {
    let src = source(profile, vn, omega_n)?;
    let run = right_running(profile, &src, omega_n, right)?;
    Ok(divide_by_phi2(profile, &run))
}

/// δω/δV(x) = φ₀²(x)/⟨φ₀|φ₀⟩.
pub fn susceptibility(profile: &LogDerivProfile, norm: &GeneralizedNorm, x: f64) -> C64 {
    profile.phi_sq_at(x) / norm.value
}

#[derive(Clone, Debug)]
pub struct LptOptions {
    pub norm: NormOptions,
    /// Largest tolerated boundary mismatch of Fₙ.
    pub consistency_tol: f64,
    /// Panels are bisected until the Chebyshev tail of every order's
    /// integrand is below this fraction of ∫|integrand|.
    pub resolve_tol: f64,
    pub max_refinements: usize,
}

impl Default for LptOptions {
    fn default() -> Self {
        LptOptions { norm: NormOptions::default(), consistency_tol: 1e-6, resolve_tol: 1e-12, max_refinements: 8 }
    }
}

/// A QNM profile of V₀ together with the perturbation V₁ and what lies
/// beyond each end.
#[derive(Clone, Debug)]
pub struct LptProblem {
    pub profile: LogDerivProfile,
    pub v1: PotentialSpec,
    pub left: SideModel,
    pub right: SideModel,
    pub options: LptOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub norm_digits_lost: f64,
    pub raw_norm_digits_lost: f64,
    pub subtracted: bool,
    pub me_digits_lost: Vec<f64>,
    pub boundary_mismatch: Vec<f64>,
    pub riccati_residual: f64,
    pub real_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct PerturbationResult {
    pub omega0: C64,
    /// The profile the orders live on (the input one, possibly with panels
    /// split to resolve higher-order integrands).
    pub profile: LogDerivProfile,
    pub orders: Vec<OrderData>,
    pub norm: GeneralizedNorm,
    pub match_data: MatchData,
    pub diagnostics: Diagnostics,
}

impl PerturbationResult {
    /// ω₀ + Σ_{k≤n} μᵏωₖ.
    pub fn omega_at(&self, mu: f64, n: usize) -> C64 {
        let mut w = self.omega0;
        let mut p = 1.0;
        for o in self.orders.iter().take(n) {
            p *= mu;
            w += o.omega * p;
        }
        w
    }

    pub fn shifts(&self) -> Vec<C64> {
        self.orders.iter().map(|o| o.omega).collect()
    }
}

fn side_end(model: &SideModel, sm: Option<crate::born_tail::SideMatch>, side: Side, n: usize, omegas: &[C64]) -> Result<(C64, EndData)> {
    match sm {
        None => Ok((c(0.0, 0.0), None)),
        Some(m) => {
            let d = model.delta(side, n, omegas)?;
            Ok((d, Some((d, m.d_prime))))
        }
    }
}

/// Indices of panels on which `samples` is under-resolved.
fn unresolved(profile: &LogDerivProfile, samples: &[C64], tol: f64, out: &mut Vec<usize>) -> Result<()> {
    let (_, total) = profile.integrate(samples)?;
    let r = profile.rule();
    let m = r.n + 1;
    for (k, p) in profile.panels.iter().enumerate() {
        let a = r.coefficients(&samples[k * m..(k + 1) * m]);
        let tail = (a[r.n].norm() + a[r.n - 1].norm()) * (p.b - p.a);
        if tail > tol * total && (p.b - p.a) > 1e-6 && !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(())
}

/// Orders 1 … `max_order` of the shift and the log-derivative corrections.
pub fn perturb(problem: &LptProblem, max_order: usize) -> Result<PerturbationResult> {
    if max_order == 0 {
        return Err(LptError::InvalidArgument("max_order must be at least 1".into()));
    }
    let deforming = |m: &SideModel| matches!(m, SideModel::Tail { family, .. } if !family.is_fixed());
    if max_order > 1 && (deforming(&problem.left) || deforming(&problem.right)) {
        return Err(LptError::UnsupportedConfiguration(
            "tail-deforming perturbation families are supported at first order only".into(),
        ));
    }
    let mut prof = problem.profile.clone();
    for _ in 0..=problem.options.max_refinements {
        let (res, bad) = perturb_on(problem, prof, max_order)?;
        if bad.is_empty() {
            return Ok(res);
        }
        prof = res.profile.split_panels(&bad)?;
    }
    Err(LptError::IntegrationFailure { x: problem.profile.lo(), reason: "order integrands could not be resolved".into() })
}

fn perturb_on(problem: &LptProblem, prof: LogDerivProfile, max_order: usize) -> Result<(PerturbationResult, Vec<usize>)> {
    let md = match_data(&prof, &problem.left, &problem.right)?;
    let norm = generalized_norm_with(&prof, &md, &problem.options.norm)?;
    let w0 = prof.omega;
    let phi2 = prof.phi_sq_nodes();
    let mut bad = Vec::new();
    let mut omegas = vec![w0];
    let mut orders: Vec<OrderData> = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        let vn = if n == 1 { prof.sample(&problem.v1) } else { effective_potential(&orders, n)? };
        let (dp, right) = side_end(&problem.right, md.right, Side::Right, n, &omegas)?;
        let (dm, left) = side_end(&problem.left, md.left, Side::Left, n, &omegas)?;
        let me = matrix_element(&vn, &prof, dp, dm)?;
        if me.digits_lost > problem.options.norm.limit {
            return Err(LptError::PrecisionExhausted { digits_lost: me.digits_lost });
        }
        let wn = order_shift(me.value, &norm, w0)?;
        let (mut f, mismatch) = wavefunction_correction(&prof, &vn, wn, left, right)?;
        if mismatch > problem.options.consistency_tol {
            return Err(LptError::InconsistentShift { n, mismatch });
        }
        // two-sided problems: take each half from its nearer end
        if let (Some(_), Some(r)) = (left, right) {
            let fr = wavefunction_correction_from_right(&prof, &vn, wn, r)?;
            let ax = prof.anchor.0;
            for ((fk, x), frk) in f.iter_mut().zip(prof.node_xs()).zip(fr) {
                if x > ax {
                    *fk = frk;
                }
            }
        }
        let prod: Vec<C64> = vn.iter().zip(&phi2).map(|(v, p)| v * p).collect();
        unresolved(&prof, &prod, problem.options.resolve_tol, &mut bad)?;
        omegas.push(wn);
        orders.push(OrderData {
            n,
            omega: wn,
            f,
            vn,
            delta_plus: dp,
            delta_minus: dm,
            matrix_element: me,
            boundary_mismatch: mismatch,
        });
    }
    bad.sort_unstable();
    let diagnostics = Diagnostics {
        norm_digits_lost: norm.digits_lost,
        raw_norm_digits_lost: norm.raw_digits_lost,
        subtracted: norm.subtracted,
        me_digits_lost: orders.iter().map(|o| o.matrix_element.digits_lost).collect(),
        boundary_mismatch: orders.iter().map(|o| o.boundary_mismatch).collect(),
        riccati_residual: prof.riccati_residual(),
        real_nodes: count_real_nodes(&prof),
    };
    Ok((PerturbationResult { omega0: w0, profile: prof, orders, norm, match_data: md, diagnostics }, bad))
}
