//! End-to-end runs: the square step with a small bump (sweeps in x₀ and in
//! μ) and the Pöschl–Teller width perturbation.

use crate::born_tail::SideModel;
use crate::exec::{par_map, Execution};
use crate::lpt::{
    generalized_norm_with, match_data, perturb, rotated_contour_me, second_order_explicit, wronskian_shift, LptOptions,
    LptProblem, NormOptions, PerturbationResult, SubtractMode,
};
use crate::oracles::{pt_exact, step_exact, PtExact, StepExact};
use crate::potentials::{pt_width_perturbation, BumpPerturbation, PotentialSpec};
use crate::riccati::{
    build_profile, count_real_nodes, pt_eigenvalue, shoot_eigenvalue_with, Anchor, LeftCondition, LogDerivProfile,
    ProfileRequest, ShootConfig, SolverOptions,
};
use crate::{c, LptError, Result, C64};

/// Step `V₀` on `|x| < b` with a unit bump of width `w`, odd sector, on the
/// half line `[0, a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepBumpConfig {
    pub v0: f64,
    pub b: f64,
    pub a: f64,
    pub w: f64,
    pub root_index: u32,
    pub solver_tol: f64,
    /// Chain shooting seeds along the parameter path.
    pub seed_from_exact: bool,
    pub exec: Execution,
}

impl Default for StepBumpConfig {
    fn default() -> Self {
        StepBumpConfig {
            v0: 100.0,
            b: 1.0,
            a: 1.6,
            w: 0.1,
            root_index: 1,
            solver_tol: 1e-12,
            seed_from_exact: true,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    BumpPosition,
    MuScaling,
}

/// One sweep point. Error columns are |ω_exact − ω_approx|, formed from the
/// exact shift so that they keep their relative precision at small μ.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub x0: f64,
    pub mu: f64,
    pub omega1: C64,
    pub omega2: C64,
    /// ω₂ from the recursive path, for the two-path check.
    pub omega2_recursive: C64,
    pub omega_exact: C64,
    pub omega_first: C64,
    pub omega_second: C64,
    pub err0: f64,
    pub err1: f64,
    pub err2: f64,
    /// Shooting residual of the exact root.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slopes {
    pub zeroth: f64,
    pub first: f64,
    pub second: f64,
    /// Set when fewer than two points per column rise above the precision
    /// floor, so a fit means nothing.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub omega0: C64,
    pub points: Vec<SweepPoint>,
    /// Parameter values whose point could not be computed, with the reason.
    pub missing: Vec<(f64, String)>,
    pub slopes: Option<Slopes>,
}

/// Half-line profile of the unperturbed step mode on `[0, a]`.
pub fn step_profile(cfg: &StepBumpConfig, breaks: Vec<f64>) -> Result<(StepExact, PotentialSpec, LogDerivProfile)> {
    let ex = step_exact(cfg.v0, cfg.b, cfg.a, cfg.root_index)?;
    let pot = PotentialSpec::step(cfg.v0, cfg.b)?;
    let prof = build_profile(&ProfileRequest {
        potential: &pot,
        omega: ex.omega0,
        lo: 0.0,
        hi: cfg.a,
        anchor: Anchor::Odd(0.0),
        breaks,
        opts: SolverOptions::profile(),
    })?;
    Ok((ex, pot, prof))
}

/// First and second order for one bump position: ω₁ in closed form, ω₂ by
/// the explicit double integral, plus the recursive ω₂.
#[derive(Clone, Debug)]
pub struct BumpOrders {
    pub omega0: C64,
    pub omega1: C64,
    pub omega2: C64,
    pub recursive: PerturbationResult,
}

pub fn bump_orders(cfg: &StepBumpConfig, x0: f64) -> Result<BumpOrders> {
    let bump = BumpPerturbation::new(x0, cfg.w, 1.0)?;
    let (lo, hi) = bump.edges();
    if !(lo >= 0.0 && hi <= cfg.a) {
        return Err(LptError::InvalidArgument(format!("bump ({lo}, {hi}) must lie inside [0, {}]", cfg.a)));
    }
    let v1 = bump.to_spec()?;
    let (ex, _, prof) = step_profile(cfg, vec![lo, hi])?;
    let problem = LptProblem {
        profile: prof,
        v1: v1.clone(),
        left: SideModel::Origin,
        right: SideModel::Free { at: cfg.a },
        options: LptOptions::default(),
    };
    let recursive = perturb(&problem, 2)?;
    let omega1 = ex.bump_first_order(x0, cfg.w);
    let omega2 = second_order_explicit(&problem.profile, &v1, &recursive.norm, omega1, cfg.a)?;
    Ok(BumpOrders { omega0: ex.omega0, omega1, omega2, recursive })
}

struct Exact {
    omega: C64,
    shift: C64,
    residual: f64,
}

fn exact_root(cfg: &StepBumpConfig, x0: f64, mu: f64, omega0: C64, seed: C64) -> Result<Exact> {
    let v0 = PotentialSpec::step(cfg.v0, cfg.b)?;
    let v1 = PotentialSpec::bump(x0, cfg.w, 1.0)?;
    if mu == 0.0 {
        return Ok(Exact { omega: omega0, shift: c(0.0, 0.0), residual: 0.0 });
    }
    let full = PotentialSpec::sum(&v0, &v1.scaled(mu))?;
    let mut sc = ShootConfig::new(0.0, LeftCondition::Odd);
    sc.solver = SolverOptions::with_tol(cfg.solver_tol);
    let root = shoot_eigenvalue_with(&full, seed, &sc)?;
    let ws = wronskian_shift(&v0, &v1, mu, omega0, root.value, cfg.a)?;
    Ok(Exact { omega: omega0 + ws.shift, shift: ws.shift, residual: root.residual.max(ws.outgoing_residual) })
}

fn point(x0: f64, mu: f64, o: &BumpOrders, e: &Exact) -> SweepPoint {
    let d1 = mu * o.omega1;
    let d2 = d1 + mu * mu * o.omega2;
    SweepPoint {
        x0,
        mu,
        omega1: o.omega1,
        omega2: o.omega2,
        omega2_recursive: o.recursive.orders[1].omega,
        omega_exact: e.omega,
        omega_first: o.omega0 + d1,
        omega_second: o.omega0 + d2,
        err0: e.shift.norm(),
        err1: (e.shift - d1).norm(),
        err2: (e.shift - d2).norm(),
        residual: e.residual,
    }
}

/// Shoot for every (x₀, μ, orders) job. With seed chaining the jobs run in
/// order and each seed is corrected by the previous point's miss.
fn shoot_all(cfg: &StepBumpConfig, jobs: &[(f64, f64, BumpOrders)]) -> Vec<Result<Exact>> {
    let predict = |(_, mu, o): &(f64, f64, BumpOrders)| o.omega0 + *mu * o.omega1 + *mu * *mu * o.omega2;
    if !cfg.seed_from_exact {
        return par_map(cfg.exec, jobs, |j| exact_root(cfg, j.0, j.1, j.2.omega0, predict(j)));
    }
    let mut out = Vec::with_capacity(jobs.len());
    let mut miss = c(0.0, 0.0);
    for j in jobs {
        let p = predict(j);
        let r = exact_root(cfg, j.0, j.1, j.2.omega0, p + miss);
        if let Ok(e) = &r {
            miss = e.omega - p;
        }
        out.push(r);
    }
    out
}

/// Trajectory of the mode as the bump moves through `x0s` at fixed μ.
pub fn run_bump_sweep(cfg: &StepBumpConfig, mu: f64, x0s: &[f64]) -> Result<SweepResult> {
    if x0s.is_empty() {
        return Err(LptError::InvalidArgument("empty x₀ range".into()));
    }
    let omega0 = step_exact(cfg.v0, cfg.b, cfg.a, cfg.root_index)?.omega0;
    let orders = par_map(cfg.exec, x0s, |&x0| bump_orders(cfg, x0));
    let mut missing = Vec::new();
    let mut jobs = Vec::new();
    for (&x0, o) in x0s.iter().zip(orders) {
        match o {
            Ok(o) => jobs.push((x0, mu, o)),
            Err(e @ LptError::InvalidArgument(_)) => return Err(e),
            Err(e) => missing.push((x0, e.to_string())),
        }
    }
    let mut points = Vec::new();
    for (j, r) in jobs.iter().zip(shoot_all(cfg, &jobs)) {
        match r {
            Ok(e) => points.push(point(j.0, mu, &j.2, &e)),
            Err(e) => missing.push((j.0, e.to_string())),
        }
    }
    missing.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(SweepResult { kind: SweepKind::BumpPosition, omega0, points, missing, slopes: None })
}

/// Errors of the 0th, 1st and 2nd order predictions over a μ grid at fixed
/// x₀, with least-squares log-log slopes.
pub fn run_mu_scaling(cfg: &StepBumpConfig, x0: f64, mus: &[f64]) -> Result<SweepResult> {
    if mus.is_empty() {
        return Err(LptError::InvalidArgument("empty μ grid".into()));
    }
    if mus.iter().any(|&m| !(m > 0.0)) {
        return Err(LptError::InvalidArgument("μ grid must be positive for a log-log fit".into()));
    }
    let o = bump_orders(cfg, x0)?;
    let jobs: Vec<(f64, f64, BumpOrders)> = mus.iter().map(|&m| (x0, m, o.clone())).collect();
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for (j, r) in jobs.iter().zip(shoot_all(cfg, &jobs)) {
        match r {
            Ok(e) => points.push(point(x0, j.1, &j.2, &e)),
            Err(e) => missing.push((j.1, e.to_string())),
        }
    }
    let slopes = fit_slopes(&points);
    Ok(SweepResult { kind: SweepKind::MuScaling, omega0: o.omega0, points, missing, slopes })
}

/// Least-squares slope of log|err| against log μ, using points above the
/// floor `1e-14·|ω_exact − ω₀|`.
fn slope(points: &[SweepPoint], err: impl Fn(&SweepPoint) -> f64) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| err(p) > 1e-14 * p.err0 && err(p) > 0.0)
        .map(|p| (p.mu.ln(), err(p).ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / n, xy.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn fit_slopes(points: &[SweepPoint]) -> Option<Slopes> {
    if points.len() < 2 {
        return None;
    }
    let s = [slope(points, |p| p.err0), slope(points, |p| p.err1), slope(points, |p| p.err2)];
    Some(Slopes {
        zeroth: s[0].unwrap_or(f64::NAN),
        first: s[1].unwrap_or(f64::NAN),
        second: s[2].unwrap_or(f64::NAN),
        degenerate: s.iter().any(Option::is_none),
    })
}

/// Pöschl–Teller demo settings.
#[derive(Clone, Debug, PartialEq)]
pub struct PtConfig {
    pub v0: f64,
    pub j: u32,
    pub l: f64,
    pub k_max: usize,
    /// When set, `k_max` is raised to the smallest truncation whose first
    /// dropped tail term at `L` is below this value.
    pub tail_tol: Option<f64>,
    /// Sign of Re ω₀.
    pub branch: i8,
    /// Contour angle in degrees (mirrored for the negative branch).
    pub theta_deg: f64,
    pub subtract: SubtractMode,
}

impl Default for PtConfig {
    fn default() -> Self {
        PtConfig { v0: 5.0, j: 0, l: 5.0, k_max: 4, tail_tol: None, branch: 1, theta_deg: 60.0, subtract: SubtractMode::Auto }
    }
}

/// The width-perturbation problem on the half line `[0, L]`. Full-line norm
/// and matrix element are twice the half-line ones.
pub fn pt_problem(cfg: &PtConfig) -> Result<LptProblem> {
    let wp = pt_width_perturbation(cfg.v0)?;
    let w0 = pt_eigenvalue(cfg.v0, 1.0, cfg.j, cfg.branch)?.value;
    let anchor = if cfg.j.is_multiple_of(2) { Anchor::Even(0.0) } else { Anchor::Odd(0.0) };
    let profile = build_profile(&ProfileRequest {
        potential: &wp.v0,
        omega: w0,
        lo: 0.0,
        hi: cfg.l,
        anchor,
        breaks: vec![],
        opts: SolverOptions::profile(),
    })?;
    let k_max = match cfg.tail_tol {
        Some(tau) => wp.family.base.auto_order(cfg.l, tau).max(cfg.k_max),
        None => cfg.k_max,
    };
    let mut options = LptOptions::default();
    options.norm.subtract = cfg.subtract;
    Ok(LptProblem {
        profile,
        v1: wp.v1,
        left: SideModel::Origin,
        right: SideModel::Tail { at: cfg.l, family: wp.family, k_max },
        options,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PtDemo {
    pub config: PtConfig,
    pub omega0: C64,
    pub omega1_exact: C64,
    pub omega1_surface: C64,
    pub omega1_contour: C64,
    /// Full-line values.
    pub norm: C64,
    pub norm_exact: C64,
    pub me_surface: C64,
    pub me_contour: C64,
    pub me_exact: C64,
    pub digits_lost_raw: f64,
    pub digits_lost_subtracted: f64,
    pub me_digits_lost: f64,
    pub real_nodes: usize,
    pub riccati_residual: f64,
}

impl PtDemo {
    pub fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }
}

/// ω₁ three ways: closed form, surface-term regularization with the tail
/// series, and the rotated contour for the matrix element.
pub fn run_pt_demo(cfg: &PtConfig) -> Result<PtDemo> {
    let ex: PtExact = pt_exact(cfg.j, cfg.v0, cfg.branch as f64)?;
    let problem = pt_problem(cfg)?;
    let res = perturb(&problem, 1)?;
    let md = match_data(&problem.profile, &problem.left, &problem.right)?;
    let sub_opts = NormOptions { subtract: SubtractMode::Always, limit: f64::INFINITY, ..problem.options.norm };
    let sub = generalized_norm_with(&problem.profile, &md, &sub_opts)?;
    let theta = cfg.theta_deg.to_radians() * if cfg.branch < 0 { -1.0 } else { 1.0 };
    let me_contour = rotated_contour_me(&|z| ex.v1_at(z), &|z| ex.phi0_sq(z), theta)?;
    // the contour integral uses φ₀ = cosh^{iω}x normalization, as does the profile
    let norm = 2.0 * res.norm.value;
    let me = 2.0 * res.orders[0].matrix_element.value;
    Ok(PtDemo {
        config: cfg.clone(),
        omega0: ex.omega0,
        omega1_exact: ex.omega1,
        omega1_surface: res.orders[0].omega,
        omega1_contour: me_contour / (2.0 * ex.omega0 * ex.norm),
        norm,
        norm_exact: ex.norm,
        me_surface: me,
        me_contour,
        me_exact: ex.matrix_element,
        digits_lost_raw: sub.raw_digits_lost,
        digits_lost_subtracted: sub.digits_lost,
        me_digits_lost: res.orders[0].matrix_element.digits_lost,
        real_nodes: res.diagnostics.real_nodes,
        riccati_residual: res.diagnostics.riccati_residual,
    })
}

/// Full-line norm, matrix element and ω₁ at each `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct LSweepRow {
    pub l: f64,
    pub norm: C64,
    pub me: C64,
    pub omega1: C64,
}

pub fn run_l_sweep(cfg: &PtConfig, ls: &[f64], exec: Execution) -> Result<Vec<LSweepRow>> {
    par_map(exec, ls, |&l| {
        let c2 = PtConfig { l, ..cfg.clone() };
        let r = perturb(&pt_problem(&c2)?, 1)?;
        Ok(LSweepRow { l, norm: 2.0 * r.norm.value, me: 2.0 * r.orders[0].matrix_element.value, omega1: r.orders[0].omega })
    })
    .into_iter()
    .collect()
}

/// Largest relative deviation of each column from its mean.
pub fn l_variation(rows: &[LSweepRow]) -> (f64, f64, f64) {
    let spread = |get: &dyn Fn(&LSweepRow) -> C64| {
        let mean: C64 = rows.iter().map(get).sum::<C64>() / rows.len() as f64;
        rows.iter().map(|r| (get(r) - mean).norm() / mean.norm()).fold(0.0, f64::max)
    };
    (spread(&|r| r.norm), spread(&|r| r.me), spread(&|r| r.omega1))
}

/// A converged mode and its number of real nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub label: String,
    pub omega: C64,
    pub real_nodes: usize,
    pub riccati_residual: f64,
}

/// Real-node count and Riccati residual for the lowest `step_modes` odd
/// step modes and `pt_modes` Pöschl–Teller modes (full line).
pub fn node_survey(step_modes: u32, pt_modes: u32, exec: Execution) -> Result<Vec<NodeRecord>> {
    let mut jobs: Vec<(bool, u32)> = (1..=step_modes).map(|n| (true, n)).collect();
    jobs.extend((0..pt_modes).map(|j| (false, j)));
    par_map(exec, &jobs, |&(is_step, n)| -> Result<NodeRecord> {
        let (label, prof) = if is_step {
            let cfg = StepBumpConfig { root_index: n, ..StepBumpConfig::default() };
            (format!("step V0=100 n={n}"), step_profile(&cfg, vec![])?.2)
        } else {
            let v = PotentialSpec::poschl_teller(5.0, 1.0)?;
            let w = pt_eigenvalue(5.0, 1.0, n, 1)?.value;
            let anchor = if n % 2 == 0 { Anchor::Even(0.0) } else { Anchor::Odd(0.0) };
            let p = build_profile(&ProfileRequest {
                potential: &v,
                omega: w,
                lo: -3.0,
                hi: 3.0,
                anchor,
                breaks: vec![],
                opts: SolverOptions::profile(),
            })?;
            (format!("poschl-teller V0=5 j={n}"), p)
        };
        Ok(NodeRecord {
            label,
            omega: prof.omega,
            real_nodes: count_real_nodes(&prof),
            riccati_residual: prof.riccati_residual(),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(mu: f64) -> SweepPoint {
        let z = C64::new(0.0, 0.0);
        SweepPoint {
            x0: 0.3,
            mu,
            omega1: z,
            omega2: z,
            omega2_recursive: z,
            omega_exact: z,
            omega_first: z,
            omega_second: z,
            err0: 2.0 * mu,
            err1: 5.0 * mu * mu,
            err2: 0.5 * mu.powi(3),
            residual: 0.0,
        }
    }

    #[test]
    fn slopes_of_power_laws() {
        let pts: Vec<SweepPoint> = [1e-3, 1e-2, 1e-1].into_iter().map(synthetic).collect();
        let s = fit_slopes(&pts).unwrap();
        assert!(!s.degenerate);
        assert!((s.zeroth - 1.0).abs() < 1e-12 && (s.first - 2.0).abs() < 1e-12 && (s.second - 3.0).abs() < 1e-12);
        assert!(fit_slopes(&pts[..1]).is_none());
    }

    #[test]
    fn errors_below_the_floor_make_the_fit_degenerate() {
        let mut pts: Vec<SweepPoint> = [1e-3, 1e-2].into_iter().map(synthetic).collect();
        pts[0].err2 = 0.0;
        let s = fit_slopes(&pts).unwrap();
        assert!(s.degenerate && s.second.is_nan());
        assert!((s.first - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_tolerance_only_raises_the_truncation() {
        let base = pt_problem(&PtConfig::default()).unwrap();
        let tight = pt_problem(&PtConfig { l: 3.0, tail_tol: Some(1e-14), ..PtConfig::default() }).unwrap();
        let loose = pt_problem(&PtConfig { tail_tol: Some(1e-1), ..PtConfig::default() }).unwrap();
        let k = |p: &LptProblem| match &p.right {
            SideModel::Tail { k_max, .. } => *k_max,
            _ => unreachable!(),
        };
        assert_eq!(k(&base), 4);
        assert_eq!(k(&loose), 4);
        assert!(k(&tight) > 4);
    }
}
