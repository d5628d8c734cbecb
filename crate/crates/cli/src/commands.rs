use crate::output::{Cell, Csv, Sinks};
use crate::runfile::{ParityChoice, PerturbationSection, PotentialSection, RunFile, SweepKind};
use crate::CliError;
use num_complex::Complex64 as C64;
use qnm_lpt::born_tail::SideModel;
use qnm_lpt::exec::Execution;
use qnm_lpt::lpt::{perturb, LptOptions, LptProblem, PerturbationResult, SubtractMode};
use qnm_lpt::potentials::{PotentialSpec, TailFamily};
use qnm_lpt::riccati::{
    pt_eigenvalue, shoot_eigenvalue_with, step_eigenvalue, ComplexFrequency, LeftCondition, ShootConfig, SolverOptions,
};
use qnm_lpt::scenarios::{
    pt_problem, run_bump_sweep, run_mu_scaling, run_pt_demo, step_profile, PtConfig, PtDemo, StepBumpConfig, SweepResult,
};
use serde_json::{json, Value};

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub subtract: Option<bool>,
    pub seed_from_exact: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, rf: &mut RunFile) -> Result<(), CliError> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(CliError::Input(format!("--tol must be > 0, got {t}")));
            }
            rf.solver.tol = t;
        }
        if let Some(s) = self.subtract {
            rf.solver.subtract_asymptotics = Some(s);
        }
        if let Some(s) = self.seed_from_exact {
            rf.solver.seed_from_exact = s;
        }
        Ok(())
    }
}

fn cpx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn exec(rf: &RunFile) -> Execution {
    if rf.solver.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn subtract_mode(rf: &RunFile) -> SubtractMode {
    match rf.solver.subtract_asymptotics {
        None => SubtractMode::Auto,
        Some(true) => SubtractMode::Always,
        Some(false) => SubtractMode::Off,
    }
}

pub fn build_potential(p: &PotentialSection) -> Result<PotentialSpec, CliError> {
    Ok(match p {
        PotentialSection::Step { v0, b } => PotentialSpec::step(*v0, *b)?,
        PotentialSection::PoschlTeller { v0, b } => PotentialSpec::poschl_teller(*v0, *b)?,
        PotentialSection::Bump { x0, w, height } => PotentialSpec::bump(*x0, *w, *height)?,
        PotentialSection::Sum { terms } => {
            let mut it = terms.iter();
            let first = it.next().ok_or_else(|| CliError::Input("sum potential needs at least one term".into()))?;
            let mut acc = build_potential(first)?;
            for t in it {
                acc = PotentialSpec::sum(&acc, &build_potential(t)?)?;
            }
            acc
        }
    })
}

// ---------------------------------------------------------------- solve

pub fn cmd_solve(rf: &RunFile, sinks: &Sinks) -> Result<(), CliError> {
    let m = &rf.mode;
    let modes: Vec<ComplexFrequency> = match &rf.potential {
        PotentialSection::Step { v0, b } => {
            (m.root_index..m.root_index + m.count).map(|n| step_eigenvalue(*v0, *b, n)).collect::<Result<_, _>>()?
        }
        PotentialSection::PoschlTeller { v0, b } => {
            (m.j..m.j + m.count).map(|j| pt_eigenvalue(*v0, *b, j, m.branch)).collect::<Result<_, _>>()?
        }
        other => {
            let g = m.guess.ok_or_else(|| CliError::Input("mode.guess = [re, im] is required for this potential".into()))?;
            if m.count != 1 {
                return Err(CliError::Input("mode.count > 1 needs a step or poschl_teller potential".into()));
            }
            let v = build_potential(other)?;
            let left = match m.parity {
                ParityChoice::Even => LeftCondition::Even,
                ParityChoice::Odd => LeftCondition::Odd,
                ParityChoice::None => LeftCondition::Outgoing,
            };
            let mut cfg = ShootConfig::new(m.match_point, left);
            cfg.solver = SolverOptions::with_tol(rf.solver.tol);
            cfg.tol = cfg.tol.max(1e3 * rf.solver.tol);
            vec![shoot_eigenvalue_with(&v, C64::new(g[0], g[1]), &cfg)?]
        }
    };
    let mut csv = Csv::new(&["mode_index", "re_omega", "im_omega", "residual"]);
    let mut rows = Vec::new();
    for (k, w) in modes.iter().enumerate() {
        let idx = match &rf.potential {
            PotentialSection::Step { .. } | PotentialSection::PoschlTeller { .. } => w.mode_index as i64,
            _ => k as i64,
        };
        csv.row(&[Cell::I(idx), Cell::F(w.value.re), Cell::F(w.value.im), Cell::F(w.residual)]);
        rows.push(json!({"mode_index": idx, "omega": cpx(w.value), "residual": w.residual, "parity": format!("{:?}", w.parity)}));
    }
    sinks.emit(&csv, &json!({"command": "solve", "modes": rows}))
}

// -------------------------------------------------------------- perturb

struct Run {
    result: PerturbationResult,
    /// The same problem with the right end moved outward.
    moved: PerturbationResult,
    ends: (f64, f64),
}

fn step_run(rf: &RunFile, v0: f64, b: f64, order: usize) -> Result<Run, CliError> {
    let (v1, breaks) = match &rf.perturbation {
        Some(PerturbationSection::Bump { x0, w, height }) => {
            let (lo, hi) = (x0 - w / 2.0, x0 + w / 2.0);
            if !(lo >= 0.0 && hi <= rf.domain.a) {
                return Err(CliError::Input(format!("bump ({lo}, {hi}) must lie inside [0, {}]", rf.domain.a)));
            }
            (PotentialSpec::bump(*x0, *w, *height)?, vec![lo, hi])
        }
        Some(PerturbationSection::None {}) | None => (PotentialSpec::zero(), vec![]),
        Some(PerturbationSection::Width {}) => {
            return Err(CliError::Input("the width perturbation belongs to the poschl_teller potential".into()))
        }
    };
    let one = |a: f64| -> Result<PerturbationResult, CliError> {
        let cfg = StepBumpConfig { v0, b, a, root_index: rf.mode.root_index, ..StepBumpConfig::default() };
        let (_, _, profile) = step_profile(&cfg, breaks.clone())?;
        let mut options = LptOptions::default();
        options.norm.subtract = subtract_mode(rf);
        let p = LptProblem { profile, v1: v1.clone(), left: SideModel::Origin, right: SideModel::Free { at: a }, options };
        Ok(perturb(&p, order)?)
    };
    let a = rf.domain.a;
    if !(a > b) {
        return Err(CliError::Input(format!("domain.a = {a} must exceed the step half-width {b}")));
    }
    Ok(Run { result: one(a)?, moved: one(a + 0.25)?, ends: (a, a + 0.25) })
}

fn pt_config(rf: &RunFile, v0: f64, b: f64, l: f64) -> Result<PtConfig, CliError> {
    if b != 1.0 {
        return Err(CliError::Input("the width perturbation is implemented for b = 1".into()));
    }
    Ok(PtConfig {
        v0,
        j: rf.mode.j,
        l,
        k_max: rf.domain.k_max,
        tail_tol: rf.domain.tail_tol,
        branch: rf.mode.branch,
        theta_deg: rf.solver.theta_deg,
        subtract: subtract_mode(rf),
    })
}

fn pt_run(rf: &RunFile, v0: f64, b: f64, order: usize) -> Result<Run, CliError> {
    let width = match &rf.perturbation {
        Some(PerturbationSection::Width {}) => true,
        Some(PerturbationSection::None {}) | None => false,
        Some(PerturbationSection::Bump { .. }) => {
            return Err(CliError::Input("a bump on the poschl_teller potential breaks the parity the solver uses".into()))
        }
    };
    let one = |l: f64| -> Result<PerturbationResult, CliError> {
        let mut p = pt_problem(&pt_config(rf, v0, b, l)?)?;
        if !width {
            p.v1 = PotentialSpec::zero();
            if let SideModel::Tail { family, .. } = &mut p.right {
                *family = TailFamily::fixed(family.base.clone());
            }
        }
        Ok(perturb(&p, order)?)
    };
    let l = rf.domain.l;
    Ok(Run { result: one(l)?, moved: one(l + 1.0)?, ends: (l, l + 1.0) })
}

pub fn cmd_perturb(rf: &RunFile, order: usize, sinks: &Sinks) -> Result<(), CliError> {
    if order == 0 {
        return Err(CliError::Input("--order must be at least 1".into()));
    }
    let run = match &rf.potential {
        PotentialSection::Step { v0, b } => step_run(rf, *v0, *b, order)?,
        PotentialSection::PoschlTeller { v0, b } => pt_run(rf, *v0, *b, order)?,
        _ => return Err(CliError::Input("perturb supports the step and poschl_teller potentials".into())),
    };
    let r = &run.result;
    let mut csv = Csv::new(&["order", "re_omega_n", "im_omega_n", "digits_lost", "L_independence_residual"]);
    let mut orders = Vec::new();
    for (o, m) in r.orders.iter().zip(&run.moved.orders) {
        let resid = if o.omega == C64::new(0.0, 0.0) { (m.omega).norm() } else { (o.omega - m.omega).norm() / o.omega.norm() };
        let lost = o.matrix_element.digits_lost.max(r.norm.digits_lost);
        csv.row(&[Cell::I(o.n as i64), Cell::F(o.omega.re), Cell::F(o.omega.im), Cell::F(lost), Cell::F(resid)]);
        orders.push(json!({
            "order": o.n,
            "omega": cpx(o.omega),
            "matrix_element": cpx(o.matrix_element.value),
            "me_digits_lost": o.matrix_element.digits_lost,
            "boundary_mismatch": o.boundary_mismatch,
            "l_independence_residual": resid,
        }));
    }
    let d = &r.diagnostics;
    let doc = json!({
        "command": "perturb",
        "omega0": cpx(r.omega0),
        "norm": cpx(r.norm.value),
        "ends": [run.ends.0, run.ends.1],
        "diagnostics": {
            "norm_digits_lost": d.norm_digits_lost,
            "raw_norm_digits_lost": d.raw_norm_digits_lost,
            "subtracted": d.subtracted,
            "riccati_residual": d.riccati_residual,
            "real_nodes": d.real_nodes,
        },
        "orders": orders,
    });
    sinks.emit(&csv, &doc)
}

// ---------------------------------------------------------------- sweep

fn sweep_config(rf: &RunFile) -> Result<(StepBumpConfig, Option<f64>), CliError> {
    let (v0, b) = match rf.potential {
        PotentialSection::Step { v0, b } => (v0, b),
        _ => return Err(CliError::Input("sweeps run on the step potential".into())),
    };
    let (w, x0) = match &rf.perturbation {
        Some(PerturbationSection::Bump { x0, w, height }) => {
            if *height != 1.0 {
                return Err(CliError::Input("sweeps use a unit bump; set the strength through sweep.mu".into()));
            }
            (*w, Some(*x0))
        }
        None => (0.1, None),
        Some(_) => return Err(CliError::Input("sweeps need a bump perturbation".into())),
    };
    let cfg = StepBumpConfig {
        v0,
        b,
        a: rf.domain.a,
        w,
        root_index: rf.mode.root_index,
        solver_tol: rf.solver.tol,
        seed_from_exact: rf.solver.seed_from_exact,
        exec: exec(rf),
    };
    Ok((cfg, x0))
}

pub fn cmd_sweep(rf: &RunFile, kind: Option<SweepKind>, sinks: &Sinks) -> Result<(), CliError> {
    let sec = rf.sweep.as_ref();
    let kind = kind.or(sec.map(|s| s.kind)).ok_or_else(|| CliError::Input("no [sweep] section and no --kind".into()))?;
    let (cfg, bump_x0) = sweep_config(rf)?;
    let x0_grid = sec.and_then(|s| s.x0.as_ref());
    let mu_grid = sec.and_then(|s| s.mu.as_ref());
    let res: SweepResult = match kind {
        SweepKind::BumpX0 => {
            let xs = x0_grid.ok_or_else(|| CliError::Input("sweep.x0 grid missing".into()))?.points()?;
            let mu = mu_grid.ok_or_else(|| CliError::Input("sweep.mu missing".into()))?.single("sweep.mu")?;
            run_bump_sweep(&cfg, mu, &xs)?
        }
        SweepKind::MuScaling => {
            let x0 = match x0_grid {
                Some(g) => g.single("sweep.x0")?,
                None => bump_x0.ok_or_else(|| CliError::Input("sweep.x0 missing".into()))?,
            };
            let mus = mu_grid.ok_or_else(|| CliError::Input("sweep.mu grid missing".into()))?.points()?;
            run_mu_scaling(&cfg, x0, &mus)?
        }
    };
    let mut csv = Csv::new(&[
        "x0", "mu", "re_exact", "im_exact", "re_first", "im_first", "re_second", "im_second", "err0", "err1", "err2",
        "residual",
    ]);
    for p in &res.points {
        csv.row(&[
            Cell::F(p.x0),
            Cell::F(p.mu),
            Cell::F(p.omega_exact.re),
            Cell::F(p.omega_exact.im),
            Cell::F(p.omega_first.re),
            Cell::F(p.omega_first.im),
            Cell::F(p.omega_second.re),
            Cell::F(p.omega_second.im),
            Cell::F(p.err0),
            Cell::F(p.err1),
            Cell::F(p.err2),
            Cell::F(p.residual),
        ]);
    }
    if let Some(s) = res.slopes {
        csv.comment(&format!("slope_zeroth={}", crate::output::float(s.zeroth)));
        csv.comment(&format!("slope_first={}", crate::output::float(s.first)));
        csv.comment(&format!("slope_second={}", crate::output::float(s.second)));
        csv.comment(&format!("degenerate={}", s.degenerate));
    }
    for (x, why) in &res.missing {
        csv.comment(&format!("missing {}: {why}", crate::output::float(*x)));
    }
    let points: Vec<Value> = res
        .points
        .iter()
        .map(|p| {
            json!({
                "x0": p.x0, "mu": p.mu,
                "omega1": cpx(p.omega1), "omega2": cpx(p.omega2), "omega2_recursive": cpx(p.omega2_recursive),
                "residual": p.residual,
            })
        })
        .collect();
    let doc = json!({
        "command": "sweep",
        "kind": match kind { SweepKind::BumpX0 => "bump-x0", SweepKind::MuScaling => "mu-scaling" },
        "omega0": cpx(res.omega0),
        "slopes": res.slopes.map(|s| json!({"zeroth": s.zeroth, "first": s.first, "second": s.second, "degenerate": s.degenerate})),
        "missing": res.missing.iter().map(|(x, w)| json!({"at": x, "reason": w})).collect::<Vec<_>>(),
        "points": points,
    });
    sinks.emit(&csv, &doc)
}

// ----------------------------------------------------------------- demo

pub fn cmd_demo(rf: &RunFile, sinks: &Sinks) -> Result<(), CliError> {
    let (v0, b) = match rf.potential {
        PotentialSection::PoschlTeller { v0, b } => (v0, b),
        _ => return Err(CliError::Input("the demo runs on the poschl_teller potential".into())),
    };
    let d: PtDemo = run_pt_demo(&pt_config(rf, v0, b, rf.domain.l)?)?;
    let mut csv = Csv::new(&["quantity", "re", "im", "rel_error"]);
    let rows = [
        ("omega1_exact", d.omega1_exact, d.omega1_exact),
        ("omega1_surface", d.omega1_surface, d.omega1_exact),
        ("omega1_contour", d.omega1_contour, d.omega1_exact),
        ("norm", d.norm, d.norm_exact),
        ("me_surface", d.me_surface, d.me_exact),
        ("me_contour", d.me_contour, d.me_exact),
        ("me_exact", d.me_exact, d.me_exact),
    ];
    for (name, z, r) in rows {
        csv.row(&[Cell::S(name.into()), Cell::F(z.re), Cell::F(z.im), Cell::F(PtDemo::rel(z, r))]);
    }
    csv.comment(&format!("digits_lost_raw={}", crate::output::float(d.digits_lost_raw)));
    csv.comment(&format!("digits_lost_subtracted={}", crate::output::float(d.digits_lost_subtracted)));
    let doc = json!({
        "command": "demo",
        "v0": v0, "j": d.config.j, "l": d.config.l, "k_max": d.config.k_max,
        "omega0": cpx(d.omega0),
        "omega1": {"exact": cpx(d.omega1_exact), "surface": cpx(d.omega1_surface), "contour": cpx(d.omega1_contour)},
        "norm": {"computed": cpx(d.norm), "exact": cpx(d.norm_exact)},
        "matrix_element": {"surface": cpx(d.me_surface), "contour": cpx(d.me_contour), "exact": cpx(d.me_exact)},
        "digits_lost": {"raw": d.digits_lost_raw, "subtracted": d.digits_lost_subtracted, "matrix_element": d.me_digits_lost},
        "real_nodes": d.real_nodes,
        "riccati_residual": d.riccati_residual,
    });
    sinks.emit(&csv, &doc)
}
