//! Outgoing integration of `φ'' = (V − ω²)φ`, eigenvalues by shooting, and
//! stored solution profiles.
//!
//! The equation is integrated as the Riccati pair `(f, ln φ)` where `f = φ′/φ`
//! is moderate and as the linear pair `(φ, φ′)` near zeros of φ, switching
//! with hysteresis.

use crate::born_tail::{series_coefficients, SeriesSolution, Side};
use crate::ode::{OdeOptions, Stepper};
use crate::potentials::{PotentialSpec, TailDescriptor};
use crate::quad::{panel_rule, ChebRule};
use crate::roots::{newton, RootOptions};
use crate::{c, LptError, Result, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexFrequency {
    pub value: C64,
    pub mode_index: u32,
    pub parity: Parity,
    /// Sign of Re ω.
    pub branch: i8,
    /// Mismatch at the root, |f₊ − f₋| (or the parity analogue).
    pub residual: f64,
}

impl ComplexFrequency {
    fn new(value: C64, mode_index: u32, parity: Parity, residual: f64) -> Self {
        let branch = if value.re < 0.0 { -1 } else { 1 };
        ComplexFrequency { value, mode_index, parity, branch, residual }
    }

    pub fn gamma(&self) -> f64 {
        -self.value.im
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub ode: OdeOptions,
    /// |f| above which the linear representation takes over.
    pub switch_threshold: f64,
    /// Return to Riccati form once |f| < threshold / hysteresis.
    pub hysteresis: f64,
    /// Panel refinement: split when the trailing Chebyshev coefficients
    /// exceed this fraction of the largest.
    pub refine_tol: f64,
    pub max_panel: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            ode: OdeOptions::default(),
            switch_threshold: 1e3,
            hysteresis: 10.0,
            refine_tol: 1e-9,
            max_panel: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        let mut o = SolverOptions::default();
        o.ode.rtol = tol;
        o.ode.atol = tol;
        o
    }

    /// Tolerances used for stored profiles feeding the perturbation engine.
    pub fn profile() -> Self {
        SolverOptions { refine_tol: 1e-12, ..SolverOptions::with_tol(1e-12) }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Rep {
    Riccati,
    Linear,
}

/// Integrate from `xs[0]` through the monotone stops `xs`, returning
/// `(φ, φ′)` at each stop. Potential breakpoints between stops are honoured.
pub fn propagate(
    potential: &PotentialSpec,
    omega: C64,
    xs: &[f64],
    phi0: C64,
    dphi0: C64,
    opts: &SolverOptions,
) -> Result<Vec<(C64, C64)>> {
    let w2 = omega * omega;
    let bps = potential.breakpoints();
    let thr = opts.switch_threshold;
    let back = thr / opts.hysteresis;
    let mut out = Vec::with_capacity(xs.len());
    out.push((phi0, dphi0));
    let (mut rep, mut y) = if phi0.norm() == 0.0 || (dphi0 / phi0).norm() > thr {
        (Rep::Linear, [phi0, dphi0])
    } else {
        (Rep::Riccati, [dphi0 / phi0, phi0.ln()])
    };
    let mut st = Stepper::new(opts.ode);
    let mut cuts = Vec::new();
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        cuts.clear();
        cuts.push(a);
        let (lo, hi) = (a.min(b), a.max(b));
        let mut inner: Vec<f64> = bps.iter().copied().filter(|&p| p > lo && p < hi).collect();
        if b < a {
            inner.reverse();
        }
        cuts.extend(inner);
        cuts.push(b);
        for cw in cuts.windows(2) {
            let (s, t) = (cw[0], cw[1]);
            if s == t {
                continue;
            }
            let seg = potential.segment_for(s, t);
            let mut x = s;
            while x != t {
                match rep {
                    Rep::Riccati => {
                        let rhs = |x: f64, y: &[C64; 2]| [seg.eval(x) - w2 - y[0] * y[0], y[0]];
                        st.advance(&rhs, &mut x, &mut y, t)?;
                        if y[0].norm() > thr {
                            let phi = y[1].exp();
                            y = [phi, y[0] * phi];
                            rep = Rep::Linear;
                            st.reset_controller();
                        }
                    }
                    Rep::Linear => {
                        let rhs = |x: f64, y: &[C64; 2]| [y[1], (seg.eval(x) - w2) * y[0]];
                        st.advance(&rhs, &mut x, &mut y, t)?;
                        if y[0].norm() > 0.0 && (y[1] / y[0]).norm() < back {
                            y = [y[1] / y[0], y[0].ln()];
                            rep = Rep::Riccati;
                            st.reset_controller();
                        }
                    }
                }
            }
        }
        out.push(match rep {
            Rep::Riccati => {
                let phi = y[1].exp();
                (phi, y[0] * phi)
            }
            Rep::Linear => (y[0], y[1]),
        });
    }
    Ok(out)
}

/// Maximum number of tail-series terms carried for continuations.
const TAIL_TERMS_CAP: usize = 200;

fn tail_series(tail: Option<&TailDescriptor>, omega: C64, side: Side, y_min: f64) -> Result<SeriesSolution> {
    match tail {
        None => Ok(SeriesSolution { alpha: 1.0, d: vec![c(1.0, 0.0)], omega, side }),
        Some(t) => {
            let mut s = series_coefficients(&t.truncated(TAIL_TERMS_CAP), omega, TAIL_TERMS_CAP)?;
            let e = (-t.alpha * y_min).exp();
            if e >= 1.0 {
                return Err(LptError::TailRegionTooClose { x: side.sign() * y_min, v: 0.0, gap: 0.0 });
            }
            let k = s.auto_terms(y_min, 1e-18);
            if k >= s.d.len() {
                return Err(LptError::TailRegionTooClose { x: side.sign() * y_min, v: 0.0, gap: 0.0 });
            }
            s.d.truncate(k);
            s.side = side;
            Ok(s)
        }
    }
}

/// Exact solution beyond the support: `C_out·(outgoing) + C_in·(incoming)`.
#[derive(Clone, Debug)]
pub struct TailPiece {
    pub side: Side,
    pub junction: f64,
    pub outgoing: SeriesSolution,
    pub incoming: SeriesSolution,
    pub c_out: C64,
    pub c_in: C64,
}

impl TailPiece {
    fn matched(
        side: Side,
        junction: f64,
        tail: Option<&TailDescriptor>,
        omega: C64,
        phi: C64,
        dphi: C64,
        y_min: f64,
    ) -> Result<Self> {
        let outgoing = tail_series(tail, omega, side, y_min)?;
        let incoming = tail_series(tail, -omega, side, y_min)?;
        let (u, du) = (outgoing.phi(junction), outgoing.dphi(junction));
        let (v, dv) = (incoming.phi(junction), incoming.dphi(junction));
        let det = u * dv - du * v;
        let c_out = (phi * dv - dphi * v) / det;
        let c_in = (u * dphi - du * phi) / det;
        Ok(TailPiece { side, junction, outgoing, incoming, c_out, c_in })
    }

    pub fn phi(&self, x: f64) -> C64 {
        self.c_out * self.outgoing.phi(x) + self.c_in * self.incoming.phi(x)
    }

    pub fn dphi(&self, x: f64) -> C64 {
        self.c_out * self.outgoing.dphi(x) + self.c_in * self.incoming.dphi(x)
    }

    /// Outgoing amplitude A with φ ≈ A e^{±iωx} far out.
    pub fn amplitude(&self) -> C64 {
        self.c_out
    }

    /// Relative size of the incoming admixture at the junction; zero for an
    /// exact QNM.
    pub fn incoming_fraction(&self) -> f64 {
        (self.c_in * self.incoming.phi(self.junction)).norm() / (self.c_out * self.outgoing.phi(self.junction)).norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// φ = 1, φ′ = 0.
    Even(f64),
    /// φ = 0, φ′ = 1.
    Odd(f64),
    Value { x: f64, phi: C64, dphi: C64 },
}

impl Anchor {
    pub fn x(&self) -> f64 {
        match *self {
            Anchor::Even(x) | Anchor::Odd(x) => x,
            Anchor::Value { x, .. } => x,
        }
    }

    fn data(&self) -> (C64, C64) {
        match *self {
            Anchor::Even(_) => (c(1.0, 0.0), c(0.0, 0.0)),
            Anchor::Odd(_) => (c(0.0, 0.0), c(1.0, 0.0)),
            Anchor::Value { phi, dphi, .. } => (phi, dphi),
        }
    }
}

/// What sits at the left end of a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeftEnd {
    /// Symmetry point with imposed parity (half-line formulation).
    Origin(Parity),
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelKind {
    Ode,
    Tail(Side),
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub kind: PanelKind,
    pub phi: Vec<C64>,
    pub dphi: Vec<C64>,
}

impl Panel {
    pub fn half(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn node(&self, rule: &ChebRule, i: usize) -> f64 {
        if i == 0 {
            return self.a;
        }
        if i == rule.n {
            return self.b;
        }
        0.5 * (self.a + self.b) + self.half() * rule.nodes[i]
    }

    pub fn nodes(&self, rule: &ChebRule) -> Vec<f64> {
        (0..=rule.n).map(|i| self.node(rule, i)).collect()
    }
}

/// Solution sampled on Chebyshev panels over `[L₋, L₊]`.
#[derive(Clone, Debug)]
pub struct LogDerivProfile {
    pub omega: C64,
    pub panels: Vec<Panel>,
    pub left_end: LeftEnd,
    pub tails: [Option<TailPiece>; 2],
    pub anchor: (f64, C64),
    potential: PotentialSpec,
    setup: Option<Setup>,
}

/// How a profile was built, kept so it can be refined later.
#[derive(Clone, Debug)]
struct Setup {
    anchor: Anchor,
    opts: SolverOptions,
    left_j: Option<f64>,
    right_j: Option<f64>,
}

/// Everything needed to build a profile.
#[derive(Clone, Debug)]
pub struct ProfileRequest<'a> {
    pub potential: &'a PotentialSpec,
    pub omega: C64,
    pub lo: f64,
    pub hi: f64,
    pub anchor: Anchor,
    /// Extra mandatory panel edges (e.g. perturbation breakpoints).
    pub breaks: Vec<f64>,
    pub opts: SolverOptions,
}

fn local_wavenumber(potential: &PotentialSpec, omega: C64, a: f64, b: f64) -> f64 {
    let seg = potential.segment_for(a, b);
    let w2 = omega * omega;
    (0..=4)
        .map(|i| {
            let x = a + (b - a) * i as f64 / 4.0;
            (seg.eval(x) - w2).sqrt().norm()
        })
        .fold(1.0, f64::max)
}

pub fn build_profile(req: &ProfileRequest) -> Result<LogDerivProfile> {
    let (lo, hi) = (req.lo, req.hi);
    let ax = req.anchor.x();
    if !(lo < hi) || ax < lo || ax > hi {
        return Err(LptError::InvalidArgument(format!("profile needs lo < hi with the anchor inside ({lo}, {hi}, {ax})")));
    }
    let supp = req.potential.support();
    let left_end = match req.anchor {
        Anchor::Even(x) if x == lo => LeftEnd::Origin(Parity::Even),
        Anchor::Odd(x) if x == lo => LeftEnd::Origin(Parity::Odd),
        _ => LeftEnd::Open,
    };
    let right_j = if hi > supp.1 { Some(supp.1.max(lo)) } else { None };
    let left_j = if lo < supp.0 && left_end == LeftEnd::Open { Some(supp.0.min(hi)) } else { None };
    let mut cuts = vec![lo, hi, ax];
    cuts.extend(right_j);
    cuts.extend(left_j);
    cuts.extend(req.potential.breakpoints());
    cuts.extend(req.breaks.iter().copied());
    cuts.retain(|&x| x >= lo && x <= hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    let mut edges = Vec::new();
    for w in cuts.windows(2) {
        let k = local_wavenumber(req.potential, req.omega, w[0], w[1]) + req.omega.im.abs();
        let h = req.opts.max_panel.min(5.0 / k);
        let m = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        for i in 0..m {
            edges.push(w[0] + (w[1] - w[0]) * i as f64 / m as f64);
        }
    }
    edges.push(hi);
    refine(req, edges, left_end, left_j, right_j)
}

fn refine(
    req: &ProfileRequest,
    mut edges: Vec<f64>,
    left_end: LeftEnd,
    left_j: Option<f64>,
    right_j: Option<f64>,
) -> Result<LogDerivProfile> {
    let rule = panel_rule();
    for _pass in 0..10 {
        let mut prof = fill_profile(req, &edges, left_end, left_j, right_j)?;
        let mut refined = Vec::with_capacity(edges.len());
        let mut split = false;
        for p in &prof.panels {
            refined.push(p.a);
            let bad = rule.tail_ratio(&p.phi) > req.opts.refine_tol || rule.tail_ratio(&p.dphi) > req.opts.refine_tol;
            if bad && (p.b - p.a) > 1e-6 {
                refined.push(0.5 * (p.a + p.b));
                split = true;
            }
        }
        refined.push(req.hi);
        if !split {
            prof.setup = Some(Setup { anchor: req.anchor, opts: req.opts, left_j, right_j });
            return Ok(prof);
        }
        edges = refined;
    }
    Err(LptError::IntegrationFailure { x: req.lo, reason: "panel refinement did not settle".into() })
}

fn fill_profile(
    req: &ProfileRequest,
    edges: &[f64],
    left_end: LeftEnd,
    left_j: Option<f64>,
    right_j: Option<f64>,
) -> Result<LogDerivProfile> {
    let rule = panel_rule();
    let pot = req.potential;
    let w = req.omega;
    let ax = req.anchor.x();
    let (aphi, adphi) = req.anchor.data();
    let ode_lo = left_j.unwrap_or(req.lo);
    let ode_hi = right_j.unwrap_or(req.hi);

    let mut panels: Vec<Panel> = edges
        .windows(2)
        .map(|e| {
            let kind = if right_j.is_some_and(|j| e[0] >= j) {
                PanelKind::Tail(Side::Right)
            } else if left_j.is_some_and(|j| e[1] <= j) {
                PanelKind::Tail(Side::Left)
            } else {
                PanelKind::Ode
            };
            Panel { a: e[0], b: e[1], kind, phi: vec![C64::default(); rule.n + 1], dphi: vec![C64::default(); rule.n + 1] }
        })
        .collect();

    let mut tails: [Option<TailPiece>; 2] = [None, None];
    // the anchor may sit in a tail region: match the tail there first
    let mut ode_start: Option<(f64, C64, C64)> = None;
    if let Some(j) = right_j {
        if ax > j {
            let t = TailPiece::matched(Side::Right, ax, pot.tail(1), w, aphi, adphi, j)?;
            ode_start = Some((j, t.phi(j), t.dphi(j)));
            tails[1] = Some(t);
        }
    }
    if let Some(j) = left_j {
        if ax < j {
            let t = TailPiece::matched(Side::Left, ax, pot.tail(0), w, aphi, adphi, -j)?;
            ode_start = Some((j, t.phi(j), t.dphi(j)));
            tails[0] = Some(t);
        }
    }
    let (sx, sphi, sdphi) = ode_start.unwrap_or((ax, aphi, adphi));

    // ODE sweeps outward from the start point
    let mut right_nodes: Vec<(usize, usize, f64)> = Vec::new();
    let mut left_nodes: Vec<(usize, usize, f64)> = Vec::new();
    for (pi, p) in panels.iter().enumerate() {
        if p.kind != PanelKind::Ode {
            continue;
        }
        for i in 0..=rule.n {
            let x = p.node(rule, i);
            if x >= sx {
                right_nodes.push((pi, i, x));
            }
            if x <= sx {
                left_nodes.push((pi, i, x));
            }
        }
    }
    right_nodes.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    left_nodes.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    let mut junction_vals: [Option<(C64, C64)>; 2] = [None, None];
    for (nodes, side) in [(&right_nodes, 1usize), (&left_nodes, 0usize)] {
        let mut xs = vec![sx];
        xs.extend(nodes.iter().map(|n| n.2));
        let target = if side == 1 { ode_hi } else { ode_lo };
        if xs.last().copied() != Some(target) && (target - sx) * (if side == 1 { 1.0 } else { -1.0 }) > 0.0 {
            xs.push(target);
        }
        let vals = propagate(pot, w, &xs, sphi, sdphi, &req.opts)?;
        for (k, n) in nodes.iter().enumerate() {
            let (phi, dphi) = vals[k + 1];
            panels[n.0].phi[n.1] = phi;
            panels[n.0].dphi[n.1] = dphi;
        }
        junction_vals[side] = Some(*vals.last().unwrap());
        if xs.len() == 1 {
            junction_vals[side] = Some((sphi, sdphi));
        }
    }
    if let (Some(j), None) = (right_j, &tails[1]) {
        let (phi, dphi) = junction_vals[1].unwrap();
        tails[1] = Some(TailPiece::matched(Side::Right, j, pot.tail(1), w, phi, dphi, j)?);
    }
    if let (Some(j), None) = (left_j, &tails[0]) {
        let (phi, dphi) = junction_vals[0].unwrap();
        tails[0] = Some(TailPiece::matched(Side::Left, j, pot.tail(0), w, phi, dphi, -j)?);
    }
    for p in panels.iter_mut() {
        if let PanelKind::Tail(side) = p.kind {
            let t = tails[if side == Side::Left { 0 } else { 1 }].as_ref().unwrap();
            for i in 0..=rule.n {
                let x = p.node(rule, i);
                p.phi[i] = t.phi(x);
                p.dphi[i] = t.dphi(x);
            }
        }
    }
    Ok(LogDerivProfile { omega: w, panels, left_end, tails, anchor: (ax, aphi), potential: pot.clone(), setup: None })
}

impl LogDerivProfile {
    /// Rebuild with the given panels bisected (indices into `panels`).
    pub fn split_panels(&self, which: &[usize]) -> Result<LogDerivProfile> {
        let setup = self.setup.as_ref().ok_or_else(|| {
            LptError::UnsupportedConfiguration("profile was not built by build_profile".into())
        })?;
        let mut edges = Vec::with_capacity(self.panels.len() + which.len() + 1);
        for (k, p) in self.panels.iter().enumerate() {
            edges.push(p.a);
            if which.contains(&k) {
                edges.push(0.5 * (p.a + p.b));
            }
        }
        edges.push(self.hi());
        let req = ProfileRequest {
            potential: &self.potential,
            omega: self.omega,
            lo: self.lo(),
            hi: self.hi(),
            anchor: setup.anchor,
            breaks: vec![],
            opts: setup.opts,
        };
        refine(&req, edges, self.left_end, setup.left_j, setup.right_j)
    }

    pub fn rule(&self) -> &'static ChebRule {
        panel_rule()
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn lo(&self) -> f64 {
        self.panels[0].a
    }

    pub fn hi(&self) -> f64 {
        self.panels.last().unwrap().b
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.rule().n + 1
    }

    /// Total number of node slots (panel endpoints counted once per panel).
    pub fn node_count(&self) -> usize {
        self.panels.len() * self.nodes_per_panel()
    }

    /// Abscissa of every node slot, panel by panel.
    pub fn node_xs(&self) -> Vec<f64> {
        let r = self.rule();
        self.panels.iter().flat_map(|p| p.nodes(r)).collect()
    }

    /// Strictly increasing grid (shared panel edges once).
    pub fn grid(&self) -> Vec<f64> {
        let mut g = self.node_xs();
        g.dedup();
        g
    }

    pub fn f_values(&self) -> Vec<C64> {
        let mut v: Vec<C64> = Vec::new();
        for (k, p) in self.panels.iter().enumerate() {
            let skip = if k == 0 { 0 } else { 1 };
            v.extend(p.phi.iter().zip(&p.dphi).skip(skip).map(|(a, b)| b / a));
        }
        v
    }

    pub fn phi_sq(&self) -> Vec<C64> {
        let mut v: Vec<C64> = Vec::new();
        for (k, p) in self.panels.iter().enumerate() {
            let skip = if k == 0 { 0 } else { 1 };
            v.extend(p.phi.iter().skip(skip).map(|a| a * a));
        }
        v
    }

    /// φ² at every node slot.
    pub fn phi_sq_nodes(&self) -> Vec<C64> {
        self.panels.iter().flat_map(|p| p.phi.iter().map(|a| a * a)).collect()
    }

    /// f at every node slot.
    pub fn f_nodes(&self) -> Vec<C64> {
        self.panels.iter().flat_map(|p| p.phi.iter().zip(&p.dphi).map(|(a, b)| b / a)).collect()
    }

    /// Sample an evaluator on every node slot, using the one-sided value from
    /// inside each panel.
    pub fn sample(&self, spec: &PotentialSpec) -> Vec<C64> {
        let r = self.rule();
        self.panels
            .iter()
            .flat_map(|p| {
                let seg = spec.segment_for(p.a, p.b).clone();
                p.nodes(r).into_iter().map(move |x| seg.eval(x))
            })
            .collect()
    }

    fn panel_index(&self, x: f64) -> usize {
        let i = self.panels.partition_point(|p| p.a <= x);
        i.saturating_sub(1).min(self.panels.len() - 1)
    }

    fn tail_for(&self, side: Side) -> Option<&TailPiece> {
        self.tails[if side == Side::Left { 0 } else { 1 }].as_ref()
    }

    pub fn phi_at(&self, x: f64) -> C64 {
        let p = &self.panels[self.panel_index(x)];
        if let PanelKind::Tail(s) = p.kind {
            return self.tail_for(s).unwrap().phi(x);
        }
        let t = ((x - p.a) / p.half() - 1.0).clamp(-1.0, 1.0);
        self.rule().interpolate(&p.phi, t)
    }

    pub fn dphi_at(&self, x: f64) -> C64 {
        let p = &self.panels[self.panel_index(x)];
        if let PanelKind::Tail(s) = p.kind {
            return self.tail_for(s).unwrap().dphi(x);
        }
        let t = ((x - p.a) / p.half() - 1.0).clamp(-1.0, 1.0);
        self.rule().interpolate(&p.dphi, t)
    }

    pub fn f_at(&self, x: f64) -> C64 {
        self.dphi_at(x) / self.phi_at(x)
    }

    pub fn phi_sq_at(&self, x: f64) -> C64 {
        let p = self.phi_at(x);
        p * p
    }

    /// Outgoing amplitude on one side (φ ≈ A e^{±iωx}), if the profile
    /// reaches a tail region there.
    pub fn amplitude(&self, side: Side) -> Option<C64> {
        self.tail_for(side).map(|t| t.amplitude())
    }

    pub fn tail(&self, side: Side) -> Option<&TailPiece> {
        self.tail_for(side)
    }

    /// ∫ samples dx over the whole profile, with Σ|·| as a scale.
    pub fn integrate(&self, samples: &[C64]) -> Result<(C64, f64)> {
        self.check_len(samples)?;
        let r = self.rule();
        let m = r.n + 1;
        let mut s = c(0.0, 0.0);
        let mut a = 0.0;
        for (k, p) in self.panels.iter().enumerate() {
            for i in 0..m {
                let v = samples[k * m + i];
                s += v * (r.weights[i] * p.half());
                a += v.norm() * r.weights[i] * p.half();
            }
        }
        Ok((s, a))
    }

    /// Running integral from `lo`, starting at `start`, at every node slot.
    pub fn cumulative(&self, samples: &[C64], start: C64) -> Result<Vec<C64>> {
        self.check_len(samples)?;
        let r = self.rule();
        let m = r.n + 1;
        let mut out = vec![c(0.0, 0.0); samples.len()];
        let mut base = start;
        for (k, p) in self.panels.iter().enumerate() {
            for i in 0..m {
                let mut s = c(0.0, 0.0);
                for j in 0..m {
                    s += samples[k * m + j] * r.cum[i][j];
                }
                out[k * m + i] = base + s * p.half();
            }
            base = out[k * m + m - 1];
        }
        Ok(out)
    }

    fn check_len(&self, samples: &[C64]) -> Result<()> {
        if samples.len() != self.node_count() {
            return Err(LptError::GridMismatch { expected: self.node_count(), got: samples.len() });
        }
        Ok(())
    }

    /// max |f′ + f² − V + ω²| / max(1, |f|², |V − ω²|) over the nodes, with
    /// f′ from the quotient rule on the spectral derivatives of φ and φ′.
    /// Nodes where |f| > 10³ (next to a zero of φ) are checked in the linear
    /// form, relative to the panel's scale of φ″.
    pub fn riccati_residual(&self) -> f64 {
        let r = self.rule();
        let w2 = self.omega * self.omega;
        let mut worst: f64 = 0.0;
        for p in &self.panels {
            let seg = self.potential.segment_for(p.a, p.b);
            let deriv = |v: &[C64], i: usize| -> C64 {
                let mut d = c(0.0, 0.0);
                for j in 0..=r.n {
                    d += v[j] * r.diff[i][j];
                }
                d / p.half()
            };
            let scale = (0..=r.n)
                .map(|i| ((seg.eval(p.node(r, i)) - w2) * p.phi[i]).norm())
                .fold(0.0, f64::max)
                .max(1e-300);
            for i in 0..=r.n {
                let (phi, dphi) = (p.phi[i], p.dphi[i]);
                let (d1, d2) = (deriv(&p.phi, i), deriv(&p.dphi, i));
                let u = seg.eval(p.node(r, i)) - w2;
                let f = dphi / phi;
                let res = if f.is_finite() && f.norm() <= 1e3 {
                    ((d2 - u * phi) / phi - f / phi * (d1 - dphi)) / 1f64.max(f.norm_sqr()).max(u.norm())
                } else {
                    (d2 - u * phi) / scale
                };
                worst = worst.max(res.norm());
            }
        }
        worst
    }
}

/// Real zeros of φ on the profile (endpoints excluded, an imposed node at a
/// symmetry origin included).
pub fn count_real_nodes(profile: &LogDerivProfile) -> usize {
    real_nodes(profile).len()
}

pub fn real_nodes(profile: &LogDerivProfile) -> Vec<f64> {
    let r = profile.rule();
    let (lo, hi) = (profile.lo(), profile.hi());
    let mut found: Vec<f64> = Vec::new();
    if profile.left_end == LeftEnd::Origin(Parity::Odd) {
        found.push(lo);
    }
    let scale = profile.panels.iter().flat_map(|p| p.phi.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    for p in &profile.panels {
        let local = p.phi.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        for i in 0..=r.n {
            let x = p.node(r, i);
            let (phi, dphi) = (p.phi[i], p.dphi[i]);
            if dphi.norm() == 0.0 {
                continue;
            }
            let mut z = x - (phi / dphi).re;
            if (phi / dphi).norm() > 2.0 * (p.b - p.a) {
                continue;
            }
            // a few Newton steps restricted to the real axis
            let mut ok = false;
            for _ in 0..6 {
                if !(z > p.a - 1e-12 && z < p.b + 1e-12) {
                    break;
                }
                let (f0, f1) = (profile.phi_at(z), profile.dphi_at(z));
                let step = f0 / f1;
                z -= step.re;
                if step.norm() < 1e-10 * (p.b - p.a) {
                    ok = step.im.abs() < 1e-9 * (p.b - p.a) && f0.norm() < 1e-8 * local.max(1e-8 * scale);
                    break;
                }
            }
            if ok && z > lo + 1e-9 && z < hi - 1e-9 && !found.iter().any(|&q| (q - z).abs() < 1e-6) {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    found
}

/// Left condition for shooting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeftCondition {
    /// Outgoing to the left, integrated in from the support edge.
    Outgoing,
    /// φ′ = 0 at the match point.
    Even,
    /// φ = 0 at the match point.
    Odd,
}

#[derive(Clone, Copy, Debug)]
pub struct ShootConfig {
    pub match_point: f64,
    pub left: LeftCondition,
    pub tol: f64,
    pub solver: SolverOptions,
    pub max_iter: usize,
}

impl ShootConfig {
    pub fn new(match_point: f64, left: LeftCondition) -> Self {
        ShootConfig { match_point, left, tol: 1e-10, solver: SolverOptions::with_tol(1e-12), max_iter: 60 }
    }
}

/// Outgoing solution on `side` carried from the support edge to `to`,
/// unit amplitude at the edge convention of the tail series.
pub fn outgoing_at(potential: &PotentialSpec, omega: C64, side: Side, to: f64, opts: &SolverOptions) -> Result<(C64, C64)> {
    let supp = potential.support();
    let edge = if side == Side::Right { supp.1 } else { supp.0 };
    let ti = if side == Side::Right { 1 } else { 0 };
    let y = side.outward(edge);
    let s = tail_series(potential.tail(ti), omega, side, y)?;
    let (phi, dphi) = (s.phi(edge), s.dphi(edge));
    if (to - edge) * side.sign() >= 0.0 {
        return Ok((s.phi(to), s.dphi(to)));
    }
    // normalise at the edge to keep magnitudes moderate
    let (phi, dphi) = (c(1.0, 0.0), dphi / phi);
    let v = propagate(potential, omega, &[edge, to], phi, dphi, opts)?;
    Ok(v[1])
}

fn mismatch(potential: &PotentialSpec, omega: C64, cfg: &ShootConfig) -> Result<(C64, f64)> {
    let xm = cfg.match_point;
    let (pp, dp) = outgoing_at(potential, omega, Side::Right, xm, &cfg.solver)?;
    Ok(match cfg.left {
        LeftCondition::Even => (dp, (dp / pp).norm()),
        LeftCondition::Odd => (pp, (pp / dp).norm()),
        LeftCondition::Outgoing => {
            let (pm, dm) = outgoing_at(potential, omega, Side::Left, xm, &cfg.solver)?;
            (pm * dp - dm * pp, (dp / pp - dm / pm).norm())
        }
    })
}

pub fn shoot_eigenvalue_with(potential: &PotentialSpec, guess: C64, cfg: &ShootConfig) -> Result<ComplexFrequency> {
    if guess.im >= 0.0 {
        return Err(LptError::InvalidArgument(format!("seed must have Im ω < 0, got {guess}")));
    }
    let root = newton(|w| mismatch(potential, w, cfg).map(|m| m.0), guess, RootOptions { tol: 1e-14, max_iter: cfg.max_iter })?;
    let (_, res) = mismatch(potential, root.z, cfg)?;
    if !(res < cfg.tol) {
        return Err(LptError::NoRoot { last: root.z, iterations: root.iterations });
    }
    if root.z.im >= 0.0 {
        return Err(LptError::RejectedRoot { omega: root.z });
    }
    let parity = match cfg.left {
        LeftCondition::Even => Parity::Even,
        LeftCondition::Odd => Parity::Odd,
        LeftCondition::Outgoing => Parity::None,
    };
    Ok(ComplexFrequency::new(root.z, 0, parity, res))
}

/// Shooting with outgoing conditions on both sides, matched at `match_point`.
pub fn shoot_eigenvalue(potential: &PotentialSpec, guess: C64, match_point: f64, tol: f64) -> Result<ComplexFrequency> {
    let mut cfg = ShootConfig::new(match_point, LeftCondition::Outgoing);
    cfg.tol = tol;
    shoot_eigenvalue_with(potential, guess, &cfg)
}

/// Root `(q, ω₀)` of `q cot qb = iω₀`, `ω₀ = √(q² + V₀)`, nearest `qb ≈ nπ`.
pub fn step_root(v0: f64, b: f64, root_index: u32) -> Result<(C64, C64)> {
    if !(v0 > 0.0 && b > 0.0) || root_index == 0 {
        return Err(LptError::InvalidArgument(format!("step root needs V₀ > 0, b > 0, index ≥ 1 (V₀={v0}, b={b}, n={root_index})")));
    }
    let omega = |q: C64| (q * q + v0).sqrt();
    let f = |q: C64| q * (q * b).cos() - I * omega(q) * (q * b).sin();
    let df = |q: C64| {
        let w = omega(q);
        (q * b).cos() - q * b * (q * b).sin() - I * (q / w * (q * b).sin() + w * b * (q * b).cos())
    };
    let mut q = c(root_index as f64 * std::f64::consts::PI / b, 0.0);
    for it in 0..100 {
        let step = f(q) / df(q);
        if !step.is_finite() {
            return Err(LptError::NoRoot { last: q, iterations: it });
        }
        q -= step;
        if step.norm() < 1e-15 * q.norm().max(1.0) {
            let w = omega(q);
            if !(w.re > 0.0 && w.im < 0.0) {
                return Err(LptError::RejectedRoot { omega: w });
            }
            return Ok((q, w));
        }
    }
    Err(LptError::NoRoot { last: q, iterations: 100 })
}

pub fn step_eigenvalue(v0: f64, b: f64, root_index: u32) -> Result<ComplexFrequency> {
    let (q, w) = step_root(v0, b, root_index)?;
    let res = (q * (q * b).cos() / (q * b).sin() - I * w).norm();
    Ok(ComplexFrequency { value: w, mode_index: root_index, parity: Parity::Odd, branch: 1, residual: res })
}

/// `ω_j = [±√(V₀b² − 1/4) − i(j + 1/2)]/b`.
pub fn pt_eigenvalue(v0: f64, b: f64, j: u32, branch: i8) -> Result<ComplexFrequency> {
    if !(4.0 * v0 * b * b > 1.0) {
        return Err(LptError::RegimeViolation(format!("need 4V₀b² > 1 (V₀={v0}, b={b})")));
    }
    let s = if branch < 0 { -1.0 } else { 1.0 };
    let w = c(s * (v0 * b * b - 0.25).sqrt(), -(j as f64 + 0.5)) / b;
    let parity = if j.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
    Ok(ComplexFrequency { value: w, mode_index: j, parity, branch: s as i8, residual: 0.0 })
}

/// Profile of the outgoing solution started at `from` (outside the
/// nontrivial region on `side`) and carried inward to `to`.
pub fn integrate_outgoing(
    potential: &PotentialSpec,
    omega: C64,
    side: Side,
    from: f64,
    to: f64,
    tol: f64,
) -> Result<LogDerivProfile> {
    let supp = potential.support();
    let outside = match side {
        Side::Right => from >= supp.1,
        Side::Left => from <= supp.0,
    };
    if !outside {
        return Err(LptError::InvalidArgument(format!("start point {from} lies inside the support {supp:?}")));
    }
    let ti = if side == Side::Right { 1 } else { 0 };
    let s = tail_series(potential.tail(ti), omega, side, side.outward(from))?;
    let anchor = Anchor::Value { x: from, phi: c(1.0, 0.0), dphi: s.dphi(from) / s.phi(from) };
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    build_profile(&ProfileRequest {
        potential,
        omega,
        lo,
        hi,
        anchor,
        breaks: vec![],
        opts: SolverOptions::with_tol(tol),
    })
}
