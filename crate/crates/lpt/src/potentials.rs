//! Piecewise potentials with optional exponential tails.

use crate::oracles::sech2_c;
use crate::{c, LptError, Result, C64};
use std::fmt;
use std::sync::Arc;

pub type Evaluator = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
pub type ComplexEvaluator = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Distance from the support edge at which Pöschl–Teller switches from the
/// closed form to its tail sum, in units of b.
pub const PT_SUPPORT_RADIUS: f64 = 2.0;

/// Number of stored tail coefficients for Pöschl–Teller.
const PT_STORED_TERMS: usize = 80;

#[derive(Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    eval: Evaluator,
}

impl Segment {
    pub fn new(start: f64, end: f64, eval: Evaluator) -> Self {
        Segment { start, end, eval }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> C64 {
        (self.eval)(x)
    }
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Segment[{}, {})", self.start, self.end)
    }
}

/// `V = scale · Σ_k c_k e^{−kαy}` with `y` the distance outward (y = x on the
/// right, y = −x on the left).
#[derive(Clone, Debug, PartialEq)]
pub struct TailDescriptor {
    pub alpha: f64,
    pub coeffs: Vec<C64>,
    pub scale: f64,
}

pub type TailExpansion = TailDescriptor;

impl TailDescriptor {
    pub fn new(alpha: f64, coeffs: Vec<C64>, scale: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(LptError::InvalidArgument(format!("tail exponent must be positive, got {alpha}")));
        }
        Ok(TailDescriptor { alpha, coeffs, scale })
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, y: f64) -> C64 {
        let e = (-self.alpha * y).exp();
        let mut p = e;
        let mut s = c(0.0, 0.0);
        for &ck in &self.coeffs {
            s += ck * p;
            p *= e;
        }
        s * self.scale
    }

    /// `|scale·c_{k+1}|·e^{−(k+1)αy}`, the size of the first dropped term when
    /// truncating after `k` terms (zero past the stored coefficients).
    pub fn dropped_term(&self, k: usize, y: f64) -> f64 {
        match self.coeffs.get(k) {
            Some(ck) => (self.scale * ck.norm()) * (-((k + 1) as f64) * self.alpha * y).exp(),
            None => 0.0,
        }
    }

    /// Smallest truncation with the first dropped term below `tau` at `y`.
    pub fn auto_order(&self, y: f64, tau: f64) -> usize {
        (0..=self.coeffs.len()).find(|&k| self.dropped_term(k, y) < tau).unwrap_or(self.coeffs.len())
    }

    pub fn truncated(&self, k_max: usize) -> Self {
        TailDescriptor { alpha: self.alpha, coeffs: self.coeffs[..k_max.min(self.coeffs.len())].to_vec(), scale: self.scale }
    }
}

/// `α_k = 2k/b`, `c_k = (−1)^{k+1}·4k`: the expansion of `V₀ cosh⁻²(x/b)`.
pub fn pt_tail_expansion(v0: f64, b: f64, k_max: usize) -> Result<TailExpansion> {
    if k_max < 1 {
        return Err(LptError::InvalidArgument("k_max must be at least 1".into()));
    }
    if !(b > 0.0) {
        return Err(LptError::InvalidArgument(format!("b must be positive, got {b}")));
    }
    let coeffs = (1..=k_max)
        .map(|k| {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            c(s * 4.0 * k as f64, 0.0)
        })
        .collect();
    TailDescriptor::new(2.0 / b, coeffs, v0)
}

/// μ-dependence of one side's tail, `V(y; μ) = Σ_k (scale·c_k + μ·rate_k) e^{−k(α + μα')y}`.
/// Only first-order dependence on μ is representable; that covers both the
/// width family and tail-supported amplitude perturbations.
#[derive(Clone, Debug, PartialEq)]
pub struct TailFamily {
    pub base: TailDescriptor,
    pub alpha_rate: f64,
    pub coeff_rate: Vec<C64>,
}

impl TailFamily {
    /// A tail that the perturbation does not touch.
    pub fn fixed(base: TailDescriptor) -> Self {
        TailFamily { base, alpha_rate: 0.0, coeff_rate: Vec::new() }
    }

    pub fn is_fixed(&self) -> bool {
        self.alpha_rate == 0.0 && self.coeff_rate.iter().all(|z| z.norm() == 0.0)
    }

    pub fn truncated(&self, k_max: usize) -> Self {
        let mut r = self.coeff_rate.clone();
        r.truncate(k_max);
        TailFamily { base: self.base.truncated(k_max), alpha_rate: self.alpha_rate, coeff_rate: r }
    }
}

#[derive(Clone)]
pub struct PotentialSpec {
    segments: Vec<Segment>,
    support: (f64, f64),
    tails: [Option<TailDescriptor>; 2],
    analytic: Option<ComplexEvaluator>,
    pub label: String,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("segments", &self.segments)
            .field("tails", &self.tails)
            .finish()
    }
}

fn zero_eval() -> Evaluator {
    Arc::new(|_| c(0.0, 0.0))
}

impl PotentialSpec {
    /// Build from interior pieces. Gaps inside the support evaluate to zero;
    /// outside the support the tail sums (or `outer` overrides) apply.
    pub fn from_pieces(
        mut pieces: Vec<(f64, f64, Evaluator)>,
        support: (f64, f64),
        tails: [Option<TailDescriptor>; 2],
        outer: [Option<Evaluator>; 2],
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(support.0 <= support.1) {
            return Err(LptError::InvalidArgument(format!("bad support {:?}", support)));
        }
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut segs = Vec::new();
        let left_eval = match (&outer[0], &tails[0]) {
            (Some(e), _) => e.clone(),
            (None, Some(t)) => {
                let t = t.clone();
                Arc::new(move |x: f64| t.eval(-x)) as Evaluator
            }
            (None, None) => zero_eval(),
        };
        segs.push(Segment::new(f64::NEG_INFINITY, support.0, left_eval));
        let mut cursor = support.0;
        for (a, b, e) in pieces {
            if a < cursor - 1e-15 || b > support.1 + 1e-15 || !(a < b) {
                return Err(LptError::InvalidArgument(format!("piece [{a}, {b}] overlaps or leaves the support")));
            }
            if a > cursor {
                segs.push(Segment::new(cursor, a, zero_eval()));
            }
            segs.push(Segment::new(a, b, e));
            cursor = b;
        }
        if cursor < support.1 {
            segs.push(Segment::new(cursor, support.1, zero_eval()));
        }
        let right_eval = match (&outer[1], &tails[1]) {
            (Some(e), _) => e.clone(),
            (None, Some(t)) => {
                let t = t.clone();
                Arc::new(move |x: f64| t.eval(x)) as Evaluator
            }
            (None, None) => zero_eval(),
        };
        segs.push(Segment::new(support.1, f64::INFINITY, right_eval));
        // drop empty slivers (support of zero width)
        segs.retain(|s| s.start < s.end);
        Ok(PotentialSpec { segments: segs, support, tails, analytic: None, label: label.into() })
    }

    pub fn with_analytic(mut self, f: ComplexEvaluator) -> Self {
        self.analytic = Some(f);
        self
    }

    pub fn zero() -> Self {
        PotentialSpec::from_pieces(vec![], (0.0, 0.0), [None, None], [None, None], "zero").unwrap()
            .with_analytic(Arc::new(|_| c(0.0, 0.0)))
    }

    /// Symmetric barrier `V₀` on `(−b, b)`.
    pub fn step(v0: f64, b: f64) -> Result<Self> {
        if !(v0 > 0.0 && b > 0.0) {
            return Err(LptError::InvalidArgument(format!("step needs V₀ > 0 and b > 0 (V₀={v0}, b={b})")));
        }
        let e: Evaluator = Arc::new(move |_| c(v0, 0.0));
        PotentialSpec::from_pieces(vec![(-b, b, e)], (-b, b), [None, None], [None, None], format!("step(V0={v0}, b={b})"))
    }

    /// `V₀ cosh⁻²(x/b)`.
    pub fn poschl_teller(v0: f64, b: f64) -> Result<Self> {
        let tail = pt_tail_expansion(v0, b, PT_STORED_TERMS)?;
        let r = PT_SUPPORT_RADIUS * b;
        let inner: Evaluator = Arc::new(move |x: f64| {
            let ch = (x / b).cosh();
            c(v0 / (ch * ch), 0.0)
        });
        Ok(PotentialSpec::from_pieces(
            vec![(-r, r, inner)],
            (-r, r),
            [Some(tail.clone()), Some(tail)],
            [None, None],
            format!("poschl_teller(V0={v0}, b={b})"),
        )?
        .with_analytic(Arc::new(move |z: C64| v0 * sech2_c(z / b))))
    }

    /// Unit-height bump by default; see [`BumpPerturbation`].
    pub fn bump(center: f64, width: f64, height: f64) -> Result<Self> {
        BumpPerturbation::new(center, width, height)?.to_spec()
    }

    /// Pointwise sum. Tails on the same side must share α.
    pub fn sum(a: &PotentialSpec, b: &PotentialSpec) -> Result<Self> {
        let support = (a.support.0.min(b.support.0), a.support.1.max(b.support.1));
        let mut cuts: Vec<f64> = a.breakpoints().into_iter().chain(b.breakpoints()).collect();
        cuts.push(support.0);
        cuts.push(support.1);
        cuts.retain(|x| *x >= support.0 && *x <= support.1);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let sa = a.segment_at(mid).clone();
            let sb = b.segment_at(mid).clone();
            pieces.push((w[0], w[1], Arc::new(move |x: f64| sa.eval(x) + sb.eval(x)) as Evaluator));
        }
        let mut tails: [Option<TailDescriptor>; 2] = [None, None];
        for side in 0..2 {
            tails[side] = match (&a.tails[side], &b.tails[side]) {
                (None, None) => None,
                (Some(t), None) | (None, Some(t)) => {
                    let other = if a.tails[side].is_some() { b } else { a };
                    if other.has_outer_override(side) {
                        return Err(LptError::UnsupportedConfiguration(
                            "sum of an exponential tail and a non-exponential tail".into(),
                        ));
                    }
                    Some(t.clone())
                }
                (Some(t1), Some(t2)) => {
                    if (t1.alpha - t2.alpha).abs() > 1e-14 * t1.alpha {
                        return Err(LptError::UnsupportedConfiguration("tails with different α cannot be summed".into()));
                    }
                    let n = t1.coeffs.len().max(t2.coeffs.len());
                    let coeffs = (0..n)
                        .map(|k| {
                            t1.coeffs.get(k).copied().unwrap_or_default() * t1.scale
                                + t2.coeffs.get(k).copied().unwrap_or_default() * t2.scale
                        })
                        .collect();
                    Some(TailDescriptor { alpha: t1.alpha, coeffs, scale: 1.0 })
                }
            };
        }
        let oa = a.segments.first().unwrap().clone();
        let ob = b.segments.first().unwrap().clone();
        let left: Evaluator = Arc::new(move |x| oa.eval(x) + ob.eval(x));
        let oa = a.segments.last().unwrap().clone();
        let ob = b.segments.last().unwrap().clone();
        let right: Evaluator = Arc::new(move |x| oa.eval(x) + ob.eval(x));
        let mut spec = PotentialSpec::from_pieces(
            pieces,
            support,
            tails,
            [Some(left), Some(right)],
            format!("{} + {}", a.label, b.label),
        )?;
        if let (Some(fa), Some(fb)) = (&a.analytic, &b.analytic) {
            let (fa, fb) = (fa.clone(), fb.clone());
            spec.analytic = Some(Arc::new(move |z| fa(z) + fb(z)));
        }
        Ok(spec)
    }

    /// `μ·V`.
    pub fn scaled(&self, mu: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let s2 = s.clone();
                Segment::new(s.start, s.end, Arc::new(move |x| s2.eval(x) * mu))
            })
            .collect();
        let tails = [
            self.tails[0].as_ref().map(|t| TailDescriptor { scale: t.scale * mu, ..t.clone() }),
            self.tails[1].as_ref().map(|t| TailDescriptor { scale: t.scale * mu, ..t.clone() }),
        ];
        let analytic = self.analytic.as_ref().map(|f| {
            let f = f.clone();
            Arc::new(move |z| f(z) * mu) as ComplexEvaluator
        });
        PotentialSpec { segments, support: self.support, tails, analytic, label: format!("{mu}*({})", self.label) }
    }

    fn has_outer_override(&self, side: usize) -> bool {
        // a nonzero outer segment without a descriptor
        let seg = if side == 0 { self.segments.first() } else { self.segments.last() };
        let probe = if side == 0 { self.support.0 - 1.0 } else { self.support.1 + 1.0 };
        self.tails[side].is_none() && seg.map(|s| s.eval(probe).norm() != 0.0).unwrap_or(false)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Tail descriptor on the left (`0`) or right (`1`) side.
    pub fn tail(&self, side: usize) -> Option<&TailDescriptor> {
        self.tails[side].as_ref()
    }

    pub fn analytic(&self) -> Option<&ComplexEvaluator> {
        self.analytic.as_ref()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Finite segment edges, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().flat_map(|s| [s.start, s.end]).filter(|x| x.is_finite()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// Segment containing `x`; on an edge, the segment to the right.
    pub fn segment_at(&self, x: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.start <= x);
        &self.segments[i.saturating_sub(1)]
    }

    /// Segment whose interior contains the open interval `(a, b)`; evaluating
    /// it at either endpoint gives the one-sided limit from inside.
    pub fn segment_for(&self, a: f64, b: f64) -> &Segment {
        self.segment_at(0.5 * (a + b))
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.segment_at(x).eval(x)
    }
}

pub fn eval_potential(spec: &PotentialSpec, x: f64) -> C64 {
    spec.eval(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpPerturbation {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl BumpPerturbation {
    pub fn new(center: f64, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0) || !(center >= 0.0) {
            return Err(LptError::InvalidArgument(format!("bump needs x₀ ≥ 0 and w > 0 (x₀={center}, w={width})")));
        }
        Ok(BumpPerturbation { center, width, height })
    }

    pub fn edges(&self) -> (f64, f64) {
        (self.center - 0.5 * self.width, self.center + 0.5 * self.width)
    }

    pub fn to_spec(&self) -> Result<PotentialSpec> {
        let (lo, hi) = self.edges();
        let h = self.height;
        PotentialSpec::from_pieces(
            vec![(lo, hi, Arc::new(move |_| c(h, 0.0)) as Evaluator)],
            (lo, hi),
            [None, None],
            [None, None],
            format!("bump(x0={}, w={})", self.center, self.width),
        )
    }
}

/// Width family `V₀ cosh⁻²((1+μ)x)`: unperturbed potential, first-order
/// perturbation, and the μ-dependence of the tails.
#[derive(Clone, Debug)]
pub struct WidthPerturbation {
    pub v0: PotentialSpec,
    pub v1: PotentialSpec,
    pub family: TailFamily,
}

pub fn pt_width_perturbation(v0: f64) -> Result<WidthPerturbation> {
    if v0 <= 0.25 {
        return Err(LptError::RegimeViolation(format!("need V₀ > 1/4 for the assumed regime 4V₀b² > 1, got {v0}")));
    }
    let base = PotentialSpec::poschl_teller(v0, 1.0)?;
    let v1f = move |x: f64| {
        let ch = x.cosh();
        c(-2.0 * v0 * x * x.tanh() / (ch * ch), 0.0)
    };
    let r = PT_SUPPORT_RADIUS;
    let inner: Evaluator = Arc::new(v1f);
    let v1 = PotentialSpec::from_pieces(
        vec![(-r, r, inner)],
        (-r, r),
        [None, None],
        [Some(Arc::new(v1f)), Some(Arc::new(v1f))],
        format!("width_perturbation(V0={v0})"),
    )?
    .with_analytic(Arc::new(move |z: C64| -2.0 * v0 * z * crate::oracles::tanh_c(z) * sech2_c(z)));
    let tail = base.tail(1).unwrap().clone();
    let family = TailFamily { base: tail, alpha_rate: 2.0, coeff_rate: Vec::new() };
    Ok(WidthPerturbation { v0: base, v1, family })
}
