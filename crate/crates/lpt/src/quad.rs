//! Quadrature for complex-valued integrands on real intervals.
//!
//! Two tools: an adaptive Gauss–Kronrod (7/15) integrator for integrands that
//! can be evaluated anywhere, and a fixed Chebyshev–Lobatto panel rule whose
//! nodes carry stored profiles (weights, cumulative integration and
//! differentiation matrices, barycentric interpolation).

use crate::{LptError, Result, C64};
use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-11, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    /// Σ|f| dx estimate, the scale against which cancellation is judged.
    pub abs_value: f64,
    pub evals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
    abs: f64,
}

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    Piece { a, b, val: k * h, err: ((k - g) * h).norm(), abs: abs * h.abs() }
}

/// Adaptive integral of `f` over `[a, b]`, bisecting the worst panel until the
/// summed error estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_breaks(&mut f, &[a, b], opts)
}

/// As [`integrate`], with mandatory panel edges at `points` (sorted).
pub fn integrate_breaks<F: FnMut(f64) -> C64>(f: &mut F, points: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(LptError::InvalidArgument("integration needs two endpoints".into()));
    }
    let mut pieces: Vec<Piece> = points
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| gk15(f, w[0], w[1]))
        .collect();
    let mut evals = 15 * pieces.len();
    loop {
        let total: C64 = pieces.iter().map(|p| p.val).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        let abs: f64 = pieces.iter().map(|p| p.abs).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.norm().max(1e-3 * abs));
        if err <= target || pieces.is_empty() {
            return Ok(QuadResult { value: total, error: err, abs_value: abs, evals });
        }
        if pieces.len() >= opts.max_intervals {
            // round-off floor: accept if the error is at the level of the summed magnitude
            if err <= 1e-13 * abs.max(total.norm()) * (pieces.len() as f64).sqrt() {
                return Ok(QuadResult { value: total, error: err, abs_value: abs, evals });
            }
            return Err(LptError::IntegrationFailure {
                x: pieces[0].a,
                reason: format!("quadrature did not converge (error {err:.3e}, target {target:.3e})"),
            });
        }
        let (iw, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.err > be { (i, p.err) } else { (bi, be) });
        let p = pieces.swap_remove(iw);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            // interval exhausted; keep it as is
            pieces.push(Piece { err: 0.0, ..p });
            continue;
        }
        pieces.push(gk15(f, p.a, m));
        pieces.push(gk15(f, m, p.b));
        evals += 30;
    }
}

/// Nodes-minus-one of the panel rule used for stored profiles.
pub const PANEL_ORDER: usize = 16;

/// Shared panel rule of order [`PANEL_ORDER`].
pub fn panel_rule() -> &'static ChebRule {
    static RULE: std::sync::OnceLock<ChebRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| ChebRule::new(PANEL_ORDER))
}

/// Chebyshev–Lobatto rule with `n + 1` nodes on `[-1, 1]` in increasing order.
#[derive(Clone, Debug)]
pub struct ChebRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `cum[i][j]`: ∫_{-1}^{t_i} of the interpolant of the j-th cardinal function.
    pub cum: Vec<Vec<f64>>,
    /// `diff[i][j]`: derivative at t_i of the j-th cardinal function.
    pub diff: Vec<Vec<f64>>,
    bary: Vec<f64>,
}

impl ChebRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let nodes: Vec<f64> = (0..=n).map(|i| -(PI * i as f64 / n as f64).cos()).collect();
        let mut cum = vec![vec![0.0; n + 1]; n + 1];
        for j in 0..=n {
            let mut e = vec![0.0; n + 1];
            e[j] = 1.0;
            let col = cumulative_from_values(&e, &nodes);
            for i in 0..=n {
                cum[i][j] = col[i];
            }
        }
        let weights = cum[n].clone();
        let bary: Vec<f64> = (0..=n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut diff = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..=n {
            let mut d = 0.0;
            for j in 0..=n {
                if i != j {
                    diff[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d -= diff[i][j];
                }
            }
            diff[i][i] = d;
        }
        ChebRule { n, nodes, weights, cum, diff, bary }
    }

    /// Barycentric interpolation at `t ∈ [-1, 1]`.
    pub fn interpolate(&self, values: &[C64], t: f64) -> C64 {
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..=self.n {
            let d = t - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let w = self.bary[j] / d;
            num += values[j] * w;
            den += w;
        }
        num / den
    }

    /// Chebyshev coefficients of the interpolant.
    pub fn coefficients(&self, values: &[C64]) -> Vec<C64> {
        cheb_coeffs(values)
    }

    /// Size of the last two Chebyshev coefficients relative to the largest;
    /// small values mean the panel resolves the function.
    pub fn tail_ratio(&self, values: &[C64]) -> f64 {
        let a = cheb_coeffs(values);
        let m = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        (a[self.n].norm() + a[self.n - 1].norm()) / m
    }
}

// Values at nodes t_i = -cos(πi/n) → Chebyshev coefficients.
fn cheb_coeffs<T>(values: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    let n = values.len() - 1;
    let mut a = vec![T::default(); n + 1];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut s = T::default();
        for (i, &v) in values.iter().enumerate() {
            // x_i = -cos(πi/n) = cos(π(n-i)/n), T_k(x_i) = cos(πk(n-i)/n)
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s = s + v * (w * (PI * (k * (n - i)) as f64 / n as f64).cos());
        }
        let scale = if k == 0 || k == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *ak = s * scale;
    }
    a
}

fn cumulative_from_values(v: &[f64], nodes: &[f64]) -> Vec<f64> {
    let n = v.len() - 1;
    let a = cheb_coeffs(v);
    // coefficients of the antiderivative (degree n + 1)
    let mut b = vec![0.0; n + 2];
    for k in 0..=n {
        match k {
            0 => b[1] += a[0],
            1 => b[2] += a[1] / 4.0,
            _ => {
                b[k + 1] += a[k] / (2.0 * (k + 1) as f64);
                b[k - 1] -= a[k] / (2.0 * (k - 1) as f64);
            }
        }
    }
    let eval = |t: f64| -> f64 {
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for k in (1..b.len()).rev() {
            let t0 = 2.0 * t * b1 - b2 + b[k];
            b2 = b1;
            b1 = t0;
        }
        t * b1 - b2 + b[0]
    };
    let base = eval(-1.0);
    nodes.iter().map(|&t| eval(t) - base).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_oscillatory_exponential() {
        let w = C64::new(3.0, -0.4);
        let r = integrate(|x| (C64::new(0.0, 2.0) * w * x).exp(), 0.0, 2.0, QuadOptions::default()).unwrap();
        let exact = ((C64::new(0.0, 4.0) * w).exp() - 1.0) / (C64::new(0.0, 2.0) * w);
        assert!((r.value - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn gk_handles_breakpoint_discontinuity() {
        let mut f = |x: f64| if x < 0.3 { C64::new(1.0, 0.0) } else { C64::new(0.0, 2.0) };
        let r = integrate_breaks(&mut f, &[0.0, 0.3, 1.0], QuadOptions::default()).unwrap();
        assert!((r.value - C64::new(0.3, 1.4)).norm() < 1e-14);
    }

    #[test]
    fn cheb_weights_and_cumulative() {
        let r = ChebRule::new(16);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // ∫_{-1}^{t} e^x = e^t - e^{-1}
        let v: Vec<C64> = r.nodes.iter().map(|&t| C64::new(t.exp(), 0.0)).collect();
        for i in 0..=16 {
            let c: C64 = (0..=16).map(|j| v[j] * r.cum[i][j]).sum();
            assert!((c.re - (r.nodes[i].exp() - (-1.0f64).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn cheb_differentiation_and_interpolation() {
        let r = ChebRule::new(16);
        let v: Vec<C64> = r.nodes.iter().map(|&t| C64::new((2.0 * t).sin(), t * t)).collect();
        for i in 0..=16 {
            let d: C64 = (0..=16).map(|j| v[j] * r.diff[i][j]).sum();
            let t = r.nodes[i];
            assert!((d - C64::new(2.0 * (2.0 * t).cos(), 2.0 * t)).norm() < 1e-11);
        }
        let y = r.interpolate(&v, 0.123);
        assert!((y - C64::new((0.246f64).sin(), 0.123 * 0.123)).norm() < 1e-13);
        assert!(r.tail_ratio(&v) < 1e-10);
    }
}
