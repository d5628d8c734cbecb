//! Dormand–Prince 5(4) with complex state and PI step-size control.

use crate::{LptError, Result, C64};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, h_min: 1e-13, max_steps: 200_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (a, k) in terms {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += k[i] * (h * a);
            }
        }
    }
    out
}

/// Adaptive integrator state; call [`Stepper::advance`] repeatedly. The step
/// size carries over between calls, so the caller may change the right-hand
/// side (e.g. across a potential breakpoint) or the representation of the
/// state between steps.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub opts: OdeOptions,
    h: f64,
    err_old: f64,
    pub steps: usize,
}

impl Stepper {
    pub fn new(opts: OdeOptions) -> Self {
        Stepper { opts, h: 0.0, err_old: 1e-4, steps: 0 }
    }

    pub fn reset_controller(&mut self) {
        self.err_old = 1e-4;
    }

    /// One accepted step from `x` toward `x_end` (never past it).
    pub fn advance<const N: usize, F>(&mut self, rhs: &F, x: &mut f64, y: &mut [C64; N], x_end: f64) -> Result<()>
    where
        F: Fn(f64, &[C64; N]) -> [C64; N],
    {
        let span = x_end - *x;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let k1 = rhs(*x, y);
        if self.h == 0.0 || self.h.signum() != dir {
            let ny = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let nf = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let h0 = if ny > 1e-5 && nf > 1e-5 { 0.01 * ny / nf } else { 1e-3 };
            self.h = dir * h0.min(span.abs()).max(self.opts.h_min);
        }
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(LptError::IntegrationFailure { x: *x, reason: "step budget exhausted".into() });
            }
            let h_trial = self.h;
            let mut h = self.h;
            let last = (h.abs() >= span.abs() * (1.0 - 1e-12)) || (span - h).abs() < self.opts.h_min;
            if last {
                h = span;
            }
            let x0 = *x;
            let k2 = rhs(x0 + C2 * h, &axpy(y, h, &[(A21, &k1)]));
            let k3 = rhs(x0 + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(x0 + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(x0 + C5 * h, &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = rhs(x0 + h, &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y5 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs(x0 + h, &y5);
            let mut err = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(y5[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            err = (err / N as f64).sqrt();
            if !err.is_finite() {
                self.h *= 0.25;
                if self.h.abs() < self.opts.h_min {
                    return Err(LptError::IntegrationFailure { x: x0, reason: "non-finite state".into() });
                }
                continue;
            }
            if err <= 1.0 {
                let fac = 0.9 * err.max(1e-10).powf(-0.17) * self.err_old.powf(0.04);
                let fac = fac.clamp(0.2, 5.0);
                self.err_old = err.max(1e-4);
                *y = y5;
                *x = if last { x_end } else { x0 + h };
                self.h = h * fac;
                if last {
                    // a clipped final step says nothing about the natural size
                    self.h = dir * h_trial.abs().max(self.h.abs());
                }
                return Ok(());
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            self.h = h * fac;
            if self.h.abs() < self.opts.h_min {
                return Err(LptError::IntegrationFailure { x: x0, reason: format!("step size underflow (h = {:.3e})", self.h) });
            }
        }
    }

    /// Integrate to `x_end`, taking as many steps as needed.
    pub fn integrate<const N: usize, F>(&mut self, rhs: &F, x: &mut f64, y: &mut [C64; N], x_end: f64) -> Result<()>
    where
        F: Fn(f64, &[C64; N]) -> [C64; N],
    {
        while *x != x_end {
            self.advance(rhs, x, y, x_end)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_complex_frequency() {
        let w = C64::new(2.0, -0.3);
        let rhs = |_x: f64, y: &[C64; 2]| [y[1], -w * w * y[0]];
        let mut st = Stepper::new(OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() });
        let mut x = 0.0;
        let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        st.integrate(&rhs, &mut x, &mut y, 3.0).unwrap();
        let exact = (w * 3.0).cos();
        assert!((y[0] - exact).norm() < 1e-9 * exact.norm().max(1.0));
    }

    #[test]
    fn backward_integration() {
        let rhs = |_x: f64, y: &[C64; 1]| [y[0] * C64::new(0.0, 1.0)];
        let mut st = Stepper::new(OdeOptions::default());
        let mut x = 2.0;
        let mut y = [C64::new(1.0, 0.0)];
        st.integrate(&rhs, &mut x, &mut y, -1.0).unwrap();
        assert!((y[0] - C64::new(0.0, -3.0).exp()).norm() < 1e-8);
    }
}
