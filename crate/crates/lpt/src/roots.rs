//! Complex root finding: damped Newton with a central-difference derivative,
//! Muller's method when Newton stalls.

use crate::{LptError, Result, C64};

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Converged when the last step is below `tol·max(1, |z|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { tol: 1e-12, max_iter: 60 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub z: C64,
    pub residual: C64,
    pub iterations: usize,
}

pub fn newton<F>(mut f: F, guess: C64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut z = guess;
    let mut fz = f(z)?;
    let mut history = vec![z];
    for it in 0..opts.max_iter {
        let h = 1e-7 * z.norm().max(1.0);
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if !d.is_finite() || d.norm() == 0.0 {
            return muller(&mut f, &history, z, opts, it);
        }
        let mut step = -fz / d;
        let mut accepted = false;
        for _ in 0..8 {
            let zn = z + step;
            match f(zn) {
                Ok(fn_) if fn_.is_finite() && fn_.norm() < fz.norm() * 1.5 + 1e-300 => {
                    z = zn;
                    fz = fn_;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            return muller(&mut f, &history, z, opts, it);
        }
        history.push(z);
        if step.norm() <= opts.tol * z.norm().max(1.0) || fz.norm() == 0.0 {
            return Ok(Root { z, residual: fz, iterations: it + 1 });
        }
    }
    muller(&mut f, &history, z, opts, opts.max_iter)
}

/// Muller's method seeded with the last iterates (or a small triangle
/// around `z`).
pub fn muller<F>(f: &mut F, history: &[C64], z: C64, opts: RootOptions, spent: usize) -> Result<Root>
where
    F: FnMut(C64) -> Result<C64>,
{
    let h = 1e-3 * z.norm().max(1.0);
    let (mut x0, mut x1, mut x2) = if history.len() >= 3 {
        let n = history.len();
        (history[n - 3], history[n - 2], history[n - 1])
    } else {
        (z - h, z + C64::new(0.0, h), z)
    };
    if (x0 - x1).norm() == 0.0 || (x1 - x2).norm() == 0.0 || (x0 - x2).norm() == 0.0 {
        x0 = z - h;
        x1 = z + C64::new(0.0, h);
        x2 = z;
    }
    let (mut f0, mut f1, mut f2) = (f(x0)?, f(x1)?, f(x2)?);
    for it in 0..opts.max_iter {
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        let d1 = (f1 - f0) / h1;
        let d2 = (f2 - f1) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * a * f2).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 || !den.is_finite() {
            break;
        }
        let dx = -2.0 * f2 / den;
        let x3 = x2 + dx;
        let f3 = f(x3)?;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f3;
        if dx.norm() <= opts.tol * x2.norm().max(1.0) || f2.norm() == 0.0 {
            return Ok(Root { z: x2, residual: f2, iterations: spent + it + 1 });
        }
    }
    Err(LptError::NoRoot { last: x2, iterations: spent + opts.max_iter })
}
