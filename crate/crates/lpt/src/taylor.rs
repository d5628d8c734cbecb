//! Truncated univariate power series in complex arithmetic.
//!
//! Used to push ω- and μ-derivatives through the tail-series recursion
//! without finite differencing. Coefficients missing from the shorter operand
//! count as zero, so a constant is a length-1 jet.

use crate::C64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet(Vec<C64>);

impl Jet {
    pub fn constant(v: C64) -> Self {
        Jet(vec![v])
    }

    /// `v + ε` truncated at `ε^order`.
    pub fn variable(v: C64, order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        c[0] = v;
        if order >= 1 {
            c[1] = C64::new(1.0, 0.0);
        }
        Jet(c)
    }

    pub fn from_coeffs(c: Vec<C64>) -> Self {
        assert!(!c.is_empty(), "jet needs at least one coefficient");
        Jet(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.0.get(k).copied().unwrap_or_default()
    }

    pub fn value(&self) -> C64 {
        self.0[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> C64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeff(k) * fact
    }

    pub fn exp(&self) -> Self {
        let n = self.0.len();
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[0] = self.0[0].exp();
        for k in 1..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.0[j] * e[k - j] * j as f64;
            }
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    pub fn scale(&self, s: C64) -> Self {
        Jet(self.0.iter().map(|&a| a * s).collect())
    }

    /// Evaluate the truncated series at `ε = t`.
    pub fn eval(&self, t: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * t + a)
    }
}

fn zip_len(a: &Jet, b: &Jet) -> usize {
    a.0.len().max(b.0.len())
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet((0..zip_len(self, rhs)).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet((0..zip_len(self, rhs)).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = zip_len(self, rhs);
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        Jet(out)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        let n = zip_len(self, rhs);
        let b0 = rhs.0[0];
        let mut q = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut s = self.coeff(k);
            for j in 1..=k.min(rhs.0.len() - 1) {
                s -= rhs.0[j] * q[k - j];
            }
            q[k] = s / b0;
        }
        Jet(q)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.iter().map(|&a| -a).collect())
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<C64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: C64) -> Jet { (&self).$m(&Jet::constant(rhs)) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Field operations shared by plain complex numbers and jets, so the tail
/// recursion is written once.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn lift(z: C64) -> Self;
    fn value(&self) -> C64;
    fn exp_s(&self) -> Self;
}

impl Scalar for C64 {
    fn lift(z: C64) -> Self {
        z
    }
    fn value(&self) -> C64 {
        *self
    }
    fn exp_s(&self) -> Self {
        self.exp()
    }
}

impl Scalar for Jet {
    fn lift(z: C64) -> Self {
        Jet::constant(z)
    }
    fn value(&self) -> C64 {
        self.0[0]
    }
    fn exp_s(&self) -> Self {
        self.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn exp_of_variable_matches_factorials() {
        let z = C64::new(0.3, -0.2);
        let e = Jet::variable(z, 5).exp();
        for k in 0..=5 {
            assert!(close(e.derivative(k), z.exp(), 1e-14));
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Jet::from_coeffs(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1), C64::new(0.3, 0.0)]);
        let b = Jet::from_coeffs(vec![C64::new(2.0, -1.0), C64::new(0.7, 0.7), C64::new(0.0, 1.0)]);
        let q = &a / &b;
        let back = &q * &b;
        for k in 0..3 {
            assert!(close(back.coeff(k), a.coeff(k), 1e-14));
        }
    }

    #[test]
    fn reciprocal_derivatives() {
        // d/dz 1/z = -1/z², d²/dz² = 2/z³
        let z = C64::new(1.5, -0.4);
        let r = Jet::constant(C64::new(1.0, 0.0)) / Jet::variable(z, 2);
        assert!(close(r.derivative(1), -1.0 / (z * z), 1e-14));
        assert!(close(r.derivative(2), 2.0 / (z * z * z), 1e-14));
    }

    #[test]
    fn constants_broadcast() {
        let x = Jet::variable(C64::new(2.0, 0.0), 3);
        let y = x.clone() * C64::new(3.0, 0.0) + C64::new(1.0, 0.0);
        assert_eq!(y.len(), 4);
        assert!(close(y.value(), C64::new(7.0, 0.0), 0.0));
        assert!(close(y.coeff(1), C64::new(3.0, 0.0), 0.0));
        assert_eq!(y.coeff(2), C64::new(0.0, 0.0));
    }
}
