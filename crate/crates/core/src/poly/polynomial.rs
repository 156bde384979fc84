use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex polynomial, coefficients in ascending degree.
///
/// The zero polynomial is the empty coefficient list; otherwise the last
/// coefficient is nonzero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// The monomial `z - a`.
    pub fn linear(a: Complex64) -> Self {
        Self::new(vec![-a, ONE])
    }

    /// `lead * prod (z - a)^m` expanded.
    pub fn from_roots<'a, I>(lead: Complex64, roots: I) -> Self
    where
        I: IntoIterator<Item = (&'a Complex64, u32)>,
    {
        let mut coeffs = vec![lead];
        for (a, m) in roots {
            for _ in 0..m {
                coeffs.push(ZERO);
                for i in (1..coeffs.len()).rev() {
                    let lower = coeffs[i - 1];
                    coeffs[i] = lower - *a * coeffs[i];
                }
                coeffs[0] = -*a * coeffs[0];
            }
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `sum |c_i| |z|^i`, the natural scale for rounding errors of `eval(z)`.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Divide by `z - a`, returning quotient and remainder `p(a)`.
    pub fn deflate(&self, a: Complex64) -> (Self, Complex64) {
        if self.coeffs.is_empty() {
            return (Self::zero(), ZERO);
        }
        let n = self.coeffs.len();
        let mut q = vec![ZERO; n - 1];
        let mut acc = ZERO;
        for i in (0..n).rev() {
            acc = acc * a + self.coeffs[i];
            if i > 0 {
                q[i - 1] = acc;
            }
        }
        (Self::new(q), acc)
    }

    /// Drop leading coefficients whose modulus is at most `tol`.
    pub fn trim_below(mut self, tol: f64) -> Self {
        while self.coeffs.last().is_some_and(|c| c.norm() <= tol) {
            self.coeffs.pop();
        }
        self
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or(ZERO);
        let scale = self.max_coeff_norm().max(rhs.max_coeff_norm());
        Polynomial::new(
            (0..n)
                .map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i))
                .collect(),
        )
        .trim_below(4.0 * f64::EPSILON * scale)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Polynomial::new(vec![c(1.0, 0.0), ZERO, ZERO]);
        assert_eq!(p.degree(), Some(0));
        assert!(Polynomial::new(vec![ZERO]).is_zero());
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn from_roots_expands_binomial() {
        let half = c(0.5, 0.0);
        let p = Polynomial::from_roots(ONE, [(&half, 3)]);
        let expect = [-0.125, 0.75, -1.5, 1.0];
        for (got, want) in p.coeffs().iter().zip(expect) {
            assert!((got - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn deflate_returns_value_as_remainder() {
        let p = Polynomial::from_real(&[2.0, -3.0, 1.0]);
        let (q, r) = p.deflate(c(2.0, 0.0));
        assert_eq!(r, ZERO);
        assert_eq!(q, Polynomial::from_real(&[-1.0, 1.0]));
        let (_, r) = p.deflate(c(0.0, 1.0));
        assert!((r - p.eval(c(0.0, 1.0))).norm() < 1e-15);
    }

    #[test]
    fn sum_cancels_leading_terms() {
        let a = Polynomial::from_real(&[1.0, 2.0, 3.0]);
        let b = Polynomial::from_real(&[0.0, 1.0, -3.0]);
        assert_eq!((&a + &b).degree(), Some(1));
    }
}
