use std::sync::Arc;

use num_complex::Complex64;

use super::roots::{find_roots, RootList};
use super::Polynomial;
use crate::error::{Error, Result};

/// Locations closer than this (relative) are treated as the same point when
/// pole and zero lists are merged or cancelled.
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// Relative size of `num(b)` below which `num` is taken to vanish at `b`.
pub const CANCEL_TOL: f64 = 1e-9;

/// Residual tolerance used when zeros have to be located numerically.
pub const ROOT_TOL: f64 = 1e-12;

/// Result of evaluating a rational function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(Complex64),
    Pole,
}

impl Value {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::Pole => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, Value::Pole)
    }
}

/// A rational function `num / den` in reduced form.
///
/// The denominator is kept factored as its pole list (and is monic when
/// expanded), so derivatives and cancellation never have to rediscover the
/// poles. When the function was assembled from known factors the zero list is
/// carried along as well; otherwise zeros are located on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
    poles: RootList,
    zeros: Option<RootList>,
    /// `(g, j)` when this is `g^(j)`; values are then taken from the Taylor
    /// series of `g`, which avoids the cancellation in the expanded numerator.
    origin: Option<(Arc<RationalFunction>, u32)>,
}

fn pole_product(poles: &RootList, z: Complex64) -> Complex64 {
    poles
        .iter()
        .map(|p| (z - p.location).powi(p.multiplicity as i32))
        .product()
}

/// `1/(d + t)` as coefficients of `t^j`, `j <= order`.
fn pole_series(d: Complex64, order: usize) -> Vec<Complex64> {
    let inv = 1.0 / d;
    let mut out = Vec::with_capacity(order + 1);
    let mut term = inv;
    for _ in 0..=order {
        out.push(term);
        term *= -inv;
    }
    out
}

fn mul_truncated(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().take(n - i).enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Cancel poles against numerator factors that vanish there. The numerator
/// roots are located first and matched to the poles, so multiple roots are
/// recognised as a whole; the remainder test is only a fallback for when
/// root finding fails.
fn cancel(mut num: Polynomial, mut poles: RootList) -> (Polynomial, RootList) {
    if poles.is_empty() || num.degree().unwrap_or(0) == 0 {
        return (num, poles);
    }
    let locations: Vec<_> = poles.iter().map(|p| (p.location, p.multiplicity)).collect();
    match find_roots(&num, ROOT_TOL) {
        Ok(roots) => {
            for (b, mult) in locations {
                let shared = mult.min(roots.multiplicity_at(b, CLUSTER_RADIUS));
                for _ in 0..shared {
                    num = num.deflate(b).0;
                }
                poles.remove(b, shared, 0.0);
            }
        }
        Err(_) => {
            for (b, mult) in locations {
                let mut removed = 0;
                while removed < mult && !num.is_zero() {
                    let (q, rem) = num.deflate(b);
                    if rem.norm() <= CANCEL_TOL * num.abs_eval(b) {
                        num = q;
                        removed += 1;
                    } else {
                        break;
                    }
                }
                poles.remove(b, removed, 0.0);
            }
        }
    }
    (num, poles)
}

impl RationalFunction {
    fn assemble(num: Polynomial, poles: RootList, zeros: Option<RootList>) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let den = Polynomial::from_roots(Complex64::new(1.0, 0.0), poles.pairs());
        Self {
            num,
            den,
            poles,
            zeros,
            origin: None,
        }
    }

    pub fn zero() -> Self {
        Self {
            num: Polynomial::zero(),
            den: Polynomial::one(),
            poles: RootList::new(),
            zeros: Some(RootList::new()),
            origin: None,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_factors(c, RootList::new(), RootList::new())
    }

    pub fn polynomial(p: Polynomial) -> Self {
        let zeros = (p.degree() == Some(0)).then(RootList::new);
        Self::assemble(p, RootList::new(), zeros)
    }

    /// `lead * prod (z - a)^m / prod (z - b)^p`, cancelling shared factors.
    pub fn from_factors(lead: Complex64, zeros: RootList, poles: RootList) -> Self {
        if lead == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        let mut zeros = zeros;
        let mut poles = poles;
        let shared: Vec<_> = zeros.iter().map(|z| (z.location, z.multiplicity)).collect();
        for (a, m) in shared {
            let k = poles.remove(a, m, CLUSTER_RADIUS);
            zeros.remove(a, k, CLUSTER_RADIUS);
        }
        let num = Polynomial::from_roots(lead, zeros.pairs());
        Self::assemble(num, poles, Some(zeros))
    }

    /// `num / den` from coefficients; poles are located numerically and
    /// common factors cancelled at the root level.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParameter(
                "denominator is identically zero".into(),
            ));
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let poles = find_roots(&den, ROOT_TOL)?;
        let num = num.scale(1.0 / den.leading());
        let (num, poles) = cancel(num, poles);
        Ok(Self::assemble(num, poles, None))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    /// Monic denominator.
    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn poles(&self) -> &RootList {
        &self.poles
    }

    /// Zero list if it is known without root finding.
    pub fn known_zeros(&self) -> Option<&RootList> {
        self.zeros.as_ref()
    }

    pub fn zeros(&self) -> Result<RootList> {
        match &self.zeros {
            Some(z) => Ok(z.clone()),
            None => find_roots(&self.num, ROOT_TOL),
        }
    }

    /// `(zeros, poles)`; fails for the zero function.
    pub fn zeros_poles(&self) -> Result<(RootList, RootList)> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        Ok((self.zeros()?, self.poles.clone()))
    }

    /// Leading coefficient of the numerator (the denominator is monic).
    pub fn leading(&self) -> Complex64 {
        self.num.leading()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.poles.is_empty() && self.num.degree().unwrap_or(0) == 0
    }

    fn num_at(&self, z: Complex64) -> Complex64 {
        match &self.zeros {
            Some(zs) if !self.num.is_zero() => self.leading() * pole_product(zs, z),
            _ => self.num.eval(z),
        }
    }

    pub fn evaluate(&self, z: Complex64) -> Value {
        if let Some((g, j)) = &self.origin {
            let j = *j as usize;
            return match g.taylor(z, j) {
                Some(series) => {
                    let fact: f64 = (1..=j).map(|i| i as f64).product();
                    Value::Finite(series[j] * fact)
                }
                None => Value::Pole,
            };
        }
        let d = pole_product(&self.poles, z);
        if d == Complex64::new(0.0, 0.0) {
            return Value::Pole;
        }
        Value::Finite(self.num_at(z) / d)
    }

    /// Value at `z`, or [`Error::AtPole`].
    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        self.evaluate(z).finite().ok_or(Error::AtPole(z))
    }

    /// `log |f(z)|`, computed factor by factor.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        if self.origin.is_some() {
            return match self.evaluate(z) {
                Value::Finite(v) => v.norm().ln(),
                Value::Pole => f64::INFINITY,
            };
        }
        let num = self.num_at(z).norm().ln();
        let den: f64 = self
            .poles
            .iter()
            .map(|p| p.multiplicity as f64 * (z - p.location).norm().ln())
            .sum();
        num - den
    }

    /// Leading Laurent coefficient `c` at a pole `b` of order `p`, so that
    /// `f(z) ~ c / (z - b)^p`.
    pub fn laurent_leading(&self, b: Complex64) -> Option<(Complex64, u32)> {
        if let Some((g, j)) = &self.origin {
            // d^j/dz^j c (z-b)^-p = c (-1)^j p (p+1) ... (p+j-1) (z-b)^-(p+j)
            let (c, p) = g.laurent_leading(b)?;
            let rising: f64 = (p..p + j).map(f64::from).product();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            return Some((c * sign * rising, p + j));
        }
        let i = self
            .poles
            .iter()
            .position(|p| super::roots::same_location(p.location, b, CLUSTER_RADIUS))?;
        let pole = self.poles.entries()[i];
        let rest: Complex64 = self
            .poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| (pole.location - p.location).powi(p.multiplicity as i32))
            .product();
        Some((self.num_at(pole.location) / rest, pole.multiplicity))
    }

    fn single_derivative(&self) -> Self {
        if self.poles.is_empty() {
            return Self::assemble(self.num.derivative(), RootList::new(), None);
        }
        // f = N / prod (z-b)^q  =>  f' = (N' L - N W) / (prod (z-b)^q * L)
        // with L = prod (z-b) and W = sum q_b prod_{c != b} (z-c).
        let one = Complex64::new(1.0, 0.0);
        let simple: Vec<_> = self.poles.iter().map(|p| p.location).collect();
        let l = Polynomial::from_roots(one, simple.iter().map(|b| (b, 1)));
        let mut w = Polynomial::zero();
        for (i, p) in self.poles.iter().enumerate() {
            let others = simple
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| (b, 1));
            let term = Polynomial::from_roots(Complex64::new(p.multiplicity as f64, 0.0), others);
            w = &w + &term;
        }
        let num = &(&self.num.derivative() * &l) - &(&self.num * &w);
        let poles = RootList::from_pairs(
            self.poles.iter().map(|p| (p.location, p.multiplicity + 1)),
            0.0,
        );
        Self::assemble(num, poles, None)
    }

    /// Exact `order`-th derivative; `order = 0` returns a copy.
    pub fn derivative(&self, order: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..order {
            if out.is_zero() {
                break;
            }
            out = out.single_derivative();
        }
        if order > 0 && !out.is_zero() {
            out.origin = Some(match &self.origin {
                Some((g, j)) => (g.clone(), j + order),
                None => (Arc::new(self.clone()), order),
            });
        }
        out
    }

    /// Taylor coefficients at `z` up to `order`, or `None` at a pole.
    pub fn taylor(&self, z: Complex64, order: usize) -> Option<Vec<Complex64>> {
        if let Some((g, j)) = &self.origin {
            let j = *j as usize;
            let series = g.taylor(z, order + j)?;
            // c_i of g^(j) is c_{i+j} (i+j)!/i!
            return Some(
                (0..=order)
                    .map(|i| {
                        let f: f64 = (i + 1..=i + j).map(|t| t as f64).product();
                        series[i + j] * f
                    })
                    .collect(),
            );
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut series = match &self.zeros {
            Some(zeros) => {
                let mut s = vec![zero; order + 1];
                s[0] = self.leading();
                for root in zeros.iter() {
                    let mut lin = vec![zero; order + 1];
                    lin[0] = z - root.location;
                    if order > 0 {
                        lin[1] = Complex64::new(1.0, 0.0);
                    }
                    for _ in 0..root.multiplicity {
                        s = mul_truncated(&s, &lin);
                    }
                }
                s
            }
            None => {
                // Taylor shift of the numerator by repeated synthetic division
                let mut b = self.num.coeffs().to_vec();
                let n = b.len();
                for i in 0..n {
                    for j in (i..n - 1).rev() {
                        let next = b[j + 1];
                        b[j] += z * next;
                    }
                }
                b.resize(order + 1, zero);
                b
            }
        };
        for pole in self.poles.iter() {
            let d = z - pole.location;
            if d == zero {
                return None;
            }
            let p = pole_series(d, order);
            for _ in 0..pole.multiplicity {
                series = mul_truncated(&series, &p);
            }
        }
        Some(series)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) || self.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
            poles: self.poles.clone(),
            zeros: self.zeros.clone(),
            origin: self
                .origin
                .as_ref()
                .map(|(g, j)| (Arc::new(g.scale(c)), *j)),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut poles = self.poles.clone();
        for p in other.poles.iter() {
            poles.add(p.location, p.multiplicity, CLUSTER_RADIUS);
        }
        match (&self.zeros, &other.zeros) {
            (Some(za), Some(zb)) => {
                let mut zeros = za.clone();
                for z in zb.iter() {
                    zeros.add(z.location, z.multiplicity, CLUSTER_RADIUS);
                }
                Self::from_factors(self.leading() * other.leading(), zeros, poles)
            }
            (None, Some(_)) => self.mul_known(other),
            (Some(_), None) => other.mul_known(self),
            (None, None) => {
                let (num, poles) = cancel(&self.num * &other.num, poles);
                Self::assemble(num, poles, None)
            }
        }
    }

    /// Product with a factor whose zeros are known: those zeros cancel
    /// against our poles exactly, and only the factor's poles are tested
    /// against our numerator.
    fn mul_known(&self, known: &Self) -> Self {
        let mut zeros = known.zeros.clone().expect("zeros are known");
        let mut own_poles = self.poles.clone();
        let shared: Vec<_> = zeros.iter().map(|z| (z.location, z.multiplicity)).collect();
        for (a, m) in shared {
            let k = own_poles.remove(a, m, CLUSTER_RADIUS);
            zeros.remove(a, k, CLUSTER_RADIUS);
        }
        let (num, known_poles) = cancel(self.num.clone(), known.poles.clone());
        let mut poles = own_poles;
        for p in known_poles.iter() {
            poles.add(p.location, p.multiplicity, CLUSTER_RADIUS);
        }
        let rest = Polynomial::from_roots(known.leading(), zeros.pairs());
        Self::assemble(&num * &rest, poles, None)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidParameter(
                "reciprocal of the zero function".into(),
            ));
        }
        let zeros = self.zeros()?;
        Ok(Self::from_factors(
            1.0 / self.leading(),
            self.poles.clone(),
            zeros,
        ))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let mut poles = self.poles.clone();
        for p in other.poles.iter() {
            let have = poles.multiplicity_at(p.location, CLUSTER_RADIUS);
            if p.multiplicity > have {
                poles.add(p.location, p.multiplicity - have, CLUSTER_RADIUS);
            }
        }
        let one = Complex64::new(1.0, 0.0);
        let lift = |f: &Self| {
            let missing = poles.iter().map(|p| {
                let own = f.poles.multiplicity_at(p.location, CLUSTER_RADIUS);
                (&p.location, p.multiplicity - own)
            });
            &f.num * &Polynomial::from_roots(one, missing)
        };
        let num = &lift(self) + &lift(other);
        let (num, poles) = cancel(num, poles);
        Self::assemble(num, poles, None)
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn pow(&self, e: u32) -> Self {
        if e == 0 {
            return Self::constant(Complex64::new(1.0, 0.0));
        }
        if self.is_zero() {
            return Self::zero();
        }
        if let Some(zs) = &self.zeros {
            return Self::from_factors(self.leading().powu(e), zs.scaled(e), self.poles.scaled(e));
        }
        Self::assemble(self.num.pow(e), self.poles.scaled(e), None)
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, e: i32) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.recip()?.pow(e.unsigned_abs()))
        }
    }

    /// Logarithmic derivative `f'/f`, assembled from its partial fractions
    /// `sum m/(z - a) - sum p/(z - b)` so no cancellation is needed.
    pub fn log_derivative(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidParameter(
                "logarithmic derivative of the zero function".into(),
            ));
        }
        let zeros = self.zeros()?;
        let centers: Vec<(Complex64, f64)> = zeros
            .iter()
            .map(|z| (z.location, z.multiplicity as f64))
            .chain(
                self.poles
                    .iter()
                    .map(|p| (p.location, -(p.multiplicity as f64))),
            )
            .collect();
        let one = Complex64::new(1.0, 0.0);
        let mut num = Polynomial::zero();
        for (i, &(_, weight)) in centers.iter().enumerate() {
            let others = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (c, _))| (c, 1));
            num = &num + &Polynomial::from_roots(one, others).scale(Complex64::new(weight, 0.0));
        }
        let poles = RootList::from_pairs(centers.iter().map(|&(c, _)| (c, 1)), 0.0);
        Ok(Self::assemble(num, poles, None))
    }

    /// Compare by values at the given sample points (relative).
    pub fn max_relative_difference(&self, other: &Self, points: &[Complex64]) -> f64 {
        points
            .iter()
            .filter_map(|&z| {
                let a = self.evaluate(z).finite()?;
                let b = other.evaluate(z).finite()?;
                Some((a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE))
            })
            .fold(0.0, f64::max)
    }
}
