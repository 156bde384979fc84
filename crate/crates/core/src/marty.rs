//! Spherical derivative and the generalized Marty quotient
//! `|f^(k)| / (1 + |f|^alpha)`, continuously extended into poles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{RationalFunction, Value, CLUSTER_RADIUS};

/// Within this distance of a pole the extension value replaces direct
/// evaluation.
pub const POLE_GUARD: f64 = 1e-9;

/// Relative tolerance for deciding `(alpha - 1) p == k`.
const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartyParams {
    pub k: u32,
    pub alpha: f64,
}

impl MartyParams {
    pub fn new(k: u32, alpha: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "derivative order k must be >= 1".into(),
            ));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { k, alpha })
    }

    /// Smallest pole multiplicity for which the quotient stays bounded near
    /// a pole, `ceil(k / (alpha - 1))`; `None` when `alpha <= 1`.
    pub fn required_pole_multiplicity(&self) -> Option<u32> {
        if self.alpha <= 1.0 {
            return None;
        }
        let q = self.k as f64 / (self.alpha - 1.0);
        let c = q.ceil();
        // 2/(1.5-1) must give 4, not 5
        let c = if (c - 1.0 - q).abs() <= EQUALITY_TOL * q.max(1.0) {
            c - 1.0
        } else {
            c
        };
        Some(c.max(1.0) as u32)
    }
}

/// Nonnegative real or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedValue {
    Finite(f64),
    Infinite,
}

impl ExtendedValue {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedValue::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Infinite => None,
        }
    }

    /// As `f64`, mapping `Infinite` to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedValue::Finite(v) => s.serialize_f64(*v),
            ExtendedValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `p (p+1) ... (p+k-1)`.
pub fn rising_factorial(p: u32, k: u32) -> f64 {
    (0..k).map(|i| (p + i) as f64).product()
}

fn nearby_pole(f: &RationalFunction, z: Complex64) -> Option<Complex64> {
    f.poles()
        .iter()
        .map(|p| p.location)
        .find(|b| (z - b).norm() <= POLE_GUARD)
}

/// `f# = |f'| / (1 + |f|^2)`, with the reciprocal value at poles.
pub fn spherical_derivative(f: &RationalFunction, z: Complex64) -> f64 {
    if let Some(b) = nearby_pole(f, z) {
        // 1/f = (z-b)^p / c + ..., so (1/f)'(b) = 1/c for a simple pole and 0 otherwise
        let (c, p) = f.laurent_leading(b).expect("pole is listed");
        return if p == 1 { 1.0 / c.norm() } else { 0.0 };
    }
    let d = f.derivative(1);
    let lf = f.log_abs(z);
    let ld = d.log_abs(z);
    if lf > 0.0 {
        // |f'| / |f|^2 / (1 + |f|^-2)
        (ld - 2.0 * lf).exp() / (1.0 + (-2.0 * lf).exp())
    } else {
        ld.exp() / (1.0 + (2.0 * lf).exp())
    }
}

/// Value of the continuous extension at a pole, and whether the pole is in
/// the equality case `(alpha - 1) p = k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleExtension {
    pub value: ExtendedValue,
    pub equality_case: bool,
}

/// Extension value at a pole of order `p` with Laurent leading coefficient `c`.
pub fn pole_extension(c: Complex64, p: u32, params: MartyParams) -> PoleExtension {
    let k = params.k as f64;
    let excess = (params.alpha - 1.0) * p as f64 - k;
    if excess.abs() <= EQUALITY_TOL * k.max(1.0) {
        PoleExtension {
            value: ExtendedValue::Finite(
                c.norm().powf(1.0 - params.alpha) * rising_factorial(p, params.k),
            ),
            equality_case: true,
        }
    } else if excess > 0.0 {
        PoleExtension {
            value: ExtendedValue::Finite(0.0),
            equality_case: false,
        }
    } else {
        PoleExtension {
            value: ExtendedValue::Infinite,
            equality_case: false,
        }
    }
}

/// The quotient `F_{k,alpha}` for one function, with `f^(k)` precomputed.
#[derive(Debug, Clone)]
pub struct MartyQuotient<'a> {
    f: &'a RationalFunction,
    params: MartyParams,
    deriv: RationalFunction,
}

impl<'a> MartyQuotient<'a> {
    pub fn new(f: &'a RationalFunction, params: MartyParams) -> Self {
        Self {
            f,
            params,
            deriv: f.derivative(params.k),
        }
    }

    pub fn params(&self) -> MartyParams {
        self.params
    }

    pub fn function(&self) -> &RationalFunction {
        self.f
    }

    pub fn at_pole(&self, b: Complex64) -> Option<PoleExtension> {
        let (c, p) = self.f.laurent_leading(b)?;
        Some(pole_extension(c, p, self.params))
    }

    pub fn at(&self, z: Complex64) -> ExtendedValue {
        if let Some(b) = nearby_pole(self.f, z) {
            return self.at_pole(b).expect("pole is listed").value;
        }
        if let (Value::Pole, _) | (_, Value::Pole) = (self.f.evaluate(z), self.deriv.evaluate(z)) {
            return ExtendedValue::Infinite;
        }
        let a = self.params.alpha;
        let lf = self.f.log_abs(z);
        let ld = self.deriv.log_abs(z);
        let v = if lf > 0.0 {
            (ld - a * lf).exp() / (1.0 + (-a * lf).exp())
        } else {
            ld.exp() / (1.0 + (a * lf).exp())
        };
        ExtendedValue::Finite(v)
    }

    /// Poles in the closed disk for which the quotient is unbounded.
    pub fn unbounded_poles(&self, center: Complex64, radius: f64) -> Vec<(Complex64, u32)> {
        self.f
            .poles()
            .iter()
            .filter(|p| (p.location - center).norm() <= radius * (1.0 + CLUSTER_RADIUS))
            .filter(|p| {
                self.at_pole(p.location)
                    .is_some_and(|e| e.value.is_infinite())
            })
            .map(|p| (p.location, p.multiplicity))
            .collect()
    }

    /// Grid maximum over the closed disk; see [`sup_on_disk`].
    pub fn sup_on_disk(
        &self,
        center: Complex64,
        radius: f64,
        resolution: usize,
    ) -> Result<ExtendedValue> {
        if resolution < 8 {
            return Err(Error::InvalidParameter(format!(
                "resolution must be >= 8, got {resolution}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !self.unbounded_poles(center, radius).is_empty() {
            return Ok(ExtendedValue::Infinite);
        }
        let n = resolution;
        let mut best = self.at(center);
        let mut arg = (0.0, 0.0);
        for i in 1..=n {
            let rho = radius * i as f64 / n as f64;
            for j in 0..n {
                let theta = 2.0 * PI * j as f64 / n as f64;
                let v = self.at(center + Complex64::from_polar(rho, theta));
                if v > best {
                    best = v;
                    arg = (rho, theta);
                }
            }
        }
        for p in self.f.poles().inside(center, radius) {
            best = best.max(self.at(p.location));
        }

        // one local refinement around the grid maximum
        let (drho, dtheta) = (radius / n as f64, 2.0 * PI / n as f64);
        let (rho0, theta0) = arg;
        let (lo, hi) = ((rho0 - drho).max(0.0), (rho0 + drho).min(radius));
        let (tlo, thi) = if rho0 == 0.0 {
            (0.0, 2.0 * PI)
        } else {
            (theta0 - dtheta, theta0 + dtheta)
        };
        for i in 0..=n {
            let rho = lo + (hi - lo) * i as f64 / n as f64;
            for j in 0..=n {
                let theta = tlo + (thi - tlo) * j as f64 / n as f64;
                best = best.max(self.at(center + Complex64::from_polar(rho, theta)));
            }
        }
        Ok(best)
    }
}

/// `F_{k,alpha}(z)` for a single point.
pub fn marty_quotient(f: &RationalFunction, params: MartyParams, z: Complex64) -> ExtendedValue {
    MartyQuotient::new(f, params).at(z)
}

/// Maximum of the quotient over a `resolution x resolution` polar grid of the
/// closed disk plus one refinement pass around the grid maximum.
///
/// This is a lower bound for the true supremum, except that a pole in the
/// disk where the quotient blows up gives `Infinite` outright.
pub fn sup_on_disk(
    f: &RationalFunction,
    params: MartyParams,
    center: Complex64,
    radius: f64,
    resolution: usize,
) -> Result<ExtendedValue> {
    MartyQuotient::new(f, params).sup_on_disk(center, radius, resolution)
}

/// `max_{x >= 0} (1 + x^(k+1)) / (1 + x^alpha)` for `alpha > k + 1`: the
/// factor relating `F_{k,alpha}` to `F_{k,k+1}`.
pub fn reduction_constant(k: u32, alpha: f64) -> Result<f64> {
    let beta = k as f64 + 1.0;
    if alpha <= beta {
        return Err(Error::InvalidParameter(format!(
            "reduction constant needs alpha > k + 1 (alpha = {alpha}, k = {k})"
        )));
    }
    let phi = |t: f64| {
        // x = e^t
        let x = t.exp();
        (1.0 + x.powf(beta)) / (1.0 + x.powf(alpha))
    };
    // coarse scan in log x, then golden-section refinement
    let (mut best_t, mut best) = (f64::NEG_INFINITY, 1.0);
    let steps = 4000;
    for i in 0..=steps {
        let t = -20.0 + 40.0 * i as f64 / steps as f64;
        let v = phi(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    if best_t.is_finite() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (best_t - 0.01, best_t + 0.01);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if phi(c) > phi(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(phi(0.5 * (a + b)));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Polynomial, RootList};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn power_pole(p: u32) -> RationalFunction {
        RationalFunction::from_factors(
            c(1.0, 0.0),
            RootList::new(),
            RootList::from_pairs([(c(0.0, 0.0), p)], 0.0),
        )
    }

    fn identity() -> RationalFunction {
        RationalFunction::polynomial(Polynomial::from_real(&[0.0, 1.0]))
    }

    #[test]
    fn spherical_derivative_examples() {
        assert!((spherical_derivative(&identity(), c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((spherical_derivative(&power_pole(1), c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        let k = RationalFunction::constant(c(3.0, -1.0));
        assert_eq!(spherical_derivative(&k, c(0.2, 0.1)), 0.0);
        // double pole: (1/f)' vanishes there
        assert_eq!(spherical_derivative(&power_pole(2), c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn spherical_derivative_of_reciprocal_near_pole_is_limit() {
        // 1/z: f# = 1/(|z|^2 + 1), continuous at 0
        let f = power_pole(1);
        for e in 1..=6 {
            let z = c(10f64.powi(-e), 0.0);
            let expect = 1.0 / (z.norm_sqr() + 1.0);
            assert!((spherical_derivative(&f, z) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn quotient_vanishes_where_derivative_does() {
        let f = RationalFunction::polynomial(Polynomial::from_real(&[0.0, 0.0, 1.0]));
        let p = MartyParams::new(1, 2.0).unwrap();
        assert_eq!(
            marty_quotient(&f, p, c(0.0, 0.0)),
            ExtendedValue::Finite(0.0)
        );
    }

    #[test]
    fn equality_case_extension_for_reciprocal() {
        let f = power_pole(1);
        let p = MartyParams::new(1, 2.0).unwrap();
        let q = MartyQuotient::new(&f, p);
        let ext = q.at_pole(c(0.0, 0.0)).unwrap();
        assert!(ext.equality_case);
        assert_eq!(ext.value, ExtendedValue::Finite(1.0));
        // extrapolation oracle: values at 10^-1..10^-6 approach 1
        let vals: Vec<f64> = (1..=6)
            .map(|e| q.at(c(10f64.powi(-e), 0.0)).as_f64())
            .collect();
        assert!((vals[5] - 1.0).abs() < 1e-10);
        for w in vals.windows(2) {
            assert!((w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
        }
    }

    #[test]
    fn extension_trichotomy() {
        let p = MartyParams::new(2, 1.5).unwrap();
        let f3 = power_pole(3);
        assert!(MartyQuotient::new(&f3, p).at(c(0.0, 0.0)).is_infinite());
        let f5 = power_pole(5);
        assert_eq!(
            MartyQuotient::new(&f5, p).at(c(0.0, 0.0)),
            ExtendedValue::Finite(0.0)
        );
        let f4 = power_pole(4);
        let ext = MartyQuotient::new(&f4, p).at_pole(c(0.0, 0.0)).unwrap();
        assert!(ext.equality_case);
        assert!((ext.value.as_f64() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn power_pole_asymptotic_constant() {
        // |z|^{-(p+k)} C / (1 + |z|^{-alpha p}) ~ C |z|^{(alpha-1)p - k}
        let (p, k, alpha) = (3u32, 2u32, 1.5);
        let f = power_pole(p);
        let q = MartyQuotient::new(&f, MartyParams::new(k, alpha).unwrap());
        let cst = rising_factorial(p, k);
        let z = c(1e-5, 0.0);
        let predicted = cst * z.norm().powf((alpha - 1.0) * p as f64 - k as f64);
        assert!((q.at(z).as_f64() / predicted - 1.0).abs() < 1e-6);
    }

    #[test]
    fn required_multiplicity_rounds_up() {
        assert_eq!(
            MartyParams::new(2, 1.5)
                .unwrap()
                .required_pole_multiplicity(),
            Some(4)
        );
        assert_eq!(
            MartyParams::new(1, 1.3)
                .unwrap()
                .required_pole_multiplicity(),
            Some(4)
        );
        assert_eq!(
            MartyParams::new(3, 5.0)
                .unwrap()
                .required_pole_multiplicity(),
            Some(1)
        );
        assert_eq!(
            MartyParams::new(1, 1.0)
                .unwrap()
                .required_pole_multiplicity(),
            None
        );
    }

    #[test]
    fn sup_examples() {
        let p = MartyParams::new(1, 2.0).unwrap();
        let k = RationalFunction::constant(c(2.0, 0.0));
        assert_eq!(
            sup_on_disk(&k, p, c(0.0, 0.0), 1.0, 16).unwrap(),
            ExtendedValue::Finite(0.0)
        );
        let s = sup_on_disk(&identity(), p, c(0.0, 0.0), 1.0, 32).unwrap();
        assert_eq!(s, ExtendedValue::Finite(1.0));
        let p = MartyParams::new(2, 1.5).unwrap();
        assert!(sup_on_disk(&power_pole(3), p, c(0.0, 0.0), 0.5, 16)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn sup_rejects_coarse_grid() {
        let p = MartyParams::new(1, 2.0).unwrap();
        assert!(sup_on_disk(&identity(), p, c(0.0, 0.0), 1.0, 4).is_err());
    }

    #[test]
    fn reduction_constant_bounds_ratio() {
        let b = reduction_constant(1, 3.0).unwrap();
        // (1 + x^2)/(1 + x^3): brute force over a fine grid
        let brute = (0..200_000)
            .map(|i| {
                let x = i as f64 * 1e-4;
                (1.0 + x * x) / (1.0 + x * x * x)
            })
            .fold(0.0, f64::max);
        assert!(b >= brute - 1e-12);
        assert!(b - brute < 1e-6);
        assert!(reduction_constant(2, 3.0).is_err());
    }
}
