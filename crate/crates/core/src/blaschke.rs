//! Blaschke-type factors on the disk `|z| < s`, the splitting `h = g * B`
//! that removes the zeros of `g` inside `|z| < s`, the Poisson representation
//! of `(h'/h)^(k-1)`, the nearest-zero reduction and the threshold `x0`.
//!
//! All products are formed on factor lists, so a zero `a` of `g` and the pole
//! of `G_a` at `a` cancel exactly instead of meeting as `0 * inf`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result, Singularity};
use crate::marty::rising_factorial;
use crate::poly::{RationalFunction, RootList, Value, CLUSTER_RADIUS};
use crate::quadrature::{periodic_mean, QuadratureSpec};

/// Default number of points on certification circles.
pub const BOUNDARY_GRID: usize = 512;

/// Zeros of `g` closer than this (relative to `s`) to `|z| = s` are rejected.
pub const SPLIT_CLEARANCE: f64 = 1e-3;

fn factorial(k: u32) -> f64 {
    rising_factorial(1, k)
}

/// `r < s < R` with `s` the midpoint of `r` and `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskGeometry {
    r: f64,
    s: f64,
    #[serde(rename = "R")]
    big_r: f64,
}

impl DiskGeometry {
    pub fn new(r: f64, big_r: f64) -> Result<Self> {
        if !(0.0 < r && r < big_r && big_r < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < r < R < 1, got r = {r}, R = {big_r}"
            )));
        }
        Ok(Self {
            r,
            s: 0.5 * (r + big_r),
            big_r,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn big_r(&self) -> f64 {
        self.big_r
    }

    /// `s - r`, which equals `R - s`.
    pub fn gap(&self) -> f64 {
        self.s - self.r
    }
}

/// `G_a(z) = (s^2 - conj(a) z) / (s (z - a))`, raised to `multiplicity` in
/// products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlaschkeFactor {
    pub a: Complex64,
    pub s: f64,
    pub multiplicity: u32,
}

impl BlaschkeFactor {
    pub fn new(a: Complex64, s: f64, multiplicity: u32) -> Result<Self> {
        if !(s > 0.0) || a.norm() >= s {
            return Err(Error::InvalidParameter(format!(
                "factor center {a} must satisfy |a| < s = {s}"
            )));
        }
        if multiplicity == 0 {
            return Err(Error::InvalidParameter(
                "factor multiplicity must be positive".into(),
            ));
        }
        Ok(Self { a, s, multiplicity })
    }

    /// The zero `s^2 / conj(a)` of `G_a`, absent for `a = 0`.
    pub fn reflected(&self) -> Option<Complex64> {
        (self.a != Complex64::new(0.0, 0.0)).then(|| self.s * self.s / self.a.conj())
    }

    /// Constant `c` with `G_a(z) = c (z - a*) / (z - a)`, or `G_0 = s / z`.
    fn lead(&self) -> Complex64 {
        match self.reflected() {
            Some(_) => -self.a.conj() / self.s,
            None => Complex64::new(self.s, 0.0),
        }
    }

    /// `G_a^multiplicity` as a rational function.
    pub fn to_rational(&self) -> RationalFunction {
        let m = self.multiplicity;
        let zeros = RootList::from_pairs(self.reflected().map(|w| (w, m)), 0.0);
        let poles = RootList::from_pairs([(self.a, m)], 0.0);
        RationalFunction::from_factors(self.lead().powu(m), zeros, poles)
    }
}

/// `G_a(z)` (a single power) by the defining formula.
pub fn factor_eval(factor: &BlaschkeFactor, z: Complex64) -> Value {
    if z == factor.a {
        return Value::Pole;
    }
    let s = factor.s;
    Value::Finite((s * s - factor.a.conj() * z) / (s * (z - factor.a)))
}

/// `(G_a'/G_a)^(k-1)(z) = (k-1)! (-conj(a)^k/(s^2 - conj(a) z)^k + (-1)^k/(z - a)^k)`
/// for a single power of `G_a`.
pub fn factor_log_derivative(factor: &BlaschkeFactor, k: u32, z: Complex64) -> Value {
    assert!(k >= 1, "derivative order k must be positive");
    let s2 = factor.s * factor.s;
    let abar = factor.a.conj();
    let reflected_den = s2 - abar * z;
    let pole_den = z - factor.a;
    let zero = Complex64::new(0.0, 0.0);
    if pole_den == zero || (abar != zero && reflected_den == zero) {
        return Value::Pole;
    }
    let k_i = k as i32;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let reflected_term = if abar == zero {
        zero
    } else {
        -abar.powi(k_i) / reflected_den.powi(k_i)
    };
    Value::Finite(factorial(k - 1) * (reflected_term + sign / pole_den.powi(k_i)))
}

/// `(k-1)! (1/(s-r)^k + 1/|z - a|^k)`, the bound on `|(G_a'/G_a)^(k-1)(z)|`
/// for `|z| = r`.
pub fn factor_bound(factor: &BlaschkeFactor, k: u32, geom: &DiskGeometry, z: Complex64) -> f64 {
    let k_i = k as i32;
    factorial(k - 1) * (geom.gap().powi(-k_i) + (z - factor.a).norm().powi(-k_i))
}

/// `g` split as `g = h / B` with `B = prod G_{a_j}^{m_j}` over the zeros of
/// `g` in `|z| < s`.
#[derive(Debug, Clone)]
pub struct BlaschkeSplit {
    pub g: RationalFunction,
    pub factors: Vec<BlaschkeFactor>,
    pub b: RationalFunction,
    /// `g * B`, zero-free on `|z| <= s`.
    pub h: RationalFunction,
    pub geom: DiskGeometry,
}

impl BlaschkeSplit {
    /// `n(s, 0, g)`: number of zeros of `g` in `|z| < s` with multiplicity.
    pub fn zero_count(&self) -> u32 {
        self.factors.iter().map(|f| f.multiplicity).sum()
    }
}

fn check_disk_holomorphic(g: &RationalFunction, radius: f64) -> Result<()> {
    match g.poles().iter().find(|p| p.location.norm() <= radius) {
        Some(p) => Err(Error::Precondition(format!(
            "g has a pole of order {} at {} inside |z| <= {radius}",
            p.multiplicity, p.location
        ))),
        None => Ok(()),
    }
}

/// Build `B` from the zeros of `g` inside `|z| < s` and form `h = g * B` on
/// factor lists.
pub fn build_split(g: &RationalFunction, geom: DiskGeometry) -> Result<BlaschkeSplit> {
    if g.is_zero() {
        return Err(Error::Precondition("g is identically zero".into()));
    }
    check_disk_holomorphic(g, geom.big_r())?;
    let s = geom.s();
    let zeros = g.zeros()?;
    let clearance = SPLIT_CLEARANCE * s;
    if let Some(z) = zeros
        .iter()
        .find(|z| (z.location.norm() - s).abs() <= clearance)
    {
        return Err(Error::Clearance {
            kind: Singularity::Zero,
            location: z.location,
            radius: s,
            clearance,
        });
    }
    let factors = zeros
        .iter()
        .filter(|z| z.location.norm() < s)
        .map(|z| BlaschkeFactor::new(z.location, s, z.multiplicity))
        .collect::<Result<Vec<_>>>()?;
    let b = product(&factors);

    let mut h_zeros = RootList::new();
    for z in zeros.iter().filter(|z| z.location.norm() > s) {
        h_zeros.add(z.location, z.multiplicity, CLUSTER_RADIUS);
    }
    let mut lead = g.leading();
    for f in &factors {
        lead *= f.lead().powu(f.multiplicity);
        if let Some(w) = f.reflected() {
            h_zeros.add(w, f.multiplicity, CLUSTER_RADIUS);
        }
    }
    let h = RationalFunction::from_factors(lead, h_zeros, g.poles().clone());
    Ok(BlaschkeSplit {
        g: RationalFunction::from_factors(g.leading(), zeros, g.poles().clone()),
        factors,
        b,
        h,
        geom,
    })
}

/// `prod G_a^m` over the given factors as one rational function.
pub fn product(factors: &[BlaschkeFactor]) -> RationalFunction {
    let mut zeros = RootList::new();
    let mut poles = RootList::new();
    let mut lead = Complex64::new(1.0, 0.0);
    for f in factors {
        lead *= f.lead().powu(f.multiplicity);
        if let Some(w) = f.reflected() {
            zeros.add(w, f.multiplicity, CLUSTER_RADIUS);
        }
        poles.add(f.a, f.multiplicity, CLUSTER_RADIUS);
    }
    RationalFunction::from_factors(lead, zeros, poles)
}

/// `max_t | |B(s e^{it})| - 1 |` over `points` equally spaced angles.
pub fn boundary_modulus_deviation(split: &BlaschkeSplit, points: usize) -> f64 {
    let s = split.geom.s();
    circle(s, points)
        .map(|w| match split.b.evaluate(w) {
            Value::Finite(v) => (v.norm() - 1.0).abs(),
            Value::Pole => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// `points` equally spaced points on `|z| = radius`.
pub fn circle(radius: f64, points: usize) -> impl Iterator<Item = Complex64> {
    (0..points).map(move |j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / points as f64))
}

/// Quadrature and exact values of `(h'/h)^(k-1)(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonLogDerivative {
    pub quadrature: Complex64,
    pub exact: Complex64,
    pub error_estimate: f64,
    pub nodes: usize,
}

impl PoissonLogDerivative {
    pub fn relative_difference(&self) -> f64 {
        (self.quadrature - self.exact).norm() / self.exact.norm().max(1.0)
    }
}

/// `(h'/h)^(k-1)(z) = (k!/2pi) int log|h(s e^{it})| 2 s e^{it} / (s e^{it} - z)^{k+1} dt`,
/// alongside the value from exact differentiation of `h'/h`.
pub fn poisson_log_derivative(
    split: &BlaschkeSplit,
    k: u32,
    z: Complex64,
    spec: &QuadratureSpec,
) -> Result<PoissonLogDerivative> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "derivative order k must be positive".into(),
        ));
    }
    let s = split.geom.s();
    if z.norm() > split.geom.r() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "point {z} lies outside |z| <= r = {}",
            split.geom.r()
        )));
    }
    let h = &split.h;
    if let Some(a) = h.zeros()?.iter().find(|a| a.location.norm() <= s) {
        return Err(Error::Precondition(format!(
            "h vanishes at {} inside |z| <= s",
            a.location
        )));
    }
    let kf = factorial(k);
    let q = periodic_mean(
        |t| {
            let w = Complex64::from_polar(s, t);
            2.0 * w * h.log_abs(w) / (w - z).powi(k as i32 + 1)
        },
        spec,
        true,
    )?;
    let exact = h.log_derivative()?.derivative(k - 1).value(z)?;
    Ok(PoissonLogDerivative {
        quadrature: q.value * kf,
        exact,
        error_estimate: q.error * kf,
        nodes: q.nodes,
    })
}

/// `-2 k! / (s-r)^{k+1} * log|h(0)|`, the bound on `|(h'/h)^(k-1)|` over
/// `|z| <= r` valid when `|h| <= x0 < 1` on `|z| <= s`.
pub fn poisson_bound(k: u32, geom: &DiskGeometry, log_abs_h0: f64) -> f64 {
    -2.0 * factorial(k) / geom.gap().powi(k as i32 + 1) * log_abs_h0
}

/// `(k-1)! (n(s,0,g)/(s-r)^k + sum m_j/|z - a_j|^k)`, the bound on
/// `|(B'/B)^(k-1)(z)|` for `|z| = r`.
pub fn product_log_derivative_bound(
    factors: &[BlaschkeFactor],
    k: u32,
    geom: &DiskGeometry,
    z: Complex64,
) -> f64 {
    let k_i = k as i32;
    let n: u32 = factors.iter().map(|f| f.multiplicity).sum();
    let near: f64 = factors
        .iter()
        .map(|f| f.multiplicity as f64 / (z - f.a).norm().powi(k_i))
        .sum();
    factorial(k - 1) * (n as f64 / geom.gap().powi(k_i) + near)
}

/// Outcome of removing `m` copies of the zero nearest to `z0` from `B`.
#[derive(Debug, Clone)]
pub struct NearestZeroReduction {
    /// Index of the chosen zero in the split's factor list.
    pub j_star: usize,
    pub a_star: Complex64,
    /// Factors of `B_*`; the chosen zero keeps multiplicity `m_* - m`.
    pub factors: Vec<BlaschkeFactor>,
    pub b_star: RationalFunction,
    /// `g * G_{a_*}^m`, equal to `h / B_*`.
    pub g_star: RationalFunction,
    pub b_star_at_z0: f64,
    /// `max |g_*|` over the boundary grid on `|z| = R`.
    pub boundary_max: f64,
}

impl NearestZeroReduction {
    /// Whether the boundary grid certifies `|g_*| <= x0` on `|z| <= R`.
    pub fn certifies(&self, x0: f64) -> bool {
        self.boundary_max <= x0
    }
}

/// Split `m` copies of the zero nearest to `z0` (ties go to the earlier
/// factor) off `B`. Zeros of `g` in the unit disk must have multiplicity at
/// least `m`.
pub fn nearest_zero_reduction(
    split: &BlaschkeSplit,
    z0: Complex64,
    m: u32,
) -> Result<NearestZeroReduction> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    match split.g.evaluate(z0) {
        Value::Finite(v) if v != Complex64::new(0.0, 0.0) => {}
        _ => {
            return Err(Error::Precondition(format!(
                "g must be finite and nonzero at {z0}"
            )))
        }
    }
    for z in split.g.zeros()?.iter().filter(|z| z.location.norm() < 1.0) {
        if z.multiplicity < m {
            return Err(Error::Multiplicity {
                index: 0,
                kind: Singularity::Zero,
                location: z.location,
                multiplicity: z.multiplicity,
                required: m,
            });
        }
    }
    let mut j_star = None;
    let mut best = f64::INFINITY;
    for (j, f) in split.factors.iter().enumerate() {
        let d = (z0 - f.a).norm();
        if d < best {
            best = d;
            j_star = Some(j);
        }
    }
    let j_star = j_star.ok_or_else(|| {
        Error::Precondition(format!("g has no zero in |z| < s = {}", split.geom.s()))
    })?;
    let chosen = split.factors[j_star];
    let factors: Vec<_> = split
        .factors
        .iter()
        .enumerate()
        .filter_map(|(j, f)| {
            if j != j_star {
                return Some(*f);
            }
            (f.multiplicity > m).then(|| BlaschkeFactor {
                multiplicity: f.multiplicity - m,
                ..*f
            })
        })
        .collect();
    let b_star = product(&factors);
    let removed = BlaschkeFactor {
        multiplicity: m,
        ..chosen
    };
    let g_star = split.g.mul(&removed.to_rational());
    let b_star_at_z0 = b_star.value(z0)?.norm();
    let boundary_max = circle(split.geom.big_r(), BOUNDARY_GRID)
        .map(|w| g_star.value(w).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(NearestZeroReduction {
        j_star,
        a_star: chosen.a,
        factors,
        b_star,
        g_star,
        b_star_at_z0,
        boundary_max,
    })
}

/// Largest `x0 <= 1/e` such that `y -> H(x, y)` is non-increasing on
/// `[1, inf)` for every `x <= x0`, where
/// `H(x, y) = (x/y)^k (m + log(y/x)/(s-r)^2)^{2m}`.
///
/// In `t = log(y/x)` the derivative of `log H` is `-k + 2mc/(m + ct)` with
/// `c = 1/(s-r)^2`, which is decreasing in `t`; so monotonicity on the whole
/// half-line is decided at `y = 1`, giving `log(1/x) >= m (2/k - (s-r)^2)`.
pub fn x0_threshold(k: u32, m: u32, geom: &DiskGeometry) -> f64 {
    let d2 = geom.gap() * geom.gap();
    let binding = (-(m as f64) * (2.0 / k as f64 - d2)).exp();
    binding.min((-1.0f64).exp())
}

/// `log H(x, y)`.
pub fn log_h(k: u32, m: u32, geom: &DiskGeometry, x: f64, y: f64) -> f64 {
    let c = 1.0 / (geom.gap() * geom.gap());
    let t = (y / x).ln();
    -(k as f64) * t + 2.0 * m as f64 * (m as f64 + c * t).ln()
}

/// Sample points of `[1, 100]`: geometrically refined near `y = 1`, then
/// uniform.
pub fn scan_grid() -> Vec<f64> {
    let mut ys = vec![1.0];
    let mut e = -12.0;
    while e < 0.0 {
        ys.push(1.0 + 10f64.powf(e));
        e += 0.125;
    }
    let last = *ys.last().unwrap();
    ys.extend(
        (1..=1000)
            .map(|j| 1.0 + 99.0 * j as f64 / 1000.0)
            .filter(|&y| y > last),
    );
    ys
}

/// Whether `y -> H(x, y)` is non-increasing on the sample points of
/// [`scan_grid`]. Differences of `log H` are formed with `log1p` so that the
/// steps just above `y = 1` are resolved.
pub fn scan_nonincreasing(k: u32, m: u32, geom: &DiskGeometry, x: f64) -> bool {
    let c = 1.0 / (geom.gap() * geom.gap());
    let (kf, mf) = (k as f64, m as f64);
    scan_grid().windows(2).all(|w| {
        let (y, step) = (w[0], w[1] - w[0]);
        let dt = (step / y).ln_1p();
        let base = mf + c * (y / x).ln();
        -kf * dt + 2.0 * mf * (c * dt / base).ln_1p() <= 0.0
    })
}

/// Threshold located by bisection on [`scan_nonincreasing`] over
/// `(0, 1/e]`.
pub fn x0_scan(k: u32, m: u32, geom: &DiskGeometry) -> f64 {
    let cap = (-1.0f64).exp();
    if scan_nonincreasing(k, m, geom, cap) {
        return cap;
    }
    let mut hi = cap;
    let mut lo = 0.5 * cap;
    while !scan_nonincreasing(k, m, geom, lo) {
        hi = lo;
        lo *= 0.5;
        assert!(lo > f64::MIN_POSITIVE, "monotonicity scan never passes");
    }
    while (hi - lo) > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if scan_nonincreasing(k, m, geom, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geom() -> DiskGeometry {
        DiskGeometry::new(0.4, 0.8).unwrap()
    }

    #[test]
    fn geometry_uses_midpoint() {
        let g = geom();
        assert!((g.s() - 0.6).abs() < 1e-15);
        assert!(DiskGeometry::new(0.5, 0.5).is_err());
        assert!(DiskGeometry::new(0.5, 1.0).is_err());
    }

    #[test]
    fn factor_at_origin_is_s_over_z() {
        let f = BlaschkeFactor::new(c(0.0, 0.0), 0.6, 1).unwrap();
        let z = c(0.3, -0.2);
        let v = factor_eval(&f, z).finite().unwrap();
        assert!((v - 0.6 / z).norm() < 1e-15);
        assert!(factor_eval(&f, c(0.0, 0.0)).is_pole());
    }

    #[test]
    fn factor_value_cross_check() {
        let f = BlaschkeFactor::new(c(0.3, 0.0), 0.6, 1).unwrap();
        // (0.36 - 0.15) / (0.6 * 0.2)
        let v = factor_eval(&f, c(0.5, 0.0)).finite().unwrap();
        assert!((v - c(1.75, 0.0)).norm() < 1e-14);
        let r = f.to_rational().value(c(0.5, 0.0)).unwrap();
        assert!((r - v).norm() < 1e-14);
    }

    #[test]
    fn factor_is_unimodular_on_circle() {
        let f = BlaschkeFactor::new(c(0.2, -0.35), 0.6, 1).unwrap();
        for w in circle(0.6, 64) {
            let v = factor_eval(&f, w).finite().unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn first_order_log_derivative() {
        let f = BlaschkeFactor::new(c(0.1, 0.25), 0.6, 1).unwrap();
        let z = c(-0.2, 0.1);
        let got = factor_log_derivative(&f, 1, z).finite().unwrap();
        let abar = f.a.conj();
        let want = -abar / (0.36 - abar * z) - 1.0 / (z - f.a);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn split_of_zero_free_function_is_trivial() {
        let g = RationalFunction::polynomial(Polynomial::from_real(&[-2.0, 1.0]));
        let split = build_split(&g, geom()).unwrap();
        assert!(split.factors.is_empty());
        assert!(split.b.is_constant());
        let z = c(0.3, 0.1);
        assert!((split.h.value(z).unwrap() - g.value(z).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn split_of_power_has_constant_modulus() {
        let zeros = RootList::from_pairs([(c(0.0, 0.0), 3)], 0.0);
        let g = RationalFunction::from_factors(c(1.0, 0.0), zeros, RootList::new());
        let split = build_split(&g, geom()).unwrap();
        // z^3 (0.6 / z)^3 = 0.216
        assert!(split.h.is_constant());
        assert!((split.h.value(c(0.1, 0.2)).unwrap() - c(0.216, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn split_rejects_zero_on_circle_and_poles_in_disk() {
        let zeros = RootList::from_pairs([(c(0.6, 0.0), 1)], 0.0);
        let g = RationalFunction::from_factors(c(1.0, 0.0), zeros, RootList::new());
        assert!(matches!(
            build_split(&g, geom()),
            Err(Error::Clearance { .. })
        ));
        let poles = RootList::from_pairs([(c(0.7, 0.0), 1)], 0.0);
        let g = RationalFunction::from_factors(c(1.0, 0.0), RootList::new(), poles);
        assert!(matches!(
            build_split(&g, geom()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn poisson_representation_of_linear_factor() {
        let g = RationalFunction::polynomial(Polynomial::from_real(&[-2.0, 1.0]));
        let geom = DiskGeometry::new(0.25, 0.75).unwrap();
        let split = build_split(&g, geom).unwrap();
        let v = poisson_log_derivative(&split, 1, c(0.0, 0.0), &QuadratureSpec::default()).unwrap();
        assert!((v.quadrature - c(-0.5, 0.0)).norm() < 1e-9);
        assert!((v.exact - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn poisson_representation_of_constant_is_zero() {
        let g = RationalFunction::constant(c(0.2, 0.1));
        let split = build_split(&g, geom()).unwrap();
        for k in 1..4 {
            let v =
                poisson_log_derivative(&split, k, c(0.1, 0.1), &QuadratureSpec::default()).unwrap();
            assert!(v.quadrature.norm() < 1e-12);
            assert_eq!(v.exact, c(0.0, 0.0));
        }
    }

    #[test]
    fn nearest_zero_is_selected() {
        let zeros = RootList::from_pairs([(c(0.1, 0.0), 2), (c(0.4, 0.0), 2)], 0.0);
        let g = RationalFunction::from_factors(c(0.01, 0.0), zeros, RootList::new());
        let split = build_split(&g, DiskGeometry::new(0.5, 0.9).unwrap()).unwrap();
        let red = nearest_zero_reduction(&split, c(0.0, 0.0), 2).unwrap();
        assert_eq!(red.a_star, c(0.1, 0.0));
        assert_eq!(red.factors.len(), 1);
        assert!(red.b_star_at_z0 >= 1.0);
    }

    #[test]
    fn single_zero_reduction_is_h() {
        let zeros = RootList::from_pairs([(c(0.2, 0.1), 2)], 0.0);
        let g = RationalFunction::from_factors(c(0.05, 0.0), zeros, RootList::new());
        let split = build_split(&g, geom()).unwrap();
        let red = nearest_zero_reduction(&split, c(-0.1, 0.0), 2).unwrap();
        assert!(red.factors.is_empty());
        let z = c(0.3, -0.3);
        assert!((red.g_star.value(z).unwrap() - split.h.value(z).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn reduction_checks_multiplicity() {
        let zeros = RootList::from_pairs([(c(0.2, 0.1), 1)], 0.0);
        let g = RationalFunction::from_factors(c(0.05, 0.0), zeros, RootList::new());
        let split = build_split(&g, geom()).unwrap();
        assert!(matches!(
            nearest_zero_reduction(&split, c(0.0, 0.0), 2),
            Err(Error::Multiplicity { .. })
        ));
    }

    #[test]
    fn threshold_for_unit_parameters() {
        let geom = DiskGeometry::new(0.4, 0.6).unwrap();
        let x0 = x0_threshold(1, 1, &geom);
        assert!((x0 - (-1.99f64).exp()).abs() < 1e-15);
        assert!((x0_scan(1, 1, &geom) - x0).abs() < 1e-8);
        assert!(!scan_nonincreasing(1, 1, &geom, 1.05 * x0));
    }

    #[test]
    fn threshold_is_capped() {
        // m (2/k - (s-r)^2) < 1 keeps the cap 1/e
        let geom = DiskGeometry::new(0.1, 0.9).unwrap();
        let x0 = x0_threshold(3, 1, &geom);
        assert_eq!(x0, (-1.0f64).exp());
        assert_eq!(x0_scan(3, 1, &geom), x0);
    }
}
