//! Scenario checks over indexed families of rational functions: decay of the
//! derivative quotients `(g^(k))^m / g^(m-k)` and `(f^(k))^p / f^(p+k)`,
//! boundedness of `F_{k,alpha}`, the exponents of the extremal examples, the
//! chain of pointwise estimates and Harnack's inequality for `log(1/|h|)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::blaschke::{build_split, x0_threshold, DiskGeometry, BOUNDARY_GRID};
use crate::corpus::circle_max;
use crate::error::{Error, Result, Singularity};
use crate::logderiv::DerivativeTower;
use crate::marty::{rising_factorial, ExtendedValue, MartyParams, MartyQuotient};
use crate::poly::{RationalFunction, RootList};

/// Closed disk `|z - center| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    #[serde(serialize_with = "serialize_complex")]
    pub center: Complex64,
    pub radius: f64,
}

pub(crate) fn serialize_complex<S: Serializer>(
    z: &Complex64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), radius)
    }

    /// Closed disk membership with a relative slack of `1e-12`.
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius * (1.0 + 1e-12)
    }

    /// Center plus an `n x n` polar grid reaching the boundary.
    pub fn grid(&self, n: usize) -> Vec<Complex64> {
        let mut pts = vec![self.center];
        for i in 1..=n {
            let rho = self.radius * i as f64 / n as f64;
            for j in 0..n {
                pts.push(self.center + Complex64::from_polar(rho, 2.0 * PI * j as f64 / n as f64));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `1/z^p` for every index.
    PowerPole { p: u32 },
    /// `(z - base)^n`.
    ShiftedPower { base: Complex64 },
    /// `z^(m-1) / n`.
    ScaledZero { m: u32 },
    /// `n / z^(p-1)`.
    ScaledPole { p: u32 },
    /// `n^scale_exponent * (z - center)^exponent`.
    Monomial {
        exponent: i32,
        scale_exponent: i32,
        center: Complex64,
    },
    /// One function per entry of the index range.
    Custom(Vec<RationalFunction>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub index_range: Vec<u64>,
}

fn monomial(lead: f64, center: Complex64, exponent: i64) -> RationalFunction {
    let lead = Complex64::new(lead, 0.0);
    let list = |e: i64| RootList::from_pairs((e > 0).then_some((center, e as u32)), 0.0);
    RationalFunction::from_factors(lead, list(exponent), list(-exponent))
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, index_range: Vec<u64>) -> Result<Self> {
        if index_range.is_empty() {
            return Err(Error::InvalidParameter("index range is empty".into()));
        }
        if index_range.contains(&0) {
            return Err(Error::InvalidParameter("indices must be positive".into()));
        }
        match &kind {
            FamilyKind::PowerPole { p } | FamilyKind::ScaledPole { p } if *p == 0 => {
                return Err(Error::InvalidParameter(
                    "pole order p must be positive".into(),
                ));
            }
            FamilyKind::ScaledZero { m } if *m == 0 => {
                return Err(Error::InvalidParameter(
                    "multiplicity m must be positive".into(),
                ));
            }
            FamilyKind::Custom(fs) if fs.len() != index_range.len() => {
                return Err(Error::InvalidParameter(format!(
                    "custom family has {} functions for {} indices",
                    fs.len(),
                    index_range.len()
                )));
            }
            _ => {}
        }
        Ok(Self { kind, index_range })
    }

    /// The member at position `i` of the index range.
    pub fn member(&self, i: usize) -> RationalFunction {
        let n = self.index_range[i];
        let nf = n as f64;
        let origin = Complex64::new(0.0, 0.0);
        match &self.kind {
            FamilyKind::PowerPole { p } => monomial(1.0, origin, -(*p as i64)),
            FamilyKind::ShiftedPower { base } => monomial(1.0, *base, n as i64),
            FamilyKind::ScaledZero { m } => monomial(1.0 / nf, origin, *m as i64 - 1),
            FamilyKind::ScaledPole { p } => monomial(nf, origin, 1 - *p as i64),
            FamilyKind::Monomial {
                exponent,
                scale_exponent,
                center,
            } => monomial(nf.powi(*scale_exponent), *center, *exponent as i64),
            FamilyKind::Custom(fs) => fs[i].clone(),
        }
    }

    pub fn members(&self) -> impl Iterator<Item = (u64, RationalFunction)> + '_ {
        (0..self.index_range.len()).map(|i| (self.index_range[i], self.member(i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConvergesToZero,
    Diverges,
    Inconclusive,
}

/// Finite-index surrogates for the limits `=> 0` and `-> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictRule {
    /// Sup-norm at the largest index below this counts as convergence to 0.
    pub zero_threshold: f64,
    /// Minimum modulus at the largest index above this counts as divergence.
    pub infinity_threshold: f64,
    /// Fitted log-log slopes within this of 0 are treated as flat.
    pub slope_tolerance: f64,
    pub min_fit_points: usize,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self {
            zero_threshold: 1e-8,
            infinity_threshold: 1e6,
            slope_tolerance: 0.01,
            min_fit_points: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnessConfig {
    /// Polar grid resolution for sup and min norms.
    pub resolution: usize,
    pub rule: VerdictRule,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            rule: VerdictRule::default(),
        }
    }
}

/// Least-squares slope of `log y` against `log x` over the pairs with
/// positive finite `y`; `None` with fewer than `min_points` such pairs.
pub fn log_log_slope(xs: &[f64], ys: &[f64], min_points: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < min_points.max(2) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Sup-norm and growth verdict of a derivative quotient over the indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub quantity: String,
    pub indices: Vec<u64>,
    pub sup_norms: Vec<f64>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
    /// `sup |g_n|` (for the zero-multiplicity check) or `min |f_n|` (for the
    /// pole-multiplicity check) on the grid.
    pub family_norms: Vec<f64>,
    pub family_verdict: Verdict,
}

fn decay_verdict(indices: &[u64], values: &[f64], rule: &VerdictRule) -> (Option<f64>, Verdict) {
    let xs: Vec<f64> = indices.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&xs, values, rule.min_fit_points);
    let last = values.last().copied().unwrap_or(f64::NAN);
    let verdict = if last < rule.zero_threshold {
        Verdict::ConvergesToZero
    } else {
        match slope {
            Some(s) if s < -rule.slope_tolerance => Verdict::ConvergesToZero,
            Some(s) if s > rule.slope_tolerance => Verdict::Diverges,
            _ => Verdict::Inconclusive,
        }
    };
    (slope, verdict)
}

fn growth_verdict(indices: &[u64], values: &[f64], rule: &VerdictRule) -> Verdict {
    let last = values.last().copied().unwrap_or(f64::NAN);
    if last > rule.infinity_threshold {
        return Verdict::Diverges;
    }
    let xs: Vec<f64> = indices.iter().map(|&n| n as f64).collect();
    match log_log_slope(&xs, values, rule.min_fit_points) {
        Some(s) if s > rule.slope_tolerance => Verdict::Diverges,
        Some(s) if s < -rule.slope_tolerance => Verdict::ConvergesToZero,
        _ => Verdict::Inconclusive,
    }
}

fn check_pole_free(q: &RationalFunction, disk: &Disk, index: u64) -> Result<()> {
    match q.poles().iter().find(|p| disk.contains(p.location)) {
        Some(p) => Err(Error::PoleInDisk {
            index,
            location: p.location,
            order: p.multiplicity,
        }),
        None => Ok(()),
    }
}

fn check_multiplicity(
    list: &RootList,
    kind: Singularity,
    disk: &Disk,
    required: u32,
    index: u64,
) -> Result<()> {
    match list
        .iter()
        .find(|e| disk.contains(e.location) && e.multiplicity < required)
    {
        Some(e) => Err(Error::Multiplicity {
            index,
            kind,
            location: e.location,
            multiplicity: e.multiplicity,
            required,
        }),
        None => Ok(()),
    }
}

fn grid_sup(q: &RationalFunction, grid: &[Complex64]) -> Result<f64> {
    grid.iter()
        .map(|&z| q.value(z).map(|v| v.norm()))
        .try_fold(0.0, |acc, v| Ok(f64::max(acc, v?)))
}

fn grid_min(f: &RationalFunction, grid: &[Complex64]) -> f64 {
    grid.iter()
        .filter_map(|&z| f.evaluate(z).finite())
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min)
}

/// `(g^(k))^m / g^(m-k)` as a reduced rational (for `m <= k` the product
/// `(g^(k))^m g^(k-m)`).
pub fn zero_quotient(g: &RationalFunction, k: u32, m: u32) -> Result<RationalFunction> {
    let top = g.derivative(k).pow(m);
    if m > k {
        top.div(&g.pow(m - k))
    } else {
        Ok(top.mul(&g.pow(k - m)))
    }
}

/// `(f^(k))^p / f^(p+k)` as a reduced rational.
pub fn pole_quotient(f: &RationalFunction, k: u32, p: u32) -> Result<RationalFunction> {
    let top = f.derivative(k).pow(p);
    if top.is_zero() {
        return Ok(top);
    }
    Ok(top.mul(&f.recip()?.pow(p + k)))
}

/// `g^k [(g'/g)^(k-1)]^m` as a reduced rational.
pub fn log_derivative_quotient(g: &RationalFunction, k: u32, m: u32) -> Result<RationalFunction> {
    let l = g.log_derivative()?.derivative(k - 1);
    Ok(g.pow(k).mul(&l.pow(m)))
}

/// Pointwise evaluation of a derivative quotient `(h^(k))^e / h^d`.
///
/// Values come from the Taylor data of `h`, which stays accurate where the
/// expanded reduced form of the quotient does not; the reduced form is used
/// only at points within `SINGULAR_GUARD` of a zero or pole of `h`, where the
/// pointwise formula is indeterminate.
#[derive(Debug, Clone)]
pub struct QuotientEvaluator {
    tower: DerivativeTower,
    reduced: RationalFunction,
    singular: Vec<Complex64>,
    k: usize,
    power: u32,
    /// Exponent of `h` itself (negative in the denominator).
    base_exponent: i32,
}

const SINGULAR_GUARD: f64 = 1e-6;

impl QuotientEvaluator {
    fn build(
        h: &RationalFunction,
        k: u32,
        power: u32,
        base_exponent: i32,
        reduced: RationalFunction,
    ) -> Result<Self> {
        let (zeros, poles) = h.zeros_poles()?;
        Ok(Self {
            tower: DerivativeTower::new(h, k),
            reduced,
            singular: zeros
                .iter()
                .chain(poles.iter())
                .map(|e| e.location)
                .collect(),
            k: k as usize,
            power,
            base_exponent,
        })
    }

    /// `(g^(k))^m / g^(m-k)`.
    pub fn zero(g: &RationalFunction, k: u32, m: u32) -> Result<Self> {
        Self::build(g, k, m, k as i32 - m as i32, zero_quotient(g, k, m)?)
    }

    /// `(f^(k))^p / f^(p+k)`.
    pub fn pole(f: &RationalFunction, k: u32, p: u32) -> Result<Self> {
        Self::build(f, k, p, -((p + k) as i32), pole_quotient(f, k, p)?)
    }

    /// The quotient as a reduced rational function.
    pub fn reduced(&self) -> &RationalFunction {
        &self.reduced
    }

    pub fn at(&self, z: Complex64) -> Result<Complex64> {
        let near = self
            .singular
            .iter()
            .any(|&w| (w - z).norm() <= SINGULAR_GUARD);
        if !near {
            if let Some(v) = self.tower.values(z) {
                return Ok(v[self.k].powu(self.power) * v[0].powi(self.base_exponent));
            }
        }
        self.reduced.value(z)
    }

    fn grid_sup(&self, grid: &[Complex64]) -> Result<f64> {
        if self.reduced.is_zero() {
            return Ok(0.0);
        }
        grid.iter()
            .map(|&z| self.at(z).map(|v| v.norm()))
            .try_fold(0.0, |acc, v| Ok(f64::max(acc, v?)))
    }
}

fn check_order(k: u32, name: &str, v: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "derivative order k must be positive".into(),
        ));
    }
    if v == 0 {
        return Err(Error::InvalidParameter(format!("{name} must be positive")));
    }
    Ok(())
}

/// Sup-norms of `(g_n^(k))^m / g_n^(m-k)` on the disk, after checking that
/// each quotient is pole-free there and that zeros in the disk have
/// multiplicity at least `m`.
pub fn theorem2a_check(
    family: &FamilySpec,
    k: u32,
    m: u32,
    disk: &Disk,
    cfg: &HarnessConfig,
) -> Result<ConvergenceReport> {
    check_order(k, "m", m)?;
    let grid = disk.grid(cfg.resolution);
    let mut sups = Vec::new();
    let mut norms = Vec::new();
    for (n, g) in family.members() {
        if g.is_zero() {
            return Err(Error::Precondition(format!(
                "index {n}: g is identically zero"
            )));
        }
        if let Some(p) = g.poles().iter().find(|p| disk.contains(p.location)) {
            return Err(Error::Precondition(format!(
                "index {n}: g has a pole at {} in the disk",
                p.location
            )));
        }
        let q = QuotientEvaluator::zero(&g, k, m)?;
        check_pole_free(q.reduced(), disk, n)?;
        check_multiplicity(&g.zeros()?, Singularity::Zero, disk, m, n)?;
        sups.push(q.grid_sup(&grid)?);
        norms.push(grid_sup(&g, &grid)?);
    }
    let (slope, verdict) = decay_verdict(&family.index_range, &sups, &cfg.rule);
    let (_, family_verdict) = decay_verdict(&family.index_range, &norms, &cfg.rule);
    Ok(ConvergenceReport {
        quantity: "sup_q".into(),
        indices: family.index_range.clone(),
        sup_norms: sups,
        slope,
        verdict,
        family_norms: norms,
        family_verdict,
    })
}

/// Sup-norms of `d_n = (f_n^(k))^p / f_n^(p+k)` on the disk, after checking
/// that each `d_n` is pole-free there and that poles in the disk have
/// multiplicity at least `p`.
pub fn theorem2b_check(
    family: &FamilySpec,
    k: u32,
    p: u32,
    disk: &Disk,
    cfg: &HarnessConfig,
) -> Result<ConvergenceReport> {
    check_order(k, "p", p)?;
    let grid = disk.grid(cfg.resolution);
    let mut sups = Vec::new();
    let mut norms = Vec::new();
    for (n, f) in family.members() {
        if f.is_zero() {
            return Err(Error::Precondition(format!(
                "index {n}: f is identically zero"
            )));
        }
        let d = QuotientEvaluator::pole(&f, k, p)?;
        check_pole_free(d.reduced(), disk, n)?;
        check_multiplicity(f.poles(), Singularity::Pole, disk, p, n)?;
        sups.push(d.grid_sup(&grid)?);
        norms.push(grid_min(&f, &grid));
    }
    let (slope, verdict) = decay_verdict(&family.index_range, &sups, &cfg.rule);
    let family_verdict = growth_verdict(&family.index_range, &norms, &cfg.rule);
    Ok(ConvergenceReport {
        quantity: "sup_d".into(),
        indices: family.index_range.clone(),
        sup_norms: sups,
        slope,
        verdict,
        family_norms: norms,
        family_verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    Bounded,
    Unbounded,
    Inconclusive,
}

/// A pole in the disk below the required multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisViolation {
    pub index: u64,
    #[serde(serialize_with = "serialize_complex")]
    pub location: Complex64,
    pub multiplicity: u32,
    pub required: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub indices: Vec<u64>,
    pub sups: Vec<ExtendedValue>,
    /// `ceil(k / (alpha - 1))`.
    pub required_multiplicity: u32,
    pub violations: Vec<HypothesisViolation>,
    pub verdict: Boundedness,
}

fn boundedness(sups: &[ExtendedValue]) -> Boundedness {
    if sups.iter().any(|s| s.is_infinite()) {
        return Boundedness::Unbounded;
    }
    let v: Vec<f64> = sups.iter().map(|s| s.as_f64()).collect();
    if v.len() < 2 {
        return Boundedness::Bounded;
    }
    let half = v.len() / 2;
    let tail = &v[half..];
    let non_increasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let head_max = v[..half.max(1)].iter().copied().fold(0.0, f64::max);
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    if non_increasing || tail_max <= 1.05 * head_max {
        Boundedness::Bounded
    } else {
        Boundedness::Inconclusive
    }
}

/// Grid suprema of `F_{k,alpha}` per index, with poles of too low
/// multiplicity flagged.
pub fn theorem1_scan(
    family: &FamilySpec,
    k: u32,
    alpha: f64,
    disk: &Disk,
    cfg: &HarnessConfig,
) -> Result<Theorem1Report> {
    let params = MartyParams::new(k, alpha)?;
    let required = params
        .required_pole_multiplicity()
        .ok_or_else(|| Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")))?;
    let mut sups = Vec::new();
    let mut violations = Vec::new();
    for (n, f) in family.members() {
        for p in f.poles().iter().filter(|p| disk.contains(p.location)) {
            if p.multiplicity < required {
                violations.push(HypothesisViolation {
                    index: n,
                    location: p.location,
                    multiplicity: p.multiplicity,
                    required,
                });
            }
        }
        let q = MartyQuotient::new(&f, params);
        sups.push(q.sup_on_disk(disk.center, disk.radius, cfg.resolution)?);
    }
    Ok(Theorem1Report {
        indices: family.index_range.clone(),
        verdict: boundedness(&sups),
        sups,
        required_multiplicity: required,
        violations,
    })
}

/// `10^{-1}, 10^{-1.5}, ..., 10^{-6}`.
pub fn default_radii() -> Vec<f64> {
    (0..=10)
        .map(|i| 10f64.powf(-1.0 - 0.5 * i as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerPoleSharpness {
    pub predicted: f64,
    pub fitted: f64,
    /// `(radius, F_{k,alpha}(radius))`.
    pub samples: Vec<(f64, f64)>,
}

impl PowerPoleSharpness {
    pub fn relative_error(&self) -> f64 {
        ((self.fitted - self.predicted) / self.predicted).abs()
    }
}

/// Log-log slope of `F_{k,alpha}` for `1/z^p` as `z -> 0`, against the
/// exponent `(alpha - 1) p - k`.
pub fn power_pole_exponent(
    k: u32,
    alpha: f64,
    p: u32,
    radii: &[f64],
) -> Result<PowerPoleSharpness> {
    let params = MartyParams::new(k, alpha)?;
    let predicted = (alpha - 1.0) * p as f64 - k as f64;
    if p == 0 || predicted >= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "power pole sharpness needs 0 < p < k/(alpha-1); got k = {k}, alpha = {alpha}, p = {p}"
        )));
    }
    let f = monomial(1.0, Complex64::new(0.0, 0.0), -(p as i64));
    let q = MartyQuotient::new(&f, params);
    let samples: Vec<(f64, f64)> = radii
        .iter()
        .map(|&rho| (rho, q.at(Complex64::new(rho, 0.0)).as_f64()))
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fitted = log_log_slope(&xs, &ys, 2)
        .ok_or_else(|| Error::InvalidParameter("need at least two distinct radii".into()))?;
    Ok(PowerPoleSharpness {
        predicted,
        fitted,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedPowerRow {
    pub index: u64,
    #[serde(serialize_with = "serialize_complex")]
    pub point: Complex64,
    pub value: f64,
    /// `(1/2) (n-k)^k |z - base|^{n(1-alpha) - k}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedPowerSharpness {
    pub rows: Vec<ShiftedPowerRow>,
    pub all_above_bound: bool,
    /// Values strictly increase with the index at every point and the lower
    /// bound grows.
    pub diverging: bool,
}

/// Ten points of `|z| <= 0.45`: the origin and nine on the circle.
pub fn default_points() -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    pts.extend((0..9).map(|j| Complex64::from_polar(0.45, 2.0 * PI * j as f64 / 9.0)));
    pts
}

/// `F_{k,alpha}` for `(z - base)^n` against its lower bound, for
/// `0 < alpha <= 1`.
pub fn shifted_power_check(
    k: u32,
    alpha: f64,
    base: Complex64,
    indices: &[u64],
    points: &[Complex64],
) -> Result<ShiftedPowerSharpness> {
    let params = MartyParams::new(k, alpha)?;
    if alpha > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "shifted power sharpness needs 0 < alpha <= 1, got {alpha}"
        )));
    }
    if indices.is_empty() || indices.iter().any(|&n| n < k as u64) {
        return Err(Error::InvalidParameter(format!(
            "indices must be nonempty and at least k = {k}"
        )));
    }
    if let Some(z) = points.iter().find(|z| (*z - base).norm() <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "point {z} must satisfy |z - base| > 1"
        )));
    }
    let mut rows = Vec::new();
    for &n in indices {
        let f = monomial(1.0, base, n as i64);
        let q = MartyQuotient::new(&f, params);
        let nk = (n - k as u64) as f64;
        for &z in points {
            let d = (z - base).norm();
            let bound = 0.5 * nk.powi(k as i32) * d.powf(n as f64 * (1.0 - alpha) - k as f64);
            rows.push(ShiftedPowerRow {
                index: n,
                point: z,
                value: q.at(z).as_f64(),
                bound,
            });
        }
    }
    let all_above_bound = rows.iter().all(|r| r.value >= r.bound);
    let np = points.len();
    let increasing = (0..np).all(|j| {
        rows.iter()
            .skip(j)
            .step_by(np)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1].value > w[0].value)
    });
    let bound_grows = rows.first().map(|r| r.bound) < rows.last().map(|r| r.bound);
    Ok(ShiftedPowerSharpness {
        rows,
        all_above_bound,
        diverging: increasing && bound_grows && indices.len() >= 2,
    })
}

/// Per-point values of the estimate chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    #[serde(serialize_with = "serialize_complex")]
    pub z: Complex64,
    /// `|(g'/g)^(k-1)(z)|` and its bound; `None` when skipped next to a zero.
    pub log_derivative: Option<f64>,
    pub log_derivative_bound: Option<f64>,
    /// `|g^k [(g'/g)^(k-1)]^m|(z)`.
    pub lhs: f64,
    pub product_bound: f64,
    pub harnack_form_bound: f64,
    /// The sharper bound available when `g` has no zeros in `|z| < s`.
    pub rhs_zero_free: Option<f64>,
}

/// Smallest absolute and relative margin `rhs - lhs` of one bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub absolute: f64,
    pub relative: f64,
}

impl Margin {
    fn new() -> Self {
        Self {
            absolute: f64::INFINITY,
            relative: f64::INFINITY,
        }
    }

    fn update(&mut self, lhs: f64, rhs: f64) {
        self.absolute = self.absolute.min(rhs - lhs);
        let scale = rhs.max(lhs);
        if scale > 0.0 {
            self.relative = self.relative.min((rhs - lhs) / scale);
        }
    }

    /// `rhs - lhs >= -tol * max(lhs, rhs)` everywhere.
    pub fn passes(&self, tol: f64) -> bool {
        self.relative >= -tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateChainReport {
    pub x0: f64,
    pub zero_count: u32,
    pub log_inv_h0: f64,
    pub log_derivative_margin: Margin,
    pub product_margin: Margin,
    pub harnack_form_margin: Margin,
    pub margin_zero_free: Option<Margin>,
    pub harnack: HarnackReport,
    pub skipped: usize,
    pub rows: Vec<EstimateRow>,
}

impl EstimateChainReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.log_derivative_margin.passes(tol)
            && self.product_margin.passes(tol)
            && self.harnack_form_margin.passes(tol)
            && self.margin_zero_free.is_none_or(|m| m.passes(tol))
            && self.harnack.margin >= -1e-12
    }
}

/// Distance below which grid points next to a zero are skipped.
const ZERO_SKIP: f64 = 1e-9;

/// Evaluate the pointwise estimates for `|g^k [(g'/g)^(k-1)]^m|` on a polar
/// grid of `|z| <= r`.
///
/// Requires `g` holomorphic on the closed unit disk with zeros there of
/// multiplicity at least `m`, and `|g| <= x0` on the unit circle (checked on
/// a 512-point grid).
pub fn estimate_chain_check(
    g: &RationalFunction,
    k: u32,
    m: u32,
    geom: &DiskGeometry,
    grid: usize,
) -> Result<EstimateChainReport> {
    check_order(k, "m", m)?;
    if g.is_zero() {
        return Err(Error::Precondition("g is identically zero".into()));
    }
    let unit = Disk::centered(1.0)?;
    if let Some(p) = g.poles().iter().find(|p| unit.contains(p.location)) {
        return Err(Error::Precondition(format!(
            "g has a pole at {} in the closed unit disk",
            p.location
        )));
    }
    let zeros = g.zeros()?;
    check_multiplicity(&zeros, Singularity::Zero, &unit, m, 0)?;
    let x0 = x0_threshold(k, m, geom);
    let sup = circle_max(g, 1.0, BOUNDARY_GRID);
    if sup > x0 {
        return Err(Error::Precondition(format!(
            "max |g| on the unit circle is {sup:e}, above x0 = {x0:e}"
        )));
    }

    let split = build_split(g, *geom)?;
    let n = split.zero_count();
    let log_inv_h0 = -split.h.log_abs(Complex64::new(0.0, 0.0));
    let (r, s, d) = (geom.r(), geom.s(), geom.gap());
    let (kf, mf) = (k as f64, m as f64);
    let fact = rising_factorial(1, k);
    let two_k = 2f64.powi(k as i32);
    let c8 = 6.0 * fact * two_k / d.powi(k as i32 + 1) * log_inv_h0;
    let product_constant = 6.0 * fact * two_k / d.powi(2 * k as i32 + 1) * log_inv_h0;
    let c_zero_free = 2.0 * fact / d.powi(k as i32 + 1) * log_inv_h0;
    let harnack_constant = 12.0 * s * fact * two_k / d.powi(2 * k as i32 + 2);

    let l = g.log_derivative()?.derivative(k - 1);
    let mut log_derivative_margin = Margin::new();
    let mut product_margin = Margin::new();
    let mut harnack_form_margin = Margin::new();
    let mut margin_zero_free = (n == 0).then(Margin::new);
    let mut rows = Vec::new();
    let mut skipped = 0;
    for z in Disk::centered(r)?.grid(grid) {
        let near_zero = zeros
            .iter()
            .any(|a| (z - a.location).norm() <= ZERO_SKIP * a.location.norm().max(1.0));
        if near_zero {
            skipped += 1;
            continue;
        }
        let lz = l.value(z)?.norm();
        let gz = g.value(z)?.norm();
        let lhs = gz.powf(kf) * lz.powf(mf);
        let hz = split.h.value(z)?.norm();
        let log_inv_hz = -hz.ln();
        let tail = (mf + log_inv_hz / (d * d)).powf(2.0 * mf);
        let product_bound = hz.powf(kf) * product_constant.powf(mf) * tail;
        let harnack_form_bound = hz.powf(kf) * (harnack_constant * log_inv_hz).powf(mf) * tail;
        let log_derivative_bound = if n == 0 {
            c_zero_free
        } else {
            let near: f64 = split
                .factors
                .iter()
                .map(|f| f.multiplicity as f64 / (z - f.a).norm().powf(kf))
                .sum();
            c8 * n as f64 * near
        };
        let rhs_zero_free = (n == 0).then(|| hz.powf(kf) * c_zero_free.powf(mf));
        log_derivative_margin.update(lz, log_derivative_bound);
        product_margin.update(lhs, product_bound);
        harnack_form_margin.update(lhs, harnack_form_bound);
        if let (Some(mz), Some(rz)) = (margin_zero_free.as_mut(), rhs_zero_free) {
            mz.update(lhs, rz);
        }
        rows.push(EstimateRow {
            z,
            log_derivative: Some(lz),
            log_derivative_bound: Some(log_derivative_bound),
            lhs,
            product_bound,
            harnack_form_bound,
            rhs_zero_free,
        });
    }
    let harnack = harnack_check(&split.h, geom, grid)?;
    Ok(EstimateChainReport {
        x0,
        zero_count: n,
        log_inv_h0,
        log_derivative_margin,
        product_margin,
        harnack_form_margin,
        margin_zero_free,
        harnack,
        skipped,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnackReport {
    /// `min ((s+r)/(s-r) log(1/|h(z)|) - log(1/|h(0)|))` over the grid.
    pub margin: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub at: Complex64,
    pub points: usize,
}

/// Harnack's inequality for the positive harmonic function `log(1/|h|)` on
/// a polar grid of `|z| <= r`. Requires `h` zero- and pole-free on
/// `|z| <= s` with `|h| < 1` on `|z| = s`.
pub fn harnack_check(
    h: &RationalFunction,
    geom: &DiskGeometry,
    grid: usize,
) -> Result<HarnackReport> {
    let (r, s) = (geom.r(), geom.s());
    let closed_s = Disk::centered(s)?;
    if h.is_zero() {
        return Err(Error::Precondition("h is identically zero".into()));
    }
    if let Some(a) = h.zeros()?.iter().find(|a| closed_s.contains(a.location)) {
        return Err(Error::Precondition(format!(
            "h vanishes at {} in |z| <= s",
            a.location
        )));
    }
    if let Some(b) = h.poles().iter().find(|b| closed_s.contains(b.location)) {
        return Err(Error::Precondition(format!(
            "h has a pole at {} in |z| <= s",
            b.location
        )));
    }
    let sup = circle_max(h, s, BOUNDARY_GRID);
    if sup >= 1.0 {
        return Err(Error::Precondition(format!(
            "|h| reaches {sup} >= 1 on |z| = s"
        )));
    }
    let ratio = (s + r) / (s - r);
    let at0 = -h.log_abs(Complex64::new(0.0, 0.0));
    let pts = Disk::centered(r)?.grid(grid);
    let (margin, at) = pts.iter().map(|&z| (ratio * -h.log_abs(z) - at0, z)).fold(
        (f64::INFINITY, Complex64::new(0.0, 0.0)),
        |acc, v| if v.0 < acc.0 { v } else { acc },
    );
    Ok(HarnackReport {
        margin,
        at,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half_disk() -> Disk {
        Disk::centered(0.5).unwrap()
    }

    #[test]
    fn family_members() {
        let fam = FamilySpec::new(FamilyKind::ScaledPole { p: 3 }, vec![2]).unwrap();
        let f = fam.member(0);
        // 2 / z^2
        assert!((f.value(c(0.5, 0.0)).unwrap() - c(8.0, 0.0)).norm() < 1e-14);
        let fam = FamilySpec::new(FamilyKind::ShiftedPower { base: c(3.0, 0.0) }, vec![4]).unwrap();
        assert!((fam.member(0).value(c(1.0, 0.0)).unwrap() - c(16.0, 0.0)).norm() < 1e-12);
        assert!(FamilySpec::new(FamilyKind::ScaledZero { m: 2 }, vec![]).is_err());
    }

    #[test]
    fn scaled_zero_power_decays_like_one_over_n() {
        // g_n = z^3 / n, k = 1: q_n = 27 / n
        let fam = FamilySpec::new(
            FamilyKind::Monomial {
                exponent: 3,
                scale_exponent: -1,
                center: c(0.0, 0.0),
            },
            vec![1, 10, 100, 1000, 10000],
        )
        .unwrap();
        let rep = theorem2a_check(&fam, 1, 3, &half_disk(), &HarnessConfig::default()).unwrap();
        assert!((rep.sup_norms[2] - 0.27).abs() < 1e-12);
        assert!((rep.slope.unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(rep.verdict, Verdict::ConvergesToZero);
    }

    #[test]
    fn scaled_zero_family_hits_pole() {
        let fam = FamilySpec::new(FamilyKind::ScaledZero { m: 3 }, vec![1, 2, 3, 4]).unwrap();
        let err = theorem2a_check(&fam, 1, 3, &half_disk(), &HarnessConfig::default()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::PoleInDisk {
                    index: 1,
                    order: 1,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn scaled_pole_family_hits_pole() {
        let fam = FamilySpec::new(FamilyKind::ScaledPole { p: 2 }, vec![1, 2, 3, 4]).unwrap();
        let err = theorem2b_check(&fam, 2, 2, &half_disk(), &HarnessConfig::default()).unwrap_err();
        assert!(matches!(err, Error::PoleInDisk { order: 2, .. }), "{err}");
    }

    #[test]
    fn constant_family_has_zero_quotient() {
        let fam = FamilySpec::new(
            FamilyKind::Monomial {
                exponent: 0,
                scale_exponent: 1,
                center: c(0.0, 0.0),
            },
            vec![1, 2, 4, 8],
        )
        .unwrap();
        let rep = theorem2b_check(&fam, 1, 2, &half_disk(), &HarnessConfig::default()).unwrap();
        assert!(rep.sup_norms.iter().all(|&s| s == 0.0));
        assert_eq!(rep.verdict, Verdict::ConvergesToZero);
    }

    #[test]
    fn linear_family_in_pole_check() {
        // f_n = n (z - 3), k = 1: d_n = n^p / (n (z-3))^(p+1)
        let fam = FamilySpec::new(
            FamilyKind::Monomial {
                exponent: 1,
                scale_exponent: 1,
                center: c(3.0, 0.0),
            },
            vec![1, 10, 100, 1000],
        )
        .unwrap();
        let rep = theorem2b_check(&fam, 1, 2, &half_disk(), &HarnessConfig::default()).unwrap();
        assert!((rep.sup_norms[0] - 1.0 / 2.5f64.powi(3)).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::ConvergesToZero);
        assert_eq!(rep.family_verdict, Verdict::Diverges);
    }

    #[test]
    fn theorem1_holomorphic_family_is_bounded() {
        let fam = FamilySpec::new(
            FamilyKind::ShiftedPower { base: c(0.0, 0.0) },
            (1..=12).collect(),
        )
        .unwrap();
        let rep = theorem1_scan(&fam, 2, 2.0, &half_disk(), &HarnessConfig::default()).unwrap();
        assert_eq!(rep.verdict, Boundedness::Bounded);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn theorem1_flags_low_multiplicity() {
        let fam = FamilySpec::new(FamilyKind::PowerPole { p: 1 }, vec![1]).unwrap();
        let rep = theorem1_scan(&fam, 2, 1.5, &half_disk(), &HarnessConfig::default()).unwrap();
        assert_eq!(rep.required_multiplicity, 4);
        assert_eq!(rep.verdict, Boundedness::Unbounded);
        assert_eq!(rep.violations.len(), 1);
        let fam = FamilySpec::new(FamilyKind::PowerPole { p: 4 }, vec![1]).unwrap();
        let rep = theorem1_scan(&fam, 2, 1.5, &half_disk(), &HarnessConfig::default()).unwrap();
        assert_eq!(rep.verdict, Boundedness::Bounded);
        assert!(theorem1_scan(&fam, 2, 1.0, &half_disk(), &HarnessConfig::default()).is_err());
    }

    #[test]
    fn power_pole_slope() {
        let rep = power_pole_exponent(2, 1.5, 3, &default_radii()).unwrap();
        assert_eq!(rep.predicted, -0.5);
        assert!(rep.relative_error() < 0.02);
        assert!(power_pole_exponent(2, 1.5, 4, &default_radii()).is_err());
    }

    #[test]
    fn shifted_power_exceeds_bound() {
        let rep =
            shifted_power_check(1, 1.0, c(3.0, 0.0), &[5, 10, 20, 40], &default_points()).unwrap();
        assert!(rep.all_above_bound);
        assert!(rep.diverging);
        // n 3^(n-1) / (1 + 3^n) at z = 0
        let r = rep
            .rows
            .iter()
            .find(|r| r.index == 10 && r.point == c(0.0, 0.0))
            .unwrap();
        assert!((r.value - 10.0 * 3f64.powi(9) / (1.0 + 3f64.powi(10))).abs() < 1e-9);
    }

    #[test]
    fn harnack_for_constant_and_linear() {
        let geom = DiskGeometry::new(0.25, 0.75).unwrap();
        let h = RationalFunction::constant(c(0.3, 0.0));
        let rep = harnack_check(&h, &geom, 16).unwrap();
        let want = ((0.75 / 0.25) - 1.0) * (1.0 / 0.3f64).ln();
        assert!((rep.margin - want).abs() < 1e-12);
        let h = RationalFunction::polynomial(Polynomial::from_real(&[-0.5, 0.25]));
        assert!(harnack_check(&h, &geom, 16).unwrap().margin >= 0.0);
    }

    #[test]
    fn estimate_chain_for_small_power() {
        let geom = DiskGeometry::new(0.4, 0.8).unwrap();
        for (k, m) in [(1, 1), (2, 2), (3, 2)] {
            let x0 = x0_threshold(k, m, &geom);
            let zeros = RootList::from_pairs([(c(0.0, 0.0), m)], 0.0);
            let g = RationalFunction::from_factors(c(0.5 * x0, 0.0), zeros, RootList::new());
            let rep = estimate_chain_check(&g, k, m, &geom, 16).unwrap();
            assert!(
                rep.passes(1e-9),
                "k={k} m={m}: {:?}",
                (
                    rep.log_derivative_margin,
                    rep.product_margin,
                    rep.harnack_form_margin
                )
            );
            assert_eq!(rep.skipped, 1);
        }
    }

    #[test]
    fn estimate_chain_rejects_large_function() {
        let geom = DiskGeometry::new(0.4, 0.8).unwrap();
        let g = RationalFunction::constant(c(0.5, 0.0));
        assert!(matches!(
            estimate_chain_check(&g, 1, 1, &geom, 8),
            Err(Error::Precondition(_))
        ));
    }
}
