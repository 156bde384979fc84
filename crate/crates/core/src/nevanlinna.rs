//! Nevanlinna functions taken with respect to a base point `alpha` inside the
//! disk: proximity `m_alpha`, counting `N_alpha`, characteristic `T_alpha`,
//! and checks of the first fundamental theorem and the counting inequality.
//!
//! All functions require the circle `|z| = r` to stay clear of zeros and
//! poles by `circle_clearance * r`; singularities on or near the circle are
//! reported as errors instead of being silently counted on one side.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result, Singularity};
use crate::poly::{RationalFunction, RootList};
use crate::quadrature::{periodic_mean, QuadratureSpec};

/// Base points closer than this to a zero or pole are rejected.
pub const BASE_POINT_GUARD: f64 = 1e-9;

/// `(m_alpha, N_alpha, T_alpha)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NevanlinnaEval {
    pub m_alpha: f64,
    pub n_alpha: f64,
    pub t_alpha: f64,
    pub quad_error_estimate: f64,
    pub nodes_used: usize,
}

/// `Re((w + alpha)/(w - alpha))`, the Poisson kernel for base point `alpha`.
pub fn poisson_kernel(w: Complex64, alpha: Complex64) -> f64 {
    ((w + alpha) / (w - alpha)).re
}

fn check_radius(r: f64, alpha: Complex64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if alpha.norm() >= r {
        return Err(Error::InvalidParameter(format!(
            "base point {alpha} must lie inside |z| < {r}"
        )));
    }
    Ok(())
}

fn check_clearance(list: &RootList, kind: Singularity, r: f64, rel: f64) -> Result<()> {
    let clearance = rel * r;
    match list
        .iter()
        .find(|e| (e.location.norm() - r).abs() <= clearance)
    {
        Some(e) => Err(Error::Clearance {
            kind,
            location: e.location,
            radius: r,
            clearance,
        }),
        None => Ok(()),
    }
}

fn check_base_point(list: &RootList, kind: Singularity, alpha: Complex64) -> Result<()> {
    match list
        .iter()
        .find(|e| (e.location - alpha).norm() <= BASE_POINT_GUARD)
    {
        Some(e) => Err(Error::BasePoint {
            kind,
            point: alpha,
            location: e.location,
        }),
        None => Ok(()),
    }
}

/// Proximity function by node-doubling trapezoidal quadrature; returns the
/// value and the last successive difference.
pub fn proximity_m_alpha(
    f: &RationalFunction,
    r: f64,
    alpha: Complex64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let q = proximity_with_nodes(f, r, alpha, spec)?;
    Ok((q.0, q.1))
}

fn proximity_with_nodes(
    f: &RationalFunction,
    r: f64,
    alpha: Complex64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64, usize)> {
    check_radius(r, alpha)?;
    spec.validate()?;
    if f.is_zero() {
        return Ok((0.0, 0.0, 0));
    }
    check_clearance(f.poles(), Singularity::Pole, r, spec.circle_clearance)?;
    check_clearance(&f.zeros()?, Singularity::Zero, r, spec.circle_clearance)?;
    let q = periodic_mean(
        |t| {
            let w = Complex64::from_polar(r, t);
            Complex64::new(f.log_abs(w).max(0.0) * poisson_kernel(w, alpha), 0.0)
        },
        spec,
        false,
    )?;
    Ok((q.value.re, q.error, q.nodes))
}

fn counting_inner(
    f: &RationalFunction,
    r: f64,
    alpha: Complex64,
    rel_clearance: f64,
) -> Result<f64> {
    check_radius(r, alpha)?;
    check_clearance(f.poles(), Singularity::Pole, r, rel_clearance)?;
    check_base_point(f.poles(), Singularity::Pole, alpha)?;
    let r2 = Complex64::new(r * r, 0.0);
    Ok(f.poles()
        .inside(Complex64::new(0.0, 0.0), r)
        .map(|p| {
            let b = p.location;
            p.multiplicity as f64 * ((r2 - b.conj() * alpha) / (r * (alpha - b))).norm().ln()
        })
        .sum())
}

/// Counting function: exact sum over the poles in `|z| < r`, with
/// multiplicity.
pub fn counting_n_alpha(f: &RationalFunction, r: f64, alpha: Complex64) -> Result<f64> {
    counting_inner(f, r, alpha, QuadratureSpec::default().circle_clearance)
}

pub fn characteristic_t_alpha(
    f: &RationalFunction,
    r: f64,
    alpha: Complex64,
    spec: &QuadratureSpec,
) -> Result<NevanlinnaEval> {
    let (m, err, nodes) = proximity_with_nodes(f, r, alpha, spec)?;
    let n = counting_inner(f, r, alpha, spec.circle_clearance)?;
    Ok(NevanlinnaEval {
        m_alpha: m,
        n_alpha: n,
        t_alpha: m + n,
        quad_error_estimate: err,
        nodes_used: nodes,
    })
}

/// Both sides of `T(r, 1/f) = T(r, f) + log 1/|f(alpha)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstFundamentalCheck {
    pub of_f: NevanlinnaEval,
    pub of_recip: NevanlinnaEval,
    pub log_term: f64,
    /// `T(r,1/f) - T(r,f) - log(1/|f(alpha)|)`.
    pub residual: f64,
    /// Sum of the two quadrature error estimates.
    pub error_estimate: f64,
}

pub fn check_first_fundamental(
    f: &RationalFunction,
    r: f64,
    alpha: Complex64,
    spec: &QuadratureSpec,
) -> Result<FirstFundamentalCheck> {
    check_radius(r, alpha)?;
    if f.is_zero() {
        return Err(Error::Precondition("f is identically zero".into()));
    }
    let zeros = f.zeros()?;
    check_base_point(&zeros, Singularity::Zero, alpha)?;
    check_base_point(f.poles(), Singularity::Pole, alpha)?;
    let recip = f.recip()?;
    let of_f = characteristic_t_alpha(f, r, alpha, spec)?;
    let of_recip = characteristic_t_alpha(&recip, r, alpha, spec)?;
    let log_term = -f.log_abs(alpha);
    Ok(FirstFundamentalCheck {
        of_f,
        of_recip,
        log_term,
        residual: of_recip.t_alpha - of_f.t_alpha - log_term,
        error_estimate: of_f.quad_error_estimate + of_recip.quad_error_estimate,
    })
}

/// Sides of `n(r) (R-r)(R-|alpha|)/(R^2 + r|alpha|) <= N(R) - N(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingCheck {
    pub n_r: u32,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
}

pub fn check_counting_inequality(
    f: &RationalFunction,
    r: f64,
    big_r: f64,
    alpha: Complex64,
) -> Result<CountingCheck> {
    check_radius(r, alpha)?;
    if !(r < big_r && big_r < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need r < R < 1, got r = {r}, R = {big_r}"
        )));
    }
    let n_r = count_n(f, r, None)?;
    let a = alpha.norm();
    let lhs = n_r as f64 * (big_r - r) * (big_r - a) / (big_r * big_r + r * a);
    let rhs = counting_difference(f, r, big_r, alpha)?;
    Ok(CountingCheck {
        n_r,
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// `N_alpha(R, f) - N_alpha(r, f)` with the `log|alpha - b|` terms of poles
/// inside `|z| < r` cancelled analytically, so a pole at the base point is
/// allowed here.
pub fn counting_difference(
    f: &RationalFunction,
    r: f64,
    big_r: f64,
    alpha: Complex64,
) -> Result<f64> {
    check_radius(r, alpha)?;
    let rel = QuadratureSpec::default().circle_clearance;
    check_clearance(f.poles(), Singularity::Pole, r, rel)?;
    check_clearance(f.poles(), Singularity::Pole, big_r, rel)?;
    let mut sum = 0.0;
    for p in f.poles().inside(Complex64::new(0.0, 0.0), big_r) {
        let b = p.location;
        let outer = Complex64::new(big_r * big_r, 0.0) - b.conj() * alpha;
        let term = if b.norm() < r {
            let inner = Complex64::new(r * r, 0.0) - b.conj() * alpha;
            (outer * r / (inner * big_r)).norm().ln()
        } else {
            if (b - alpha).norm() <= BASE_POINT_GUARD {
                return Err(Error::BasePoint {
                    kind: Singularity::Pole,
                    point: alpha,
                    location: b,
                });
            }
            (outer / (big_r * (alpha - b))).norm().ln()
        };
        sum += p.multiplicity as f64 * term;
    }
    Ok(sum)
}

/// Poles of `f` (or of `1/(f - c)` when `c` is given) in the closed disk
/// `|z| <= r`, with multiplicity.
pub fn count_n(f: &RationalFunction, r: f64, c: Option<Complex64>) -> Result<u32> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let rel = QuadratureSpec::default().circle_clearance;
    let (list, kind) = match c {
        None => (f.poles().clone(), Singularity::Pole),
        Some(c) => {
            let shifted = f.sub(&RationalFunction::constant(c));
            if shifted.is_zero() {
                return Err(Error::Precondition(format!("f is identically {c}")));
            }
            (shifted.zeros()?, Singularity::Zero)
        }
    };
    check_clearance(&list, kind, r, rel)?;
    Ok(list
        .iter()
        .filter(|e| e.location.norm() <= r)
        .map(|e| e.multiplicity)
        .sum())
}
