//! Seeded random rational functions for test suites.
//!
//! Functions are assembled from explicit zero and pole lists, so they are
//! reduced by construction and their singularities are known exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{RationalFunction, RootList};

/// Random generator used by every suite.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape constraints for [`random_rational`].
#[derive(Debug, Clone)]
pub struct RationalShape {
    pub max_zeros: usize,
    pub max_poles: usize,
    /// Singularities are drawn from `|w| < extent`.
    pub extent: f64,
    /// Circles `|z| = rho` that singularities must avoid.
    pub circles: Vec<f64>,
    /// Minimum distance to those circles and between distinct singularities.
    pub clearance: f64,
}

impl Default for RationalShape {
    fn default() -> Self {
        Self {
            max_zeros: 5,
            max_poles: 5,
            extent: 1.5,
            circles: Vec::new(),
            clearance: 0.05,
        }
    }
}

fn point_in_disk<R: Rng>(rng: &mut R, extent: f64) -> Complex64 {
    let rho = extent * rng.gen::<f64>().sqrt();
    Complex64::from_polar(rho, 2.0 * PI * rng.gen::<f64>())
}

/// A point of `|w| < extent` away from `avoid` and from the circles.
pub fn clear_point<R: Rng>(
    rng: &mut R,
    extent: f64,
    circles: &[f64],
    avoid: &[Complex64],
    clearance: f64,
) -> Complex64 {
    loop {
        let w = point_in_disk(rng, extent);
        let off_circles = circles.iter().all(|&c| (w.norm() - c).abs() >= clearance);
        let apart = avoid.iter().all(|&a| (w - a).norm() >= clearance);
        if off_circles && apart {
            return w;
        }
    }
}

fn random_lead<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.5..2.0), 2.0 * PI * rng.gen::<f64>())
}

/// Random reduced rational with simple zeros and poles obeying `shape`.
pub fn random_rational<R: Rng>(rng: &mut R, shape: &RationalShape) -> RationalFunction {
    let nz = rng.gen_range(0..=shape.max_zeros);
    let np = rng.gen_range(0..=shape.max_poles);
    let mut taken = Vec::new();
    let mut zeros = RootList::new();
    let mut poles = RootList::new();
    for i in 0..nz + np {
        let w = clear_point(rng, shape.extent, &shape.circles, &taken, shape.clearance);
        taken.push(w);
        if i < nz {
            zeros.add(w, 1, 0.0);
        } else {
            poles.add(w, 1, 0.0);
        }
    }
    RationalFunction::from_factors(random_lead(rng), zeros, poles)
}

/// `count` random rationals of numerator and denominator degree at most 5.
pub fn standard_corpus(seed: u64, count: usize, circles: &[f64]) -> Vec<RationalFunction> {
    let mut rng = rng(seed);
    let shape = RationalShape {
        circles: circles.to_vec(),
        ..RationalShape::default()
    };
    (0..count)
        .map(|_| random_rational(&mut rng, &shape))
        .collect()
}

/// Random polynomial with zeros of multiplicity at least `m`: one or two
/// clusters of nearby zeros inside `|z| < inner`, plus possibly a simple
/// factor outside the unit disk. Zeros avoid the given circles.
pub fn multiplicity_polynomial<R: Rng>(
    rng: &mut R,
    m: u32,
    inner: f64,
    circles: &[f64],
    clearance: f64,
) -> RationalFunction {
    let clusters = rng.gen_range(1..=2);
    let mut zeros = RootList::new();
    let mut taken = Vec::new();
    for _ in 0..clusters {
        let center = clear_point(rng, inner, circles, &taken, 2.0 * clearance);
        taken.push(center);
        zeros.add(center, m + rng.gen_range(0..=1), 0.0);
        if rng.gen_bool(0.5) {
            // a second zero close to the cluster center
            let offset =
                Complex64::from_polar(rng.gen_range(0.02..0.08), 2.0 * PI * rng.gen::<f64>());
            let w = center + offset;
            if circles.iter().all(|&c| (w.norm() - c).abs() >= clearance) && w.norm() < inner {
                taken.push(w);
                zeros.add(w, m, 0.0);
            }
        }
    }
    if rng.gen_bool(0.5) {
        let w = Complex64::from_polar(rng.gen_range(1.2..2.0), 2.0 * PI * rng.gen::<f64>());
        zeros.add(w, 1, 0.0);
    }
    RationalFunction::from_factors(random_lead(rng), zeros, RootList::new())
}

/// Random setting for the counting inequality: `(f, r, R, alpha)` with
/// `0 < r < R < 1`, `|alpha| < r` and up to three poles in `|z| < R`.
pub fn counting_configuration<R: Rng>(rng: &mut R) -> (RationalFunction, f64, f64, Complex64) {
    let big_r = rng.gen_range(0.5..0.95);
    let r = rng.gen_range(0.2..big_r - 0.1);
    let alpha = point_in_disk(rng, 0.8 * r);
    let circles = [r, big_r];
    let mut taken = vec![alpha];
    let mut poles = RootList::new();
    for _ in 0..rng.gen_range(0..=3) {
        let w = clear_point(rng, big_r, &circles, &taken, 0.02);
        taken.push(w);
        poles.add(w, rng.gen_range(1..=3), 0.0);
    }
    let mut zeros = RootList::new();
    for _ in 0..rng.gen_range(0..=3) {
        let w = clear_point(rng, 1.5, &circles, &taken, 0.02);
        taken.push(w);
        zeros.add(w, 1, 0.0);
    }
    let f = RationalFunction::from_factors(random_lead(rng), zeros, poles);
    (f, r, big_r, alpha)
}

/// Largest `|f|` over `points` equally spaced points of `|z| = radius`.
pub fn circle_max(f: &RationalFunction, radius: f64, points: usize) -> f64 {
    (0..points)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / points as f64))
        .filter_map(|z| f.evaluate(z).finite())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// `f` scaled so that its grid maximum on `|z| = radius` equals `target`.
pub fn rescale_to(f: &RationalFunction, radius: f64, target: f64) -> RationalFunction {
    let max = circle_max(f, radius, 4096);
    f.scale(Complex64::new(target / max, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_reproducible() {
        let a = standard_corpus(7, 5, &[0.5]);
        let b = standard_corpus(7, 5, &[0.5]);
        assert_eq!(a, b);
        assert_ne!(a, standard_corpus(8, 5, &[0.5]));
    }

    #[test]
    fn singularities_respect_clearance() {
        for f in standard_corpus(3, 20, &[0.5, 0.8]) {
            let (zeros, poles) = f.zeros_poles().unwrap();
            for e in zeros.iter().chain(poles.iter()) {
                assert!((e.location.norm() - 0.5).abs() >= 0.05);
                assert!((e.location.norm() - 0.8).abs() >= 0.05);
            }
        }
    }

    #[test]
    fn multiplicity_polynomials_have_high_multiplicity_inside() {
        let mut r = rng(11);
        for _ in 0..10 {
            let g = multiplicity_polynomial(&mut r, 3, 0.8, &[0.6], 0.02);
            assert!(g.is_polynomial());
            for z in g
                .known_zeros()
                .unwrap()
                .iter()
                .filter(|z| z.location.norm() < 1.0)
            {
                assert!(z.multiplicity >= 3);
            }
        }
    }
}
