//! Trapezoidal means over a full period with node doubling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rule and singularity clearance for circle quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    /// Stop once two successive node doublings differ by less than this.
    pub tolerance: f64,
    pub max_doublings: u32,
    /// Minimum distance of zeros and poles from the integration circle, as a
    /// fraction of its radius.
    pub circle_clearance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            initial_nodes: 64,
            tolerance: 1e-10,
            max_doublings: 16,
            circle_clearance: 1e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_nodes < 2 {
            return Err(Error::InvalidParameter("initial_nodes must be >= 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerance must be positive".into(),
            ));
        }
        if !(self.circle_clearance > 0.0) {
            return Err(Error::InvalidParameter(
                "circle_clearance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a converged quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    /// Difference between the last two node doublings.
    pub error: f64,
    pub nodes: usize,
    pub doublings: u32,
    /// Whether every doubling shrank the successive difference.
    pub monotone: bool,
}

/// `(1/2pi) int_0^{2pi} g(t) dt` by the trapezoidal rule, doubling the node
/// count until successive values differ by less than `spec.tolerance`
/// (scaled by `max(1, |value|)` when `relative`).
pub fn periodic_mean<F>(g: F, spec: &QuadratureSpec, relative: bool) -> Result<Quadrature>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    let mut n = spec.initial_nodes;
    let mut sum: Complex64 = (0..n).map(|j| g(2.0 * PI * j as f64 / n as f64)).sum();
    let mut value = sum / n as f64;
    let mut last_diff = f64::INFINITY;
    let mut monotone = true;
    for history in 1..=spec.max_doublings {
        let h = PI / n as f64;
        let odd: Complex64 = (0..n).map(|j| g(h * (2 * j + 1) as f64)).sum();
        sum += odd;
        n *= 2;
        let next = sum / n as f64;
        let diff = (next - value).norm();
        if diff > last_diff {
            monotone = false;
        }
        last_diff = diff;
        value = next;
        let scale = if relative { value.norm().max(1.0) } else { 1.0 };
        if diff < spec.tolerance * scale {
            return Ok(Quadrature {
                value,
                error: diff,
                nodes: n,
                doublings: history,
                monotone,
            });
        }
    }
    Err(Error::QuadratureNoConvergence {
        best: value.re,
        difference: last_diff,
        nodes: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_trigonometric_polynomial_is_exact() {
        let q = periodic_mean(
            |t| Complex64::new(2.0 + t.cos() + (3.0 * t).sin(), 0.0),
            &QuadratureSpec::default(),
            false,
        )
        .unwrap();
        assert!((q.value.re - 2.0).abs() < 1e-14);
        assert_eq!(q.nodes, 128);
    }

    #[test]
    fn kinked_integrand_converges() {
        // mean of |cos t| is 2/pi
        let q = periodic_mean(
            |t| Complex64::new(t.cos().abs(), 0.0),
            &QuadratureSpec::with_tolerance(1e-9),
            false,
        )
        .unwrap();
        assert!((q.value.re - 2.0 / PI).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let spec = QuadratureSpec {
            max_doublings: 2,
            tolerance: 1e-14,
            ..QuadratureSpec::default()
        };
        let err = periodic_mean(|t| Complex64::new(t.sin().abs().sqrt(), 0.0), &spec, false);
        assert!(matches!(
            err,
            Err(Error::QuadratureNoConvergence { nodes: 256, .. })
        ));
    }
}
