use num_complex::Complex64;
use thiserror::Error;

/// What kind of singular point tripped a precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    Zero,
    Pole,
}

impl std::fmt::Display for Singularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Singularity::Zero => f.write_str("zero"),
            Singularity::Pole => f.write_str("pole"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("the zero polynomial has no finite root list")]
    ZeroPolynomial,

    #[error("root iteration did not converge after {iterations} iterations ({} approximations kept)", partial.len())]
    RootsNoConvergence {
        iterations: usize,
        partial: Vec<Complex64>,
    },

    #[error("{kind} at {location} lies within {clearance:e} of the circle |z| = {radius}")]
    Clearance {
        kind: Singularity,
        location: Complex64,
        radius: f64,
        clearance: f64,
    },

    #[error("base point {point} is too close to a {kind} at {location}")]
    BasePoint {
        kind: Singularity,
        point: Complex64,
        location: Complex64,
    },

    #[error("quadrature did not reach tolerance after {nodes} nodes (best {best:e}, last difference {difference:e})")]
    QuadratureNoConvergence {
        best: f64,
        difference: f64,
        nodes: usize,
    },

    #[error("evaluation at a pole ({0})")]
    AtPole(Complex64),

    #[error("index {index}: result has a pole of order {order} at {location} inside the disk")]
    PoleInDisk {
        index: u64,
        location: Complex64,
        order: u32,
    },

    #[error("index {index}: {kind} at {location} has multiplicity {multiplicity}, at least {required} required")]
    Multiplicity {
        index: u64,
        kind: Singularity,
        location: Complex64,
        multiplicity: u32,
        required: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
