//! Complex polynomial and rational-function calculus.

mod polynomial;
mod rational;
mod roots;

pub use polynomial::Polynomial;
pub use rational::{RationalFunction, Value, CANCEL_TOL, CLUSTER_RADIUS, ROOT_TOL};
pub use roots::{find_roots, find_roots_with, Root, RootFinder, RootList};
