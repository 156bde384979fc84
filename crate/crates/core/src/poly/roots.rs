//! Polynomial roots with multiplicities.
//!
//! Roots are approximated simultaneously by Aberth–Ehrlich iteration and then
//! grouped into multiple roots. A floating-point `m`-fold root scatters into
//! `m` simple roots on a circle of radius about `eps^(1/m)`, so grouping works
//! on a single-linkage dendrogram: any group whose diameter is below the
//! clustering radius is merged outright, and larger groups (up to
//! [`RootFinder::max_cluster_radius`]) are merged only when the polynomial
//! vanishes at the group centroid to rounding accuracy. Scattered copies of an
//! `m`-fold root average out to first order, so `|p|` at their centroid is of
//! order `delta^m`, while two genuinely distinct roots at distance `d` leave a
//! value of order `d^2`.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};

/// One distinct root and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: u32,
}

/// Distinct roots with multiplicities, ordered by real then imaginary part.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RootList {
    entries: Vec<Root>,
}

fn lexicographic(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Two locations are the same root when closer than `radius * max(1, |a|)`.
pub(crate) fn same_location(a: Complex64, b: Complex64, radius: f64) -> bool {
    (a - b).norm() <= radius * a.norm().max(b.norm()).max(1.0)
}

impl RootList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from (location, multiplicity) pairs, merging locations that
    /// coincide within `radius` and dropping zero multiplicities.
    pub fn from_pairs<I>(pairs: I, radius: f64) -> Self
    where
        I: IntoIterator<Item = (Complex64, u32)>,
    {
        let mut out = Self::new();
        for (location, multiplicity) in pairs {
            out.add(location, multiplicity, radius);
        }
        out
    }

    /// Add `multiplicity` copies of `location`, merging with an existing
    /// entry within `radius`.
    pub fn add(&mut self, location: Complex64, multiplicity: u32, radius: f64) {
        if multiplicity == 0 {
            return;
        }
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| same_location(e.location, location, radius))
        {
            e.multiplicity += multiplicity;
            return;
        }
        let pos = self
            .entries
            .partition_point(|e| lexicographic(&e.location, &location) == Ordering::Less);
        self.entries.insert(
            pos,
            Root {
                location,
                multiplicity,
            },
        );
    }

    /// Remove up to `count` copies of the root at `location`; returns how
    /// many were removed.
    pub fn remove(&mut self, location: Complex64, count: u32, radius: f64) -> u32 {
        let Some(i) = self
            .entries
            .iter()
            .position(|e| same_location(e.location, location, radius))
        else {
            return 0;
        };
        let taken = count.min(self.entries[i].multiplicity);
        self.entries[i].multiplicity -= taken;
        if self.entries[i].multiplicity == 0 {
            self.entries.remove(i);
        }
        taken
    }

    pub fn multiplicity_at(&self, location: Complex64, radius: f64) -> u32 {
        self.entries
            .iter()
            .find(|e| same_location(e.location, location, radius))
            .map_or(0, |e| e.multiplicity)
    }

    pub fn entries(&self) -> &[Root] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &Root> {
        self.entries.iter()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Complex64, u32)> {
        self.entries.iter().map(|e| (&e.location, e.multiplicity))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of multiplicities.
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Roots in the open disk `|z - center| < radius`.
    pub fn inside(&self, center: Complex64, radius: f64) -> impl Iterator<Item = &Root> {
        self.entries
            .iter()
            .filter(move |e| (e.location - center).norm() < radius)
    }

    /// Every multiplicity multiplied by `e`.
    pub fn scaled(&self, e: u32) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|r| Root {
                    location: r.location,
                    multiplicity: r.multiplicity * e,
                })
                .filter(|r| r.multiplicity > 0)
                .collect(),
        }
    }

    /// Nearest root to `z` and its distance. Ties go to the earlier entry.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = (e.location - z).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }
}

/// Configuration for [`find_roots_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFinder {
    /// Relative radius below which approximations are always merged.
    pub cluster_radius: f64,
    /// Relative radius up to which scattered approximations may be merged
    /// after passing the Taylor-coefficient test.
    pub max_cluster_radius: f64,
    /// A wide group is one multiple root when `|p|` at its centroid is below
    /// `value_tol` times the rounding scale `sum |c_i||z|^i`.
    pub value_tol: f64,
    pub max_iter: usize,
}

impl Default for RootFinder {
    fn default() -> Self {
        Self {
            cluster_radius: 1e-6,
            max_cluster_radius: 0.05,
            value_tol: 1e-11,
            max_iter: 800,
        }
    }
}

/// All roots of `p` with multiplicities, using default settings.
///
/// `tol` bounds the relative residual `|p(root)| / sum |c_i||root|^i` accepted
/// as converged for each approximation.
pub fn find_roots(p: &Polynomial, tol: f64) -> Result<RootList> {
    find_roots_with(p, tol, &RootFinder::default())
}

pub fn find_roots_with(p: &Polynomial, tol: f64, cfg: &RootFinder) -> Result<RootList> {
    let coeffs = p.coeffs();
    if coeffs.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    let zero = Complex64::new(0.0, 0.0);
    let zero_mult = coeffs.iter().take_while(|c| **c == zero).count();
    let reduced = Polynomial::new(coeffs[zero_mult..].to_vec());
    let lead = reduced.leading();
    let monic = reduced.scale(1.0 / lead);

    let approx = aberth(&monic, tol, cfg.max_iter)?;
    let mut out = cluster(&monic, &approx, cfg);
    if zero_mult > 0 {
        out.add(zero, zero_mult as u32, 0.0);
    }
    Ok(out)
}

fn aberth(p: &Polynomial, tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = p.degree().unwrap_or(0);
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![-p.coeffs()[0] / p.coeffs()[1]]),
        _ => {}
    }
    let dp = p.derivative();
    let c0 = p.coeffs()[0].norm();
    // geometric mean of the root moduli for a monic polynomial
    let rho = c0.powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64 + 0.4;
            Complex64::from_polar(rho * (1.0 + 0.01 * j as f64 / n as f64), theta)
        })
        .collect();
    let mut done = vec![false; n];
    let accept = 8.0 * f64::EPSILON;

    for _ in 0..max_iter {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let pv = p.eval(zi);
            if pv.norm() <= accept * p.abs_eval(zi) {
                done[i] = true;
                continue;
            }
            all = false;
            let ratio = pv / dp.eval(zi);
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (zi - z[j])).sum();
            let w = if ratio.is_finite() {
                ratio / (1.0 - ratio * sum)
            } else {
                1.0 / sum
            };
            if w.is_finite() {
                z[i] = zi - w;
                if w.norm() <= 2.0 * f64::EPSILON * z[i].norm() {
                    done[i] = true;
                }
            } else {
                // perturb off a degenerate configuration
                z[i] = zi + Complex64::new(1e-3, 1e-3) * rho;
            }
        }
        if all {
            return Ok(z);
        }
    }
    let residual_ok = |zi: &Complex64| p.eval(*zi).norm() <= tol * p.abs_eval(*zi);
    if z.iter().all(residual_ok) {
        return Ok(z);
    }
    Err(Error::RootsNoConvergence {
        iterations: max_iter,
        partial: z,
    })
}

struct Node {
    members: Vec<usize>,
    height: f64,
    children: Option<(usize, usize)>,
}

fn centroid(approx: &[Complex64], members: &[usize]) -> Complex64 {
    members.iter().map(|&i| approx[i]).sum::<Complex64>() / members.len() as f64
}

fn cluster(p: &Polynomial, approx: &[Complex64], cfg: &RootFinder) -> RootList {
    let n = approx.len();
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            members: vec![i],
            height: 0.0,
            children: None,
        })
        .collect();
    let mut owner: Vec<usize> = (0..n).collect();

    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = (approx[i] - approx[j]).norm();
            let scale = approx[i].norm().max(approx[j].norm()).max(1.0);
            if d <= cfg.max_cluster_radius * scale {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (d, i, j) in pairs {
        let (a, b) = (owner[i], owner[j]);
        if a == b {
            continue;
        }
        let mut members = nodes[a].members.clone();
        members.extend_from_slice(&nodes[b].members);
        let id = nodes.len();
        for &m in &members {
            owner[m] = id;
        }
        nodes.push(Node {
            members,
            height: d,
            children: Some((a, b)),
        });
    }

    let mut roots: Vec<usize> = owner.clone();
    roots.sort_unstable();
    roots.dedup();

    let mut out = RootList::new();
    let mut stack = roots;
    while let Some(id) = stack.pop() {
        let node = &nodes[id];
        let c = centroid(approx, &node.members);
        let m = node.members.len();
        let strict = node.height <= cfg.cluster_radius * c.norm().max(1.0);
        let accepted =
            node.children.is_none() || strict || p.eval(c).norm() <= cfg.value_tol * p.abs_eval(c);
        if accepted {
            let c = if m > 1 {
                refine_multiple(p, c, m, node.height)
            } else {
                c
            };
            out.add(c, m as u32, 0.0);
        } else if let Some((a, b)) = node.children {
            stack.push(a);
            stack.push(b);
        }
    }
    out
}

/// An `m`-fold root of `p` is a simple root of `p^(m-1)`; a few Newton steps
/// there recover the location to near machine precision. Steps that leave the
/// cluster are discarded.
fn refine_multiple(p: &Polynomial, start: Complex64, m: usize, spread: f64) -> Complex64 {
    let mut d = p.clone();
    for _ in 0..m - 1 {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = start;
    for _ in 0..8 {
        let step = d.eval(z) / dd.eval(z);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 2.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    if (z - start).norm() <= spread.max(f64::EPSILON) {
        z
    } else {
        start
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    #[test]
    fn difference_of_squares() {
        let roots = find_roots(&Polynomial::from_real(&[-1.0, 0.0, 1.0]), 1e-12).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots.entries()[0].location - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((roots.entries()[1].location - c(1.0, 0.0)).norm() < 1e-14);
        assert!(roots.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn triple_root_is_merged() {
        let p = Polynomial::from_roots(one(), [(&c(0.5, 0.0), 3)]);
        let roots = find_roots(&p, 1e-12).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots.entries()[0].multiplicity, 3);
        assert!((roots.entries()[0].location - c(0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn constant_has_no_roots() {
        let roots = find_roots(&Polynomial::from_real(&[7.0]), 1e-12).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        assert!(matches!(
            find_roots(&Polynomial::zero(), 1e-12),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn exact_zero_roots_are_counted_directly() {
        let p = Polynomial::from_real(&[0.0, 0.0, 0.0, 0.0, 2.0]);
        let roots = find_roots(&p, 1e-12).unwrap();
        assert_eq!(
            roots.entries(),
            &[Root {
                location: c(0.0, 0.0),
                multiplicity: 4
            }]
        );
    }

    #[test]
    fn mixed_multiplicities_recovered() {
        let a = c(0.3, -0.2);
        let b = c(-0.6, 0.5);
        let d = c(0.1, 0.7);
        let p = Polynomial::from_roots(c(2.0, 1.0), [(&a, 2), (&b, 4), (&d, 1)]);
        let roots = find_roots(&p, 1e-12).unwrap();
        assert_eq!(roots.degree(), 7);
        assert_eq!(roots.len(), 3);
        assert_eq!(roots.multiplicity_at(a, 1e-5), 2);
        assert_eq!(roots.multiplicity_at(b, 1e-4), 4);
        assert_eq!(roots.multiplicity_at(d, 1e-8), 1);
    }

    #[test]
    fn close_simple_roots_stay_apart() {
        let a = c(0.2, 0.0);
        let b = c(0.2 + 1e-3, 0.0);
        let p = Polynomial::from_roots(one(), [(&a, 1), (&b, 1)]);
        let roots = find_roots(&p, 1e-12).unwrap();
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn residual_is_small_at_reported_roots() {
        let pts = [
            c(0.9, 0.1),
            c(-0.4, -0.8),
            c(0.0, 0.33),
            c(-1.5, 0.2),
            c(2.0, -1.0),
        ];
        let p = Polynomial::from_roots(c(0.7, 0.0), pts.iter().map(|z| (z, 1)));
        let roots = find_roots(&p, 1e-12).unwrap();
        for r in roots.iter() {
            assert!(p.eval(r.location).norm() <= 1e-12 * p.abs_eval(r.location));
        }
    }

    #[test]
    fn nearest_breaks_ties_by_order() {
        let list = RootList::from_pairs([(c(0.1, 0.0), 1), (c(-0.1, 0.0), 1)], 1e-6);
        let (i, _) = list.nearest(c(0.0, 0.0)).unwrap();
        assert_eq!(list.entries()[i].location, c(-0.1, 0.0));
    }
}
