//! Expansion of `g^(k)/g` in terms of `(g'/g)^(k-1)` and products of the
//! ratios `u_j = g^(j)/g`.
//!
//! Coefficients come from formal differentiation: `(g'/g)^(k-1)` is a
//! polynomial in the symbols `u_j` obtained from `u_1` by the rule
//! `u_j' = u_{j+1} - u_1 u_j`. Its only linear term is `u_k`, so
//! `u_k = (g'/g)^(k-1) + sum c * prod u_{j_mu}` with `c` the negated
//! coefficients of the nonlinear monomials.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{RationalFunction, RootList, Value};

/// Largest `k` for which tables are built.
pub const MAX_ORDER: u32 = 12;

/// One correction term `coefficient * prod_{mu} u_{parts[mu]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionTerm {
    pub l: usize,
    pub parts: Vec<u32>,
    pub coefficient: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionTable {
    pub k: u32,
    pub terms: Vec<ExpansionTerm>,
}

/// Monomials as sorted index lists.
type Formal = BTreeMap<Vec<u32>, i64>;

fn differentiate(p: &Formal) -> Formal {
    let mut out = Formal::new();
    let mut push = |mono: Vec<u32>, c: i64| {
        let e = out.entry(mono).or_insert(0);
        *e += c;
    };
    for (mono, &c) in p {
        for i in 0..mono.len() {
            let mut raised = mono.clone();
            raised[i] += 1;
            raised.sort_unstable();
            push(raised, c);
            let mut times_u1 = mono.clone();
            times_u1.push(1);
            times_u1.sort_unstable();
            push(times_u1, -c);
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn build_table(k: u32) -> ExpansionTable {
    let mut p = Formal::from([(vec![1], 1)]);
    for _ in 1..k {
        p = differentiate(&p);
    }
    debug_assert_eq!(p.get(&vec![k]), Some(&1));
    let mut terms: Vec<_> = p
        .into_iter()
        .filter(|(mono, _)| mono.len() >= 2)
        .map(|(parts, c)| ExpansionTerm {
            l: parts.len(),
            parts,
            coefficient: -c,
        })
        .collect();
    terms.sort_by(|a, b| a.l.cmp(&b.l).then_with(|| a.parts.cmp(&b.parts)));
    ExpansionTable { k, terms }
}

/// Coefficient table for `k`, built once and shared.
pub fn expansion_coefficients(k: u32) -> Result<Arc<ExpansionTable>> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "expansion order must be in 1..={MAX_ORDER}, got {k}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<ExpansionTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    Ok(guard
        .entry(k)
        .or_insert_with(|| Arc::new(build_table(k)))
        .clone())
}

impl ExpansionTable {
    /// `sum c prod u_{j_mu}` given `u[j] = g^(j)/g` (index 0 unused).
    pub fn correction(&self, u: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient as f64
                    * t.parts
                        .iter()
                        .map(|&j| u[j as usize])
                        .product::<Complex64>()
            })
            .sum()
    }

    /// `sum |c| prod |u_{j_mu}|`.
    pub fn correction_abs(&self, u: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient.unsigned_abs() as f64
                    * t.parts
                        .iter()
                        .map(|&j| u[j as usize].norm())
                        .product::<f64>()
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// `g, g', ..., g^(k)` with exact derivatives, reusable across points.
///
/// Values come from Taylor series of the factors at the evaluation point
/// rather than from the expanded derivative numerators, which lose accuracy
/// to cancellation at high order.
#[derive(Debug, Clone)]
pub struct DerivativeTower {
    derivs: Vec<RationalFunction>,
}

/// `(g'/g)^(k-1)(z)` from the partial fractions of `g'/g`.
pub fn log_derivative_at(g: &RationalFunction, k: u32, z: Complex64) -> Result<Complex64> {
    partial_fraction_value(&g.zeros()?, g.poles(), k, z)
}

fn partial_fraction_value(
    zeros: &RootList,
    poles: &RootList,
    k: u32,
    z: Complex64,
) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for (sign, list) in [(1.0, zeros), (-1.0, poles)] {
        for root in list.iter() {
            let d = z - root.location;
            if d.norm() == 0.0 {
                return Err(Error::AtPole(z));
            }
            sum += sign * root.multiplicity as f64 / d.powi(k as i32);
        }
    }
    let fact: f64 = (1..k).map(f64::from).product();
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sum * sign * fact)
}

impl DerivativeTower {
    pub fn new(g: &RationalFunction, k: u32) -> Self {
        let mut derivs = vec![g.clone()];
        for j in 0..k as usize {
            let next = derivs[j].derivative(1);
            derivs.push(next);
        }
        Self { derivs }
    }

    pub fn order(&self) -> u32 {
        self.derivs.len() as u32 - 1
    }

    pub fn derivative(&self, j: u32) -> &RationalFunction {
        &self.derivs[j as usize]
    }

    /// `[g(z), g'(z), ..., g^(k)(z)]`, or `None` at a pole.
    pub fn values(&self, z: Complex64) -> Option<Vec<Complex64>> {
        let k = self.derivs.len() - 1;
        let series = self.derivs[0].taylor(z, k)?;
        let mut fact = 1.0;
        Some(
            series
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    c * fact
                })
                .collect(),
        )
    }

    /// `[1, g'/g, ..., g^(k)/g]` at `z`; `Pole` where `g(z) = 0` or `g` has a
    /// pole.
    pub fn ratios(&self, z: Complex64) -> Option<Vec<Complex64>> {
        let v = self.values(z)?;
        if v[0] == Complex64::new(0.0, 0.0) {
            return None;
        }
        Some(v.iter().map(|d| d / v[0]).collect())
    }
}

/// `S = sum c prod g^(j_mu)/g` at `z`.
pub fn correction_term_s(g: &RationalFunction, k: u32, z: Complex64) -> Result<Value> {
    let table = expansion_coefficients(k)?;
    if k == 1 {
        return Ok(Value::Finite(Complex64::new(0.0, 0.0)));
    }
    let tower = DerivativeTower::new(g, k);
    Ok(match tower.ratios(z) {
        Some(u) => Value::Finite(table.correction(&u)),
        None => Value::Pole,
    })
}

/// Both sides of `g^(k)/g = (g'/g)^(k-1) + S` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    /// `max(1, |g^(k)/g|, |(g'/g)^(k-1)|, sum |c prod u|)`.
    pub scale: f64,
}

impl IdentityCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol * self.scale
    }
}

/// Identity checker for one `g` and `k`, with derivatives prepared once.
#[derive(Debug, Clone)]
pub struct IdentityChecker {
    table: Arc<ExpansionTable>,
    tower: DerivativeTower,
    zeros: RootList,
    poles: RootList,
}

impl IdentityChecker {
    pub fn new(g: &RationalFunction, k: u32) -> Result<Self> {
        let table = expansion_coefficients(k)?;
        if g.is_zero() {
            return Err(Error::Precondition("g is identically zero".into()));
        }
        Ok(Self {
            table,
            tower: DerivativeTower::new(g, k),
            zeros: g.zeros()?,
            poles: g.poles().clone(),
        })
    }

    pub fn at(&self, z: Complex64) -> Result<IdentityCheck> {
        let u = self
            .tower
            .ratios(z)
            .ok_or_else(|| Error::Precondition(format!("g vanishes or has a pole at {z}")))?;
        let k = self.table.k as usize;
        let lhs = u[k];
        let main = partial_fraction_value(&self.zeros, &self.poles, self.table.k, z)?;
        let rhs = main + self.table.correction(&u);
        let scale = 1f64
            .max(lhs.norm())
            .max(main.norm())
            .max(self.table.correction_abs(&u));
        Ok(IdentityCheck {
            lhs,
            rhs,
            residual: (lhs - rhs).norm(),
            scale,
        })
    }
}

/// `|LHS - RHS|` of the expansion at `z`, both sides from exact derivatives.
pub fn check_identity(g: &RationalFunction, k: u32, z: Complex64) -> Result<IdentityCheck> {
    IdentityChecker::new(g, k)?.at(z)
}

/// `(|S| |g|^{k/m}, sum |c| prod |(g^(j_mu))^m / g^{m - j_mu}|^{1/m})` at `z`.
pub fn triangle_bound(g: &RationalFunction, k: u32, m: u32, z: Complex64) -> Result<(f64, f64)> {
    let table = expansion_coefficients(k)?;
    let tower = DerivativeTower::new(g, k);
    let v = tower.values(z).ok_or(Error::AtPole(z))?;
    let g_abs = v[0].norm();
    if g_abs == 0.0 {
        return Err(Error::Precondition(format!("g vanishes at {z}")));
    }
    let u: Vec<_> = v.iter().map(|d| d / v[0]).collect();
    let mf = m as f64;
    let lhs = table.correction(&u).norm() * g_abs.powf(k as f64 / mf);
    let rhs = table
        .terms
        .iter()
        .map(|t| {
            let prod: f64 = t
                .parts
                .iter()
                .map(|&j| {
                    // |(g^(j))^m / g^(m-j)|^(1/m) = |g^(j)| |g|^(j/m - 1)
                    v[j as usize].norm() * g_abs.powf(j as f64 / mf - 1.0)
                })
                .product();
            t.coefficient.unsigned_abs() as f64 * prod
        })
        .sum();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Polynomial, RootList};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn first_tables() {
        assert!(expansion_coefficients(1).unwrap().terms.is_empty());
        let t2 = expansion_coefficients(2).unwrap();
        assert_eq!(
            t2.terms,
            vec![ExpansionTerm {
                l: 2,
                parts: vec![1, 1],
                coefficient: 1
            }]
        );
        // u_3 = (g'/g)'' + 3 u_1 u_2 - 2 u_1^3
        let t3 = expansion_coefficients(3).unwrap();
        let got: Vec<_> = t3
            .terms
            .iter()
            .map(|t| (t.parts.clone(), t.coefficient))
            .collect();
        assert_eq!(got, vec![(vec![1, 2], 3), (vec![1, 1, 1], -2)]);
    }

    #[test]
    fn order_is_capped() {
        assert!(expansion_coefficients(0).is_err());
        assert!(expansion_coefficients(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn parts_sum_to_order() {
        for k in 1..=8 {
            let t = expansion_coefficients(k).unwrap();
            for term in &t.terms {
                assert_eq!(term.parts.iter().sum::<u32>(), k);
                assert!(term.l >= 2 && term.l as u32 <= k);
            }
        }
    }

    #[test]
    fn correction_for_linear_function() {
        let g = RationalFunction::polynomial(Polynomial::from_real(&[-2.0, 1.0]));
        let s = correction_term_s(&g, 2, c(0.0, 0.0))
            .unwrap()
            .finite()
            .unwrap();
        assert!((s - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(
            correction_term_s(&g, 1, c(0.3, 0.0)).unwrap(),
            Value::Finite(c(0.0, 0.0))
        );
        assert!(correction_term_s(&g, 2, c(2.0, 0.0)).unwrap().is_pole());
    }

    #[test]
    fn identity_for_power() {
        let zeros = RootList::from_pairs([(c(0.0, 0.0), 4)], 0.0);
        let g = RationalFunction::from_factors(c(1.0, 0.0), zeros, RootList::new());
        let chk = check_identity(&g, 2, c(0.5, 0.5)).unwrap();
        // m(m-1)/z^2 with m = 4
        assert!((chk.lhs - 12.0 / c(0.5, 0.5).powi(2)).norm() < 1e-12);
        assert!(chk.passes(1e-12));
    }

    #[test]
    fn low_degree_polynomial_identity() {
        let g = RationalFunction::polynomial(Polynomial::from_real(&[1.0, -0.5, 2.0]));
        for k in 3..=6 {
            let chk = check_identity(&g, k, c(0.3, -0.7)).unwrap();
            assert_eq!(chk.lhs, c(0.0, 0.0));
            assert!(chk.passes(1e-10), "k={k}: {chk:?}");
        }
    }

    #[test]
    fn json_dump_shape() {
        let v: serde_json::Value =
            serde_json::from_str(&expansion_coefficients(2).unwrap().to_json()).unwrap();
        assert_eq!(v["k"], 2);
        assert_eq!(v["terms"][0]["parts"], serde_json::json!([1, 1]));
        assert_eq!(v["terms"][0]["coefficient"], 1);
    }
}
