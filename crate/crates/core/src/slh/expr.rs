//! Normal-ordered polynomials in bosonic ladder operators.
//!
//! A term is a complex coefficient times, for each registered mode, a factor
//! `(x†)^p x^q`. Terms are kept in a `BTreeMap` keyed by [`Monomial`], so the
//! term list is always canonical: one entry per monomial, sorted by total
//! degree and then lexicographically by the per-mode powers in registration
//! order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::modes::Registry;
use super::SlhError;

/// Relative magnitude below which a coefficient is dropped.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Per-mode `(creation power, annihilation power)`, one entry per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    powers: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            powers: vec![(0, 0); n_modes],
        }
    }

    pub fn from_powers(powers: Vec<(u32, u32)>) -> Self {
        Self { powers }
    }

    pub fn single(n_modes: usize, mode: usize, create: u32, annihilate: u32) -> Self {
        let mut m = Self::identity(n_modes);
        m.powers[mode] = (create, annihilate);
        m
    }

    pub fn powers(&self) -> &[(u32, u32)] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|(c, a)| c + a).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.powers.iter().all(|&p| p == (0, 0))
    }

    pub fn dagger(&self) -> Self {
        Self {
            powers: self.powers.iter().map(|&(c, a)| (a, c)).collect(),
        }
    }

    /// Modes with a nonzero power.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.powers
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != (0, 0))
            .map(|(i, _)| i)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.powers.cmp(&other.powers))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct OperatorExpr {
    registry: Registry,
    terms: BTreeMap<Monomial, Complex64>,
}

impl PartialEq for OperatorExpr {
    fn eq(&self, other: &Self) -> bool {
        same_registry(&self.registry, &other.registry) && self.terms == other.terms
    }
}

fn same_registry(a: &Registry, b: &Registry) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `q! r! / ((q-k)! (r-k)! k!)`: the coefficient of `(x†)^(r-k) x^(q-k)` in `x^q (x†)^r`.
fn reorder_coefficient(q: u32, r: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= f64::from(q - i) * f64::from(r - i) / f64::from(i + 1);
    }
    c
}

impl OperatorExpr {
    pub fn zero(registry: &Registry) -> Self {
        Self {
            registry: registry.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(registry: &Registry, value: Complex64) -> Self {
        let mut e = Self::zero(registry);
        e.insert(Monomial::identity(registry.len()), value);
        e.canonicalize();
        e
    }

    pub fn identity(registry: &Registry) -> Self {
        Self::scalar(registry, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(registry: &Registry, monomial: Monomial, coeff: Complex64) -> Self {
        assert_eq!(monomial.powers.len(), registry.len(), "monomial arity");
        let mut e = Self::zero(registry);
        e.insert(monomial, coeff);
        e.canonicalize();
        e
    }

    /// Sum of `(monomial, coefficient)` pairs, canonicalized once.
    pub fn from_terms(
        registry: &Registry,
        terms: impl IntoIterator<Item = (Monomial, Complex64)>,
    ) -> Result<Self, SlhError> {
        let mut e = Self::zero(registry);
        for (m, c) in terms {
            if m.powers.len() != registry.len() {
                return Err(SlhError::MonomialArity {
                    expected: registry.len(),
                    got: m.powers.len(),
                });
            }
            e.insert(m, c);
        }
        e.canonicalize();
        Ok(e)
    }

    pub fn annihilation(registry: &Registry, mode: usize) -> Self {
        Self::monomial(
            registry,
            Monomial::single(registry.len(), mode, 0, 1),
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn creation(registry: &Registry, mode: usize) -> Self {
        Self::monomial(
            registry,
            Monomial::single(registry.len(), mode, 1, 0),
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn number(registry: &Registry, mode: usize) -> Self {
        Self::monomial(
            registry,
            Monomial::single(registry.len(), mode, 1, 1),
            Complex64::new(1.0, 0.0),
        )
    }

    /// Annihilation operator of the mode with the given label.
    pub fn lower(registry: &Registry, label: &str) -> Result<Self, SlhError> {
        Ok(Self::annihilation(registry, registry.lookup(label)?))
    }

    /// Creation operator of the mode with the given label.
    pub fn raise(registry: &Registry, label: &str) -> Result<Self, SlhError> {
        Ok(Self::creation(registry, registry.lookup(label)?))
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> Complex64 {
        self.terms.get(monomial).copied().unwrap_or_default()
    }

    /// Coefficient of a single ladder factor `(x†)^create x^annihilate` on one mode.
    pub fn coefficient_of(&self, mode: usize, create: u32, annihilate: u32) -> Complex64 {
        self.coefficient(&Monomial::single(
            self.registry.len(),
            mode,
            create,
            annihilate,
        ))
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(&Monomial::identity(self.registry.len()))
    }

    /// Modes on which at least one term acts.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.registry.len()];
        for m in self.terms.keys() {
            for i in m.support() {
                used[i] = true;
            }
        }
        used.iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn insert(&mut self, monomial: Monomial, coeff: Complex64) {
        *self.terms.entry(monomial).or_default() += coeff;
    }

    fn canonicalize(&mut self) {
        let cutoff = ZERO_TOLERANCE * self.max_abs_coefficient();
        self.terms.retain(|_, c| {
            let n = c.norm();
            n != 0.0 && n > cutoff
        });
    }

    fn check_registry(&self, other: &Self) -> Result<(), SlhError> {
        if same_registry(&self.registry, &other.registry) {
            Ok(())
        } else {
            Err(SlhError::RegistryMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SlhError> {
        self.check_registry(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), *c);
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SlhError> {
        self.try_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Normal-ordered product.
    pub fn try_mul(&self, other: &Self) -> Result<Self, SlhError> {
        self.check_registry(other)?;
        let mut out = Self::zero(&self.registry);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                for (m, c) in multiply_monomials(m1, m2) {
                    out.insert(m, c1 * c2 * c);
                }
            }
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::zero(&self.registry);
        for (m, c) in &self.terms {
            out.insert(m.clone(), c * factor);
        }
        out.canonicalize();
        out
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zero(&self.registry);
        for (m, c) in &self.terms {
            out.insert(m.dagger(), c.conj());
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, SlhError> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// Coefficient-wise equality up to `tol` relative to the larger expression.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if !same_registry(&self.registry, &other.registry) {
            return false;
        }
        let scale = self
            .max_abs_coefficient()
            .max(other.max_abs_coefficient())
            .max(1.0);
        let keys = self.terms.keys().chain(other.terms.keys());
        keys.into_iter()
            .all(|m| (self.coefficient(m) - other.coefficient(m)).norm() <= tol * scale)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.dagger(), tol)
    }

    /// Hermitian part `(X + X†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale_real(0.5)
    }

    /// Anti-Hermitian part `(X − X†)/2`.
    pub fn antihermitian_part(&self) -> Self {
        (self - &self.dagger()).scale_real(0.5)
    }
}

/// Product of two normal-ordered monomials, expanded back into normal order.
fn multiply_monomials(lhs: &Monomial, rhs: &Monomial) -> Vec<(Monomial, f64)> {
    let mut acc = vec![(Vec::with_capacity(lhs.powers.len()), 1.0)];
    for (&(p, q), &(r, s)) in lhs.powers.iter().zip(&rhs.powers) {
        let mut next = Vec::with_capacity(acc.len() * (q.min(r) as usize + 1));
        for (powers, coeff) in &acc {
            for k in 0..=q.min(r) {
                let mut pw: Vec<(u32, u32)> = powers.clone();
                pw.push((p + r - k, q + s - k));
                next.push((pw, coeff * reorder_coefficient(q, r, k)));
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|(powers, c)| (Monomial { powers }, c))
        .collect()
}

impl Add for &OperatorExpr {
    type Output = OperatorExpr;

    /// Panics if the registries differ; use [`OperatorExpr::try_add`] otherwise.
    fn add(self, rhs: Self) -> OperatorExpr {
        self.try_add(rhs).expect("operator registry mismatch")
    }
}

impl Sub for &OperatorExpr {
    type Output = OperatorExpr;

    fn sub(self, rhs: Self) -> OperatorExpr {
        self.try_sub(rhs).expect("operator registry mismatch")
    }
}

impl Mul for &OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: Self) -> OperatorExpr {
        self.try_mul(rhs).expect("operator registry mismatch")
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;

    fn neg(self) -> OperatorExpr {
        self.scale_real(-1.0)
    }
}

impl Mul<&OperatorExpr> for Complex64 {
    type Output = OperatorExpr;

    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        rhs.scale(self)
    }
}

impl Mul<&OperatorExpr> for f64 {
    type Output = OperatorExpr;

    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        rhs.scale_real(self)
    }
}

impl fmt::Display for OperatorExpr {
    /// Human-readable form, e.g. `(2+0i)·a†a + (0+1i)·a†c`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            if !m.is_identity() {
                f.write_str("·")?;
                for (mode, &(cr, an)) in m.powers.iter().enumerate() {
                    let label = self.registry.get(mode).map(|m| m.label()).unwrap_or("?");
                    for _ in 0..cr {
                        write!(f, "{label}†")?;
                    }
                    for _ in 0..an {
                        write!(f, "{label}")?;
                    }
                }
            }
        }
        Ok(())
    }
}
