//! Truncated multimode Fock spaces and sparse operator realizations.
//!
//! The composite basis state `|n_1, n_2, ...⟩` has index `Σ n_i Π_{j>i} N_j`:
//! the first registered mode is the most significant digit. Modes appear in
//! the space in registration order regardless of the order they are listed
//! in when the space is built.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::slh::{OperatorExpr, Registry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode `{0}` is not part of the Fock space")]
    UnregisteredMode(String),
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("mode `{0}` listed twice")]
    DuplicateMode(String),
    #[error("truncation of mode `{label}` must be at least 2, got {dim}")]
    InvalidTruncation { label: String, dim: usize },
    #[error("Fock space has no modes")]
    Empty,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operator and space use different mode registries")]
    RegistryMismatch,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    registry: Registry,
    /// `(registry index, truncation)` in registration order.
    modes: Vec<(usize, usize)>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    pub fn new(registry: &Registry, truncations: &[(&str, usize)]) -> Result<Self, FockError> {
        if truncations.is_empty() {
            return Err(FockError::Empty);
        }
        let mut modes = Vec::with_capacity(truncations.len());
        for &(label, n) in truncations {
            let idx = registry
                .index_of(label)
                .ok_or_else(|| FockError::UnknownMode(label.to_string()))?;
            if n < 2 {
                return Err(FockError::InvalidTruncation {
                    label: label.to_string(),
                    dim: n,
                });
            }
            if modes.iter().any(|&(i, _)| i == idx) {
                return Err(FockError::DuplicateMode(label.to_string()));
            }
            modes.push((idx, n));
        }
        modes.sort_unstable();
        let mut strides = vec![1; modes.len()];
        for i in (0..modes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * modes[i + 1].1;
        }
        let dim = strides[0] * modes[0].1;
        Ok(Self {
            registry: registry.clone(),
            modes,
            strides,
            dim,
        })
    }

    /// Every registered mode, with truncations given in registration order.
    pub fn from_dims(registry: &Registry, dims: &[usize]) -> Result<Self, FockError> {
        if dims.len() != registry.len() {
            return Err(FockError::DimensionMismatch(dims.len(), registry.len()));
        }
        let pairs: Vec<(&str, usize)> = registry
            .iter()
            .zip(dims)
            .map(|(m, &n)| (m.label(), n))
            .collect();
        Self::new(registry, &pairs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// `(label, truncation)` in index order.
    pub fn truncations(&self) -> Vec<(String, usize)> {
        self.modes
            .iter()
            .map(|&(i, n)| (self.registry.get(i).unwrap().label().to_string(), n))
            .collect()
    }

    pub fn truncation_of(&self, label: &str) -> Option<usize> {
        let idx = self.registry.index_of(label)?;
        self.modes.iter().find(|m| m.0 == idx).map(|m| m.1)
    }

    fn position(&self, registry_index: usize) -> Option<usize> {
        self.modes.iter().position(|m| m.0 == registry_index)
    }

    /// Occupation numbers of a composite basis index, in space order.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        self.modes
            .iter()
            .zip(&self.strides)
            .map(|(&(_, n), &s)| (index / s) % n)
            .collect()
    }

    pub fn index(&self, occupations: &[usize]) -> usize {
        occupations
            .iter()
            .zip(&self.strides)
            .map(|(n, s)| n * s)
            .sum()
    }

    /// Annihilation operator of a labelled mode.
    pub fn annihilator(&self, label: &str) -> Result<SparseOp, FockError> {
        let idx = self
            .registry
            .index_of(label)
            .ok_or_else(|| FockError::UnknownMode(label.to_string()))?;
        realize(&OperatorExpr::annihilation(&self.registry, idx), self)
    }
}

/// Compressed-sparse-row complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOp {
    /// Builds from unordered triplets; duplicates are summed and exact zeros
    /// dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet index out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        let mut out = Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        for r in 0..nrows {
            out.indptr[r + 1] += out.indptr[r];
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != ZERO) {
            return;
        }
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(
            dim,
            dim,
            (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
        )
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != ZERO {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Side length of a square operator.
    pub fn dim(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let cols = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.entries().map(|(r, c, v)| (c, r, v)).collect(),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.entries().map(|(r, c, v)| (c, r, v.conj())).collect(),
        )
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.conj();
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self.entries().chain(other.entries()).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![ZERO; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.entries() {
            for (r2, c2, v2) in other.entries() {
                t.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, t)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Per-mode action of `(A†)^p A^q` on `|n⟩` in a truncation of size `dim`,
/// using the truncated ladder matrices.
fn ladder_action(n: usize, p: u32, q: u32, dim: usize) -> Option<(usize, f64)> {
    let (p, q) = (p as usize, q as usize);
    if n < q || n - q + p >= dim {
        return None;
    }
    let mut amp = 1.0;
    for k in (n - q + 1)..=n {
        amp *= k as f64;
    }
    for k in (n - q + 1)..=(n - q + p) {
        amp *= k as f64;
    }
    Some((n - q + p, amp.sqrt()))
}

/// Matrix of an operator expression in a truncated Fock space.
///
/// Each normal-ordered term is realized as the product of truncated ladder
/// matrices `(A†)^p A^q`, factor by factor.
pub fn realize(x: &OperatorExpr, space: &FockSpace) -> Result<SparseOp, FockError> {
    if **x.registry() != *space.registry {
        return Err(FockError::RegistryMismatch);
    }
    let mut terms = Vec::new();
    for (m, c) in x.terms() {
        let mut factors = Vec::new();
        for (ri, &(p, q)) in m.powers().iter().enumerate() {
            if (p, q) == (0, 0) {
                continue;
            }
            let pos = space.position(ri).ok_or_else(|| {
                FockError::UnregisteredMode(space.registry.get(ri).unwrap().label().to_string())
            })?;
            factors.push((pos, p, q));
        }
        terms.push((factors, *c));
    }
    let mut triplets = Vec::new();
    for col in 0..space.dim {
        let occ = space.occupations(col);
        'terms: for (factors, c) in &terms {
            let mut row = col;
            let mut amp = *c;
            for &(pos, p, q) in factors {
                let n = occ[pos];
                match ladder_action(n, p, q, space.modes[pos].1) {
                    Some((n2, a)) => {
                        row = row + n2 * space.strides[pos] - n * space.strides[pos];
                        amp *= a;
                    }
                    None => continue 'terms,
                }
            }
            triplets.push((row, col, amp));
        }
    }
    Ok(SparseOp::from_triplets(space.dim, space.dim, triplets))
}

/// Result of comparing a symbolic commutator with its matrix counterpart.
#[derive(Clone, Debug)]
pub struct OperatorCheckReport {
    /// Largest deviation on the safe subspace, where truncation cannot act.
    pub max_deviation_safe: f64,
    /// Largest deviation over the whole truncated space.
    pub max_deviation_full: f64,
    /// Number of basis states in the safe subspace.
    pub safe_states: usize,
    /// `[realize(x), realize(y)]` computed with the truncated matrices.
    pub matrix_commutator: SparseOp,
}

/// Compares `realize([x, y])` with `[realize(x), realize(y)]`.
///
/// A basis state is safe when, for every mode, its occupation plus the
/// largest creation powers of `x` and `y` on that mode stays below the
/// truncation.
pub fn commutator_check(
    x: &OperatorExpr,
    y: &OperatorExpr,
    space: &FockSpace,
) -> Result<OperatorCheckReport, FockError> {
    let symbolic = x
        .commutator(y)
        .map_err(|_| FockError::RegistryMismatch)?;
    let sym = realize(&symbolic, space)?;
    let (mx, my) = (realize(x, space)?, realize(y, space)?);
    let matrix_commutator = mx.matmul(&my).sub(&my.matmul(&mx));
    let diff = sym.sub(&matrix_commutator);

    let mut margin = vec![0usize; space.modes.len()];
    for e in [x, y] {
        let mut local = vec![0usize; space.modes.len()];
        for (m, _) in e.terms() {
            for (ri, &(p, _)) in m.powers().iter().enumerate() {
                if let Some(pos) = space.position(ri) {
                    local[pos] = local[pos].max(p as usize);
                }
            }
        }
        for (g, l) in margin.iter_mut().zip(local) {
            *g += l;
        }
    }
    let safe = |i: usize| {
        space
            .occupations(i)
            .iter()
            .zip(&margin)
            .zip(&space.modes)
            .all(|((&n, &m), &(_, dim))| n + m < dim)
    };
    let mut max_safe = 0.0f64;
    let mut max_full = 0.0f64;
    for (r, c, v) in diff.entries() {
        max_full = max_full.max(v.norm());
        if safe(r) && safe(c) {
            max_safe = max_safe.max(v.norm());
        }
    }
    Ok(OperatorCheckReport {
        max_deviation_safe: max_safe,
        max_deviation_full: max_full,
        safe_states: (0..space.dim).filter(|&i| safe(i)).count(),
        matrix_commutator,
    })
}

/// Checks `[x, x†]` on the truncated space.
pub fn op_norm_check(x: &OperatorExpr, space: &FockSpace) -> Result<OperatorCheckReport, FockError> {
    commutator_check(x, &x.dagger(), space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slh::{feedback_registry, ModeKind, ModeRegistry};

    fn single(n: usize) -> (Registry, FockSpace) {
        let reg = ModeRegistry::new()
            .with("a", ModeKind::Optical)
            .unwrap()
            .into_shared();
        let space = FockSpace::new(&reg, &[("a", n)]).unwrap();
        (reg, space)
    }

    #[test]
    fn annihilation_entries() {
        let (reg, space) = single(3);
        let a = realize(&OperatorExpr::annihilation(&reg, 0), &space).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(a.get(1, 2), Complex64::new(2f64.sqrt(), 0.0));
    }

    #[test]
    fn number_is_diagonal() {
        let (reg, space) = single(4);
        let n = realize(&OperatorExpr::number(&reg, 0), &space).unwrap();
        for i in 0..4 {
            assert_eq!(n.get(i, i), Complex64::new(i as f64, 0.0));
        }
        assert_eq!(n.nnz(), 3);
    }

    #[test]
    fn index_convention() {
        let reg = feedback_registry();
        // Listed out of order on purpose: the space follows registration.
        let space = FockSpace::new(&reg, &[("b", 4), ("a", 2), ("c", 3)]).unwrap();
        assert_eq!(space.dim(), 24);
        assert_eq!(space.index(&[1, 2, 3]), 12 + 8 + 3);
        assert_eq!(space.occupations(23), vec![1, 2, 3]);
    }

    #[test]
    fn truncation_artifact_on_top_level() {
        let (reg, space) = single(10);
        let rep = op_norm_check(&OperatorExpr::annihilation(&reg, 0), &space).unwrap();
        assert!(rep.max_deviation_safe < 1e-12);
        assert_eq!(rep.safe_states, 9);
        assert!((rep.matrix_commutator.get(9, 9) - Complex64::new(-9.0, 0.0)).norm() < 1e-12);
        assert!((rep.matrix_commutator.get(8, 8) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unregistered_mode_rejected() {
        let reg = feedback_registry();
        let space = FockSpace::new(&reg, &[("a", 3)]).unwrap();
        let c = OperatorExpr::annihilation(&reg, 1);
        assert!(matches!(
            realize(&c, &space),
            Err(FockError::UnregisteredMode(l)) if l == "c"
        ));
    }

    #[test]
    fn bad_truncation() {
        let reg = feedback_registry();
        assert!(FockSpace::new(&reg, &[("a", 1)]).is_err());
        assert!(FockSpace::new(&reg, &[("z", 3)]).is_err());
    }

    #[test]
    fn sparse_merges_duplicates_and_zeros() {
        let one = Complex64::new(1.0, 0.0);
        let s = SparseOp::from_triplets(2, 2, vec![(0, 1, one), (0, 1, one), (1, 0, one), (1, 0, -one)]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), Complex64::new(2.0, 0.0));
    }
}
