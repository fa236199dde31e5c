//! Lindblad generators, steady states and photon statistics.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)` and `vec(X)[i + j·D] = X[i, j]`.

mod gmres;
mod solver;
pub mod sweep;

pub use gmres::{gmres, GmresOptions, GmresOutcome};
pub use solver::{steady_state, steady_state_with, SolveMethod, SolverOptions, SteadyState};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{realize, FockError, FockSpace, SparseOp};
use crate::slh::OperatorExpr;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvillianError {
    #[error("Hamiltonian is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),
    #[error("operator dimension {got} does not match the space dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative collapse rate {0}")]
    NegativeRate(f64),
    #[error("generator null space has dimension {0}, expected 1")]
    DegenerateNullSpace(usize),
    #[error("steady-state solver failed (relative residual {residual:e} after {iterations} iterations)")]
    SolverBreakdown { residual: f64, iterations: usize },
    #[error("steady state is not a valid density matrix: {0}")]
    Unphysical(String),
    #[error("g2 undefined: occupation {0:e} below the vacuum floor")]
    VacuumOccupation(f64),
    #[error("integration unstable: trace drifted by {0:e}")]
    TraceDrift(f64),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Lowest occupation for which a normalized correlation is reported.
pub const OCCUPANCY_FLOOR: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CollapseChannel {
    pub op: SparseOp,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    space: FockSpace,
    h: SparseOp,
    channels: Vec<CollapseChannel>,
}

impl LindbladModel {
    pub fn new(
        space: FockSpace,
        h: SparseOp,
        channels: Vec<CollapseChannel>,
    ) -> Result<Self, LiouvillianError> {
        let d = space.dim();
        for op in std::iter::once(&h).chain(channels.iter().map(|c| &c.op)) {
            if op.nrows() != d || op.ncols() != d {
                return Err(LiouvillianError::DimensionMismatch {
                    expected: d,
                    got: op.nrows(),
                });
            }
        }
        if let Some(c) = channels.iter().find(|c| !(c.rate >= 0.0)) {
            return Err(LiouvillianError::NegativeRate(c.rate));
        }
        let dev = h.hermitian_deviation();
        if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
            return Err(LiouvillianError::NonHermitian(dev));
        }
        Ok(Self { space, h, channels })
    }

    /// Realizes a symbolic Hamiltonian and collapse operators on `space`.
    pub fn from_exprs(
        space: FockSpace,
        h: &OperatorExpr,
        channels: &[(OperatorExpr, f64)],
    ) -> Result<Self, LiouvillianError> {
        let hm = realize(h, &space)?;
        let mut ch = Vec::with_capacity(channels.len());
        for (op, rate) in channels {
            ch.push(CollapseChannel {
                op: realize(op, &space)?,
                rate: *rate,
            });
        }
        Self::new(space, hm, ch)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &SparseOp {
        &self.h
    }

    pub fn channels(&self) -> &[CollapseChannel] {
        &self.channels
    }

    /// `−iH − ½ Σ r L†L`, the generator of the no-jump evolution.
    pub fn effective_hamiltonian_generator(&self) -> SparseOp {
        let mut a = self.h.scale(Complex64::new(0.0, -1.0));
        for c in &self.channels {
            let ldl = c.op.adjoint().matmul(&c.op);
            a = a.add(&ldl.scale(Complex64::new(-0.5 * c.rate, 0.0)));
        }
        a
    }
}

/// The vectorized generator acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    matrix: SparseOp,
    /// No-jump generator `A`; the superoperator is `X ↦ AX + XA† + jumps`.
    no_jump: DMatrix<Complex64>,
}

impl Superoperator {
    /// Side length `D` of the density matrices it acts on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &SparseOp {
        &self.matrix
    }

    pub fn no_jump_generator(&self) -> &DMatrix<Complex64> {
        &self.no_jump
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(x)
    }

    /// `L(ρ)` as a matrix.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = self.dim;
        let y = self.matrix.apply(rho.as_slice());
        DMatrix::from_vec(d, d, y)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }
}

/// Builds `−i(I⊗H − Hᵀ⊗I) + Σ r (L̄⊗L − ½ I⊗L†L − ½ (L†L)ᵀ⊗I)`.
pub fn build_liouvillian(m: &LindbladModel) -> Result<Superoperator, LiouvillianError> {
    let d = m.space.dim();
    let dev = m.h.hermitian_deviation();
    if dev > HERMITIAN_TOL * m.h.max_abs().max(1.0) {
        return Err(LiouvillianError::NonHermitian(dev));
    }
    let id = SparseOp::identity(d);
    let mi = Complex64::new(0.0, -1.0);
    let mut total = id
        .kron(&m.h)
        .sub(&m.h.transpose().kron(&id))
        .scale(mi);
    for c in &m.channels {
        if c.rate == 0.0 {
            continue;
        }
        let ldl = c.op.adjoint().matmul(&c.op);
        let jump = c.op.conj().kron(&c.op);
        let anti = id.kron(&ldl).add(&ldl.transpose().kron(&id));
        let term = jump.sub(&anti.scale(Complex64::new(0.5, 0.0)));
        total = total.add(&term.scale(Complex64::new(c.rate, 0.0)));
    }
    Ok(Superoperator {
        dim: d,
        matrix: total,
        no_jump: m.effective_hamiltonian_generator().to_dense(),
    })
}

/// Tolerances of the density-matrix invariants.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_SLACK: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Accepts a matrix that satisfies the invariants.
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self, LiouvillianError> {
        let out = Self { rho };
        out.validate()?;
        Ok(out)
    }

    /// Wraps a matrix without checking it (e.g. an intermediate of a
    /// time evolution).
    pub fn new_unchecked(rho: DMatrix<Complex64>) -> Self {
        Self { rho }
    }

    /// `|n⟩⟨n|` for a composite basis index.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(index, index)] = Complex64::new(1.0, 0.0);
        Self { rho }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<(), LiouvillianError> {
        let h = self.hermitian_deviation();
        if h > HERMITICITY_TOL {
            return Err(LiouvillianError::Unphysical(format!("Hermiticity deviation {h:e}")));
        }
        let t = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        if t > TRACE_TOL {
            return Err(LiouvillianError::Unphysical(format!("trace deviation {t:e}")));
        }
        let e = self.min_eigenvalue();
        if e < POSITIVITY_SLACK {
            return Err(LiouvillianError::Unphysical(format!("minimum eigenvalue {e:e}")));
        }
        Ok(())
    }
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, op: &SparseOp) -> Result<Complex64, LiouvillianError> {
    let d = rho.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(LiouvillianError::DimensionMismatch {
            expected: d,
            got: op.nrows(),
        });
    }
    Ok(op.entries().map(|(i, j, v)| v * rho.rho[(j, i)]).sum())
}

/// `⟨x†x†xx⟩ / ⟨x†x⟩²` for the given annihilation operator.
pub fn g2_from_annihilator(rho: &DensityMatrix, a: &SparseOp) -> Result<f64, LiouvillianError> {
    let ad = a.adjoint();
    let n = expectation(rho, &ad.matmul(a))?.re;
    if !(n >= OCCUPANCY_FLOOR) {
        return Err(LiouvillianError::VacuumOccupation(n));
    }
    let aa = a.matmul(a);
    let nn = expectation(rho, &aa.adjoint().matmul(&aa))?.re;
    Ok((nn / (n * n)).max(0.0))
}

/// Equal-time second-order correlation of a labelled mode.
pub fn g2_zero(rho: &DensityMatrix, space: &FockSpace, mode: &str) -> Result<f64, LiouvillianError> {
    g2_from_annihilator(rho, &space.annihilator(mode)?)
}

/// Mean occupation of a labelled mode.
pub fn occupation(rho: &DensityMatrix, space: &FockSpace, mode: &str) -> Result<f64, LiouvillianError> {
    let a = space.annihilator(mode)?;
    Ok(expectation(rho, &a.adjoint().matmul(&a))?.re)
}

/// Fixed-step RK4 integration of `dρ/dt = L(ρ)`.
///
/// The trace is monitored after every step; a drift beyond `1e-8` signals a
/// step size outside the stability region.
pub fn evolve(
    rho0: &DensityMatrix,
    sop: &Superoperator,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix, LiouvillianError> {
    let d = sop.dim();
    if rho0.dim() != d {
        return Err(LiouvillianError::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    let steps = (t_final / dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(rho0.clone());
    }
    let h = t_final / steps as f64;
    let tr0 = rho0.trace();
    let mut x = rho0.rho.as_slice().to_vec();
    let n = x.len();
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let combine = |x: &[Complex64], k: &[Complex64], s: f64, out: &mut [Complex64]| {
        for i in 0..n {
            out[i] = x[i] + k[i] * s;
        }
    };
    for _ in 0..steps {
        let k1 = sop.apply_vec(&x);
        combine(&x, &k1, 0.5 * h, &mut tmp);
        let k2 = sop.apply_vec(&tmp);
        combine(&x, &k2, 0.5 * h, &mut tmp);
        let k3 = sop.apply_vec(&tmp);
        combine(&x, &k3, h, &mut tmp);
        let k4 = sop.apply_vec(&tmp);
        for i in 0..n {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        let tr: Complex64 = (0..d).map(|i| x[i + i * d]).sum();
        let drift = (tr - tr0).norm();
        if !(drift <= 1e-8) {
            return Err(LiouvillianError::TraceDrift(drift));
        }
    }
    Ok(DensityMatrix::new_unchecked(DMatrix::from_vec(d, d, x)))
}
