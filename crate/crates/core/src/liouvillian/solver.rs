//! Steady states of Lindblad generators.
//!
//! The trace condition is imposed by a rank-one completion: with `v` the
//! vectorized vacuum projector and `t` the trace functional, the system
//! `(L + v tᵀ) x = v` has the normalized steady state as its unique solution
//! whenever the null space of `L` is one-dimensional.
//!
//! Small generators are factorized densely. Larger ones use GMRES, right
//! preconditioned by the inverse of the no-jump part `X ↦ AX + XA†`, which
//! is applied in `O(D³)` through a Schur form `A = Q T Qᴴ`.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::gmres::{gmres, GmresOptions};
use super::{DensityMatrix, LiouvillianError, Superoperator};
use crate::linalg::{triangular_lyapunov, SplitMatrix};

/// Required `‖L vec ρ‖ / ‖L‖_F` for an accepted steady state.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: SolveMethod,
    /// `Auto` factorizes densely when `D² ≤ dense_limit`.
    pub dense_limit: usize,
    pub gmres: GmresOptions,
    /// Solve a second time with a different completion vector and compare.
    /// Dense solves always count the null space directly.
    pub check_uniqueness: bool,
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            dense_limit: 256,
            gmres: GmresOptions::default(),
            check_uniqueness: false,
            residual_tol: RESIDUAL_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

pub fn steady_state(sop: &Superoperator) -> Result<DensityMatrix, LiouvillianError> {
    steady_state_with(sop, &SolverOptions::default()).map(|s| s.rho)
}

pub fn steady_state_with(
    sop: &Superoperator,
    opts: &SolverOptions,
) -> Result<SteadyState, LiouvillianError> {
    let d = sop.dim();
    let n = d * d;
    let method = match opts.method {
        SolveMethod::Auto if n <= opts.dense_limit => SolveMethod::Dense,
        SolveMethod::Auto => SolveMethod::Iterative,
        m => m,
    };
    let mut vacuum = vec![Complex64::new(0.0, 0.0); n];
    vacuum[0] = Complex64::new(1.0, 0.0);

    let (x, iterations) = match method {
        SolveMethod::Dense => (dense_solve(sop)?, 0),
        _ => {
            let pre = NoJumpPreconditioner::new(sop.no_jump_generator());
            let (x, it) = iterative_solve(sop, &pre, &vacuum, opts)?;
            if opts.check_uniqueness {
                let mixed: Vec<Complex64> = (0..n)
                    .map(|k| {
                        if k % (d + 1) == 0 {
                            Complex64::new(1.0 / d as f64, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                let (x2, _) = iterative_solve(sop, &pre, &mixed, opts)?;
                let diff: f64 = x
                    .iter()
                    .zip(&x2)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if diff > 1e-6 {
                    return Err(LiouvillianError::DegenerateNullSpace(2));
                }
            }
            (x, it)
        }
    };

    let raw = DMatrix::from_vec(d, d, x);
    let mut rho = (&raw + raw.adjoint()).scale(0.5);
    let tr = rho.trace();
    rho /= tr;
    let residual = sop.apply_vec(rho.as_slice()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        / sop.frobenius_norm();
    if !(residual < opts.residual_tol) {
        return Err(LiouvillianError::SolverBreakdown {
            residual,
            iterations,
        });
    }
    let rho = DensityMatrix::new(rho)?;
    Ok(SteadyState {
        rho,
        residual,
        iterations,
        method,
    })
}

fn trace_indices(d: usize) -> impl Iterator<Item = usize> {
    (0..d).map(move |i| i * (d + 1))
}

fn dense_solve(sop: &Superoperator) -> Result<Vec<Complex64>, LiouvillianError> {
    let d = sop.dim();
    let n = d * d;
    let l = sop.matrix().to_dense();
    let sv = l.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let null = sv.iter().filter(|&&s| s <= 1e-10 * smax.max(1e-300)).count();
    if null != 1 {
        return Err(LiouvillianError::DegenerateNullSpace(null));
    }
    let mut m = l;
    for j in trace_indices(d) {
        m[(0, j)] += Complex64::new(1.0, 0.0);
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[0] = Complex64::new(1.0, 0.0);
    m.lu()
        .solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or(LiouvillianError::SolverBreakdown {
            residual: f64::INFINITY,
            iterations: 0,
        })
}

fn iterative_solve(
    sop: &Superoperator,
    pre: &NoJumpPreconditioner,
    completion: &[Complex64],
    opts: &SolverOptions,
) -> Result<(Vec<Complex64>, usize), LiouvillianError> {
    let d = sop.dim();
    let apply = |x: &[Complex64]| {
        let tr: Complex64 = trace_indices(d).map(|k| x[k]).sum();
        let mut y = sop.apply_vec(x);
        for (yi, vi) in y.iter_mut().zip(completion) {
            *yi += vi * tr;
        }
        y
    };
    let out = gmres(apply, |x: &[Complex64]| pre.apply(x), completion, &opts.gmres);
    if !out.x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(LiouvillianError::SolverBreakdown {
            residual: out.relative_residual,
            iterations: out.iterations,
        });
    }
    log::debug!(
        "gmres: {} iterations, relative residual {:e}",
        out.iterations,
        out.relative_residual
    );
    Ok((out.x, out.iterations))
}

/// Inverse of `X ↦ AX + XA†` through the Schur form of `A`.
struct NoJumpPreconditioner {
    d: usize,
    q: SplitMatrix,
    qh: SplitMatrix,
    t: DMatrix<Complex64>,
    floor: f64,
}

impl NoJumpPreconditioner {
    fn new(a: &DMatrix<Complex64>) -> Self {
        let d = a.nrows();
        let (q, t) = Schur::new(a.clone()).unpack();
        let q = SplitMatrix::from_complex(&q);
        let qh = q.adjoint();
        let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        Self {
            d,
            q,
            qh,
            t,
            floor: 1e-14 * scale,
        }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let r = SplitMatrix::from_complex(&DMatrix::from_column_slice(self.d, self.d, x));
        let f = self.qh.mul(&r).mul(&self.q).to_complex();
        let y = triangular_lyapunov(&self.t, &f, self.floor);
        let out = self.q.mul(&SplitMatrix::from_complex(&y)).mul(&self.qh);
        out.to_complex().as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpace;
    use crate::liouvillian::{build_liouvillian, expectation, g2_zero, LindbladModel};
    use crate::slh::{ModeKind, ModeRegistry, OperatorExpr};

    fn driven_cavity(n: usize, delta: f64, kappa: f64, eps: f64) -> (FockSpace, Superoperator) {
        let reg = ModeRegistry::new()
            .with("a", ModeKind::Optical)
            .unwrap()
            .into_shared();
        let space = FockSpace::new(&reg, &[("a", n)]).unwrap();
        let a = OperatorExpr::annihilation(&reg, 0);
        let h = &OperatorExpr::number(&reg, 0).scale_real(delta)
            + &(&a + &a.dagger()).scale_real(eps);
        let model = LindbladModel::from_exprs(space.clone(), &h, &[(a, kappa)]).unwrap();
        let sop = build_liouvillian(&model).unwrap();
        (space, sop)
    }

    #[test]
    fn schur_form_is_triangular() {
        let (_, sop) = driven_cavity(6, 0.3, 1.0, 0.2);
        let (q, t) = Schur::new(sop.no_jump_generator().clone()).unpack();
        for i in 0..t.nrows() {
            for j in 0..i {
                assert!(t[(i, j)].norm() < 1e-12, "T[{i},{j}] = {}", t[(i, j)]);
            }
        }
        let back = &q * &t * q.adjoint() - sop.no_jump_generator();
        assert!(back.norm() < 1e-12);
    }

    #[test]
    fn undriven_cavity_relaxes_to_vacuum() {
        let (_, sop) = driven_cavity(5, 0.4, 1.0, 0.0);
        for method in [SolveMethod::Dense, SolveMethod::Iterative] {
            let opts = SolverOptions {
                method,
                ..Default::default()
            };
            let ss = steady_state_with(&sop, &opts).unwrap();
            assert!((ss.rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let (space, sop) = driven_cavity(12, 0.7, 1.3, 0.35);
        let dense = steady_state_with(
            &sop,
            &SolverOptions {
                method: SolveMethod::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let it = steady_state_with(
            &sop,
            &SolverOptions {
                method: SolveMethod::Iterative,
                check_uniqueness: true,
                ..Default::default()
            },
        )
        .unwrap();
        let diff = (dense.rho.matrix() - it.rho.matrix()).norm();
        assert!(diff < 1e-10, "diff {diff}");
        let a = space.annihilator("a").unwrap();
        let alpha = expectation(&it.rho, &a).unwrap();
        // ⟨a⟩ = −iε / (iΔ + κ/2)
        let want = Complex64::new(0.0, -0.35) / Complex64::new(1.3 / 2.0, 0.7);
        assert!((alpha - want).norm() < 1e-8);
        assert!((g2_zero(&it.rho, &space, "a").unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unitary_generator_null_space_is_degenerate() {
        let (_, sop) = driven_cavity(4, 0.5, 0.0, 0.0);
        assert!(matches!(
            steady_state(&sop),
            Err(LiouvillianError::DegenerateNullSpace(4))
        ));
    }
}
