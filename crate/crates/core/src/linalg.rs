//! Dense complex kernels used by the steady-state solver.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// A complex matrix stored as separate real and imaginary parts so that
/// products can go through the optimized real GEMM.
#[derive(Clone, Debug)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn mul(&self, rhs: &SplitMatrix) -> SplitMatrix {
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        SplitMatrix { re, im }
    }
}

pub fn cmatmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    SplitMatrix::from_complex(a)
        .mul(&SplitMatrix::from_complex(b))
        .to_complex()
}

/// Solves `T Y + Y Tᴴ = F` for upper-triangular `T`, column by column from
/// the last one. Denominators smaller than `floor` are clamped to keep the
/// solve finite; the result is only used as a preconditioner.
pub fn triangular_lyapunov(t: &DMatrix<Complex64>, f: &DMatrix<Complex64>, floor: f64) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for j in (0..n).rev() {
        for i in 0..n {
            rhs[i] = f[(i, j)];
        }
        for k in (j + 1)..n {
            let s = t[(j, k)].conj();
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            let yk = y.column(k);
            for i in 0..n {
                rhs[i] -= s * yk[i];
            }
        }
        // (T + conj(T_jj) I) y_j = rhs, back substitution.
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            let mut d = t[(i, i)] + shift;
            if d.norm() < floor {
                d = Complex64::new(floor, 0.0);
            }
            y[(i, j)] = acc / d;
        }
    }
    y
}
