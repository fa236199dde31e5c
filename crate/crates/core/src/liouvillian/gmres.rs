//! Restarted, right-preconditioned GMRES for complex systems.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_restarts: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            restart: 60,
            max_restarts: 40,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<C>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

type C = Complex64;

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves `A x = b` with right preconditioner `P`, i.e. `A P u = b`, `x = P u`.
pub fn gmres<A, P>(apply: A, precond: P, b: &[C], opts: &GmresOptions) -> GmresOutcome
where
    A: Fn(&[C]) -> Vec<C>,
    P: Fn(&[C]) -> Vec<C>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    for _ in 0..opts.max_restarts.max(1) {
        let ax = apply(&x);
        let r: Vec<C> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel < opts.tol {
            return GmresOutcome {
                x,
                iterations,
                relative_residual: rel,
                converged: true,
            };
        }
        let mut v: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        // Column-major upper Hessenberg, already rotated into triangular form.
        let mut h: Vec<Vec<C>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<C> = Vec::with_capacity(m);
        let mut g = vec![ZERO; m + 1];
        g[0] = C::new(beta, 0.0);
        let mut k = 0;
        while k < m {
            let z = precond(&v[k]);
            let mut w = apply(&z);
            let mut col = vec![ZERO; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                col[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let wn = norm(&w);
            col[k + 1] = C::new(wn, 0.0);
            for i in 0..k {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (1.0, ZERO)
            } else if a.norm() == 0.0 {
                (0.0, bb.conj() / bb.norm())
            } else {
                (a.norm() / r, (a / a.norm()) * bb.conj() / r)
            };
            col[k] = c * a + s * bb;
            col[k + 1] = ZERO;
            let gk = g[k];
            g[k] = c * gk;
            g[k + 1] = -s.conj() * gk;
            cs.push(c);
            sn.push(s);
            h.push(col);
            iterations += 1;
            k += 1;
            if g[k].norm() / bnorm < opts.tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / wn).collect());
        }
        // Back substitution on the triangular factor.
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k {
                acc -= h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        let mut u = vec![ZERO; n];
        for (vi, yi) in v.iter().zip(&y) {
            axpy(*yi, vi, &mut u);
        }
        let dx = precond(&u);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    let ax = apply(&x);
    let r: Vec<C> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm(&r) / bnorm;
    GmresOutcome {
        x,
        iterations,
        relative_residual: rel,
        converged: rel < opts.tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_dense_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut a = DMatrix::from_fn(n, n, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        for i in 0..n {
            a[(i, i)] += C::new(10.0, 2.0);
        }
        let b: Vec<C> = (0..n).map(|i| C::new(i as f64, 1.0)).collect();
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 8,
            max_restarts: 100,
        };
        let apply = |x: &[C]| (&a * DVector::from_column_slice(x)).as_slice().to_vec();
        let out = gmres(apply, |x: &[C]| x.to_vec(), &b, &opts);
        assert!(out.converged, "residual {}", out.relative_residual);
        let bx = &a * DVector::from_vec(out.x) - DVector::from_vec(b);
        assert!(bx.norm() < 1e-9);
    }
}
