//! The bistability cubic `f(λ) = 4λ³ − 4yλ² + (x² + y²)λ − z` and its
//! closed-form thresholds.

use serde::{Deserialize, Serialize};

/// Discriminant magnitude below which two roots are treated as merged.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicResult {
    /// Real roots, ascending.
    pub roots: Vec<f64>,
    /// `|f(λ_i)|` after polishing.
    pub residuals: Vec<f64>,
    pub discriminant: f64,
    /// Set when the discriminant is within [`DOUBLE_ROOT_TOL`] of zero; the
    /// merged pair is reported once.
    pub boundary: bool,
}

impl CubicResult {
    pub fn count(&self) -> usize {
        self.roots.len()
    }
}

/// Coefficients `(4, −4y, x² + y², −z)` of `f`, highest power first.
pub fn cubic_coefficients_xyz(x: f64, y: f64, z: f64) -> [f64; 4] {
    [4.0, -4.0 * y, x * x + y * y, -z]
}

pub fn eval_cubic(c: &[f64; 4], t: f64) -> f64 {
    ((c[0] * t + c[1]) * t + c[2]) * t + c[3]
}

fn eval_derivative(c: &[f64; 4], t: f64) -> f64 {
    (3.0 * c[0] * t + 2.0 * c[1]) * t + c[2]
}

pub fn discriminant(c: &[f64; 4]) -> f64 {
    let [a, b, cc, d] = *c;
    18.0 * a * b * cc * d - 4.0 * b.powi(3) * d + b * b * cc * cc - 4.0 * a * cc.powi(3) - 27.0 * a * a * d * d
}

fn polish(c: &[f64; 4], mut t: f64) -> f64 {
    for _ in 0..8 {
        let f = eval_cubic(c, t);
        let df = eval_derivative(c, t);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let step = f / df;
        let next = t - step;
        if eval_cubic(c, next).abs() >= f.abs() {
            break;
        }
        t = next;
    }
    t
}

/// Real roots of a cubic with positive leading coefficient.
pub fn solve_cubic_coeffs(c: &[f64; 4]) -> CubicResult {
    let [a, b, cc, d] = *c;
    let disc = discriminant(c);
    // Depressed cubic t³ + p t + q with λ = t − b/(3a).
    let shift = -b / (3.0 * a);
    let p = (3.0 * a * cc - b * b) / (3.0 * a * a);
    let q = (2.0 * b.powi(3) - 9.0 * a * b * cc + 27.0 * a * a * d) / (27.0 * a.powi(3));
    let boundary = disc.abs() < DOUBLE_ROOT_TOL;
    let mut roots = if boundary {
        if p.abs() < 1e-300 {
            vec![shift]
        } else {
            // Double root −3q/(2p) and simple root 3q/p.
            let mut r = vec![3.0 * q / p + shift, -1.5 * q / p + shift];
            r.sort_by(f64::total_cmp);
            r
        }
    } else if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    } else {
        let half_q = q / 2.0;
        let s = (half_q * half_q + p.powi(3) / 27.0).max(0.0).sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        vec![u + v + shift]
    };
    for r in &mut roots {
        *r = polish(c, *r);
    }
    roots.sort_by(f64::total_cmp);
    let residuals = roots.iter().map(|&r| eval_cubic(c, r).abs()).collect();
    CubicResult {
        roots,
        residuals,
        discriminant: disc,
        boundary,
    }
}

/// Roots of `4λ³ − 4yλ² + (x² + y²)λ − z`.
pub fn solve_cubic(x: f64, y: f64, z: f64) -> CubicResult {
    solve_cubic_coeffs(&cubic_coefficients_xyz(x, y, z))
}

/// `(ỹ, z̃) = (√3 x, 4ỹ³/27)`.
pub fn thresholds(x: f64) -> (f64, f64) {
    let yt = 3f64.sqrt() * x;
    (yt, 4.0 * yt.powi(3) / 27.0)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("no bistable window: y = {y} is below the threshold {y_threshold}")]
pub struct WindowError {
    pub y: f64,
    pub y_threshold: f64,
}

/// `(z₋, z₊)` with `z± = [y(y² + 3ỹ²) ± (y² − ỹ²)^{3/2}] / 27`.
pub fn bistable_window(x: f64, y: f64) -> Result<(f64, f64), WindowError> {
    let (yt, _) = thresholds(x);
    if y < yt {
        return Err(WindowError { y, y_threshold: yt });
    }
    let base = y * (y * y + 3.0 * yt * yt);
    let spread = (y * y - yt * yt).powf(1.5);
    Ok(((base - spread) / 27.0, (base + spread) / 27.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_closed_forms() {
        let (yt, zt) = thresholds(0.5);
        assert!((yt - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((zt - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(thresholds(0.0), (0.0, 0.0));
    }

    #[test]
    fn zero_drive_has_root_at_origin() {
        let r = solve_cubic(0.5, 0.3, 0.0);
        assert!(r.roots.iter().any(|x| x.abs() < 1e-14));
    }

    #[test]
    fn three_roots_inside_window() {
        let (zm, zp) = bistable_window(0.5, 1.2).unwrap();
        let r = solve_cubic(0.5, 1.2, 0.5 * (zm + zp));
        assert_eq!(r.count(), 3);
        assert!(r.residuals.iter().all(|&e| e < 1e-12));
        assert_eq!(solve_cubic(0.5, 1.2, zp * 1.01).count(), 1);
    }

    #[test]
    fn window_undefined_below_threshold() {
        assert!(bistable_window(0.5, 0.8).is_err());
    }

    #[test]
    fn merged_root_flagged_on_window_edge() {
        // At x = 0 the lower window edge is z = 0 with f = λ(2λ − y)².
        let r = solve_cubic(0.0, 1.0, 0.0);
        assert!(r.boundary);
        assert_eq!(r.count(), 2);
        assert!((r.roots[0]).abs() < 1e-14 && (r.roots[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn roots_match_companion_eigenvalues() {
        use nalgebra::Matrix3;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x: f64 = rng.gen_range(0.0..0.5);
            let y: f64 = rng.gen_range(0.0..2.5);
            let z: f64 = rng.gen_range(0.0..0.4);
            let r = solve_cubic(x, y, z);
            // Monic companion of λ³ − yλ² + (x² + y²)/4 λ − z/4.
            let m = Matrix3::new(0.0, 0.0, z / 4.0, 1.0, 0.0, -(x * x + y * y) / 4.0, 0.0, 1.0, y);
            let mut real: Vec<f64> = m
                .complex_eigenvalues()
                .iter()
                .filter(|e| e.im.abs() < 1e-6)
                .map(|e| e.re)
                .collect();
            real.sort_by(f64::total_cmp);
            if r.boundary || real.len() != r.count() {
                continue;
            }
            for (a, b) in r.roots.iter().zip(&real) {
                assert!((a - b).abs() < 1e-10, "({x},{y},{z}): {a} vs {b}");
            }
            assert!(r.residuals.iter().all(|&e| e < 1e-10 * z.max(1.0)));
        }
    }

    #[test]
    fn root_count_matches_window_scan() {
        let (x, y) = (0.5, 1.2);
        let (zm, zp) = bistable_window(x, y).unwrap();
        let n = 2000;
        let step = 0.4 / (n - 1) as f64;
        for i in 0..n {
            let z = i as f64 * step;
            let three = solve_cubic(x, y, z).count() == 3;
            let inside = z > zm && z < zp;
            let near_edge = (z - zm).abs() < step || (z - zp).abs() < step;
            assert!(three == inside || near_edge, "z = {z}");
        }
    }
}
