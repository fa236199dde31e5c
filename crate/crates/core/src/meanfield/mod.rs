//! Semiclassical (mean-field) analysis of the feedback network.
//!
//! State variables are the complex amplitudes `A = ⟨a⟩`, `B = ⟨b⟩`,
//! `C = ⟨c⟩`; all rates are in units of `γ`.

pub mod cubic;
pub mod sweep;

pub use cubic::{bistable_window, solve_cubic, thresholds, CubicResult, WindowError};
pub use sweep::{bistability_sweep, fig4_panel, BranchRow, BranchTable, SweepVariable};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::FeedbackParams;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error("decay rate gamma must be positive")]
    ZeroGamma,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("fixed-point iteration from seed {seed} did not converge (residual {residual:e})")]
    NonConvergence { seed: usize, residual: f64 },
    #[error("x = {0} is outside the reachable range [{1}, 0.5]")]
    UnreachableX(f64, f64),
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalParams {
    pub delta_s: f64,
    pub delta_c: f64,
    pub omega_m: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_f: f64,
    pub gamma_m: f64,
    pub g0: f64,
    pub eps: f64,
}

impl From<&FeedbackParams> for SemiclassicalParams {
    fn from(p: &FeedbackParams) -> Self {
        Self {
            delta_s: p.delta_s,
            delta_c: p.delta_c,
            omega_m: p.omega_m,
            gamma: p.gamma,
            kappa: p.kappa,
            kappa_f: p.kappa_f,
            gamma_m: p.gamma_m,
            g0: p.g0,
            eps: p.eps,
        }
    }
}

impl SemiclassicalParams {
    pub fn validate(&self) -> Result<(), MeanFieldError> {
        if !(self.gamma > 0.0) {
            return Err(MeanFieldError::ZeroGamma);
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("kappa_f", self.kappa_f),
            ("gamma_m", self.gamma_m),
            ("omega_m", self.omega_m),
            ("g0", self.g0),
        ] {
            if !(v >= 0.0) {
                return Err(MeanFieldError::InvalidParams(format!("{name} = {v} must be nonnegative")));
            }
        }
        Ok(())
    }

    /// Mechanical quality factor `ω_m / γ_m`.
    pub fn q_m(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    /// `(√κ + √κ_f)²`, the total decay of the controlled cavity.
    pub fn alpha_sq(&self) -> f64 {
        (self.kappa.sqrt() + self.kappa_f.sqrt()).powi(2)
    }

    fn loop_denominator(&self) -> f64 {
        4.0 * self.delta_s * self.delta_s + self.alpha_sq().powi(2)
    }

    /// `K = 4γκ_f / (4Δ_s² + (√κ + √κ_f)⁴)`, so that `n_A = K n`.
    pub fn k_factor(&self) -> f64 {
        4.0 * self.gamma * self.kappa_f / self.loop_denominator()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub a: C,
    pub b: C,
    pub c: C,
}

impl MeanFieldState {
    pub const ZERO: Self = Self {
        a: C::new(0.0, 0.0),
        b: C::new(0.0, 0.0),
        c: C::new(0.0, 0.0),
    };

    fn to_real(self) -> DVector<f64> {
        DVector::from_vec(vec![self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im])
    }

    fn from_real(v: &DVector<f64>) -> Self {
        Self {
            a: C::new(v[0], v[1]),
            b: C::new(v[2], v[3]),
            c: C::new(v[4], v[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Time derivative of the mean amplitudes.
pub fn mf_rhs(s: &MeanFieldState, p: &SemiclassicalParams) -> MeanFieldState {
    let da = -(I * p.delta_s + 0.5 * p.alpha_sq()) * s.a - (p.gamma * p.kappa_f).sqrt() * s.c;
    let db = -(I * p.omega_m + 0.5 * p.gamma_m) * s.b - I * p.g0 * s.c.norm_sqr();
    let dc = -I * p.delta_c * s.c - I * p.g0 * s.c * (s.b.conj() + s.b) - I * p.eps
        - (p.kappa * p.gamma).sqrt() * s.a
        - 0.5 * p.gamma * s.c;
    MeanFieldState { a: da, b: db, c: dc }
}

/// Real 6×6 Jacobian of [`mf_rhs`] in the ordering
/// `(Re A, Im A, Re B, Im B, Re C, Im C)`.
pub fn mf_jacobian(s: &MeanFieldState, p: &SemiclassicalParams) -> DMatrix<f64> {
    // For each (output, input) pair, the Wirtinger derivatives ∂f/∂w and ∂f/∂w̄.
    let zero = C::new(0.0, 0.0);
    let mut d = [[(zero, zero); 3]; 3];
    d[0][0] = (-(I * p.delta_s + 0.5 * p.alpha_sq()), zero);
    d[0][2] = (C::new(-(p.gamma * p.kappa_f).sqrt(), 0.0), zero);
    d[1][1] = (-(I * p.omega_m + 0.5 * p.gamma_m), zero);
    d[1][2] = (-I * p.g0 * s.c.conj(), -I * p.g0 * s.c);
    d[2][0] = (C::new(-(p.kappa * p.gamma).sqrt(), 0.0), zero);
    d[2][1] = (-I * p.g0 * s.c, -I * p.g0 * s.c);
    d[2][2] = (-I * p.delta_c - I * p.g0 * (s.b.conj() + s.b) - 0.5 * p.gamma, zero);
    let mut j = DMatrix::zeros(6, 6);
    for (r, row) in d.iter().enumerate() {
        for (c, &(fw, fwb)) in row.iter().enumerate() {
            let du = fw + fwb;
            let dv = I * (fw - fwb);
            j[(2 * r, 2 * c)] = du.re;
            j[(2 * r + 1, 2 * c)] = du.im;
            j[(2 * r, 2 * c + 1)] = dv.re;
            j[(2 * r + 1, 2 * c + 1)] = dv.im;
        }
    }
    j
}

/// `(p₁, p₂)`: effective damping and detuning of the controller cavity once
/// the controlled cavity is eliminated.
pub fn p1p2(p: &SemiclassicalParams) -> Result<(f64, f64), MeanFieldError> {
    if !(p.gamma > 0.0) {
        return Err(MeanFieldError::ZeroGamma);
    }
    let den = p.loop_denominator();
    let root = (p.kappa * p.kappa_f).sqrt();
    let p1 = p.gamma / 2.0 - 2.0 * p.gamma * root * p.alpha_sq() / den;
    let p2 = p.delta_c + 4.0 * p.gamma * root * p.delta_s / den;
    Ok((p1, p2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub k: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
}

pub fn dimensionless(p: &SemiclassicalParams) -> Result<DimensionlessParams, MeanFieldError> {
    let (p1, p2) = p1p2(p)?;
    let k = p.g0 * p.g0 / (p.gamma * p.omega_m);
    Ok(DimensionlessParams {
        x: p1 / p.gamma,
        y: p2 / p.gamma,
        z: k * p.eps * p.eps / (p.gamma * p.gamma),
        k,
        big_k: p.k_factor(),
    })
}

/// Coefficients `(4, −4y, x² + y², −z)` of the cubic in `λ = k n`.
pub fn cubic_coefficients(p: &SemiclassicalParams) -> Result<[f64; 4], MeanFieldError> {
    let d = dimensionless(p)?;
    Ok(cubic::cubic_coefficients_xyz(d.x, d.y, d.z))
}

/// Rates used to realize dimensionless points physically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBase {
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_f: f64,
    pub g0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
}

impl Default for PhysicalBase {
    /// κ = κ_f = γ (so `x` spans `[0, 0.5)`), `k = 0.01`, `Q_m = 10⁴`.
    fn default() -> Self {
        Self {
            gamma: 1.0,
            kappa: 1.0,
            kappa_f: 1.0,
            g0: 1.0,
            omega_m: 100.0,
            gamma_m: 0.01,
        }
    }
}

impl PhysicalBase {
    fn with_detunings(&self, delta_s: f64, delta_c: f64, eps: f64) -> SemiclassicalParams {
        SemiclassicalParams {
            delta_s,
            delta_c,
            omega_m: self.omega_m,
            gamma: self.gamma,
            kappa: self.kappa,
            kappa_f: self.kappa_f,
            gamma_m: self.gamma_m,
            g0: self.g0,
            eps,
        }
    }

    /// Smallest `x`, reached at `Δ_s = 0`.
    pub fn x_min(&self) -> f64 {
        let p = self.with_detunings(0.0, 0.0, 0.0);
        p1p2(&p).map(|(p1, _)| p1 / p.gamma).unwrap_or(0.5)
    }

    /// Physical parameters with the requested `(x, y, z)`.
    ///
    /// `x` is set through `Δ_s ≥ 0`; `x = 0.5` is reached by opening the
    /// feedback loop (`κ_f = 0`). `y` then fixes `Δ_c` and `z` fixes `ε`.
    pub fn realize(&self, x: f64, y: f64, z: f64) -> Result<SemiclassicalParams, MeanFieldError> {
        let xmin = self.x_min();
        if !(x >= xmin - 1e-12 && x <= 0.5) {
            return Err(MeanFieldError::UnreachableX(x, xmin));
        }
        let g = self.gamma;
        let mut base = *self;
        let delta_s = if x >= 0.5 {
            base.kappa_f = 0.0;
            0.0
        } else {
            let a2 = (base.kappa.sqrt() + base.kappa_f.sqrt()).powi(2);
            let root = (base.kappa * base.kappa_f).sqrt();
            let four_d2 = 2.0 * root * a2 / (0.5 - x) - a2 * a2;
            (four_d2.max(0.0) / 4.0).sqrt()
        };
        let mut p = base.with_detunings(delta_s, 0.0, 0.0);
        let (_, p2_zero) = p1p2(&p)?;
        p.delta_c = y * g - p2_zero;
        let k = p.g0 * p.g0 / (g * p.omega_m);
        p.eps = (z / k).sqrt() * g;
        Ok(p)
    }
}

/// Fixed point with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub state: MeanFieldState,
    /// Relative residual of the three stationarity equations.
    pub residual: f64,
    pub n: f64,
    pub n_a: f64,
    pub iterations: usize,
}

/// Right-hand sides of the stationary relations `A₀ = …`, `B₀ = …`, `C₀ = …`.
fn stationary_map(s: &MeanFieldState, p: &SemiclassicalParams) -> MeanFieldState {
    let a = -(p.gamma * p.kappa_f).sqrt() * s.c / (I * p.delta_s + 0.5 * p.alpha_sq());
    let b = -I * p.g0 / (I * p.omega_m + 0.5 * p.gamma_m) * s.c.norm_sqr();
    let c = (-I * p.eps - (p.kappa * p.gamma).sqrt() * s.a)
        / (I * p.delta_c + I * p.g0 * (s.b.conj() + s.b) + 0.5 * p.gamma);
    MeanFieldState { a, b, c }
}

/// Norm-wise relative residual `‖X − G(X)‖ / ‖X‖` of the stationary
/// relations `X = G(X)`.
pub fn stationary_residual(s: &MeanFieldState, p: &SemiclassicalParams) -> f64 {
    let m = stationary_map(s, p);
    let diff = ((s.a - m.a).norm_sqr() + (s.b - m.b).norm_sqr() + (s.c - m.c).norm_sqr()).sqrt();
    let scale = (s.a.norm_sqr() + s.b.norm_sqr() + s.c.norm_sqr()).sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Amplitudes implied by a controller occupation `n`, from the stationary
/// relations with `B₀` evaluated at that `n`.
pub fn state_from_occupation(n: f64, p: &SemiclassicalParams) -> MeanFieldState {
    let b = -I * p.g0 * n / (I * p.omega_m + 0.5 * p.gamma_m);
    let loop_term = (p.gamma * p.kappa).sqrt() * (p.gamma * p.kappa_f).sqrt()
        / (I * p.delta_s + 0.5 * p.alpha_sq());
    let den = I * p.delta_c + I * p.g0 * (b.conj() + b) + 0.5 * p.gamma - loop_term;
    let c = -I * p.eps / den;
    let a = -(p.gamma * p.kappa_f).sqrt() * c / (I * p.delta_s + 0.5 * p.alpha_sq());
    MeanFieldState { a, b, c }
}

const NEWTON_MAX_ITER: usize = 100;
const FIXED_POINT_TOL: f64 = 1e-10;

/// Damped Newton iteration on `mf_rhs = 0` from `seed`.
pub fn refine_fixed_point(
    seed: MeanFieldState,
    p: &SemiclassicalParams,
    seed_index: usize,
) -> Result<FixedPoint, MeanFieldError> {
    let norm = |s: &MeanFieldState| {
        let f = mf_rhs(s, p);
        (f.a.norm_sqr() + f.b.norm_sqr() + f.c.norm_sqr()).sqrt()
    };
    let mut s = seed;
    let mut iterations = 0;
    for it in 0..NEWTON_MAX_ITER {
        iterations = it;
        if stationary_residual(&s, p) < 1e-14 {
            break;
        }
        let f = mf_rhs(&s, p).to_real();
        let j = mf_jacobian(&s, p);
        let Some(step) = j.lu().solve(&f) else { break };
        let x0 = s.to_real();
        let f0 = norm(&s);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let trial = MeanFieldState::from_real(&(&x0 - &step * t));
            if norm(&trial) < f0 || f0 == 0.0 {
                s = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = stationary_residual(&s, p);
    if !(residual < FIXED_POINT_TOL) || !s.is_finite() {
        return Err(MeanFieldError::NonConvergence {
            seed: seed_index,
            residual,
        });
    }
    let n = s.c.norm_sqr();
    Ok(FixedPoint {
        state: s,
        residual,
        n,
        n_a: s.a.norm_sqr(),
        iterations,
    })
}

/// Every fixed point, one per real nonnegative root of the cubic, in
/// ascending order of `n`.
pub fn mf_steady_fixedpoints(p: &SemiclassicalParams) -> Result<Vec<FixedPoint>, MeanFieldError> {
    p.validate()?;
    if p.eps == 0.0 {
        return Ok(vec![FixedPoint {
            state: MeanFieldState::ZERO,
            residual: 0.0,
            n: 0.0,
            n_a: 0.0,
            iterations: 0,
        }]);
    }
    let d = dimensionless(p)?;
    let roots = cubic::solve_cubic(d.x, d.y, d.z);
    let mut out = Vec::new();
    for (i, &lambda) in roots.roots.iter().enumerate() {
        let n = if d.k > 0.0 { lambda / d.k } else { 0.0 };
        let seed = state_from_occupation(n.max(0.0), p);
        out.push(refine_fixed_point(seed, p, i)?);
    }
    if d.k == 0.0 {
        out.truncate(1);
    }
    Ok(out)
}

/// The lowest-occupation fixed point (the unique one outside the bistable
/// window).
pub fn mf_steady_fixedpoint(p: &SemiclassicalParams) -> Result<MeanFieldState, MeanFieldError> {
    Ok(mf_steady_fixedpoints(p)?[0].state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// Largest real part of the linearization eigenvalues at a state.
pub fn max_growth_rate(s: &MeanFieldState, p: &SemiclassicalParams) -> f64 {
    mf_jacobian(s, p)
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn stability_of(s: &MeanFieldState, p: &SemiclassicalParams) -> Stability {
    let g = max_growth_rate(s, p);
    if g.abs() < 1e-8 {
        Stability::Marginal
    } else if g < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Stability of the fixed point belonging to root `λ` of the cubic.
pub fn classify_stability(lambda: f64, p: &SemiclassicalParams) -> Result<Stability, MeanFieldError> {
    let d = dimensionless(p)?;
    let n = if d.k > 0.0 { lambda / d.k } else { 0.0 };
    let fp = refine_fixed_point(state_from_occupation(n.max(0.0), p), p, 0)?;
    Ok(stability_of(&fp.state, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SemiclassicalParams {
        SemiclassicalParams {
            delta_s: 0.7,
            delta_c: 1.1,
            omega_m: 10.0,
            gamma: 1.0,
            kappa: 1.3,
            kappa_f: 0.8,
            gamma_m: 0.2,
            g0: 0.9,
            eps: 0.4,
        }
    }

    #[test]
    fn vacuum_fixed_point_without_drive() {
        let p = SemiclassicalParams { eps: 0.0, ..sample() };
        let f = mf_rhs(&MeanFieldState::ZERO, &p);
        assert_eq!(f, MeanFieldState::ZERO);
        assert_eq!(mf_steady_fixedpoint(&p).unwrap(), MeanFieldState::ZERO);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = sample();
        let s = MeanFieldState {
            a: C::new(0.3, -0.2),
            b: C::new(-0.1, 0.4),
            c: C::new(0.5, 0.25),
        };
        let j = mf_jacobian(&s, &p);
        let x0 = s.to_real();
        let h = 1e-6;
        for k in 0..6 {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[k] += h;
            xm[k] -= h;
            let fp = mf_rhs(&MeanFieldState::from_real(&xp), &p).to_real();
            let fm = mf_rhs(&MeanFieldState::from_real(&xm), &p).to_real();
            let col = (fp - fm) / (2.0 * h);
            for r in 0..6 {
                let want = col[r];
                let err = (j[(r, k)] - want).abs() / want.abs().max(1.0);
                assert!(err < 1e-6, "J[{r},{k}] = {} vs {}", j[(r, k)], want);
            }
        }
    }

    #[test]
    fn open_loop_gives_half() {
        let p = SemiclassicalParams { kappa_f: 0.0, ..sample() };
        let (p1, p2) = p1p2(&p).unwrap();
        assert_eq!(p1, 0.5);
        assert_eq!(p2, p.delta_c);
    }

    #[test]
    fn mechanical_amplitude_relation() {
        let p = sample();
        let fp = mf_steady_fixedpoints(&p).unwrap();
        for f in fp {
            let want = -I * p.g0 * f.n / (I * p.omega_m + 0.5 * p.gamma_m);
            assert!((f.state.b - want).norm() < 1e-12 * want.norm().max(1e-300) + 1e-15);
            assert!((f.n_a - p.k_factor() * f.n).abs() <= 1e-10 * f.n_a.max(1e-300));
        }
    }

    #[test]
    fn realize_hits_requested_point() {
        let base = PhysicalBase::default();
        for &(x, y, z) in &[(0.0, 1.2, 0.1), (0.25, 0.8, 0.05), (0.5, 1.7, 0.3)] {
            let p = base.realize(x, y, z).unwrap();
            let d = dimensionless(&p).unwrap();
            assert!((d.x - x).abs() < 1e-12 && (d.y - y).abs() < 1e-12 && (d.z - z).abs() < 1e-12);
        }
        assert!(base.realize(-0.1, 1.0, 0.1).is_err());
    }

    #[test]
    fn decoupled_linear_limit() {
        // g0 = 0 and κ_f = 0: the controlled cavity stays empty and the
        // controller is a driven damped oscillator.
        let p = SemiclassicalParams { g0: 0.0, kappa_f: 0.0, ..sample() };
        let want_c = -I * p.eps / (I * p.delta_c + 0.5 * p.gamma);
        let fp = mf_steady_fixedpoint(&p).unwrap();
        assert!(fp.a.norm() < 1e-15 && fp.b.norm() < 1e-15);
        assert!((fp.c - want_c).norm() < 1e-13);
        let r = mf_rhs(&MeanFieldState { a: C::new(0.0, 0.0), b: C::new(0.0, 0.0), c: want_c }, &p);
        assert!(r.a.norm() + r.b.norm() + r.c.norm() < 1e-14);
    }

    #[test]
    fn fixed_point_tracks_cubic_root_at_high_q() {
        let base = PhysicalBase::default();
        let p = base.realize(0.0, 1.2, 0.1).unwrap();
        assert!((p.q_m() - 1e4).abs() < 1e-9);
        let d = dimensionless(&p).unwrap();
        let roots = solve_cubic(d.x, d.y, d.z);
        let fps = mf_steady_fixedpoints(&p).unwrap();
        assert_eq!(fps.len(), roots.count());
        for (fp, &lambda) in fps.iter().zip(&roots.roots) {
            let rel = (d.k * fp.n - lambda).abs() / lambda;
            assert!(rel < 1e-3, "k n = {} vs λ = {lambda}", d.k * fp.n);
            assert!(fp.residual < FIXED_POINT_TOL);
        }
    }

    #[test]
    fn s_curve_middle_branch_unstable() {
        let base = PhysicalBase::default();
        let (zm, zp) = bistable_window(0.5, 1.2).unwrap();
        let p = base.realize(0.5, 1.2, 0.5 * (zm + zp)).unwrap();
        let d = dimensionless(&p).unwrap();
        let roots = solve_cubic(d.x, d.y, d.z);
        assert_eq!(roots.count(), 3);
        let labels: Vec<Stability> = roots.roots.iter().map(|&l| classify_stability(l, &p).unwrap()).collect();
        assert_eq!(labels, [Stability::Stable, Stability::Unstable, Stability::Stable]);
        // Outside the window the single root is stable.
        let p = base.realize(0.5, 0.8, 0.2).unwrap();
        let d = dimensionless(&p).unwrap();
        let roots = solve_cubic(d.x, d.y, d.z);
        assert_eq!(roots.count(), 1);
        assert_eq!(classify_stability(roots.roots[0], &p).unwrap(), Stability::Stable);
    }

    #[test]
    fn x_stays_in_physical_range() {
        for &kappa in &[0.1, 1.0, 3.0, 10.0] {
            for &kappa_f in &[0.0, 0.2, 1.0, 1.2, 10.0] {
                let base = PhysicalBase { kappa, kappa_f, ..PhysicalBase::default() };
                let xmin = base.x_min();
                for i in -200..=200 {
                    let ds = i as f64 * 0.25;
                    let p = SemiclassicalParams { delta_s: ds, kappa, kappa_f, ..sample() };
                    let x = dimensionless(&p).unwrap().x;
                    assert!(x >= xmin - 1e-14 && x <= 0.5 + 1e-14, "κ={kappa} κ_f={kappa_f} Δ_s={ds}: x={x}");
                }
                let far = SemiclassicalParams { delta_s: 1e8, kappa, kappa_f, ..sample() };
                let d = dimensionless(&far).unwrap();
                assert!((d.x - 0.5).abs() < 1e-9);
                assert!((d.y - far.delta_c).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn symmetric_rates_at_zero_detuning() {
        // Δ_s = 0, κ = κ_f: (√κ+√κ_f)² = 4κ, so p₁ = γ/2 − 2γκ·4κ/(4κ)² = 0.
        let p = SemiclassicalParams { delta_s: 0.0, kappa: 2.0, kappa_f: 2.0, ..sample() };
        let (p1, p2) = p1p2(&p).unwrap();
        assert!(p1.abs() < 1e-15);
        assert_eq!(p2, p.delta_c);
        assert_eq!(PhysicalBase::default().x_min(), 0.0);
    }
}
