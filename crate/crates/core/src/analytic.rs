//! Weak-drive and closed-form photon statistics of the effective Kerr model.
//!
//! Eliminating the mechanics leaves the controller with a Kerr term
//! `−χ (c†c)²`, `χ = g₀²/ω_m`. On the two-excitation manifold the stationary
//! amplitudes follow order by order in the drive from a non-Hermitian
//! Hamiltonian, either the exact conditional one `H − (i/2)L†L` or the
//! phenomenological complex-detuning substitution.

use log::warn;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liouvillian::sweep::SweepSpec;
use crate::network::{coherent_coupling, DrivePlacement, FeedbackParams};
use crate::slh::{feedback_registry, Monomial, OperatorExpr, Registry, SlhError, SlhTriple};

type C = Complex64;

/// Largest `g₀/ω_m` for which dropping the mechanics is trusted.
pub const KERR_VALIDITY_LIMIT: f64 = 0.35;
/// Largest `ε/γ` accepted by the weak-drive expansion.
pub const WEAK_DRIVE_LIMIT: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("drive ε/γ = {0} exceeds the weak-drive limit {WEAK_DRIVE_LIMIT}")]
    DriveTooStrong(f64),
    #[error("g0/omega_m = {0} exceeds {KERR_VALIDITY_LIMIT}; the mechanics cannot be eliminated")]
    CouplingTooStrong(f64),
    #[error("amplitude system of order {order} is singular")]
    Singular { order: usize },
    #[error("unexpected term {0} in the effective Hamiltonian")]
    UnexpectedTerm(String),
    #[error("no photons in the controlled cavity at first order")]
    EmptyCavity,
    #[error(transparent)]
    Slh(#[from] SlhError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub chi: f64,
    /// `(√κ + √κ_f)² + γ`.
    pub kappa_a: f64,
    pub delta_s: f64,
    pub delta_c: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_f: f64,
    pub eps: f64,
}

impl From<&FeedbackParams> for KerrParams {
    fn from(p: &FeedbackParams) -> Self {
        Self {
            chi: p.chi(),
            kappa_a: (p.kappa.sqrt() + p.kappa_f.sqrt()).powi(2) + p.gamma,
            delta_s: p.delta_s,
            delta_c: p.delta_c,
            gamma: p.gamma,
            kappa: p.kappa,
            kappa_f: p.kappa_f,
            eps: p.eps,
        }
    }
}

/// The polaron-transformed network: `Δ_s a†a + (Δ_c − χ)c†c − χ c†c†cc`
/// plus the coherent `a↔c` coupling, drive and a free mechanical mode. The
/// coupling is the composed `L̃`.
pub fn effective_kerr_triple(p: &FeedbackParams) -> Result<SlhTriple, SlhError> {
    let ratio = p.g0 / p.omega_m;
    if ratio > KERR_VALIDITY_LIMIT {
        warn!("g0/omega_m = {ratio:.3} is above {KERR_VALIDITY_LIMIT}; the Kerr model is unreliable");
    }
    let reg = feedback_registry();
    let a = OperatorExpr::lower(&reg, "a")?;
    let c = OperatorExpr::lower(&reg, "c")?;
    let b = OperatorExpr::lower(&reg, "b")?;
    let chi = p.chi();
    let na = &a.dagger() * &a;
    let nc = &c.dagger() * &c;
    let nb = &b.dagger() * &b;
    let pair = &(&c.dagger() * &c.dagger()) * &(&c * &c);
    let hop = &(&a.dagger() * &c) - &(&c.dagger() * &a);
    let drive_op = match p.drive {
        DrivePlacement::ControlledCavity => &a + &a.dagger(),
        DrivePlacement::ControllerCavity => &c + &c.dagger(),
    };
    let h = [
        na.scale_real(p.delta_s),
        nc.scale_real(p.delta_c - chi),
        pair.scale_real(-chi),
        hop.scale(coherent_coupling(p)),
        drive_op.scale_real(p.eps),
        nb.scale_real(p.omega_m),
    ]
    .iter()
    .try_fold(OperatorExpr::zero(&reg), |acc, t| acc.try_add(t))?;
    let l = &a.scale_real(p.kappa.sqrt() + p.kappa_f.sqrt()) + &c.scale_real(p.gamma.sqrt());
    SlhTriple::single(l, h)
}

/// `g²_a(0)` for arbitrary `Δ_s`, `Δ_c`:
/// `|Δ_s+Δ_c−2χ−iκ_a/2|² |Δ_c−χ−iγ/2|² / |(Δ_s+Δ_c−χ−iκ_a/2)(Δ_c−2χ−iγ/2)|²`.
pub fn g2_analytic_general(delta_s: f64, delta_c: f64, chi: f64, kappa_a: f64, gamma: f64) -> f64 {
    let sum = delta_s + delta_c;
    let n1 = C::new(sum - 2.0 * chi, -kappa_a / 2.0).norm_sqr();
    let n2 = C::new(delta_c - chi, -gamma / 2.0).norm_sqr();
    let d1 = C::new(sum - chi, -kappa_a / 2.0).norm_sqr();
    let d2 = C::new(delta_c - 2.0 * chi, -gamma / 2.0).norm_sqr();
    n1 * n2 / (d1 * d2)
}

/// `g²_a(0)` on the common-detuning line `Δ_s = Δ_c = Δ`.
pub fn g2_analytic(delta: f64, chi: f64, kappa_a: f64, gamma: f64) -> f64 {
    g2_analytic_general(delta, delta, chi, kappa_a, gamma)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonHermitianVariant {
    /// `H̃ − (i/2) L̃†L̃` from the composed triple.
    #[default]
    Exact,
    /// Complex detunings `Δ_s − i(√κ+√κ_f)²/2`, `Δ_c − iγ/2` only.
    Phenomenological,
}

impl NonHermitianVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Self::Exact),
            "phenomenological" | "phenom" => Some(Self::Phenomenological),
            _ => None,
        }
    }
}

/// Number-conserving part of a non-Hermitian two-mode Kerr Hamiltonian plus
/// its drive, read off term by term.
#[derive(Clone, Copy, Debug, PartialEq)]
struct KerrCoefficients {
    ea: C,
    ec: C,
    /// Coefficient of `c†c†cc`.
    kerr: C,
    /// Coefficient of `a†c`.
    t_ac: C,
    /// Coefficient of `c†a`.
    t_ca: C,
    drive_a: C,
    drive_c: C,
}

fn read_coefficients(h: &OperatorExpr) -> Result<KerrCoefficients, AnalyticError> {
    let reg = h.registry();
    let (ia, ic) = (reg.lookup("a")?, reg.lookup("c")?);
    let m = |pa: (u32, u32), pc: (u32, u32)| {
        let mut powers = vec![(0, 0); reg.len()];
        powers[ia] = pa;
        powers[ic] = pc;
        Monomial::from_powers(powers)
    };
    let known = [
        m((1, 1), (0, 0)),
        m((0, 0), (1, 1)),
        m((0, 0), (2, 2)),
        m((1, 0), (0, 1)),
        m((0, 1), (1, 0)),
        m((1, 0), (0, 0)),
        m((0, 0), (1, 0)),
    ];
    for (mono, coeff) in h.terms() {
        let optical = mono.powers()[ia] != (0, 0) || mono.powers()[ic] != (0, 0);
        // Mechanical terms and annihilating drive parts do not feed the
        // amplitude hierarchy.
        let lowering = [m((0, 1), (0, 0)), m((0, 0), (0, 1))].contains(mono);
        if optical && !known.contains(mono) && !lowering {
            return Err(AnalyticError::UnexpectedTerm(format!("{coeff}·{mono:?}")));
        }
    }
    Ok(KerrCoefficients {
        ea: h.coefficient(&known[0]),
        ec: h.coefficient(&known[1]),
        kerr: h.coefficient(&known[2]),
        t_ac: h.coefficient(&known[3]),
        t_ca: h.coefficient(&known[4]),
        drive_a: h.coefficient(&known[5]),
        drive_c: h.coefficient(&known[6]),
    })
}

/// The non-Hermitian Hamiltonian of a variant, on the feedback registry.
pub fn nonhermitian_hamiltonian(p: &FeedbackParams, variant: NonHermitianVariant) -> Result<OperatorExpr, AnalyticError> {
    let g = effective_kerr_triple(p)?;
    let reg: Registry = g.registry().clone();
    let h = g.h().clone();
    let damping = match variant {
        NonHermitianVariant::Exact => {
            let l = &g.l()[0];
            (&l.dagger() * l).scale(C::new(0.0, -0.5))
        }
        NonHermitianVariant::Phenomenological => {
            let na = OperatorExpr::number(&reg, reg.lookup("a")?);
            let nc = OperatorExpr::number(&reg, reg.lookup("c")?);
            let alpha_sq = (p.kappa.sqrt() + p.kappa_f.sqrt()).powi(2);
            &na.scale(C::new(0.0, -alpha_sq / 2.0)) + &nc.scale(C::new(0.0, -p.gamma / 2.0))
        }
    };
    Ok(h.try_add(&damping)?)
}

/// Stationary amplitudes `C_{n_a n_c}` on the `n_a + n_c ≤ 2` manifold with
/// `C₀₀ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSet {
    pub c00: C,
    pub c10: C,
    pub c01: C,
    pub c20: C,
    pub c11: C,
    pub c02: C,
}

impl AmplitudeSet {
    fn norm_sqr(&self) -> f64 {
        [self.c00, self.c10, self.c01, self.c20, self.c11, self.c02]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Normalized `P_{n_a} = Σ_{n_c} |C_{n_a n_c}|²` for `n_a = 0, 1, 2`.
    pub fn probabilities_a(&self) -> [f64; 3] {
        let n = self.norm_sqr();
        [
            (self.c00.norm_sqr() + self.c01.norm_sqr() + self.c02.norm_sqr()) / n,
            (self.c10.norm_sqr() + self.c11.norm_sqr()) / n,
            self.c20.norm_sqr() / n,
        ]
    }

    pub fn probabilities_c(&self) -> [f64; 3] {
        let n = self.norm_sqr();
        [
            (self.c00.norm_sqr() + self.c10.norm_sqr() + self.c20.norm_sqr()) / n,
            (self.c01.norm_sqr() + self.c11.norm_sqr()) / n,
            self.c02.norm_sqr() / n,
        ]
    }

    /// Leading-order `g²_a(0) = 2|C₂₀|² / |C₁₀|⁴`, the `ε → 0` limit of
    /// `Σ n(n−1)P_n / (Σ n P_n)²`.
    pub fn g2_a(&self) -> Option<f64> {
        let p1 = self.c10.norm_sqr() / self.c00.norm_sqr();
        (p1 > 0.0).then(|| 2.0 * self.c20.norm_sqr() / self.c00.norm_sqr() / (p1 * p1))
    }

    pub fn g2_c(&self) -> Option<f64> {
        let p1 = self.c01.norm_sqr() / self.c00.norm_sqr();
        (p1 > 0.0).then(|| 2.0 * self.c02.norm_sqr() / self.c00.norm_sqr() / (p1 * p1))
    }
}

fn solve_hierarchy(k: &KerrCoefficients) -> Result<AmplitudeSet, AnalyticError> {
    let s2 = std::f64::consts::SQRT_2;
    let one = C::new(1.0, 0.0);
    // First order, rows ⟨10|, ⟨01|.
    let m1 = Matrix2::new(k.ea, k.t_ac, k.t_ca, k.ec);
    let rhs1 = -Vector2::new(k.drive_a, k.drive_c);
    let x1 = m1.lu().solve(&rhs1).ok_or(AnalyticError::Singular { order: 1 })?;
    let (c10, c01) = (x1[0], x1[1]);
    // Second order, rows ⟨20|, ⟨11|, ⟨02|.
    let m2 = Matrix3::new(
        2.0 * k.ea,
        s2 * k.t_ac,
        C::new(0.0, 0.0),
        s2 * k.t_ca,
        k.ea + k.ec,
        s2 * k.t_ac,
        C::new(0.0, 0.0),
        s2 * k.t_ca,
        2.0 * k.ec + 2.0 * k.kerr,
    );
    let rhs2 = -Vector3::new(
        s2 * k.drive_a * c10,
        k.drive_a * c01 + k.drive_c * c10,
        s2 * k.drive_c * c01,
    );
    let x2 = m2.lu().solve(&rhs2).ok_or(AnalyticError::Singular { order: 2 })?;
    let all_finite = x1.iter().chain(x2.iter()).all(|z| z.re.is_finite() && z.im.is_finite());
    if !all_finite {
        return Err(AnalyticError::Singular { order: 2 });
    }
    Ok(AmplitudeSet {
        c00: one,
        c10,
        c01,
        c20: x2[0],
        c11: x2[1],
        c02: x2[2],
    })
}

/// Weak-drive amplitudes with the drive on `placement`.
pub fn weak_drive_amplitudes(
    p: &FeedbackParams,
    placement: DrivePlacement,
    variant: NonHermitianVariant,
) -> Result<AmplitudeSet, AnalyticError> {
    let ratio = p.eps.abs() / p.gamma;
    if ratio > WEAK_DRIVE_LIMIT {
        return Err(AnalyticError::DriveTooStrong(ratio));
    }
    let mech = p.g0 / p.omega_m;
    if mech > KERR_VALIDITY_LIMIT {
        return Err(AnalyticError::CouplingTooStrong(mech));
    }
    let h = nonhermitian_hamiltonian(&p.with_drive(placement), variant)?;
    solve_hierarchy(&read_coefficients(&h)?)
}

/// `g²_a(0)` from the weak-drive amplitudes.
pub fn weak_drive_g2(p: &FeedbackParams, placement: DrivePlacement, variant: NonHermitianVariant) -> Result<f64, AnalyticError> {
    weak_drive_amplitudes(p, placement, variant)?
        .g2_a()
        .ok_or(AnalyticError::EmptyCavity)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub placement: DrivePlacement,
    pub grid: Vec<f64>,
    pub exact: Vec<Option<f64>>,
    /// `None` where the variant leaves the controlled cavity empty.
    pub phenomenological: Vec<Option<f64>>,
    pub formula: Vec<f64>,
    /// Largest `|log₁₀ g²_exact − log₁₀ g²_phenomenological|` over points
    /// where both are defined.
    pub max_log10_difference: Option<f64>,
}

impl VariantComparison {
    fn argmin(xs: &[f64], ys: &[Option<f64>]) -> Option<f64> {
        xs.iter()
            .zip(ys)
            .filter_map(|(x, y)| y.map(|v| (*x, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(x, _)| x)
    }

    /// Locations of the global minimum for the exact and phenomenological
    /// variants.
    pub fn dip_locations(&self) -> (Option<f64>, Option<f64>) {
        (
            Self::argmin(&self.grid, &self.exact),
            Self::argmin(&self.grid, &self.phenomenological),
        )
    }
}

fn defined(r: Result<f64, AnalyticError>) -> Result<Option<f64>, AnalyticError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(AnalyticError::EmptyCavity) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Both non-Hermitian variants and the closed formula over a `Δ/χ` grid
/// with `Δ_s = Δ_c`.
pub fn compare_nonhermitian_variants(
    template: &FeedbackParams,
    placement: DrivePlacement,
    grid: &SweepSpec,
) -> Result<VariantComparison, AnalyticError> {
    let chi = template.chi();
    let xs = grid.values();
    let mut exact = Vec::with_capacity(xs.len());
    let mut phenom = Vec::with_capacity(xs.len());
    let mut formula = Vec::with_capacity(xs.len());
    let mut worst: Option<f64> = None;
    for &x in &xs {
        let p = template.with_detuning(x * chi);
        let e = defined(weak_drive_g2(&p, placement, NonHermitianVariant::Exact))?;
        let f = defined(weak_drive_g2(&p, placement, NonHermitianVariant::Phenomenological))?;
        if let (Some(e), Some(f)) = (e, f) {
            let d = (e.log10() - f.log10()).abs();
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
        let k = KerrParams::from(&p);
        exact.push(e);
        phenom.push(f);
        formula.push(g2_analytic(p.delta_s, k.chi, k.kappa_a, k.gamma));
    }
    Ok(VariantComparison {
        placement,
        grid: xs,
        exact,
        phenomenological: phenom,
        formula,
        max_log10_difference: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq43(delta: f64, chi: f64, ka: f64, g: f64) -> f64 {
        let num = (4.0 * (delta - chi).powi(2) + ka * ka / 4.0) * ((delta - chi).powi(2) + g * g / 4.0);
        let den = (C::new(2.0 * delta - chi, -ka / 2.0) * C::new(delta - 2.0 * chi, -g / 2.0)).norm_sqr();
        num / den
    }

    #[test]
    fn kerr_coefficients_of_paper_sets() {
        assert!((KerrParams::from(&FeedbackParams::fig9()).chi - 0.009).abs() < 1e-15);
        let k5 = KerrParams::from(&FeedbackParams::fig5());
        assert!((k5.chi - 10.24).abs() < 1e-12);
        assert!((k5.kappa_a - 5.0).abs() < 1e-15);
        let linear = FeedbackParams { g0: 0.0, ..FeedbackParams::fig5() };
        assert_eq!(KerrParams::from(&linear).chi, 0.0);
    }

    #[test]
    fn kerr_triple_structure() {
        let p = FeedbackParams::fig7().with_detuning(0.4);
        let g = effective_kerr_triple(&p).unwrap();
        let h = g.h();
        let chi = p.chi();
        assert!((h.coefficient_of(1, 1, 1).re - (0.4 - chi)).abs() < 1e-15);
        assert!((h.coefficient_of(1, 2, 2).re + chi).abs() < 1e-15);
        assert!((h.coefficient_of(2, 1, 1).re - p.omega_m).abs() < 1e-15);
        // No optomechanical coupling survives.
        assert!(h.terms().all(|(m, _)| !(m.powers()[2] != (0, 0) && m.powers()[1] != (0, 0))));
        let composed = p.composed_triple().unwrap();
        assert!(g.l()[0].approx_eq(&composed.l()[0], 1e-15));
    }

    #[test]
    fn eq43_closed_forms() {
        for &(d, chi, ka, g) in &[(0.3, 1.0, 5.0, 1.0), (10.24, 10.24, 5.0, 1.0), (2.0, 0.7, 41.0, 1.0)] {
            let a = g2_analytic(d, chi, ka, g);
            assert!((a - eq43(d, chi, ka, g)).abs() <= 1e-13 * a);
            assert_eq!(a, g2_analytic_general(d, d, chi, ka, g));
        }
        // On resonance with the one-photon level.
        let (chi, ka, g) = (10.24, 5.0, 1.0);
        let want = (ka * ka * g * g / 16.0) / ((chi * chi + ka * ka / 4.0) * (chi * chi + g * g / 4.0));
        assert!((g2_analytic(chi, chi, ka, g) - want).abs() < 1e-15);
        assert!((want - 1.34e-4).abs() < 0.01e-4);
        assert!(g2_analytic(2.0 * chi, chi, ka, g) > 10.0);
    }

    #[test]
    fn linear_cavity_is_poissonian() {
        for &d in &[-1.0, 0.0, 0.7, 3.0] {
            assert!((g2_analytic(d, 0.0, 5.0, 1.0) - 1.0).abs() < 1e-14);
        }
        for placement in [DrivePlacement::ControlledCavity, DrivePlacement::ControllerCavity] {
            for variant in [NonHermitianVariant::Exact, NonHermitianVariant::Phenomenological] {
                let p = FeedbackParams { g0: 0.0, eps: 0.01, kappa_f: 3.0, ..FeedbackParams::fig7() }.with_detuning(0.8);
                let g2 = weak_drive_g2(&p, placement, variant).unwrap();
                assert!((g2 - 1.0).abs() < 1e-9, "{placement} {variant:?}: {g2}");
            }
        }
    }

    #[test]
    fn exact_variant_couplings() {
        // H̃ − (i/2)L̃†L̃ is cascaded: c feeds a at −i√(γκ_f), a feeds c at −i√(γκ).
        let p = FeedbackParams::fig9().with_detuning(0.2);
        let k = read_coefficients(&nonhermitian_hamiltonian(&p, NonHermitianVariant::Exact).unwrap()).unwrap();
        assert!((k.t_ac - C::new(0.0, -(p.gamma * p.kappa_f).sqrt())).norm() < 1e-14);
        assert!((k.t_ca - C::new(0.0, -(p.gamma * p.kappa).sqrt())).norm() < 1e-14);
        let alpha_sq = (p.kappa.sqrt() + p.kappa_f.sqrt()).powi(2);
        assert!((k.ea - C::new(0.2, -alpha_sq / 2.0)).norm() < 1e-14);
        let ph = read_coefficients(&nonhermitian_hamiltonian(&p, NonHermitianVariant::Phenomenological).unwrap()).unwrap();
        assert_eq!(ph.ea, k.ea);
        assert_eq!(ph.ec, k.ec);
        assert!((ph.t_ac - coherent_coupling(&p)).norm() < 1e-15);
    }

    #[test]
    fn variants_coincide_without_return_path_cross_terms() {
        // With κ_f = 0 the variants differ only by the anti-Hermitian hopping
        // −(i/2)√(γκ)(a†c + c†a).
        let p = FeedbackParams { kappa_f: 0.0, ..FeedbackParams::fig7() };
        let e = nonhermitian_hamiltonian(&p, NonHermitianVariant::Exact).unwrap();
        let f = nonhermitian_hamiltonian(&p, NonHermitianVariant::Phenomenological).unwrap();
        let diff = e.try_sub(&f).unwrap();
        let reg = diff.registry().clone();
        let a = OperatorExpr::lower(&reg, "a").unwrap();
        let c = OperatorExpr::lower(&reg, "c").unwrap();
        let cross = (&(&a.dagger() * &c) + &(&c.dagger() * &a)).scale(C::new(0.0, -0.5 * (p.gamma * p.kappa).sqrt()));
        assert!(diff.approx_eq(&cross, 1e-14));
    }

    #[test]
    fn weak_drive_g2_is_drive_independent() {
        let p = FeedbackParams::fig7().with_detuning(FeedbackParams::fig7().chi());
        for placement in [DrivePlacement::ControlledCavity, DrivePlacement::ControllerCavity] {
            let full = weak_drive_g2(&p, placement, NonHermitianVariant::Exact).unwrap();
            let half = weak_drive_g2(&FeedbackParams { eps: 0.005, ..p }, placement, NonHermitianVariant::Exact).unwrap();
            assert!((full - half).abs() / full < 1e-3);
            assert!(full < 1.0, "{placement}: {full}");
        }
    }

    #[test]
    fn guards() {
        let strong = FeedbackParams { eps: 0.1, ..FeedbackParams::fig7() };
        assert!(matches!(
            weak_drive_amplitudes(&strong, DrivePlacement::ControllerCavity, NonHermitianVariant::Exact),
            Err(AnalyticError::DriveTooStrong(_))
        ));
        let p = FeedbackParams { g0: 50.0, eps: 0.01, ..FeedbackParams::fig5() };
        assert!(matches!(
            weak_drive_amplitudes(&p, DrivePlacement::ControllerCavity, NonHermitianVariant::Exact),
            Err(AnalyticError::CouplingTooStrong(_))
        ));
    }

    #[test]
    fn variants_share_the_blockade_dip() {
        let grid = SweepSpec::new(0.5, 2.5, 201);
        let p = FeedbackParams { eps: 0.01, kappa_f: 0.25, ..FeedbackParams::fig5() };
        let cmp = compare_nonhermitian_variants(&p, DrivePlacement::ControllerCavity, &grid).unwrap();
        let (e, f) = cmp.dip_locations();
        assert!((e.unwrap() - 1.0).abs() <= 0.02 && (f.unwrap() - 1.0).abs() <= 0.02, "{e:?} {f:?}");
        assert!(cmp.max_log10_difference.unwrap() < 0.1);
    }

    #[test]
    fn symmetric_loop_cancels_phenomenological_coupling() {
        // κ = κ_f removes the only a↔c term of the substituted Hamiltonian, so
        // a driven controller never populates the controlled cavity.
        let p = FeedbackParams { eps: 0.01, ..FeedbackParams::fig5() };
        let cmp = compare_nonhermitian_variants(&p, DrivePlacement::ControllerCavity, &SweepSpec::new(0.5, 2.5, 201)).unwrap();
        assert!(cmp.phenomenological.iter().all(Option::is_none));
        assert_eq!(cmp.max_log10_difference, None);
        let (e, _) = cmp.dip_locations();
        assert!((e.unwrap() - 1.0).abs() <= 0.02, "{e:?}");
        // The exact variant follows the closed formula.
        for (g, f) in cmp.exact.iter().zip(&cmp.formula) {
            assert!((g.unwrap().log10() - f.log10()).abs() < 0.15, "{g:?} vs {f}");
        }
    }
}
