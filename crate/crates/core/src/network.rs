//! The coherently controlled cavity: a linear cavity `a` whose output is fed
//! through an optomechanical controller (cavity `c`, mechanical mode `b`) and
//! back into `a`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::FockSpace;
use crate::liouvillian::{LindbladModel, LiouvillianError};
use crate::slh::{feedback_loop, feedback_registry, rotating_frame, OperatorExpr, Registry, SlhError, SlhTriple};

/// Which cavity the coherent drive enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePlacement {
    /// Drive `ε(a† + a)` on the controlled cavity.
    ControlledCavity,
    /// Drive `ε(c† + c)` on the controller cavity.
    ControllerCavity,
}

impl DrivePlacement {
    pub fn mode_label(self) -> &'static str {
        match self {
            DrivePlacement::ControlledCavity => "a",
            DrivePlacement::ControllerCavity => "c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" | "controlled" | "controlled_cavity" => Some(Self::ControlledCavity),
            "c" | "controller" | "controller_cavity" => Some(Self::ControllerCavity),
            _ => None,
        }
    }
}

impl fmt::Display for DrivePlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrivePlacement::ControlledCavity => "controlled_cavity",
            DrivePlacement::ControllerCavity => "controller_cavity",
        })
    }
}

/// Physical parameters, all in units of the controller decay rate `γ`.
///
/// Detunings are taken from the drive frequency `omega_d`: the lab-frame
/// cavity frequencies are `ω_s = Δ_s + ω_d` and `ω_c = Δ_c + ω_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    pub kappa: f64,
    pub kappa_f: f64,
    pub gamma: f64,
    pub g0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    pub eps: f64,
    pub delta_s: f64,
    pub delta_c: f64,
    pub omega_d: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub n_th: f64,
    pub drive: DrivePlacement,
}

/// Default truncations `(N_a, N_c, N_b)`.
pub const DEFAULT_DIMS: [usize; 3] = [5, 5, 10];

impl FeedbackParams {
    /// Strong coupling, κ = κ_f = γ, g₀ = 32γ, ω_m = 100γ.
    pub fn fig5() -> Self {
        Self {
            kappa: 1.0,
            kappa_f: 1.0,
            gamma: 1.0,
            g0: 32.0,
            omega_m: 100.0,
            gamma_m: 0.01,
            eps: 0.1,
            delta_s: 0.0,
            delta_c: 0.0,
            omega_d: 0.0,
            n_th: 0.0,
            drive: DrivePlacement::ControllerCavity,
        }
    }

    /// Bad feedback cavity, κ = κ_f = 10γ, g₀ = 2.5γ.
    pub fn fig7() -> Self {
        Self {
            kappa: 10.0,
            kappa_f: 10.0,
            g0: 2.5,
            eps: 0.01,
            ..Self::fig5()
        }
    }

    /// Weak coupling, κ = γ, κ_f = 1.2γ, g₀ = 0.3γ, ω_m = 10γ.
    pub fn fig9() -> Self {
        Self {
            kappa: 1.0,
            kappa_f: 1.2,
            g0: 0.3,
            omega_m: 10.0,
            ..Self::fig7()
        }
    }

    /// Kerr coefficient `χ = g₀²/ω_m`.
    pub fn chi(&self) -> f64 {
        self.g0 * self.g0 / self.omega_m
    }

    /// Common detuning `Δ_s = Δ_c = Δ`.
    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.delta_s = delta;
        self.delta_c = delta;
        self
    }

    pub fn with_drive(mut self, drive: DrivePlacement) -> Self {
        self.drive = drive;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("kappa", self.kappa),
            ("kappa_f", self.kappa_f),
            ("gamma", self.gamma),
            ("g0", self.g0),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("n_th", self.n_th),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        for (name, v) in [("eps", self.eps), ("delta_s", self.delta_s), ("delta_c", self.delta_c), ("omega_d", self.omega_d)] {
            if !v.is_finite() {
                return Err(format!("{name} must be finite, got {v}"));
            }
        }
        Ok(())
    }

    fn drive_term(&self, reg: &Registry, placement: DrivePlacement) -> OperatorExpr {
        if self.drive != placement {
            return OperatorExpr::zero(reg);
        }
        let i = reg.index_of(placement.mode_label()).unwrap();
        let x = OperatorExpr::annihilation(reg, i);
        (&x + &x.dagger()).scale_real(self.eps)
    }

    /// `(I, √κ a, ω_s a†a)`, with the drive when it enters `a`.
    pub fn plant(&self, reg: &Registry) -> Result<SlhTriple, SlhError> {
        let a = OperatorExpr::lower(reg, "a")?;
        let idx = reg.lookup("a")?;
        let h = &OperatorExpr::number(reg, idx).scale_real(self.delta_s + self.omega_d)
            + &self.drive_term(reg, DrivePlacement::ControlledCavity);
        SlhTriple::single(a.scale_real(self.kappa.sqrt()), h)
    }

    /// `(I, √γ c, ω_c c†c + ω_m b†b + g₀ c†c(b† + b))`, with the drive when
    /// it enters `c`.
    pub fn controller(&self, reg: &Registry) -> Result<SlhTriple, SlhError> {
        let c = OperatorExpr::lower(reg, "c")?;
        let b = OperatorExpr::lower(reg, "b")?;
        let nc = &c.dagger() * &c;
        let nb = &b.dagger() * &b;
        let coupling = &nc * &(&b + &b.dagger());
        let h = &(&(&nc.scale_real(self.delta_c + self.omega_d) + &nb.scale_real(self.omega_m))
            + &coupling.scale_real(self.g0))
            + &self.drive_term(reg, DrivePlacement::ControllerCavity);
        SlhTriple::single(c.scale_real(self.gamma.sqrt()), h)
    }

    pub fn return_coupling(&self, reg: &Registry) -> Result<OperatorExpr, SlhError> {
        Ok(OperatorExpr::lower(reg, "a")?.scale_real(self.kappa_f.sqrt()))
    }

    /// The closed loop in the frame rotating at the drive frequency.
    pub fn composed_triple(&self) -> Result<SlhTriple, SlhError> {
        let reg = feedback_registry();
        self.composed_triple_on(&reg)
    }

    pub fn composed_triple_on(&self, reg: &Registry) -> Result<SlhTriple, SlhError> {
        let lab = feedback_loop(&self.plant(reg)?, &self.controller(reg)?, &self.return_coupling(reg)?)?;
        rotating_frame(&lab, self.omega_d)
    }

    /// Mechanical damping: `b` at `γ_m(n_th + 1)` and `b†` at `γ_m n_th`.
    pub fn mechanical_channels(&self, reg: &Registry) -> Result<Vec<(OperatorExpr, f64)>, SlhError> {
        let b = OperatorExpr::lower(reg, "b")?;
        let mut out = vec![(b.clone(), self.gamma_m * (self.n_th + 1.0))];
        if self.n_th > 0.0 {
            out.push((b.dagger(), self.gamma_m * self.n_th));
        }
        Ok(out)
    }

    /// Master-equation model on truncations `(N_a, N_c, N_b)`. The composed
    /// coupling `L̃` is a single collective channel.
    pub fn lindblad_model(&self, dims: [usize; 3]) -> Result<LindbladModel, ModelError> {
        self.validate().map_err(ModelError::InvalidParams)?;
        let reg = feedback_registry();
        let g = self.composed_triple_on(&reg)?;
        let space = FockSpace::from_dims(&reg, &dims).map_err(LiouvillianError::from)?;
        let mut channels: Vec<(OperatorExpr, f64)> = g.l().iter().map(|l| (l.clone(), 1.0)).collect();
        channels.extend(self.mechanical_channels(&reg)?);
        Ok(LindbladModel::from_exprs(space, g.h(), &channels)?)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Slh(#[from] SlhError),
    #[error(transparent)]
    Liouvillian(#[from] LiouvillianError),
}

/// The coherent cross-coupling coefficient `(i/2)(√(γκ) − √(γκ_f))` of `a†c`.
pub fn coherent_coupling(p: &FeedbackParams) -> Complex64 {
    Complex64::new(0.0, 0.5 * ((p.gamma * p.kappa).sqrt() - (p.gamma * p.kappa_f).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slh::Monomial;

    #[test]
    fn composed_coupling_and_interference() {
        let p = FeedbackParams {
            kappa: 2.0,
            kappa_f: 0.5,
            ..FeedbackParams::fig5()
        };
        let g = p.composed_triple().unwrap();
        let l = &g.l()[0];
        assert!((l.coefficient_of(0, 0, 1).re - (2f64.sqrt() + 0.5f64.sqrt())).abs() < 1e-15);
        assert!((l.coefficient_of(1, 0, 1).re - 1.0).abs() < 1e-15);
        let adag_c = Monomial::from_powers(vec![(1, 0), (0, 1), (0, 0)]);
        assert!((g.h().coefficient(&adag_c) - coherent_coupling(&p)).norm() < 1e-15);
    }

    #[test]
    fn frame_change_is_consistent() {
        let base = FeedbackParams::fig9().with_detuning(0.3);
        let shifted = FeedbackParams { omega_d: 7.0, ..base };
        let a = base.composed_triple().unwrap();
        let b = shifted.composed_triple().unwrap();
        assert!(a.h().approx_eq(b.h(), 1e-14));
    }

    #[test]
    fn thermal_channel_only_when_hot() {
        let reg = feedback_registry();
        let p = FeedbackParams::fig5();
        assert_eq!(p.mechanical_channels(&reg).unwrap().len(), 1);
        let hot = FeedbackParams { n_th: 0.5, ..p };
        let ch = hot.mechanical_channels(&reg).unwrap();
        assert_eq!(ch.len(), 2);
        assert!((ch[0].1 - 0.015).abs() < 1e-15 && (ch[1].1 - 0.005).abs() < 1e-15);
    }
}
