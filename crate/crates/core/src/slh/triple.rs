//! SLH triples and their composition rules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::expr::{Monomial, OperatorExpr};
use super::modes::{ModeKind, Registry};
use super::SlhError;

/// Tolerance used when checking Hermiticity of composed Hamiltonians and
/// unitarity of scattering matrices.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// An open quantum system `(S, L, H)` with `m` input/output channels.
#[derive(Clone, Debug, PartialEq)]
pub struct SlhTriple {
    s: DMatrix<Complex64>,
    l: Vec<OperatorExpr>,
    h: OperatorExpr,
}

impl SlhTriple {
    /// Validated constructor. `H` must be Hermitian and `S` unitary.
    pub fn new(
        s: DMatrix<Complex64>,
        l: Vec<OperatorExpr>,
        h: OperatorExpr,
    ) -> Result<Self, SlhError> {
        let m = l.len();
        if m == 0 {
            return Err(SlhError::NoChannels);
        }
        if s.nrows() != m || s.ncols() != m {
            return Err(SlhError::ChannelMismatch(s.nrows(), m));
        }
        for op in &l {
            if op.registry() != h.registry() {
                return Err(SlhError::RegistryMismatch);
            }
        }
        let dev = hermitian_deviation(&h);
        if dev > CONSISTENCY_TOL * h.max_abs_coefficient().max(1.0) {
            return Err(SlhError::NonHermitian(dev));
        }
        let u = (&s.adjoint() * &s) - DMatrix::<Complex64>::identity(m, m);
        let udev = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if udev > CONSISTENCY_TOL {
            return Err(SlhError::NonUnitary(udev));
        }
        Ok(Self { s, l, h })
    }

    /// Single-channel triple with identity scattering.
    pub fn single(l: OperatorExpr, h: OperatorExpr) -> Result<Self, SlhError> {
        Self::new(DMatrix::identity(1, 1), vec![l], h)
    }

    /// The pass-through element `(I, 0, 0)` on `m` channels.
    pub fn identity(registry: &Registry, m: usize) -> Self {
        Self {
            s: DMatrix::identity(m, m),
            l: vec![OperatorExpr::zero(registry); m],
            h: OperatorExpr::zero(registry),
        }
    }

    pub fn s(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    pub fn l(&self) -> &[OperatorExpr] {
        &self.l
    }

    pub fn h(&self) -> &OperatorExpr {
        &self.h
    }

    pub fn channels(&self) -> usize {
        self.l.len()
    }

    pub fn registry(&self) -> &Registry {
        self.h.registry()
    }

    pub fn has_identity_scattering(&self) -> bool {
        let m = self.channels();
        self.s == DMatrix::identity(m, m)
    }

    /// Modes on which `L` or `H` acts.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.registry().len()];
        for op in self.l.iter().chain(std::iter::once(&self.h)) {
            for i in op.support() {
                used[i] = true;
            }
        }
        (0..used.len()).filter(|&i| used[i]).collect()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermitian_deviation(&self.h)
    }
}

fn hermitian_deviation(h: &OperatorExpr) -> f64 {
    (h - &h.dagger()).max_abs_coefficient()
}

fn apply_scattering(s: &DMatrix<Complex64>, l: &[OperatorExpr]) -> Vec<OperatorExpr> {
    let reg = l[0].registry();
    (0..s.nrows())
        .map(|i| {
            let mut acc = OperatorExpr::zero(reg);
            for (j, lj) in l.iter().enumerate() {
                let sij = s[(i, j)];
                if sij != Complex64::new(0.0, 0.0) {
                    acc = &acc + &lj.scale(sij);
                }
            }
            acc
        })
        .collect()
}

/// Series product: the output of `g1` feeds the input of `g2`.
pub fn series(g1: &SlhTriple, g2: &SlhTriple) -> Result<SlhTriple, SlhError> {
    if g1.channels() != g2.channels() {
        return Err(SlhError::ChannelMismatch(g1.channels(), g2.channels()));
    }
    if g1.registry() != g2.registry() {
        return Err(SlhError::RegistryMismatch);
    }
    let s = &g2.s * &g1.s;
    let s2l1 = apply_scattering(&g2.s, &g1.l);
    let l: Vec<OperatorExpr> = g2.l.iter().zip(&s2l1).map(|(a, b)| a + b).collect();

    // L2† S2 L1, and its adjoint L1† S2† L2.
    let mut cross = OperatorExpr::zero(g1.registry());
    for (l2, s2l1i) in g2.l.iter().zip(&s2l1) {
        cross = &cross + &(&l2.dagger() * s2l1i);
    }
    let interference = (&cross - &cross.dagger()).scale(Complex64::new(0.0, -0.5));
    let h = &(&g1.h + &g2.h) + &interference;

    let dev = hermitian_deviation(&h);
    if dev > CONSISTENCY_TOL * h.max_abs_coefficient().max(1.0) {
        return Err(SlhError::NonHermitian(dev));
    }
    Ok(SlhTriple { s, l, h })
}

/// Coherent feedback: cascade `plant -> controller -> (I, return_coupling, 0)`.
///
/// The last stage re-couples the controller output into the plant. Its
/// Hamiltonian is zero, so the plant Hamiltonian appears exactly once.
pub fn feedback_loop(
    plant: &SlhTriple,
    controller: &SlhTriple,
    return_coupling: &OperatorExpr,
) -> Result<SlhTriple, SlhError> {
    for g in [plant, controller] {
        if g.channels() != 1 {
            return Err(SlhError::NotSingleChannel(g.channels()));
        }
        if !g.has_identity_scattering() {
            return Err(SlhError::UnsupportedScattering);
        }
    }
    if return_coupling.registry() != plant.registry() {
        return Err(SlhError::RegistryMismatch);
    }
    let plant_modes = plant.support();
    let controller_modes = controller.support();
    for m in return_coupling.support() {
        if controller_modes.contains(&m) && !plant_modes.contains(&m) {
            let label = plant.registry().get(m).map(|x| x.label().to_string());
            return Err(SlhError::ReturnCouplingOnController(
                label.unwrap_or_default(),
            ));
        }
    }
    let ret = SlhTriple {
        s: DMatrix::identity(1, 1),
        l: vec![return_coupling.clone()],
        h: OperatorExpr::zero(plant.registry()),
    };
    series(&series(plant, controller)?, &ret)
}

/// Net change of optical excitation number produced by a monomial.
fn optical_excitation_change(reg: &Registry, m: &Monomial) -> i64 {
    m.powers()
        .iter()
        .zip(reg.iter())
        .filter(|(_, id)| id.kind() == ModeKind::Optical)
        .map(|(&(c, a), _)| i64::from(c) - i64::from(a))
        .sum()
}

/// A drive is a single linear ladder factor on one optical mode.
fn is_drive_term(reg: &Registry, m: &Monomial) -> bool {
    m.degree() == 1 && m.support().all(|i| reg.get(i).is_some_and(|x| x.is_optical()))
}

/// Transform to the frame rotating at `drive_freq` on every optical mode.
///
/// Number-conserving optical terms shift by `-drive_freq` per photon number
/// operator; linear drive terms are taken as already written in the drive
/// frame. Any other term that changes the optical excitation number would
/// acquire an explicit time dependence and is rejected.
pub fn rotating_frame(g: &SlhTriple, drive_freq: f64) -> Result<SlhTriple, SlhError> {
    if drive_freq == 0.0 {
        return Ok(g.clone());
    }
    let reg = g.registry().clone();
    for (m, c) in g.h.terms() {
        if optical_excitation_change(&reg, m) != 0 && !is_drive_term(&reg, m) {
            let term = OperatorExpr::monomial(&reg, m.clone(), *c);
            return Err(SlhError::TimeDependentTerm(term.to_string()));
        }
    }
    for l in &g.l {
        let mut changes = l.terms().map(|(m, _)| optical_excitation_change(&reg, m));
        if let Some(first) = changes.next() {
            if let Some((m, c)) = l
                .terms()
                .find(|(m, _)| optical_excitation_change(&reg, m) != first)
            {
                let term = OperatorExpr::monomial(&reg, m.clone(), *c);
                return Err(SlhError::TimeDependentTerm(term.to_string()));
            }
        }
    }
    let mut h = g.h.clone();
    for (i, id) in reg.iter().enumerate() {
        if id.is_optical() {
            h = &h - &OperatorExpr::number(&reg, i).scale_real(drive_freq);
        }
    }
    Ok(SlhTriple {
        s: g.s.clone(),
        l: g.l.clone(),
        h,
    })
}
