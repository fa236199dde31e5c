//! Bosonic operator algebra and SLH composition.

pub mod drift;
pub mod expr;
pub mod modes;
pub mod triple;

pub use drift::{heisenberg_drift, DissipationChannel};
pub use expr::{Monomial, OperatorExpr, ZERO_TOLERANCE};
pub use modes::{feedback_registry, ModeId, ModeKind, ModeRegistry, Registry};
pub use triple::{feedback_loop, rotating_frame, series, SlhTriple};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlhError {
    #[error("mode `{0}` is already registered")]
    DuplicateMode(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("operands are defined over different mode registries")]
    RegistryMismatch,
    #[error("channel count mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("a triple needs at least one channel")]
    NoChannels,
    #[error("Hamiltonian is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),
    #[error("scattering matrix is not unitary (max deviation {0:e})")]
    NonUnitary(f64),
    #[error("only identity scattering matrices are supported here")]
    UnsupportedScattering,
    #[error("feedback composition needs single-channel subsystems, got {0}")]
    NotSingleChannel(usize),
    #[error("return coupling acts on controller mode `{0}`")]
    ReturnCouplingOnController(String),
    #[error("monomial has {got} mode factors, the registry has {expected}")]
    MonomialArity { expected: usize, got: usize },
    #[error("term `{0}` becomes time dependent in the rotating frame")]
    TimeDependentTerm(String),
}
