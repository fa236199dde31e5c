//! Coherent-feedback photonic network toolkit.
//!
//! Symbolic SLH composition, truncated Fock-space realization, Lindblad
//! steady states and photon statistics, the semiclassical bistability
//! analysis, weak-drive analytic approximations, and a small text format for
//! describing networks.

pub mod acceptance;
pub mod analytic;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod meanfield;
pub mod liouvillian;
pub mod netdsl;
pub mod network;
pub mod reproduce;
pub mod slh;
