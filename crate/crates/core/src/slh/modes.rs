use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SlhError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Optical,
    Mechanical,
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeKind::Optical => f.write_str("optical"),
            ModeKind::Mechanical => f.write_str("mechanical"),
        }
    }
}

/// A named bosonic mode. The kind is fixed at registration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeId {
    label: String,
    kind: ModeKind,
}

impl ModeId {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn is_optical(&self) -> bool {
        self.kind == ModeKind::Optical
    }
}

/// Ordered set of modes shared by every expression of a network.
///
/// Registration order defines the canonical ordering of factors inside a
/// term and the tensor-product ordering of the Fock realization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<ModeId>,
}

pub type Registry = Arc<ModeRegistry>;

impl ModeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, label: &str, kind: ModeKind) -> Result<usize, SlhError> {
        if self.index_of(label).is_some() {
            return Err(SlhError::DuplicateMode(label.to_string()));
        }
        self.modes.push(ModeId {
            label: label.to_string(),
            kind,
        });
        Ok(self.modes.len() - 1)
    }

    /// Builder-style registration, for fixed literal mode sets.
    pub fn with(mut self, label: &str, kind: ModeKind) -> Result<Self, SlhError> {
        self.register(label, kind)?;
        Ok(self)
    }

    pub fn into_shared(self) -> Registry {
        Arc::new(self)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn get(&self, index: usize) -> Option<&ModeId> {
        self.modes.get(index)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeId> {
        self.modes.iter()
    }

    pub fn lookup(&self, label: &str) -> Result<usize, SlhError> {
        self.index_of(label)
            .ok_or_else(|| SlhError::UnknownMode(label.to_string()))
    }
}

/// The three-mode registry of the feedback network: controlled cavity `a`,
/// controller cavity `c`, mechanical resonator `b`.
pub fn feedback_registry() -> Registry {
    let mut reg = ModeRegistry::new();
    reg.register("a", ModeKind::Optical).unwrap();
    reg.register("c", ModeKind::Optical).unwrap();
    reg.register("b", ModeKind::Mechanical).unwrap();
    reg.into_shared()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_rejected() {
        let mut reg = ModeRegistry::new();
        reg.register("a", ModeKind::Optical).unwrap();
        assert!(matches!(
            reg.register("a", ModeKind::Mechanical),
            Err(SlhError::DuplicateMode(_))
        ));
        assert_eq!(reg.get(0).unwrap().kind(), ModeKind::Optical);
    }

    #[test]
    fn feedback_registry_order() {
        let reg = feedback_registry();
        let labels: Vec<_> = reg.iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["a", "c", "b"]);
        assert!(!reg.get(2).unwrap().is_optical());
    }
}
