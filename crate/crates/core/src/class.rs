//! Semantic classes shared by meshes, materials and label masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Label id written to masks. The numeric values are part of the output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum SemanticClass {
    Ground = 0,
    Building = 1,
    Road = 2,
    Tree = 3,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 4] = [Self::Ground, Self::Building, Self::Road, Self::Tree];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ground => "ground",
            Self::Building => "building",
            Self::Road => "road",
            Self::Tree => "tree",
        }
    }
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown class {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable() {
        assert_eq!(SemanticClass::Ground.id(), 0);
        assert_eq!(SemanticClass::Building.id(), 1);
        assert_eq!(SemanticClass::Road.id(), 2);
        assert_eq!(SemanticClass::Tree.id(), 3);
        assert_eq!(SemanticClass::from_id(4), None);
        for c in SemanticClass::ALL {
            assert_eq!(SemanticClass::from_id(c.id()), Some(c));
            assert_eq!(c.as_str().parse::<SemanticClass>(), Ok(c));
        }
    }
}
