use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Top-level page region classes.
///
/// Label-grid class ids are `1..=9` in declaration order; `0` is background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionType {
    #[serde(rename = "body")]
    Body,
    #[serde(rename = "caption")]
    Caption,
    #[serde(rename = "catchword")]
    Catchword,
    #[serde(rename = "colHead")]
    ColHead,
    #[serde(rename = "figure")]
    Figure,
    #[serde(rename = "note")]
    Note,
    #[serde(rename = "pageNum")]
    PageNum,
    #[serde(rename = "signature")]
    Signature,
    /// Running title.
    #[serde(rename = "title")]
    Title,
}

pub const NUM_LABELS: usize = 10;
pub const BACKGROUND: u8 = 0;

impl RegionType {
    pub const ALL: [RegionType; 9] = [
        RegionType::Body,
        RegionType::Caption,
        RegionType::Catchword,
        RegionType::ColHead,
        RegionType::Figure,
        RegionType::Note,
        RegionType::PageNum,
        RegionType::Signature,
        RegionType::Title,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionType::Body => "body",
            RegionType::Caption => "caption",
            RegionType::Catchword => "catchword",
            RegionType::ColHead => "colHead",
            RegionType::Figure => "figure",
            RegionType::Note => "note",
            RegionType::PageNum => "pageNum",
            RegionType::Signature => "signature",
            RegionType::Title => "title",
        }
    }

    pub fn label(self) -> u8 {
        Self::ALL.iter().position(|t| *t == self).unwrap() as u8 + 1
    }

    pub fn from_label(label: u8) -> Option<Self> {
        if label == 0 {
            return None;
        }
        Self::ALL.get(label as usize - 1).copied()
    }

    /// Body text is the flowing stream; everything else floats.
    pub fn is_float(self) -> bool {
        self != RegionType::Body
    }
}

impl fmt::Display for RegionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown region type `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for t in RegionType::ALL {
            assert_eq!(RegionType::from_label(t.label()), Some(t));
            assert_eq!(t.as_str().parse::<RegionType>().unwrap(), t);
        }
        assert_eq!(RegionType::from_label(0), None);
        assert_eq!(RegionType::from_label(10), None);
    }

    #[test]
    fn unknown_name_is_config_error() {
        assert!(matches!("colNum".parse::<RegionType>(), Err(Error::Config(_))));
    }
}
