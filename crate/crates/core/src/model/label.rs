use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Healthy control or one of six infarction locations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Healthy = 0,
    Anterior = 1,
    AnteroLateral = 2,
    AnteroSeptal = 3,
    Inferior = 4,
    InferoLateral = 5,
    InferoPosteroLateral = 6,
}

impl ClassLabel {
    pub const COUNT: usize = 7;

    pub const ALL: [ClassLabel; 7] = [
        ClassLabel::Healthy,
        ClassLabel::Anterior,
        ClassLabel::AnteroLateral,
        ClassLabel::AnteroSeptal,
        ClassLabel::Inferior,
        ClassLabel::InferoLateral,
        ClassLabel::InferoPosteroLateral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Healthy => "healthy",
            ClassLabel::Anterior => "anterior",
            ClassLabel::AnteroLateral => "antero-lateral",
            ClassLabel::AnteroSeptal => "antero-septal",
            ClassLabel::Inferior => "inferior",
            ClassLabel::InferoLateral => "infero-lateral",
            ClassLabel::InferoPosteroLateral => "infero-postero-lateral",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown class `{s}`")))
    }
}
