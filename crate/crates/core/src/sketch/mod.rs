//! Sketch families and the sketch-dimension rule.

mod base;
mod dims;
mod tensor;

use std::fmt;
use std::str::FromStr;

pub use base::{BaseSketch, BaseSketchSpec};
pub use dims::{choose_m, choose_m_with, DimensionRule, EpsScaling};
pub use tensor::{TensorPairSketch, TensorSketchSpec};

use crate::error::Error;

/// Sketch applied to an individual factor at a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseFamily {
    CountSketch,
    Osnap,
    Srht,
}

/// Sketch applied to the tensor product of two children at an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorFamily {
    TensorSketch,
    TensorSrht,
}

impl BaseFamily {
    pub const ALL: [BaseFamily; 3] = [BaseFamily::CountSketch, BaseFamily::Osnap, BaseFamily::Srht];

    pub fn name(self) -> &'static str {
        match self {
            BaseFamily::CountSketch => "countsketch",
            BaseFamily::Osnap => "osnap",
            BaseFamily::Srht => "srht",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl TensorFamily {
    pub const ALL: [TensorFamily; 2] = [TensorFamily::TensorSketch, TensorFamily::TensorSrht];

    pub fn name(self) -> &'static str {
        match self {
            TensorFamily::TensorSketch => "tensorsketch",
            TensorFamily::TensorSrht => "tensorsrht",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for BaseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for TensorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '-' | '_'))
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for BaseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = normalize(s);
        BaseFamily::ALL.into_iter().find(|f| f.name() == key).ok_or_else(|| {
            Error::Config(format!(
                "unknown base sketch '{s}' (expected countsketch, osnap or srht)"
            ))
        })
    }
}

impl FromStr for TensorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = normalize(s);
        TensorFamily::ALL.into_iter().find(|f| f.name() == key).ok_or_else(|| {
            Error::Config(format!(
                "unknown tensor sketch '{s}' (expected tensorsketch or tensorsrht)"
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in BaseFamily::ALL {
            assert_eq!(f.name().parse::<BaseFamily>().unwrap(), f);
            assert_eq!(BaseFamily::from_code(f.code()), Some(f));
        }
        for f in TensorFamily::ALL {
            assert_eq!(f.to_string().parse::<TensorFamily>().unwrap(), f);
            assert_eq!(TensorFamily::from_code(f.code()), Some(f));
        }
        assert_eq!("Count-Sketch".parse::<BaseFamily>().unwrap(), BaseFamily::CountSketch);
        assert_eq!("tensor_srht".parse::<TensorFamily>().unwrap(), TensorFamily::TensorSrht);
        assert!("gaussian".parse::<BaseFamily>().is_err());
        assert_eq!(BaseFamily::from_code(9), None);
    }
}
