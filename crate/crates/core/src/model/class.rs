use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Activity (intervention) class code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ActivityClass {
    A,
    C,
    E,
    F,
    H,
    I,
    J,
    L,
    M,
    N,
    O,
    Q,
    R,
    S,
    T,
    W,
    X,
    Z,
}

impl ActivityClass {
    pub const ALL: [ActivityClass; 18] = [
        Self::A,
        Self::C,
        Self::E,
        Self::F,
        Self::H,
        Self::I,
        Self::J,
        Self::L,
        Self::M,
        Self::N,
        Self::O,
        Self::Q,
        Self::R,
        Self::S,
        Self::T,
        Self::W,
        Self::X,
        Self::Z,
    ];

    /// Stable ordinal used for feature encoding.
    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap_or(0)
    }

    pub fn code(self) -> char {
        match self {
            Self::A => 'A',
            Self::C => 'C',
            Self::E => 'E',
            Self::F => 'F',
            Self::H => 'H',
            Self::I => 'I',
            Self::J => 'J',
            Self::L => 'L',
            Self::M => 'M',
            Self::N => 'N',
            Self::O => 'O',
            Self::Q => 'Q',
            Self::R => 'R',
            Self::S => 'S',
            Self::T => 'T',
            Self::W => 'W',
            Self::X => 'X',
            Self::Z => 'Z',
        }
    }

    /// Meter replacement, the compound class the dual architectures split on.
    pub fn is_z(self) -> bool {
        self == Self::Z
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for ActivityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| s.len() == 1 && s.starts_with(c.code()))
            .ok_or_else(|| Error::invalid_input(format!("unknown activity class {s:?}")))
    }
}

impl From<ActivityClass> for String {
    fn from(c: ActivityClass) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for ActivityClass {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for c in ActivityClass::ALL {
            assert_eq!(c.to_string().parse::<ActivityClass>().unwrap(), c);
        }
        assert!("Y".parse::<ActivityClass>().is_err());
        assert!("ZZ".parse::<ActivityClass>().is_err());
        assert_eq!(ActivityClass::Z.ordinal(), 17);
    }
}
