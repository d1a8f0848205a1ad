//! Condition labels and muscle names shared by the dataset, segmentation
//! and experiment layers.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Object weight in grams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Weight {
    Light,
    Medium,
    Heavy,
}

impl Weight {
    pub const fn grams(self) -> u32 {
        match self {
            Weight::Light => 165,
            Weight::Medium => 330,
            Weight::Heavy => 660,
        }
    }
}

impl TryFrom<u32> for Weight {
    type Error = String;

    fn try_from(g: u32) -> Result<Self, Self::Error> {
        match g {
            165 => Ok(Weight::Light),
            330 => Ok(Weight::Medium),
            660 => Ok(Weight::Heavy),
            other => Err(format!("unknown object weight {other} g (expected 165, 330 or 660)")),
        }
    }
}

impl From<Weight> for u32 {
    fn from(w: Weight) -> u32 {
        w.grams()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Sandpaper,
    Suede,
    Silk,
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Surface::Sandpaper => "sandpaper",
            Surface::Suede => "suede",
            Surface::Silk => "silk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    #[serde(rename = "weight_g")]
    pub weight: Weight,
    pub surface: Surface,
}

/// The five recorded muscles, in canonical (alphabetical) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Muscle {
    AD,
    BR,
    CED,
    FD,
    FDI,
}

impl Muscle {
    pub const ALL: [Muscle; 5] = [Muscle::AD, Muscle::BR, Muscle::CED, Muscle::FD, Muscle::FDI];

    pub const fn name(self) -> &'static str {
        match self {
            Muscle::AD => "AD",
            Muscle::BR => "BR",
            Muscle::CED => "CED",
            Muscle::FD => "FD",
            Muscle::FDI => "FDI",
        }
    }
}

impl fmt::Display for Muscle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Muscle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Muscle::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown muscle `{s}` (expected one of AD, BR, CED, FD, FDI)"))
    }
}

/// Joins muscles as `AD+BR+FDI`, the form used in report keys.
pub fn muscle_key(muscles: &[Muscle]) -> String {
    muscles.iter().map(|m| m.name()).collect::<Vec<_>>().join("+")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_codes() {
        assert_eq!(Weight::try_from(660).unwrap(), Weight::Heavy);
        assert!(Weight::try_from(200).is_err());
        let c: Condition = serde_json::from_str(r#"{"weight_g":165,"surface":"silk"}"#).unwrap();
        assert_eq!(c.weight, Weight::Light);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"weight_g":165,"surface":"silk"}"#);
    }

    #[test]
    fn muscles_sorted_and_parsed() {
        let mut v = Muscle::ALL.to_vec();
        v.sort();
        assert_eq!(v, Muscle::ALL);
        assert_eq!("fdi".parse::<Muscle>().unwrap(), Muscle::FDI);
        assert_eq!(muscle_key(&[Muscle::BR, Muscle::FDI]), "BR+FDI");
    }
}
