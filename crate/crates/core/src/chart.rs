//! Coordinate charts: ordered, uniquely named coordinates tagged with their role.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("periodic coordinate `{name}` needs a positive period, got {period}")]
    BadPeriod { name: String, period: f64 },
    #[error("invalid coordinate name `{0}`")]
    BadName(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
}

/// Role a coordinate plays in an action-angle chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoordKind {
    Action,
    Noncompact,
    Periodic { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    #[serde(flatten)]
    pub kind: CoordKind,
}

impl Coordinate {
    pub fn action(name: &str) -> Self {
        Coordinate { name: name.to_string(), kind: CoordKind::Action }
    }

    pub fn noncompact(name: &str) -> Self {
        Coordinate { name: name.to_string(), kind: CoordKind::Noncompact }
    }

    pub fn periodic(name: &str, period: f64) -> Self {
        Coordinate { name: name.to_string(), kind: CoordKind::Periodic { period } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Chart {
    coords: Vec<Coordinate>,
}

impl Chart {
    pub fn new(coords: Vec<Coordinate>) -> Result<Self, ChartError> {
        for (i, c) in coords.iter().enumerate() {
            if !is_identifier(&c.name) || c.name == "pi" {
                return Err(ChartError::BadName(c.name.clone()));
            }
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(ChartError::DuplicateName(c.name.clone()));
            }
            if let CoordKind::Periodic { period } = c.kind {
                if !(period > 0.0 && period.is_finite()) {
                    return Err(ChartError::BadPeriod { name: c.name.clone(), period });
                }
            }
        }
        Ok(Chart { coords })
    }

    /// Chart whose coordinates are all noncompact.
    pub fn noncompact(names: &[&str]) -> Result<Self, ChartError> {
        Chart::new(names.iter().map(|n| Coordinate::noncompact(n)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn coordinate(&self, name: &str) -> Result<&Coordinate, ChartError> {
        self.coords
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ChartError::UnknownCoordinate(name.to_string()))
    }
}

impl<'de> Deserialize<'de> for Chart {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        // Bare strings are shorthand for noncompact coordinates.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Name(String),
            Full(Coordinate),
        }
        let entries = Vec::<Entry>::deserialize(de)?;
        let coords = entries
            .into_iter()
            .map(|e| match e {
                Entry::Name(n) => Coordinate::noncompact(&n),
                Entry::Full(c) => c,
            })
            .collect();
        Chart::new(coords).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
