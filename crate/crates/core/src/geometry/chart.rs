use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Time,
    State,
    Control,
    Other,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Time => "time",
            Role::State => "state",
            Role::Control => "control",
            Role::Other => "other",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        match s {
            "time" => Some(Role::Time),
            "state" => Some(Role::State),
            "control" => Some(Role::Control),
            "other" | "coord" => Some(Role::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coordinate {
    pub name: String,
    pub role: Role,
}

/// Ordered coordinates of the ambient manifold plus free constants.
#[derive(Clone, Debug)]
pub struct Chart {
    coords: Vec<Coordinate>,
    constants: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.constants == other.constants
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChartError {
    #[error("duplicate name '{0}'")]
    Duplicate(String),
    #[error("invalid name '{0}'")]
    InvalidName(String),
    #[error("'{0}' is reserved")]
    Reserved(String),
}

fn valid_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new(coords: Vec<Coordinate>, constants: Vec<String>) -> Result<Arc<Chart>, ChartError> {
        let mut index = HashMap::new();
        let mut seen = BTreeSet::new();
        for n in coords.iter().map(|c| &c.name).chain(constants.iter()) {
            if !valid_name(n) {
                return Err(ChartError::InvalidName(n.clone()));
            }
            if matches!(n.as_str(), "sin" | "cos" | "exp") || n.starts_with("d_") {
                return Err(ChartError::Reserved(n.clone()));
            }
            if !seen.insert(n.clone()) {
                return Err(ChartError::Duplicate(n.clone()));
            }
        }
        for (i, c) in coords.iter().enumerate() {
            index.insert(c.name.clone(), i);
        }
        Ok(Arc::new(Chart { coords, constants, index }))
    }

    /// Convenience constructor from (name, role) pairs.
    pub fn from_names(coords: &[(&str, Role)], constants: &[&str]) -> Result<Arc<Chart>, ChartError> {
        Chart::new(
            coords.iter().map(|(n, r)| Coordinate { name: n.to_string(), role: *r }).collect(),
            constants.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn is_known(&self, name: &str) -> bool {
        self.index.contains_key(name) || self.constants.iter().any(|c| c == name)
    }

    pub fn indices_with(&self, role: Role) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.coords[i].role == role).collect()
    }

    pub fn time_index(&self) -> Option<usize> {
        self.indices_with(Role::Time).first().copied()
    }
}
