//! Named registries of interchangeable algorithm variants.
//!
//! Each family (dynamics model, noise model, propagation mode, ...) exposes a
//! `registry()` that maps names to constructors. Scenario files and CLI flags
//! pick variants by name.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown {family} `{name}` (known: {})", known.join(", "))]
    Unknown { family: &'static str, name: String, known: Vec<String> },
    #[error("cannot build {family} `{name}`: {msg}")]
    Build { family: &'static str, name: String, msg: String },
}

pub type Factory<T, P> = fn(&P) -> Result<Box<T>, String>;

pub struct Registry<T: ?Sized, P> {
    family: &'static str,
    entries: Vec<(&'static str, Factory<T, P>)>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(family: &'static str) -> Self {
        Registry { family, entries: Vec::new() }
    }

    /// Later registrations under the same name replace earlier ones.
    pub fn register(mut self, name: &'static str, factory: Factory<T, P>) -> Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self.entries.iter().map(|(n, _)| *n).collect();
        v.sort_unstable();
        v
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>, RegistryError> {
        let (_, factory) = self.entries.iter().find(|(n, _)| *n == name).ok_or_else(|| RegistryError::Unknown {
            family: self.family,
            name: name.to_string(),
            known: self.names().into_iter().map(String::from).collect(),
        })?;
        factory(params).map_err(|msg| RegistryError::Build { family: self.family, name: name.to_string(), msg })
    }
}
