//! Name-keyed registries of interchangeable algorithm implementations.
//!
//! Each family of algorithms (principal-eigenvalue backends, moment
//! estimators) is a trait with [`Strategy`] as supertrait. Implementations
//! are boxed and registered under their name; callers pick one at runtime.

use crate::error::{Error, Result};

/// Common surface of every registrable algorithm.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Strategy> {
    kind: &'static str,
    entries: Vec<Box<T>>,
    default: &'static str,
}

impl<T: ?Sized + Strategy> Registry<T> {
    /// Empty registry; the first registered entry becomes the default.
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new(), default: "" }
    }

    /// Adds `entry`, replacing any entry with the same name.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        let name = entry.name();
        if self.entries.is_empty() {
            self.default = name;
        }
        self.entries.retain(|e| e.name() != name);
        self.entries.push(entry);
        self
    }

    pub fn set_default(&mut self, name: &str) -> Result<()> {
        self.default = self.get(name)?.name();
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn default_entry(&self) -> Result<&T> {
        self.get(self.default)
    }

    pub fn default_name(&self) -> &'static str {
        self.default
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|b| b.as_ref())
    }
}
