use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Label value of the background class.
pub const BACKGROUND: u8 = 0;

/// Label value for pixels excluded from training and evaluation.
pub const IGNORE: u8 = 255;

/// Ordered class names. Index 0 is always the background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    names: Vec<String>,
}

impl ClassCatalog {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::Invalid(
                "a catalog needs background and at least one object class".to_string(),
            ));
        }
        // IGNORE must stay outside [0, K-1].
        if names.len() > IGNORE as usize {
            return Err(Error::Invalid(alloc::format!(
                "at most {} classes are supported, got {}",
                IGNORE,
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Invalid(alloc::format!(
                    "class {i} has an empty name"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::Invalid(alloc::format!(
                    "duplicate class name `{name}`"
                )));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class_id: u8) -> Option<&str> {
        self.names.get(class_id as usize).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<u8> {
        self.names.iter().position(|n| n == name).map(|i| i as u8)
    }

    /// Object classes, i.e. everything except background.
    pub fn object_classes(&self) -> impl Iterator<Item = u8> + '_ {
        (1..self.names.len()).map(|c| c as u8)
    }
}
