//! Name-indexed strategy registry.
//!
//! Each algorithm family exposes a trait; concrete variants are registered under
//! a stable name and selected at runtime from config or the command line.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, item: Box<T>) -> &mut Self {
        self.entries.insert(name.to_string(), item);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind.to_string(),
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn hi(&self) -> &'static str;
    }
    struct A;
    impl Greeter for A {
        fn hi(&self) -> &'static str {
            "a"
        }
    }

    #[test]
    fn lookup_and_unknown() {
        let mut r: Registry<dyn Greeter> = Registry::new("greeter");
        r.register("a", Box::new(A));
        assert_eq!(r.get("a").unwrap().hi(), "a");
        let err = r.get("b").err().unwrap().to_string();
        assert!(err.contains("available: a"), "{err}");
    }
}
