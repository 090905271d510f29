use std::collections::BTreeMap;
use std::sync::RwLock;

use super::ServiceError;

/// Key/value backend holding serialized text. Implementations must be safe
/// to call from any thread.
pub trait StorageDriver: Send + Sync {
    fn get(&self, key: &str) -> Result<Option<String>, ServiceError>;
    fn put(&self, key: &str, value: String) -> Result<(), ServiceError>;
    fn delete(&self, key: &str) -> Result<Option<String>, ServiceError>;
    fn keys(&self) -> Result<Vec<String>, ServiceError>;
}

/// In-process store, ordered by key.
#[derive(Debug, Default)]
pub struct MemoryDriver {
    entries: RwLock<BTreeMap<String, String>>,
}

impl MemoryDriver {
    pub fn new() -> Self {
        Self::default()
    }
}

impl StorageDriver for MemoryDriver {
    fn get(&self, key: &str) -> Result<Option<String>, ServiceError> {
        Ok(self
            .entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned())
    }

    fn put(&self, key: &str, value: String) -> Result<(), ServiceError> {
        self.entries
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key.to_string(), value);
        Ok(())
    }

    fn delete(&self, key: &str) -> Result<Option<String>, ServiceError> {
        Ok(self
            .entries
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .remove(key))
    }

    fn keys(&self) -> Result<Vec<String>, ServiceError> {
        Ok(self
            .entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect())
    }
}
