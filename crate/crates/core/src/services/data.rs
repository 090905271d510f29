use std::sync::{Arc, Mutex};

use super::{MemoryDriver, ServiceError, StorageDriver};
use crate::model::{codec, DataObject, DATA_OBJECT_TYPE};

type InsertListener = Box<dyn Fn(&str, &DataObject) + Send + Sync>;

/// Store of data objects of one type (and its subtypes), keyed by uid.
///
/// Values are held serialized; reads decode them again, so what comes out
/// of the store is exactly what would come off the wire.
pub struct DataService {
    name: String,
    type_name: String,
    driver: Arc<dyn StorageDriver>,
    listeners: Mutex<Vec<InsertListener>>,
    commit: Mutex<()>,
}

impl std::fmt::Debug for DataService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataService")
            .field("name", &self.name)
            .field("type_name", &self.type_name)
            .finish_non_exhaustive()
    }
}

impl Default for DataService {
    fn default() -> Self {
        Self::new(DATA_OBJECT_TYPE)
    }
}

impl DataService {
    /// In-memory service for objects of `type_name`.
    pub fn new(type_name: impl Into<String>) -> Self {
        Self::with_driver(type_name, Arc::new(MemoryDriver::new()))
    }

    pub fn with_driver(type_name: impl Into<String>, driver: Arc<dyn StorageDriver>) -> Self {
        let type_name = type_name.into();
        Self {
            name: type_name.clone(),
            type_name,
            driver,
            listeners: Mutex::new(Vec::new()),
            commit: Mutex::new(()),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn driver(&self) -> &Arc<dyn StorageDriver> {
        &self.driver
    }

    /// Registers a listener called with `(uid, stored object)` after each
    /// committed insert.
    pub fn on_insert(&self, listener: impl Fn(&str, &DataObject) + Send + Sync + 'static) {
        self.listeners
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Box::new(listener));
    }

    pub fn insert(&self, object: &DataObject) -> Result<DataObject, ServiceError> {
        let text = codec::serialize(object)?;
        self.insert_text(&object.uid, text)
    }

    /// Inserts an already serialized object.
    pub fn insert_text(&self, uid: &str, text: String) -> Result<DataObject, ServiceError> {
        let stored: DataObject = codec::deserialize(&text)?;
        if stored.uid != uid {
            return Err(ServiceError::Storage(format!(
                "key `{uid}` does not match object uid `{}`",
                stored.uid
            )));
        }
        // Held across put and notification so listeners see inserts in commit order.
        let _guard = self.commit.lock().unwrap_or_else(|e| e.into_inner());
        self.driver.put(uid, text)?;
        for l in self
            .listeners
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
        {
            l(uid, &stored);
        }
        Ok(stored)
    }

    pub fn get(&self, uid: &str) -> Result<Option<DataObject>, ServiceError> {
        match self.driver.get(uid)? {
            Some(text) => Ok(Some(codec::deserialize(&text)?)),
            None => Ok(None),
        }
    }

    pub fn get_text(&self, uid: &str) -> Result<Option<String>, ServiceError> {
        self.driver.get(uid)
    }

    pub fn delete(&self, uid: &str) -> Result<bool, ServiceError> {
        Ok(self.driver.delete(uid)?.is_some())
    }

    pub fn uids(&self) -> Result<Vec<String>, ServiceError> {
        self.driver.keys()
    }

    pub fn all(&self) -> Result<Vec<DataObject>, ServiceError> {
        let mut out = Vec::new();
        for uid in self.uids()? {
            if let Some(o) = self.get(&uid)? {
                out.push(o);
            }
        }
        Ok(out)
    }
}
