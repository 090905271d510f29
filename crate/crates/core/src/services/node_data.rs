use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{MemoryDriver, ServiceError, StorageDriver};
use crate::model::codec;

/// Per-(node, object) scratch state, e.g. filter windows.
pub struct NodeDataService {
    driver: Arc<dyn StorageDriver>,
}

impl std::fmt::Debug for NodeDataService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NodeDataService").finish_non_exhaustive()
    }
}

impl Default for NodeDataService {
    fn default() -> Self {
        Self::new()
    }
}

impl NodeDataService {
    pub fn new() -> Self {
        Self::with_driver(Arc::new(MemoryDriver::new()))
    }

    pub fn with_driver(driver: Arc<dyn StorageDriver>) -> Self {
        Self { driver }
    }

    pub fn driver(&self) -> &Arc<dyn StorageDriver> {
        &self.driver
    }

    fn key(node_uid: &str, object_uid: &str) -> String {
        format!("{node_uid}/{object_uid}")
    }

    pub fn get<T: DeserializeOwned>(
        &self,
        node_uid: &str,
        object_uid: &str,
    ) -> Result<Option<T>, ServiceError> {
        match self.driver.get(&Self::key(node_uid, object_uid))? {
            Some(text) => Ok(Some(
                serde_json::from_str(&text).map_err(|e| ServiceError::Storage(e.to_string()))?,
            )),
            None => Ok(None),
        }
    }

    pub fn put<T: Serialize>(
        &self,
        node_uid: &str,
        object_uid: &str,
        value: &T,
    ) -> Result<(), ServiceError> {
        let text = codec::serialize(value)?;
        self.driver.put(&Self::key(node_uid, object_uid), text)
    }

    pub fn delete(&self, node_uid: &str, object_uid: &str) -> Result<bool, ServiceError> {
        Ok(self
            .driver
            .delete(&Self::key(node_uid, object_uid))?
            .is_some())
    }
}
