//! Model-scoped services shared by all nodes.

mod data;
mod driver;
mod node_data;
mod time;
mod trajectory;

use std::any::Any;
use std::collections::HashMap;
use std::sync::Arc;

pub use data::DataService;
pub use driver::{MemoryDriver, StorageDriver};
pub use node_data::NodeDataService;
pub use time::{TimeService, VirtualClock};
pub use trajectory::TrajectoryService;

use crate::model::{type_registry, DataObject, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("storage: {0}")]
    Storage(String),
    #[error("trajectory of `{object_uid}` is at {last} us, cannot append {got} us")]
    NonMonotonic {
        object_uid: String,
        last: i64,
        got: i64,
    },
}

/// All services of one model.
#[derive(Clone)]
pub struct Services {
    data: Vec<Arc<DataService>>,
    node_data: Arc<NodeDataService>,
    trajectory: Option<Arc<TrajectoryService>>,
    time: Arc<TimeService>,
    custom: HashMap<String, Arc<dyn Any + Send + Sync>>,
}

impl std::fmt::Debug for Services {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Services")
            .field("data", &self.data)
            .field("trajectory", &self.trajectory.is_some())
            .field("custom", &self.custom.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for Services {
    fn default() -> Self {
        Self::new()
    }
}

impl Services {
    /// A generic data-object store, a node-data store and the system clock.
    pub fn new() -> Self {
        Self {
            data: vec![Arc::new(DataService::default())],
            node_data: Arc::new(NodeDataService::new()),
            trajectory: None,
            time: Arc::new(TimeService::system()),
            custom: HashMap::new(),
        }
    }

    /// Adds a data service. A service for a type already present replaces it.
    pub fn add_data_service(&mut self, service: Arc<DataService>) {
        self.data.retain(|s| s.type_name() != service.type_name());
        self.data.push(service);
    }

    pub fn set_node_data(&mut self, service: Arc<NodeDataService>) {
        self.node_data = service;
    }

    pub fn set_trajectory(&mut self, service: Arc<TrajectoryService>) {
        self.trajectory = Some(service);
    }

    pub fn set_time(&mut self, service: Arc<TimeService>) {
        self.time = service;
    }

    pub fn add_custom<T: Any + Send + Sync>(&mut self, name: impl Into<String>, service: Arc<T>) {
        self.custom.insert(name.into(), service);
    }

    pub fn custom<T: Any + Send + Sync>(&self, name: &str) -> Option<Arc<T>> {
        self.custom.get(name)?.clone().downcast().ok()
    }

    pub fn data_services(&self) -> &[Arc<DataService>] {
        &self.data
    }

    /// Most specific data service for `type_name`, walking up its ancestry.
    pub fn find_data_service(&self, type_name: &str) -> Option<Arc<DataService>> {
        let types = type_registry();
        types
            .ancestry(type_name)
            .iter()
            .find_map(|t| self.data.iter().find(|s| s.type_name() == t))
            .cloned()
    }

    /// Service responsible for the concrete type of `object`.
    pub fn find_data_service_for(&self, object: &DataObject) -> Option<Arc<DataService>> {
        self.find_data_service(&object.type_name)
    }

    /// Service registered under `name`.
    pub fn data_service_named(&self, name: &str) -> Option<Arc<DataService>> {
        self.data.iter().find(|s| s.name() == name).cloned()
    }

    pub fn node_data(&self) -> &Arc<NodeDataService> {
        &self.node_data
    }

    pub fn trajectory(&self) -> Option<&Arc<TrajectoryService>> {
        self.trajectory.as_ref()
    }

    pub fn time(&self) -> &Arc<TimeService> {
        &self.time
    }

    /// Latest stored version of an object, from whichever service owns it.
    pub fn find_object(&self, uid: &str) -> Result<Option<DataObject>, ServiceError> {
        for s in &self.data {
            if let Some(o) = s.get(uid)? {
                return Ok(Some(o));
            }
        }
        Ok(None)
    }
}
