use std::sync::{Arc, RwLock};

/// Signals travelling upstream on the model's event bus.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelEvent {
    /// A sink persisted a frame.
    Completed {
        sink: String,
        frame_uid: String,
        object_uids: Vec<String>,
    },
    /// `node` is upstream of `origin`, where processing of `frame_uid` failed.
    Error {
        node: String,
        origin: String,
        frame_uid: String,
        message: String,
    },
    Warning {
        node: String,
        message: String,
    },
}

type Listener = Arc<dyn Fn(&ModelEvent) + Send + Sync>;

#[derive(Default)]
pub struct EventBus {
    listeners: RwLock<Vec<Listener>>,
}

impl std::fmt::Debug for EventBus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventBus").finish_non_exhaustive()
    }
}

impl EventBus {
    pub fn subscribe(&self, listener: impl Fn(&ModelEvent) + Send + Sync + 'static) {
        self.listeners
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .push(Arc::new(listener));
    }

    pub fn emit(&self, event: ModelEvent) {
        let listeners = self
            .listeners
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone();
        for l in listeners {
            l(&event);
        }
    }
}
