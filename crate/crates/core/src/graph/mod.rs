//! The positioning model: an immutable graph of source, processing and sink
//! nodes exchanging [`DataFrame`](crate::model::DataFrame)s.
//!
//! Frames are pushed downstream; a pull travels upstream until a source
//! answers it with an ordinary push. Sinks persist frame objects into the
//! model's data services and announce it with a [`ModelEvent::Completed`].
//! Failures become [`ModelEvent::Error`]s for every node on the frame's path.

mod builder;
mod completion;
mod engine;
mod events;
mod node;
pub mod shapes;

pub use builder::{Endpoint, GraphBuilder, ModelBuilder};
pub use completion::{Completion, PullCompletion, PushCompletion};
pub use engine::{InboxPolicy, Model, NodeId, Ticker};
pub use events::{EventBus, ModelEvent};
pub use node::{
    BuildContext, Emitter, NodeContext, NodeError, NodeImpl, NodeKind, NodeSpec, PassThrough,
    ProcessingNode, SinkNode, SourceNode,
};
pub use shapes::MergeOptions;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("no node is named `{0}`")]
    UnresolvedName(String),
    #[error("two nodes are named `{0}`")]
    DuplicateName(String),
    #[error("source `{0}` has inlets")]
    SourceWithInlets(String),
    #[error("sink `{0}` has outlets")]
    SinkWithOutlets(String),
    #[error("processing node `{0}` needs at least {1} inlet(s)")]
    MissingInlets(String, usize),
    #[error("processing node `{0}` has no outlet")]
    MissingOutlets(String),
    #[error("cycle through {0:?} needs a named edge and a debounce or clone node")]
    IllegalCycle(Vec<String>),
    #[error("model initialisation failed: {0}")]
    Init(String),
    #[error("node {node} failed: {message}")]
    Node { node: String, message: String },
    #[error("frame dropped by inbox of node {0}")]
    Dropped(String),
    #[error("model is shut down")]
    Closed,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}
