use std::sync::{Arc, Weak};

use super::engine::{ModelInner, NodeId};
use super::InboxPolicy;
use crate::geometry::{GeometryError, SpaceRegistry};
use crate::model::{DataFrame, ModelError};
use crate::services::{ServiceError, Services};

/// Failure raised by a node while handling a frame.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct NodeError(pub String);

impl NodeError {
    pub fn new(message: impl Into<String>) -> Self {
        Self(message.into())
    }
}

impl From<ServiceError> for NodeError {
    fn from(e: ServiceError) -> Self {
        Self(e.to_string())
    }
}

impl From<ModelError> for NodeError {
    fn from(e: ModelError) -> Self {
        Self(e.to_string())
    }
}

impl From<GeometryError> for NodeError {
    fn from(e: GeometryError) -> Self {
        Self(e.to_string())
    }
}

impl From<crate::algorithms::AlgorithmError> for NodeError {
    fn from(e: crate::algorithms::AlgorithmError) -> Self {
        Self(e.to_string())
    }
}

/// Produces frames, either on its own initiative (pushed in through
/// [`super::Model::push`] or emitted on tick) or in answer to a pull.
pub trait SourceNode: Send {
    /// Called when a pull reaches this source. `None` means there is nothing
    /// to produce.
    fn on_pull(&mut self, _ctx: &mut NodeContext<'_>) -> Result<Option<DataFrame>, NodeError> {
        Ok(None)
    }

    fn on_tick(&mut self, _ctx: &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError> {
        Ok(Vec::new())
    }

    /// Whether stored object state is merged into frames leaving this source.
    fn merges_stored_objects(&self) -> bool {
        true
    }
}

/// Transforms frames. Every returned frame is forwarded to every outlet.
pub trait ProcessingNode: Send {
    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError>;

    fn on_tick(&mut self, _ctx: &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError> {
        Ok(Vec::new())
    }

    /// Called once the model is assembled.
    fn on_build(&mut self, _ctx: &BuildContext<'_>) -> Result<(), NodeError> {
        Ok(())
    }

    /// Called when a downstream failure is reported to this node. Returning
    /// `false` stops the error from travelling further upstream.
    fn on_error(&mut self, _frame_uid: &str, _message: &str) -> bool {
        true
    }

    fn min_inlets(&self) -> usize {
        1
    }

    /// Whether this node may close a feedback loop (it rate-limits or
    /// re-identifies frames).
    fn breaks_feedback(&self) -> bool {
        false
    }

    fn shutdown(&mut self) {}
}

/// Consumes frames. Persistence into the model's services happens before
/// [`SinkNode::on_push`] unless [`SinkNode::persists`] is false.
pub trait SinkNode: Send {
    fn on_push(&mut self, frame: &DataFrame, ctx: &mut NodeContext<'_>) -> Result<(), NodeError>;

    fn persists(&self) -> bool {
        true
    }

    fn on_tick(&mut self, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        Ok(())
    }
}

pub enum NodeImpl {
    Source(Box<dyn SourceNode>),
    Processing(Box<dyn ProcessingNode>),
    Sink(Box<dyn SinkNode>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Processing,
    Sink,
}

impl NodeImpl {
    pub fn kind(&self) -> NodeKind {
        match self {
            NodeImpl::Source(_) => NodeKind::Source,
            NodeImpl::Processing(_) => NodeKind::Processing,
            NodeImpl::Sink(_) => NodeKind::Sink,
        }
    }
}

/// A node ready to be placed in a graph.
pub struct NodeSpec {
    pub(crate) name: Option<String>,
    pub(crate) imp: NodeImpl,
    pub(crate) policy: InboxPolicy,
}

impl NodeSpec {
    pub fn source(node: impl SourceNode + 'static) -> Self {
        Self::from_impl(NodeImpl::Source(Box::new(node)))
    }

    pub fn processing(node: impl ProcessingNode + 'static) -> Self {
        Self::from_impl(NodeImpl::Processing(Box::new(node)))
    }

    pub fn sink(node: impl SinkNode + 'static) -> Self {
        Self::from_impl(NodeImpl::Sink(Box::new(node)))
    }

    pub fn from_impl(imp: NodeImpl) -> Self {
        Self {
            name: None,
            imp,
            policy: InboxPolicy::Unbounded,
        }
    }

    /// Processing node from a closure mapping one frame to any number.
    pub fn map<F>(f: F) -> Self
    where
        F: FnMut(DataFrame, &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError>
            + Send
            + 'static,
    {
        Self::processing(FnNode(f))
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn inbox(mut self, policy: InboxPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn kind(&self) -> NodeKind {
        self.imp.kind()
    }
}

struct FnNode<F>(F);

impl<F> ProcessingNode for FnNode<F>
where
    F: FnMut(DataFrame, &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError> + Send,
{
    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        (self.0)(frame, ctx)
    }
}

/// Forwards frames unchanged. Used for named junctions.
#[derive(Debug, Default)]
pub struct PassThrough;

impl ProcessingNode for PassThrough {
    fn process(
        &mut self,
        frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        Ok(vec![frame])
    }
}

/// What a node sees of the model while it runs.
pub struct NodeContext<'a> {
    pub(crate) model: &'a Arc<ModelInner>,
    pub(crate) node: NodeId,
    pub(crate) inlet: Option<usize>,
    pub(crate) pull_requested: bool,
}

impl<'a> NodeContext<'a> {
    pub(crate) fn new(model: &'a Arc<ModelInner>, node: NodeId, inlet: Option<usize>) -> Self {
        Self {
            model,
            node,
            inlet,
            pull_requested: false,
        }
    }

    /// Model time in microseconds.
    pub fn now(&self) -> i64 {
        self.model.services.time().now()
    }

    pub fn node_uid(&self) -> &str {
        &self.model.nodes[self.node.0].uid
    }

    pub fn node_name(&self) -> Option<&str> {
        self.model.nodes[self.node.0].name.as_deref()
    }

    /// Index of the inlet the current frame arrived on, if it came from an edge.
    pub fn inlet(&self) -> Option<usize> {
        self.inlet
    }

    pub fn inlet_count(&self) -> usize {
        self.model.nodes[self.node.0].inlets.len()
    }

    /// Uid of the node behind inlet `i`.
    pub fn inlet_node_uid(&self, i: usize) -> Option<&str> {
        let id = *self.model.nodes[self.node.0].inlets.get(i)?;
        Some(&self.model.nodes[id.0].uid)
    }

    pub fn services(&self) -> &Services {
        &self.model.services
    }

    pub fn spaces(&self) -> &SpaceRegistry {
        &self.model.spaces
    }

    pub fn new_uid(&self) -> String {
        self.model.ids.next_uid()
    }

    pub fn warn(&self, message: impl Into<String>) {
        self.model.warn(self.node, message.into());
    }

    /// Asks the engine to pull this node's inlets once the current call returns.
    pub fn request_pull(&mut self) {
        self.pull_requested = true;
    }

    /// Handle for emitting frames from this node later, from any thread.
    pub fn emitter(&self) -> Emitter {
        Emitter {
            model: Arc::downgrade(self.model),
            node: self.node,
        }
    }
}

/// Context passed to [`ProcessingNode::on_build`].
pub struct BuildContext<'a> {
    pub(crate) node_uid: &'a str,
    pub(crate) inlets: usize,
    pub(crate) outlets: usize,
    pub(crate) services: &'a Services,
    pub(crate) spaces: &'a Arc<SpaceRegistry>,
}

impl BuildContext<'_> {
    pub fn node_uid(&self) -> &str {
        self.node_uid
    }

    pub fn inlet_count(&self) -> usize {
        self.inlets
    }

    pub fn outlet_count(&self) -> usize {
        self.outlets
    }

    pub fn services(&self) -> &Services {
        self.services
    }

    pub fn spaces(&self) -> &Arc<SpaceRegistry> {
        self.spaces
    }
}

/// Sends frames or failures out of a node asynchronously.
#[derive(Clone)]
pub struct Emitter {
    model: Weak<ModelInner>,
    node: NodeId,
}

impl Emitter {
    /// Forwards `frame` to the node's outlets as if the node had returned it.
    pub fn emit(&self, frame: DataFrame) {
        if let Some(model) = self.model.upgrade() {
            ModelInner::forward(&model, self.node, frame, Arc::new(vec![self.node]));
        }
    }

    /// Reports a failure on `frame_uid` to this node and everything upstream
    /// of it, as if processing had failed here.
    pub fn fail(&self, frame_uid: &str, message: &str) {
        if let Some(model) = self.model.upgrade() {
            model.emit_errors(&[self.node], self.node, frame_uid, message, true);
        }
    }
}
