use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, Weak};
use std::thread::JoinHandle;
use std::time::Duration;

use super::node::{NodeContext, NodeImpl, NodeKind};
use super::{Completion, EventBus, GraphError, ModelEvent, PullCompletion, PushCompletion};
use crate::geometry::{ReferenceSpace, SpaceRegistry};
use crate::model::{DataFrame, IdGenerator};
use crate::services::Services;

/// Index of a node within its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// What a busy node does with frames arriving while it works.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InboxPolicy {
    #[default]
    Unbounded,
    /// Keep at most `n` waiting frames, rejecting the oldest on overflow.
    DropOldest(usize),
    /// Keep only the most recent waiting frame.
    LatestOnly,
}

pub(crate) struct Envelope {
    pub(crate) frame: DataFrame,
    pub(crate) inlet: Option<usize>,
    pub(crate) path: Arc<Vec<NodeId>>,
    pub(crate) completion: PushCompletion,
}

enum Work {
    Frame(Box<Envelope>),
    Tick,
}

#[derive(Default)]
struct Queue {
    busy: bool,
    inbox: VecDeque<Work>,
}

pub(crate) struct NodeSlot {
    pub(crate) uid: String,
    pub(crate) name: Option<String>,
    pub(crate) kind: NodeKind,
    pub(crate) inlets: Vec<NodeId>,
    pub(crate) outlets: Vec<NodeId>,
    pub(crate) policy: InboxPolicy,
    queue: Mutex<Queue>,
    imp: Mutex<NodeImpl>,
}

impl NodeSlot {
    pub(crate) fn new(
        uid: String,
        name: Option<String>,
        imp: NodeImpl,
        policy: InboxPolicy,
        inlets: Vec<NodeId>,
        outlets: Vec<NodeId>,
    ) -> Self {
        Self {
            uid,
            name,
            kind: imp.kind(),
            inlets,
            outlets,
            policy,
            queue: Mutex::new(Queue::default()),
            imp: Mutex::new(imp),
        }
    }

    pub(crate) fn with_impl<R>(&self, f: impl FnOnce(&mut NodeImpl) -> R) -> R {
        f(&mut self.imp.lock().unwrap_or_else(|e| e.into_inner()))
    }
}

pub(crate) struct ModelInner {
    pub(crate) nodes: Vec<NodeSlot>,
    pub(crate) by_name: HashMap<String, NodeId>,
    pub(crate) services: Services,
    pub(crate) spaces: Arc<SpaceRegistry>,
    pub(crate) events: EventBus,
    pub(crate) ids: IdGenerator,
    pub(crate) entry: Option<NodeId>,
    pub(crate) exit: Option<Arc<Mutex<Vec<DataFrame>>>>,
}

impl ModelInner {
    pub(crate) fn warn(&self, node: NodeId, message: String) {
        self.events.emit(ModelEvent::Warning {
            node: self.nodes[node.0].uid.clone(),
            message,
        });
    }

    fn deliver(self: &Arc<Self>, target: NodeId, work: Work) {
        let slot = &self.nodes[target.0];
        {
            let mut q = slot.queue.lock().unwrap_or_else(|e| e.into_inner());
            if q.busy {
                enqueue(&mut q, work, slot);
                return;
            }
            q.busy = true;
        }
        let mut next = Some(work);
        while let Some(work) = next {
            match work {
                Work::Frame(env) => self.run_frame(target, *env),
                Work::Tick => self.run_tick(target),
            }
            let mut q = slot.queue.lock().unwrap_or_else(|e| e.into_inner());
            next = q.inbox.pop_front();
            if next.is_none() {
                q.busy = false;
            }
        }
    }

    fn run_frame(self: &Arc<Self>, target: NodeId, env: Envelope) {
        let slot = &self.nodes[target.0];
        let frame_uid = env.frame.uid.clone();
        let mut ctx = NodeContext::new(self, target, env.inlet);
        match slot.kind {
            NodeKind::Source => {
                env.completion.resolve(());
                self.push_from_source(target, env.frame);
            }
            NodeKind::Processing => {
                let out = slot.with_impl(|imp| match imp {
                    NodeImpl::Processing(p) => p.process(env.frame, &mut ctx),
                    _ => unreachable!(),
                });
                let pull = ctx.pull_requested;
                match out {
                    Ok(frames) => {
                        env.completion.resolve(());
                        let mut path = (*env.path).clone();
                        path.push(target);
                        let path = Arc::new(path);
                        for f in frames {
                            Self::forward(self, target, f, Arc::clone(&path));
                        }
                    }
                    Err(e) => {
                        env.completion.reject(GraphError::Node {
                            node: slot.uid.clone(),
                            message: e.0.clone(),
                        });
                        self.emit_errors(&env.path, target, &frame_uid, &e.0, false);
                    }
                }
                if pull {
                    self.pull_requested_by(target);
                }
            }
            NodeKind::Sink => {
                let persists = slot.with_impl(|imp| match imp {
                    NodeImpl::Sink(s) => s.persists(),
                    _ => false,
                });
                let stored = if persists {
                    self.persist(&env.frame)
                } else {
                    Ok(())
                };
                let result = stored.and_then(|_| {
                    slot.with_impl(|imp| match imp {
                        NodeImpl::Sink(s) => s.on_push(&env.frame, &mut ctx),
                        _ => unreachable!(),
                    })
                });
                match result {
                    Ok(()) => {
                        env.completion.resolve(());
                        self.events.emit(ModelEvent::Completed {
                            sink: slot.uid.clone(),
                            frame_uid,
                            object_uids: env
                                .frame
                                .objects()
                                .iter()
                                .map(|o| o.uid.clone())
                                .collect(),
                        });
                    }
                    Err(e) => {
                        env.completion.reject(GraphError::Node {
                            node: slot.uid.clone(),
                            message: e.0.clone(),
                        });
                        self.emit_errors(&env.path, target, &frame_uid, &e.0, false);
                    }
                }
            }
        }
    }

    fn persist(&self, frame: &DataFrame) -> Result<(), super::NodeError> {
        for obj in frame.objects() {
            if let Some(service) = self.services.find_data_service_for(obj) {
                service.insert(obj)?;
            }
            if let (Some(traj), Some(p)) = (self.services.trajectory(), &obj.position) {
                traj.append(&obj.uid, p)?;
            }
        }
        Ok(())
    }

    fn run_tick(self: &Arc<Self>, target: NodeId) {
        let slot = &self.nodes[target.0];
        let mut ctx = NodeContext::new(self, target, None);
        let out = slot.with_impl(|imp| match imp {
            NodeImpl::Source(s) => s.on_tick(&mut ctx),
            NodeImpl::Processing(p) => p.on_tick(&mut ctx),
            NodeImpl::Sink(s) => s.on_tick(&mut ctx).map(|_| Vec::new()),
        });
        let pull = ctx.pull_requested;
        match out {
            Ok(frames) => {
                for f in frames {
                    if slot.kind == NodeKind::Source {
                        self.push_from_source(target, f);
                    } else {
                        Self::forward(self, target, f, Arc::new(vec![target]));
                    }
                }
            }
            Err(e) => self.warn(target, format!("tick failed: {e}")),
        }
        if pull {
            self.pull_requested_by(target);
        }
    }

    /// Sends `frame` from `from` to every outlet.
    pub(crate) fn forward(
        self: &Arc<Self>,
        from: NodeId,
        frame: DataFrame,
        path: Arc<Vec<NodeId>>,
    ) -> Vec<PushCompletion> {
        let outlets = &self.nodes[from.0].outlets;
        let mut completions = Vec::with_capacity(outlets.len());
        let mut frame = Some(frame);
        for (i, &to) in outlets.iter().enumerate() {
            let f = if i + 1 == outlets.len() {
                frame.take().expect("frame")
            } else {
                frame.clone().expect("frame")
            };
            let inlet = self.nodes[to.0].inlets.iter().position(|&n| n == from);
            let completion = PushCompletion::pending();
            completions.push(completion.clone());
            self.deliver(
                to,
                Work::Frame(Box::new(Envelope {
                    frame: f,
                    inlet,
                    path: Arc::clone(&path),
                    completion,
                })),
            );
        }
        completions
    }

    pub(crate) fn push_from_source(
        self: &Arc<Self>,
        source: NodeId,
        mut frame: DataFrame,
    ) -> PushCompletion {
        let merges = self.nodes[source.0].with_impl(|imp| match imp {
            NodeImpl::Source(s) => s.merges_stored_objects(),
            _ => false,
        });
        if merges {
            self.merge_stored(&mut frame);
        }
        Completion::all(Self::forward(self, source, frame, Arc::new(vec![source])))
    }

    /// Fills fields missing from frame objects with their stored state.
    pub(crate) fn merge_stored(&self, frame: &mut DataFrame) {
        for obj in frame.objects_mut() {
            if let Some(service) = self.services.find_data_service_for(obj) {
                if let Ok(Some(stored)) = service.get(&obj.uid) {
                    obj.merge_missing_from(&stored);
                }
            }
        }
    }

    /// Emits error events to the nodes on `path`, most recent first.
    pub(crate) fn emit_errors(
        &self,
        path: &[NodeId],
        origin: NodeId,
        frame_uid: &str,
        message: &str,
        include_ancestors: bool,
    ) {
        let mut targets: Vec<NodeId> = path.iter().rev().copied().collect();
        if include_ancestors {
            let mut seen: HashSet<NodeId> = targets.iter().copied().collect();
            let mut queue: VecDeque<NodeId> = targets.iter().copied().collect();
            while let Some(n) = queue.pop_front() {
                for &up in &self.nodes[n.0].inlets {
                    if seen.insert(up) {
                        targets.push(up);
                        queue.push_back(up);
                    }
                }
            }
        }
        let origin_uid = self.nodes[origin.0].uid.clone();
        for node in targets {
            let slot = &self.nodes[node.0];
            self.events.emit(ModelEvent::Error {
                node: slot.uid.clone(),
                origin: origin_uid.clone(),
                frame_uid: frame_uid.to_string(),
                message: message.to_string(),
            });
            // A node that is mid-call cannot be consulted; the error keeps travelling.
            let keep_going = match slot.imp.try_lock() {
                Ok(mut imp) => match &mut *imp {
                    NodeImpl::Processing(p) => p.on_error(frame_uid, message),
                    _ => true,
                },
                Err(_) => true,
            };
            if !keep_going {
                break;
            }
        }
    }

    fn pull_requested_by(self: &Arc<Self>, node: NodeId) {
        if let Err(e) = self.pull_inlets(node, &mut HashSet::new()) {
            self.warn(node, format!("pull failed: {e}"));
        }
    }

    fn pull_inlets(
        self: &Arc<Self>,
        node: NodeId,
        visited: &mut HashSet<NodeId>,
    ) -> Result<usize, GraphError> {
        let mut count = 0;
        for &up in &self.nodes[node.0].inlets.clone() {
            count += self.pull_node(up, visited)?;
        }
        Ok(count)
    }

    fn pull_node(
        self: &Arc<Self>,
        node: NodeId,
        visited: &mut HashSet<NodeId>,
    ) -> Result<usize, GraphError> {
        if !visited.insert(node) {
            return Ok(0);
        }
        let slot = &self.nodes[node.0];
        if slot.kind != NodeKind::Source {
            return self.pull_inlets(node, visited);
        }
        let mut ctx = NodeContext::new(self, node, None);
        let produced = slot.with_impl(|imp| match imp {
            NodeImpl::Source(s) => s.on_pull(&mut ctx),
            _ => unreachable!(),
        });
        match produced {
            Ok(Some(frame)) => {
                self.push_from_source(node, frame);
                Ok(1)
            }
            Ok(None) => Ok(0),
            Err(e) => Err(GraphError::Node {
                node: slot.uid.clone(),
                message: e.0,
            }),
        }
    }

    fn shutdown(&self) {
        for slot in &self.nodes {
            slot.with_impl(|imp| {
                if let NodeImpl::Processing(p) = imp {
                    p.shutdown();
                }
            });
        }
    }
}

fn enqueue(q: &mut Queue, work: Work, slot: &NodeSlot) {
    if matches!(work, Work::Tick) {
        if !q.inbox.iter().any(|w| matches!(w, Work::Tick)) {
            q.inbox.push_back(work);
        }
        return;
    }
    let frames = q
        .inbox
        .iter()
        .filter(|w| matches!(w, Work::Frame(_)))
        .count();
    let limit = match slot.policy {
        InboxPolicy::Unbounded => usize::MAX,
        InboxPolicy::DropOldest(n) => n.max(1),
        InboxPolicy::LatestOnly => 1,
    };
    if frames >= limit {
        if let Some(idx) = q.inbox.iter().position(|w| matches!(w, Work::Frame(_))) {
            if let Some(Work::Frame(old)) = q.inbox.remove(idx) {
                old.completion.reject(GraphError::Dropped(slot.uid.clone()));
            }
        }
    }
    q.inbox.push_back(work);
}

/// An assembled, immutable positioning graph.
pub struct Model {
    pub(crate) inner: Arc<ModelInner>,
    closed: AtomicBool,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("nodes", &self.inner.nodes.len())
            .finish_non_exhaustive()
    }
}

impl Model {
    pub(crate) fn from_inner(inner: ModelInner) -> Self {
        Self {
            inner: Arc::new(inner),
            closed: AtomicBool::new(false),
        }
    }

    pub fn node_count(&self) -> usize {
        self.inner.nodes.len()
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.inner.by_name.get(name).copied()
    }

    pub fn node_by_uid(&self, uid: &str) -> Option<NodeId> {
        self.inner
            .nodes
            .iter()
            .position(|n| n.uid == uid)
            .map(NodeId)
    }

    pub fn node_uid(&self, id: NodeId) -> &str {
        &self.inner.nodes[id.0].uid
    }

    pub fn node_name(&self, id: NodeId) -> Option<&str> {
        self.inner.nodes[id.0].name.as_deref()
    }

    pub fn node_kind(&self, id: NodeId) -> NodeKind {
        self.inner.nodes[id.0].kind
    }

    pub fn inlets(&self, id: NodeId) -> &[NodeId] {
        &self.inner.nodes[id.0].inlets
    }

    pub fn outlets(&self, id: NodeId) -> &[NodeId] {
        &self.inner.nodes[id.0].outlets
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.inner.nodes.len()).map(NodeId)
    }

    pub fn services(&self) -> &Services {
        &self.inner.services
    }

    pub fn spaces(&self) -> &Arc<SpaceRegistry> {
        &self.inner.spaces
    }

    pub fn global_space(&self) -> &ReferenceSpace {
        self.inner.spaces.global()
    }

    pub fn now(&self) -> i64 {
        self.inner.services.time().now()
    }

    pub fn new_uid(&self) -> String {
        self.inner.ids.next_uid()
    }

    pub fn on_event(&self, listener: impl Fn(&ModelEvent) + Send + Sync + 'static) {
        self.inner.events.subscribe(listener);
    }

    /// Pushes a frame into `node`. For a source, stored object state is merged
    /// in and the frame goes to all its outlets; the completion settles when
    /// every receiving node has handled it.
    pub fn push(&self, node: NodeId, frame: DataFrame) -> PushCompletion {
        if self.closed.load(Ordering::SeqCst) {
            return Completion::rejected(GraphError::Closed);
        }
        let slot = &self.inner.nodes[node.0];
        if slot.kind == NodeKind::Source {
            return self.inner.push_from_source(node, frame);
        }
        let completion = PushCompletion::pending();
        self.inner.deliver(
            node,
            Work::Frame(Box::new(Envelope {
                frame,
                inlet: None,
                path: Arc::new(Vec::new()),
                completion: completion.clone(),
            })),
        );
        completion
    }

    pub fn push_named(&self, name: &str, frame: DataFrame) -> Result<PushCompletion, GraphError> {
        let id = self
            .node(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))?;
        Ok(self.push(id, frame))
    }

    /// Pulls through `node`: the request travels upstream to sources, whose
    /// answers arrive downstream as ordinary pushes.
    pub fn pull(&self, node: NodeId) -> PullCompletion {
        if self.closed.load(Ordering::SeqCst) {
            return Completion::rejected(GraphError::Closed);
        }
        let mut visited = HashSet::new();
        match self.inner.pull_node(node, &mut visited) {
            Ok(n) => Completion::resolved(n),
            Err(e) => Completion::rejected(e),
        }
    }

    /// Runs every node's timer hook once, in node order.
    pub fn tick(&self) {
        if self.closed.load(Ordering::SeqCst) {
            return;
        }
        for i in 0..self.inner.nodes.len() {
            self.inner.deliver(NodeId(i), Work::Tick);
        }
    }

    /// Ticks the model from a background thread every `interval`.
    pub fn start_ticker(&self, interval: Duration) -> Ticker {
        let weak: Weak<ModelInner> = Arc::downgrade(&self.inner);
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            while !flag.load(Ordering::SeqCst) {
                std::thread::sleep(interval);
                let Some(inner) = weak.upgrade() else { break };
                for i in 0..inner.nodes.len() {
                    inner.deliver(NodeId(i), Work::Tick);
                }
            }
        });
        Ticker {
            stop,
            handle: Some(handle),
        }
    }

    /// Labels of sinks that write into the model's services.
    pub fn persisting_sinks(&self) -> Vec<String> {
        self.inner
            .nodes
            .iter()
            .filter(|n| {
                n.kind == NodeKind::Sink
                    && n.with_impl(|imp| matches!(imp, NodeImpl::Sink(s) if s.persists()))
            })
            .map(|n| n.name.clone().unwrap_or_else(|| n.uid.clone()))
            .collect()
    }

    /// Implicit entry of a graph built with an open `from()`.
    pub fn entry(&self) -> Option<NodeId> {
        self.inner.entry
    }

    /// Frames that reached the implicit exit since the last call.
    pub fn take_exit_frames(&self) -> Vec<DataFrame> {
        match &self.inner.exit {
            Some(buf) => std::mem::take(&mut *buf.lock().unwrap_or_else(|e| e.into_inner())),
            None => Vec::new(),
        }
    }

    /// Stops worker pools and rejects further pushes.
    pub fn shutdown(&self) {
        if !self.closed.swap(true, Ordering::SeqCst) {
            self.inner.shutdown();
        }
    }
}

impl Drop for Model {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Background ticking; stops when dropped.
pub struct Ticker {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl Drop for Ticker {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
