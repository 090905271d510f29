use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use super::engine::{ModelInner, NodeId, NodeSlot};
use super::node::{
    BuildContext, NodeContext, NodeError, NodeImpl, NodeKind, NodeSpec, PassThrough, SinkNode,
    SourceNode,
};
use super::shapes::{
    CloneNode, ConvertFromSpaceNode, DebounceNode, FilterNode, MergeNode, MergeOptions,
    TimedPullNode,
};
use super::{EventBus, GraphError, Model};
use crate::geometry::{ReferenceSpace, SpaceRegistry};
use crate::model::{new_uid, DataFrame, IdGenerator};
use crate::services::{
    DataService, NodeDataService, Services, TimeService, TrajectoryService, VirtualClock,
};
use crate::units::{self, Unit};

/// One end of an edge in a [`GraphBuilder`].
pub enum Endpoint {
    Node(NodeSpec),
    /// Reference to a node named elsewhere in the model.
    Name(String),
    /// The implicit entry of a sub-graph.
    Entry,
    /// The implicit exit of a sub-graph.
    Exit,
}

impl From<NodeSpec> for Endpoint {
    fn from(spec: NodeSpec) -> Self {
        Endpoint::Node(spec)
    }
}

impl From<&str> for Endpoint {
    fn from(name: &str) -> Self {
        Endpoint::Name(name.to_string())
    }
}

impl From<String> for Endpoint {
    fn from(name: String) -> Self {
        Endpoint::Name(name)
    }
}

/// Describes a flow shape: `from(...).via(...).to(...)`.
#[derive(Default)]
pub struct GraphBuilder {
    endpoints: Vec<Endpoint>,
    edges: Vec<(usize, usize)>,
    tail: Vec<usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn add(&mut self, e: Endpoint) -> usize {
        self.endpoints.push(e);
        self.endpoints.len() - 1
    }

    /// Starts a chain at one node or name.
    pub fn from(self, e: impl Into<Endpoint>) -> Self {
        self.from_all(vec![e.into()])
    }

    /// Starts a chain at several nodes; the next step receives from all.
    pub fn from_all(mut self, es: Vec<Endpoint>) -> Self {
        self.tail = es.into_iter().map(|e| self.add(e)).collect();
        self
    }

    /// Starts a chain at the implicit entry (frames pushed into a sub-graph).
    pub fn from_entry(self) -> Self {
        self.from_all(vec![Endpoint::Entry])
    }

    pub fn via(mut self, e: impl Into<Endpoint>) -> Self {
        let idx = self.add(e.into());
        for &t in &self.tail {
            self.edges.push((t, idx));
        }
        self.tail = vec![idx];
        self
    }

    pub fn to(self, e: impl Into<Endpoint>) -> Self {
        self.to_all(vec![e.into()])
    }

    pub fn to_all(mut self, es: Vec<Endpoint>) -> Self {
        let targets: Vec<usize> = es.into_iter().map(|e| self.add(e)).collect();
        for &t in &self.tail {
            for &to in &targets {
                self.edges.push((t, to));
            }
        }
        self.tail = targets;
        self
    }

    /// Ends the chain at the implicit exit (frames leaving a sub-graph).
    pub fn to_exit(self) -> Self {
        self.to_all(vec![Endpoint::Exit])
    }

    pub fn merge(self, options: MergeOptions) -> Self {
        self.via(NodeSpec::processing(MergeNode::new(options)))
    }

    pub fn debounce(self, interval_us: i64) -> Self {
        self.via(NodeSpec::processing(DebounceNode::new(interval_us)))
    }

    pub fn clone_frames(self, repack: bool) -> Self {
        self.via(NodeSpec::processing(CloneNode::new(repack)))
    }

    pub fn filter(self, predicate: impl Fn(&DataFrame) -> bool + Send + 'static) -> Self {
        self.via(NodeSpec::processing(FilterNode::new(predicate)))
    }

    pub fn convert_from_space(self, space: ReferenceSpace) -> Self {
        self.via(NodeSpec::processing(ConvertFromSpaceNode::new(space)))
    }

    pub fn timed_pull(self, interval_us: i64) -> Self {
        self.via(NodeSpec::processing(TimedPullNode::new(interval_us)))
    }
}

struct EntrySource;

impl SourceNode for EntrySource {
    fn merges_stored_objects(&self) -> bool {
        false
    }
}

struct ExitSink(Arc<Mutex<Vec<DataFrame>>>);

impl SinkNode for ExitSink {
    fn on_push(&mut self, frame: &DataFrame, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(frame.clone());
        Ok(())
    }

    fn persists(&self) -> bool {
        false
    }
}

/// Assembles a [`Model`]: services, spaces, nodes and shapes.
pub struct ModelBuilder {
    global: ReferenceSpace,
    spaces: Vec<ReferenceSpace>,
    services: Services,
    nodes: Vec<NodeSpec>,
    shapes: Vec<GraphBuilder>,
    id_seed: Option<u64>,
}

impl Default for ModelBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self {
            global: ReferenceSpace::root(new_uid(), units::meter()),
            spaces: Vec::new(),
            services: Services::new(),
            nodes: Vec::new(),
            shapes: Vec::new(),
            id_seed: None,
        }
    }

    pub fn with_global_space(mut self, space: ReferenceSpace) -> Self {
        self.global = space;
        self
    }

    pub fn with_global_unit(mut self, unit: Unit) -> Self {
        self.global.unit = unit;
        self
    }

    pub fn global_space(&self) -> &ReferenceSpace {
        &self.global
    }

    pub fn add_space(mut self, space: ReferenceSpace) -> Self {
        self.spaces.push(space);
        self
    }

    pub fn with_time(mut self, time: TimeService) -> Self {
        self.services.set_time(Arc::new(time));
        self
    }

    pub fn with_virtual_clock(self, clock: VirtualClock) -> Self {
        self.with_time(TimeService::virtual_clock(clock))
    }

    pub fn with_services(mut self, services: Services) -> Self {
        self.services = services;
        self
    }

    pub fn add_data_service(mut self, service: DataService) -> Self {
        self.services.add_data_service(Arc::new(service));
        self
    }

    pub fn add_shared_data_service(mut self, service: Arc<DataService>) -> Self {
        self.services.add_data_service(service);
        self
    }

    pub fn with_node_data(mut self, service: NodeDataService) -> Self {
        self.services.set_node_data(Arc::new(service));
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.services
            .set_trajectory(Arc::new(TrajectoryService::new()));
        self
    }

    pub fn add_service<T: std::any::Any + Send + Sync>(
        mut self,
        name: impl Into<String>,
        service: Arc<T>,
    ) -> Self {
        self.services.add_custom(name, service);
        self
    }

    /// Seeds the generator used for frame and node uids, making runs repeatable.
    pub fn with_id_seed(mut self, seed: u64) -> Self {
        self.id_seed = Some(seed);
        self
    }

    pub fn add_node(mut self, node: NodeSpec) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn add_shape(mut self, shape: GraphBuilder) -> Self {
        self.shapes.push(shape);
        self
    }

    pub fn build(self) -> Result<Model, GraphError> {
        let ids = match self.id_seed {
            Some(seed) => IdGenerator::seeded(seed),
            None => IdGenerator::random(),
        };
        let spaces = Arc::new(SpaceRegistry::new(self.global.clone()));
        for s in self.spaces {
            spaces
                .register(s)
                .map_err(|e| GraphError::Init(e.to_string()))?;
        }

        let mut specs: Vec<Option<NodeSpec>> = Vec::new();
        let mut by_name: HashMap<String, NodeId> = HashMap::new();
        let mut register =
            |spec: NodeSpec, specs: &mut Vec<Option<NodeSpec>>| -> Result<NodeId, GraphError> {
                let id = NodeId(specs.len());
                if let Some(name) = &spec.name {
                    if by_name.insert(name.clone(), id).is_some() {
                        return Err(GraphError::DuplicateName(name.clone()));
                    }
                }
                specs.push(Some(spec));
                Ok(id)
            };

        for spec in self.nodes {
            register(spec, &mut specs)?;
        }

        enum Ref {
            Id(NodeId),
            Name(String),
        }
        let mut edges: Vec<(Ref, Ref, bool)> = Vec::new();
        let mut entry: Option<NodeId> = None;
        let mut exit: Option<(NodeId, Arc<Mutex<Vec<DataFrame>>>)> = None;
        for shape in self.shapes {
            let mut refs: Vec<Option<Ref>> = Vec::new();
            for e in shape.endpoints {
                let r = match e {
                    Endpoint::Node(spec) => Ref::Id(register(spec, &mut specs)?),
                    Endpoint::Name(n) => Ref::Name(n),
                    Endpoint::Entry => Ref::Id(*entry.get_or_insert_with(|| {
                        let id = NodeId(specs.len());
                        specs.push(Some(NodeSpec::source(EntrySource)));
                        id
                    })),
                    Endpoint::Exit => {
                        let (id, _) = exit.get_or_insert_with(|| {
                            let buf = Arc::new(Mutex::new(Vec::new()));
                            let id = NodeId(specs.len());
                            specs.push(Some(NodeSpec::sink(ExitSink(Arc::clone(&buf)))));
                            (id, buf)
                        });
                        Ref::Id(*id)
                    }
                };
                refs.push(Some(r));
            }
            for (a, b) in shape.edges {
                let to_ref = |r: &Option<Ref>| match r.as_ref().expect("endpoint") {
                    Ref::Id(id) => Ref::Id(*id),
                    Ref::Name(n) => Ref::Name(n.clone()),
                };
                let (ra, rb) = (to_ref(&refs[a]), to_ref(&refs[b]));
                let named = matches!(ra, Ref::Name(_)) || matches!(rb, Ref::Name(_));
                edges.push((ra, rb, named));
            }
        }

        // Names never defined by a node become pass-through junctions when they
        // are used on both ends of edges.
        let mut as_target = HashSet::new();
        let mut as_source = HashSet::new();
        for (a, b, _) in &edges {
            if let Ref::Name(n) = a {
                as_source.insert(n.clone());
            }
            if let Ref::Name(n) = b {
                as_target.insert(n.clone());
            }
        }
        let mut names: Vec<&String> = as_source.union(&as_target).collect();
        names.sort();
        for n in names {
            if by_name.contains_key(n) {
                continue;
            }
            if as_source.contains(n) && as_target.contains(n) {
                let id = NodeId(specs.len());
                specs.push(Some(NodeSpec::processing(PassThrough).named(n.clone())));
                by_name.insert(n.clone(), id);
            } else {
                return Err(GraphError::UnresolvedName(n.clone()));
            }
        }

        let resolve = |r: &Ref| -> Result<NodeId, GraphError> {
            match r {
                Ref::Id(id) => Ok(*id),
                Ref::Name(n) => by_name
                    .get(n)
                    .copied()
                    .ok_or_else(|| GraphError::UnresolvedName(n.clone())),
            }
        };
        let mut resolved: Vec<(NodeId, NodeId, bool)> = Vec::new();
        for (a, b, named) in &edges {
            let (a, b) = (resolve(a)?, resolve(b)?);
            if let Some(existing) = resolved.iter_mut().find(|(x, y, _)| *x == a && *y == b) {
                existing.2 |= *named;
            } else {
                resolved.push((a, b, *named));
            }
        }

        let n = specs.len();
        let mut inlets = vec![Vec::new(); n];
        let mut outlets = vec![Vec::new(); n];
        for &(a, b, _) in &resolved {
            outlets[a.0].push(b);
            inlets[b.0].push(a);
        }

        let label = |i: usize, specs: &Vec<Option<NodeSpec>>| node_label(specs, i);
        for i in 0..n {
            let spec = specs[i].as_ref().expect("spec");
            match spec.kind() {
                NodeKind::Source if !inlets[i].is_empty() => {
                    return Err(GraphError::SourceWithInlets(label(i, &specs)))
                }
                NodeKind::Sink if !outlets[i].is_empty() => {
                    return Err(GraphError::SinkWithOutlets(label(i, &specs)))
                }
                NodeKind::Processing => {
                    let min = match &spec.imp {
                        NodeImpl::Processing(p) => p.min_inlets(),
                        _ => 1,
                    };
                    if inlets[i].len() < min {
                        return Err(GraphError::MissingInlets(label(i, &specs), min));
                    }
                    if outlets[i].is_empty() {
                        return Err(GraphError::MissingOutlets(label(i, &specs)));
                    }
                }
                _ => {}
            }
        }

        check_cycles(&specs, &outlets, &resolved)?;

        let services = self.services;
        let mut slots = Vec::with_capacity(n);
        for (i, spec) in specs.into_iter().enumerate() {
            let mut spec = spec.expect("spec");
            let uid = ids.next_uid();
            if let NodeImpl::Processing(p) = &mut spec.imp {
                let ctx = BuildContext {
                    node_uid: &uid,
                    inlets: inlets[i].len(),
                    outlets: outlets[i].len(),
                    services: &services,
                    spaces: &spaces,
                };
                p.on_build(&ctx).map_err(|e| GraphError::Init(e.0))?;
            }
            slots.push(NodeSlot::new(
                uid,
                spec.name,
                spec.imp,
                spec.policy,
                std::mem::take(&mut inlets[i]),
                std::mem::take(&mut outlets[i]),
            ));
        }

        Ok(Model::from_inner(ModelInner {
            nodes: slots,
            by_name,
            services,
            spaces,
            events: EventBus::default(),
            ids,
            entry,
            exit: exit.map(|(_, buf)| buf),
        }))
    }
}

fn node_label(specs: &[Option<NodeSpec>], i: usize) -> String {
    specs[i]
        .as_ref()
        .and_then(|s| s.name.clone())
        .unwrap_or_else(|| format!("#{i}"))
}

/// Every cycle must pass through an edge made by name reference and through
/// a node that breaks feedback (debounce, clone).
fn check_cycles(
    specs: &[Option<NodeSpec>],
    outlets: &[Vec<NodeId>],
    edges: &[(NodeId, NodeId, bool)],
) -> Result<(), GraphError> {
    let n = specs.len();
    let comp = strongly_connected(n, outlets);
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &c) in comp.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    for (c, nodes) in members {
        let self_loop = nodes.len() == 1 && outlets[nodes[0]].iter().any(|o| o.0 == nodes[0]);
        if nodes.len() < 2 && !self_loop {
            continue;
        }
        let has_named = edges
            .iter()
            .any(|(a, b, named)| *named && comp[a.0] == c && comp[b.0] == c);
        let has_breaker = nodes.iter().any(|&i| {
            matches!(&specs[i].as_ref().map(|s| &s.imp), Some(NodeImpl::Processing(p)) if p.breaks_feedback())
        });
        if !has_named || !has_breaker {
            let mut labels: Vec<String> = nodes.iter().map(|&i| node_label(specs, i)).collect();
            labels.sort();
            return Err(GraphError::IllegalCycle(labels));
        }
    }
    Ok(())
}

/// Tarjan's algorithm; returns the component index of every node.
fn strongly_connected(n: usize, outlets: &[Vec<NodeId>]) -> Vec<usize> {
    struct State<'a> {
        outlets: &'a [Vec<NodeId>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for w in s.outlets[v].iter().map(|w| w.0).collect::<Vec<_>>() {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().expect("stack");
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }
    let mut s = State {
        outlets,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}
