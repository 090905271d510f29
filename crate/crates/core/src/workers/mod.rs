//! Running part of a model on a pool of worker threads.
//!
//! A [`WorkerNode`] owns a sub-graph definition. Each worker thread builds
//! its own copy of the sub-graph; frames reach it as JSON text and results
//! come back the same way, so nothing mutable is shared. Stores used inside
//! the sub-graph forward every call to the host model's services.

mod bench;
mod proxy;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::thread::JoinHandle;

pub use bench::{benchmark, benchmark_csv, BenchConfig, BenchRow, PrimeNode};

use crate::geometry::ReferenceSpace;
use crate::graph::{
    BuildContext, Emitter, GraphBuilder, Model, ModelBuilder, ModelEvent, NodeContext, NodeError,
    ProcessingNode,
};
use crate::model::{codec, DataFrame};
use crate::services::Services;
use proxy::ProxyFactory;

/// Produces the shape run inside each worker. It must start at
/// [`GraphBuilder::from_entry`] and end at [`GraphBuilder::to_exit`].
pub type SubGraphFn = Arc<dyn Fn() -> GraphBuilder + Send + Sync>;

fn graph_registry() -> &'static RwLock<HashMap<String, SubGraphFn>> {
    static GRAPHS: OnceLock<RwLock<HashMap<String, SubGraphFn>>> = OnceLock::new();
    GRAPHS.get_or_init(Default::default)
}

/// Makes a sub-graph available to [`WorkerNode::named`].
pub fn register_graph(
    name: impl Into<String>,
    f: impl Fn() -> GraphBuilder + Send + Sync + 'static,
) {
    graph_registry()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(name.into(), Arc::new(f));
}

pub fn registered_graph(name: &str) -> Option<SubGraphFn> {
    graph_registry()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .get(name)
        .cloned()
}

#[derive(Clone)]
enum Definition {
    Inline(SubGraphFn),
    Named(String),
}

struct Job {
    frame_uid: String,
    text: String,
    reply: Option<Sender<JobResult>>,
}

struct JobResult {
    frame_uid: String,
    outcome: Result<Vec<String>, String>,
}

struct Pool {
    jobs: Vec<Sender<Job>>,
    handles: Vec<JoinHandle<()>>,
    next: usize,
    results: Sender<JobResult>,
    emitter: Arc<OnceLock<Emitter>>,
}

/// Processing node that hands each frame to one worker of a pool,
/// round-robin.
///
/// By default the node returns as soon as the frame is dispatched and the
/// worker's output is forwarded when it arrives, so frames from different
/// workers may overtake each other. In blocking mode the node waits for the
/// worker's answer, which keeps output order and makes a one-worker pool
/// behave exactly like the sub-graph run in place.
pub struct WorkerNode {
    definition: Definition,
    pool_size: usize,
    blocking: bool,
    pool: Option<Pool>,
}

impl WorkerNode {
    pub fn new(pool_size: usize, f: impl Fn() -> GraphBuilder + Send + Sync + 'static) -> Self {
        Self {
            definition: Definition::Inline(Arc::new(f)),
            pool_size,
            blocking: false,
            pool: None,
        }
    }

    /// Uses a sub-graph registered with [`register_graph`].
    pub fn named(pool_size: usize, name: impl Into<String>) -> Self {
        Self {
            definition: Definition::Named(name.into()),
            pool_size,
            blocking: false,
            pool: None,
        }
    }

    pub fn blocking(mut self, blocking: bool) -> Self {
        self.blocking = blocking;
        self
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    fn resolve(&self) -> Result<SubGraphFn, NodeError> {
        match &self.definition {
            Definition::Inline(f) => Ok(Arc::clone(f)),
            Definition::Named(name) => registered_graph(name)
                .ok_or_else(|| NodeError::new(format!("no worker graph registered as `{name}`"))),
        }
    }
}

/// Everything a worker thread needs to build its copy of the sub-graph.
#[derive(Clone)]
struct Recipe {
    graph: SubGraphFn,
    host: Services,
    proxies: Arc<ProxyFactory>,
    global: ReferenceSpace,
    spaces: Vec<ReferenceSpace>,
}

impl Recipe {
    fn build(&self, seed: u64) -> Result<Model, NodeError> {
        let mut builder = ModelBuilder::new()
            .with_services(self.proxies.services(&self.host))
            .with_global_space(self.global.clone())
            .with_id_seed(seed);
        for s in &self.spaces {
            builder = builder.add_space(s.clone());
        }
        let model = builder
            .add_shape((self.graph)())
            .build()
            .map_err(|e| NodeError::new(format!("worker graph: {e}")))?;
        if model.entry().is_none() {
            return Err(NodeError::new("worker graph has no entry"));
        }
        let sinks = model.persisting_sinks();
        if !sinks.is_empty() {
            return Err(NodeError::new(format!(
                "worker graph contains persisting sinks {sinks:?}"
            )));
        }
        Ok(model)
    }
}

fn seed_for(node_uid: &str, index: usize) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in node_uid.bytes().chain((index as u64).to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn worker_loop(
    index: usize,
    recipe: Recipe,
    seed: u64,
    jobs: Receiver<Job>,
    results: Sender<JobResult>,
) {
    let errors: Arc<Mutex<Vec<String>>> = Arc::default();
    let build = || -> Result<Model, String> {
        let model = recipe.build(seed).map_err(|e| e.0)?;
        let sink = Arc::clone(&errors);
        model.on_event(move |e| {
            if let ModelEvent::Error { message, .. } = e {
                sink.lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .push(message.clone());
            }
        });
        Ok(model)
    };
    let mut model = build();
    for job in jobs {
        let outcome = match &model {
            Err(e) => Err(e.clone()),
            Ok(m) => match catch_unwind(AssertUnwindSafe(|| run_job(m, &errors, &job.text))) {
                Ok(r) => r,
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into());
                    model = build();
                    Err(format!("worker {index} crashed: {msg}"))
                }
            },
        };
        let result = JobResult {
            frame_uid: job.frame_uid,
            outcome,
        };
        let _ = match job.reply {
            Some(reply) => reply.send(result),
            None => results.send(result),
        };
    }
}

fn run_job(model: &Model, errors: &Mutex<Vec<String>>, text: &str) -> Result<Vec<String>, String> {
    errors.lock().unwrap_or_else(|e| e.into_inner()).clear();
    let frame: DataFrame = codec::deserialize(text).map_err(|e| e.to_string())?;
    let entry = model.entry().expect("checked at build");
    let done = model.push(entry, frame);
    if let Some(Err(e)) = done.try_get() {
        return Err(e.to_string());
    }
    let failed = std::mem::take(&mut *errors.lock().unwrap_or_else(|e| e.into_inner()));
    if let Some(first) = failed.first() {
        return Err(first.clone());
    }
    model
        .take_exit_frames()
        .iter()
        .map(|f| codec::serialize(f).map_err(|e| e.to_string()))
        .collect()
}

fn decode(texts: Vec<String>) -> Result<Vec<DataFrame>, NodeError> {
    texts
        .iter()
        .map(|t| codec::deserialize(t).map_err(NodeError::from))
        .collect()
}

impl ProcessingNode for WorkerNode {
    fn on_build(&mut self, ctx: &BuildContext<'_>) -> Result<(), NodeError> {
        if self.pool_size == 0 {
            return Err(NodeError::new("worker pool needs at least one worker"));
        }
        let recipe = Recipe {
            graph: self.resolve()?,
            host: ctx.services().clone(),
            proxies: Arc::new(proxy::spawn_server(ctx.services())),
            global: ctx.spaces().global().clone(),
            spaces: ctx.spaces().spaces(),
        };
        // Fail the build early rather than on the first frame.
        recipe.build(0)?;

        let (results_tx, results_rx) = mpsc::channel::<JobResult>();
        let emitter: Arc<OnceLock<Emitter>> = Arc::default();
        let mut jobs = Vec::with_capacity(self.pool_size);
        let mut handles = Vec::with_capacity(self.pool_size);
        for i in 0..self.pool_size {
            let (tx, rx) = mpsc::channel::<Job>();
            let recipe = recipe.clone();
            let results = results_tx.clone();
            let seed = seed_for(ctx.node_uid(), i);
            let handle = std::thread::Builder::new()
                .name(format!("posflow-worker-{i}"))
                .spawn(move || worker_loop(i, recipe, seed, rx, results))
                .map_err(|e| NodeError::new(format!("cannot start worker: {e}")))?;
            jobs.push(tx);
            handles.push(handle);
        }

        let collector_emitter = Arc::clone(&emitter);
        std::thread::Builder::new()
            .name("posflow-worker-results".into())
            .spawn(move || {
                for r in results_rx {
                    let Some(em) = collector_emitter.get() else {
                        continue;
                    };
                    match r.outcome.map_err(NodeError).and_then(decode) {
                        Ok(frames) => frames.into_iter().for_each(|f| em.emit(f)),
                        Err(e) => em.fail(&r.frame_uid, &e.0),
                    }
                }
            })
            .map_err(|e| NodeError::new(format!("cannot start result collector: {e}")))?;

        self.pool = Some(Pool {
            jobs,
            handles,
            next: 0,
            results: results_tx,
            emitter,
        });
        Ok(())
    }

    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let pool = self
            .pool
            .as_mut()
            .ok_or_else(|| NodeError::new("worker pool is shut down"))?;
        let text = codec::serialize(&frame)?;
        let worker = pool.next;
        pool.next = (pool.next + 1) % pool.jobs.len();
        let gone = || NodeError::new(format!("worker {worker} is gone"));
        if self.blocking {
            let (tx, rx) = mpsc::channel();
            pool.jobs[worker]
                .send(Job {
                    frame_uid: frame.uid.clone(),
                    text,
                    reply: Some(tx),
                })
                .map_err(|_| gone())?;
            let result = rx.recv().map_err(|_| gone())?;
            decode(result.outcome.map_err(NodeError)?)
        } else {
            pool.emitter.get_or_init(|| ctx.emitter());
            pool.jobs[worker]
                .send(Job {
                    frame_uid: frame.uid.clone(),
                    text,
                    reply: None,
                })
                .map_err(|_| gone())?;
            Ok(Vec::new())
        }
    }

    fn shutdown(&mut self) {
        if let Some(pool) = self.pool.take() {
            drop(pool.jobs);
            drop(pool.results);
            for h in pool.handles {
                let _ = h.join();
            }
        }
    }
}

impl Drop for WorkerNode {
    fn drop(&mut self) {
        self.shutdown();
    }
}
