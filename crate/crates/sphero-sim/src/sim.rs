//! The demonstrator model and the loop driving it on a virtual clock.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use posflow::algorithms::{DisplacementNode, SmaAccuracyNode, VelocityProcessingNode};
use posflow::geometry::GeometryError;
use posflow::graph::{
    Endpoint, GraphBuilder, GraphError, MergeOptions, Model, ModelBuilder, ModelEvent, NodeSpec,
};
use posflow::services::VirtualClock;
use posflow::workers::WorkerNode;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, SourceKind};
use crate::nodes::{
    BlobPositionNode, FeedSource, ImuVelocityNode, PerspectiveWarpNode, TrackSink, SPHERO,
};
use crate::program::{ground_truth, Trajectory};
use crate::sources::{
    camera_homography, global_space, internal_space, run_end_us, simulate_sources, video_space,
    SourceStreams,
};
use crate::track::{evaluate, Sample, Track, TrackError, TrackError2d};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Track(#[from] TrackError),
}

/// Moving-average window of the internal-position accuracy.
const INTERNAL_SMA_WINDOW: usize = 5;

/// Ground truth sampling step.
const TRUTH_STEP_US: i64 = 10_000;

pub const FUSED_SINK: &str = "position.csv";

fn source_node_name(kind: SourceKind) -> String {
    format!("{}_source", kind.node_name())
}

fn trace_node_name(kind: SourceKind) -> String {
    format!("{}_trace", kind.node_name())
}

/// Shared buffers of the model's sinks.
pub struct SinkRows {
    pub fused: Arc<Mutex<Vec<Sample>>>,
    pub traces: BTreeMap<SourceKind, Arc<Mutex<Vec<Sample>>>>,
}

/// Builds the fusion model: four source branches and a feedback branch
/// joined by one merge whose output is written to the fused trace.
pub fn build_model(
    cfg: &ScenarioConfig,
    clock: VirtualClock,
) -> Result<(Model, SinkRows), SimError> {
    cfg.validate()?;
    let video = video_space(cfg);
    let internal = internal_space(cfg);
    let h = camera_homography(cfg)?;
    let (cw, ch) = (cfg.camera_width_px, cfg.camera_height_px);

    let worker_space = video.clone();
    let video_worker = WorkerNode::new(1, move || {
        GraphBuilder::new()
            .from_entry()
            .via(NodeSpec::processing(PerspectiveWarpNode::new(h, cw, ch)))
            .via(NodeSpec::processing(BlobPositionNode))
            .convert_from_space(worker_space.clone())
            .to_exit()
    })
    .blocking(true);

    let fused = TrackSink::new(true);
    let fused_rows = fused.rows();

    let mut mb = ModelBuilder::new()
        .with_global_space(global_space())
        .add_space(video)
        .add_space(internal.clone())
        .with_virtual_clock(clock)
        .with_id_seed(cfg.seed)
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(FeedSource).named(source_node_name(SourceKind::Video)))
                .via(NodeSpec::processing(video_worker).named(SourceKind::Video.node_name())),
        )
        .add_shape(
            GraphBuilder::new()
                .from(
                    NodeSpec::source(FeedSource)
                        .named(source_node_name(SourceKind::InternalPosition)),
                )
                .via(NodeSpec::processing(DisplacementNode::in_space(internal)))
                .filter(|f| f.object(SPHERO).is_some_and(|o| o.position.is_some()))
                .via(
                    NodeSpec::processing(SmaAccuracyNode::new(INTERNAL_SMA_WINDOW))
                        .named(SourceKind::InternalPosition.node_name()),
                ),
        )
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(FeedSource).named(source_node_name(SourceKind::Input)))
                .via(
                    NodeSpec::processing(VelocityProcessingNode::only(SPHERO))
                        .named(SourceKind::Input.node_name()),
                ),
        )
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(FeedSource).named(source_node_name(SourceKind::Imu)))
                .via(NodeSpec::processing(ImuVelocityNode::new(
                    cfg.imu_accuracy_cm,
                )))
                .via(
                    NodeSpec::processing(VelocityProcessingNode::only(SPHERO))
                        .named(SourceKind::Imu.node_name()),
                ),
        )
        .add_shape(
            GraphBuilder::new()
                .from_all(
                    SourceKind::ALL
                        .iter()
                        .map(|k| Endpoint::from(k.node_name()))
                        .chain([Endpoint::from("feedback")])
                        .collect(),
                )
                .merge(
                    MergeOptions::new()
                        .timeout_ms(cfg.merge_timeout_ms)
                        .min_count(cfg.min_count)
                        .object_filter(|o| o.uid == SPHERO),
                )
                .via("merged")
                .to(NodeSpec::sink(fused).named(FUSED_SINK)),
        )
        .add_shape(
            GraphBuilder::new()
                .from("merged")
                .debounce(cfg.debounce_ms * 1000)
                .clone_frames(true)
                .via(NodeSpec::processing(VelocityProcessingNode::only(SPHERO)))
                .to("feedback"),
        );

    let mut traces = BTreeMap::new();
    for kind in SourceKind::ALL {
        let sink = TrackSink::new(false);
        traces.insert(kind, sink.rows());
        mb = mb.add_shape(
            GraphBuilder::new()
                .from(kind.node_name())
                .to(NodeSpec::sink(sink).named(trace_node_name(kind))),
        );
    }
    let model = mb.build()?;
    Ok((
        model,
        SinkRows {
            fused: fused_rows,
            traces,
        },
    ))
}

/// Everything one simulated run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The merge output, as written to the CSV.
    pub fused: Track,
    pub ground_truth: Track,
    /// Positions leaving each source branch before the merge.
    pub traces: BTreeMap<SourceKind, Track>,
    pub streams: SourceStreams,
    /// Error events, as `node: message`.
    pub errors: Vec<String>,
    pub warnings: usize,
}

impl RunOutput {
    pub fn trace(&self, kind: SourceKind) -> &Track {
        &self.traces[&kind]
    }
}

fn take(rows: &Arc<Mutex<Vec<Sample>>>) -> Result<Track, TrackError> {
    let rows = std::mem::take(&mut *rows.lock().unwrap_or_else(|e| e.into_inner()));
    Track::new(rows)
}

/// Runs the demonstrator: every millisecond the model is ticked, and source
/// frames are pushed at their own instants. A tick precedes frames due at
/// the same instant.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let truth = ground_truth(cfg);
    let streams = simulate_sources(cfg, &truth)?;
    let clock = VirtualClock::new(0);
    let (model, rows) = build_model(cfg, clock.clone())?;

    let errors = Arc::new(Mutex::new(Vec::new()));
    let warnings = Arc::new(Mutex::new(0usize));
    {
        let errors = Arc::clone(&errors);
        let warnings = Arc::clone(&warnings);
        model.on_event(move |e| match e {
            ModelEvent::Error {
                node,
                origin,
                message,
                ..
            } if node == origin => {
                errors
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .push(format!("{node}: {message}"));
            }
            ModelEvent::Warning { .. } => {
                *warnings.lock().unwrap_or_else(|e| e.into_inner()) += 1;
            }
            _ => {}
        });
    }

    let mut inputs = BTreeMap::new();
    for kind in SourceKind::ALL {
        let id = model
            .node(&source_node_name(kind))
            .ok_or_else(|| GraphError::UnknownNode(source_node_name(kind)))?;
        inputs.insert(kind, id);
    }

    let emissions = streams.merged();
    let end = run_end_us(cfg, &truth) + cfg.merge_timeout_ms * 1000 + 1000;
    let mut next_tick = 0i64;
    let mut pending = emissions.iter().peekable();
    loop {
        let due = pending.peek().map(|e| e.at_us);
        if next_tick <= end && due.is_none_or(|t| next_tick <= t) {
            clock.set(next_tick);
            model.tick();
            next_tick += 1000;
        } else if let Some(e) = pending.next() {
            clock.set(e.at_us);
            let _ = model.push(inputs[&e.source], e.frame.clone());
        } else {
            break;
        }
    }
    model.shutdown();

    let fused = take(&rows.fused)?;
    let mut traces = BTreeMap::new();
    for (kind, r) in &rows.traces {
        traces.insert(*kind, take(r)?);
    }
    let ground_truth = truth_track(&truth, run_end_us(cfg, &truth))?;
    let errors = std::mem::take(&mut *errors.lock().unwrap_or_else(|e| e.into_inner()));
    let warnings = *warnings.lock().unwrap_or_else(|e| e.into_inner());
    Ok(RunOutput {
        fused,
        ground_truth,
        traces,
        streams,
        errors,
        warnings,
    })
}

/// The ground truth sampled every 10 ms and at every corner.
pub fn truth_track(truth: &Trajectory, until_us: i64) -> Result<Track, TrackError> {
    Track::from_tuples(truth.sample(TRUTH_STEP_US, until_us))
}

/// Compares two traces at the configured key points.
pub fn evaluate_with(
    cfg: &ScenarioConfig,
    a: &Track,
    b: &Track,
) -> Result<TrackError2d, TrackError> {
    evaluate(a, b, cfg.key_point_interval_ms * 1000, cfg.key_point_count)
}
