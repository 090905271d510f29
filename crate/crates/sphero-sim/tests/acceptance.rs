//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::HashMap;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use posflow::algorithms::{
    fuse_weighted, triangulate, trilaterate, BearingObservation, Landmark, RangeObservation,
};
use posflow::geometry::{
    AbsolutePosition, EulerOrder, Orientation, ReferenceSpace, SpaceRegistry, Vector3, Velocity,
};
use posflow::graph::{
    GraphBuilder, MergeOptions, Model, ModelBuilder, ModelEvent, NodeContext, NodeError, NodeSpec,
    SinkNode, SourceNode,
};
use posflow::model::{self, DataFrame, DataObject};
use posflow::services::VirtualClock;
use posflow::units::{self, builtin_registry, convert};
use posflow::workers::{benchmark, BenchConfig};
use posflow_sphero::config::{ScenarioConfig, SourceKind};
use posflow_sphero::{evaluate_with, run};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const FIXTURE: &str = include_str!("../../core/tests/fixtures/sphero_object.json");

enum Outcome {
    Pass(String),
    Fail(String),
    NotApplicable(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

// ---- 1 ----

fn offset_space_storage() -> Outcome {
    outcome((|| {
        let cm = units::centimeter();
        let spaces = SpaceRegistry::new(ReferenceSpace::root("global", cm.clone()));
        let space = ReferenceSpace::child_of("ref", spaces.global())
            .with_unit(cm.clone())
            .with_translation(10.0, 10.0, 0.0)
            .with_scale(1.0, 1.0, 0.0)
            .with_euler_rotation(Vector3::ZERO, EulerOrder::XYZ, &units::radian())
            .map_err(|e| e.to_string())?;
        spaces.register(space.clone()).map_err(|e| e.to_string())?;
        let mut obj = DataObject::new("myObject");
        obj.set_position(
            AbsolutePosition::new_3d(5.0, 5.0, 5.0, cm),
            Some(&space),
            &spaces,
        )
        .map_err(|e| e.to_string())?;
        let v = obj.position.as_ref().ok_or("no position stored")?.vector;
        ensure(v == Vector3::new(-5.0, -5.0, 5.0), format!("stored {v:?}"))?;
        Ok(format!("stored ({}, {}, {})", v.x, v.y, v.z))
    })())
}

// ---- 2 ----

fn same_structure(a: &Value, b: &Value, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<&String> = x.keys().collect();
            let ky: Vec<&String> = y.keys().collect();
            ensure(kx == ky, format!("{path}: fields {kx:?} vs {ky:?}"))?;
            x.iter()
                .try_for_each(|(k, v)| same_structure(v, &y[k], &format!("{path}.{k}")))
        }
        (Value::Array(x), Value::Array(y)) => {
            ensure(x.len() == y.len(), format!("{path}: lengths differ"))?;
            x.iter()
                .zip(y)
                .enumerate()
                .try_for_each(|(i, (u, v))| same_structure(u, v, &format!("{path}[{i}]")))
        }
        (Value::Number(x), Value::Number(y)) => {
            let (u, v) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            ensure(u == v, format!("{path}: {u} vs {v}"))
        }
        _ => ensure(a == b, format!("{path}: {a} vs {b}")),
    }
}

fn fixture_round_trip() -> Outcome {
    outcome((|| {
        let original: Value = serde_json::from_str(FIXTURE).map_err(|e| e.to_string())?;
        let obj: DataObject = model::deserialize(FIXTURE).map_err(|e| e.to_string())?;
        let text = model::serialize(&obj).map_err(|e| e.to_string())?;
        let again: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        same_structure(&original, &again, "$")?;
        Ok(format!(
            "{} bytes, fields and type tags identical",
            text.len()
        ))
    })())
}

// ---- 3 ----

fn unit_conversion() -> Outcome {
    outcome((|| {
        let secs = convert(2.0, &units::minute(), &units::second()).map_err(|e| e.to_string())?;
        ensure(secs == 120.0, format!("2 min = {secs} s"))?;
        let dps = convert(
            1.0,
            &units::radian_per_second(),
            &units::degree_per_second(),
        )
        .map_err(|e| e.to_string())?;
        ensure(
            (dps - 57.29577951).abs() <= 1e-6,
            format!("1 rad/s = {dps} deg/s"),
        )?;
        let all = builtin_registry().units();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cases = 0;
        while cases < 10_000 {
            let a = &all[rng.random_range(0..all.len())];
            let b = &all[rng.random_range(0..all.len())];
            if a.base_name() != b.base_name() {
                continue;
            }
            let v: f64 = rng.random_range(-1e6..1e6);
            let there = convert(v, a, b).map_err(|e| e.to_string())?;
            let back = convert(there, b, a).map_err(|e| e.to_string())?;
            ensure(
                (back - v).abs() <= 1e-9 * v.abs(),
                format!("{v} {} -> {} -> {back}", a.name(), b.name()),
            )?;
            cases += 1;
        }
        Ok(format!(
            "2 min = 120 s, 1 rad/s = {dps:.8} deg/s, {cases} round trips"
        ))
    })())
}

// ---- 4 ----

type Frames = Arc<Mutex<Vec<DataFrame>>>;

struct Collect {
    frames: Frames,
    fail: bool,
}

impl SinkNode for Collect {
    fn on_push(&mut self, frame: &DataFrame, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        if self.fail {
            return Err(NodeError::new("sink failure"));
        }
        self.frames.lock().unwrap().push(frame.clone());
        Ok(())
    }
}

fn collect() -> (Collect, Frames) {
    let frames = Frames::default();
    (
        Collect {
            frames: frames.clone(),
            fail: false,
        },
        frames,
    )
}

struct Push;
impl SourceNode for Push {}

struct OnDemand(Arc<AtomicUsize>);

impl SourceNode for OnDemand {
    fn on_pull(&mut self, ctx: &mut NodeContext<'_>) -> Result<Option<DataFrame>, NodeError> {
        let n = self.0.fetch_add(1, Ordering::SeqCst);
        let mut f = DataFrame::with_uid(format!("pulled-{n}"), ctx.now());
        f.set_source(DataObject::new("tag"));
        Ok(Some(f))
    }
}

fn events(model: &Model) -> Arc<Mutex<Vec<ModelEvent>>> {
    let log: Arc<Mutex<Vec<ModelEvent>>> = Arc::default();
    let sink = log.clone();
    model.on_event(move |e| sink.lock().unwrap().push(e.clone()));
    log
}

fn pass() -> NodeSpec {
    NodeSpec::map(|f, _| Ok(vec![f]))
}

fn frame(uid: &str, obj: &str, t: i64) -> DataFrame {
    let mut f = DataFrame::with_uid(uid, t);
    f.set_source(
        DataObject::new(obj).with_position(
            AbsolutePosition::new_2d(t as f64, 0.0, units::meter())
                .with_timestamp(t)
                .with_accuracy(1.0, units::meter()),
        ),
    );
    f
}

fn completions_once_per_sink() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    for _ in 0..50 {
        let mut b = ModelBuilder::new()
            .add_node(NodeSpec::source(Push).named("src"))
            .add_node(pass().named("hub"))
            .add_shape(GraphBuilder::new().from("src").to("hub"));
        let mut sinks = Vec::new();
        for br in 0..rng.random_range(1..4) {
            let mut shape = GraphBuilder::new().from("hub");
            for _ in 0..rng.random_range(0..4) {
                shape = shape.via(pass());
            }
            let targets = (0..rng.random_range(1..3))
                .map(|s| {
                    let name = format!("sink-{br}-{s}");
                    sinks.push(name.clone());
                    NodeSpec::sink(collect().0).named(name).into()
                })
                .collect();
            b = b.add_shape(shape.to_all(targets));
        }
        let model = b.build().map_err(|e| e.to_string())?;
        let log = events(&model);
        let n = rng.random_range(1..12);
        for i in 0..n {
            model
                .push_named("src", frame(&format!("f{i}"), "o", 0))
                .map_err(|e| e.to_string())?
                .wait()
                .map_err(|e| e.to_string())?;
        }
        let mut counts: HashMap<(String, String), usize> = HashMap::new();
        for e in log.lock().unwrap().iter() {
            if let ModelEvent::Completed {
                sink, frame_uid, ..
            } = e
            {
                *counts.entry((sink.clone(), frame_uid.clone())).or_default() += 1;
            }
        }
        ensure(counts.len() == n * sinks.len(), "missing completions")?;
        ensure(counts.values().all(|c| *c == 1), "duplicate completion")?;
        checked += 1;
    }
    Ok(format!("{checked} random graphs"))
}

fn error_reaches_initiator() -> Result<(), String> {
    let model = ModelBuilder::new()
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(Push).named("src"))
                .via(pass().named("mid"))
                .to(NodeSpec::sink(Collect {
                    frames: Frames::default(),
                    fail: true,
                })
                .named("sink")),
        )
        .build()
        .map_err(|e| e.to_string())?;
    let log = events(&model);
    let _ = model
        .push_named("src", frame("f1", "o", 0))
        .map_err(|e| e.to_string())?
        .wait();
    let src = model.node_uid(model.node("src").unwrap()).to_string();
    let sink = model.node_uid(model.node("sink").unwrap()).to_string();
    let reached = log.lock().unwrap().iter().any(|e| {
        matches!(e,
        ModelEvent::Error { node, origin, frame_uid, .. }
            if *node == src && *origin == sink && frame_uid == "f1")
    });
    ensure(reached, "no error event at the pushing source")
}

fn pull_yields_push() -> Result<(), String> {
    let pulls = Arc::new(AtomicUsize::new(0));
    let (sink, got) = collect();
    let model = ModelBuilder::new()
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(OnDemand(pulls.clone())))
                .via(pass())
                .to(NodeSpec::sink(sink).named("sink")),
        )
        .build()
        .map_err(|e| e.to_string())?;
    let n = model
        .pull(model.node("sink").unwrap())
        .wait()
        .map_err(|e| e.to_string())?;
    ensure(
        n == 1 && pulls.load(Ordering::SeqCst) == 1,
        "pull not answered",
    )?;
    let arrived = got.lock().unwrap().len();
    ensure(arrived == 1, "answer did not arrive at the sink")
}

fn merge_timeout() -> Result<(), String> {
    let clock = VirtualClock::new(0);
    let (sink, got) = collect();
    let sources = (0..5)
        .map(|i| NodeSpec::source(Push).named(format!("s{i}")).into())
        .collect();
    let model = ModelBuilder::new()
        .with_virtual_clock(clock.clone())
        .add_shape(
            GraphBuilder::new()
                .from_all(sources)
                .merge(MergeOptions::new().timeout_ms(20).min_count(2))
                .to(NodeSpec::sink(sink)),
        )
        .build()
        .map_err(|e| e.to_string())?;
    model
        .push_named("s0", frame("a", "o", 0))
        .map_err(|e| e.to_string())?;
    clock.set(7_000);
    model
        .push_named("s3", frame("b", "o", 7_000))
        .map_err(|e| e.to_string())?;
    for t in [8_000, 19_999] {
        clock.set(t);
        model.tick();
        ensure(
            got.lock().unwrap().is_empty(),
            format!("released at {t} us"),
        )?;
    }
    clock.set(20_000);
    model.tick();
    let released = got.lock().unwrap().len();
    ensure(released == 1, "not released at the timeout")
}

fn graph_semantics() -> Outcome {
    outcome((|| {
        let a = completions_once_per_sink()?;
        error_reaches_initiator()?;
        pull_yields_push()?;
        merge_timeout()?;
        Ok(format!(
            "(a) {a}, (b) error path, (c) pull answered by push, (d) merge at 20 ms"
        ))
    })())
}

// ---- 5 ----

fn p2(x: f64, y: f64) -> AbsolutePosition {
    AbsolutePosition::new_2d(x, y, units::meter())
}

fn grid_min(f: &dyn Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..201 {
        let x = lo + (hi - lo) * i as f64 / 200.0;
        for j in 0..201 {
            let y = lo + (hi - lo) * j as f64 / 200.0;
            let v = f(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    (best.1, best.2)
}

fn algorithm_oracles() -> Outcome {
    outcome((|| {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for case in 0..100 {
            let spatial = case % 2 == 1;
            let n = if spatial {
                rng.random_range(4..7)
            } else {
                rng.random_range(3..6)
            };
            let z = |rng: &mut ChaCha8Rng, s: f64| {
                if spatial {
                    rng.random_range(-s..s)
                } else {
                    0.0
                }
            };
            let t = Vector3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                z(&mut rng, 10.0),
            );
            let obs: Vec<RangeObservation> = (0..n)
                .map(|i| {
                    let a = Vector3::new(
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        z(&mut rng, 20.0),
                    );
                    let at = if spatial {
                        AbsolutePosition::new_3d(a.x, a.y, a.z, units::meter())
                    } else {
                        p2(a.x, a.y)
                    };
                    RangeObservation::new(
                        Landmark::new(format!("l{i}"), at),
                        a.distance(&t),
                        units::meter(),
                    )
                })
                .collect();
            let p = trilaterate(&obs).map_err(|e| e.to_string())?;
            worst = worst.max(p.vector.distance(&t));
        }
        let mut tri = 0;
        while tri < 100 {
            let t: (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let obs: Vec<BearingObservation> = (0..rng.random_range(2..5))
                .map(|i| {
                    let a: (f64, f64) =
                        (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
                    BearingObservation::new(
                        Landmark::new(format!("b{i}"), p2(a.0, a.1)),
                        (t.1 - a.1).atan2(t.0 - a.0),
                        units::radian(),
                    )
                })
                .collect();
            let spread = obs
                .iter()
                .flat_map(|a| obs.iter().map(move |b| (a.angle - b.angle).sin().abs()))
                .fold(0.0, f64::max);
            if spread < 0.2 {
                continue;
            }
            let p = triangulate(&obs).map_err(|e| e.to_string())?;
            worst = worst.max((p.vector.x - t.0).hypot(p.vector.y - t.1));
            tri += 1;
        }
        ensure(worst <= 1e-9, format!("noiseless error {worst:e}"))?;

        let (lo, hi) = (-2.0, 12.0);
        let step = (hi - lo) / 200.0;
        for _ in 0..20 {
            let anchors = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
            let t: (f64, f64) = (rng.random_range(1.0..9.0), rng.random_range(1.0..9.0));
            let d: Vec<f64> = anchors
                .iter()
                .map(|a| (t.0 - a.0).hypot(t.1 - a.1) + rng.random_range(-0.3..0.3))
                .collect();
            let obs: Vec<RangeObservation> = anchors
                .iter()
                .zip(&d)
                .map(|(a, d)| {
                    RangeObservation::new(Landmark::new("a", p2(a.0, a.1)), *d, units::meter())
                })
                .collect();
            let p = trilaterate(&obs).map_err(|e| e.to_string())?;
            let cost = |x: f64, y: f64| -> f64 {
                anchors
                    .iter()
                    .zip(&d)
                    .map(|(a, d)| ((x - a.0).hypot(y - a.1) - d).powi(2))
                    .sum()
            };
            let (gx, gy) = grid_min(&cost, lo, hi);
            ensure(
                (p.vector.x - gx).abs() <= step && (p.vector.y - gy).abs() <= step,
                "noisy trilateration off the grid minimum",
            )?;

            let marks = [(0.0, 0.0), (10.0, 0.0), (5.0, 10.0)];
            let lines: Vec<(f64, f64, f64)> = marks
                .iter()
                .map(|a| {
                    (
                        a.0,
                        a.1,
                        (t.1 - a.1).atan2(t.0 - a.0) + rng.random_range(-0.03..0.03),
                    )
                })
                .collect();
            let obs: Vec<BearingObservation> = lines
                .iter()
                .map(|(x, y, th)| {
                    BearingObservation::new(Landmark::new("m", p2(*x, *y)), *th, units::radian())
                })
                .collect();
            let p = triangulate(&obs).map_err(|e| e.to_string())?;
            let cost = |x: f64, y: f64| -> f64 {
                lines
                    .iter()
                    .map(|(ax, ay, th)| ((x - ax) * -th.sin() + (y - ay) * th.cos()).powi(2))
                    .sum()
            };
            let (gx, gy) = grid_min(&cost, lo, hi);
            ensure(
                (p.vector.x - gx).abs() <= step && (p.vector.y - gy).abs() <= step,
                "noisy triangulation off the grid minimum",
            )?;
        }

        let mut fuse_err: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.random_range(2..7);
            let samples: Vec<AbsolutePosition> = (0..n)
                .map(|_| {
                    let v = |rng: &mut ChaCha8Rng, s: f64| {
                        Vector3::new(
                            rng.random_range(-s..s),
                            rng.random_range(-s..s),
                            rng.random_range(-s..s),
                        )
                    };
                    let pos = v(&mut rng, 50.0);
                    let lin = v(&mut rng, 2.0);
                    let ang = v(&mut rng, 2.0);
                    AbsolutePosition::new_3d(pos.x, pos.y, pos.z, units::meter())
                        .with_accuracy(rng.random_range(0.01..5.0), units::meter())
                        .with_velocity(Velocity::new(lin, ang))
                        .with_orientation(Orientation::from_axis_angle(
                            Vector3::new(0.0, 0.0, 1.0),
                            rng.random_range(-1.0..1.0),
                        ))
                })
                .collect();
            let f = fuse_weighted(&samples).map_err(|e| e.to_string())?;
            let w: Vec<f64> = samples.iter().map(|s| 1.0 / s.accuracy()).collect();
            let sw: f64 = w.iter().sum();
            let mean = |g: &dyn Fn(&AbsolutePosition) -> f64| -> f64 {
                samples.iter().zip(&w).map(|(s, w)| w * g(s)).sum::<f64>() / sw
            };
            for (got, want) in [
                (f.vector.x, mean(&|s| s.vector.x)),
                (f.vector.y, mean(&|s| s.vector.y)),
                (f.vector.z, mean(&|s| s.vector.z)),
                (f.velocity.linear.x, mean(&|s| s.velocity.linear.x)),
                (f.velocity.angular.z, mean(&|s| s.velocity.angular.z)),
                (f.accuracy(), mean(&|s| s.accuracy())),
            ] {
                fuse_err = fuse_err.max((got - want).abs() / want.abs().max(1.0));
            }
        }
        ensure(fuse_err <= 1e-12, format!("fusion off by {fuse_err:e}"))?;
        Ok(format!(
            "noiseless worst {worst:.1e}, 40 noisy within grid step {step}, fusion worst {fuse_err:.1e}"
        ))
    })())
}

// ---- 6 ----

fn worker_benchmark() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let four = cores >= 4;
    let cfg = BenchConfig {
        pool_sizes: if four { vec![1, 4] } else { vec![1] },
        duration: Duration::from_secs(2),
        repetitions: 3,
        primes: 5000,
    };
    let rows = match benchmark(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let speedup = |w: usize| rows.iter().find(|r| r.workers == w).map(|r| r.speedup);
    let Some(one) = speedup(1) else {
        return Outcome::Fail("no 1-worker row".into());
    };
    let seq = rows.iter().find(|r| r.workers == 0).map_or(0.0, |r| r.fps);
    if !(0.6..=1.0).contains(&one) {
        return Outcome::Fail(format!("1 worker at {one:.2}x of {seq:.1} fps"));
    }
    if !four {
        return Outcome::NotApplicable(format!(
            "host has {cores} core(s), 4 needed; 1 worker at {one:.2}x of {seq:.1} fps is within 0.6-1.0"
        ));
    }
    let four_x = speedup(4).unwrap_or(0.0);
    if four_x >= 1.8 {
        Outcome::Pass(format!(
            "1 worker {one:.2}x, 4 workers {four_x:.2}x of {seq:.1} fps"
        ))
    } else {
        Outcome::Fail(format!("4 workers at {four_x:.2}x (1 worker {one:.2}x)"))
    }
}

// ---- 7 ----

fn noiseless_demonstrator() -> Outcome {
    outcome((|| {
        let cfg = ScenarioConfig::default().noiseless();
        let out = run(&cfg).map_err(|e| e.to_string())?;
        let e = evaluate_with(&cfg, &out.fused, &out.ground_truth).map_err(|e| e.to_string())?;
        let same = evaluate_with(&cfg, &out.fused, &out.fused).map_err(|e| e.to_string())?;
        ensure(
            e.avg <= 2.0 && e.max <= 5.0,
            format!("avg {:.3} cm, max {:.3} cm", e.avg, e.max),
        )?;
        ensure(
            same.avg == 0.0 && same.max == 0.0,
            "self comparison is not zero",
        )?;
        Ok(format!(
            "vs ground truth avg {:.2} cm, max {:.2} cm; self (0.00, 0.00)",
            e.avg, e.max
        ))
    })())
}

// ---- 8 ----

fn blind_spot_run() -> Outcome {
    outcome((|| {
        let base = ScenarioConfig::default().with_seed(42);
        let blind = base.clone().with_blind_spot(base.left_third());
        let full = run(&base).map_err(|e| e.to_string())?;
        let spot = run(&blind).map_err(|e| e.to_string())?;
        let no_video = run(&base.clone().without(SourceKind::Video)).map_err(|e| e.to_string())?;

        let frame_us = (1e6 / base.video_fps).round() as i64;
        let limit = 2 * (frame_us + base.merge_timeout_ms * 1000);
        let gap = spot.fused.max_gap_us();
        ensure(gap <= limit, format!("gap of {gap} us exceeds {limit} us"))?;

        let err = |t| evaluate_with(&base, t, &full.ground_truth).map_err(|e| e.to_string());
        let video_only = err(full.trace(SourceKind::Video))?.avg;
        let with_spot = err(&spot.fused)?.avg;
        let without = err(&no_video.fused)?.avg;
        ensure(
            video_only < with_spot && with_spot < without,
            format!(
                "video only {video_only:.2}, blind spot {with_spot:.2}, no video {without:.2} cm"
            ),
        )?;
        Ok(format!(
            "max gap {:.1} ms <= {:.1} ms; video only {video_only:.2} < blind spot {with_spot:.2} < no video {without:.2} cm",
            gap as f64 / 1000.0,
            limit as f64 / 1000.0
        ))
    })())
}

// ---- 9 ----

fn deterministic_output() -> Outcome {
    outcome((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for i in 0..2 {
            let path = dir.path().join(format!("position-{i}.csv"));
            let out = Command::new(env!("CARGO_BIN_EXE_sphero-sim"))
                .args([
                    "run",
                    "--seed",
                    "42",
                    "--blind-spot",
                    "0,0,86.666667,200",
                    "--output",
                ])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                out.status.success(),
                String::from_utf8_lossy(&out.stderr).to_string(),
            )?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], "runs differ")?;
        ensure(files[0].len() > 1000, "output is empty")?;
        Ok(format!("two runs, {} identical bytes", files[0].len()))
    })())
}

fn main() {
    let criteria: [(u32, &str, Check, Duration); 9] = [
        (
            1,
            "offset space position storage",
            offset_space_storage,
            Duration::from_secs(1),
        ),
        (
            2,
            "serialized object fixture round trip",
            fixture_round_trip,
            Duration::from_secs(1),
        ),
        (
            3,
            "unit conversion",
            unit_conversion,
            Duration::from_secs(5),
        ),
        (
            4,
            "graph semantics",
            graph_semantics,
            Duration::from_secs(10),
        ),
        (
            5,
            "algorithm oracles",
            algorithm_oracles,
            Duration::from_secs(30),
        ),
        (
            6,
            "worker benchmark shape",
            worker_benchmark,
            Duration::from_secs(120),
        ),
        (
            7,
            "noiseless demonstrator accuracy",
            noiseless_demonstrator,
            Duration::from_secs(60),
        ),
        (
            8,
            "blind spot continuity and error ordering",
            blind_spot_run,
            Duration::from_secs(120),
        ),
        (
            9,
            "deterministic output",
            deterministic_output,
            Duration::from_secs(120),
        ),
    ];
    let mut failed = 0;
    for (n, name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let late = took > limit;
        let (status, detail) = match result {
            Outcome::Pass(d) if late => ("FAIL", format!("{d}; over the {limit:?} limit")),
            Outcome::Pass(d) => ("PASS", d),
            Outcome::NotApplicable(d) if late => ("FAIL", format!("{d}; over the {limit:?} limit")),
            Outcome::NotApplicable(d) => ("NOT-APPLICABLE", d),
            Outcome::Fail(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {n} {name}: {status} ({detail}; {:.2} s)",
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
