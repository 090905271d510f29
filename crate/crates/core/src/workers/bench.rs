//! Throughput of a CPU-bound node run in place versus on worker pools.

use std::fmt::Write as _;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::Value;

use super::WorkerNode;
use crate::geometry::{AbsolutePosition, Vector3, Velocity};
use crate::graph::{
    GraphBuilder, GraphError, ModelBuilder, NodeContext, NodeError, NodeSpec, ProcessingNode,
    SinkNode, SourceNode,
};
use crate::model::{DataFrame, DataObject};
use crate::units;

/// Computes the first `count` primes by trial division for every frame and
/// records the largest on the frame's source object as `lastPrime`.
#[derive(Debug, Clone)]
pub struct PrimeNode {
    count: usize,
}

impl PrimeNode {
    pub fn new(count: usize) -> Self {
        Self { count }
    }

    pub fn nth_prime(count: usize) -> u64 {
        let mut primes: Vec<u64> = Vec::with_capacity(count);
        let mut n = 2u64;
        while primes.len() < count {
            if primes
                .iter()
                .take_while(|&&p| p * p <= n)
                .all(|&p| !n.is_multiple_of(p))
            {
                primes.push(n);
            }
            n += 1;
        }
        primes.last().copied().unwrap_or(0)
    }
}

impl ProcessingNode for PrimeNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let last = Self::nth_prime(self.count);
        if let Some(src) = frame.source_mut() {
            src.properties.insert("lastPrime".into(), Value::from(last));
        }
        Ok(vec![frame])
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub pool_sizes: Vec<usize>,
    /// How long frames are fed for each measurement.
    pub duration: Duration,
    /// Measurements per configuration; the median is reported. Runs of all
    /// configurations are interleaved to spread out machine noise.
    pub repetitions: usize,
    pub primes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            pool_sizes: vec![1, 2, 4],
            duration: Duration::from_secs(2),
            repetitions: 3,
            primes: 5000,
        }
    }
}

/// One benchmark result. `workers == 0` is the run without workers.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    pub fps: f64,
    pub speedup: f64,
}

#[derive(Default)]
struct Counter {
    done: Mutex<usize>,
    changed: Condvar,
}

struct CountingSink(Arc<Counter>);

impl SinkNode for CountingSink {
    fn on_push(&mut self, _frame: &DataFrame, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        *self.0.done.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.changed.notify_all();
        Ok(())
    }

    fn persists(&self) -> bool {
        false
    }
}

struct PushOnly;

impl SourceNode for PushOnly {}

fn bench_frame(i: u64) -> DataFrame {
    let position = AbsolutePosition::new_3d(1.0, 2.0, 0.5, units::meter())
        .with_timestamp(i as i64)
        .with_accuracy(0.1, units::meter())
        .with_velocity(Velocity::new(
            Vector3::new(0.3, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.1),
        ));
    let source = DataObject::new("bench-object")
        .with_name("benchmark")
        .with_position(position);
    let mut frame = DataFrame::with_uid(format!("bench-{i}"), i as i64);
    frame.set_source(source);
    frame
}

/// Frames per second through source → prime node → sink, with the prime
/// node either in place (`workers == None`) or on a pool.
fn measure(workers: Option<usize>, cfg: &BenchConfig) -> Result<f64, GraphError> {
    let counter = Arc::new(Counter::default());
    let primes = cfg.primes;
    let middle = match workers {
        None => NodeSpec::processing(PrimeNode::new(primes)),
        Some(k) => NodeSpec::processing(WorkerNode::new(k, move || {
            GraphBuilder::new()
                .from_entry()
                .via(NodeSpec::processing(PrimeNode::new(primes)))
                .to_exit()
        })),
    };
    let model = ModelBuilder::new()
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(PushOnly).named("source"))
                .via(middle)
                .to(NodeSpec::sink(CountingSink(Arc::clone(&counter)))),
        )
        .build()?;
    let source = model.node("source").expect("named source");
    let window = 2 * workers.unwrap_or(1);

    let start = Instant::now();
    let mut pushed = 0usize;
    while start.elapsed() < cfg.duration {
        {
            let mut done = counter.done.lock().unwrap_or_else(|e| e.into_inner());
            while pushed - *done >= window {
                done = counter
                    .changed
                    .wait(done)
                    .unwrap_or_else(|e| e.into_inner());
            }
        }
        model.push(source, bench_frame(pushed as u64));
        pushed += 1;
    }
    let mut done = counter.done.lock().unwrap_or_else(|e| e.into_inner());
    while *done < pushed {
        done = counter
            .changed
            .wait(done)
            .unwrap_or_else(|e| e.into_inner());
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(*done as f64 / elapsed)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Measures the run without workers first, then every pool size. Speedups
/// are relative to the run without workers.
pub fn benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>, GraphError> {
    let reps = cfg.repetitions.max(1);
    let mut sequential = Vec::with_capacity(reps);
    let mut pooled: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); cfg.pool_sizes.len()];
    for _ in 0..reps {
        sequential.push(measure(None, cfg)?);
        for (i, &k) in cfg.pool_sizes.iter().enumerate() {
            pooled[i].push(measure(Some(k), cfg)?);
        }
    }
    let base = median(sequential);
    let mut rows = vec![BenchRow {
        workers: 0,
        fps: base,
        speedup: 1.0,
    }];
    for (k, runs) in cfg.pool_sizes.iter().zip(pooled) {
        let fps = median(runs);
        rows.push(BenchRow {
            workers: *k,
            fps,
            speedup: fps / base,
        });
    }
    Ok(rows)
}

/// `workers,fps,speedup` with one line per row.
pub fn benchmark_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("workers,fps,speedup\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.2},{:.3}", r.workers, r.fps, r.speedup);
    }
    out
}
