//! Timestamped planar traces, their CSV form, and trace comparison.

use std::io::{Read, Write};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected header `timestamp,x,y`, found `{0}`")]
    Header(String),
    #[error("timestamps go backwards at row {row}")]
    Unordered { row: usize },
    #[error("trace spans {span_us} us but {needed_us} us are needed")]
    InsufficientSpan { span_us: i64, needed_us: i64 },
    #[error("traces do not overlap long enough: {0}")]
    NoOverlap(String),
}

/// One position: microseconds, then x and y in cm.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Sample {
    pub timestamp: i64,
    pub x: f64,
    pub y: f64,
}

/// Samples ordered by non-decreasing timestamp.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Track {
    samples: Vec<Sample>,
}

impl Track {
    pub fn new(samples: Vec<Sample>) -> Result<Self, TrackError> {
        if let Some(i) = samples
            .windows(2)
            .position(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(TrackError::Unordered { row: i + 2 });
        }
        Ok(Self { samples })
    }

    pub fn from_tuples(
        rows: impl IntoIterator<Item = (i64, f64, f64)>,
    ) -> Result<Self, TrackError> {
        Self::new(
            rows.into_iter()
                .map(|(timestamp, x, y)| Sample { timestamp, x, y })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> Option<i64> {
        self.samples.first().map(|s| s.timestamp)
    }

    pub fn end(&self) -> Option<i64> {
        self.samples.last().map(|s| s.timestamp)
    }

    pub fn span_us(&self) -> i64 {
        match (self.start(), self.end()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// Position at `t` by linear interpolation between the neighbouring
    /// samples. Where several samples share a timestamp the last one counts.
    /// `None` outside the trace.
    pub fn at(&self, t: i64) -> Option<(f64, f64)> {
        let (first, last) = (self.start()?, self.end()?);
        if t < first || t > last {
            return None;
        }
        let i = self.samples.partition_point(|s| s.timestamp <= t);
        let a = self.samples[i - 1];
        if a.timestamp == t || i == self.samples.len() {
            return Some((a.x, a.y));
        }
        let b = self.samples[i];
        let f = (t - a.timestamp) as f64 / (b.timestamp - a.timestamp) as f64;
        Some((a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f))
    }

    /// Largest gap between consecutive timestamps.
    pub fn max_gap_us(&self) -> i64 {
        self.samples
            .windows(2)
            .map(|w| w[1].timestamp - w[0].timestamp)
            .max()
            .unwrap_or(0)
    }

    /// CSV with header `timestamp,x,y`, coordinates with six decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrackError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "x", "y"])?;
        for s in &self.samples {
            w.write_record([
                s.timestamp.to_string(),
                format!("{:.6}", s.x),
                format!("{:.6}", s.y),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, TrackError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != ["timestamp", "x", "y"] {
            return Err(TrackError::Header(header.join(",")));
        }
        let samples = r.deserialize().collect::<Result<Vec<Sample>, _>>()?;
        Self::new(samples)
    }
}

/// Mean and largest planar distance between two traces, in cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackError2d {
    pub avg: f64,
    pub max: f64,
}

/// Compares two traces at `count` key points `interval_us` apart, starting
/// where both traces have begun. Positions between samples are linearly
/// interpolated.
pub fn evaluate(
    a: &Track,
    b: &Track,
    interval_us: i64,
    count: usize,
) -> Result<TrackError2d, TrackError> {
    let needed = interval_us * count as i64;
    for t in [a, b] {
        if t.span_us() < needed {
            return Err(TrackError::InsufficientSpan {
                span_us: t.span_us(),
                needed_us: needed,
            });
        }
    }
    let start = a.start().max(b.start()).expect("non-empty");
    let stop = a.end().min(b.end()).expect("non-empty");
    let last = start + interval_us * (count as i64 - 1);
    if last > stop {
        return Err(TrackError::NoOverlap(format!(
            "key points run to {last} us, common part ends at {stop} us"
        )));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for k in 0..count as i64 {
        let t = start + k * interval_us;
        let (ax, ay) = a.at(t).expect("inside");
        let (bx, by) = b.at(t).expect("inside");
        let d = (ax - bx).hypot(ay - by);
        sum += d;
        max = max.max(d);
    }
    Ok(TrackError2d {
        avg: sum / count as f64,
        max,
    })
}
