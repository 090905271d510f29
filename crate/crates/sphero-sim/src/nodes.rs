//! Nodes specific to the rolling-robot demonstrator.

use std::sync::{Arc, Mutex};

use posflow::geometry::{AbsolutePosition, Homography, Vector3};
use posflow::graph::{NodeContext, NodeError, ProcessingNode, SinkNode, SourceNode};
use posflow::model::{DataFrame, FramePayload};
use posflow::units;

use crate::track::Sample;

/// Uid of the tracked robot.
pub const SPHERO: &str = "sphero";

/// A source fed from outside through `Model::push`.
#[derive(Debug, Default)]
pub struct FeedSource;

impl SourceNode for FeedSource {}

/// Rectifies detections: maps the blob centroid through `h` and reports the
/// size of the warped image.
#[derive(Debug, Clone)]
pub struct PerspectiveWarpNode {
    h: Homography,
    width: u32,
    height: u32,
}

impl PerspectiveWarpNode {
    pub fn new(h: Homography, width: u32, height: u32) -> Self {
        Self { h, width, height }
    }
}

impl ProcessingNode for PerspectiveWarpNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        if let FramePayload::DetectionFrame {
            centroid,
            width,
            height,
            ..
        } = &mut frame.payload
        {
            let (x, y) = self.h.apply(centroid.x, centroid.y)?;
            *centroid = Vector3::new(x, y, 0.0);
            *width = self.width;
            *height = self.height;
        }
        Ok(vec![frame])
    }
}

/// Turns a detection into a position of the frame's source object, in the
/// image plane. The accuracy is the square root of the blob area.
#[derive(Debug, Default)]
pub struct BlobPositionNode;

impl ProcessingNode for BlobPositionNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let FramePayload::DetectionFrame { centroid, area, .. } = frame.payload else {
            return Ok(Vec::new());
        };
        let created = frame.created_timestamp;
        let cm = units::centimeter();
        let Some(source) = frame.source_mut() else {
            return Err(NodeError::new("detection frame without source object"));
        };
        source.position = Some(
            AbsolutePosition::new_2d(centroid.x, centroid.y, cm.clone())
                .with_timestamp(created)
                .with_accuracy(area.max(0.0).sqrt(), cm),
        );
        Ok(vec![frame])
    }
}

/// Puts IMU velocity and orientation on the source object's position. Frames
/// whose source has no position yet are dropped.
#[derive(Debug, Clone)]
pub struct ImuVelocityNode {
    accuracy_cm: f64,
}

impl ImuVelocityNode {
    pub fn new(accuracy_cm: f64) -> Self {
        Self { accuracy_cm }
    }
}

impl ProcessingNode for ImuVelocityNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let FramePayload::ImuDataFrame {
            linear_velocity,
            orientation,
            angular_velocity,
            ..
        } = frame.payload.clone()
        else {
            return Ok(Vec::new());
        };
        let Some(p) = frame.source_mut().and_then(|s| s.position.as_mut()) else {
            return Ok(Vec::new());
        };
        if let Some(v) = linear_velocity {
            p.velocity.linear = v;
        }
        if let Some(q) = orientation {
            p.orientation = q;
        }
        p.velocity.angular = angular_velocity;
        p.accuracy = Some(self.accuracy_cm);
        p.accuracy_unit = units::centimeter();
        Ok(vec![frame])
    }
}

/// Records the robot's position in cm from every frame it receives, stamped
/// with the frame's creation time. Frames without a robot position are
/// skipped.
#[derive(Debug, Clone)]
pub struct TrackSink {
    rows: Arc<Mutex<Vec<Sample>>>,
    persists: bool,
}

impl TrackSink {
    pub fn new(persists: bool) -> Self {
        Self {
            rows: Arc::default(),
            persists,
        }
    }

    pub fn rows(&self) -> Arc<Mutex<Vec<Sample>>> {
        Arc::clone(&self.rows)
    }
}

impl SinkNode for TrackSink {
    fn on_push(&mut self, frame: &DataFrame, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        let Some(p) = frame.object(SPHERO).and_then(|o| o.position.as_ref()) else {
            return Ok(());
        };
        let v = p.vector_in(&units::centimeter())?;
        self.rows
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Sample {
                timestamp: frame.created_timestamp,
                x: v.x,
                y: v.y,
            });
        Ok(())
    }

    fn persists(&self) -> bool {
        self.persists
    }
}
