use super::{displacement_apply, sma_filter, velocity_process};
use crate::geometry::ReferenceSpace;
use crate::graph::{NodeContext, NodeError, ProcessingNode};
use crate::model::DataFrame;

/// Advances object positions to the frame's creation time by dead
/// reckoning. Positions newer than the frame are left alone with a warning.
#[derive(Debug, Clone, Default)]
pub struct VelocityProcessingNode {
    only: Option<String>,
}

impl VelocityProcessingNode {
    pub fn new() -> Self {
        Self::default()
    }

    /// Restricts processing to the object with this uid.
    pub fn only(uid: impl Into<String>) -> Self {
        Self {
            only: Some(uid.into()),
        }
    }
}

impl ProcessingNode for VelocityProcessingNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let now = frame.created_timestamp;
        let frame_uid = frame.uid.clone();
        for obj in frame.objects_mut() {
            if self.only.as_deref().is_some_and(|u| u != obj.uid) {
                continue;
            }
            let Some(p) = &obj.position else { continue };
            let dt = (now - p.timestamp) as f64 / 1e6;
            if dt < 0.0 {
                ctx.warn(format!(
                    "position of `{}` is {} us newer than frame {frame_uid}",
                    obj.uid,
                    p.timestamp - now,
                ));
                continue;
            }
            obj.position = Some(velocity_process(p, dt)?);
        }
        Ok(vec![frame])
    }
}

/// Replaces each position accuracy by its simple moving average.
#[derive(Debug, Clone)]
pub struct SmaAccuracyNode {
    window: usize,
}

impl SmaAccuracyNode {
    pub fn new(window: usize) -> Self {
        Self { window }
    }
}

impl ProcessingNode for SmaAccuracyNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let store = ctx.services().node_data().clone();
        let node = ctx.node_uid().to_string();
        for obj in frame.objects_mut() {
            if let Some(p) = obj.position.as_mut() {
                let smoothed = sma_filter(&store, &node, &obj.uid, p.accuracy(), self.window)?;
                p.accuracy = Some(smoothed);
            }
        }
        Ok(vec![frame])
    }
}

/// Turns a drifting internal position into a relative update: the change
/// since the previous sample is added to the object's stored position.
///
/// Samples are first taken into the global space from `space` when one is
/// set. An object with no stored position takes the sample as is. A frame
/// whose objects all lack a previous sample is swallowed.
#[derive(Debug, Clone, Default)]
pub struct DisplacementNode {
    space: Option<ReferenceSpace>,
}

impl DisplacementNode {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn in_space(space: ReferenceSpace) -> Self {
        Self { space: Some(space) }
    }
}

impl ProcessingNode for DisplacementNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let store = ctx.services().node_data().clone();
        let node = ctx.node_uid().to_string();
        let mut updated = 0;
        let uids: Vec<String> = frame
            .objects()
            .iter()
            .filter(|o| o.position.is_some())
            .map(|o| o.uid.clone())
            .collect();
        for uid in uids {
            let sample = frame
                .object(&uid)
                .and_then(|o| o.position.clone())
                .expect("position");
            let sample = match &self.space {
                Some(space) => ctx.spaces().to_global_from(&sample, space)?,
                None => sample,
            };
            let delta = displacement_apply(&store, &node, &uid, &sample)?;
            let base = ctx.services().find_object(&uid)?.and_then(|o| o.position);
            let next = match (base, delta) {
                (None, _) => sample,
                (Some(_), None) => continue,
                (Some(base), Some(d)) => {
                    let mut p = sample.clone();
                    p.vector = base.vector_in(&sample.unit)? + d;
                    p
                }
            };
            if let Some(obj) = frame.object_mut(&uid) {
                obj.position = Some(next);
                updated += 1;
            }
        }
        Ok(if updated > 0 { vec![frame] } else { Vec::new() })
    }
}
