//! Ready-made processing nodes used as flow shapes.

mod merge;

use std::collections::HashMap;

pub use merge::{MergeNode, MergeOptions};

use super::{NodeContext, NodeError, ProcessingNode};
use crate::geometry::ReferenceSpace;
use crate::model::{DataFrame, DataObject};

/// Forwards at most one frame per interval on each inlet; frames arriving
/// within the window of the last forwarded one are dropped.
#[derive(Debug, Clone)]
pub struct DebounceNode {
    interval_us: i64,
    last: HashMap<usize, i64>,
}

impl DebounceNode {
    pub fn new(interval_us: i64) -> Self {
        Self {
            interval_us,
            last: HashMap::new(),
        }
    }
}

impl ProcessingNode for DebounceNode {
    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let now = ctx.now();
        let inlet = ctx.inlet().unwrap_or(0);
        match self.last.get(&inlet) {
            Some(&t) if now - t < self.interval_us => Ok(Vec::new()),
            _ => {
                self.last.insert(inlet, now);
                Ok(vec![frame])
            }
        }
    }

    fn on_build(&mut self, _ctx: &super::BuildContext<'_>) -> Result<(), NodeError> {
        if self.interval_us <= 0 {
            return Err(NodeError::new("debounce interval must be positive"));
        }
        Ok(())
    }

    fn breaks_feedback(&self) -> bool {
        true
    }
}

/// Deep-copies frames. With `repack` the copy gets a fresh uid and the
/// current time as creation timestamp.
#[derive(Debug, Clone)]
pub struct CloneNode {
    repack: bool,
}

impl CloneNode {
    pub fn new(repack: bool) -> Self {
        Self { repack }
    }
}

impl ProcessingNode for CloneNode {
    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        if self.repack {
            Ok(vec![frame.repack(ctx.new_uid(), ctx.now())])
        } else {
            Ok(vec![frame])
        }
    }

    fn breaks_feedback(&self) -> bool {
        true
    }
}

type FramePredicate = Box<dyn Fn(&DataFrame) -> bool + Send>;
type ObjectPredicate = Box<dyn Fn(&DataObject) -> bool + Send>;

enum Predicate {
    Frame(FramePredicate),
    Objects(ObjectPredicate),
}

/// Drops frames failing a predicate, or with [`FilterNode::objects`], drops
/// the objects failing it and then frames left without objects.
pub struct FilterNode {
    predicate: Predicate,
}

impl FilterNode {
    pub fn new(predicate: impl Fn(&DataFrame) -> bool + Send + 'static) -> Self {
        Self {
            predicate: Predicate::Frame(Box::new(predicate)),
        }
    }

    pub fn objects(predicate: impl Fn(&DataObject) -> bool + Send + 'static) -> Self {
        Self {
            predicate: Predicate::Objects(Box::new(predicate)),
        }
    }
}

impl ProcessingNode for FilterNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        match &self.predicate {
            Predicate::Frame(p) => Ok(if p(&frame) { vec![frame] } else { Vec::new() }),
            Predicate::Objects(p) => {
                let rejected: Vec<String> = frame
                    .objects()
                    .iter()
                    .filter(|o| !p(o))
                    .map(|o| o.uid.clone())
                    .collect();
                for uid in rejected {
                    frame.remove_object(&uid);
                }
                Ok(if frame.objects().is_empty() {
                    Vec::new()
                } else {
                    vec![frame]
                })
            }
        }
    }
}

/// Rewrites every object position from `space` into the global space.
#[derive(Debug, Clone)]
pub struct ConvertFromSpaceNode {
    space: ReferenceSpace,
}

impl ConvertFromSpaceNode {
    pub fn new(space: ReferenceSpace) -> Self {
        Self { space }
    }
}

impl ProcessingNode for ConvertFromSpaceNode {
    fn process(
        &mut self,
        mut frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        for obj in frame.objects_mut() {
            if let Some(p) = &obj.position {
                obj.position = Some(ctx.spaces().to_global_from(p, &self.space)?);
            }
        }
        Ok(vec![frame])
    }
}

/// Pulls its inlets whenever at least `interval` has passed at a tick, and
/// forwards whatever arrives.
#[derive(Debug, Clone)]
pub struct TimedPullNode {
    interval_us: i64,
    last: Option<i64>,
}

impl TimedPullNode {
    pub fn new(interval_us: i64) -> Self {
        Self {
            interval_us,
            last: None,
        }
    }
}

impl ProcessingNode for TimedPullNode {
    fn process(
        &mut self,
        frame: DataFrame,
        _ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        Ok(vec![frame])
    }

    fn on_tick(&mut self, ctx: &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError> {
        let now = ctx.now();
        if self.last.is_none_or(|t| now - t >= self.interval_us) {
            self.last = Some(now);
            ctx.request_pull();
        }
        Ok(Vec::new())
    }

    fn on_build(&mut self, _ctx: &super::BuildContext<'_>) -> Result<(), NodeError> {
        if self.interval_us <= 0 {
            return Err(NodeError::new("pull interval must be positive"));
        }
        Ok(())
    }
}
