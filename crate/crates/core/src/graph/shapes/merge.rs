use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::algorithms::fuse_weighted;
use crate::graph::{BuildContext, NodeContext, NodeError, ProcessingNode};
use crate::model::{DataFrame, DataObject};

type GroupKeyFn = Arc<dyn Fn(&DataFrame) -> String + Send + Sync>;
type ObjectFilterFn = Arc<dyn Fn(&DataObject) -> bool + Send + Sync>;

/// Settings of a [`MergeNode`].
#[derive(Clone)]
pub struct MergeOptions {
    pub timeout_us: i64,
    pub min_count: usize,
    group_key: Option<GroupKeyFn>,
    object_filter: Option<ObjectFilterFn>,
}

impl fmt::Debug for MergeOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MergeOptions")
            .field("timeout_us", &self.timeout_us)
            .field("min_count", &self.min_count)
            .field("group_key", &self.group_key.is_some())
            .field("object_filter", &self.object_filter.is_some())
            .finish()
    }
}

impl Default for MergeOptions {
    fn default() -> Self {
        Self {
            timeout_us: 100_000,
            min_count: 1,
            group_key: None,
            object_filter: None,
        }
    }
}

impl MergeOptions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn timeout_us(mut self, us: i64) -> Self {
        self.timeout_us = us;
        self
    }

    pub fn timeout_ms(self, ms: i64) -> Self {
        self.timeout_us(ms * 1000)
    }

    pub fn min_count(mut self, n: usize) -> Self {
        self.min_count = n;
        self
    }

    /// Frames are grouped by this key. The default is the frame's source uid.
    pub fn group_by(mut self, f: impl Fn(&DataFrame) -> String + Send + Sync + 'static) -> Self {
        self.group_key = Some(Arc::new(f));
        self
    }

    /// Objects whose positions are fused. The default fuses every object.
    pub fn object_filter(
        mut self,
        f: impl Fn(&DataObject) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.object_filter = Some(Arc::new(f));
        self
    }

    fn key(&self, frame: &DataFrame) -> String {
        match &self.group_key {
            Some(f) => f(frame),
            None => frame.source_uid().unwrap_or(&frame.uid).to_string(),
        }
    }

    fn fuses(&self, obj: &DataObject) -> bool {
        self.object_filter.as_ref().is_none_or(|f| f(obj))
    }
}

struct Group {
    first_at: i64,
    /// Per inlet, the latest contribution with its arrival sequence number.
    parts: Vec<Option<(u64, DataFrame)>>,
}

impl Group {
    fn count(&self) -> usize {
        self.parts.iter().filter(|p| p.is_some()).count()
    }
}

/// Joins frames arriving on several inlets.
///
/// Frames with the same group key are buffered. The group is released as one
/// merged frame once every inlet has contributed, or once `timeout` has
/// passed since its first frame provided at least `min_count` inlets
/// contributed; otherwise it is dropped at the timeout. A later frame from
/// the same inlet replaces the earlier one.
///
/// The merged frame copies the newest contribution. Objects selected by the
/// object filter get positions fused by inverse-accuracy weighting; other
/// objects are collected from every contribution, newest first.
pub struct MergeNode {
    options: MergeOptions,
    inlets: usize,
    groups: BTreeMap<String, Group>,
    seq: u64,
}

impl MergeNode {
    pub fn new(options: MergeOptions) -> Self {
        Self {
            options,
            inlets: 0,
            groups: BTreeMap::new(),
            seq: 0,
        }
    }

    fn release_expired(&mut self, now: i64, ctx: &NodeContext<'_>) -> Vec<DataFrame> {
        let timeout = self.options.timeout_us;
        let mut expired: Vec<(i64, String)> = self
            .groups
            .iter()
            .filter(|(_, g)| now - g.first_at >= timeout)
            .map(|(k, g)| (g.first_at, k.clone()))
            .collect();
        expired.sort();
        let mut out = Vec::new();
        for (_, key) in expired {
            let group = self.groups.remove(&key).expect("group");
            if group.count() >= self.options.min_count.max(1) {
                out.push(self.combine(group, ctx));
            }
        }
        out
    }

    fn combine(&self, group: Group, ctx: &NodeContext<'_>) -> DataFrame {
        let mut parts: Vec<(usize, u64, DataFrame)> = group
            .parts
            .into_iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|(s, f)| (i, s, f)))
            .collect();
        // Newest first: creation time, then arrival.
        let newest = parts
            .iter()
            .enumerate()
            .max_by_key(|(_, (_, s, f))| (f.created_timestamp, *s))
            .map(|(idx, _)| idx)
            .expect("non-empty group");
        let created = parts
            .iter()
            .map(|(_, _, f)| f.created_timestamp)
            .max()
            .expect("non-empty group");
        let mut merged = parts[newest].2.repack(ctx.new_uid(), created);

        parts.sort_by_key(|(_, s, f)| std::cmp::Reverse((f.created_timestamp, *s)));
        for (_, _, f) in &parts {
            for obj in f.objects() {
                if merged.object(&obj.uid).is_none() {
                    merged.add_object(obj.clone());
                }
            }
        }

        parts.sort_by_key(|(i, _, _)| *i);
        let fused_uids: Vec<String> = merged
            .objects()
            .iter()
            .filter(|o| self.options.fuses(o))
            .map(|o| o.uid.clone())
            .collect();
        for uid in fused_uids {
            let samples: Vec<_> = parts
                .iter()
                .filter_map(|(_, _, f)| f.object(&uid).and_then(|o| o.position.clone()))
                .collect();
            if samples.is_empty() {
                continue;
            }
            match fuse_weighted(&samples) {
                Ok(p) => {
                    if let Some(obj) = merged.object_mut(&uid) {
                        obj.position = Some(p);
                    }
                }
                Err(e) => ctx.warn(format!("fusing `{uid}` failed: {e}")),
            }
        }
        merged
    }
}

impl ProcessingNode for MergeNode {
    fn process(
        &mut self,
        frame: DataFrame,
        ctx: &mut NodeContext<'_>,
    ) -> Result<Vec<DataFrame>, NodeError> {
        let now = ctx.now();
        let mut out = self.release_expired(now, ctx);
        let inlet = ctx.inlet().unwrap_or(0).min(self.inlets.saturating_sub(1));
        let key = self.options.key(&frame);
        self.seq += 1;
        let seq = self.seq;
        let inlets = self.inlets.max(1);
        let group = self.groups.entry(key.clone()).or_insert_with(|| Group {
            first_at: now,
            parts: vec![None; inlets],
        });
        group.parts[inlet] = Some((seq, frame));
        if group.count() == inlets {
            let group = self.groups.remove(&key).expect("group");
            out.push(self.combine(group, ctx));
        }
        Ok(out)
    }

    fn on_tick(&mut self, ctx: &mut NodeContext<'_>) -> Result<Vec<DataFrame>, NodeError> {
        let now = ctx.now();
        Ok(self.release_expired(now, ctx))
    }

    fn on_build(&mut self, ctx: &BuildContext<'_>) -> Result<(), NodeError> {
        self.inlets = ctx.inlet_count();
        if self.options.timeout_us <= 0 {
            return Err(NodeError::new("merge timeout must be positive"));
        }
        Ok(())
    }

    fn min_inlets(&self) -> usize {
        2
    }
}
