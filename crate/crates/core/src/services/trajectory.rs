use std::collections::HashMap;
use std::sync::RwLock;

use super::ServiceError;
use crate::geometry::AbsolutePosition;
use crate::model::codec;

/// Append-only position history per object.
#[derive(Debug, Default)]
pub struct TrajectoryService {
    tracks: RwLock<HashMap<String, Vec<(i64, String)>>>,
}

impl TrajectoryService {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample. Timestamps must not decrease per object.
    pub fn append(
        &self,
        object_uid: &str,
        position: &AbsolutePosition,
    ) -> Result<(), ServiceError> {
        let text = codec::serialize(position)?;
        let mut tracks = self.tracks.write().unwrap_or_else(|e| e.into_inner());
        let track = tracks.entry(object_uid.to_string()).or_default();
        if let Some((last, _)) = track.last() {
            if position.timestamp < *last {
                return Err(ServiceError::NonMonotonic {
                    object_uid: object_uid.to_string(),
                    last: *last,
                    got: position.timestamp,
                });
            }
        }
        track.push((position.timestamp, text));
        Ok(())
    }

    /// Samples with `t1 <= timestamp <= t2`, in append order.
    pub fn query(
        &self,
        object_uid: &str,
        t1: i64,
        t2: i64,
    ) -> Result<Vec<AbsolutePosition>, ServiceError> {
        let tracks = self.tracks.read().unwrap_or_else(|e| e.into_inner());
        let Some(track) = tracks.get(object_uid) else {
            return Ok(Vec::new());
        };
        let start = track.partition_point(|(t, _)| *t < t1);
        track[start..]
            .iter()
            .take_while(|(t, _)| *t <= t2)
            .map(|(_, text)| codec::deserialize(text).map_err(ServiceError::from))
            .collect()
    }

    pub fn latest(&self, object_uid: &str) -> Result<Option<AbsolutePosition>, ServiceError> {
        let tracks = self.tracks.read().unwrap_or_else(|e| e.into_inner());
        match tracks.get(object_uid).and_then(|t| t.last()) {
            Some((_, text)) => Ok(Some(codec::deserialize(text)?)),
            None => Ok(None),
        }
    }

    pub fn len(&self, object_uid: &str) -> usize {
        self.tracks
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(object_uid)
            .map_or(0, Vec::len)
    }
}
