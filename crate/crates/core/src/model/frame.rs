use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::{new_uid, DataObject};
use crate::geometry::{Orientation, Vector3};

/// Frame-type specific content. The variant name is the frame's `__type`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "__type")]
pub enum FramePayload {
    #[default]
    DataFrame,
    /// A camera image, referenced rather than embedded.
    #[serde(rename_all = "camelCase")]
    VideoFrame {
        width: u32,
        height: u32,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        image: Option<String>,
    },
    /// Inertial readings: acceleration in m/s², rotation rate in rad/s, an
    /// optional integrated velocity in m/s (body frame) and an optional
    /// fused orientation.
    #[serde(rename_all = "camelCase")]
    ImuDataFrame {
        acceleration: Vector3,
        angular_velocity: Vector3,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        linear_velocity: Option<Vector3>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        orientation: Option<Orientation>,
        frequency: f64,
    },
    /// A detected colour blob in image coordinates (pixels).
    #[serde(rename_all = "camelCase")]
    DetectionFrame {
        centroid: Vector3,
        area: f64,
        width: u32,
        height: u32,
    },
    /// A motion command: heading in degrees and speed on a 0–255 scale.
    #[serde(rename_all = "camelCase")]
    InputFrame { heading: f64, speed: f64 },
}

impl FramePayload {
    pub fn type_name(&self) -> &'static str {
        match self {
            FramePayload::DataFrame => "DataFrame",
            FramePayload::VideoFrame { .. } => "VideoFrame",
            FramePayload::ImuDataFrame { .. } => "ImuDataFrame",
            FramePayload::DetectionFrame { .. } => "DetectionFrame",
            FramePayload::InputFrame { .. } => "InputFrame",
        }
    }
}

/// A uniquely identified, timestamped bundle of a source object, related
/// objects, and a payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFrame {
    pub uid: String,
    /// Microseconds; set once when the frame is created.
    pub created_timestamp: i64,
    source_uid: Option<String>,
    objects: Vec<DataObject>,
    pub payload: FramePayload,
}

impl DataFrame {
    /// Empty frame with an explicit uid.
    pub fn with_uid(uid: impl Into<String>, created_timestamp: i64) -> Self {
        Self {
            uid: uid.into(),
            created_timestamp,
            source_uid: None,
            objects: Vec::new(),
            payload: FramePayload::DataFrame,
        }
    }

    /// Frame with a fresh random uid carrying `source`.
    pub fn new(source: DataObject, created_timestamp: i64) -> Self {
        let mut f = Self::with_uid(new_uid(), created_timestamp);
        f.set_source(source);
        f
    }

    pub fn with_payload(mut self, payload: FramePayload) -> Self {
        self.payload = payload;
        self
    }

    pub fn type_name(&self) -> &'static str {
        self.payload.type_name()
    }

    pub fn source_uid(&self) -> Option<&str> {
        self.source_uid.as_deref()
    }

    pub fn source(&self) -> Option<&DataObject> {
        let uid = self.source_uid.as_deref()?;
        self.object(uid)
    }

    pub fn source_mut(&mut self) -> Option<&mut DataObject> {
        let uid = self.source_uid.clone()?;
        self.object_mut(&uid)
    }

    /// Sets the source, adding it to (or replacing it in) the object list.
    pub fn set_source(&mut self, source: DataObject) {
        self.source_uid = Some(source.uid.clone());
        self.add_object(source);
    }

    pub fn objects(&self) -> &[DataObject] {
        &self.objects
    }

    pub fn objects_mut(&mut self) -> impl Iterator<Item = &mut DataObject> {
        self.objects.iter_mut()
    }

    pub fn object(&self, uid: &str) -> Option<&DataObject> {
        self.objects.iter().find(|o| o.uid == uid)
    }

    pub fn object_mut(&mut self, uid: &str) -> Option<&mut DataObject> {
        self.objects.iter_mut().find(|o| o.uid == uid)
    }

    /// Adds an object, replacing any object with the same uid in place.
    pub fn add_object(&mut self, obj: DataObject) {
        match self.objects.iter_mut().find(|o| o.uid == obj.uid) {
            Some(slot) => *slot = obj,
            None => self.objects.push(obj),
        }
    }

    /// Removes an object. Removing the source also clears the source.
    pub fn remove_object(&mut self, uid: &str) -> Option<DataObject> {
        let idx = self.objects.iter().position(|o| o.uid == uid)?;
        if self.source_uid.as_deref() == Some(uid) {
            self.source_uid = None;
        }
        Some(self.objects.remove(idx))
    }

    /// Deep copy under a new identity and timestamp.
    pub fn repack(&self, uid: impl Into<String>, created_timestamp: i64) -> DataFrame {
        let mut f = self.clone();
        f.uid = uid.into();
        f.created_timestamp = created_timestamp;
        f
    }
}

impl Serialize for DataFrame {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = Map::new();
        map.insert("uid".into(), Value::String(self.uid.clone()));
        map.insert(
            "createdTimestamp".into(),
            Value::from(self.created_timestamp),
        );
        if let Some(src) = &self.source_uid {
            map.insert("sourceUID".into(), Value::String(src.clone()));
        }
        map.insert(
            "objects".into(),
            serde_json::to_value(&self.objects).map_err(S::Error::custom)?,
        );
        let payload = serde_json::to_value(&self.payload).map_err(S::Error::custom)?;
        if let Value::Object(p) = payload {
            map.extend(p);
        }
        Value::Object(map).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DataFrame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut map = Map::deserialize(deserializer)?;
        let uid = match map.remove("uid") {
            Some(Value::String(s)) => s,
            _ => return Err(D::Error::missing_field("uid")),
        };
        let created_timestamp = map
            .remove("createdTimestamp")
            .and_then(|v| v.as_i64())
            .ok_or_else(|| D::Error::missing_field("createdTimestamp"))?;
        let source_uid = match map.remove("sourceUID") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(D::Error::custom("sourceUID must be a string")),
        };
        let objects: Vec<DataObject> = match map.remove("objects") {
            Some(v) => serde_json::from_value(v).map_err(D::Error::custom)?,
            None => Vec::new(),
        };
        if !map.contains_key("__type") {
            map.insert("__type".into(), Value::String("DataFrame".into()));
        }
        let payload: FramePayload =
            serde_json::from_value(Value::Object(map)).map_err(D::Error::custom)?;
        if let Some(src) = &source_uid {
            if objects.iter().filter(|o| &o.uid == src).count() != 1 {
                return Err(D::Error::custom(format!(
                    "frame `{uid}`: source `{src}` must appear exactly once in objects"
                )));
            }
        }
        Ok(DataFrame {
            uid,
            created_timestamp,
            source_uid,
            objects,
            payload,
        })
    }
}
