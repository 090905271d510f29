use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{new_uid, ModelError};
use crate::geometry::{AbsolutePosition, ReferenceSpace, RelativePosition, SpaceRegistry};

pub const DATA_OBJECT_TYPE: &str = "DataObject";
pub const REFERENCE_SPACE_TYPE: &str = "ReferenceSpace";

fn default_type() -> String {
    DATA_OBJECT_TYPE.to_string()
}

/// Anything relevant to positioning: a tracked actor, a sensor, a landmark.
///
/// Subtypes are expressed through `type_name` (serialized as `__type`) and
/// free-form `properties`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataObject {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub display_name: Option<String>,
    #[serde(default)]
    pub created_timestamp: i64,
    pub uid: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub position: Option<AbsolutePosition>,
    #[serde(default)]
    pub relative_positions: Vec<RelativePosition>,
    #[serde(rename = "parentUID", skip_serializing_if = "Option::is_none", default)]
    pub parent_uid: Option<String>,
    #[serde(rename = "__type", default = "default_type")]
    pub type_name: String,
    #[serde(flatten)]
    pub properties: BTreeMap<String, Value>,
}

impl DataObject {
    pub fn new(uid: impl Into<String>) -> Self {
        Self {
            display_name: None,
            created_timestamp: 0,
            uid: uid.into(),
            position: None,
            relative_positions: Vec::new(),
            parent_uid: None,
            type_name: default_type(),
            properties: BTreeMap::new(),
        }
    }

    /// Object with a random uid.
    pub fn random() -> Self {
        Self::new(new_uid())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.display_name = Some(name.into());
        self
    }

    pub fn with_type(mut self, type_name: impl Into<String>) -> Self {
        self.type_name = type_name.into();
        self
    }

    pub fn with_created(mut self, timestamp: i64) -> Self {
        self.created_timestamp = timestamp;
        self
    }

    pub fn with_position(mut self, p: AbsolutePosition) -> Self {
        self.position = Some(p);
        self
    }

    pub fn with_property(mut self, key: impl Into<String>, value: Value) -> Self {
        self.properties.insert(key.into(), value);
        self
    }

    /// Stores `p`, transformed to the global space when `space` is given.
    /// Without a space the position is taken to be global already.
    pub fn set_position(
        &mut self,
        p: AbsolutePosition,
        space: Option<&ReferenceSpace>,
        spaces: &SpaceRegistry,
    ) -> Result<(), ModelError> {
        let stored = match space {
            Some(space) => spaces.to_global_from(&p, space)?,
            None => {
                let mut p = p;
                p.reference_space_uid = Some(spaces.global().uid.clone());
                p
            }
        };
        self.position = Some(stored);
        Ok(())
    }

    /// The stored position, expressed in `space` when given.
    pub fn get_position(
        &self,
        space: Option<&ReferenceSpace>,
        spaces: &SpaceRegistry,
    ) -> Result<Option<AbsolutePosition>, ModelError> {
        match (&self.position, space) {
            (None, _) => Ok(None),
            (Some(p), None) => Ok(Some(p.clone())),
            (Some(p), Some(space)) => Ok(Some(spaces.from_global_to(p, space)?)),
        }
    }

    /// Adds a relative position, replacing any earlier one to the same
    /// object measured in the same kind of value.
    pub fn add_relative_position(&mut self, rel: RelativePosition) {
        let tag = rel.value.tag();
        self.relative_positions.retain(|r| {
            !(r.reference_object_uid == rel.reference_object_uid && r.value.tag() == tag)
        });
        self.relative_positions.push(rel);
    }

    pub fn relative_positions_to<'a>(
        &'a self,
        reference_uid: &'a str,
    ) -> impl Iterator<Item = &'a RelativePosition> + 'a {
        self.relative_positions
            .iter()
            .filter(move |r| r.reference_object_uid == reference_uid)
    }

    /// Fills fields missing from `self` with those of `stored`. Fields present
    /// on `self` are kept.
    pub fn merge_missing_from(&mut self, stored: &DataObject) {
        if self.position.is_none() {
            self.position = stored.position.clone();
        }
        if self.display_name.is_none() {
            self.display_name = stored.display_name.clone();
        }
        if self.parent_uid.is_none() {
            self.parent_uid = stored.parent_uid.clone();
        }
        for rel in &stored.relative_positions {
            let known = self.relative_positions.iter().any(|r| {
                r.reference_object_uid == rel.reference_object_uid
                    && r.value.tag() == rel.value.tag()
            });
            if !known {
                self.relative_positions.push(rel.clone());
            }
        }
        for (k, v) in &stored.properties {
            self.properties
                .entry(k.clone())
                .or_insert_with(|| v.clone());
        }
    }
}

impl ReferenceSpace {
    /// The space as a storable data object of type `ReferenceSpace`.
    pub fn to_data_object(&self) -> Result<DataObject, ModelError> {
        let value = serde_json::to_value(self).map_err(ModelError::from_json)?;
        let Value::Object(mut map) = value else {
            unreachable!("reference space serializes to an object")
        };
        let mut obj = DataObject::new(self.uid.clone()).with_type(REFERENCE_SPACE_TYPE);
        obj.display_name = self.display_name.clone();
        obj.parent_uid = self.parent_uid.clone();
        for key in ["uid", "displayName", "parentUID"] {
            map.remove(key);
        }
        obj.properties = map.into_iter().collect();
        Ok(obj)
    }

    pub fn from_data_object(obj: &DataObject) -> Result<ReferenceSpace, ModelError> {
        if obj.type_name != REFERENCE_SPACE_TYPE {
            return Err(ModelError::WrongType {
                expected: REFERENCE_SPACE_TYPE.into(),
                found: obj.type_name.clone(),
            });
        }
        let mut map: serde_json::Map<String, Value> = obj.properties.clone().into_iter().collect();
        map.insert("uid".into(), Value::String(obj.uid.clone()));
        if let Some(name) = &obj.display_name {
            map.insert("displayName".into(), Value::String(name.clone()));
        }
        if let Some(parent) = &obj.parent_uid {
            map.insert("parentUID".into(), Value::String(parent.clone()));
        }
        serde_json::from_value(Value::Object(map)).map_err(ModelError::from_json)
    }
}
