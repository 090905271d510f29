//! JSON encoding with `__type` discriminators.
//!
//! Every polymorphic value carries a `__type` key. Before a document is
//! decoded its discriminators and unit names are checked against the type
//! registry and the unit registry, so errors name the offending key instead
//! of surfacing as a generic shape mismatch.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::ModelError;
use crate::units;

/// Known `__type` names and their parent type.
#[derive(Debug, Clone, Default)]
pub struct TypeRegistry {
    parents: HashMap<String, Option<String>>,
}

impl TypeRegistry {
    pub fn with_builtins() -> Self {
        let mut r = Self::default();
        let builtins: &[(&str, Option<&str>)] = &[
            ("DataObject", None),
            ("ReferenceSpace", Some("DataObject")),
            ("AbsolutePosition", None),
            ("Absolute2DPosition", Some("AbsolutePosition")),
            ("Absolute3DPosition", Some("AbsolutePosition")),
            ("GeographicalPosition", Some("Absolute3DPosition")),
            ("RelativePosition", None),
            ("RelativeDistance", Some("RelativePosition")),
            ("RelativeAngle", Some("RelativePosition")),
            ("RelativeVelocity", Some("RelativePosition")),
            ("DataFrame", None),
            ("VideoFrame", Some("DataFrame")),
            ("ImuDataFrame", Some("DataFrame")),
            ("DetectionFrame", Some("DataFrame")),
            ("InputFrame", Some("DataFrame")),
        ];
        for (name, parent) in builtins {
            r.parents
                .insert(name.to_string(), parent.map(str::to_string));
        }
        r
    }

    /// Registers `name` as a subtype of `parent`. Re-registering with the same
    /// parent is a no-op.
    pub fn register(&mut self, name: &str, parent: &str) -> Result<(), ModelError> {
        if !self.parents.contains_key(parent) {
            return Err(ModelError::UnknownType {
                type_name: parent.to_string(),
                path: "<parent>".into(),
            });
        }
        match self.parents.get(name) {
            Some(Some(p)) if p == parent => Ok(()),
            Some(_) => Err(ModelError::DuplicateType(name.to_string())),
            None => {
                self.parents
                    .insert(name.to_string(), Some(parent.to_string()));
                Ok(())
            }
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.parents.contains_key(name)
    }

    /// `name` followed by its ancestors, most specific first.
    pub fn ancestry(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = Some(name.to_string());
        while let Some(n) = cur {
            if out.contains(&n) {
                break;
            }
            cur = self.parents.get(&n).cloned().flatten();
            out.push(n);
        }
        out
    }

    pub fn is_subtype(&self, name: &str, ancestor: &str) -> bool {
        self.ancestry(name).iter().any(|a| a == ancestor)
    }

    /// Checks every `__type` and unit name in `value`.
    pub fn validate(&self, value: &Value) -> Result<(), ModelError> {
        self.validate_at(value, "$")
    }

    fn validate_at(&self, value: &Value, path: &str) -> Result<(), ModelError> {
        match value {
            Value::Object(map) => {
                if let Some(t) = map.get("__type") {
                    let name = t.as_str().unwrap_or_default();
                    if !self.contains(name) {
                        return Err(ModelError::UnknownType {
                            type_name: name.to_string(),
                            path: format!("{path}.__type"),
                        });
                    }
                }
                for (k, v) in map {
                    let child = format!("{path}.{k}");
                    if k.ends_with("unit") || k.ends_with("Unit") {
                        if let Some(name) = v.get("name").and_then(Value::as_str) {
                            if units::lookup(name).is_none() {
                                return Err(ModelError::UnknownUnit {
                                    unit: name.to_string(),
                                    path: format!("{child}.name"),
                                });
                            }
                        }
                    }
                    self.validate_at(v, &child)?;
                }
                Ok(())
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    self.validate_at(v, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn registry_lock() -> &'static RwLock<TypeRegistry> {
    static TYPES: OnceLock<RwLock<TypeRegistry>> = OnceLock::new();
    TYPES.get_or_init(|| RwLock::new(TypeRegistry::with_builtins()))
}

/// Snapshot of the process-wide type registry.
pub fn type_registry() -> TypeRegistry {
    registry_lock()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .clone()
}

/// Registers an application type in the process-wide type registry.
pub fn register_type(name: &str, parent: &str) -> Result<(), ModelError> {
    registry_lock()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .register(name, parent)
}

pub fn validate(value: &Value) -> Result<(), ModelError> {
    registry_lock()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .validate(value)
}

pub fn to_value<T: Serialize>(value: &T) -> Result<Value, ModelError> {
    serde_json::to_value(value).map_err(ModelError::from_json)
}

pub fn from_value<T: DeserializeOwned>(value: Value) -> Result<T, ModelError> {
    validate(&value)?;
    serde_json::from_value(value).map_err(ModelError::from_json)
}

pub fn serialize<T: Serialize>(value: &T) -> Result<String, ModelError> {
    serde_json::to_string(value).map_err(ModelError::from_json)
}

pub fn deserialize<T: DeserializeOwned>(text: &str) -> Result<T, ModelError> {
    let value: Value = serde_json::from_str(text).map_err(ModelError::from_json)?;
    from_value(value)
}
