//! Data objects, data frames, identifiers and their JSON encoding.

pub mod codec;
mod frame;
mod ids;
mod object;

pub use codec::{deserialize, register_type, serialize, type_registry, TypeRegistry};
pub use frame::{DataFrame, FramePayload};
pub use ids::{new_uid, IdGenerator};
pub use object::{DataObject, DATA_OBJECT_TYPE, REFERENCE_SPACE_TYPE};

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unknown type `{type_name}` at {path}")]
    UnknownType { type_name: String, path: String },
    #[error("unknown unit `{unit}` at {path}")]
    UnknownUnit { unit: String, path: String },
    #[error("type `{0}` is already registered with a different parent")]
    DuplicateType(String),
    #[error("expected a `{expected}`, found `{found}`")]
    WrongType { expected: String, found: String },
    #[error("json: {0}")]
    Json(String),
}

impl ModelError {
    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        ModelError::Json(e.to_string())
    }
}
