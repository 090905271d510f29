//! Vectors, orientations, positions and reference-space transforms.

mod homography;
mod orientation;
mod position;
mod space;
mod vector;

pub use homography::Homography;
pub use orientation::{EulerOrder, Orientation};
pub use position::{AbsolutePosition, PositionKind, RelativePosition, RelativeValue, Velocity};
pub use space::{ReferenceSpace, SpaceRegistry};
pub use vector::Vector3;

use crate::units::UnitError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("reference space `{0}` is not registered")]
    DanglingSpace(String),
    #[error("singular transform: {0}")]
    Singular(String),
    #[error("invalid reference space: {0}")]
    InvalidSpace(String),
    #[error("invalid Euler order `{0}`")]
    InvalidEulerOrder(String),
    #[error("geographical positions cannot be transformed between planar spaces")]
    Geographical,
}
