//! Positioning computations and the processing nodes that wrap them.
//!
//! Linear velocities are in metres per second and angular velocities in
//! radians per second, whatever the unit of the position carrying them.

mod fingerprint;
mod fusion;
mod lateration;
mod motion;
mod nodes;
mod smoothing;

pub use fingerprint::{Fingerprint, FingerprintStore, MISSING_FEATURE};
pub use fusion::{fuse_weighted, MIN_ACCURACY};
pub use lateration::{triangulate, trilaterate, BearingObservation, Landmark, RangeObservation};
pub use motion::{displacement_apply, velocity_process};
pub use nodes::{DisplacementNode, SmaAccuracyNode, VelocityProcessingNode};
pub use smoothing::{sma_filter, SmaWindow};

use crate::geometry::GeometryError;
use crate::services::ServiceError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgorithmError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("degenerate geometry: {0}")]
    SingularGeometry(String),
    #[error("negative time step of {0} s")]
    NegativeInterval(f64),
    #[error("fingerprint store is empty")]
    EmptyStore,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("service failure: {0}")]
    Service(String),
}

impl From<ServiceError> for AlgorithmError {
    fn from(e: ServiceError) -> Self {
        AlgorithmError::Service(e.to_string())
    }
}

impl From<crate::units::UnitError> for AlgorithmError {
    fn from(e: crate::units::UnitError) -> Self {
        AlgorithmError::Geometry(GeometryError::Unit(e))
    }
}
