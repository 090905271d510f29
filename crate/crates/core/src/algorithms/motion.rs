use super::AlgorithmError;
use crate::geometry::{AbsolutePosition, Orientation, Vector3};
use crate::services::NodeDataService;
use crate::units;

/// Dead reckoning over `dt_s` seconds.
///
/// The linear velocity is expressed in the object's own frame and is
/// rotated by the orientation before being integrated; the angular velocity
/// is integrated with the quaternion exponential and composed on the right.
/// The position timestamp advances by the same interval.
pub fn velocity_process(
    position: &AbsolutePosition,
    dt_s: f64,
) -> Result<AbsolutePosition, AlgorithmError> {
    if dt_s < 0.0 || !dt_s.is_finite() {
        return Err(AlgorithmError::NegativeInterval(dt_s));
    }
    let mut out = position.clone();
    if dt_s == 0.0 {
        return Ok(out);
    }
    let q = position.orientation;
    let global_velocity = q.rotate(position.velocity.linear);
    let meters = units::meter();
    let per_meter = units::convert(1.0, &meters, &position.unit)?;
    out.vector = position.vector + global_velocity * (dt_s * per_meter);
    out.orientation = q
        .mul(&Orientation::from_rotation_vector(
            position.velocity.angular * dt_s,
        ))
        .normalized();
    out.timestamp = position.timestamp + (dt_s * 1e6).round() as i64;
    Ok(out)
}

/// Displacement since the previous sample of the same object, as seen by
/// `node_uid`. The first sample only seeds the state and yields `None`.
/// The delta is expressed in the unit of `sample`.
pub fn displacement_apply(
    store: &NodeDataService,
    node_uid: &str,
    object_uid: &str,
    sample: &AbsolutePosition,
) -> Result<Option<Vector3>, AlgorithmError> {
    let previous: Option<AbsolutePosition> = store.get(node_uid, object_uid)?;
    store.put(node_uid, object_uid, sample)?;
    match previous {
        None => Ok(None),
        Some(prev) => Ok(Some(sample.vector - prev.vector_in(&sample.unit)?)),
    }
}
