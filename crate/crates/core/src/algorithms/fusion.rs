use super::AlgorithmError;
use crate::geometry::{AbsolutePosition, Orientation, PositionKind, Vector3, Velocity};

/// Accuracies at or below zero are replaced by this before inversion.
pub const MIN_ACCURACY: f64 = 1e-6;

/// Inverse-accuracy weighted average of concurrent estimates.
///
/// Positions are expressed in the unit of the first sample and accuracies in
/// its accuracy unit. Position, linear and angular velocity are weighted
/// means with `w = 1 / accuracy`. Orientations are flipped onto the
/// hemisphere of the first sample, summed with the same weights and
/// normalised. The result's accuracy is the weighted mean of the accuracies
/// and its timestamp the newest sample timestamp.
pub fn fuse_weighted(samples: &[AbsolutePosition]) -> Result<AbsolutePosition, AlgorithmError> {
    let first = samples
        .first()
        .ok_or(AlgorithmError::InsufficientObservations { needed: 1, got: 0 })?;
    if samples.len() == 1 {
        return Ok(first.clone());
    }
    let unit = first.unit.clone();
    let acc_unit = first.accuracy_unit.clone();

    let mut sum_w = 0.0;
    let mut pos = Vector3::ZERO;
    let mut lin = Vector3::ZERO;
    let mut ang = Vector3::ZERO;
    let mut q = [0.0; 4];
    let mut acc = 0.0;
    let mut timestamp = first.timestamp;
    let mut kind = first.kind;
    let q0 = first.orientation;

    for s in samples {
        let mut a = s.accuracy_in(&acc_unit)?;
        if a <= 0.0 || !a.is_finite() {
            a = MIN_ACCURACY;
        }
        let w = 1.0 / a;
        sum_w += w;
        pos += s.vector_in(&unit)? * w;
        lin += s.velocity.linear * w;
        ang += s.velocity.angular * w;
        let qs = if s.orientation.dot(&q0) < 0.0 {
            -1.0
        } else {
            1.0
        };
        q[0] += w * qs * s.orientation.x;
        q[1] += w * qs * s.orientation.y;
        q[2] += w * qs * s.orientation.z;
        q[3] += w * qs * s.orientation.w;
        acc += w * a;
        timestamp = timestamp.max(s.timestamp);
        if s.kind == PositionKind::Absolute3D {
            kind = PositionKind::Absolute3D;
        }
    }

    let mut out = first.clone();
    out.kind = kind;
    out.vector = pos / sum_w;
    out.velocity = Velocity::new(lin / sum_w, ang / sum_w);
    out.orientation = Orientation::new(q[0], q[1], q[2], q[3]).normalized();
    out.accuracy = Some(acc / sum_w);
    out.timestamp = timestamp;
    Ok(out)
}
