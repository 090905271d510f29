use nalgebra as na;

use super::AlgorithmError;
use crate::geometry::{AbsolutePosition, PositionKind, Vector3};
use crate::units::{self, Unit};

/// A fixed reference object with a known position.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub uid: String,
    pub position: AbsolutePosition,
}

impl Landmark {
    pub fn new(uid: impl Into<String>, position: AbsolutePosition) -> Self {
        Self {
            uid: uid.into(),
            position,
        }
    }
}

/// Distance from an unknown point to a landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeObservation {
    pub landmark: Landmark,
    pub distance: f64,
    pub unit: Unit,
}

impl RangeObservation {
    pub fn new(landmark: Landmark, distance: f64, unit: Unit) -> Self {
        Self {
            landmark,
            distance,
            unit,
        }
    }
}

/// Direction from a landmark towards an unknown point, measured
/// counter-clockwise from the +x axis in the xy plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BearingObservation {
    pub landmark: Landmark,
    pub angle: f64,
    pub unit: Unit,
}

impl BearingObservation {
    pub fn new(landmark: Landmark, angle: f64, unit: Unit) -> Self {
        Self {
            landmark,
            angle,
            unit,
        }
    }
}

const MAX_ITERATIONS: usize = 100;

/// Position from distances to landmarks.
///
/// Planar when every landmark has a 2D position (at least three needed),
/// spatial otherwise (at least four). The circle-difference equations,
/// obtained by subtracting the first landmark's, are solved in the least
/// squares sense; Gauss-Newton iterations on `Σ(‖p − aᵢ‖ − dᵢ)²` then refine
/// the estimate so that noisy ranges give the true range-residual minimiser.
/// The accuracy is the RMS of the final range residuals.
pub fn trilaterate(observations: &[RangeObservation]) -> Result<AbsolutePosition, AlgorithmError> {
    let planar = observations
        .iter()
        .all(|o| o.landmark.position.kind == PositionKind::Absolute2D);
    let dim = if planar { 2 } else { 3 };
    let needed = dim + 1;
    if observations.len() < needed {
        return Err(AlgorithmError::InsufficientObservations {
            needed,
            got: observations.len(),
        });
    }
    let unit = observations[0].landmark.position.unit.clone();
    let mut anchors = Vec::with_capacity(observations.len());
    let mut ranges = Vec::with_capacity(observations.len());
    for o in observations {
        anchors.push(components(o.landmark.position.vector_in(&unit)?, dim));
        ranges.push(units::convert(o.distance, &o.unit, &unit)?);
    }

    let n = anchors.len();
    let a0 = &anchors[0];
    let mut a = na::DMatrix::<f64>::zeros(n - 1, dim);
    let mut b = na::DVector::<f64>::zeros(n - 1);
    for i in 1..n {
        let ai = &anchors[i];
        for k in 0..dim {
            a[(i - 1, k)] = 2.0 * (ai[k] - a0[k]);
        }
        b[i - 1] = ranges[0].powi(2) - ranges[i].powi(2) + ai.norm_squared() - a0.norm_squared();
    }
    let mut p = solve_least_squares(&a, &b)?;

    let cost = |p: &na::DVector<f64>| -> f64 {
        anchors
            .iter()
            .zip(&ranges)
            .map(|(ai, di)| ((p - ai).norm() - di).powi(2))
            .sum()
    };
    let mut current = cost(&p);
    for _ in 0..MAX_ITERATIONS {
        let mut j = na::DMatrix::<f64>::zeros(n, dim);
        let mut r = na::DVector::<f64>::zeros(n);
        for (i, (ai, di)) in anchors.iter().zip(&ranges).enumerate() {
            let diff = &p - ai;
            let dist = diff.norm();
            r[i] = dist - di;
            if dist > 0.0 {
                for k in 0..dim {
                    j[(i, k)] = diff[k] / dist;
                }
            }
        }
        let Ok(step) = solve_least_squares(&j, &r) else {
            break;
        };
        // Halve the step until the cost does not increase.
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-10 {
            let candidate = &p - &step * t;
            let c = cost(&candidate);
            if c <= current {
                let moved = (&candidate - &p).norm();
                p = candidate;
                current = c;
                improved = moved > 0.0;
                break;
            }
            t *= 0.5;
        }
        if !improved || (&step * t).norm() <= 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }

    let rms = (current / n as f64).sqrt();
    Ok(build_position(&p, planar, &unit, rms))
}

/// Position from bearings taken at landmarks.
///
/// Each bearing defines a line through its landmark; the result minimises
/// the sum of squared point-to-line distances. The accuracy is the RMS of
/// those distances.
pub fn triangulate(
    observations: &[BearingObservation],
) -> Result<AbsolutePosition, AlgorithmError> {
    if observations.len() < 2 {
        return Err(AlgorithmError::InsufficientObservations {
            needed: 2,
            got: observations.len(),
        });
    }
    let unit = observations[0].landmark.position.unit.clone();
    let radian = units::radian();
    let mut lines = Vec::with_capacity(observations.len());
    for o in observations {
        let a = o.landmark.position.vector_in(&unit)?;
        let theta = units::convert(o.angle, &o.unit, &radian)?;
        lines.push((
            na::Vector2::new(a.x, a.y),
            na::Vector2::new(-theta.sin(), theta.cos()),
        ));
    }
    let mut m = na::Matrix2::<f64>::zeros();
    let mut rhs = na::Vector2::<f64>::zeros();
    for (a, nrm) in &lines {
        let nn = nrm * nrm.transpose();
        m += nn;
        rhs += nn * a;
    }
    // Normals are unit vectors, so trace(m) equals the number of lines and
    // det(m) / n² measures how far from parallel they are.
    let k = lines.len() as f64;
    if m.determinant() / (k * k) < 1e-12 {
        return Err(AlgorithmError::SingularGeometry(
            "bearing lines are parallel".into(),
        ));
    }
    let p = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| AlgorithmError::SingularGeometry("bearing lines are parallel".into()))?;
    let sq: f64 = lines.iter().map(|(a, nrm)| nrm.dot(&(p - a)).powi(2)).sum();
    let rms = (sq / k).sqrt();
    let v = na::DVector::from_vec(vec![p.x, p.y]);
    Ok(build_position(&v, true, &unit, rms))
}

fn components(v: Vector3, dim: usize) -> na::DVector<f64> {
    na::DVector::from_iterator(dim, v.to_array().into_iter().take(dim))
}

/// Least squares via SVD; fails when the smallest singular value is
/// negligible against the largest.
fn solve_least_squares(
    a: &na::DMatrix<f64>,
    b: &na::DVector<f64>,
) -> Result<na::DVector<f64>, AlgorithmError> {
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if max == 0.0 || min / max < 1e-10 {
        return Err(AlgorithmError::SingularGeometry(
            "landmarks are collinear or coplanar".into(),
        ));
    }
    svd.solve(b, 0.0)
        .map_err(|e| AlgorithmError::SingularGeometry(e.to_string()))
}

fn build_position(
    p: &na::DVector<f64>,
    planar: bool,
    unit: &Unit,
    accuracy: f64,
) -> AbsolutePosition {
    let pos = if planar {
        AbsolutePosition::new_2d(p[0], p[1], unit.clone())
    } else {
        AbsolutePosition::new_3d(p[0], p[1], p[2], unit.clone())
    };
    pos.with_accuracy(accuracy, unit.clone())
}
