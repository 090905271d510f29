use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Planar projective transform, row-major 3×3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Solves for the homography taking each `src[i]` to `dst[i]`, with the
    /// bottom-right entry fixed to 1.
    pub fn from_points(src: [(f64, f64); 4], dst: [(f64, f64); 4]) -> Result<Self, GeometryError> {
        for pts in [&src, &dst] {
            for skip in 0..4 {
                let tri: Vec<_> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                if collinear(tri[0], tri[1], tri[2]) {
                    return Err(GeometryError::Singular(
                        "three correspondence points are collinear".into(),
                    ));
                }
            }
        }
        let mut a = na::SMatrix::<f64, 8, 8>::zeros();
        let mut b = na::SVector::<f64, 8>::zeros();
        for i in 0..4 {
            let (x, y) = src[i];
            let (u, v) = dst[i];
            let r = 2 * i;
            a.set_row(
                r,
                &na::RowSVector::<f64, 8>::from_row_slice(&[
                    x,
                    y,
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                    -u * x,
                    -u * y,
                ]),
            );
            a.set_row(
                r + 1,
                &na::RowSVector::<f64, 8>::from_row_slice(&[
                    0.0,
                    0.0,
                    0.0,
                    x,
                    y,
                    1.0,
                    -v * x,
                    -v * y,
                ]),
            );
            b[r] = u;
            b[r + 1] = v;
        }
        let h = a
            .lu()
            .solve(&b)
            .ok_or_else(|| GeometryError::Singular("homography system is singular".into()))?;
        Ok(Homography {
            m: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]],
        })
    }

    pub fn apply(&self, x: f64, y: f64) -> Result<(f64, f64), GeometryError> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w.abs() < 1e-15 {
            return Err(GeometryError::Singular("point maps to infinity".into()));
        }
        Ok((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| GeometryError::Singular("homography is not invertible".into()))?;
        let s = inv[(2, 2)];
        let s = if s.abs() > 1e-15 { s } else { 1.0 };
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = inv[(r, c)] / s;
            }
        }
        Ok(Homography { m })
    }

    pub fn matrix(&self) -> na::Matrix3<f64> {
        let m = &self.m;
        na::Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        )
    }
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let scale = ((b.0 - a.0).hypot(b.1 - a.1) * (c.0 - a.0).hypot(c.1 - a.1)).max(1e-300);
    cross.abs() / scale < 1e-12
}
