//! Quaternion algebra for the wrist sensor: normalization, Hamilton product,
//! swing/twist decomposition about the sensor y-axis and the swing-angle
//! series the rest of the pipeline consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Unit-norm threshold below which a quaternion is considered degenerate.
const NORM_EPS: f64 = 1e-12;

/// Scalar-first quaternion (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation of `angle` radians about a unit `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let half = 0.5 * angle;
        let s = half.sin();
        Quaternion {
            w: half.cos(),
            x: axis[0] * s,
            y: axis[1] * s,
            z: axis[2] * s,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Scales to unit norm. A zero or non-finite input has no direction to
    /// preserve, so it is rejected rather than patched up.
    pub fn normalize(&self) -> Result<Quaternion> {
        let n = self.norm();
        if !n.is_finite() || n < NORM_EPS {
            return Err(Error::DegenerateQuaternion);
        }
        Ok(Quaternion {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        })
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self ⊗ rhs` (applies `rhs` first when quaternions act
    /// on column vectors).
    pub fn hamilton(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            x: self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            y: self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            z: self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        }
    }

    /// Rotates a vector through the sandwich product q ⊗ (0, u) ⊗ q*.
    pub fn rotate(&self, u: [f64; 3]) -> [f64; 3] {
        let p = Quaternion { w: 0.0, x: u[0], y: u[1], z: u[2] };
        let r = self.hamilton(&p).hamilton(&self.conjugate());
        [r.x, r.y, r.z]
    }

}

/// Splits a unit rotation into `q = q_swing ⊗ q_twist`, the twist being the
/// component about `twist_axis` (unit). When the rotation is a pure 180° swing
/// (vector part orthogonal to the axis and w ≈ 0) the twist is singular and
/// the identity is returned for it.
pub fn swing_twist_decompose(q: &Quaternion, twist_axis: [f64; 3]) -> (Quaternion, Quaternion) {
    let proj = q.x * twist_axis[0] + q.y * twist_axis[1] + q.z * twist_axis[2];
    let raw = Quaternion {
        w: q.w,
        x: proj * twist_axis[0],
        y: proj * twist_axis[1],
        z: proj * twist_axis[2],
    };
    match raw.normalize() {
        Ok(twist) => {
            let swing = q.hamilton(&twist.conjugate());
            (swing, twist)
        }
        Err(_) => (*q, Quaternion::IDENTITY),
    }
}

/// Wrist orientation captured at setup with the arm at rest; the reference
/// against which swing angles are measured.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BaselineFrame {
    pub q: Quaternion,
}

impl BaselineFrame {
    pub fn new(q: Quaternion) -> Result<Self> {
        Ok(BaselineFrame { q: q.normalize()? })
    }
}

const Y_AXIS: [f64; 3] = [0.0, 1.0, 0.0];

/// Swing angle of one sample relative to the baseline, in [0, 2π).
///
/// The relative rotation `q_baseline ⊗ q_sample*` is computed first and its
/// twist about the sensor y-axis stripped afterwards; that order makes the
/// result invariant under a common change of inertial frame on both inputs.
/// The y unit vector is carried through the relative swing and the angle it
/// makes with its rest position is measured, signed by the sensor x-axis
/// (the flexion/extension axis) and wrapped from (−π, π] into [0, 2π) by
/// adding 2π to negative values.
pub fn swing_angle(sample: &Quaternion, baseline: &BaselineFrame) -> Result<f64> {
    let q = sample.normalize()?;
    let rel = baseline.q.hamilton(&q.conjugate());
    let (rel_swing, _twist) = swing_twist_decompose(&rel, Y_AXIS);
    let v = rel_swing.rotate(Y_AXIS);
    let cross = [
        v[1] * Y_AXIS[2] - v[2] * Y_AXIS[1],
        v[2] * Y_AXIS[0] - v[0] * Y_AXIS[2],
        v[0] * Y_AXIS[1] - v[1] * Y_AXIS[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = v[0] * Y_AXIS[0] + v[1] * Y_AXIS[1] + v[2] * Y_AXIS[2];
    let signed = if cross[0] >= 0.0 { cross_norm } else { -cross_norm };
    let mut omega = signed.atan2(dot);
    if omega < 0.0 {
        omega += TWO_PI;
    }
    // atan2(±0, 1) can leave an exact 2π after the wrap; fold it back.
    if omega >= TWO_PI {
        omega = 0.0;
    }
    Ok(omega)
}

/// Timestamped swing-angle trace; angles always within [0, 2π).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwingAngleSeries {
    pub t_ms: Vec<f64>,
    pub angle: Vec<f64>,
}

impl SwingAngleSeries {
    pub fn new(t_ms: Vec<f64>, angle: Vec<f64>) -> Result<Self> {
        if t_ms.len() != angle.len() {
            return Err(Error::DimensionMismatch { left: t_ms.len(), right: angle.len() });
        }
        for (i, &a) in angle.iter().enumerate() {
            if !a.is_finite() || !(0.0..TWO_PI).contains(&a) {
                return Err(Error::CorruptSample {
                    index: i,
                    reason: format!("swing angle {a} outside [0, 2pi)"),
                });
            }
        }
        for i in 1..t_ms.len() {
            if t_ms[i] <= t_ms[i - 1] {
                return Err(Error::CorruptSample {
                    index: i,
                    reason: "timestamps not strictly increasing".into(),
                });
            }
        }
        Ok(SwingAngleSeries { t_ms, angle })
    }

    pub fn len(&self) -> usize {
        self.angle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angle.is_empty()
    }
}

/// Computes the swing-angle series for a run of wrist samples.
pub fn swing_angle_series(
    t_ms: &[f64],
    samples: &[Quaternion],
    baseline: &BaselineFrame,
) -> Result<SwingAngleSeries> {
    if t_ms.len() != samples.len() {
        return Err(Error::DimensionMismatch { left: t_ms.len(), right: samples.len() });
    }
    let mut angles = Vec::with_capacity(samples.len());
    for q in samples {
        angles.push(swing_angle(q, baseline)?);
    }
    SwingAngleSeries::new(t_ms.to_vec(), angles)
}

/// Angles re-centered for statistics: values within `margin` below 2π are
/// wrapped noise around the rest pose and become small negatives again. Real
/// trajectories stay under 250°, far from the fold point.
pub fn centered_angles(angle: &[f64], margin: f64) -> Vec<f64> {
    angle
        .iter()
        .map(|&a| if a > TWO_PI - margin { a - TWO_PI } else { a })
        .collect()
}
