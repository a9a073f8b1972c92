//! Planar rigid transforms and pose-error metrics.
//!
//! [`Pose2`] is the currency of the whole pipeline: contact poses, ICP
//! estimates, and the final end-effector chain are all SE(2) elements.
//! Angles are stored in radians, normalized to `(-pi, pi]`; interfaces that
//! report angles (error metrics, JSON records) use degrees.

use serde::{Deserialize, Serialize};

use crate::cloud::Point2;

/// A rigid transform in the plane: rotation by `theta` followed by
/// translation by `t`, i.e. `p -> R(theta) p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    theta: f64,
    t: Point2,
}

impl Pose2 {
    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Pose2 {
            theta: normalize_angle(theta),
            t: Point2::new(tx, ty),
        }
    }

    pub fn identity() -> Self {
        Pose2 {
            theta: 0.0,
            t: Point2::new(0.0, 0.0),
        }
    }

    pub fn from_translation(tx: f64, ty: f64) -> Self {
        Pose2::new(0.0, tx, ty)
    }

    pub fn from_rotation(theta: f64) -> Self {
        Pose2::new(theta, 0.0, 0.0)
    }

    /// Rotation angle in radians, always in `(-pi, pi]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn translation(&self) -> Point2 {
        self.t
    }

    /// Transform applying `other` first, then `self` (homogeneous matrix
    /// product `self * other`).
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.theta + other.theta,
            c * other.t.x - s * other.t.y + self.t.x,
            s * other.t.x + c * other.t.y + self.t.y,
        )
    }

    /// Inverse transform: `inverse(p).compose(p) == identity`.
    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        // R(-theta) * -t
        Pose2::new(
            -self.theta,
            -(c * self.t.x + s * self.t.y),
            -(-s * self.t.x + c * self.t.y),
        )
    }

    /// Apply the transform to a point: `R(theta) p + t`.
    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y + self.t.x, s * p.x + c * p.y + self.t.y)
    }

    /// JSON record used wherever poses appear in reports.
    pub fn to_record(&self) -> PoseRecord {
        PoseRecord {
            theta_deg: self.theta_deg(),
            tx_mm: self.t.x,
            ty_mm: self.t.y,
        }
    }
}

/// Serialized pose: `{"theta_deg": .., "tx_mm": .., "ty_mm": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub theta_deg: f64,
    pub tx_mm: f64,
    pub ty_mm: f64,
}

impl From<PoseRecord> for Pose2 {
    fn from(r: PoseRecord) -> Self {
        Pose2::new(r.theta_deg.to_radians(), r.tx_mm, r.ty_mm)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = theta.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Rotational symmetry of a connector cross-section.
///
/// `Cyclic(1)` means no symmetry; `Cyclic(2)` folds angles modulo 180
/// degrees; `Circular` means rotation is meaningless and rotation error is
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryGroup {
    Circular,
    Cyclic(u32),
}

impl SymmetryGroup {
    pub fn validate(&self) -> crate::error::Result<()> {
        match self {
            SymmetryGroup::Cyclic(0) => Err(crate::error::Error::Config(
                "cyclic symmetry order must be >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// End-effector pose for insertion: `world_hole * hole_peg * peg_ee`.
///
/// `hole_peg` is the pose of the peg with respect to the hole; a
/// registration estimate (which maps peg coordinates to hole coordinates)
/// must be inverted before it is passed into this slot.
pub fn chain_pre_insertion(world_hole: &Pose2, hole_peg: &Pose2, peg_ee: &Pose2) -> Pose2 {
    world_hole.compose(hole_peg).compose(peg_ee)
}

/// Euclidean distance between the translation parts, in mm.
pub fn trans_error(est: &Pose2, gt: &Pose2) -> f64 {
    let d = est.translation() - gt.translation();
    d.norm()
}

/// Rotation error in degrees, folded by the symmetry group.
///
/// For `Cyclic(n)` the error is the minimum over the n equivalent rotations,
/// each wrapped to `[0, 180]` degrees; the result lies in `[0, 180/n]`.
/// Returns `None` for `Circular`, where rotation error is undefined.
pub fn rot_error(est: &Pose2, gt: &Pose2, sym: SymmetryGroup) -> Option<f64> {
    let n = match sym {
        SymmetryGroup::Circular => return None,
        SymmetryGroup::Cyclic(n) => n.max(1),
    };
    let diff = est.theta() - gt.theta();
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let err = (0..n)
        .map(|k| normalize_angle(diff - k as f64 * step).abs())
        .fold(f64::INFINITY, f64::min);
    Some(err.to_degrees())
}
