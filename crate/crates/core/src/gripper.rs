//! Parallel-jaw gripper geometry, validity tests and kinematic finger closing.
//!
//! Gripper frame: the origin is the grasp centre, midway between the two
//! fingertips' inner faces. The fingers extend from the origin back along
//! `-approach_axis` for `finger_length`, the palm sits behind them, and the
//! jaws translate along `closing_axis`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Obb, Vec3};
use crate::mesh::{RayHit, SurfacePoint, TriMesh};
use crate::scalar::Real;
use crate::se3::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct GripperSpec<T> {
    /// Distance between the inner finger faces when fully open (mm).
    pub max_opening: T,
    pub finger_length: T,
    /// Finger extents along (closing, lateral, approach), mm.
    pub finger_box: Vec3<T>,
    /// Palm extents along (closing, lateral, approach), mm.
    pub palm_box: Vec3<T>,
    pub closing_axis: Vec3<T>,
    pub approach_axis: Vec3<T>,
    /// Contact rays per finger face as (lateral, along the finger).
    pub contact_rays: [usize; 2],
}

impl<T: Real> Default for GripperSpec<T> {
    /// Approximation of a Franka Panda hand.
    fn default() -> Self {
        Self {
            max_opening: T::lit(80.0),
            finger_length: T::lit(53.8),
            finger_box: Vec3::from_f64([10.0, 20.0, 53.8]),
            palm_box: Vec3::from_f64([63.0, 28.0, 20.0]),
            closing_axis: Vec3::unit_x(),
            approach_axis: Vec3::unit_z(),
            contact_rays: [5, 9],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    CollidingBody,
    EmptyClosingRegion,
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

/// Oriented boxes of the open gripper at some pose.
#[derive(Debug, Clone, Copy)]
pub struct GripperBoxes<T> {
    pub fingers: [Obb<T>; 2],
    pub palm: Obb<T>,
    pub closing_region: Obb<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPair<T> {
    /// Contact of the finger on the `-closing_axis` side.
    pub left: SurfacePoint<T>,
    pub right: SurfacePoint<T>,
    pub jaw_width: T,
}

impl<T: Real> GripperSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.max_opening > T::zero()) {
            return bad(format!("max_opening must be positive, got {}", self.max_opening));
        }
        if !(self.finger_length > T::zero()) {
            return bad(format!("finger_length must be positive, got {}", self.finger_length));
        }
        let positive = |v: Vec3<T>| v.x > T::zero() && v.y > T::zero() && v.z > T::zero();
        if !positive(self.finger_box) || !positive(self.palm_box) {
            return bad("finger and palm boxes need positive extents".into());
        }
        let tol = T::lit(1e-9);
        for axis in [self.closing_axis, self.approach_axis] {
            if (axis.norm() - T::one()).abs() > tol {
                return bad("gripper axes must be unit vectors".into());
            }
        }
        if self.closing_axis.dot(self.approach_axis).abs() > tol {
            return bad("closing axis must be perpendicular to the approach axis".into());
        }
        if self.contact_rays.contains(&0) {
            return bad("contact ray grid needs at least one ray per direction".into());
        }
        Ok(())
    }

    pub fn lateral_axis(&self) -> Vec3<T> {
        self.approach_axis.cross(self.closing_axis)
    }

    /// Columns (closing, lateral, approach) in the gripper frame.
    fn basis(&self) -> Mat3<T> {
        Mat3::from_columns(self.closing_axis, self.lateral_axis(), self.approach_axis)
    }

    /// Closing region in gripper coordinates: `max_opening` wide, `finger_length`
    /// deep and as tall as the finger pads.
    pub fn closing_region_extents(&self) -> Vec3<T> {
        Vec3::new(self.max_opening, self.finger_box.y, self.finger_length)
    }

    /// Box centres along (closing, lateral, approach) and full extents.
    fn local_boxes(&self) -> [(Vec3<T>, Vec3<T>); 4] {
        let half = T::half();
        let finger_x = self.max_opening * half + self.finger_box.x * half;
        let finger_z = -self.finger_box.z * half;
        [
            (Vec3::new(-finger_x, T::zero(), finger_z), self.finger_box),
            (Vec3::new(finger_x, T::zero(), finger_z), self.finger_box),
            (Vec3::new(T::zero(), T::zero(), -self.finger_length - self.palm_box.z * half), self.palm_box),
            (Vec3::new(T::zero(), T::zero(), -self.finger_length * half), self.closing_region_extents()),
        ]
    }

    /// Radius of a sphere around the grasp centre that encloses every box.
    pub fn reach(&self) -> T {
        self.local_boxes()
            .iter()
            .map(|(c, e)| c.norm() + (*e * T::half()).norm())
            .fold(T::zero(), T::max)
    }

    pub fn boxes_at(&self, pose: &Pose<T>) -> GripperBoxes<T> {
        let basis = self.basis();
        let world = pose.q.to_matrix().mul_mat(&basis);
        let place = |(c, e): (Vec3<T>, Vec3<T>)| Obb {
            center: pose.p + world.mul_vec(c),
            axes: world,
            half_extents: e * T::half(),
        };
        let [left, right, palm, region] = self.local_boxes();
        GripperBoxes { fingers: [place(left), place(right)], palm: place(palm), closing_region: place(region) }
    }

    /// World-frame closing and approach directions at `pose`.
    pub fn posed_axes(&self, pose: &Pose<T>) -> (Vec3<T>, Vec3<T>) {
        (pose.rotate(self.closing_axis), pose.rotate(self.approach_axis))
    }
}

/// Collision test for the open fingers and palm, then the non-empty closing region test.
pub fn check_validity<T: Real>(mesh: &TriMesh<T>, pose: &Pose<T>, gripper: &GripperSpec<T>) -> Validity {
    let (center, radius) = mesh.bounding_sphere();
    if pose.p.distance(center) > radius + gripper.reach() {
        return Validity::EmptyClosingRegion;
    }
    let boxes = gripper.boxes_at(pose);
    if boxes.fingers.iter().chain([&boxes.palm]).any(|b| mesh.volume_intersects(b)) {
        return Validity::CollidingBody;
    }
    if !mesh.volume_intersects(&boxes.closing_region) {
        return Validity::EmptyClosingRegion;
    }
    Validity::Valid
}

/// Closes both fingers along the posed closing axis until each meets the mesh.
///
/// Each inner finger face casts a `contact_rays` grid toward the opposite finger;
/// its contact is the hit met first. `None` if either finger sweeps the full
/// opening without contact.
pub fn close_fingers<T: Real>(mesh: &TriMesh<T>, pose: &Pose<T>, gripper: &GripperSpec<T>) -> Option<ContactPair<T>> {
    let (closing, approach) = gripper.posed_axes(pose);
    let lateral = approach.cross(closing);
    let w = gripper.max_opening;
    let half_w = w * T::half();
    let [n_lat, n_len] = gripper.contact_rays;
    let spread = |n: usize, i: usize| -> T {
        if n == 1 {
            T::half()
        } else {
            T::lit(i as f64) / T::lit((n - 1) as f64)
        }
    };
    let height = gripper.finger_box.y;
    let first_contact = |side: T| -> Option<RayHit<T>> {
        let dir = closing * (-side);
        let mut best: Option<RayHit<T>> = None;
        for j in 0..n_len {
            let depth = -gripper.finger_length * spread(n_len, j);
            for i in 0..n_lat {
                let offset = height * (spread(n_lat, i) - T::half());
                let origin = pose.p + closing * (side * half_w) + lateral * offset + approach * depth;
                let limit = best.map_or(w, |b| b.t);
                if let Some(hit) = mesh.raycast_first_within(origin, dir, limit) {
                    if best.is_none_or(|b| hit.t < b.t) {
                        best = Some(hit);
                    }
                }
            }
        }
        best
    };
    let right = first_contact(T::one())?;
    let left = first_contact(-T::one())?;
    let jaw_width = w - left.t - right.t;
    if jaw_width <= T::zero() {
        return None;
    }
    let point = |h: RayHit<T>| SurfacePoint { position: h.position, normal: h.normal, face_index: h.face_index };
    Some(ContactPair { left: point(left), right: point(right), jaw_width })
}
