//! Grasp samplers: uniform, lines through the centre of mass, approach-based
//! and antipodal-based, behind one stream interface.
//!
//! Every sampler draws all of its parameters first and only then runs the
//! validity test, so the random stream does not depend on validity outcomes.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gripper::{check_validity, GripperSpec, Validity};
use crate::linalg::{Aabb, Mat3, Quat, Vec3};
use crate::mesh::{RayHit, SurfacePoint, TriMesh};
use crate::scalar::Real;
use crate::se3::{sample_cone, sample_uniform_pose, uniform_direction, uniform_quaternion, Pose};

/// Attempts allowed before a stream gives up, for a target of `n` valid grasps.
pub fn attempt_budget(n: usize) -> usize {
    1_000_000usize.max(n.saturating_mul(1000))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
    LineCom,
    Approach,
    Antipodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec<T> {
    pub kind: SamplerKind,
    /// Approach: normal-cone half-angle. Antipodal: ray-cone half-angle. Radians.
    #[serde(default)]
    pub alpha: T,
    /// Approach only: approach-vector cone half-angle, radians.
    #[serde(default)]
    pub beta: T,
    /// Antipodal only: lower standoff bound (mm, <= 0).
    #[serde(default)]
    pub s_min: T,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> SamplerSpec<T> {
    fn base(kind: SamplerKind, seed: u64) -> Self {
        Self { kind, alpha: T::zero(), beta: T::zero(), s_min: T::zero(), seed }
    }

    pub fn uniform(seed: u64) -> Self {
        Self::base(SamplerKind::Uniform, seed)
    }

    pub fn line_com(seed: u64) -> Self {
        Self::base(SamplerKind::LineCom, seed)
    }

    pub fn approach(alpha: T, beta: T, seed: u64) -> Self {
        Self { alpha, beta, ..Self::base(SamplerKind::Approach, seed) }
    }

    pub fn antipodal(alpha: T, s_min: T, seed: u64) -> Self {
        Self { alpha, s_min, ..Self::base(SamplerKind::Antipodal, seed) }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |a: T| a >= T::zero() && a <= T::PI() + T::lit(1e-12);
        if !in_range(self.alpha) || !in_range(self.beta) {
            return Err(Error::InvalidParameter(format!(
                "sampler angles must lie in [0, pi], got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.s_min > T::zero() {
            return Err(Error::InvalidParameter(format!("s_min must be <= 0, got {}", self.s_min)));
        }
        Ok(())
    }

    /// Short name used in reports, e.g. `approach(0,pi)` or `antipodal(pi/6,0)`.
    pub fn label(&self) -> String {
        match self.kind {
            SamplerKind::Uniform => "uniform".into(),
            SamplerKind::LineCom => "line_com".into(),
            SamplerKind::Approach => {
                format!("approach({},{})", angle_label(self.alpha.as_f64()), angle_label(self.beta.as_f64()))
            }
            SamplerKind::Antipodal => {
                format!("antipodal({},{})", angle_label(self.alpha.as_f64()), number_label(self.s_min.as_f64()))
            }
        }
    }
}

impl<T: Real> fmt::Display for SamplerSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Writes an angle as a small fraction of pi when it is one.
fn angle_label(a: f64) -> String {
    if a == 0.0 {
        return "0".into();
    }
    let ratio = a / std::f64::consts::PI;
    for den in 1..=12u32 {
        let num = (ratio * den as f64).round();
        if num >= 1.0 && (ratio * den as f64 - num).abs() < 1e-9 {
            let num = num as u32;
            let g = gcd(num, den);
            let (num, den) = (num / g, den / g);
            return match (num, den) {
                (1, 1) => "pi".into(),
                (n, 1) => format!("{n}pi"),
                (1, d) => format!("pi/{d}"),
                (n, d) => format!("{n}pi/{d}"),
            };
        }
    }
    number_label(a)
}

fn number_label(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Why an antipodal attempt produced no pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntipodalRejection {
    NoHit,
    TooWide,
}

/// Everything one sampler attempt drew, before validity testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalDetail<T> {
    Uniform,
    Line { origin: Vec3<T>, direction: Vec3<T>, step_index: i64 },
    Approach { surface: SurfacePoint<T>, direction: Vec3<T>, approach: Vec3<T>, standoff: T, roll: T },
    Antipodal {
        first: SurfacePoint<T>,
        ray: Vec3<T>,
        second: Option<RayHit<T>>,
        rejection: Option<AntipodalRejection>,
        standoff: T,
        roll: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal<T> {
    /// `None` when the attempt was rejected before a pose existed.
    pub pose: Option<Pose<T>>,
    pub detail: ProposalDetail<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateGrasp<T> {
    pub pose: Pose<T>,
    pub validity: Validity,
    pub sampler_attempt_index: usize,
}

/// Region uniform and line samplers draw from: the object AABB dilated by the
/// gripper reach (finger length plus palm depth) on every side.
pub fn sampling_bounds<T: Real>(mesh: &TriMesh<T>, gripper: &GripperSpec<T>) -> Aabb<T> {
    mesh.aabb().dilated(gripper.finger_length + gripper.palm_box.z)
}

/// Orientation taking the gripper's closing/approach axes to the given world directions.
pub fn orientation_from_axes<T: Real>(gripper: &GripperSpec<T>, closing: Vec3<T>, approach: Vec3<T>) -> Quat<T> {
    let world = Mat3::from_columns(closing, approach.cross(closing), approach);
    let local = Mat3::from_columns(gripper.closing_axis, gripper.lateral_axis(), gripper.approach_axis);
    Quat::from_matrix(&world.mul_mat(&local.transpose())).canonical()
}

/// Unit vector perpendicular to `axis` at angle `roll` from a fixed reference.
fn rolled_perpendicular<T: Real>(axis: Vec3<T>, roll: T) -> Vec3<T> {
    let u = axis.any_orthonormal();
    let v = axis.cross(u);
    u * roll.cos() + v * roll.sin()
}

/// A seeded sampler bound to one object and gripper.
#[derive(Debug, Clone)]
pub struct Sampler<'a, T> {
    mesh: &'a TriMesh<T>,
    gripper: &'a GripperSpec<T>,
    spec: SamplerSpec<T>,
    bounds: Aabb<T>,
    line_spacing: T,
    rng: ChaCha8Rng,
    pending: VecDeque<Proposal<T>>,
}

impl<'a, T: Real> Sampler<'a, T> {
    /// `line_spacing` is the point spacing of the line sampler (mm).
    pub fn new(mesh: &'a TriMesh<T>, gripper: &'a GripperSpec<T>, spec: SamplerSpec<T>, line_spacing: T) -> Result<Self> {
        spec.validate()?;
        gripper.validate()?;
        if !(line_spacing > T::zero()) {
            return Err(Error::InvalidParameter(format!("line spacing must be positive, got {line_spacing}")));
        }
        Ok(Self {
            mesh,
            gripper,
            spec,
            bounds: sampling_bounds(mesh, gripper),
            line_spacing,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            pending: VecDeque::new(),
        })
    }

    pub fn spec(&self) -> &SamplerSpec<T> {
        &self.spec
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.bounds
    }

    /// Draws the next attempt without testing validity.
    pub fn propose(&mut self) -> Proposal<T> {
        match self.spec.kind {
            SamplerKind::Uniform => Proposal {
                pose: Some(sample_uniform_pose(&self.bounds, &mut self.rng)),
                detail: ProposalDetail::Uniform,
            },
            SamplerKind::LineCom => loop {
                if let Some(p) = self.pending.pop_front() {
                    break p;
                }
                self.refill_line();
            },
            SamplerKind::Approach => self.propose_approach(),
            SamplerKind::Antipodal => self.propose_antipodal(),
        }
    }

    /// Queues evenly spaced points of a random line through the centre of mass.
    fn refill_line(&mut self) {
        let origin = self.mesh.com();
        let direction: Vec3<T> = uniform_direction(&mut self.rng);
        let inv = Vec3::new(T::one() / direction.x, T::one() / direction.y, T::one() / direction.z);
        let Some((t0, t1)) = self.bounds.ray_interval(origin, inv, T::neg_infinity(), T::infinity()) else {
            return;
        };
        let first = (t0 / self.line_spacing).ceil().to_i64().unwrap();
        let last = (t1 / self.line_spacing).floor().to_i64().unwrap();
        for k in first..=last {
            let p = origin + direction * (self.line_spacing * T::lit(k as f64));
            let q = uniform_quaternion(&mut self.rng);
            self.pending.push_back(Proposal {
                pose: Some(Pose { p, q }),
                detail: ProposalDetail::Line { origin, direction, step_index: k },
            });
        }
    }

    fn propose_approach(&mut self) -> Proposal<T> {
        let surface = self.mesh.sample_surface_point(&mut self.rng);
        let direction = sample_cone(surface.normal, self.spec.alpha, &mut self.rng);
        let standoff = self.gripper.finger_length * T::lit(self.rng.gen::<f64>());
        let approach = sample_cone(direction, self.spec.beta, &mut self.rng);
        let roll = T::two() * T::PI() * T::lit(self.rng.gen::<f64>());
        // The gripper moves along -approach; its finger bases sit at the standoff point.
        let approach_axis = -approach;
        let closing = rolled_perpendicular(approach_axis, roll);
        let base = surface.position + direction * standoff;
        let p = base + approach_axis * self.gripper.finger_length;
        let q = orientation_from_axes(self.gripper, closing, approach_axis);
        Proposal {
            pose: Some(Pose { p, q }),
            detail: ProposalDetail::Approach { surface, direction, approach, standoff, roll },
        }
    }

    fn propose_antipodal(&mut self) -> Proposal<T> {
        let first = self.mesh.sample_surface_point(&mut self.rng);
        let ray = sample_cone(-first.normal, self.spec.alpha, &mut self.rng);
        let roll = T::two() * T::PI() * T::lit(self.rng.gen::<f64>());
        let standoff = self.spec.s_min * T::lit(self.rng.gen::<f64>());
        let second = self.mesh.raycast_farthest(first.position, ray);
        let rejection = match second {
            None => Some(AntipodalRejection::NoHit),
            Some(hit) if hit.t > self.gripper.max_opening => Some(AntipodalRejection::TooWide),
            Some(_) => None,
        };
        let pose = match (second, rejection) {
            (Some(hit), None) => {
                let closing = ray;
                let approach_axis = rolled_perpendicular(closing, roll);
                let midpoint = (first.position + hit.position) * T::half();
                // negative standoff pushes the contacts deeper between the fingers
                let p = midpoint - approach_axis * standoff;
                Some(Pose { p, q: orientation_from_axes(self.gripper, closing, approach_axis) })
            }
            _ => None,
        };
        Proposal { pose, detail: ProposalDetail::Antipodal { first, ray, second, rejection, standoff, roll } }
    }

    /// Stream of validity-labelled candidates ending after `n` valid ones or
    /// when [`attempt_budget`] is spent.
    pub fn stream(self, n: usize) -> SampleStream<'a, T> {
        SampleStream { sampler: self, target: n, budget: attempt_budget(n), attempts: 0, valid: 0, exhausted: false }
    }
}

#[derive(Debug, Clone)]
pub struct SampleStream<'a, T> {
    sampler: Sampler<'a, T>,
    target: usize,
    budget: usize,
    attempts: usize,
    valid: usize,
    exhausted: bool,
}

impl<T: Real> SampleStream<'_, T> {
    /// Attempts consumed so far, including rejected ones.
    pub fn attempts(&self) -> usize {
        self.attempts
    }

    pub fn valid_count(&self) -> usize {
        self.valid
    }

    /// True once the attempt budget ran out before reaching the target.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    /// Overrides the attempt budget (mostly for tests).
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

impl<T: Real> Iterator for SampleStream<'_, T> {
    type Item = CandidateGrasp<T>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.valid < self.target {
            if self.attempts >= self.budget {
                self.exhausted = true;
                return None;
            }
            let index = self.attempts;
            self.attempts += 1;
            let Some(pose) = self.sampler.propose().pose else {
                continue;
            };
            let validity = check_validity(self.sampler.mesh, &pose, self.sampler.gripper);
            if validity.is_valid() {
                self.valid += 1;
            }
            return Some(CandidateGrasp { pose, validity, sampler_attempt_index: index });
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn labels() {
        assert_eq!(SamplerSpec::<f64>::approach(0.0, PI, 0).label(), "approach(0,pi)");
        assert_eq!(SamplerSpec::<f64>::approach(PI / 2.0, 0.0, 0).label(), "approach(pi/2,0)");
        assert_eq!(SamplerSpec::<f64>::antipodal(PI / 6.0, 0.0, 0).label(), "antipodal(pi/6,0)");
        assert_eq!(SamplerSpec::<f64>::antipodal(0.3, -2.5, 0).label(), "antipodal(0.3,-2.5)");
        assert_eq!(SamplerSpec::<f64>::uniform(0).label(), "uniform");
    }

    #[test]
    fn spec_validation() {
        assert!(SamplerSpec::<f64>::approach(-0.1, 0.0, 0).validate().is_err());
        assert!(SamplerSpec::<f64>::approach(0.0, 4.0, 0).validate().is_err());
        assert!(SamplerSpec::<f64>::antipodal(0.5, 1.0, 0).validate().is_err());
        assert!(SamplerSpec::<f64>::antipodal(0.5, -1.0, 0).validate().is_ok());
    }

    #[test]
    fn orientation_maps_axes() {
        let g = GripperSpec::<f64>::default();
        let closing = Vec3::new(0.0, 1.0, 0.0);
        let approach = Vec3::new(0.0, 0.0, -1.0);
        let q = orientation_from_axes(&g, closing, approach);
        assert!((q.rotate(g.closing_axis) - closing).norm() < 1e-12);
        assert!((q.rotate(g.approach_axis) - approach).norm() < 1e-12);
    }
}
