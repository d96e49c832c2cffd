//! Grasp sampling over SE(3) with an analytic success oracle and coverage metrics.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`, which is what persisted data and the pipeline use.
//! Lengths are millimetres, angles radians unless a name says degrees.

pub mod error;
pub mod gripper;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod oracle;
pub mod samplers;
pub mod scalar;
pub mod se3;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = linalg::Vec3<f64>;
pub type Quat = linalg::Quat<f64>;
pub type Aabb = linalg::Aabb<f64>;
pub type Obb = linalg::Obb<f64>;
pub type Pose = se3::Pose<f64>;
pub type MetricParams = se3::MetricParams<f64>;
pub type GridSpec = se3::GridSpec<f64>;
pub type Se3Grid = se3::Se3Grid<f64>;
pub type TriMesh = mesh::TriMesh<f64>;
pub type GripperSpec = gripper::GripperSpec<f64>;
pub type SamplerSpec = samplers::SamplerSpec<f64>;
pub type CandidateGrasp = samplers::CandidateGrasp<f64>;
pub type GraspLabel = oracle::GraspLabel<f64>;
pub type ReferenceSet = oracle::ReferenceSet<f64>;
pub type PoseIndex = metrics::PoseIndex<f64>;
