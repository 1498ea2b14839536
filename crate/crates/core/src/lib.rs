// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assist;
pub mod elastica;
pub mod fusion;
pub mod geom;
pub mod harness;
pub mod image;
pub mod intent;
pub mod kdtree;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use scalar::Real;

/// `f64` instantiations of the generic types.
pub type Vec3 = geom::Vec3<f64>;
pub type Pose = geom::Pose<f64>;
pub type UnitQuaternion = geom::UnitQuaternion<f64>;
pub type RigidTransform = geom::RigidTransform<f64>;
pub type TimedPointCloud = fusion::TimedPointCloud<f64>;
pub type DloState = fusion::DloState<f64>;
pub type GraspTarget = intent::GraspTarget<f64>;
pub type AssistParams = assist::AssistParams<f64>;
pub type ControlState = assist::ControlState<f64>;
pub type BarrierField = assist::BarrierField<f64>;
