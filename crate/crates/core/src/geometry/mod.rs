//! Planar side-view world: poses, convex shapes, the three-link arm and
//! scenes of bodies connected by attachments.

mod arm;
mod pose;
mod scene;
mod shape;


pub use arm::{ArmModel, Config, FkResult, IkConfig, DOF};
pub use pose::{angle_diff, normalize_angle, Pose2};
pub use scene::{
    perimeter_ports, state_collision_free, world_pose, Attachment, Body, BodyId, Mode, ModeGeometry, Parent, Region,
    Scene, GRASP_PORTS, REST_GAP, ROBOT,
};
pub use shape::{collide, Shape, WorldShape, CONTACT_MARGIN};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid arm model: {0}")]
    InvalidArm(String),
    #[error("configuration {0:?} violates joint limits")]
    JointLimit(Config),
    #[error("unknown body `{0}`")]
    UnknownBody(String),
    #[error("duplicate body `{0}`")]
    DuplicateBody(String),
    #[error("`{0}` is reserved")]
    ReservedName(String),
    #[error("static body `{0}` has no pose")]
    MissingStaticPose(String),
    #[error("movable body `{0}` must not have a static pose")]
    MovableWithStaticPose(String),
    #[error("region of `{0}` lies outside its shape")]
    RegionOutsideBody(String),
    #[error("`{0}` is not movable")]
    NotMovable(String),
    #[error("movable `{0}` has no attachment")]
    MissingAttachment(String),
    #[error("movable `{0}` is attached twice")]
    DuplicateAttachment(String),
    #[error("attachment chain through `{0}` forms a cycle")]
    AttachmentCycle(String),
}
