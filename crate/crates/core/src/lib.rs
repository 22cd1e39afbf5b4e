pub mod bench;
pub mod domains;
pub mod geometry;
pub mod motion;
pub mod symbolic;
pub mod tamp;
