//! Tactile-aware 2D navigation: a kinematic simulator with compliant
//! contact, LiDAR and bumper-plate sensing, A*/EBand/APF/DWA planners,
//! a PPO-trained velocity optimizer and a benchmarking harness.

pub mod bench;
pub mod geometry;
pub mod nav;
pub mod policy;
pub mod scenarios;
pub mod sensors;
pub mod sim;
pub mod train;
