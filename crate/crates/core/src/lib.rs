//! Discrete capillary surfaces in convex domains.

pub mod analysis;
pub mod config;
pub mod domain;
pub mod driver;
pub mod energy;
pub mod fbsolver;
pub mod flow;
pub mod geom;
pub mod record;
pub mod surface;
pub mod sweepout;
pub mod verify;
