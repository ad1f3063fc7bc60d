//! Time stepping for rigid spherical particles whose contacts may stick.
//!
//! Each contact carries an adhesion potential `gamma <= 0`. While `gamma` is
//! negative the contact is held as an equality; the potential relaxes as the
//! contact is pulled and the contact releases once it returns to zero.

pub mod convergence;
pub mod error;
pub mod force;
pub mod geometry;
pub mod lubrication;
pub mod multibody;
pub mod neighbors;
pub mod output;
pub mod obstacles;
pub mod plane;
pub mod projection;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
pub use geometry::Vec3;
