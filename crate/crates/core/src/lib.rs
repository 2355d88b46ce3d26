//! Numerics for Mahler volumes, isotropic constants and the logarithmic
//! Laplace transform on convex cones.

pub mod body;
pub mod cone_transform;
pub mod dd;
pub mod error;
pub mod join;
pub mod kuperberg;
pub mod linalg;
pub mod models;
pub mod moments;
pub mod optim;
pub mod ser;
pub mod slicing;
pub mod verify;

pub use error::{Error, Result};
