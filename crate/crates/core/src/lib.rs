//! High-order one-step ALE WENO finite volume schemes on moving unstructured
//! triangular meshes for the seven-equation Baer-Nunziato model.

pub mod basis;
pub mod cases;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod predictor;
pub mod runner;
pub mod scheme;
pub mod weno;

pub use error::{Error, Result};
