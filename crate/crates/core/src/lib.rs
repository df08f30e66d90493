pub mod config;
pub mod decomposition;
pub mod dynamics;
pub mod error;
pub mod feynman_kac;
pub mod frames;
pub mod grid;
pub mod heat;
pub mod numerics;
pub mod pipeline;
pub mod spectral;
pub mod suite;
pub mod tridiag;

pub use error::{Error, Result};
