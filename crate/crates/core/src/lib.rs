pub mod cli;
pub mod error;
pub mod hyperdim;
pub mod levinson;
pub mod dispersion;
pub mod models;
pub mod numerics;
pub mod propagators;
pub mod serde_util;
pub mod smatrix;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
