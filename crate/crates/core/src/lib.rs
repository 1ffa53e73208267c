pub mod array_sim;
pub mod error;
pub mod numerics;
pub mod pipeline;
pub mod seed;
pub mod sketching;
pub mod spectrum;
pub mod subspace;

pub use error::{Error, Result};
pub use num_complex::Complex64;
