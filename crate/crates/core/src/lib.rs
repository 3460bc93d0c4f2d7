//! Chart-based tensor calculus for checking locally conformally Kähler
//! identities numerically.

pub mod calculus;
pub mod chart;
pub mod error;
pub mod hermitian;
pub mod holonomy;
pub mod ode;
pub mod settings;
pub mod tensor;
pub mod zoo;

pub use chart::{Chart, Domain};
pub use error::{GeomError, Result};
pub use hermitian::{HermitianStructure, ResidualMap};
pub use settings::{DerivativeMode, Settings, Tolerances};
pub use tensor::FrameTensor;
pub use zoo::{resolve, ZooEntry};
