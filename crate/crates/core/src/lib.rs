//! Flat cone surfaces with quadratic-differential data, turned into
//! minimal / maximal / CMC surface germs by solving the unified Gauss
//! equation
//!
//!   Delta u = a e^{2u} - K_0 + b |t|^2 e^{-2u},
//!
//! and reconstruction of the associated constant-curvature 3-metrics in the
//! hyperbolic, anti-de Sitter, de Sitter and Minkowski models: equidistant
//! foliations, explicit metric blocks, asymptotic boundary data, derived
//! hyperbolic metrics and their morphisms, and the reduced Hamiltonian and
//! symplectic data of the space of solutions.
//!
//! Delta is the positive Laplacian throughout. The numeric kernels are
//! generic over the scalar (`scalar::Real`, i.e. `f32` or `f64`); the
//! aliases below fix f64 for ordinary use.

pub mod background;
pub mod eigen;
mod error;
pub mod gauss;
pub mod germ;
pub mod io;
pub mod mat2;
pub mod mesh;
pub mod scalar;
pub mod spaceforms;
pub mod sparse;
pub mod teichmaps;
pub mod weierstrass;

pub use error::{Error, Result};

pub type ConeMesh64 = mesh::ConeMesh<f64>;
pub type HqdField64 = background::HqdField<f64>;
pub type GaussProblem64 = gauss::GaussProblem<f64>;
pub type Solution64 = gauss::Solution<f64>;
pub type SurfaceGerm64 = germ::SurfaceGerm<f64>;
pub type Setting64 = gauss::GeometrySetting<f64>;
pub type Mat2x64 = mat2::Mat2<f64>;
