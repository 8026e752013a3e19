//! Numerical laboratory for a piecewise-defined geometric Lorenz flow and its
//! skew-product extension by a one-dimensional contracting fiber.
//!
//! The base model glues an exact linear flow on the cube `|x1| <= 1, |x2| <= 1,
//! 0 <= x3 <= 1` to affine "ear" maps that reinject exiting orbits into the top
//! section `x3 = 1`. Return maps, invariant cones, expansion rates, finite-time
//! exponents and Floquet data all have closed forms or cheap semi-analytic
//! evaluations, which the crate exposes alongside a general-purpose adaptive
//! integrator used for the classical Lorenz equations as a cross-check backend.
//!
//! Module layout mirrors the pipeline:
//! - [`model3d`]: base model parameters, linear block, ear maps, classical field
//! - [`skew4d`]: fiber extension, tube bump function, surgery modes
//! - [`flowint`]: Dormand-Prince 5(4) integrator, tangent frames, section hits
//! - [`section`]: return map, fixed points, cone and expansion checks, curves
//! - [`spectra`]: QR exponents, domination margins, sectional rates, Floquet
//! - [`sampling`]: deterministic counter-based sample streams for experiments

pub mod error;
pub mod flowint;
pub mod model3d;
pub mod report;
pub mod sampling;
pub mod section;
pub mod skew4d;
pub mod spectra;

pub use error::{Error, Result};
pub use report::{Check, ValidationReport};

/// Points with `|x2|` below this are treated as lying on the stable leaf
/// `x2 = 0`; the linear block never ejects them through an exit face.
pub const LEAF_TOL: f64 = 1e-10;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;
