//! Normal bundles, principal curvatures, strata and support measures of
//! closed sets in ℝ² and ℝ³.
//!
//! A closed set is described by a [`scene::Scene`], a finite union of
//! primitives with exact distance and nearest-point oracles. Everything
//! downstream works through the [`scene::ClosedSet`] trait, so the smooth
//! parametric surfaces in [`curvature::smooth`] plug into the same
//! machinery.
//!
//! Pipeline, bottom-up:
//!
//! - [`projection`]: nearest point projection, spherical image map, the
//!   reach-type function ρ and the reach function of the normal bundle.
//! - [`differential`]: finite-difference differentials of the projection
//!   and of the spherical image map, with eigenvalues χ.
//! - [`curvature`]: principal curvatures, tangent spaces, the second
//!   fundamental form, symmetric functions H_j.
//! - [`bundle`]: weighted samples of the unit normal bundle N(A).
//! - [`strata`]: classification of base points by dimension of the
//!   normal cone.
//! - [`measures`]: support measures through three independent routes.
//! - [`oracle`]: brute-force and closed-form reference values.
//! - [`cli`]: configuration, orchestration and report emission.

pub mod bundle;
pub mod checks;
pub mod cli;
pub mod curvature;
pub mod differential;
mod error;
pub mod ext;
pub mod linalg;
pub mod measures;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod scene;
pub mod strata;
pub mod tol;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use tol::Tolerances;

/// Points and directions in the ambient space, of length 2 or 3.
pub type Vector = nalgebra::DVector<f64>;
/// Square matrices acting on the ambient space.
pub type Matrix = nalgebra::DMatrix<f64>;
