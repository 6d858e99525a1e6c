//! Mixed displacement-pseudostress finite element eigensolver for the
//! linear elasticity vibration problem on 2D domains.
//!
//! The pseudostress tensor is approximated row-wise with Raviart-Thomas
//! elements of order `k` and the displacement with discontinuous vector
//! polynomials of the same order. The resulting saddle-point generalized
//! eigenvalue problem is solved by shift-invert Krylov iteration on a
//! sparse LU factorization, and mesh-refinement studies fit convergence
//! orders and extrapolated vibration frequencies per mode.
//!
//! The crate is organized around the pipeline
//! `mesh -> elements -> assembly -> spectral -> analysis`:
//!
//! * [`mesh`] — structured triangulations of the square, L-shape and disk,
//!   with oriented edge topology and an ASCII exchange format.
//! * [`elements`] — reference Raviart-Thomas and polynomial bases,
//!   quadrature, and the Piola transform.
//! * [`assembly`] — global DOF maps and the sparse blocks of the mixed
//!   formulation (both algebraic forms of the `a` bilinear form, the
//!   incompressible-limit form, divergence coupling, mass, trace
//!   constraint) plus interpolation and projection operators.
//! * [`spectral`] — the bordered eigenvalue pencil and its shift-invert
//!   Krylov solver.
//! * [`analysis`] — refinement studies, order fitting and extrapolation.
//! * [`oracle`] — slow, independent dense reference implementations used
//!   by the test suite.

pub mod analysis;
pub mod assembly;
pub mod driver;
pub mod elements;
mod error;
pub mod mesh;
pub mod oracle;
mod par;
pub mod quadrature;
pub mod rng;
pub mod sparse;
pub mod spectral;
pub mod vtk;

pub use error::{Error, Result};
pub use par::{configure_thread_pool, parallel_enabled, set_parallel_enabled};
