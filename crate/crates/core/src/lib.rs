//! Enclosure-method reconstruction of polygonal conductivity inclusions.
//!
//! Given a conductor `Ω` containing polygonal inclusions `D_j` of constant
//! conductivity `k_j`, the voltage difference `u(P) - u(Q)` between two fixed
//! boundary points, measured for complex geometrical optics (CGO) current
//! patterns, determines the support function `h_D(ω)` and hence the convex
//! hull of the inclusions.
//!
//! The crate is `no_std` (with `alloc`) and carries every numerical piece:
//!
//! * [`geometry`]: directions, polygons, support functions, half-plane hulls;
//! * [`mesh`]: inclusion-conforming Delaunay triangulation of a disk;
//! * [`forward`]: P1 finite elements for `∇·γ∇u = 0` with Neumann data;
//! * [`probe`]: CGO probes, the indicator function and support estimators;
//! * [`dipole`]: the dipole solution `V + ℰ` and its identities;
//! * [`oracle`]: closed-form forward data for a concentric disk inclusion.
//!
//! IO, configuration, parallel sweeps and the command line live in the
//! companion `enclosure` crate.

#![no_std]
// comparisons are written so that NaN falls on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dipole;
mod error;
pub mod float;
pub mod forward;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod probe;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{Direction, DomainSpec, InclusionSet, Polygon, Vec2};
pub use mesh::Mesh;
pub use num_complex::Complex64;
