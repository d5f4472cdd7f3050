//! Uniform solid-angle sampling of oriented disk lights.
//!
//! A disk seen from a point subtends a spherical ellipse. This crate builds
//! that ellipse ([`geometry`]), evaluates its area and fractional areas with
//! incomplete elliptic integrals ([`elliptic`], [`solid_angle`]), and maps the
//! unit square onto it with three area-preserving maps ([`maps`]) plus a
//! tabulated approximation of the radial one ([`tabulation`]). [`oracles`]
//! holds independent reference machinery and [`harness`] a small
//! direct-lighting renderer used to compare estimators.

// `!(x > 0.0)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod maps;
pub mod oracles;
pub mod rng;
pub mod solid_angle;
pub mod stats;
pub mod tabulation;
pub mod vec3;

pub use error::{Error, Result};
pub use geometry::{build_frames, DiskLight, EllipseAxes, ShadingPoint, SphericalEllipseFrame};
pub use maps::{EllipseSampler, MapSample, NewtonConfig, Technique, UnitSquareSample};
pub use vec3::Vec3;
