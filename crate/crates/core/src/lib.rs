//! Desk-scale verification lab for constant mean curvature hypersurfaces of
//! spheres: umbilical and Clifford families, support functions, geodesic
//! circles, the partial-fraction obstruction, and Jacobi stability indices.

pub mod calculus;
pub mod families;
pub mod geodesic;
pub mod geometry;
pub mod lemma;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod support;
pub mod taylor;

pub use geometry::{AmbientVector, ChartPoint, CurvatureData, Hypersurface, SurfaceJet};
