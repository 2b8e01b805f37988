//! Unfitted spectral element method for 2D elliptic interface problems and
//! interface eigenvalue problems on rectangular background meshes cut by a
//! level-set interface.
//!
//! The discrete space doubles the nodal Legendre-Gauss-Lobatto basis on
//! interface elements, couples the two sides weakly with a weighted Nitsche
//! form, and stabilizes small cuts with a degree-scaled ghost penalty on the
//! faces around the interface. Cut-cell integrals use a high-order
//! implicit-domain quadrature driven by Ridder root finding.

pub mod lgl;
pub mod levelset;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod dofmap;
pub mod assembly;
pub mod solver;
pub mod norms;
pub mod problems;
pub mod config;
pub mod study;
pub mod csvio;

pub use levelset::{LevelSet, LevelSetKind};
pub use mesh::{CutMesh, ElementClass, Face, Rect, Side};
