//! Error-bounded, feature-preserving remeshing of triangle surfaces.
//!
//! The remesher improves the smallest interior angle of a triangle mesh
//! while keeping the two-sided Hausdorff distance to the input below a
//! user bound. Work proceeds through local operators (edge collapse, edge
//! split, vertex relocation), each of which is accepted only after a
//! sample-based fidelity test on the affected patch.

pub mod error;
pub mod features;
pub mod fidelity;
pub mod geometry;
pub mod mesh;
pub mod pipeline;
pub mod relocate;
pub mod report;
pub mod sampling;
pub mod shapes;

pub use error::{ConfigError, FidelityError, GeometryError, MeshError, RemeshError};
pub use mesh::{EdgeKey, FacetId, HalfedgeId, HalfedgeMesh, Point, Vector, VertexId};
