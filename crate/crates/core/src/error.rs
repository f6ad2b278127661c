//! Error types.

use std::path::PathBuf;

use thiserror::Error;

use crate::mesh::{HalfedgeId, VertexId};

/// Failures while building, loading, saving or editing a mesh.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("facet {facet} references vertex index {index} which does not exist")]
    IndexOutOfRange { facet: usize, index: usize },
    #[error("facet {facet} repeats a vertex")]
    DegenerateFacet { facet: usize },
    #[error("non-manifold edge between vertices {a} and {b}")]
    NonManifoldEdge { a: VertexId, b: VertexId },
    #[error("non-manifold vertex {vertex}")]
    NonManifoldVertex { vertex: VertexId },
    #[error("isolated vertex {vertex}")]
    IsolatedVertex { vertex: VertexId },
    #[error("non-triangular facet at index {index}")]
    NonTriangularFacet { index: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported mesh format for {0}")]
    UnsupportedFormat(PathBuf),
    #[error("mesh has no facets")]
    Empty,
    #[error("collapse of halfedge {0} violates the link condition")]
    LinkCondition(HalfedgeId),
    #[error("halfedge {0} is not part of the mesh")]
    StaleHandle(HalfedgeId),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Degenerate geometric input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("edge is on the boundary and has no dihedral angle")]
    BoundaryEdge,
}

/// Rejected remeshing parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("delta must be positive, got {0}")]
    Delta(f64),
    #[error("theta must lie in [0, 60) degrees, got {0}: unsupported regime")]
    Theta(f64),
    #[error("max vertex count must be positive")]
    MaxVertices,
    #[error("samples per facet must be positive")]
    SamplesPerFacet,
    #[error("zeta must lie in (0, 1), got {0}")]
    Zeta(f64),
    #[error("lambda must lie in (0, 1], got {0}")]
    Lambda(f64),
    #[error("omega must lie in [0, 1], got {0}")]
    Omega(f64),
    #[error("delta theta must be non-negative, got {0}")]
    DeltaTheta(f64),
    #[error("simplification angle fraction must lie in [0, 1], got {0}")]
    SimplificationAngleFraction(f64),
}

/// Top level error of a remeshing run.
#[derive(Debug, Error)]
pub enum RemeshError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
}

/// Rejected fidelity setup.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error("error bound must be positive, got {0}")]
    InvalidBound(f64),
    #[error("sample set is empty")]
    EmptySampleSet,
}
