//! Per-vertex feature intensity and feature/crease/smooth classification.
//!
//! The intensity combines the angle defect `K` and the largest dihedral
//! angle `E` over the incident edges:
//! `F = (tau(|K|) + 1) (tau(E) + 1) - 1` with `tau(x) = min(pi, 2x)`.

use std::f64::consts::{PI, TAU};

use crate::geometry::{dihedral_angle, triangle_angles};
use crate::mesh::{HalfedgeId, HalfedgeMesh, VertexId};

/// Vertex classification driving position initialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexClass {
    /// Few or no neighbors of similar importance: the vertex stays put.
    Feature,
    /// Lies on a crease through the two given neighbors.
    Crease(VertexId, VertexId),
    /// Surrounded by similar neighbors.
    Smooth,
}

/// Default similarity threshold for classification.
pub const DEFAULT_ZETA: f64 = 0.5;

/// Largest possible intensity, `(pi + 1)^2 - 1`.
pub fn max_intensity() -> f64 {
    (PI + 1.0).powi(2) - 1.0
}

#[inline]
fn tau(x: f64) -> f64 {
    (2.0 * x).min(PI)
}

/// Combined intensity from angle defect and feature edge intensity.
pub fn combine_intensity(curvature: f64, edge_intensity: f64) -> f64 {
    (tau(curvature.abs()) + 1.0) * (tau(edge_intensity) + 1.0) - 1.0
}

fn angle_sum(mesh: &HalfedgeMesh, v: VertexId) -> f64 {
    mesh.outgoing(v)
        .filter_map(|h| {
            let f = mesh.facet(h)?;
            let [a, b, c] = mesh.facet_points(f);
            let angles = triangle_angles(&a, &b, &c).ok()?;
            let corner = mesh.facet_vertices(f).iter().position(|&x| x == v)?;
            Some(angles[corner])
        })
        .sum()
}

/// Angle defect: `2 pi - sum of incident angles`, or `pi - sum` on the boundary.
pub fn gaussian_curvature(mesh: &HalfedgeMesh, v: VertexId) -> f64 {
    let full = if mesh.is_boundary_vertex(v) { PI } else { TAU };
    full - angle_sum(mesh, v)
}

/// Unsigned dihedral angle of an edge; boundary edges count as `pi`.
pub fn edge_dihedral(mesh: &HalfedgeMesh, h: HalfedgeId) -> f64 {
    if mesh.is_boundary_edge(h) {
        return PI;
    }
    dihedral_angle(mesh, h).unwrap_or(0.0)
}

/// Largest dihedral angle over the edges incident to `v`.
pub fn feature_edge_intensity(mesh: &HalfedgeMesh, v: VertexId) -> f64 {
    mesh.outgoing(v).map(|h| edge_dihedral(mesh, h)).fold(0.0, f64::max)
}

pub fn feature_intensity(mesh: &HalfedgeMesh, v: VertexId) -> f64 {
    combine_intensity(gaussian_curvature(mesh, v), feature_edge_intensity(mesh, v))
}

/// Feature values of every vertex, indexed by vertex id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureField {
    curvature: Vec<f64>,
    edge_intensity: Vec<f64>,
    intensity: Vec<f64>,
}

impl FeatureField {
    pub fn compute(mesh: &HalfedgeMesh) -> Self {
        let mut field = FeatureField::default();
        field.update(mesh, mesh.vertices());
        field
    }

    /// Recomputes the values of the given vertices.
    pub fn update(&mut self, mesh: &HalfedgeMesh, vertices: impl IntoIterator<Item = VertexId>) {
        let n = mesh.vertex_capacity();
        if self.intensity.len() < n {
            self.curvature.resize(n, 0.0);
            self.edge_intensity.resize(n, 0.0);
            self.intensity.resize(n, 0.0);
        }
        for v in vertices {
            let k = gaussian_curvature(mesh, v);
            let e = feature_edge_intensity(mesh, v);
            let i = v.index();
            self.curvature[i] = k;
            self.edge_intensity[i] = e;
            self.intensity[i] = combine_intensity(k, e);
        }
    }

    pub fn curvature(&self, v: VertexId) -> f64 {
        self.curvature.get(v.index()).copied().unwrap_or(0.0)
    }

    pub fn edge_intensity(&self, v: VertexId) -> f64 {
        self.edge_intensity.get(v.index()).copied().unwrap_or(0.0)
    }

    pub fn intensity(&self, v: VertexId) -> f64 {
        self.intensity.get(v.index()).copied().unwrap_or(0.0)
    }

    /// Linear interpolation of the intensity over a facet.
    pub fn interpolate(&self, vertices: &[VertexId; 3], bary: &[f64; 3]) -> f64 {
        (0..3).map(|k| bary[k] * self.intensity(vertices[k])).sum()
    }

    /// Sum of the angle defects over all live vertices.
    pub fn total_curvature(&self, mesh: &HalfedgeMesh) -> f64 {
        mesh.vertices().map(|v| self.curvature(v)).sum()
    }
}

/// Sum of the angle defects of a mesh (equals `2 pi chi` for closed meshes).
pub fn total_gaussian_curvature(mesh: &HalfedgeMesh) -> f64 {
    mesh.vertices().map(|v| gaussian_curvature(mesh, v)).sum()
}

/// Absolute slack in the similarity tests so that round-off on flat
/// regions (intensities around 1e-15) does not break ties.
const INTENSITY_SLACK: f64 = 1e-9;

/// Classifies `v` by counting neighbors of similar intensity that are joined
/// to it by an important edge.
pub fn classify_vertex(mesh: &HalfedgeMesh, field: &FeatureField, v: VertexId, zeta: f64) -> VertexClass {
    let fv = field.intensity(v);
    let ev = field.edge_intensity(v);
    let mut similar: Vec<(f64, f64, VertexId)> = Vec::new();
    let mut degree = 0usize;
    for h in mesh.outgoing(v) {
        degree += 1;
        let w = mesh.to_vertex(h);
        let fw = field.intensity(w);
        let d = edge_dihedral(mesh, h);
        if fw + INTENSITY_SLACK >= zeta * fv && d + 1.0 + INTENSITY_SLACK >= zeta * (ev + 1.0) {
            similar.push((d, fw, w));
        }
    }
    let k = similar.len();
    if k == degree && degree > 2 {
        return VertexClass::Smooth;
    }
    let crease = |mut s: Vec<(f64, f64, VertexId)>| {
        s.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        VertexClass::Crease(s[0].2.min(s[1].2), s[0].2.max(s[1].2))
    };
    match k {
        0 | 1 => VertexClass::Feature,
        2 => crease(similar),
        _ if k - 2 <= degree - k => crease(similar),
        _ => VertexClass::Smooth,
    }
}
