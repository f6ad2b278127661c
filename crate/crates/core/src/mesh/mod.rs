//! Halfedge representation of 2-manifold triangle meshes.
//!
//! Storage is arena based: removed elements stay in place with a tombstone
//! flag and identifiers are never reused. New elements are always appended,
//! which keeps identifiers of a pending operation predictable (see
//! [`OperatorPreview`]).

mod io;
mod ops;

use std::collections::HashMap;
use std::fmt;

use nalgebra::{Point3, Vector3};

use crate::error::MeshError;

pub use io::{load_mesh, load_mesh_from_str, save_mesh, write_mesh, MeshFormat};
pub use ops::{LocalPatch, Operator, OperatorPreview, PatchFacet};

/// 3D point type used throughout the crate.
pub type Point = Point3<f64>;
/// 3D vector type used throughout the crate.
pub type Vector = Vector3<f64>;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub(crate) fn from_index(index: usize) -> Self {
                Self(index as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Handle of a vertex.
    VertexId
);
id_type!(
    /// Handle of a directed halfedge.
    HalfedgeId
);
id_type!(
    /// Handle of a triangular facet.
    FacetId
);

/// Unordered vertex pair identifying an edge independently of halfedge handles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(pub VertexId, pub VertexId);

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }
}

#[derive(Clone, Debug)]
struct VertexRecord {
    position: Point,
    halfedge: Option<HalfedgeId>,
    removed: bool,
}

#[derive(Clone, Debug)]
struct HalfedgeRecord {
    to: VertexId,
    next: HalfedgeId,
    prev: HalfedgeId,
    twin: HalfedgeId,
    facet: Option<FacetId>,
    removed: bool,
}

#[derive(Clone, Debug)]
struct FacetRecord {
    halfedge: HalfedgeId,
    removed: bool,
}

/// Triangle mesh with halfedge connectivity.
///
/// Boundary halfedges carry no facet and are linked into boundary loops
/// through `next`/`prev`. The outgoing halfedge stored for a boundary vertex
/// is always its outgoing boundary halfedge.
#[derive(Clone, Debug)]
pub struct HalfedgeMesh {
    vertices: Vec<VertexRecord>,
    halfedges: Vec<HalfedgeRecord>,
    facets: Vec<FacetRecord>,
    live_vertices: usize,
    live_halfedges: usize,
    live_facets: usize,
    area_epsilon: f64,
}

impl HalfedgeMesh {
    /// Builds a mesh from an indexed triangle list.
    ///
    /// Rejects out-of-range or repeated indices, edges shared by more than
    /// two facets (or inconsistently oriented), vertices whose facets do not
    /// form a single fan, and vertices not referenced by any facet.
    pub fn from_triangles(positions: Vec<Point>, triangles: &[[usize; 3]]) -> Result<Self, MeshError> {
        let n = positions.len();
        let mut mesh = HalfedgeMesh {
            vertices: positions
                .into_iter()
                .map(|position| VertexRecord { position, halfedge: None, removed: false })
                .collect(),
            halfedges: Vec::with_capacity(triangles.len() * 3 + 16),
            facets: Vec::with_capacity(triangles.len()),
            live_vertices: n,
            live_halfedges: 0,
            live_facets: 0,
            area_epsilon: 0.0,
        };

        let mut directed: HashMap<(usize, usize), HalfedgeId> = HashMap::with_capacity(triangles.len() * 3);
        for (fi, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= n {
                    return Err(MeshError::IndexOutOfRange { facet: fi, index: i });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(MeshError::DegenerateFacet { facet: fi });
            }
            let f = FacetId::from_index(mesh.facets.len());
            let base = mesh.halfedges.len();
            for k in 0..3 {
                let to = VertexId::from_index(tri[(k + 1) % 3]);
                mesh.halfedges.push(HalfedgeRecord {
                    to,
                    next: HalfedgeId::from_index(base + (k + 1) % 3),
                    prev: HalfedgeId::from_index(base + (k + 2) % 3),
                    twin: HalfedgeId(u32::MAX),
                    facet: Some(f),
                    removed: false,
                });
                let key = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(key, HalfedgeId::from_index(base + k)).is_some() {
                    return Err(MeshError::NonManifoldEdge {
                        a: VertexId::from_index(key.0),
                        b: VertexId::from_index(key.1),
                    });
                }
            }
            mesh.facets.push(FacetRecord { halfedge: HalfedgeId::from_index(base), removed: false });
        }

        // twins, creating boundary halfedges where the opposite side is missing
        let interior = mesh.halfedges.len();
        let mut boundary_out: HashMap<usize, HalfedgeId> = HashMap::new();
        for hi in 0..interior {
            if mesh.halfedges[hi].twin.0 != u32::MAX {
                continue;
            }
            let h = HalfedgeId::from_index(hi);
            let to = mesh.halfedges[hi].to.index();
            let from = mesh.halfedges[mesh.halfedges[hi].prev.index()].to.index();
            if let Some(&t) = directed.get(&(to, from)) {
                mesh.halfedges[hi].twin = t;
                mesh.halfedges[t.index()].twin = h;
            } else {
                let b = HalfedgeId::from_index(mesh.halfedges.len());
                mesh.halfedges.push(HalfedgeRecord {
                    to: VertexId::from_index(from),
                    next: HalfedgeId(u32::MAX),
                    prev: HalfedgeId(u32::MAX),
                    twin: h,
                    facet: None,
                    removed: false,
                });
                mesh.halfedges[hi].twin = b;
                if boundary_out.insert(to, b).is_some() {
                    return Err(MeshError::NonManifoldVertex { vertex: VertexId::from_index(to) });
                }
            }
        }
        for bi in interior..mesh.halfedges.len() {
            let to = mesh.halfedges[bi].to.index();
            let next = *boundary_out
                .get(&to)
                .ok_or(MeshError::NonManifoldVertex { vertex: VertexId::from_index(to) })?;
            mesh.halfedges[bi].next = next;
            mesh.halfedges[next.index()].prev = HalfedgeId::from_index(bi);
        }
        mesh.live_halfedges = mesh.halfedges.len();
        mesh.live_facets = mesh.facets.len();

        // outgoing halfedges and single-fan check
        let mut outgoing_count = vec![0usize; n];
        for hi in 0..mesh.halfedges.len() {
            let h = HalfedgeId::from_index(hi);
            let from = mesh.from_vertex(h).index();
            outgoing_count[from] += 1;
            if mesh.vertices[from].halfedge.is_none() || mesh.halfedges[hi].facet.is_none() {
                mesh.vertices[from].halfedge = Some(h);
            }
        }
        for vi in 0..n {
            let v = VertexId::from_index(vi);
            let Some(start) = mesh.vertices[vi].halfedge else {
                return Err(MeshError::IsolatedVertex { vertex: v });
            };
            let mut h = start;
            let mut steps = 0usize;
            loop {
                steps += 1;
                h = mesh.rotate(h);
                if h == start || steps > outgoing_count[vi] {
                    break;
                }
            }
            if steps != outgoing_count[vi] {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
        }

        mesh.area_epsilon = default_area_epsilon(mesh.bbox_diagonal());
        Ok(mesh)
    }

    /// Indexed triangle list of the live elements, with compacted indices.
    pub fn to_triangles(&self) -> (Vec<Point>, Vec<[usize; 3]>) {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut positions = Vec::with_capacity(self.live_vertices);
        for v in self.vertices() {
            remap[v.index()] = positions.len();
            positions.push(self.position(v));
        }
        let triangles = self
            .facets()
            .map(|f| {
                let [a, b, c] = self.facet_vertices(f);
                [remap[a.index()], remap[b.index()], remap[c.index()]]
            })
            .collect();
        (positions, triangles)
    }

    pub fn vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn facet_count(&self) -> usize {
        self.live_facets
    }

    pub fn halfedge_count(&self) -> usize {
        self.live_halfedges
    }

    pub fn edge_count(&self) -> usize {
        self.live_halfedges / 2
    }

    /// Euler characteristic `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.facet_count() as i64
    }

    /// Upper bound (exclusive) of vertex indices ever allocated.
    pub fn vertex_capacity(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_capacity(&self) -> usize {
        self.facets.len()
    }

    pub fn halfedge_capacity(&self) -> usize {
        self.halfedges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.removed)
            .map(|(i, _)| VertexId::from_index(i))
    }

    pub fn facets(&self) -> impl Iterator<Item = FacetId> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.removed)
            .map(|(i, _)| FacetId::from_index(i))
    }

    pub fn halfedges(&self) -> impl Iterator<Item = HalfedgeId> + '_ {
        self.halfedges
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.removed)
            .map(|(i, _)| HalfedgeId::from_index(i))
    }

    /// One halfedge per undirected edge (the one with the smaller handle).
    pub fn edges(&self) -> impl Iterator<Item = HalfedgeId> + '_ {
        self.halfedges().filter(move |&h| h < self.twin(h))
    }

    pub fn boundary_halfedges(&self) -> impl Iterator<Item = HalfedgeId> + '_ {
        self.halfedges().filter(move |&h| self.halfedges[h.index()].facet.is_none())
    }

    pub fn is_vertex_live(&self, v: VertexId) -> bool {
        self.vertices.get(v.index()).is_some_and(|r| !r.removed)
    }

    pub fn is_facet_live(&self, f: FacetId) -> bool {
        self.facets.get(f.index()).is_some_and(|r| !r.removed)
    }

    pub fn is_halfedge_live(&self, h: HalfedgeId) -> bool {
        self.halfedges.get(h.index()).is_some_and(|r| !r.removed)
    }

    #[inline]
    pub fn position(&self, v: VertexId) -> Point {
        self.vertices[v.index()].position
    }

    /// Moves a vertex. Connectivity is untouched.
    #[inline]
    pub fn relocate_vertex(&mut self, v: VertexId, position: Point) {
        self.vertices[v.index()].position = position;
    }

    #[inline]
    pub fn to_vertex(&self, h: HalfedgeId) -> VertexId {
        self.halfedges[h.index()].to
    }

    #[inline]
    pub fn from_vertex(&self, h: HalfedgeId) -> VertexId {
        self.halfedges[self.halfedges[h.index()].twin.index()].to
    }

    #[inline]
    pub fn next(&self, h: HalfedgeId) -> HalfedgeId {
        self.halfedges[h.index()].next
    }

    #[inline]
    pub fn prev(&self, h: HalfedgeId) -> HalfedgeId {
        self.halfedges[h.index()].prev
    }

    #[inline]
    pub fn twin(&self, h: HalfedgeId) -> HalfedgeId {
        self.halfedges[h.index()].twin
    }

    #[inline]
    pub fn facet(&self, h: HalfedgeId) -> Option<FacetId> {
        self.halfedges[h.index()].facet
    }

    #[inline]
    pub fn is_boundary_halfedge(&self, h: HalfedgeId) -> bool {
        self.halfedges[h.index()].facet.is_none()
    }

    /// True when either side of the edge has no facet.
    pub fn is_boundary_edge(&self, h: HalfedgeId) -> bool {
        self.is_boundary_halfedge(h) || self.is_boundary_halfedge(self.twin(h))
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.vertices[v.index()].halfedge.is_some_and(|h| self.is_boundary_halfedge(h))
    }

    pub fn outgoing_halfedge(&self, v: VertexId) -> Option<HalfedgeId> {
        self.vertices[v.index()].halfedge
    }

    /// Next outgoing halfedge around the origin of `h`.
    #[inline]
    fn rotate(&self, h: HalfedgeId) -> HalfedgeId {
        self.twin(self.prev(h))
    }

    /// Outgoing halfedges around `v`, starting at the boundary one if any.
    pub fn outgoing(&self, v: VertexId) -> Outgoing<'_> {
        let start = self.vertices[v.index()].halfedge;
        Outgoing { mesh: self, start, current: start }
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.outgoing(v).map(|h| self.to_vertex(h)).collect()
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.outgoing(v).count()
    }

    /// Facets incident to `v`, in rotation order.
    pub fn vertex_facets(&self, v: VertexId) -> Vec<FacetId> {
        self.outgoing(v).filter_map(|h| self.facet(h)).collect()
    }

    pub fn find_halfedge(&self, from: VertexId, to: VertexId) -> Option<HalfedgeId> {
        self.outgoing(from).find(|&h| self.to_vertex(h) == to)
    }

    pub fn facet_halfedge(&self, f: FacetId) -> HalfedgeId {
        self.facets[f.index()].halfedge
    }

    pub fn facet_halfedges(&self, f: FacetId) -> [HalfedgeId; 3] {
        let h0 = self.facets[f.index()].halfedge;
        let h1 = self.next(h0);
        [h0, h1, self.next(h1)]
    }

    /// Vertices of `f` in orientation order; vertex `k` is the origin of the
    /// `k`-th halfedge of [`Self::facet_halfedges`].
    pub fn facet_vertices(&self, f: FacetId) -> [VertexId; 3] {
        let [h0, h1, h2] = self.facet_halfedges(f);
        [self.to_vertex(h2), self.to_vertex(h0), self.to_vertex(h1)]
    }

    pub fn facet_points(&self, f: FacetId) -> [Point; 3] {
        let [a, b, c] = self.facet_vertices(f);
        [self.position(a), self.position(b), self.position(c)]
    }

    /// Axis aligned bounds of the live vertices.
    pub fn bbox(&self) -> Option<(Point, Point)> {
        let mut it = self.vertices().map(|v| self.position(v));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p))))
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    /// Area below which a facet counts as degenerate.
    pub fn area_epsilon(&self) -> f64 {
        self.area_epsilon
    }

    pub fn set_area_epsilon(&mut self, epsilon: f64) {
        self.area_epsilon = epsilon;
    }

    /// Verifies the structural invariants. Intended for tests and debugging.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut live_h = 0;
        for h in self.halfedges() {
            live_h += 1;
            let r = &self.halfedges[h.index()];
            let t = r.twin;
            if !self.is_halfedge_live(t) || self.twin(t) != h {
                return Err(format!("twin of {h} is inconsistent"));
            }
            if t == h {
                return Err(format!("halfedge {h} is its own twin"));
            }
            if !self.is_halfedge_live(r.next) || self.prev(r.next) != h {
                return Err(format!("next/prev of {h} inconsistent"));
            }
            if self.from_vertex(r.next) != r.to {
                return Err(format!("next of {h} does not start at its head"));
            }
            if !self.is_vertex_live(r.to) {
                return Err(format!("halfedge {h} points to removed vertex"));
            }
            match r.facet {
                Some(f) => {
                    if !self.is_facet_live(f) {
                        return Err(format!("halfedge {h} references removed facet {f}"));
                    }
                    if self.next(self.next(self.next(h))) != h {
                        return Err(format!("facet loop at {h} is not a triangle"));
                    }
                    if self.facet(r.next) != Some(f) {
                        return Err(format!("facet loop at {h} mixes facets"));
                    }
                }
                None => {
                    if self.is_boundary_halfedge(t) {
                        return Err(format!("edge at {h} has no facet on either side"));
                    }
                    if !self.is_boundary_halfedge(r.next) {
                        return Err(format!("boundary halfedge {h} linked to interior {}", r.next));
                    }
                }
            }
        }
        if live_h != self.live_halfedges {
            return Err("live halfedge count mismatch".into());
        }
        let mut live_f = 0;
        for f in self.facets() {
            live_f += 1;
            let h = self.facets[f.index()].halfedge;
            if !self.is_halfedge_live(h) || self.facet(h) != Some(f) {
                return Err(format!("facet {f} has a foreign halfedge"));
            }
            let [a, b, c] = self.facet_vertices(f);
            if a == b || b == c || c == a {
                return Err(format!("facet {f} repeats a vertex"));
            }
        }
        if live_f != self.live_facets {
            return Err("live facet count mismatch".into());
        }
        let mut live_v = 0;
        let mut seen = vec![0usize; self.vertices.len()];
        for h in self.halfedges() {
            seen[self.from_vertex(h).index()] += 1;
        }
        for v in self.vertices() {
            live_v += 1;
            let Some(start) = self.vertices[v.index()].halfedge else {
                return Err(format!("vertex {v} is isolated"));
            };
            if !self.is_halfedge_live(start) || self.from_vertex(start) != v {
                return Err(format!("vertex {v} has a foreign halfedge"));
            }
            let count = self.outgoing(v).take(seen[v.index()] + 1).count();
            if count != seen[v.index()] {
                return Err(format!("vertex {v} is not a single fan"));
            }
            let boundary = self.outgoing(v).filter(|&h| self.is_boundary_halfedge(h)).count();
            if boundary > 1 {
                return Err(format!("vertex {v} lies on several boundary loops"));
            }
            if boundary == 1 && !self.is_boundary_halfedge(start) {
                return Err(format!("vertex {v} does not start at its boundary halfedge"));
            }
        }
        if live_v != self.live_vertices {
            return Err("live vertex count mismatch".into());
        }
        Ok(())
    }

    // --- low level mutation helpers used by the operators ---

    fn push_vertex(&mut self, position: Point) -> VertexId {
        let v = VertexId::from_index(self.vertices.len());
        self.vertices.push(VertexRecord { position, halfedge: None, removed: false });
        self.live_vertices += 1;
        v
    }

    fn push_halfedge(&mut self, to: VertexId, facet: Option<FacetId>) -> HalfedgeId {
        let h = HalfedgeId::from_index(self.halfedges.len());
        self.halfedges.push(HalfedgeRecord {
            to,
            next: h,
            prev: h,
            twin: h,
            facet,
            removed: false,
        });
        self.live_halfedges += 1;
        h
    }

    fn push_facet(&mut self, halfedge: HalfedgeId) -> FacetId {
        let f = FacetId::from_index(self.facets.len());
        self.facets.push(FacetRecord { halfedge, removed: false });
        self.live_facets += 1;
        f
    }

    fn link(&mut self, h: HalfedgeId, next: HalfedgeId) {
        self.halfedges[h.index()].next = next;
        self.halfedges[next.index()].prev = h;
    }

    fn make_twins(&mut self, a: HalfedgeId, b: HalfedgeId) {
        self.halfedges[a.index()].twin = b;
        self.halfedges[b.index()].twin = a;
    }

    fn remove_halfedge(&mut self, h: HalfedgeId) {
        debug_assert!(!self.halfedges[h.index()].removed);
        self.halfedges[h.index()].removed = true;
        self.live_halfedges -= 1;
    }

    fn remove_facet(&mut self, f: FacetId) {
        debug_assert!(!self.facets[f.index()].removed);
        self.facets[f.index()].removed = true;
        self.live_facets -= 1;
    }

    fn remove_vertex(&mut self, v: VertexId) {
        debug_assert!(!self.vertices[v.index()].removed);
        self.vertices[v.index()].removed = true;
        self.vertices[v.index()].halfedge = None;
        self.live_vertices -= 1;
    }

    /// Points the vertex at its outgoing boundary halfedge when it has one.
    fn adjust_outgoing(&mut self, v: VertexId) {
        let Some(start) = self.vertices[v.index()].halfedge else {
            return;
        };
        let mut h = start;
        loop {
            if self.is_boundary_halfedge(h) {
                self.vertices[v.index()].halfedge = Some(h);
                return;
            }
            h = self.rotate(h);
            if h == start {
                return;
            }
        }
    }
}

/// Default degeneracy threshold: `1e-12 * diagonal^2`.
pub fn default_area_epsilon(diagonal: f64) -> f64 {
    1e-12 * diagonal * diagonal
}

/// Circulator over the outgoing halfedges of a vertex.
pub struct Outgoing<'a> {
    mesh: &'a HalfedgeMesh,
    start: Option<HalfedgeId>,
    current: Option<HalfedgeId>,
}

impl Iterator for Outgoing<'_> {
    type Item = HalfedgeId;

    fn next(&mut self) -> Option<HalfedgeId> {
        let h = self.current?;
        let n = self.mesh.rotate(h);
        self.current = if Some(n) == self.start { None } else { Some(n) };
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn tetrahedron_is_closed() {
        let m = shapes::tetrahedron();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.facet_count(), 4);
        assert_eq!(m.edge_count(), 6);
        assert_eq!(m.boundary_halfedges().count(), 0);
        assert_eq!(m.euler_characteristic(), 2);
        m.check_invariants().unwrap();
    }

    #[test]
    fn single_triangle_has_three_boundary_halfedges() {
        let m = HalfedgeMesh::from_triangles(
            vec![Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.boundary_halfedges().count(), 3);
        assert!(m.vertices().all(|v| m.is_boundary_vertex(v)));
        m.check_invariants().unwrap();
    }

    #[test]
    fn rejects_edge_with_three_facets() {
        let p = vec![
            Point::origin(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let err = HalfedgeMesh::from_triangles(p, &[[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge { .. }), "{err}");
    }

    #[test]
    fn rejects_bowtie_vertex() {
        // two triangles touching at vertex 0 only
        let p = vec![
            Point::origin(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
            Point::new(-1.0, -1.0, 0.0),
        ];
        let err = HalfedgeMesh::from_triangles(p, &[[0, 1, 2], [0, 3, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldVertex { vertex: VertexId(0) }), "{err}");
    }

    #[test]
    fn rejects_isolated_vertex() {
        let p = vec![
            Point::origin(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(5.0, 5.0, 5.0),
        ];
        let err = HalfedgeMesh::from_triangles(p, &[[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, MeshError::IsolatedVertex { vertex: VertexId(3) }));
    }

    #[test]
    fn outgoing_visits_whole_fan() {
        let m = shapes::grid(4, 4, 1.0);
        m.check_invariants().unwrap();
        for v in m.vertices() {
            let n = m.neighbors(v);
            let facets = m.vertex_facets(v);
            if m.is_boundary_vertex(v) {
                assert_eq!(n.len(), facets.len() + 1);
            } else {
                assert_eq!(n.len(), facets.len());
            }
        }
    }
}
