//! Local operators (edge collapse, edge split, vertex relocation) and the
//! read-only previews used to evaluate them before they are applied.

use std::collections::BTreeSet;

use super::{EdgeKey, FacetId, HalfedgeId, HalfedgeMesh, Point, VertexId};
use crate::error::MeshError;
use crate::geometry;

/// A local operator. Every operator leaves exactly one vertex whose position
/// is a free variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    /// Merge the origin of the halfedge into its head. The head keeps its id.
    Collapse(HalfedgeId),
    /// Insert a vertex on the edge and connect it to the opposite corners.
    Split(HalfedgeId),
    /// Move a vertex.
    Relocate(VertexId),
}

/// A facet of a post-operation patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchFacet {
    /// Id the facet has (or will have) after the operation.
    pub id: FacetId,
    pub vertices: [VertexId; 3],
    /// Pre-operation facet covering the same region, used for orientation
    /// checks. `None` for facets that only exist after a split.
    pub reference: Option<FacetId>,
}

/// Description of the region touched by an operator, computed before the
/// mesh is modified.
///
/// `inner` is the local patch `L` after the operation (every facet whose
/// geometry depends on the moved vertex), `pre_inner` is the set of facets it
/// replaces, and `outer` is the one-ring of facets around `L` whose geometry
/// is unaffected.
#[derive(Clone, Debug)]
pub struct OperatorPreview {
    pub operator: Operator,
    /// Vertex whose position is chosen by the operator.
    pub moved: VertexId,
    /// Vertex that disappears (collapse only).
    pub removed_vertex: Option<VertexId>,
    pub pre_inner: Vec<FacetId>,
    /// Facets of `pre_inner` that disappear (collapse only).
    pub removed_facets: Vec<FacetId>,
    pub inner: Vec<PatchFacet>,
    pub outer: Vec<PatchFacet>,
}

impl OperatorPreview {
    /// Position of a patch vertex when the moved vertex sits at `moved_at`.
    #[inline]
    pub fn position(&self, mesh: &HalfedgeMesh, v: VertexId, moved_at: &Point) -> Point {
        if v == self.moved {
            *moved_at
        } else {
            mesh.position(v)
        }
    }

    pub fn triangle(&self, mesh: &HalfedgeMesh, facet: &PatchFacet, moved_at: &Point) -> [Point; 3] {
        facet.vertices.map(|v| self.position(mesh, v, moved_at))
    }

    /// Facets of the extended patch `L+` before the operation.
    pub fn pre_extended(&self) -> impl Iterator<Item = FacetId> + '_ {
        self.pre_inner.iter().copied().chain(self.outer.iter().map(|f| f.id))
    }

    /// Vertices of the post-operation patch `L`.
    pub fn inner_vertices(&self) -> Vec<VertexId> {
        let set: BTreeSet<VertexId> = self.inner.iter().flat_map(|f| f.vertices).collect();
        set.into_iter().collect()
    }

    /// Vertices of the post-operation extended patch `L+`.
    pub fn extended_vertices(&self) -> Vec<VertexId> {
        let set: BTreeSet<VertexId> =
            self.inner.iter().chain(self.outer.iter()).flat_map(|f| f.vertices).collect();
        set.into_iter().collect()
    }

    /// Smallest interior angle over the post-operation patch.
    pub fn min_angle(&self, mesh: &HalfedgeMesh, moved_at: &Point) -> f64 {
        self.inner
            .iter()
            .map(|f| {
                let [a, b, c] = self.triangle(mesh, f, moved_at);
                geometry::min_angle_or_zero(&a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest interior angle over the facets replaced by the operation.
    pub fn pre_min_angle(&self, mesh: &HalfedgeMesh) -> f64 {
        self.pre_inner
            .iter()
            .map(|&f| {
                let [a, b, c] = mesh.facet_points(f);
                geometry::min_angle_or_zero(&a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// True when some post-operation facet is degenerate or flips relative
    /// to the facet it replaces.
    pub fn creates_foldover(&self, mesh: &HalfedgeMesh, moved_at: &Point) -> bool {
        let eps = mesh.area_epsilon();
        self.inner.iter().any(|f| {
            let [a, b, c] = self.triangle(mesh, f, moved_at);
            let after = (b - a).cross(&(c - a));
            if 0.5 * after.norm() < eps {
                return true;
            }
            match f.reference {
                Some(r) => {
                    let [p, q, s] = mesh.facet_points(r);
                    let before = (q - p).cross(&(s - p));
                    before.dot(&after) < 0.0
                }
                None => false,
            }
        })
    }
}

/// A set of facets with its surrounding one-ring.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalPatch {
    pub inner: Vec<FacetId>,
    pub outer: Vec<FacetId>,
}

impl LocalPatch {
    pub fn extended(&self) -> impl Iterator<Item = FacetId> + '_ {
        self.inner.iter().chain(self.outer.iter()).copied()
    }
}

impl HalfedgeMesh {
    /// Facets incident to any of `seeds`, plus the facets sharing a vertex
    /// with them.
    pub fn local_patch(&self, seeds: &[VertexId]) -> LocalPatch {
        let inner: BTreeSet<FacetId> = seeds.iter().flat_map(|&v| self.vertex_facets(v)).collect();
        let outer = self.ring_around(&inner);
        LocalPatch { inner: inner.into_iter().collect(), outer }
    }

    /// Facets sharing a vertex with `facets`, excluding `facets` themselves.
    fn ring_around(&self, facets: &BTreeSet<FacetId>) -> Vec<FacetId> {
        let verts: BTreeSet<VertexId> = facets.iter().flat_map(|&f| self.facet_vertices(f)).collect();
        let ring: BTreeSet<FacetId> = verts
            .iter()
            .flat_map(|&v| self.vertex_facets(v))
            .filter(|f| !facets.contains(f))
            .collect();
        ring.into_iter().collect()
    }

    /// Simplicial link condition for collapsing the edge of `h`: the common
    /// neighbors of its endpoints are exactly the opposite corners of the
    /// incident facets, and the links share no edge.
    pub fn link_condition(&self, h: HalfedgeId) -> bool {
        let a = self.from_vertex(h);
        let b = self.to_vertex(h);
        let na: BTreeSet<VertexId> = self.neighbors(a).into_iter().collect();
        let nb: BTreeSet<VertexId> = self.neighbors(b).into_iter().collect();
        let common: BTreeSet<VertexId> = na.intersection(&nb).copied().collect();
        let apexes: BTreeSet<VertexId> = [h, self.twin(h)]
            .into_iter()
            .filter(|&x| !self.is_boundary_halfedge(x))
            .map(|x| self.to_vertex(self.next(x)))
            .collect();
        if common != apexes {
            return false;
        }
        let opposite_edges = |v: VertexId| -> BTreeSet<EdgeKey> {
            self.outgoing(v)
                .filter(|&x| !self.is_boundary_halfedge(x))
                .map(|x| EdgeKey::new(self.to_vertex(x), self.to_vertex(self.next(x))))
                .collect()
        };
        opposite_edges(a).is_disjoint(&opposite_edges(b))
    }

    /// Link condition plus the boundary restrictions: an interior edge
    /// joining two boundary vertices cannot collapse, and neither can an
    /// edge of a facet whose two other edges are both on the boundary.
    pub fn is_collapse_legal(&self, h: HalfedgeId) -> bool {
        if !self.is_halfedge_live(h) {
            return false;
        }
        let a = self.from_vertex(h);
        let b = self.to_vertex(h);
        if self.is_boundary_vertex(a) && self.is_boundary_vertex(b) && !self.is_boundary_edge(h) {
            return false;
        }
        for x in [h, self.twin(h)] {
            if self.is_boundary_halfedge(x) {
                continue;
            }
            let n = self.next(x);
            let p = self.prev(x);
            if self.is_boundary_edge(n) && self.is_boundary_edge(p) {
                return false;
            }
        }
        self.link_condition(h)
    }

    /// Computes the patch description of an operator without touching the mesh.
    pub fn preview(&self, op: Operator) -> Result<OperatorPreview, MeshError> {
        match op {
            Operator::Collapse(h) => self.preview_collapse(h),
            Operator::Split(h) => self.preview_split(h),
            Operator::Relocate(v) => Ok(self.preview_relocate(v)),
        }
    }

    fn preview_collapse(&self, h: HalfedgeId) -> Result<OperatorPreview, MeshError> {
        if !self.is_halfedge_live(h) {
            return Err(MeshError::StaleHandle(h));
        }
        if !self.is_collapse_legal(h) {
            return Err(MeshError::LinkCondition(h));
        }
        let a = self.from_vertex(h);
        let b = self.to_vertex(h);
        let pre: BTreeSet<FacetId> =
            self.vertex_facets(a).into_iter().chain(self.vertex_facets(b)).collect();
        let removed: Vec<FacetId> = [self.facet(h), self.facet(self.twin(h))].into_iter().flatten().collect();
        let inner: Vec<PatchFacet> = pre
            .iter()
            .filter(|f| !removed.contains(f))
            .map(|&f| PatchFacet {
                id: f,
                vertices: self.facet_vertices(f).map(|v| if v == a { b } else { v }),
                reference: Some(f),
            })
            .collect();
        let outer = self.outer_ring(&pre);
        let mut removed_facets = removed;
        removed_facets.sort();
        Ok(OperatorPreview {
            operator: Operator::Collapse(h),
            moved: b,
            removed_vertex: Some(a),
            pre_inner: pre.into_iter().collect(),
            removed_facets,
            inner,
            outer,
        })
    }

    fn preview_split(&self, h: HalfedgeId) -> Result<OperatorPreview, MeshError> {
        if !self.is_halfedge_live(h) {
            return Err(MeshError::StaleHandle(h));
        }
        let o = self.twin(h);
        let a = self.from_vertex(h);
        let b = self.to_vertex(h);
        let m = VertexId::from_index(self.vertex_capacity());
        let mut next_facet = self.facet_capacity();
        let mut pre = BTreeSet::new();
        let mut inner = Vec::new();
        if let Some(f) = self.facet(h) {
            let c = self.to_vertex(self.next(h));
            pre.insert(f);
            inner.push(PatchFacet { id: f, vertices: [a, m, c], reference: Some(f) });
            inner.push(PatchFacet {
                id: FacetId::from_index(next_facet),
                vertices: [m, b, c],
                reference: Some(f),
            });
            next_facet += 1;
        }
        if let Some(g) = self.facet(o) {
            let d = self.to_vertex(self.next(o));
            pre.insert(g);
            inner.push(PatchFacet { id: g, vertices: [b, m, d], reference: Some(g) });
            inner.push(PatchFacet {
                id: FacetId::from_index(next_facet),
                vertices: [m, a, d],
                reference: Some(g),
            });
        }
        inner.sort_by_key(|f| f.id);
        let outer = self.outer_ring(&pre);
        Ok(OperatorPreview {
            operator: Operator::Split(h),
            moved: m,
            removed_vertex: None,
            pre_inner: pre.into_iter().collect(),
            removed_facets: Vec::new(),
            inner,
            outer,
        })
    }

    fn preview_relocate(&self, v: VertexId) -> OperatorPreview {
        let pre: BTreeSet<FacetId> = self.vertex_facets(v).into_iter().collect();
        let inner = pre
            .iter()
            .map(|&f| PatchFacet { id: f, vertices: self.facet_vertices(f), reference: Some(f) })
            .collect();
        let outer = self.outer_ring(&pre);
        OperatorPreview {
            operator: Operator::Relocate(v),
            moved: v,
            removed_vertex: None,
            pre_inner: pre.into_iter().collect(),
            removed_facets: Vec::new(),
            inner,
            outer,
        }
    }

    fn outer_ring(&self, pre: &BTreeSet<FacetId>) -> Vec<PatchFacet> {
        self.ring_around(pre)
            .into_iter()
            .map(|f| PatchFacet { id: f, vertices: self.facet_vertices(f), reference: Some(f) })
            .collect()
    }

    /// Applies an operator, placing the moved vertex at `position`, and
    /// returns the moved vertex. The result matches [`Self::preview`].
    pub fn apply(&mut self, op: Operator, position: Point) -> Result<VertexId, MeshError> {
        match op {
            Operator::Collapse(h) => self.collapse_edge(h, position),
            Operator::Split(h) => self.split_edge(h, position),
            Operator::Relocate(v) => {
                self.relocate_vertex(v, position);
                Ok(v)
            }
        }
    }

    /// Collapses the origin of `h` into its head and moves the head to
    /// `position`. Fails without modifying the mesh when the collapse would
    /// break manifoldness.
    pub fn collapse_edge(&mut self, h: HalfedgeId, position: Point) -> Result<VertexId, MeshError> {
        if !self.is_halfedge_live(h) {
            return Err(MeshError::StaleHandle(h));
        }
        if !self.is_collapse_legal(h) {
            return Err(MeshError::LinkCondition(h));
        }
        let hn = self.next(h);
        let hp = self.prev(h);
        let o = self.twin(h);
        let on = self.next(o);
        let op = self.prev(o);
        let fh = self.facet(h);
        let fo = self.facet(o);
        let b = self.to_vertex(h);
        let a = self.to_vertex(o);
        let apex_h = self.to_vertex(hn);
        let apex_o = self.to_vertex(on);

        let incoming: Vec<HalfedgeId> = self.outgoing(a).map(|x| self.twin(x)).collect();
        for x in incoming {
            self.halfedges[x.index()].to = b;
        }
        self.link(hp, hn);
        self.link(op, on);
        if let Some(f) = fh {
            self.facets[f.index()].halfedge = hn;
        }
        if let Some(f) = fo {
            self.facets[f.index()].halfedge = on;
        }
        self.vertices[b.index()].halfedge = Some(hn);
        self.remove_halfedge(h);
        self.remove_halfedge(o);
        self.remove_vertex(a);

        if self.next(self.next(hn)) == hn {
            self.remove_loop(self.next(hn));
        }
        if self.next(self.next(on)) == on {
            self.remove_loop(on);
        }

        self.relocate_vertex(b, position);
        for v in [b, apex_h, apex_o] {
            self.adjust_outgoing(v);
        }
        Ok(b)
    }

    /// Removes a two-halfedge loop left behind by a collapse. The second
    /// halfedge of the loop takes the place of the first one's twin.
    fn remove_loop(&mut self, h0: HalfedgeId) {
        let h1 = self.next(h0);
        let o0 = self.twin(h0);
        let o1 = self.twin(h1);
        let v0 = self.to_vertex(h0);
        let v1 = self.to_vertex(h1);
        let fh = self.facet(h0);
        let fo = self.facet(o0);
        debug_assert!(self.next(h1) == h0 && h1 != o0);

        let o0n = self.next(o0);
        let o0p = self.prev(o0);
        self.link(h1, o0n);
        self.link(o0p, h1);
        self.halfedges[h1.index()].facet = fo;
        self.vertices[v0.index()].halfedge = Some(h1);
        self.vertices[v1.index()].halfedge = Some(o1);
        if let Some(f) = fo {
            if self.facets[f.index()].halfedge == o0 {
                self.facets[f.index()].halfedge = h1;
            }
        }
        if let Some(f) = fh {
            self.remove_facet(f);
        }
        self.remove_halfedge(h0);
        self.remove_halfedge(o0);
        let _ = o1;
    }

    /// Splits the edge of `h` with a new vertex at `position`. The new
    /// vertex and facets receive the next free ids: first the facet on the
    /// side of `h`, then the one on the side of its twin.
    pub fn split_edge(&mut self, h: HalfedgeId, position: Point) -> Result<VertexId, MeshError> {
        if !self.is_halfedge_live(h) {
            return Err(MeshError::StaleHandle(h));
        }
        let o = self.twin(h);
        let b = self.to_vertex(h);
        let a = self.to_vertex(o);
        let f = self.facet(h);
        let g = self.facet(o);
        let m = self.push_vertex(position);

        // a -> m stays `h`, m -> b is new; b -> m stays `o`, m -> a is new
        let h2 = self.push_halfedge(b, None);
        let o2 = self.push_halfedge(a, None);
        self.halfedges[h.index()].to = m;
        self.halfedges[o.index()].to = m;
        self.make_twins(h, o2);
        self.make_twins(o, h2);

        if let Some(f) = f {
            let hn = self.next(h);
            let hp = self.prev(h);
            let c = self.to_vertex(hn);
            let f2 = self.push_facet(h2);
            let e1 = self.push_halfedge(c, Some(f)); // m -> c
            let e2 = self.push_halfedge(m, Some(f2)); // c -> m
            self.make_twins(e1, e2);
            self.halfedges[h2.index()].facet = Some(f2);
            self.halfedges[hn.index()].facet = Some(f2);
            self.link(h, e1);
            self.link(e1, hp);
            self.link(h2, hn);
            self.link(hn, e2);
            self.link(e2, h2);
            self.facets[f.index()].halfedge = h;
        } else {
            let hn = self.next(h);
            self.link(h, h2);
            self.link(h2, hn);
        }

        if let Some(g) = g {
            let on = self.next(o);
            let op = self.prev(o);
            let d = self.to_vertex(on);
            let g2 = self.push_facet(o2);
            let e3 = self.push_halfedge(d, Some(g)); // m -> d
            let e4 = self.push_halfedge(m, Some(g2)); // d -> m
            self.make_twins(e3, e4);
            self.halfedges[o2.index()].facet = Some(g2);
            self.halfedges[on.index()].facet = Some(g2);
            self.link(o, e3);
            self.link(e3, op);
            self.link(o2, on);
            self.link(on, e4);
            self.link(e4, o2);
            self.facets[g.index()].halfedge = o;
        } else {
            let on = self.next(o);
            self.link(o, o2);
            self.link(o2, on);
        }

        self.vertices[m.index()].halfedge = Some(if f.is_none() {
            h2
        } else if g.is_none() {
            o2
        } else {
            h2
        });
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn facet_sets(mesh: &HalfedgeMesh) -> Vec<(FacetId, [VertexId; 3])> {
        mesh.facets().map(|f| (f, canonical(mesh.facet_vertices(f)))).collect()
    }

    fn canonical(v: [VertexId; 3]) -> [VertexId; 3] {
        // rotate so the smallest id comes first, keeping orientation
        let k = (0..3).min_by_key(|&i| v[i]).unwrap();
        [v[k], v[(k + 1) % 3], v[(k + 2) % 3]]
    }

    fn check_preview_matches(mesh: &HalfedgeMesh, op: Operator) {
        let preview = mesh.preview(op).unwrap();
        let mut after = mesh.clone();
        let p = Point::new(0.123, 0.456, 0.789);
        let moved = after.apply(op, p).unwrap();
        after.check_invariants().unwrap();
        assert_eq!(moved, preview.moved);
        assert_eq!(after.position(moved), p);
        for f in &preview.inner {
            assert!(after.is_facet_live(f.id));
            assert_eq!(canonical(after.facet_vertices(f.id)), canonical(f.vertices), "facet {}", f.id);
        }
        for f in &preview.outer {
            assert_eq!(after.facet_vertices(f.id), f.vertices);
        }
        for f in &preview.removed_facets {
            assert!(!after.is_facet_live(*f));
        }
        // facets depending on the moved vertex are exactly the inner ones
        let star: BTreeSet<FacetId> = after.vertex_facets(moved).into_iter().collect();
        let inner: BTreeSet<FacetId> = preview.inner.iter().map(|f| f.id).collect();
        assert_eq!(star, inner);
    }

    #[test]
    fn collapse_interior_edge_on_grid() {
        let mut m = shapes::grid(4, 4, 1.0);
        let v = VertexId(6);
        assert!(!m.is_boundary_vertex(v));
        let h = m.outgoing(v).find(|&h| !m.is_boundary_vertex(m.to_vertex(h))).unwrap();
        check_preview_matches(&m, Operator::Collapse(h));
        let (nv, nf) = (m.vertex_count(), m.facet_count());
        m.collapse_edge(h, Point::origin()).unwrap();
        assert_eq!(m.vertex_count(), nv - 1);
        assert_eq!(m.facet_count(), nf - 2);
        m.check_invariants().unwrap();
    }

    #[test]
    fn collapse_boundary_edge_on_grid() {
        let m = shapes::grid(4, 4, 1.0);
        let h = m.boundary_halfedges().next().unwrap();
        // make sure no ear is involved
        let h = if m.is_collapse_legal(h) { h } else { m.next(h) };
        assert!(m.is_collapse_legal(h));
        check_preview_matches(&m, Operator::Collapse(h));
        check_preview_matches(&m, Operator::Collapse(m.twin(h)));
    }

    #[test]
    fn tetrahedron_collapse_rejected() {
        let m = shapes::tetrahedron();
        for h in m.halfedges() {
            assert!(!m.link_condition(h));
            assert!(m.clone().collapse_edge(h, Point::origin()).is_err());
        }
    }

    #[test]
    fn single_triangle_collapse_rejected() {
        let mut m = HalfedgeMesh::from_triangles(
            vec![Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        for h in m.halfedges().collect::<Vec<_>>() {
            assert!(m.link_condition(h));
            assert!(!m.is_collapse_legal(h));
        }
        let h = m.halfedges().next().unwrap();
        assert!(matches!(m.collapse_edge(h, Point::origin()), Err(MeshError::LinkCondition(_))));
        m.check_invariants().unwrap();
    }

    #[test]
    fn split_interior_and_boundary_edges() {
        let m = shapes::grid(3, 3, 1.0);
        for h in m.halfedges().collect::<Vec<_>>() {
            check_preview_matches(&m, Operator::Split(h));
        }
    }

    #[test]
    fn split_counts() {
        let mut m = shapes::octahedron();
        let h = m.halfedges().next().unwrap();
        let (v, f, e) = (m.vertex_count(), m.facet_count(), m.edge_count());
        let mid = nalgebra::center(&m.position(m.from_vertex(h)), &m.position(m.to_vertex(h)));
        let new = m.split_edge(h, mid).unwrap();
        assert_eq!(new, VertexId(v as u32));
        assert_eq!((m.vertex_count(), m.facet_count(), m.edge_count()), (v + 1, f + 2, e + 3));
        assert_eq!(m.valence(new), 4);
        m.check_invariants().unwrap();
    }

    #[test]
    fn relocation_preview_is_star() {
        let m = shapes::icosahedron();
        let v = VertexId(0);
        let p = m.preview(Operator::Relocate(v)).unwrap();
        assert_eq!(p.inner.len(), 5);
        assert_eq!(p.outer.len(), 10);
        assert_eq!(p.pre_inner.len(), 5);
        check_preview_matches(&m, Operator::Relocate(v));
    }

    #[test]
    fn collapse_on_closed_mesh_preserves_euler() {
        let mut m = shapes::icosphere(1);
        let chi = m.euler_characteristic();
        let mut done = 0;
        let hs: Vec<_> = m.halfedges().collect();
        for h in hs {
            if m.is_halfedge_live(h) && m.is_collapse_legal(h) {
                let mid = nalgebra::center(&m.position(m.from_vertex(h)), &m.position(m.to_vertex(h)));
                let pv = m.preview(Operator::Collapse(h)).unwrap();
                let v = m.collapse_edge(h, mid).unwrap();
                assert_eq!(v, pv.moved);
                m.check_invariants().unwrap();
                assert_eq!(m.euler_characteristic(), chi);
                done += 1;
            }
        }
        assert!(done > 5);
        assert!(m.vertex_count() >= 4);
    }

    #[test]
    fn foldover_detected() {
        let m = shapes::grid(3, 3, 1.0);
        let v = VertexId(5);
        assert!(!m.is_boundary_vertex(v));
        let p = m.preview(Operator::Relocate(v)).unwrap();
        assert!(!p.creates_foldover(&m, &m.position(v)));
        let far = m.position(v) + nalgebra::Vector3::new(5.0, 5.0, 0.0);
        assert!(p.creates_foldover(&m, &far));
        let _ = facet_sets(&m);
    }
}
