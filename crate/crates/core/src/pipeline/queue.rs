//! Priority queues with lazy invalidation.
//!
//! Entries carry the stamp of their item at push time. Re-pushing an item
//! bumps its stamp, so older entries are recognized as stale and dropped
//! when popped.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::geometry::facet_angles;
use crate::mesh::{FacetId, HalfedgeId, HalfedgeMesh};

#[derive(Clone, Copy, Debug)]
struct Entry {
    key: f64,
    item: u32,
    sub: u8,
    stamp: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.item.cmp(&other.item))
            .then(self.sub.cmp(&other.sub))
            .then(self.stamp.cmp(&other.stamp))
    }
}

/// Min-queue over `(key, item, sub)` with per-item stamps.
#[derive(Clone, Debug, Default)]
struct StampedQueue {
    heap: BinaryHeap<Reverse<Entry>>,
    stamps: Vec<u32>,
}

impl StampedQueue {
    /// Invalidates every queued entry of `item` and returns the new stamp.
    fn bump(&mut self, item: u32) -> u32 {
        let i = item as usize;
        if self.stamps.len() <= i {
            self.stamps.resize(i + 1, 0);
        }
        self.stamps[i] = self.stamps[i].wrapping_add(1);
        self.stamps[i]
    }

    fn push(&mut self, key: f64, item: u32, sub: u8, stamp: u32) {
        self.heap.push(Reverse(Entry { key, item, sub, stamp }));
    }

    fn pop(&mut self) -> Option<Entry> {
        while let Some(Reverse(e)) = self.heap.pop() {
            if self.stamps.get(e.item as usize) == Some(&e.stamp) {
                return Some(e);
            }
        }
        None
    }

    fn is_current(&self, e: &Entry) -> bool {
        self.stamps.get(e.item as usize) == Some(&e.stamp)
    }
}

/// A small interior angle waiting for improvement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleEntry {
    /// Angle in radians.
    pub angle: f64,
    pub facet: FacetId,
    /// Corner index in [`HalfedgeMesh::facet_vertices`] order.
    pub corner: usize,
}

/// Interior angles below a threshold, smallest first.
#[derive(Clone, Debug)]
pub struct AngleQueue {
    theta: f64,
    queue: StampedQueue,
}

impl AngleQueue {
    /// Empty queue for angles below `theta` (radians).
    pub fn new(theta: f64) -> Self {
        AngleQueue { theta, queue: StampedQueue::default() }
    }

    /// Queue with every angle of `mesh` below `theta`.
    pub fn from_mesh(mesh: &HalfedgeMesh, theta: f64) -> Self {
        let mut q = AngleQueue::new(theta);
        for f in mesh.facets() {
            q.refresh(mesh, f);
        }
        q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Drops the queued angles of `f` and queues its current small angles.
    pub fn refresh(&mut self, mesh: &HalfedgeMesh, f: FacetId) {
        let stamp = self.queue.bump(f.0);
        if !mesh.is_facet_live(f) {
            return;
        }
        for (corner, angle) in facet_angles(mesh, f).into_iter().enumerate() {
            if angle < self.theta {
                self.queue.push(angle, f.0, corner as u8, stamp);
            }
        }
    }

    /// Smallest current angle.
    pub fn pop(&mut self, mesh: &HalfedgeMesh) -> Option<AngleEntry> {
        loop {
            let e = self.queue.pop()?;
            let facet = FacetId(e.item);
            if mesh.is_facet_live(facet) {
                return Some(AngleEntry { angle: e.key, facet, corner: e.sub as usize });
            }
        }
    }

    /// Number of current entries.
    pub fn len(&self) -> usize {
        self.queue.heap.iter().filter(|Reverse(e)| self.queue.is_current(e)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Edges ordered by a caller supplied priority, keyed by their canonical
/// halfedge.
#[derive(Clone, Debug, Default)]
pub struct EdgeQueue {
    queue: StampedQueue,
}

impl EdgeQueue {
    pub fn new() -> Self {
        EdgeQueue::default()
    }

    /// (Re)queues the edge of `h` with `priority`; earlier entries of the
    /// same edge become stale.
    pub fn push(&mut self, mesh: &HalfedgeMesh, h: HalfedgeId, priority: f64) {
        let h = canonical(mesh, h);
        let stamp = self.queue.bump(h.0);
        self.queue.push(priority, h.0, 0, stamp);
    }

    /// Removes the edge of `h` from the queue.
    pub fn remove(&mut self, mesh: &HalfedgeMesh, h: HalfedgeId) {
        self.queue.bump(canonical(mesh, h).0);
    }

    /// Cheapest live edge, as its canonical halfedge.
    pub fn pop(&mut self, mesh: &HalfedgeMesh) -> Option<HalfedgeId> {
        loop {
            let e = self.queue.pop()?;
            let h = HalfedgeId(e.item);
            if mesh.is_halfedge_live(h) {
                return Some(h);
            }
        }
    }
}

/// The smaller of the two halfedges of an edge.
pub fn canonical(mesh: &HalfedgeMesh, h: HalfedgeId) -> HalfedgeId {
    h.min(mesh.twin(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn angles_come_out_sorted_and_stale_entries_vanish() {
        let mut m = shapes::grid(3, 3, 1.0);
        let q = AngleQueue::from_mesh(&m, 50f64.to_radians());
        // right isosceles triangles: two 45 degree angles each
        assert_eq!(q.len(), 2 * m.facet_count());
        let v = crate::mesh::VertexId(5);
        let p = m.position(v);
        m.relocate_vertex(v, p + crate::mesh::Vector::new(0.2, 0.1, 0.0));
        let mut q = q;
        for f in m.vertex_facets(v) {
            q.refresh(&m, f);
        }
        let mut last = 0.0;
        let mut count = 0;
        while let Some(e) = q.pop(&m) {
            assert!(e.angle >= last);
            let actual = facet_angles(&m, e.facet)[e.corner];
            assert_eq!(actual, e.angle);
            last = e.angle;
            count += 1;
        }
        let expected: usize =
            m.facets().map(|f| facet_angles(&m, f).iter().filter(|&&a| a < 50f64.to_radians()).count()).sum();
        assert_eq!(count, expected);
    }

    #[test]
    fn empty_iff_all_angles_reach_theta() {
        let m = shapes::icosahedron();
        assert!(AngleQueue::from_mesh(&m, 59f64.to_radians()).is_empty());
        assert!(!AngleQueue::from_mesh(&m, 60.5f64.to_radians()).is_empty());
    }

    #[test]
    fn edge_queue_orders_and_dedups() {
        let m = shapes::tetrahedron();
        let mut q = EdgeQueue::new();
        let edges: Vec<_> = m.edges().collect();
        for (i, &h) in edges.iter().enumerate() {
            q.push(&m, h, i as f64);
        }
        // re-push the first edge through its twin with a larger priority
        q.push(&m, m.twin(edges[0]), 100.0);
        q.remove(&m, edges[1]);
        let popped: Vec<_> = std::iter::from_fn(|| q.pop(&m)).collect();
        let mut expected: Vec<_> = edges[2..].to_vec();
        expected.push(canonical(&m, edges[0]));
        assert_eq!(popped, expected);
    }
}
