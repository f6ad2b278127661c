//! Bounding volume hierarchy over triangles for exact closest-point queries.

use super::{closest_point_on_triangle, Point};
use crate::mesh::{FacetId, HalfedgeMesh};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Node {
    lo: Point,
    hi: Point,
    /// Leaf: first triangle index. Inner: index of the right child (the left
    /// child always follows its parent).
    start: u32,
    /// Number of triangles in a leaf, 0 for inner nodes.
    count: u32,
}

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeHit {
    /// Payload of the triangle that was hit.
    pub id: u32,
    pub point: Point,
    pub bary: [f64; 3],
    pub distance: f64,
}

impl TreeHit {
    pub fn facet(&self) -> FacetId {
        FacetId(self.id)
    }
}

/// Static AABB tree over a triangle soup. Queries return the exact closest
/// point; ties are resolved by traversal order, which is deterministic.
#[derive(Clone, Debug)]
pub struct AabbTree {
    nodes: Vec<Node>,
    triangles: Vec<[Point; 3]>,
    ids: Vec<u32>,
}

impl AabbTree {
    /// Builds a tree over `(triangle, payload)` pairs.
    pub fn new(items: Vec<([Point; 3], u32)>) -> Self {
        let mut order: Vec<(Point, usize)> = items
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0), i))
            .collect();
        let mut tree = AabbTree {
            nodes: Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1),
            triangles: Vec::with_capacity(items.len()),
            ids: Vec::with_capacity(items.len()),
        };
        if !items.is_empty() {
            tree.build(&items, &mut order);
        }
        tree
    }

    /// Tree over the live facets of a mesh, with facet ids as payload.
    pub fn from_mesh(mesh: &HalfedgeMesh) -> Self {
        Self::new(mesh.facets().map(|f| (mesh.facet_points(f), f.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn build(&mut self, items: &[([Point; 3], u32)], order: &mut [(Point, usize)]) {
        let node_index = self.nodes.len();
        let (lo, hi) = order
            .iter()
            .flat_map(|&(_, i)| items[i].0.iter())
            .fold((Point::from([f64::INFINITY; 3]), Point::from([f64::NEG_INFINITY; 3])), |(lo, hi), p| {
                (lo.inf(p), hi.sup(p))
            });
        if order.len() <= LEAF_SIZE {
            self.nodes.push(Node { lo, hi, start: self.triangles.len() as u32, count: order.len() as u32 });
            for &(_, i) in order.iter() {
                self.triangles.push(items[i].0);
                self.ids.push(items[i].1);
            }
            return;
        }
        self.nodes.push(Node { lo, hi, start: 0, count: 0 });
        let (clo, chi) = order
            .iter()
            .fold((order[0].0, order[0].0), |(lo, hi), (c, _)| (lo.inf(c), hi.sup(c)));
        let extent = chi - clo;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]).then(a.1.cmp(&b.1)));
        let (left, right) = order.split_at_mut(mid);
        self.build(items, left);
        self.nodes[node_index].start = self.nodes.len() as u32;
        self.build(items, right);
    }

    /// Closest point on any triangle to `p`, or `None` for an empty tree.
    pub fn closest(&self, p: &Point) -> Option<TreeHit> {
        self.closest_within(p, f64::INFINITY)
    }

    /// Closest point at squared distance below `bound2`, if any.
    pub fn closest_within(&self, p: &Point, bound2: f64) -> Option<TreeHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best2 = bound2;
        let mut best: Option<(usize, [f64; 3], Point)> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, box_distance2(&self.nodes[0], p)));
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best2 || (best.is_some() && d2 >= best2) {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let s = node.start as usize;
                for ti in s..s + node.count as usize {
                    let [a, b, c] = &self.triangles[ti];
                    let r = closest_point_on_triangle(p, a, b, c);
                    if r.distance_squared < best2 || (best.is_none() && r.distance_squared <= best2) {
                        best2 = r.distance_squared;
                        best = Some((ti, r.bary, r.point));
                    }
                }
                continue;
            }
            let l = ni + 1;
            let r = node.start as usize;
            let dl = box_distance2(&self.nodes[l], p);
            let dr = box_distance2(&self.nodes[r], p);
            // push the farther child first so the nearer one is visited first
            if dl <= dr {
                stack.push((r, dr));
                stack.push((l, dl));
            } else {
                stack.push((l, dl));
                stack.push((r, dr));
            }
        }
        best.map(|(ti, bary, point)| TreeHit { id: self.ids[ti], point, bary, distance: best2.sqrt() })
    }

    /// True when some triangle lies within `radius` of `p`.
    pub fn any_within(&self, p: &Point, radius: f64) -> bool {
        self.closest_within(p, radius * radius).is_some()
    }
}

fn box_distance2(node: &Node, p: &Point) -> f64 {
    let mut d = 0.0;
    for k in 0..3 {
        let v = p[k];
        if v < node.lo[k] {
            d += (node.lo[k] - v).powi(2);
        } else if v > node.hi[k] {
            d += (v - node.hi[k]).powi(2);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use proptest::prelude::*;

    fn brute(mesh: &HalfedgeMesh, p: &Point) -> f64 {
        mesh.facets()
            .map(|f| {
                let [a, b, c] = mesh.facet_points(f);
                closest_point_on_triangle(p, &a, &b, &c).distance_squared
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    #[test]
    fn empty_tree() {
        let t = AabbTree::new(Vec::new());
        assert!(t.closest(&Point::origin()).is_none());
    }

    #[test]
    fn hit_lies_on_reported_facet() {
        let m = shapes::torus(24, 12, 1.0, 0.3);
        let tree = AabbTree::from_mesh(&m);
        let p = Point::new(0.3, 1.1, -0.2);
        let hit = tree.closest(&p).unwrap();
        let [a, b, c] = m.facet_points(hit.facet());
        let r = closest_point_on_triangle(&p, &a, &b, &c);
        assert!((r.distance_squared.sqrt() - hit.distance).abs() < 1e-15);
    }

    #[test]
    fn bounded_query_respects_bound() {
        let m = shapes::icosphere(2);
        let tree = AabbTree::from_mesh(&m);
        let p = Point::new(0.0, 0.0, 3.0);
        assert!(tree.closest_within(&p, 1.0).is_none());
        assert!(tree.any_within(&p, 2.01));
    }

    proptest! {
        #[test]
        fn matches_brute_force(x in -2.0..2.0f64, y in -2.0..2.0f64, z in -2.0..2.0f64) {
            let m = shapes::torus(16, 8, 1.0, 0.35);
            let tree = AabbTree::from_mesh(&m);
            let p = Point::new(x, y, z);
            let hit = tree.closest(&p).unwrap();
            let expected = brute(&m, &p);
            prop_assert!((hit.distance - expected).abs() <= 1e-12, "{} vs {}", hit.distance, expected);
        }
    }
}
