//! Triangle measures, closest-point queries and spatial search.

mod aabb;

pub use aabb::{AabbTree, TreeHit};

use crate::error::GeometryError;
use crate::mesh::{FacetId, HalfedgeId, HalfedgeMesh, Point, Vector};

/// Interior angles (radians) at the three corners of a triangle.
pub fn triangle_angles(a: &Point, b: &Point, c: &Point) -> Result<[f64; 3], GeometryError> {
    let ab = b - a;
    let ac = c - a;
    let bc = c - b;
    let twice_area = ab.cross(&ac).norm();
    let scale = ab.norm_squared().max(ac.norm_squared()).max(bc.norm_squared());
    if !(twice_area > 1e-14 * scale) {
        return Err(GeometryError::DegenerateTriangle);
    }
    Ok(corner_angles(&ab, &ac, &bc, twice_area))
}

fn corner_angles(ab: &Vector, ac: &Vector, bc: &Vector, twice_area: f64) -> [f64; 3] {
    // atan2 of |cross| and dot is accurate for angles near 0 and pi
    let alpha = twice_area.atan2(ab.dot(ac));
    let beta = twice_area.atan2(-ab.dot(bc));
    let gamma = twice_area.atan2(ac.dot(bc));
    [alpha, beta, gamma]
}

/// Smallest interior angle, or 0 for a degenerate triangle.
pub fn min_angle_or_zero(a: &Point, b: &Point, c: &Point) -> f64 {
    triangle_angles(a, b, c).map_or(0.0, |t| t[0].min(t[1]).min(t[2]))
}

/// Angles of a mesh facet, in the order of [`HalfedgeMesh::facet_vertices`].
pub fn facet_angles(mesh: &HalfedgeMesh, f: FacetId) -> [f64; 3] {
    let [a, b, c] = mesh.facet_points(f);
    triangle_angles(&a, &b, &c).unwrap_or([0.0; 3])
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unit normal; zero for a degenerate triangle.
pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vector {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vector::zeros()
    }
}

pub fn facet_area(mesh: &HalfedgeMesh, f: FacetId) -> f64 {
    let [a, b, c] = mesh.facet_points(f);
    triangle_area(&a, &b, &c)
}

pub fn facet_normal(mesh: &HalfedgeMesh, f: FacetId) -> Vector {
    let [a, b, c] = mesh.facet_points(f);
    triangle_normal(&a, &b, &c)
}

/// Angle between the normals of the two facets of an edge: 0 for coplanar
/// facets, growing towards pi as the surface folds onto itself.
pub fn dihedral_angle(mesh: &HalfedgeMesh, h: HalfedgeId) -> Result<f64, GeometryError> {
    let (Some(f), Some(g)) = (mesh.facet(h), mesh.facet(mesh.twin(h))) else {
        return Err(GeometryError::BoundaryEdge);
    };
    let [a, b, c] = mesh.facet_points(f);
    let [p, q, r] = mesh.facet_points(g);
    let n1 = (b - a).cross(&(c - a));
    let n2 = (q - p).cross(&(r - p));
    if n1.norm_squared() == 0.0 || n2.norm_squared() == 0.0 {
        return Err(GeometryError::DegenerateTriangle);
    }
    Ok(n1.cross(&n2).norm().atan2(n1.dot(&n2)))
}

/// Shape quality `2*sqrt(3) * S / (p * h)` with `p` the half-perimeter and
/// `h` the longest edge. Equilateral triangles score 1.
pub fn triangle_quality(a: &Point, b: &Point, c: &Point) -> f64 {
    let la = (b - c).norm();
    let lb = (a - c).norm();
    let lc = (a - b).norm();
    let p = 0.5 * (la + lb + lc);
    let h = la.max(lb).max(lc);
    if p * h == 0.0 {
        return 0.0;
    }
    2.0 * 3f64.sqrt() * triangle_area(a, b, c) / (p * h)
}

/// Diagonal length of the axis aligned bounds of a point set.
pub fn bbox_diagonal<'a>(points: impl IntoIterator<Item = &'a Point>) -> f64 {
    let mut it = points.into_iter();
    let Some(first) = it.next() else {
        return 0.0;
    };
    let (lo, hi) = it.fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    (hi - lo).norm()
}

/// Closest point on a triangle with its barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPoint {
    pub point: Point,
    pub bary: [f64; 3],
    pub distance_squared: f64,
}

/// Closest point on triangle `abc` to `p` (Ericson's region test).
pub fn closest_point_on_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> ClosestPoint {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    let finish = |bary: [f64; 3]| {
        let point = Point::from(a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2]);
        ClosestPoint { point, bary, distance_squared: (p - point).norm_squared() }
    };
    if d1 <= 0.0 && d2 <= 0.0 {
        return finish([1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return finish([0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return finish([1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return finish([0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return finish([1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish([0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    finish([1.0 - v - w, v, w])
}

/// Point with barycentric coordinates `bary` on triangle `t`.
#[inline]
pub fn barycentric_point(t: &[Point; 3], bary: &[f64; 3]) -> Point {
    Point::from(t[0].coords * bary[0] + t[1].coords * bary[1] + t[2].coords * bary[2])
}
