//! Procedural test surfaces.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::mesh::{HalfedgeMesh, Point};

fn build(positions: Vec<Point>, triangles: &[[usize; 3]]) -> HalfedgeMesh {
    HalfedgeMesh::from_triangles(positions, triangles).expect("procedural surface is manifold")
}

pub fn tetrahedron() -> HalfedgeMesh {
    build(
        vec![
            Point::new(1.0, 1.0, 1.0),
            Point::new(1.0, -1.0, -1.0),
            Point::new(-1.0, 1.0, -1.0),
            Point::new(-1.0, -1.0, 1.0),
        ],
        &[[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]],
    )
}

pub fn octahedron() -> HalfedgeMesh {
    build(
        vec![
            Point::new(1.0, 0.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(0.0, 0.0, -1.0),
        ],
        &[[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]],
    )
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> HalfedgeMesh {
    let (positions, triangles) = icosahedron_data();
    build(positions, &triangles)
}

fn icosahedron_data() -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let positions = raw.iter().map(|c| Point::from(nalgebra::Vector3::from(*c).normalize())).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (positions, triangles)
}

/// Unit sphere from `level` rounds of 1-to-4 subdivision of the icosahedron.
/// Level 4 has 2562 vertices.
pub fn icosphere(level: u32) -> HalfedgeMesh {
    let (mut positions, mut triangles) = icosahedron_data();
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoints.entry(key).or_insert_with(|| {
                    let p = nalgebra::center(&positions[a], &positions[b]);
                    positions.push(Point::from(p.coords.normalize()));
                    positions.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([t[1], mid[1], mid[0]]);
            next.push([t[2], mid[2], mid[1]]);
            next.push(mid);
        }
        triangles = next;
    }
    build(positions, &triangles)
}

/// Axis aligned cube `[-0.5, 0.5]^3` with every face split into an `n x n`
/// grid of quads, each cut along a diagonal. Has `6 n^2 + 2` vertices.
pub fn cube(n: usize) -> HalfedgeMesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |c: [usize; 3], positions: &mut Vec<Point>| -> usize {
        *index.entry(c).or_insert_with(|| {
            positions.push(Point::new(
                c[0] as f64 / n as f64 - 0.5,
                c[1] as f64 / n as f64 - 0.5,
                c[2] as f64 / n as f64 - 0.5,
            ));
            positions.len() - 1
        })
    };
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut c = [0usize; 3];
                        c[axis] = side;
                        c[u] = i + di;
                        c[v] = j + dj;
                        c
                    };
                    let q = [
                        vid(corner(0, 0), &mut positions),
                        vid(corner(1, 0), &mut positions),
                        vid(corner(1, 1), &mut positions),
                        vid(corner(0, 1), &mut positions),
                    ];
                    // (u, v, axis) is right handed, so q is counter-clockwise seen from +axis
                    if side == n {
                        triangles.push([q[0], q[1], q[2]]);
                        triangles.push([q[0], q[2], q[3]]);
                    } else {
                        triangles.push([q[0], q[2], q[1]]);
                        triangles.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
    }
    build(positions, &triangles)
}

/// Flat `cols x rows` grid of square cells of side `cell` in the plane z = 0.
/// Vertex `(i, j)` has index `j * (cols + 1) + i`.
pub fn grid(cols: usize, rows: usize, cell: f64) -> HalfedgeMesh {
    let mut positions = Vec::with_capacity((cols + 1) * (rows + 1));
    for j in 0..=rows {
        for i in 0..=cols {
            positions.push(Point::new(i as f64 * cell, j as f64 * cell, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let mut triangles = Vec::with_capacity(2 * cols * rows);
    for j in 0..rows {
        for i in 0..cols {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(positions, &triangles)
}

/// Open cylinder of the given radius and height around the z axis, with
/// `around` vertices per ring and `rings` bands. Tall bands produce long
/// thin triangles.
pub fn cylinder(around: usize, rings: usize, radius: f64, height: f64) -> HalfedgeMesh {
    let mut positions = Vec::with_capacity(around * (rings + 1));
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for k in 0..around {
            let a = TAU * k as f64 / around as f64;
            positions.push(Point::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let id = |k: usize, r: usize| r * around + k % around;
    let mut triangles = Vec::with_capacity(2 * around * rings);
    for r in 0..rings {
        for k in 0..around {
            triangles.push([id(k, r), id(k + 1, r), id(k + 1, r + 1)]);
            triangles.push([id(k, r), id(k + 1, r + 1), id(k, r + 1)]);
        }
    }
    build(positions, &triangles)
}

/// Torus around the z axis with `major` segments along the tube and `minor`
/// segments around it.
pub fn torus(major: usize, minor: usize, major_radius: f64, minor_radius: f64) -> HalfedgeMesh {
    let mut positions = Vec::with_capacity(major * minor);
    for i in 0..major {
        let u = TAU * i as f64 / major as f64;
        for j in 0..minor {
            let v = TAU * j as f64 / minor as f64;
            let r = major_radius + minor_radius * v.cos();
            positions.push(Point::new(r * u.cos(), r * u.sin(), minor_radius * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % major) * minor + j % minor;
    let mut triangles = Vec::with_capacity(2 * major * minor);
    for i in 0..major {
        for j in 0..minor {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(positions, &triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::facet_normal;

    #[test]
    fn counts() {
        assert_eq!(cube(22).vertex_count(), 2906);
        assert_eq!(icosphere(4).vertex_count(), 2562);
        assert_eq!(icosahedron().vertex_count(), 12);
        assert_eq!(torus(12, 6, 1.0, 0.3).euler_characteristic(), 0);
        assert_eq!(cylinder(16, 3, 0.5, 1.0).euler_characteristic(), 0);
        assert_eq!(grid(3, 2, 1.0).vertex_count(), 12);
    }

    #[test]
    fn closed_shapes_face_outwards() {
        for m in [cube(3), icosphere(2), octahedron(), tetrahedron()] {
            m.check_invariants().unwrap();
            for f in m.facets() {
                let [a, b, c] = m.facet_points(f);
                let centroid = (a.coords + b.coords + c.coords) / 3.0;
                assert!(facet_normal(&m, f).dot(&centroid) > 0.0);
            }
        }
    }
}
