//! Stratified surface sampling.
//!
//! Every facet receives a handful of quasi-uniform samples obtained by Lloyd
//! relaxation on the Voronoi diagram bounded by the triangle. Edges receive
//! as many samples as there are facet-sample cells touching them, and every
//! vertex is a sample of its own. Each sample carries the area of its cell,
//! which later serves as a relative weight.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{barycentric_point, triangle_area};
use crate::mesh::{EdgeKey, FacetId, HalfedgeMesh, Point, VertexId};

/// Lloyd iterations per facet.
pub const LLOYD_ITERATIONS: usize = 5;
/// Default average number of samples per facet.
pub const DEFAULT_SAMPLES_PER_FACET: usize = 10;

/// Closest point on the other surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub facet: FacetId,
    pub point: Point,
    pub distance: f64,
}

/// Mesh element a sample stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SampleElement {
    Vertex(VertexId),
    Edge(EdgeKey),
    Facet(FacetId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Vertex,
    Edge,
    Facet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePoint {
    pub position: Point,
    pub element: SampleElement,
    /// Facet on which `bary` is expressed.
    pub host: FacetId,
    pub bary: [f64; 3],
    pub voronoi_area: f64,
    pub link: Option<Link>,
}

impl SamplePoint {
    pub fn kind(&self) -> SampleKind {
        match self.element {
            SampleElement::Vertex(_) => SampleKind::Vertex,
            SampleElement::Edge(_) => SampleKind::Edge,
            SampleElement::Facet(_) => SampleKind::Facet,
        }
    }
}

/// Samples of a whole mesh, ordered by host facet.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<SamplePoint>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, kind: SampleKind) -> usize {
        self.samples.iter().filter(|s| s.kind() == kind).count()
    }
}

/// A facet sample in barycentric form with its cell area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSample {
    pub bary: [f64; 3],
    pub area: f64,
}

/// Relaxed samples of one triangle. Edge `k` runs from corner `k` to corner
/// `k + 1`; `edge_contacts[k]` counts the cells with a boundary segment on it
/// and `edge_widths[k]` sums `cell area / contact length` over those cells.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleSamples {
    pub samples: Vec<CellSample>,
    pub edge_contacts: [u32; 3],
    pub edge_widths: [f64; 3],
}

/// Number of samples for a facet of area `area` whose neighbors have the
/// given areas: `n_f (1 + |N|) / (1 + sum(A_j) / A_i)`, rounded, at least 1.
pub fn sample_count(area: f64, neighbor_areas: &[f64], n_f: usize) -> usize {
    if !(area > 0.0) {
        return 1;
    }
    let ratio: f64 = neighbor_areas.iter().map(|a| a / area).sum();
    let n = n_f as f64 * (1.0 + neighbor_areas.len() as f64) / (1.0 + ratio);
    (n.round() as usize).max(1)
}

/// Facets sharing at least one vertex with `f`.
pub fn facet_neighbors(mesh: &HalfedgeMesh, f: FacetId) -> Vec<FacetId> {
    let set: BTreeSet<FacetId> = mesh
        .facet_vertices(f)
        .iter()
        .flat_map(|&v| mesh.vertex_facets(v))
        .filter(|&g| g != f)
        .collect();
    set.into_iter().collect()
}

/// Sample count of a mesh facet (see [`sample_count`]).
pub fn facet_sample_count(mesh: &HalfedgeMesh, f: FacetId, n_f: usize) -> usize {
    let [a, b, c] = mesh.facet_points(f);
    let areas: Vec<f64> = facet_neighbors(mesh, f)
        .into_iter()
        .map(|g| {
            let [p, q, r] = mesh.facet_points(g);
            triangle_area(&p, &q, &r)
        })
        .collect();
    sample_count(triangle_area(&a, &b, &c), &areas, n_f)
}

/// Seed for a triangle, derived from the run seed and the exact corner
/// coordinates so that the same triangle is always sampled the same way.
fn triangle_seed(seed: u64, tri: &[Point; 3]) -> u64 {
    let mut h = splitmix(seed ^ 0x5eed_5eed_5eed_5eed);
    for p in tri {
        for k in 0..3 {
            h = splitmix(h ^ p[k].to_bits());
        }
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Index of the corner that starts the canonical rotation of a triangle,
/// chosen from the coordinates alone.
fn canonical_start(tri: &[Point; 3]) -> usize {
    let key = |p: &Point| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
    (0..3).min_by_key(|&k| key(&tri[k])).unwrap_or(0)
}

/// Places `n` samples in a triangle and relaxes them with Lloyd iterations
/// on the bounded Voronoi diagram. The result depends only on the triangle
/// (up to rotation of its corners), `n` and `seed`.
pub fn sample_triangle(tri: &[Point; 3], n: usize, seed: u64) -> TriangleSamples {
    let n = n.max(1);
    let s = canonical_start(tri);
    let rot = [tri[s], tri[(s + 1) % 3], tri[(s + 2) % 3]];
    let local = relax_triangle(&rot, n, triangle_seed(seed, &rot));
    // corner k of `rot` is corner (k + s) % 3 of `tri`
    let mut out = TriangleSamples {
        samples: Vec::with_capacity(local.samples.len()),
        edge_contacts: [0; 3],
        edge_widths: [0.0; 3],
    };
    for c in &local.samples {
        let mut bary = [0.0; 3];
        for k in 0..3 {
            bary[(k + s) % 3] = c.bary[k];
        }
        out.samples.push(CellSample { bary, area: c.area });
    }
    for k in 0..3 {
        out.edge_contacts[(k + s) % 3] = local.edge_contacts[k];
        out.edge_widths[(k + s) % 3] = local.edge_widths[k];
    }
    out
}

type Polygon = Vec<(Vector2<f64>, u8)>;

/// Label of polygon segments that lie on a bisector rather than a triangle edge.
const BISECTOR: u8 = 3;

fn relax_triangle(tri: &[Point; 3], n: usize, seed: u64) -> TriangleSamples {
    let area = triangle_area(&tri[0], &tri[1], &tri[2]);
    let e0 = tri[1] - tri[0];
    let e1 = tri[2] - tri[0];
    let l0 = e0.norm();
    let normal = e0.cross(&e1);
    if !(area > 0.0) || !(l0 > 0.0) || !(normal.norm() > 0.0) {
        let third = 1.0 / 3.0;
        return TriangleSamples {
            samples: vec![CellSample { bary: [third; 3], area: area / n as f64 }; n],
            edge_contacts: [0; 3],
            edge_widths: [0.0; 3],
        };
    }
    let u = e0 / l0;
    let v = normal.normalize().cross(&u);
    let corners = [Vector2::new(0.0, 0.0), Vector2::new(l0, 0.0), Vector2::new(e1.dot(&u), e1.dot(&v))];
    let scale = l0.max(e1.norm()).max((tri[2] - tri[1]).norm());
    let tol = 1e-12 * scale;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<Vector2<f64>> = (0..n)
        .map(|_| {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let sr = r1.sqrt();
            corners[0] * (1.0 - sr) + corners[1] * (sr * (1.0 - r2)) + corners[2] * (sr * r2)
        })
        .collect();

    let mut cells: Vec<Polygon> = Vec::new();
    for iteration in 0..=LLOYD_ITERATIONS {
        cells = (0..n).map(|i| voronoi_cell(&corners, &sites, i, tol)).collect();
        if iteration == LLOYD_ITERATIONS {
            break;
        }
        for (site, cell) in sites.iter_mut().zip(&cells) {
            if let Some(c) = polygon_centroid(cell) {
                *site = c;
            }
        }
    }

    // barycentric coordinates from the planar frame
    let d = corners[1].x * corners[2].y;
    let mut result = TriangleSamples { samples: Vec::with_capacity(n), edge_contacts: [0; 3], edge_widths: [0.0; 3] };
    for (site, cell) in sites.iter().zip(&cells) {
        let b2 = (site.y / corners[2].y).clamp(0.0, 1.0);
        let b1 = ((site.x * corners[2].y - site.y * corners[2].x) / d).clamp(0.0, 1.0);
        let b0 = (1.0 - b1 - b2).max(0.0);
        let sum = b0 + b1 + b2;
        let cell_area = polygon_area(cell);
        result.samples.push(CellSample { bary: [b0 / sum, b1 / sum, b2 / sum], area: cell_area });
        let mut contact = [0.0f64; 3];
        for i in 0..cell.len() {
            let (p, label) = cell[i];
            if (label as usize) < 3 {
                contact[label as usize] += (cell[(i + 1) % cell.len()].0 - p).norm();
            }
        }
        for k in 0..3 {
            if contact[k] > tol {
                result.edge_contacts[k] += 1;
                result.edge_widths[k] += cell_area / contact[k];
            }
        }
    }
    result
}

/// Cell of site `i` clipped to the triangle, with segment labels (0..3 for
/// triangle edges, [`BISECTOR`] otherwise).
fn voronoi_cell(corners: &[Vector2<f64>; 3], sites: &[Vector2<f64>], i: usize, tol: f64) -> Polygon {
    let mut poly: Polygon = vec![(corners[0], 0), (corners[1], 1), (corners[2], 2)];
    let si = sites[i];
    for (j, sj) in sites.iter().enumerate() {
        if j == i || poly.is_empty() {
            continue;
        }
        // keep x with (sj - si) . x <= (|sj|^2 - |si|^2) / 2
        let normal = sj - si;
        let len = normal.norm();
        if len == 0.0 {
            continue;
        }
        let normal = normal / len;
        let offset = normal.dot(&((sj + si) * 0.5));
        poly = clip(&poly, &normal, offset, tol);
    }
    poly
}

fn clip(poly: &Polygon, normal: &Vector2<f64>, offset: f64, tol: f64) -> Polygon {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let dist = |p: &Vector2<f64>| normal.dot(p) - offset;
    for i in 0..poly.len() {
        let (cur, label) = poly[i];
        let (nxt, _) = poly[(i + 1) % poly.len()];
        let dc = dist(&cur);
        let dn = dist(&nxt);
        let cur_in = dc <= tol;
        let nxt_in = dn <= tol;
        if cur_in {
            out.push((cur, label));
            if !nxt_in {
                let t = dc / (dc - dn);
                out.push((cur + (nxt - cur) * t, BISECTOR));
            }
        } else if nxt_in {
            let t = dc / (dc - dn);
            out.push((cur + (nxt - cur) * t, label));
        }
    }
    out
}

fn polygon_area(poly: &Polygon) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i].0;
        let q = poly[(i + 1) % poly.len()].0;
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a.abs()
}

fn polygon_centroid(poly: &Polygon) -> Option<Vector2<f64>> {
    if poly.len() < 3 {
        return None;
    }
    let mut a = 0.0;
    let mut c = Vector2::zeros();
    for i in 0..poly.len() {
        let p = poly[i].0;
        let q = poly[(i + 1) % poly.len()].0;
        let cross = p.x * q.y - q.x * p.y;
        a += cross;
        c += (p + q) * cross;
    }
    if a.abs() <= f64::MIN_POSITIVE {
        return None;
    }
    Some(c / (3.0 * a))
}

/// Sample parameters along an edge carrying `count` samples.
pub fn edge_sample_params(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}

/// Facet samples of a mesh facet with `n` samples.
pub fn sample_facet(mesh: &HalfedgeMesh, f: FacetId, n: usize, seed: u64) -> Vec<SamplePoint> {
    let tri = mesh.facet_points(f);
    sample_triangle(&tri, n, seed)
        .samples
        .into_iter()
        .map(|c| SamplePoint {
            position: barycentric_point(&tri, &c.bary),
            element: SampleElement::Facet(f),
            host: f,
            bary: c.bary,
            voronoi_area: c.area,
            link: None,
        })
        .collect()
}

/// A triangle of a patch to be sampled.
#[derive(Clone, Copy, Debug)]
pub struct PatchTriangle {
    pub id: FacetId,
    pub vertices: [VertexId; 3],
    pub points: [Point; 3],
}

/// Contact statistics a facet outside the patch contributes to a shared edge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeContact {
    pub count: u32,
    pub width_sum: f64,
}

/// Samples hosted by one facet, plus its contributions to its edges.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetSamples {
    pub facet: FacetId,
    pub samples: Vec<SamplePoint>,
    pub contacts: [(EdgeKey, EdgeContact); 3],
}

/// Result of sampling a set of facets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PatchSamples {
    pub facets: Vec<FacetSamples>,
    pub edges: Vec<(EdgeKey, Vec<SamplePoint>)>,
    pub vertices: Vec<(VertexId, SamplePoint)>,
}

impl PatchSamples {
    /// All samples: facet samples in facet order, then edge, then vertex samples.
    pub fn iter(&self) -> impl Iterator<Item = &SamplePoint> {
        self.facets
            .iter()
            .flat_map(|f| f.samples.iter())
            .chain(self.edges.iter().flat_map(|(_, s)| s.iter()))
            .chain(self.vertices.iter().map(|(_, s)| s))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut SamplePoint> {
        self.facets
            .iter_mut()
            .flat_map(|f| f.samples.iter_mut())
            .chain(self.edges.iter_mut().flat_map(|(_, s)| s.iter_mut()))
            .chain(self.vertices.iter_mut().map(|(_, s)| s))
    }

    pub fn len(&self) -> usize {
        self.facets.iter().map(|f| f.samples.len()).sum::<usize>()
            + self.edges.iter().map(|(_, s)| s.len()).sum::<usize>()
            + self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples the given triangles with `counts[i]` facet samples on triangle
/// `i`. Edges shared with facets outside the patch also count the cells of
/// the outside facet, as reported by `outside`.
pub fn sample_patch(
    triangles: &[PatchTriangle],
    counts: &[usize],
    seed: u64,
    outside: impl Fn(EdgeKey, FacetId) -> Option<EdgeContact>,
) -> PatchSamples {
    let relax = |(t, &n): (&PatchTriangle, &usize)| sample_triangle(&t.points, n, seed);
    let relaxed: Vec<TriangleSamples> = if triangles.len() >= 64 {
        triangles.par_iter().zip(counts.par_iter()).map(relax).collect()
    } else {
        triangles.iter().zip(counts.iter()).map(relax).collect()
    };

    let mut out = PatchSamples::default();
    // edge -> (host triangle index, local edge index, accumulated contact)
    let mut edges: BTreeMap<EdgeKey, (usize, usize, EdgeContact, u8)> = BTreeMap::new();
    // vertex -> (host triangle index, corner, area sum, facet count)
    let mut verts: BTreeMap<VertexId, (usize, usize, f64, usize)> = BTreeMap::new();

    for (ti, (t, r)) in triangles.iter().zip(&relaxed).enumerate() {
        let samples = r
            .samples
            .iter()
            .map(|c| SamplePoint {
                position: barycentric_point(&t.points, &c.bary),
                element: SampleElement::Facet(t.id),
                host: t.id,
                bary: c.bary,
                voronoi_area: c.area,
                link: None,
            })
            .collect::<Vec<_>>();
        let mean_area = if r.samples.is_empty() {
            0.0
        } else {
            r.samples.iter().map(|c| c.area).sum::<f64>() / r.samples.len() as f64
        };
        let mut contacts = [(EdgeKey(t.vertices[0], t.vertices[0]), EdgeContact::default()); 3];
        for k in 0..3 {
            let key = EdgeKey::new(t.vertices[k], t.vertices[(k + 1) % 3]);
            let c = EdgeContact { count: r.edge_contacts[k], width_sum: r.edge_widths[k] };
            contacts[k] = (key, c);
            let e = edges.entry(key).or_insert((ti, k, EdgeContact::default(), 0));
            e.2.count += c.count;
            e.2.width_sum += c.width_sum;
            e.3 += 1;
        }
        for k in 0..3 {
            let v = verts.entry(t.vertices[k]).or_insert((ti, k, 0.0, 0));
            v.2 += mean_area;
            v.3 += 1;
        }
        out.facets.push(FacetSamples { facet: t.id, samples, contacts });
    }

    for (key, (ti, k, mut contact, sides)) in edges {
        let t = &triangles[ti];
        if sides == 1 {
            if let Some(c) = outside(key, t.id) {
                contact.count += c.count;
                contact.width_sum += c.width_sum;
            }
        }
        if contact.count == 0 {
            out.edges.push((key, Vec::new()));
            continue;
        }
        let count = contact.count as usize;
        let (p, q) = (t.points[k], t.points[(k + 1) % 3]);
        let length = (q - p).norm();
        let weight = length / count as f64 * (contact.width_sum / count as f64);
        let samples = edge_sample_params(count)
            .into_iter()
            .map(|s| {
                let mut bary = [0.0; 3];
                bary[k] = 1.0 - s;
                bary[(k + 1) % 3] = s;
                SamplePoint {
                    position: p + (q - p) * s,
                    element: SampleElement::Edge(key),
                    host: t.id,
                    bary,
                    voronoi_area: weight,
                    link: None,
                }
            })
            .collect();
        out.edges.push((key, samples));
    }

    for (v, (ti, k, area_sum, facets)) in verts {
        let t = &triangles[ti];
        let mut bary = [0.0; 3];
        bary[k] = 1.0;
        out.vertices.push((
            v,
            SamplePoint {
                position: t.points[k],
                element: SampleElement::Vertex(v),
                host: t.id,
                bary,
                voronoi_area: area_sum / facets as f64,
                link: None,
            },
        ));
    }
    out
}

/// Sample counts for the first `inner` triangles of `triangles`, using every
/// triangle of the slice that shares a vertex as a neighbor.
pub fn patch_sample_counts(triangles: &[PatchTriangle], inner: usize, n_f: usize) -> Vec<usize> {
    let areas: Vec<f64> = triangles.iter().map(|t| triangle_area(&t.points[0], &t.points[1], &t.points[2])).collect();
    (0..inner)
        .map(|i| {
            let vs = &triangles[i].vertices;
            let neighbors: Vec<f64> = triangles
                .iter()
                .enumerate()
                .filter(|&(j, t)| j != i && t.vertices.iter().any(|v| vs.contains(v)))
                .map(|(j, _)| areas[j])
                .collect();
            sample_count(areas[i], &neighbors, n_f)
        })
        .collect()
}

pub fn mesh_triangles(mesh: &HalfedgeMesh) -> Vec<PatchTriangle> {
    mesh.facets()
        .map(|f| PatchTriangle { id: f, vertices: mesh.facet_vertices(f), points: mesh.facet_points(f) })
        .collect()
}

/// Facet, edge and vertex samples of the whole mesh, grouped by facet in
/// structured form.
pub fn sample_mesh(mesh: &HalfedgeMesh, n_f: usize, seed: u64) -> PatchSamples {
    let triangles = mesh_triangles(mesh);
    let counts: Vec<usize> = if triangles.len() >= 64 {
        triangles.par_iter().map(|t| facet_sample_count(mesh, t.id, n_f)).collect()
    } else {
        triangles.iter().map(|t| facet_sample_count(mesh, t.id, n_f)).collect()
    };
    sample_patch(&triangles, &counts, seed, |_, _| None)
}

/// Stratified samples of the whole mesh as a flat set ordered by host facet.
pub fn stratified_sample(mesh: &HalfedgeMesh, n_f: usize, seed: u64) -> SampleSet {
    let patch = sample_mesh(mesh, n_f, seed);
    let mut samples: Vec<SamplePoint> = patch.iter().copied().collect();
    samples.sort_by_key(|s| s.host);
    SampleSet { samples, seed }
}
