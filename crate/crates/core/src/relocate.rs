//! Vertex position initialization and approximate Hausdorff minimization.
//!
//! For a fixed set of closest-point pairs, every sample on the patch is an
//! affine function `alpha * v + c` of the free vertex `v`. Minimizing
//! `sum w |alpha v - p|^2` with `p = target - c` has the closed form
//! `v* = sum(w alpha p) / sum(w alpha^2)`. Re-linking the pairs and
//! reweighting them by their residual (Lawson's iteration) drives the least
//! squares fit towards the minimax (Hausdorff) fit.

use std::collections::HashMap;

use crate::features::{classify_vertex, FeatureField, VertexClass};
use crate::fidelity::FidelityState;
use crate::geometry::{closest_point_on_triangle, triangle_area};
use crate::mesh::{HalfedgeId, HalfedgeMesh, OperatorPreview, Point, Vector, VertexId};

/// Offset added to interpolated feature intensities in the weight update so
/// that flat regions keep positive weights.
pub const FEATURE_WEIGHT_EPSILON: f64 = 1e-3;

/// Default damping of each optimization step.
pub const DEFAULT_LAMBDA: f64 = 0.9;
/// Default similarity threshold for collapse initialization.
pub const DEFAULT_OMEGA: f64 = 0.15;
/// Default number of reweighting iterations per relocation.
pub const DEFAULT_ITERATIONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDirection {
    /// Sample on the working patch paired with its closest input point.
    Out,
    /// Input sample paired with its closest point on the working patch.
    In,
}

/// A closest-point pair, linear in the free vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPointPair {
    /// Point of the working patch (moves with the free vertex).
    pub sample: Point,
    /// Point on the other surface (fixed).
    pub target: Point,
    /// Barycentric coefficient of the free vertex at `sample`.
    pub alpha: f64,
    /// `target` minus the part of `sample` that does not depend on the free vertex.
    pub anchor: Vector,
    pub weight: f64,
    pub voronoi_area: f64,
    /// Interpolated feature intensity at the sample.
    pub feature: f64,
    pub direction: PairDirection,
}

impl ClosestPointPair {
    pub fn distance(&self) -> f64 {
        (self.target - self.sample).norm()
    }
}

/// Weight update rule of the reweighting iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w <- w * d`.
    Lawson,
    /// `w <- w * d * V * (F + eps)`, favoring samples on features.
    #[default]
    FeatureWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RelocateError {
    #[error("no pair constrains the vertex")]
    Unconstrained,
}

/// Frozen-pair objective `sum w |alpha v - p|^2`.
pub fn objective(pairs: &[ClosestPointPair], v: &Point) -> f64 {
    pairs.iter().map(|p| p.weight * (v.coords * p.alpha - p.anchor).norm_squared()).sum()
}

/// Gradient of [`objective`].
pub fn objective_gradient(pairs: &[ClosestPointPair], v: &Point) -> Vector {
    pairs.iter().map(|p| 2.0 * p.weight * p.alpha * (v.coords * p.alpha - p.anchor)).sum()
}

/// Closed-form minimizer of the frozen-pair objective.
pub fn optimal_position(pairs: &[ClosestPointPair]) -> Result<Point, RelocateError> {
    let mut num = Vector::zeros();
    let mut den = 0.0;
    let mut scale = 0.0;
    for p in pairs {
        num += p.anchor * (p.weight * p.alpha);
        den += p.weight * p.alpha * p.alpha;
        scale += p.weight;
    }
    if !(den > 1e-12 * scale) || !den.is_finite() {
        return Err(RelocateError::Unconstrained);
    }
    Ok(Point::from(num / den))
}

/// Multiplies every weight by its reweighting factor and rescales so the
/// largest weight is 1. Weights stay positive and finite.
pub fn lawson_update(pairs: &mut [ClosestPointPair], scheme: WeightScheme) {
    if pairs.is_empty() {
        return;
    }
    let max_d = pairs.iter().map(|p| p.distance()).fold(0.0, f64::max);
    let floor = if max_d > 0.0 { 1e-15 * max_d } else { f64::MIN_POSITIVE };
    // sample areas are compared within their own sample set: the working
    // and the input samples come from meshes of very different density
    let mean_area = |direction: PairDirection| {
        let (sum, count) = pairs
            .iter()
            .filter(|p| p.direction == direction)
            .fold((0.0, 0usize), |(s, c), p| (s + p.voronoi_area, c + 1));
        if count > 0 { sum / count as f64 } else { 0.0 }
    };
    let (mean_out, mean_in) = (mean_area(PairDirection::Out), mean_area(PairDirection::In));
    for p in pairs.iter_mut() {
        let mut factor = p.distance().max(floor);
        if scheme == WeightScheme::FeatureWeighted {
            let mean = if p.direction == PairDirection::Out { mean_out } else { mean_in };
            let area = if mean > 0.0 { p.voronoi_area / mean } else { 1.0 };
            factor *= area.max(1e-12) * (p.feature.max(0.0) + FEATURE_WEIGHT_EPSILON);
        }
        p.weight *= factor;
    }
    let max_w = pairs.iter().map(|p| p.weight).fold(0.0, f64::max);
    if max_w > 0.0 && max_w.is_finite() {
        for p in pairs.iter_mut() {
            p.weight = (p.weight / max_w).max(f64::MIN_POSITIVE);
        }
    }
}

/// Starting position of the free vertex and its assumed feature intensity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialPosition {
    pub position: Point,
    pub intensity: f64,
}

/// Collapse of `h`: snap onto the endpoint of clearly higher intensity,
/// otherwise take the midpoint.
pub fn init_collapse_position(mesh: &HalfedgeMesh, field: &FeatureField, h: HalfedgeId, omega: f64) -> InitialPosition {
    let vi = mesh.from_vertex(h);
    let vj = mesh.to_vertex(h);
    let (fi, fj) = (field.intensity(vi), field.intensity(vj));
    let hi = fi.max(fj);
    if hi <= 1e-9 || (fi - fj).abs() < omega * hi {
        InitialPosition {
            position: nalgebra::center(&mesh.position(vi), &mesh.position(vj)),
            intensity: 0.5 * (fi + fj),
        }
    } else if fi > fj {
        InitialPosition { position: mesh.position(vi), intensity: fi }
    } else {
        InitialPosition { position: mesh.position(vj), intensity: fj }
    }
}

/// Split of `h`: the edge midpoint.
pub fn init_split_position(mesh: &HalfedgeMesh, field: &FeatureField, h: HalfedgeId) -> InitialPosition {
    let a = mesh.from_vertex(h);
    let b = mesh.to_vertex(h);
    InitialPosition {
        position: nalgebra::center(&mesh.position(a), &mesh.position(b)),
        intensity: 0.5 * (field.intensity(a) + field.intensity(b)),
    }
}

/// Relocation of `v`: feature vertices stay, crease vertices go to the
/// midpoint of their crease neighbors, smooth vertices to the area-weighted
/// centroid of their one-ring.
pub fn init_relocation_position(mesh: &HalfedgeMesh, field: &FeatureField, v: VertexId, zeta: f64) -> InitialPosition {
    let intensity = field.intensity(v);
    let position = match classify_vertex(mesh, field, v, zeta) {
        VertexClass::Feature => mesh.position(v),
        VertexClass::Crease(a, b) => nalgebra::center(&mesh.position(a), &mesh.position(b)),
        VertexClass::Smooth => one_ring_centroid(mesh, v),
    };
    InitialPosition { position, intensity }
}

/// Area-weighted mean of the centroids of the facets around `v`.
pub fn one_ring_centroid(mesh: &HalfedgeMesh, v: VertexId) -> Point {
    let mut sum = Vector::zeros();
    let mut total = 0.0;
    for f in mesh.vertex_facets(v) {
        let [a, b, c] = mesh.facet_points(f);
        let area = triangle_area(&a, &b, &c);
        sum += (a.coords + b.coords + c.coords) * (area / 3.0);
        total += area;
    }
    if total > 0.0 {
        Point::from(sum / total)
    } else {
        mesh.position(v)
    }
}

/// Parameters of [`minimize_vertex`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeSettings {
    pub iterations: usize,
    pub lambda: f64,
    pub weighting: WeightScheme,
}

impl Default for MinimizeSettings {
    fn default() -> Self {
        MinimizeSettings { iterations: DEFAULT_ITERATIONS, lambda: DEFAULT_LAMBDA, weighting: WeightScheme::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOutcome {
    pub position: Point,
    /// Set when the pairs stopped constraining the vertex; the position is
    /// then the last well-defined one.
    pub unconstrained: bool,
}

/// A sample whose position is affine in the free vertex.
struct MovingSample {
    alpha: f64,
    fixed: Vector,
    voronoi_area: f64,
    feature: f64,
}

/// Optimizes the free vertex of an operator, starting from `start`.
///
/// Samples on the post-operation patch are drawn once at `start` and keep
/// their barycentric coordinates. Each iteration pairs them with the input
/// surface, pairs the input samples linked to the pre-operation patch with
/// their closest points on the post-operation patch, solves the frozen
/// problem in closed form and moves a damped step towards the solution.
pub fn minimize_vertex(
    state: &FidelityState,
    mesh: &HalfedgeMesh,
    field: &FeatureField,
    preview: &OperatorPreview,
    start: Point,
    moved_intensity: f64,
    settings: &MinimizeSettings,
) -> MinimizeOutcome {
    let moved = preview.moved;
    let intensity = |v: VertexId| if v == moved { moved_intensity } else { field.intensity(v) };
    let index: HashMap<_, _> = preview.inner.iter().enumerate().map(|(i, f)| (f.id, i)).collect();

    let patch = state.sample_patch(mesh, preview, &start);
    let out: Vec<MovingSample> = patch
        .iter()
        .filter_map(|s| {
            let facet = &preview.inner[*index.get(&s.host)?];
            let mut alpha = 0.0;
            let mut fixed = Vector::zeros();
            let mut feature = 0.0;
            for k in 0..3 {
                let v = facet.vertices[k];
                feature += s.bary[k] * intensity(v);
                if v == moved {
                    alpha += s.bary[k];
                } else {
                    fixed += mesh.position(v).coords * s.bary[k];
                }
            }
            (alpha > 0.0).then_some(MovingSample { alpha, fixed, voronoi_area: s.voronoi_area, feature })
        })
        .collect();
    let inputs = state.samples_linked_into(preview.pre_inner.iter().copied());

    let mut v = start;
    let mut out_w = vec![1.0; out.len()];
    let mut in_w = vec![1.0; inputs.len()];
    let mut pairs: Vec<ClosestPointPair> = Vec::with_capacity(out.len() + inputs.len());
    for iteration in 0..settings.iterations {
        pairs.clear();
        for (s, &w) in out.iter().zip(&out_w) {
            let a = Point::from(v.coords * s.alpha + s.fixed);
            let Some(hit) = state.input_tree().closest(&a) else { continue };
            pairs.push(ClosestPointPair {
                sample: a,
                target: hit.point,
                alpha: s.alpha,
                anchor: hit.point.coords - s.fixed,
                weight: w,
                voronoi_area: s.voronoi_area,
                feature: s.feature,
                direction: PairDirection::Out,
            });
        }
        let n_out = pairs.len();
        let triangles: Vec<[Point; 3]> = preview.inner.iter().map(|f| preview.triangle(mesh, f, &v)).collect();
        for (&i, &w) in inputs.iter().zip(&in_w) {
            let b = state.input_samples()[i as usize].position;
            let mut best: Option<(usize, crate::geometry::ClosestPoint)> = None;
            for (ti, t) in triangles.iter().enumerate() {
                let c = closest_point_on_triangle(&b, &t[0], &t[1], &t[2]);
                if best.is_none_or(|(_, bc)| c.distance_squared < bc.distance_squared) {
                    best = Some((ti, c));
                }
            }
            let Some((ti, c)) = best else { continue };
            let facet = &preview.inner[ti];
            let mut alpha = 0.0;
            let mut fixed = Vector::zeros();
            for k in 0..3 {
                if facet.vertices[k] == moved {
                    alpha += c.bary[k];
                } else {
                    fixed += triangles[ti][k].coords * c.bary[k];
                }
            }
            pairs.push(ClosestPointPair {
                sample: c.point,
                target: b,
                alpha,
                anchor: b.coords - fixed,
                weight: w,
                voronoi_area: state.input_samples()[i as usize].voronoi_area,
                feature: state.input_intensity(i),
                direction: PairDirection::In,
            });
        }

        if iteration > 0 {
            lawson_update(&mut pairs, settings.weighting);
            // carry the weights over to the next iteration
            let (o, n) = pairs.split_at(n_out);
            for (w, p) in out_w.iter_mut().zip(o) {
                *w = p.weight;
            }
            for (w, p) in in_w.iter_mut().zip(n) {
                *w = p.weight;
            }
        }
        match optimal_position(&pairs) {
            Ok(target) => v += (target - v) * settings.lambda,
            Err(RelocateError::Unconstrained) => return MinimizeOutcome { position: v, unconstrained: true },
        }
    }
    MinimizeOutcome { position: v, unconstrained: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::init_fidelity;
    use crate::mesh::Operator;
    use crate::shapes;
    use approx::assert_relative_eq;

    fn pair(alpha: f64, anchor: Vector, weight: f64) -> ClosestPointPair {
        ClosestPointPair {
            sample: Point::origin(),
            target: Point::from(anchor),
            alpha,
            anchor,
            weight,
            voronoi_area: 1.0,
            feature: 0.0,
            direction: PairDirection::Out,
        }
    }

    #[test]
    fn single_pair_hits_target() {
        let q = Vector::new(1.0, -2.0, 0.5);
        assert_eq!(optimal_position(&[pair(1.0, q, 1.0)]).unwrap(), Point::from(q));
    }

    #[test]
    fn two_pairs_give_midpoint() {
        let a = Vector::new(1.0, 0.0, 0.0);
        let b = Vector::new(0.0, 3.0, 0.0);
        let v = optimal_position(&[pair(1.0, a, 2.0), pair(1.0, b, 2.0)]).unwrap();
        assert_relative_eq!(v, Point::from((a + b) / 2.0), epsilon = 1e-15);
    }

    #[test]
    fn unconstrained_is_reported() {
        assert_eq!(optimal_position(&[]), Err(RelocateError::Unconstrained));
        assert_eq!(optimal_position(&[pair(0.0, Vector::x(), 1.0)]), Err(RelocateError::Unconstrained));
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let pairs = [pair(0.3, Vector::new(0.1, 0.2, 0.3), 0.7), pair(0.9, Vector::new(-1.0, 0.4, 2.0), 1.3)];
        let v = optimal_position(&pairs).unwrap();
        assert!(objective_gradient(&pairs, &v).norm() < 1e-12);
    }

    #[test]
    fn doubling_distance_doubles_weight() {
        let mut pairs = vec![pair(1.0, Vector::zeros(), 1.0), pair(1.0, Vector::zeros(), 1.0)];
        pairs[0].target = Point::new(1.0, 0.0, 0.0);
        pairs[1].target = Point::new(2.0, 0.0, 0.0);
        lawson_update(&mut pairs, WeightScheme::FeatureWeighted);
        assert_relative_eq!(pairs[1].weight / pairs[0].weight, 2.0, epsilon = 1e-12);
        let mut flat = vec![pair(1.0, Vector::zeros(), 1.0); 3];
        for p in &mut flat {
            p.target = Point::new(0.5, 0.0, 0.0);
        }
        lawson_update(&mut flat, WeightScheme::Lawson);
        assert!(flat.iter().all(|p| p.weight == 1.0));
        let mut zero = vec![pair(1.0, Vector::zeros(), 1.0); 3];
        lawson_update(&mut zero, WeightScheme::FeatureWeighted);
        assert!(zero.iter().all(|p| p.weight > 0.0 && p.weight.is_finite()));
    }

    #[test]
    fn collapse_initialization() {
        let m = shapes::cube(4);
        let field = FeatureField::compute(&m);
        // corner to crease neighbor: snap onto the corner
        let corner = m.vertices().find(|&v| m.position(v).coords.iter().all(|c| c.abs() == 0.5)).unwrap();
        let h = m.outgoing(corner).next().unwrap();
        let twin = m.twin(h);
        let init = init_collapse_position(&m, &field, twin, DEFAULT_OMEGA);
        assert_eq!(init.position, m.position(corner));
        // flat interior edge: midpoint
        let flat = m
            .edges()
            .find(|&h| field.intensity(m.from_vertex(h)) < 1e-9 && field.intensity(m.to_vertex(h)) < 1e-9)
            .unwrap();
        let init = init_collapse_position(&m, &field, flat, DEFAULT_OMEGA);
        assert_eq!(init.position, nalgebra::center(&m.position(m.from_vertex(flat)), &m.position(m.to_vertex(flat))));
    }

    #[test]
    fn split_initialization_is_midpoint() {
        let m = shapes::grid(2, 2, 1.0);
        let field = FeatureField::compute(&m);
        for h in m.halfedges() {
            let mid = nalgebra::center(&m.position(m.from_vertex(h)), &m.position(m.to_vertex(h)));
            assert_eq!(init_split_position(&m, &field, h).position, mid);
        }
    }

    #[test]
    fn relocation_initialization() {
        let m = shapes::grid(4, 4, 1.0);
        let field = FeatureField::compute(&m);
        let v = VertexId(6);
        assert_relative_eq!(init_relocation_position(&m, &field, v, 0.5).position, m.position(v), epsilon = 1e-12);
        let cube = shapes::cube(4);
        let cf = FeatureField::compute(&cube);
        let corner = cube.vertices().find(|&v| cube.position(v).coords.iter().all(|c| c.abs() == 0.5)).unwrap();
        assert_eq!(init_relocation_position(&cube, &cf, corner, 0.5).position, cube.position(corner));
    }

    #[test]
    fn crease_initialization_is_neighbor_midpoint() {
        // a straight crease: two planes meeting along the x axis
        let mut m = shapes::grid(2, 2, 1.0);
        for v in m.vertices().collect::<Vec<_>>() {
            let p = m.position(v);
            let y = p.y - 1.0;
            m.relocate_vertex(v, Point::new(p.x - 1.0, y, -y.abs()));
        }
        let v = VertexId(4);
        assert_eq!(m.position(v), Point::origin());
        let mut shifted = m.clone();
        shifted.relocate_vertex(v, Point::new(0.2, 0.0, 0.0));
        let field_s = FeatureField::compute(&shifted);
        assert_relative_eq!(init_relocation_position(&shifted, &field_s, v, 0.5).position, Point::origin(), epsilon = 1e-12);
    }

    #[test]
    fn optimal_vertex_stays_put() {
        let m = shapes::grid(6, 6, 0.2);
        let field = FeatureField::compute(&m);
        let state = init_fidelity(&m, &m, 10, 0, 1e-3).unwrap();
        let v = VertexId(24);
        let preview = m.preview(Operator::Relocate(v)).unwrap();
        let out = minimize_vertex(&state, &m, &field, &preview, m.position(v), 0.0, &MinimizeSettings::default());
        assert!((out.position - m.position(v)).norm() < 1e-9);
    }

    #[test]
    fn single_undamped_iteration_equals_closed_form() {
        let m = shapes::icosphere(2);
        let field = FeatureField::compute(&m);
        let state = init_fidelity(&m, &m, 10, 0, 1e-2).unwrap();
        let v = VertexId(3);
        let preview = m.preview(Operator::Relocate(v)).unwrap();
        let start = m.position(v) + Vector::new(0.01, -0.02, 0.015);
        let settings = MinimizeSettings { iterations: 1, lambda: 1.0, weighting: WeightScheme::Lawson };
        let out = minimize_vertex(&state, &m, &field, &preview, start, 0.0, &settings);
        assert!(!out.unconstrained);
        // one iteration with unit weights is the plain least squares fit;
        // it must reduce the distance to the original position
        assert!((out.position - m.position(v)).norm() < (start - m.position(v)).norm());
    }

    #[test]
    fn closed_form_matches_finite_difference_minimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pairs: Vec<_> = (0..12)
                .map(|_| {
                    let anchor = Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    pair(rng.random_range(0.05..1.0), anchor, rng.random_range(0.1..2.0))
                })
                .collect();
            // Newton on the quadratic with a finite-difference gradient and Hessian
            let mut v = Point::origin();
            let h = 1e-4;
            for _ in 0..3 {
                let g = objective_gradient(&pairs, &v);
                let mut hess = nalgebra::Matrix3::zeros();
                for j in 0..3 {
                    let mut e = Vector::zeros();
                    e[j] = h;
                    let col = (objective_gradient(&pairs, &(v + e)) - objective_gradient(&pairs, &(v - e))) / (2.0 * h);
                    hess.set_column(j, &col);
                }
                v -= hess.try_inverse().unwrap() * g;
            }
            let closed = optimal_position(&pairs).unwrap();
            assert!((closed - v).norm() < 1e-9, "{closed} vs {v}");
            let f0 = objective(&pairs, &closed);
            for d in [Vector::x(), Vector::y(), Vector::z()] {
                assert!(objective(&pairs, &(closed + d * 1e-3)) >= f0);
                assert!(objective(&pairs, &(closed - d * 1e-3)) >= f0);
            }
        }
    }

    #[test]
    fn perturbed_cube_corner_moves_back() {
        let input = shapes::cube(4);
        let corner = input.vertices().find(|&v| input.position(v).coords.iter().all(|c| c.abs() == 0.5)).unwrap();
        let truth = input.position(corner);
        let inward = -truth.coords.normalize();
        let mut working = input.clone();
        let start = truth + inward * 0.05;
        working.relocate_vertex(corner, start);
        let state = init_fidelity(&input, &working, 10, 0, 0.1).unwrap();
        let field = FeatureField::compute(&working);
        let preview = working.preview(Operator::Relocate(corner)).unwrap();
        let intensity = field.intensity(corner);
        let run = |iterations| {
            let settings = MinimizeSettings { iterations, ..Default::default() };
            let out = minimize_vertex(&state, &working, &field, &preview, start, intensity, &settings);
            (out.position - truth).norm()
        };
        let before = (start - truth).norm();
        // two iterations more than halve the error, more iterations converge
        assert!(run(2) < 0.5 * before);
        assert!(run(16) < 0.005);
    }
}
