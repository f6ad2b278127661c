//! Property tests over random operator sequences and random optimizer
//! instances.

use std::f64::consts::PI;

use proptest::prelude::*;

use remesh_core::features::total_gaussian_curvature;
use remesh_core::fidelity::{init_fidelity, FidelityState};
use remesh_core::geometry::facet_angles;
use remesh_core::mesh::{HalfedgeId, HalfedgeMesh, Operator, Point, Vector, VertexId};
use remesh_core::pipeline::AngleQueue;
use remesh_core::relocate::{objective, objective_gradient, optimal_position, ClosestPointPair, PairDirection};
use remesh_core::report::compute_report;
use remesh_core::shapes;

/// An operator choice resolved against the current mesh by index.
#[derive(Clone, Debug)]
enum Step {
    Collapse(usize),
    Split(usize),
    Relocate(usize, [f64; 3]),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        any::<usize>().prop_map(Step::Collapse),
        any::<usize>().prop_map(Step::Split),
        (any::<usize>(), prop::array::uniform3(-1.0f64..1.0)).prop_map(|(i, d)| Step::Relocate(i, d)),
    ]
}

fn nth_edge(mesh: &HalfedgeMesh, i: usize) -> HalfedgeId {
    let edges: Vec<_> = mesh.edges().collect();
    edges[i % edges.len()]
}

fn nth_vertex(mesh: &HalfedgeMesh, i: usize) -> VertexId {
    let vertices: Vec<_> = mesh.vertices().collect();
    vertices[i % vertices.len()]
}

/// Resolves `step` to an operator and a target position. Collapses go to
/// the midpoint, splits to the edge midpoint and relocations to a small
/// offset scaled by `reach`.
fn resolve(mesh: &HalfedgeMesh, step: &Step, reach: f64) -> (Operator, Point) {
    let midpoint = |h: HalfedgeId| nalgebra::center(&mesh.position(mesh.from_vertex(h)), &mesh.position(mesh.to_vertex(h)));
    match *step {
        Step::Collapse(i) => {
            let h = nth_edge(mesh, i);
            (Operator::Collapse(h), midpoint(h))
        }
        Step::Split(i) => {
            let h = nth_edge(mesh, i);
            (Operator::Split(h), midpoint(h))
        }
        Step::Relocate(i, d) => {
            let v = nth_vertex(mesh, i);
            (Operator::Relocate(v), mesh.position(v) + Vector::from(d) * reach)
        }
    }
}

/// Applies `step` through the fidelity layer if it passes the fold-over and
/// error checks. Returns whether it was committed.
fn try_commit(state: &mut FidelityState, mesh: &mut HalfedgeMesh, step: &Step, reach: f64) -> bool {
    let (op, position) = resolve(mesh, step, reach);
    let Ok(preview) = mesh.preview(op) else { return false };
    if preview.creates_foldover(mesh, &position) {
        return false;
    }
    let sim = state.simulate(mesh, &preview, &position);
    if !sim.accepted() {
        return false;
    }
    state.commit(mesh, &preview, position, sim).expect("simulated operator commits");
    true
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn operators_keep_a_valid_closed_mesh(steps in prop::collection::vec(step(), 1..40)) {
        let mut mesh = shapes::icosphere(1);
        let chi = mesh.euler_characteristic();
        for s in &steps {
            let (op, position) = resolve(&mesh, s, 0.05);
            if let Ok(preview) = mesh.preview(op) {
                if !preview.creates_foldover(&mesh, &position) {
                    mesh.apply(op, position).unwrap();
                }
            }
            mesh.check_invariants().map_err(TestCaseError::fail)?;
            prop_assert_eq!(mesh.euler_characteristic(), chi);
        }
        let (points, triangles) = mesh.to_triangles();
        let rebuilt = HalfedgeMesh::from_triangles(points, &triangles).unwrap();
        prop_assert_eq!(rebuilt.vertex_count(), mesh.vertex_count());
        prop_assert!(((total_gaussian_curvature(&mesh) - 4.0 * PI) / (4.0 * PI)).abs() < 1e-9);
    }

    #[test]
    fn commits_keep_the_maintained_distance_conservative(steps in prop::collection::vec(step(), 1..25)) {
        let input = shapes::icosphere(2);
        let mut mesh = input.clone();
        let delta = 0.02 * input.bbox_diagonal();
        let mut state = init_fidelity(&input, &mesh, 6, 3, delta).unwrap();
        for s in &steps {
            try_commit(&mut state, &mut mesh, s, 0.01);
            prop_assert!(state.approx_hausdorff() <= delta);
        }
        state.check_consistency(&mesh).map_err(TestCaseError::fail)?;
        let audit = state.audit_links(&mesh);
        prop_assert_eq!(audit.underestimates, 0);
    }

    #[test]
    fn closed_form_is_a_stationary_point(
        raw in prop::collection::vec(
            (0.05f64..1.0, prop::array::uniform3(-2.0f64..2.0), 0.01f64..1.0),
            1..30,
        )
    ) {
        let pairs: Vec<ClosestPointPair> = raw
            .iter()
            .map(|&(alpha, a, weight)| {
                let anchor = Vector::from(a);
                ClosestPointPair {
                    sample: Point::origin(),
                    target: Point::from(anchor),
                    alpha,
                    anchor,
                    weight,
                    voronoi_area: 1.0,
                    feature: 0.0,
                    direction: PairDirection::In,
                }
            })
            .collect();
        let v = optimal_position(&pairs).unwrap();
        prop_assert!(objective_gradient(&pairs, &v).norm() < 1e-9);
        let f = objective(&pairs, &v);
        for d in [Vector::x(), Vector::y(), Vector::z()] {
            prop_assert!(objective(&pairs, &(v + d * 1e-4)) >= f);
        }
    }

    #[test]
    fn angle_queue_pops_every_small_angle_in_order(
        offsets in prop::collection::vec(prop::array::uniform2(-0.3f64..0.3), 16),
        theta in 10.0f64..59.0,
    ) {
        let mut mesh = shapes::grid(5, 5, 1.0);
        let interior: Vec<_> = mesh.vertices().filter(|&v| !mesh.is_boundary_vertex(v)).collect();
        for (v, d) in interior.into_iter().zip(&offsets) {
            mesh.relocate_vertex(v, mesh.position(v) + Vector::new(d[0], d[1], 0.0));
        }
        let theta = theta.to_radians();
        let mut queue = AngleQueue::from_mesh(&mesh, theta);
        let mut popped = Vec::new();
        while let Some(e) = queue.pop(&mesh) {
            popped.push(e.angle);
        }
        let mut expected: Vec<f64> =
            mesh.facets().flat_map(|f| facet_angles(&mesh, f)).filter(|&a| a < theta).collect();
        expected.sort_by(f64::total_cmp);
        prop_assert_eq!(popped, expected);
    }

    #[test]
    fn report_counts_are_consistent(level in 0u32..3, jitter in 0.0f64..0.05) {
        let mut mesh = shapes::icosphere(level);
        let vertices: Vec<_> = mesh.vertices().collect();
        for (i, v) in vertices.into_iter().enumerate() {
            let s = 1.0 + jitter * ((i as f64) * 1.7).sin();
            mesh.relocate_vertex(v, Point::from(mesh.position(v).coords * s));
        }
        let r = compute_report(&mesh, &mesh, 10);
        prop_assert_eq!(r.angle_histogram.iter().sum::<u64>(), 3 * r.facets as u64);
        prop_assert!(r.theta_min <= r.avg_min_angle + 1e-12);
        prop_assert!(r.avg_min_angle <= 60.0 + 1e-9);
        prop_assert!(r.theta_max >= 60.0 - 1e-9);
        prop_assert!(r.q_min <= r.q_avg + 1e-12);
        prop_assert!(r.distance.hausdorff < 1e-12);
    }
}

#[test]
fn commits_in_disjoint_patches_commute() {
    let input = shapes::grid(10, 10, 0.1);
    let delta = 0.01;
    // two interior vertices far apart
    let (a, b) = (VertexId(12), VertexId(96));
    let moves = [(a, Vector::new(0.02, -0.01, 0.0)), (b, Vector::new(-0.015, 0.02, 0.0))];
    let run = |order: [usize; 2]| {
        let mut mesh = input.clone();
        let mut state = init_fidelity(&input, &mesh, 10, 0, delta).unwrap();
        for i in order {
            let (v, d) = moves[i];
            let preview = mesh.preview(Operator::Relocate(v)).unwrap();
            let position = mesh.position(v) + d;
            let sim = state.simulate(&mesh, &preview, &position);
            assert!(sim.accepted());
            state.commit(&mut mesh, &preview, position, sim).unwrap();
        }
        let links: Vec<_> = state.input_samples().iter().map(|s| s.link).collect();
        (mesh.to_triangles(), state.approx_hausdorff(), links)
    };
    assert_eq!(run([0, 1]), run([1, 0]));
}

#[test]
fn random_walk_commits_operators_and_stays_conservative() {
    use rand::{Rng, SeedableRng};
    let input = shapes::icosphere(2);
    let mut mesh = input.clone();
    let delta = 0.02 * input.bbox_diagonal();
    let mut state = init_fidelity(&input, &mesh, 6, 3, delta).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut committed = 0;
    for _ in 0..120 {
        let i = rng.random::<u32>() as usize;
        let s = match rng.random_range(0..3) {
            0 => Step::Collapse(i),
            1 => Step::Split(i),
            _ => Step::Relocate(i, [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]),
        };
        if try_commit(&mut state, &mut mesh, &s, 0.01) {
            committed += 1;
        }
    }
    assert!(committed > 40, "only {committed} commits");
    state.check_consistency(&mesh).unwrap();
    assert_eq!(state.audit_links(&mesh).underestimates, 0);
    assert!(state.approx_hausdorff() <= delta);
}
