//! The remeshing driver.
//!
//! Three phases run in order: an error-bounded simplification by edge
//! collapses, a greedy loop that lifts the smallest interior angle by trying
//! a collapse, then relocations, then a split, and a final pass of vertex
//! relocations with frozen connectivity. Every committed operator keeps the
//! maintained two-sided distance to the input below the bound.

pub mod queue;

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use log::{debug, info};

use crate::error::{ConfigError, MeshError, RemeshError};
use crate::features::{FeatureField, DEFAULT_ZETA};
use crate::fidelity::{init_fidelity, FidelityState, Simulation};
use crate::geometry::{facet_angles, triangle_angles};
use crate::mesh::{HalfedgeId, HalfedgeMesh, Operator, OperatorPreview, Point, VertexId};
use crate::relocate::{
    init_collapse_position, init_relocation_position, init_split_position, minimize_vertex, InitialPosition,
    MinimizeSettings, WeightScheme, DEFAULT_ITERATIONS, DEFAULT_LAMBDA, DEFAULT_OMEGA,
};
use crate::report::{compute_report, PhaseStats, PhaseTimings, QualityReport, RunStats, Termination};
use crate::sampling::DEFAULT_SAMPLES_PER_FACET;

pub use queue::{AngleEntry, AngleQueue, EdgeQueue};

/// Oracle sampling density of the report, relative to the samples per facet.
pub const REPORT_DENSITY_FACTOR: usize = 10;

/// Smallest angle gain (radians) that counts as an improvement. Meshes with
/// many congruent triangles have ties that round-off would otherwise break.
pub const ANGLE_GAIN_EPSILON: f64 = 1e-9;

/// Parameters of a remeshing run.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RemeshConfig {
    /// Error bound as a fraction of the input bounding box diagonal.
    pub delta: f64,
    /// Target minimal interior angle in degrees.
    pub theta: f64,
    /// Vertex budget of the angle improvement loop.
    pub max_vertices: usize,
    /// Average number of samples per facet.
    pub samples_per_facet: usize,
    /// Intensity similarity threshold for collapse initialization.
    pub omega: f64,
    /// Intensity similarity threshold for vertex classification.
    pub zeta: f64,
    /// Damping of each optimization step.
    pub lambda: f64,
    /// Minimal local angle gain (degrees) of a final relocation.
    pub delta_theta: f64,
    /// Reweighting iterations per vertex optimization.
    pub lawson_iterations: usize,
    pub weighting: WeightScheme,
    pub seed: u64,
    pub initial_simplification: bool,
    /// Simplification collapses keep every angle above
    /// `min(local minimum, simplification_angle_fraction * theta)`.
    pub simplification_angle_fraction: f64,
    /// Failed improvement attempts after which a facet is given up.
    pub max_stall_operations: usize,
    /// Accepted final relocations after which a vertex is frozen.
    pub max_relocations_per_vertex: usize,
}

impl Default for RemeshConfig {
    fn default() -> Self {
        RemeshConfig {
            delta: 0.002,
            theta: 30.0,
            max_vertices: usize::MAX,
            samples_per_facet: DEFAULT_SAMPLES_PER_FACET,
            omega: DEFAULT_OMEGA,
            zeta: DEFAULT_ZETA,
            lambda: DEFAULT_LAMBDA,
            delta_theta: 0.1,
            lawson_iterations: DEFAULT_ITERATIONS,
            weighting: WeightScheme::FeatureWeighted,
            seed: 0,
            initial_simplification: true,
            simplification_angle_fraction: 0.5,
            max_stall_operations: 100,
            max_relocations_per_vertex: 1000,
        }
    }
}

impl RemeshConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(ConfigError::Delta(self.delta));
        }
        if !(0.0..60.0).contains(&self.theta) {
            return Err(ConfigError::Theta(self.theta));
        }
        if self.max_vertices == 0 {
            return Err(ConfigError::MaxVertices);
        }
        if self.samples_per_facet == 0 {
            return Err(ConfigError::SamplesPerFacet);
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(ConfigError::Zeta(self.zeta));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(ConfigError::Lambda(self.lambda));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(ConfigError::Omega(self.omega));
        }
        if !(self.delta_theta >= 0.0) || !self.delta_theta.is_finite() {
            return Err(ConfigError::DeltaTheta(self.delta_theta));
        }
        if !(0.0..=1.0).contains(&self.simplification_angle_fraction) {
            return Err(ConfigError::SimplificationAngleFraction(self.simplification_angle_fraction));
        }
        Ok(())
    }

    fn minimize_settings(&self) -> MinimizeSettings {
        MinimizeSettings { iterations: self.lawson_iterations.max(1), lambda: self.lambda, weighting: self.weighting }
    }
}

/// Requirement on the post-operation angles of the patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleRule {
    /// Only validity (no fold-over, no degenerate facet).
    Valid,
    /// Every angle strictly above the value (radians).
    Above(f64),
    /// Every angle at least the value (radians).
    AtLeast(f64),
}

/// Reason an operator failed the mesh improvement test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    Topology,
    Foldover,
    Angle,
    Fidelity,
}

/// Checks topology, orientation, the angle rule and the error bound for an
/// operator whose free vertex goes to `position`. On success the returned
/// simulation can be committed.
pub fn mesh_improvement_test(
    state: &FidelityState,
    mesh: &HalfedgeMesh,
    preview: &OperatorPreview,
    position: &Point,
    rule: AngleRule,
) -> Result<Simulation, Rejection> {
    if let Operator::Collapse(h) = preview.operator {
        if !mesh.is_collapse_legal(h) {
            return Err(Rejection::Topology);
        }
    }
    if preview.creates_foldover(mesh, position) {
        return Err(Rejection::Foldover);
    }
    let passes = match rule {
        AngleRule::Valid => true,
        AngleRule::Above(t) => preview.min_angle(mesh, position) > t,
        AngleRule::AtLeast(t) => preview.min_angle(mesh, position) >= t,
    };
    if !passes {
        return Err(Rejection::Angle);
    }
    let sim = state.simulate(mesh, preview, position);
    if sim.accepted() {
        Ok(sim)
    } else {
        Err(Rejection::Fidelity)
    }
}

/// Walks from `h` to the longest edge of the neighboring facets while the
/// length strictly grows. Stops at a locally longest edge or on reaching
/// the boundary. The result is the facet side of the final edge.
pub fn longest_side_propagation(mesh: &HalfedgeMesh, h: HalfedgeId) -> HalfedgeId {
    let length = |x: HalfedgeId| (mesh.position(mesh.to_vertex(x)) - mesh.position(mesh.from_vertex(x))).norm();
    let mut current = h;
    let mut visited = BTreeSet::new();
    loop {
        visited.insert(queue::canonical(mesh, current));
        if current != h && mesh.is_boundary_edge(current) {
            break;
        }
        let mut best = current;
        let mut best_len = length(current);
        for side in [current, mesh.twin(current)] {
            let Some(f) = mesh.facet(side) else { continue };
            for e in mesh.facet_halfedges(f) {
                let l = length(e);
                if l > best_len && !visited.contains(&queue::canonical(mesh, e)) {
                    best = e;
                    best_len = l;
                }
            }
        }
        if best == current {
            break;
        }
        current = best;
    }
    if mesh.is_boundary_halfedge(current) {
        mesh.twin(current)
    } else {
        current
    }
}

/// Phase-1 priority of an edge: its length times the mean of the opposite
/// angles (the single opposite angle on the boundary).
pub fn collapse_priority(mesh: &HalfedgeMesh, h: HalfedgeId) -> f64 {
    let len = (mesh.position(mesh.to_vertex(h)) - mesh.position(mesh.from_vertex(h))).norm();
    let angles: Vec<f64> = [h, mesh.twin(h)].into_iter().filter_map(|x| opposite_angle(mesh, x)).collect();
    if angles.is_empty() {
        return len;
    }
    len * angles.iter().sum::<f64>() / angles.len() as f64
}

fn opposite_angle(mesh: &HalfedgeMesh, h: HalfedgeId) -> Option<f64> {
    let f = mesh.facet(h)?;
    let apex = mesh.to_vertex(mesh.next(h));
    let corner = mesh.facet_vertices(f).iter().position(|&v| v == apex)?;
    let [a, b, c] = mesh.facet_points(f);
    Some(triangle_angles(&a, &b, &c).map_or(0.0, |t| t[corner]))
}

/// Smallest interior angle of a mesh in radians.
pub fn min_angle(mesh: &HalfedgeMesh) -> f64 {
    mesh.facets()
        .map(|f| {
            let a = facet_angles(mesh, f);
            a[0].min(a[1]).min(a[2])
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Simplification,
    Improvement,
    Relocation,
}

/// A committed operator.
#[derive(Clone, Debug)]
pub struct Committed {
    pub preview: OperatorPreview,
    pub vertex: VertexId,
}

/// Result of [`remesh`].
#[derive(Clone, Debug)]
pub struct RemeshOutput {
    pub mesh: HalfedgeMesh,
    pub report: QualityReport,
}

/// Remeshes `input` under `config`.
pub fn remesh(input: &HalfedgeMesh, config: &RemeshConfig) -> Result<RemeshOutput, RemeshError> {
    let mut r = Remesher::new(input, config.clone())?;
    let termination = r.run()?;
    Ok(r.finish(termination))
}

/// State of a remeshing run. The phases can be driven one by one.
pub struct Remesher<'a> {
    input: &'a HalfedgeMesh,
    config: RemeshConfig,
    mesh: HalfedgeMesh,
    fidelity: FidelityState,
    field: FeatureField,
    stats: RunStats,
    timings: PhaseTimings,
    /// Endpoints of the edge each phase-2 split vertex was inserted on.
    split_parents: Vec<Option<[VertexId; 2]>>,
}

impl<'a> Remesher<'a> {
    pub fn new(input: &'a HalfedgeMesh, config: RemeshConfig) -> Result<Self, RemeshError> {
        config.validate()?;
        if input.facet_count() == 0 {
            return Err(MeshError::Empty.into());
        }
        let mesh = input.clone();
        let delta_abs = config.delta * input.bbox_diagonal();
        let fidelity = init_fidelity(input, &mesh, config.samples_per_facet, config.seed, delta_abs)?;
        let field = FeatureField::compute(&mesh);
        Ok(Remesher {
            input,
            config,
            mesh,
            fidelity,
            field,
            stats: RunStats::default(),
            timings: PhaseTimings::default(),
            split_parents: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &HalfedgeMesh {
        &self.mesh
    }

    pub fn fidelity(&self) -> &FidelityState {
        &self.fidelity
    }

    pub fn field(&self) -> &FeatureField {
        &self.field
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn config(&self) -> &RemeshConfig {
        &self.config
    }

    /// Runs the three phases in order and records their timings.
    pub fn run(&mut self) -> Result<Termination, RemeshError> {
        let t = Instant::now();
        if self.config.initial_simplification {
            self.initial_simplification()?;
        }
        self.timings.simplification = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let termination = self.improve_angles()?;
        self.timings.improvement = t.elapsed().as_secs_f64();
        let t = Instant::now();
        self.final_vertex_relocation()?;
        self.timings.relocation = t.elapsed().as_secs_f64();
        // the final relocations may lift the angles the greedy loop gave up on
        Ok(match termination {
            Termination::Stalled | Termination::VertexBudget if min_angle(&self.mesh) >= self.theta() => {
                Termination::ThetaReached
            }
            other => other,
        })
    }

    fn theta(&self) -> f64 {
        self.config.theta.to_radians()
    }

    fn phase_stats(&mut self, phase: Phase) -> &mut PhaseStats {
        match phase {
            Phase::Simplification => &mut self.stats.simplification,
            Phase::Improvement => &mut self.stats.improvement,
            Phase::Relocation => &mut self.stats.relocation,
        }
    }

    /// Optimizes the free vertex of `op` from `init`, then tests the
    /// optimized position, the initial position and the closest input point
    /// to the initial position in that order, and commits the first that
    /// passes.
    fn try_operator(
        &mut self,
        op: Operator,
        init: InitialPosition,
        rule: impl Fn(&HalfedgeMesh, &OperatorPreview) -> AngleRule,
        phase: Phase,
    ) -> Result<Option<Committed>, MeshError> {
        self.phase_stats(phase).attempts += 1;
        let preview = match self.mesh.preview(op) {
            Ok(p) => p,
            Err(MeshError::LinkCondition(_)) | Err(MeshError::StaleHandle(_)) => {
                self.phase_stats(phase).rejected_topology += 1;
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        let rule = rule(&self.mesh, &preview);
        let settings = self.config.minimize_settings();
        let optimized =
            minimize_vertex(&self.fidelity, &self.mesh, &self.field, &preview, init.position, init.intensity, &settings);
        let mut candidates = vec![optimized.position];
        let projected = self.fidelity.input_tree().closest(&init.position).map(|hit| hit.point);
        for p in [Some(init.position), projected].into_iter().flatten() {
            if !candidates.contains(&p) {
                candidates.push(p);
            }
        }
        let mut last = Rejection::Angle;
        for position in candidates {
            match mesh_improvement_test(&self.fidelity, &self.mesh, &preview, &position, rule) {
                Ok(sim) => {
                    let vertex = self.fidelity.commit(&mut self.mesh, &preview, position, sim)?;
                    self.field.update(&self.mesh, preview.extended_vertices());
                    let stats = self.phase_stats(phase);
                    match op {
                        Operator::Collapse(_) => stats.collapses += 1,
                        Operator::Split(_) => stats.splits += 1,
                        Operator::Relocate(_) => stats.relocations += 1,
                    }
                    return Ok(Some(Committed { preview, vertex }));
                }
                Err(r) => last = r,
            }
        }
        let stats = self.phase_stats(phase);
        match last {
            Rejection::Topology => stats.rejected_topology += 1,
            Rejection::Foldover => stats.rejected_foldover += 1,
            Rejection::Angle => stats.rejected_angle += 1,
            Rejection::Fidelity => stats.rejected_fidelity += 1,
        }
        Ok(None)
    }

    /// Collapses edges in order of increasing `length * opposite angle`
    /// while the error bound holds and no angle drops below the smaller of
    /// the local minimum and `theta * simplification_angle_fraction`.
    pub fn initial_simplification(&mut self) -> Result<(), RemeshError> {
        let floor = self.theta() * self.config.simplification_angle_fraction;
        let mut queue = EdgeQueue::new();
        let edges: Vec<HalfedgeId> = self.mesh.edges().collect();
        for h in edges {
            queue.push(&self.mesh, h, collapse_priority(&self.mesh, h));
        }
        while let Some(h) = queue.pop(&self.mesh) {
            let init = init_collapse_position(&self.mesh, &self.field, h, self.config.omega);
            let rule = |m: &HalfedgeMesh, p: &OperatorPreview| AngleRule::Above(p.pre_min_angle(m).min(floor));
            if let Some(done) = self.try_operator(Operator::Collapse(h), init, rule, Phase::Simplification)? {
                for pf in &done.preview.inner {
                    for e in self.mesh.facet_halfedges(pf.id) {
                        queue.push(&self.mesh, e, collapse_priority(&self.mesh, e));
                    }
                }
            }
        }
        info!(
            "simplification: {} vertices, {} collapses",
            self.mesh.vertex_count(),
            self.stats.simplification.collapses
        );
        Ok(())
    }

    /// Tries to lift one small angle: collapse of the opposite edge, then
    /// relocation of its three vertices, then a split at the end of the
    /// longest-side propagation path. A collapse that would merge a split
    /// vertex back into its edge is skipped, so a split is never undone
    /// right away. Returns the committed operator.
    pub fn greedy_improve_angle(&mut self, entry: AngleEntry) -> Result<Option<Committed>, RemeshError> {
        let f = entry.facet;
        let h = self.mesh.facet_halfedges(f)[(entry.corner + 1) % 3];
        let theta_min = entry.angle;
        let above = |_: &HalfedgeMesh, _: &OperatorPreview| AngleRule::Above(theta_min + ANGLE_GAIN_EPSILON);

        if self.undoes_split(h) {
            self.stats.improvement.attempts += 1;
            self.stats.improvement.rejected_topology += 1;
        } else {
            let init = init_collapse_position(&self.mesh, &self.field, h, self.config.omega);
            if let Some(c) = self.try_operator(Operator::Collapse(h), init, above, Phase::Improvement)? {
                return Ok(Some(c));
            }
        }
        let v_o = self.mesh.to_vertex(self.mesh.next(h));
        let v_s = self.mesh.from_vertex(h);
        let v_e = self.mesh.to_vertex(h);
        for v in [v_o, v_s, v_e] {
            let init = init_relocation_position(&self.mesh, &self.field, v, self.config.zeta);
            if let Some(c) = self.try_operator(Operator::Relocate(v), init, above, Phase::Improvement)? {
                return Ok(Some(c));
            }
        }
        if self.mesh.vertex_count() >= self.config.max_vertices {
            return Ok(None);
        }
        let h_l = longest_side_propagation(&self.mesh, h);
        let parents = [self.mesh.from_vertex(h_l), self.mesh.to_vertex(h_l)];
        let init = init_split_position(&self.mesh, &self.field, h_l);
        let committed = self.try_operator(Operator::Split(h_l), init, |_, _| AngleRule::Valid, Phase::Improvement)?;
        if let Some(c) = &committed {
            let i = c.vertex.index();
            if self.split_parents.len() <= i {
                self.split_parents.resize(i + 1, None);
            }
            self.split_parents[i] = Some(parents);
        }
        Ok(committed)
    }

    /// Whether collapsing `h` would merge a split vertex back into one of
    /// the endpoints of the edge it was inserted on, restoring the
    /// connectivity from before the split.
    fn undoes_split(&self, h: HalfedgeId) -> bool {
        let (a, b) = (self.mesh.from_vertex(h), self.mesh.to_vertex(h));
        let born_on = |m: VertexId, p: VertexId| {
            self.split_parents.get(m.index()).copied().flatten().is_some_and(|pair| pair.contains(&p))
        };
        born_on(a, b) || born_on(b, a)
    }

    /// Pops small angles, smallest first, until none is left below theta or
    /// the vertex budget is reached.
    pub fn improve_angles(&mut self) -> Result<Termination, RemeshError> {
        let theta = self.theta();
        let mut queue = AngleQueue::from_mesh(&self.mesh, theta);
        let mut failures: Vec<usize> = vec![0; self.mesh.facet_capacity()];
        let mut frozen: Vec<bool> = vec![false; self.mesh.facet_capacity()];
        // hard guard against endless split chains
        let budget = self.config.max_stall_operations.saturating_mul(self.mesh.facet_count() + 1);
        let mut pops = 0usize;
        let mut budget_hit = false;
        while let Some(entry) = queue.pop(&self.mesh) {
            if self.mesh.vertex_count() >= self.config.max_vertices {
                info!("vertex budget reached at {} vertices", self.mesh.vertex_count());
                return Ok(Termination::VertexBudget);
            }
            if frozen[entry.facet.index()] {
                continue;
            }
            pops += 1;
            if pops > budget {
                budget_hit = true;
                break;
            }
            let committed = self.greedy_improve_angle(entry)?;
            let improved = matches!(
                committed.as_ref().map(|c| c.preview.operator),
                Some(Operator::Collapse(_) | Operator::Relocate(_))
            );
            let f = entry.facet.index();
            if !improved {
                failures[f] += 1;
                if failures[f] >= self.config.max_stall_operations {
                    frozen[f] = true;
                    self.stats.frozen_facets += 1;
                    debug!("facet {} frozen after {} failed attempts", entry.facet, failures[f]);
                }
            }
            if let Some(c) = committed {
                let cap = self.mesh.facet_capacity();
                if failures.len() < cap {
                    // facets created by a split inherit the history of the facets they replace
                    let inherited = c.preview.pre_inner.iter().map(|g| failures[g.index()]).max().unwrap_or(0);
                    failures.resize(cap, inherited);
                    frozen.resize(cap, false);
                }
                for pf in c.preview.inner.iter().chain(c.preview.outer.iter()) {
                    queue.refresh(&self.mesh, pf.id);
                }
            }
        }
        let reached = min_angle(&self.mesh) >= theta;
        if budget_hit {
            info!("improvement stopped after {pops} attempts");
        }
        Ok(if reached { Termination::ThetaReached } else { Termination::Stalled })
    }

    /// Relocates vertices in FIFO order while the local minimal angle grows
    /// by at least `delta_theta`. Connectivity stays fixed.
    pub fn final_vertex_relocation(&mut self) -> Result<(), RemeshError> {
        let gain = self.config.delta_theta.to_radians();
        let mut queue: VecDeque<VertexId> = self.mesh.vertices().collect();
        let mut queued = vec![false; self.mesh.vertex_capacity()];
        for &v in &queue {
            queued[v.index()] = true;
        }
        let mut accepted = vec![0usize; self.mesh.vertex_capacity()];
        while let Some(v) = queue.pop_front() {
            queued[v.index()] = false;
            if !self.mesh.is_vertex_live(v) || accepted[v.index()] >= self.config.max_relocations_per_vertex {
                continue;
            }
            let init = init_relocation_position(&self.mesh, &self.field, v, self.config.zeta);
            let rule = |m: &HalfedgeMesh, p: &OperatorPreview| AngleRule::AtLeast(p.pre_min_angle(m) + gain);
            if self.try_operator(Operator::Relocate(v), init, rule, Phase::Relocation)?.is_some() {
                accepted[v.index()] += 1;
                if accepted[v.index()] == self.config.max_relocations_per_vertex {
                    self.stats.frozen_vertices += 1;
                }
                for w in self.mesh.neighbors(v) {
                    if !queued[w.index()] {
                        queued[w.index()] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        info!("final relocation: {} moves", self.stats.relocation.relocations);
        Ok(())
    }

    /// Compacts the mesh and measures it against the input.
    pub fn finish(self, termination: Termination) -> RemeshOutput {
        let (points, triangles) = self.mesh.to_triangles();
        let mesh = HalfedgeMesh::from_triangles(points, &triangles).expect("remeshed surface stays manifold");
        let t = Instant::now();
        let mut report = compute_report(self.input, &mesh, REPORT_DENSITY_FACTOR * self.config.samples_per_facet);
        let mut timings = self.timings;
        timings.report = t.elapsed().as_secs_f64();
        report.delta_abs = Some(self.fidelity.delta_abs());
        report.timings = timings;
        report.termination = Some(termination);
        report.stats = Some(self.stats);
        RemeshOutput { mesh, report }
    }
}
