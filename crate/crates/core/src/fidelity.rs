//! Sample-based two-sided Hausdorff bookkeeping with local updates.
//!
//! Two sample sets are maintained:
//! * input samples, fixed on the input surface, each linked to a facet of
//!   the working mesh;
//! * working samples, living on the working mesh and linked to the input.
//!
//! An operator only changes a small patch `L`. Its working samples are
//! regenerated and measured against a static tree over the input, while the
//! input samples linked into the enlarged patch `L+` are re-linked against
//! the post-operation `L+` only. Links elsewhere are never refreshed, so
//! stored input-side distances can only overestimate the true ones.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{FidelityError, MeshError};
use crate::features::FeatureField;
use crate::geometry::{barycentric_point, triangle_area, AabbTree};
use crate::mesh::{EdgeKey, FacetId, HalfedgeMesh, OperatorPreview, Point, VertexId};
use crate::sampling::{
    mesh_triangles, patch_sample_counts, sample_mesh, sample_patch, stratified_sample, EdgeContact, FacetSamples,
    Link, PatchSamples, PatchTriangle, SamplePoint,
};

/// Which side of the distance a sample measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Working-mesh sample measured against the input.
    Out,
    /// Input sample measured against the working mesh.
    In,
}

/// The first sample found beyond the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub direction: Direction,
    pub position: Point,
    pub distance: f64,
    /// `distance - bound`.
    pub excess: f64,
}

/// Outcome of a simulated operator. Holds everything needed to commit.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub violation: Option<Violation>,
    /// Fresh working samples of the post-operation patch, linked to the input.
    pub samples: PatchSamples,
    /// New links of the input samples that pointed into the patch.
    pub relinks: Vec<(u32, Link)>,
    pub max_out: f64,
    pub max_in: f64,
}

impl Simulation {
    pub fn accepted(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Clone, Debug)]
struct FacetRecord {
    samples: Vec<SamplePoint>,
    contacts: [(EdgeKey, EdgeContact); 3],
}

/// Working samples keyed by the element that hosts them.
#[derive(Clone, Debug, Default)]
struct WorkingSamples {
    facets: Vec<Option<FacetRecord>>,
    edges: BTreeMap<EdgeKey, Vec<SamplePoint>>,
    vertices: Vec<Option<SamplePoint>>,
}

impl WorkingSamples {
    fn insert(&mut self, patch: PatchSamples) {
        for FacetSamples { facet, samples, contacts } in patch.facets {
            if self.facets.len() <= facet.index() {
                self.facets.resize(facet.index() + 1, None);
            }
            self.facets[facet.index()] = Some(FacetRecord { samples, contacts });
        }
        for (key, samples) in patch.edges {
            if samples.is_empty() {
                self.edges.remove(&key);
            } else {
                self.edges.insert(key, samples);
            }
        }
        for (v, s) in patch.vertices {
            if self.vertices.len() <= v.index() {
                self.vertices.resize(v.index() + 1, None);
            }
            self.vertices[v.index()] = Some(s);
        }
    }

    fn iter(&self) -> impl Iterator<Item = &SamplePoint> {
        self.facets
            .iter()
            .flatten()
            .flat_map(|r| r.samples.iter())
            .chain(self.edges.values().flatten())
            .chain(self.vertices.iter().flatten())
    }

    fn contact(&self, facet: FacetId, key: EdgeKey) -> Option<EdgeContact> {
        let record = self.facets.get(facet.index())?.as_ref()?;
        record.contacts.iter().find(|(k, _)| *k == key).map(|(_, c)| *c)
    }
}

/// Sample bookkeeping for the distance between the working mesh and the input.
#[derive(Clone, Debug)]
pub struct FidelityState {
    input_tree: AabbTree,
    input_samples: Vec<SamplePoint>,
    input_intensity: Vec<f64>,
    linked: Vec<Vec<u32>>,
    working: WorkingSamples,
    delta_abs: f64,
    samples_per_facet: usize,
    seed: u64,
}

fn link_from(hit: &crate::geometry::TreeHit) -> Link {
    Link { facet: hit.facet(), point: hit.point, distance: hit.distance }
}

/// Builds the bookkeeping for `working` (normally a copy of `input`) with
/// absolute bound `delta_abs`.
pub fn init_fidelity(
    input: &HalfedgeMesh,
    working: &HalfedgeMesh,
    samples_per_facet: usize,
    seed: u64,
    delta_abs: f64,
) -> Result<FidelityState, FidelityError> {
    if !(delta_abs > 0.0) || !delta_abs.is_finite() {
        return Err(FidelityError::InvalidBound(delta_abs));
    }
    if input.facet_count() == 0 || working.facet_count() == 0 || samples_per_facet == 0 {
        return Err(FidelityError::EmptySampleSet);
    }
    let input_tree = AabbTree::from_mesh(input);
    let working_tree = AabbTree::from_mesh(working);

    let mut input_samples = stratified_sample(input, samples_per_facet, seed).samples;
    input_samples.par_iter_mut().for_each(|s| {
        let hit = working_tree.closest(&s.position).expect("working mesh has facets");
        s.link = Some(link_from(&hit));
    });
    let input_field = FeatureField::compute(input);
    let input_intensity = input_samples
        .iter()
        .map(|s| input_field.interpolate(&input.facet_vertices(s.host), &s.bary))
        .collect();

    let mut linked = vec![Vec::new(); working.facet_capacity()];
    for (i, s) in input_samples.iter().enumerate() {
        linked[s.link.expect("linked above").facet.index()].push(i as u32);
    }

    let mut patch = sample_mesh(working, samples_per_facet, seed);
    let mut all: Vec<&mut SamplePoint> = patch.iter_mut().collect();
    all.par_iter_mut().for_each(|s| {
        let hit = input_tree.closest(&s.position).expect("input has facets");
        s.link = Some(link_from(&hit));
    });
    let mut samples = WorkingSamples::default();
    samples.insert(patch);

    Ok(FidelityState {
        input_tree,
        input_samples,
        input_intensity,
        linked,
        working: samples,
        delta_abs,
        samples_per_facet,
        seed,
    })
}

impl FidelityState {
    pub fn delta_abs(&self) -> f64 {
        self.delta_abs
    }

    pub fn samples_per_facet(&self) -> usize {
        self.samples_per_facet
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Static tree over the input surface.
    pub fn input_tree(&self) -> &AabbTree {
        &self.input_tree
    }

    pub fn input_samples(&self) -> &[SamplePoint] {
        &self.input_samples
    }

    /// Feature intensity of the input surface at input sample `i`.
    pub fn input_intensity(&self, i: u32) -> f64 {
        self.input_intensity[i as usize]
    }

    /// Input samples currently linked to facet `f` of the working mesh.
    pub fn linked_samples(&self, f: FacetId) -> &[u32] {
        self.linked.get(f.index()).map_or(&[], |v| v.as_slice())
    }

    pub fn working_samples(&self) -> impl Iterator<Item = &SamplePoint> {
        self.working.iter()
    }

    /// Largest stored distance from a working sample to the input.
    pub fn max_out_distance(&self) -> f64 {
        self.working.iter().filter_map(|s| s.link.map(|l| l.distance)).fold(0.0, f64::max)
    }

    /// Largest stored distance from an input sample to the working mesh.
    pub fn max_in_distance(&self) -> f64 {
        self.input_samples.iter().filter_map(|s| s.link.map(|l| l.distance)).fold(0.0, f64::max)
    }

    /// Sample approximation of the two-sided Hausdorff distance.
    pub fn approx_hausdorff(&self) -> f64 {
        self.max_out_distance().max(self.max_in_distance())
    }

    /// Post-operation triangles of `L+`, inner patch first.
    pub fn patch_triangles(mesh: &HalfedgeMesh, preview: &OperatorPreview, position: &Point) -> Vec<PatchTriangle> {
        preview
            .inner
            .iter()
            .chain(preview.outer.iter())
            .map(|f| PatchTriangle { id: f.id, vertices: f.vertices, points: preview.triangle(mesh, f, position) })
            .collect()
    }

    /// Working samples of the post-operation inner patch, without links.
    pub fn sample_patch(&self, mesh: &HalfedgeMesh, preview: &OperatorPreview, position: &Point) -> PatchSamples {
        let triangles = Self::patch_triangles(mesh, preview, position);
        let inner = preview.inner.len();
        let counts = patch_sample_counts(&triangles, inner, self.samples_per_facet);
        let outer = &preview.outer;
        sample_patch(&triangles[..inner], &counts, self.seed, |key, _| {
            outer
                .iter()
                .find(|f| f.vertices.contains(&key.0) && f.vertices.contains(&key.1))
                .and_then(|f| self.working.contact(f.id, key))
        })
    }

    /// Input samples linked into the pre-operation `L+`, sorted.
    pub fn samples_linked_into(&self, facets: impl IntoIterator<Item = FacetId>) -> Vec<u32> {
        let mut v: Vec<u32> = facets.into_iter().flat_map(|f| self.linked_samples(f).iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Evaluates an operator with the moved vertex at `position` without
    /// changing any state.
    pub fn simulate(&self, mesh: &HalfedgeMesh, preview: &OperatorPreview, position: &Point) -> Simulation {
        let bound = self.delta_abs;
        let bound2 = bound * bound;
        let mut samples = self.sample_patch(mesh, preview, position);
        let mut result = Simulation {
            violation: None,
            samples: PatchSamples::default(),
            relinks: Vec::new(),
            max_out: 0.0,
            max_in: 0.0,
        };

        // vertex samples first: the moved vertex is the most likely violator
        let ordered = samples
            .vertices
            .iter_mut()
            .map(|(_, s)| s)
            .chain(samples.edges.iter_mut().flat_map(|(_, e)| e.iter_mut()))
            .chain(samples.facets.iter_mut().flat_map(|f| f.samples.iter_mut()));
        for s in ordered {
            match self.input_tree.closest_within(&s.position, bound2) {
                Some(hit) => {
                    result.max_out = result.max_out.max(hit.distance);
                    s.link = Some(link_from(&hit));
                }
                None => {
                    let distance = self.input_tree.closest(&s.position).map_or(f64::INFINITY, |h| h.distance);
                    result.violation = Some(Violation {
                        direction: Direction::Out,
                        position: s.position,
                        distance,
                        excess: distance - bound,
                    });
                    return result;
                }
            }
        }

        let tree = AabbTree::new(
            Self::patch_triangles(mesh, preview, position).into_iter().map(|t| (t.points, t.id.0)).collect(),
        );
        let indices = self.samples_linked_into(preview.pre_extended());
        let mut relinks = Vec::with_capacity(indices.len());
        for i in indices {
            let p = self.input_samples[i as usize].position;
            let hit = tree.closest(&p).expect("patch is not empty");
            if hit.distance > bound {
                result.violation = Some(Violation {
                    direction: Direction::In,
                    position: p,
                    distance: hit.distance,
                    excess: hit.distance - bound,
                });
                return result;
            }
            result.max_in = result.max_in.max(hit.distance);
            relinks.push((i, link_from(&hit)));
        }
        result.samples = samples;
        result.relinks = relinks;
        result
    }

    /// Applies an accepted operator to the mesh and installs the simulated
    /// samples and links. Returns the moved vertex.
    pub fn commit(
        &mut self,
        mesh: &mut HalfedgeMesh,
        preview: &OperatorPreview,
        position: Point,
        simulation: Simulation,
    ) -> Result<VertexId, MeshError> {
        debug_assert!(simulation.accepted());
        let mut old_edges = BTreeSet::new();
        let mut old_vertices = BTreeSet::new();
        for &f in &preview.pre_inner {
            let vs = mesh.facet_vertices(f);
            for k in 0..3 {
                old_edges.insert(EdgeKey::new(vs[k], vs[(k + 1) % 3]));
                old_vertices.insert(vs[k]);
            }
        }
        let moved = mesh.apply(preview.operator, position)?;
        debug_assert_eq!(moved, preview.moved);

        for f in &preview.pre_inner {
            if let Some(slot) = self.working.facets.get_mut(f.index()) {
                *slot = None;
            }
        }
        for e in &old_edges {
            self.working.edges.remove(e);
        }
        for v in &old_vertices {
            if let Some(slot) = self.working.vertices.get_mut(v.index()) {
                *slot = None;
            }
        }
        self.working.insert(simulation.samples);

        if self.linked.len() < mesh.facet_capacity() {
            self.linked.resize(mesh.facet_capacity(), Vec::new());
        }
        for f in preview.pre_extended() {
            self.linked[f.index()].clear();
        }
        for (i, link) in simulation.relinks {
            self.input_samples[i as usize].link = Some(link);
            self.linked[link.facet.index()].push(i);
        }
        Ok(moved)
    }

    /// Compares the maintained input-side links against a global
    /// recomputation on `mesh`.
    pub fn audit_links(&self, mesh: &HalfedgeMesh) -> LinkAudit {
        let tree = AabbTree::from_mesh(mesh);
        let per_sample: Vec<(bool, bool, f64)> = self
            .input_samples
            .par_iter()
            .map(|s| {
                let stored = s.link.map_or(f64::INFINITY, |l| l.distance);
                let truth = tree.closest(&s.position).map_or(f64::INFINITY, |h| h.distance);
                ((stored - truth).abs() < 1e-9, stored < truth - 1e-12, stored - truth)
            })
            .collect();
        LinkAudit {
            total: per_sample.len(),
            matching: per_sample.iter().filter(|x| x.0).count(),
            underestimates: per_sample.iter().filter(|x| x.1).count(),
            max_overestimate: per_sample.iter().map(|x| x.2).fold(0.0, f64::max),
        }
    }

    /// Checks that every live facet, edge-free vertex and link is accounted
    /// for. Intended for tests.
    pub fn check_consistency(&self, mesh: &HalfedgeMesh) -> Result<(), String> {
        for f in mesh.facets() {
            if self.working.facets.get(f.index()).and_then(|r| r.as_ref()).is_none() {
                return Err(format!("facet {f} has no working samples"));
            }
        }
        for v in mesh.vertices() {
            if self.working.vertices.get(v.index()).and_then(|r| r.as_ref()).is_none() {
                return Err(format!("vertex {v} has no working sample"));
            }
        }
        for (i, s) in self.input_samples.iter().enumerate() {
            let link = s.link.ok_or(format!("input sample {i} is unlinked"))?;
            if !mesh.is_facet_live(link.facet) {
                return Err(format!("input sample {i} linked to removed facet {}", link.facet));
            }
            if !self.linked[link.facet.index()].contains(&(i as u32)) {
                return Err(format!("input sample {i} missing from reverse index"));
            }
        }
        let indexed: usize = mesh.facets().map(|f| self.linked_samples(f).len()).sum();
        if indexed != self.input_samples.len() {
            return Err("reverse index size mismatch".into());
        }
        Ok(())
    }
}

/// Result of [`FidelityState::audit_links`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkAudit {
    pub total: usize,
    /// Links whose distance equals the global nearest distance (within 1e-9).
    pub matching: usize,
    /// Links shorter than the global nearest distance (must be 0).
    pub underestimates: usize,
    pub max_overestimate: f64,
}

impl LinkAudit {
    pub fn matching_fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.matching as f64 / self.total as f64
        }
    }
}

/// Dense brute-force distance measurement between two meshes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleDistance {
    /// Two-sided Hausdorff distance.
    pub hausdorff: f64,
    /// Area-weighted RMS distance over both directions pooled.
    pub rms: f64,
    /// Largest distance from `a` to `b`.
    pub forward_max: f64,
    pub forward_rms: f64,
    /// Largest distance from `b` to `a`.
    pub backward_max: f64,
    pub backward_rms: f64,
}

/// Barycentric lattice with at least `density` points (corners, edges and
/// interior) per triangle.
pub fn lattice(density: usize) -> Vec<[f64; 3]> {
    let mut k = 1;
    while (k + 1) * (k + 2) / 2 < density.max(3) {
        k += 1;
    }
    let mut out = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for i in 0..=k {
        for j in 0..=k - i {
            let a = i as f64 / k as f64;
            let b = j as f64 / k as f64;
            out.push([1.0 - a - b, a, b]);
        }
    }
    out
}

/// (max, weighted sum of squares, weight sum) of distances from a lattice on
/// every facet of `from` to the surface in `to`.
fn one_sided(from: &HalfedgeMesh, to: &AabbTree, density: usize) -> (f64, f64, f64) {
    let pattern = lattice(density);
    let triangles = mesh_triangles(from);
    triangles
        .par_iter()
        .map(|t| {
            let area = triangle_area(&t.points[0], &t.points[1], &t.points[2]);
            let w = area / pattern.len() as f64;
            let mut max: f64 = 0.0;
            let mut sum = 0.0;
            for b in &pattern {
                let p = barycentric_point(&t.points, b);
                let d = to.closest(&p).map_or(f64::INFINITY, |h| h.distance);
                max = max.max(d);
                sum += w * d * d;
            }
            (max, sum, w * pattern.len() as f64)
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0.max(b.0), a.1 + b.1, a.2 + b.2))
}

/// Measures `a` against `b` with `density` lattice points per facet on both
/// sides and exact point-to-surface distances.
pub fn oracle_hausdorff(a: &HalfedgeMesh, b: &HalfedgeMesh, density: usize) -> OracleDistance {
    let tree_a = AabbTree::from_mesh(a);
    let tree_b = AabbTree::from_mesh(b);
    let (fmax, fsum, fw) = one_sided(a, &tree_b, density);
    let (bmax, bsum, bw) = one_sided(b, &tree_a, density);
    let rms = |s: f64, w: f64| if w > 0.0 { (s / w).sqrt() } else { 0.0 };
    OracleDistance {
        hausdorff: fmax.max(bmax),
        rms: rms(fsum + bsum, fw + bw),
        forward_max: fmax,
        forward_rms: rms(fsum, fw),
        backward_max: bmax,
        backward_rms: rms(bsum, bw),
    }
}
