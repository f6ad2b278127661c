//! Quality metrics of a remeshing result and run statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fidelity::{oracle_hausdorff, OracleDistance};
use crate::geometry::{facet_angles, triangle_quality};
use crate::mesh::HalfedgeMesh;

/// Version of the JSON layout of [`QualityReport`].
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Number of 3 degree bins covering [0, 180].
pub const HISTOGRAM_BINS: usize = 60;
/// Width of a histogram bin in degrees.
pub const HISTOGRAM_BIN_WIDTH: f64 = 3.0;

/// Why the angle improvement loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every interior angle reached the threshold.
    ThetaReached,
    /// The vertex budget was exhausted first.
    VertexBudget,
    /// Some small angles could not be improved by any operator.
    Stalled,
}

/// Wall clock seconds spent in each phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub simplification: f64,
    pub improvement: f64,
    pub relocation: f64,
    pub report: f64,
}

/// Operator counts of one phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub attempts: u64,
    pub collapses: u64,
    pub relocations: u64,
    pub splits: u64,
    pub rejected_topology: u64,
    pub rejected_foldover: u64,
    pub rejected_angle: u64,
    pub rejected_fidelity: u64,
}

/// Operator counts of a whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub simplification: PhaseStats,
    pub improvement: PhaseStats,
    pub relocation: PhaseStats,
    /// Facets whose small angles were given up after repeated failures.
    pub frozen_facets: u64,
    /// Vertices that hit the per-vertex relocation budget.
    pub frozen_vertices: u64,
}

/// Quality and fidelity of a remeshed surface. Angles are in degrees,
/// `*_percent_bb` values are percentages of the input bounding box diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub input_vertices: usize,
    pub input_facets: usize,
    pub vertices: usize,
    pub facets: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub q_min: f64,
    pub q_avg: f64,
    /// Mean over facets of the smallest facet angle.
    pub avg_min_angle: f64,
    /// Counts of interior angles in 3 degree bins, `[0, 3), [3, 6), ...`.
    pub angle_histogram: Vec<u64>,
    pub percent_angles_below_30: f64,
    /// Percentage of interior vertices with valence 5, 6 or 7.
    pub v567: f64,
    pub bbox_diagonal: f64,
    /// Error bound in input length units, when the report belongs to a run.
    pub delta_abs: Option<f64>,
    /// Dense sampled distances in input length units.
    pub distance: OracleDistance,
    pub hausdorff_percent_bb: f64,
    pub rms_percent_bb: f64,
    pub timings: PhaseTimings,
    pub termination: Option<Termination>,
    pub stats: Option<RunStats>,
}

/// Histogram bin of an angle in degrees. A small slack keeps angles that
/// sit on a bin edge up to round-off (60 degrees in an equilateral
/// triangle) in the upper bin.
pub fn histogram_bin(degrees: f64) -> usize {
    let bin = ((degrees + 1e-9) / HISTOGRAM_BIN_WIDTH).floor().max(0.0) as usize;
    bin.min(HISTOGRAM_BINS - 1)
}

/// Angle histogram in degrees, 60 bins of 3 degrees; every facet contributes
/// three counts.
pub fn angle_histogram(mesh: &HalfedgeMesh) -> Vec<u64> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for f in mesh.facets() {
        for a in facet_angles(mesh, f) {
            bins[histogram_bin(a.to_degrees())] += 1;
        }
    }
    bins
}

/// Percentage of interior vertices with valence 5, 6 or 7. Boundary vertices
/// are left out; a mesh without interior vertices scores 0.
pub fn valence_regularity(mesh: &HalfedgeMesh) -> f64 {
    let (mut regular, mut total) = (0usize, 0usize);
    for v in mesh.vertices().filter(|&v| !mesh.is_boundary_vertex(v)) {
        total += 1;
        if (5..=7).contains(&mesh.valence(v)) {
            regular += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        100.0 * regular as f64 / total as f64
    }
}

/// Measures `output` against `input`. Distances use a barycentric lattice of
/// at least `oracle_density` points per facet.
pub fn compute_report(input: &HalfedgeMesh, output: &HalfedgeMesh, oracle_density: usize) -> QualityReport {
    let (mut theta_min, mut theta_max) = (f64::INFINITY, 0.0f64);
    let (mut q_min, mut q_sum, mut min_sum) = (f64::INFINITY, 0.0, 0.0);
    let mut below_30 = 0usize;
    for f in output.facets() {
        let angles = facet_angles(output, f).map(f64::to_degrees);
        let lo = angles[0].min(angles[1]).min(angles[2]);
        theta_min = theta_min.min(lo);
        theta_max = theta_max.max(angles[0].max(angles[1]).max(angles[2]));
        min_sum += lo;
        below_30 += angles.iter().filter(|&&a| a < 30.0).count();
        let [a, b, c] = output.facet_points(f);
        let q = triangle_quality(&a, &b, &c);
        q_min = q_min.min(q);
        q_sum += q;
    }
    let facets = output.facet_count();
    let n = facets.max(1) as f64;
    let diagonal = input.bbox_diagonal();
    let distance = oracle_hausdorff(output, input, oracle_density);
    let percent = |x: f64| if diagonal > 0.0 { 100.0 * x / diagonal } else { 0.0 };
    QualityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        input_vertices: input.vertex_count(),
        input_facets: input.facet_count(),
        vertices: output.vertex_count(),
        facets,
        theta_min: if facets == 0 { 0.0 } else { theta_min },
        theta_max,
        q_min: if facets == 0 { 0.0 } else { q_min },
        q_avg: q_sum / n,
        avg_min_angle: min_sum / n,
        angle_histogram: angle_histogram(output),
        percent_angles_below_30: 100.0 * below_30 as f64 / (3.0 * n),
        v567: valence_regularity(output),
        bbox_diagonal: diagonal,
        delta_abs: None,
        hausdorff_percent_bb: percent(distance.hausdorff),
        rms_percent_bb: percent(distance.rms),
        distance,
        timings: PhaseTimings::default(),
        termination: None,
        stats: None,
    }
}

impl QualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The angle histogram as CSV with columns `bin_start,bin_end,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, count) in self.angle_histogram.iter().enumerate() {
            let start = i as f64 * HISTOGRAM_BIN_WIDTH;
            let _ = writeln!(out, "{},{},{}", start, start + HISTOGRAM_BIN_WIDTH, count);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;

    #[test]
    fn icosahedron_against_itself() {
        let m = shapes::icosahedron();
        let r = compute_report(&m, &m, 20);
        assert_relative_eq!(r.theta_min, 60.0, epsilon = 1e-9);
        assert_relative_eq!(r.theta_max, 60.0, epsilon = 1e-9);
        assert_relative_eq!(r.q_min, 1.0, epsilon = 1e-12);
        assert!(r.distance.hausdorff < 1e-12);
        // every vertex has valence 5
        assert_eq!(r.v567, 100.0);
        assert_eq!(r.angle_histogram.iter().sum::<u64>(), 3 * 20);
        assert_eq!(r.angle_histogram[20], 60);
    }

    #[test]
    fn grid_interior_is_regular() {
        let m = shapes::grid(6, 6, 1.0);
        assert_eq!(valence_regularity(&m), 100.0);
        let r = compute_report(&m, &m, 10);
        assert_eq!(r.angle_histogram.iter().sum::<u64>(), 3 * m.facet_count() as u64);
        assert!(r.q_min <= r.q_avg);
        // right isosceles triangles: 45, 45, 90
        assert_relative_eq!(r.theta_min, 45.0, epsilon = 1e-9);
        assert_relative_eq!(r.theta_max, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn theta_min_matches_histogram_support() {
        let m = shapes::torus(20, 7, 1.0, 0.3);
        let r = compute_report(&m, &m, 10);
        let first = r.angle_histogram.iter().position(|&c| c > 0).unwrap();
        assert_eq!(histogram_bin(r.theta_min), first);
        assert!(r.q_min <= r.q_avg);
        assert!((0.0..=100.0).contains(&r.v567));
    }

    #[test]
    fn json_round_trip_and_csv() {
        let m = shapes::cube(2);
        let r = compute_report(&m, &m, 10);
        let back: QualityReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let csv = r.histogram_csv();
        assert_eq!(csv.lines().count(), HISTOGRAM_BINS + 1);
        assert!(csv.starts_with("bin_start,bin_end,count\n0,3,"));
    }
}
