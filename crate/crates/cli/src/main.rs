//! `remesh`: batch front end of the remesher.
//!
//! Exit codes: 0 when every angle reached the threshold, 2 when the run
//! stopped on a stall or the vertex budget (the error bound still holds),
//! 1 on invalid input or flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::info;
use remesh_core::features::{max_intensity, FeatureField};
use remesh_core::mesh::{load_mesh, save_mesh};
use remesh_core::pipeline::{RemeshConfig, Remesher};
use remesh_core::relocate::WeightScheme;
use remesh_core::report::Termination;
use remesh_core::HalfedgeMesh;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Weighting {
    Lawson,
    FeatureWeighted,
}

/// Improves the minimal angle of a triangle mesh under an error bound.
#[derive(Debug, Parser)]
#[command(name = "remesh", version)]
struct Args {
    /// Input mesh (.off or .obj).
    input: PathBuf,
    /// Output mesh (.off or .obj).
    output: PathBuf,
    /// Error bound in percent of the input bounding box diagonal.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Target minimal interior angle in degrees, below 60.
    #[arg(long, default_value_t = 30.0)]
    theta: f64,
    /// Vertex budget of the angle improvement loop (unlimited by default).
    #[arg(long)]
    max_vertices: Option<usize>,
    /// Average number of fidelity samples per facet.
    #[arg(long, default_value_t = 10)]
    samples_per_facet: usize,
    /// Intensity similarity threshold for collapse initialization.
    #[arg(long, default_value_t = 0.15)]
    omega: f64,
    /// Intensity similarity threshold for vertex classification.
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    /// Damping of each relocation step, in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    lambda: f64,
    /// Minimal local angle gain in degrees of a final relocation.
    #[arg(long, default_value_t = 0.1)]
    delta_theta: f64,
    /// Sample reweighting scheme of the relocation optimizer.
    #[arg(long, value_enum, default_value_t = Weighting::FeatureWeighted)]
    weighting: Weighting,
    /// Seed of the sample generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the initial simplification phase.
    #[arg(long)]
    no_simplify: bool,
    /// Write the quality report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the angle histogram as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// Write the input with per-vertex feature intensity as OBJ vertex colors.
    #[arg(long, value_name = "OBJ")]
    dump_feature_field: Option<PathBuf>,
    /// Write the input samples as an OBJ point cloud.
    #[arg(long, value_name = "OBJ")]
    dump_samples: Option<PathBuf>,
}

impl Args {
    fn config(&self) -> RemeshConfig {
        RemeshConfig {
            delta: self.delta / 100.0,
            theta: self.theta,
            max_vertices: self.max_vertices.unwrap_or(usize::MAX),
            samples_per_facet: self.samples_per_facet,
            omega: self.omega,
            zeta: self.zeta,
            lambda: self.lambda,
            delta_theta: self.delta_theta,
            weighting: match self.weighting {
                Weighting::Lawson => WeightScheme::Lawson,
                Weighting::FeatureWeighted => WeightScheme::FeatureWeighted,
            },
            seed: self.seed,
            initial_simplification: !self.no_simplify,
            ..RemeshConfig::default()
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// OBJ of `mesh` with each vertex colored on a blue to red ramp of its
/// feature intensity relative to the largest possible intensity.
fn feature_field_obj(mesh: &HalfedgeMesh) -> String {
    let field = FeatureField::compute(mesh);
    let scale = max_intensity();
    let ids: Vec<_> = mesh.vertices().collect();
    let (_, triangles) = mesh.to_triangles();
    let mut out = String::new();
    for &v in &ids {
        let p = mesh.position(v);
        let t = (field.intensity(v) / scale).clamp(0.0, 1.0);
        let _ = writeln!(out, "v {} {} {} {} {} {}", p.x, p.y, p.z, t, 0.0, 1.0 - t);
    }
    for t in &triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

fn run(args: &Args) -> Result<Termination, String> {
    let config = args.config();
    config.validate().map_err(|e| e.to_string())?;
    let input = load_mesh(&args.input).map_err(|e| e.to_string())?;
    info!("loaded {}: {} vertices, {} facets", args.input.display(), input.vertex_count(), input.facet_count());
    if let Some(path) = &args.dump_feature_field {
        write(path, &feature_field_obj(&input))?;
    }
    let mut remesher = Remesher::new(&input, config).map_err(|e| e.to_string())?;
    if let Some(path) = &args.dump_samples {
        let mut out = String::new();
        for s in remesher.fidelity().input_samples() {
            let _ = writeln!(out, "v {} {} {}", s.position.x, s.position.y, s.position.z);
        }
        write(path, &out)?;
    }
    let termination = remesher.run().map_err(|e| e.to_string())?;
    let output = remesher.finish(termination);
    save_mesh(&output.mesh, &args.output).map_err(|e| e.to_string())?;
    let r = &output.report;
    info!(
        "{} vertices, min angle {:.2} deg, Hausdorff {:.4}% of diagonal, {:?}",
        r.vertices, r.theta_min, r.hausdorff_percent_bb, termination
    );
    if let Some(path) = &args.report {
        write(path, &r.to_json())?;
    }
    if let Some(path) = &args.histogram {
        write(path, &r.histogram_csv())?;
    }
    Ok(termination)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // usage errors exit with 1: clap's default of 2 means "stopped early" here
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(Termination::ThetaReached) => ExitCode::SUCCESS,
        Ok(t) => {
            eprintln!("remesh: stopped before reaching theta ({t:?}); the error bound holds");
            ExitCode::from(2)
        }
        Err(message) => {
            eprintln!("remesh: {message}");
            ExitCode::from(1)
        }
    }
}
